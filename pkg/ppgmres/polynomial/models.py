"""
Diagnostic models for preconditioner polynomials
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..utils import complex_to_pair


@dataclass
class PofReport:
    """Per-root product-of-other-factors magnitudes, in log10"""
    roots: np.ndarray
    multiplicities: np.ndarray
    log10_pof: np.ndarray
    residuals: Optional[np.ndarray] = None
    spurious: List[bool] = field(default_factory=list)
    larger_side: List[bool] = field(default_factory=list)

    @property
    def pof(self) -> np.ndarray:
        """pof magnitudes (inf where log10 overflows)"""
        with np.errstate(over='ignore'):
            return np.power(10.0, self.log10_pof)

    @property
    def infinite(self) -> np.ndarray:
        """Roots whose pof is infinite (coincident distinct roots)"""
        return np.isposinf(self.log10_pof)

    @property
    def max_log10_pof(self) -> float:
        """Largest log10 pof, -inf for an empty report"""
        if len(self.log10_pof) == 0:
            return float('-inf')
        return float(np.max(self.log10_pof))

    def above(self, cutoff_log10: float) -> np.ndarray:
        """Indices of roots with log10 pof above the cutoff"""
        return np.flatnonzero(self.log10_pof > cutoff_log10)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        def finite_or_none(value):
            return float(value) if np.isfinite(value) else None

        return {
            'roots': [complex_to_pair(r) for r in self.roots],
            'multiplicities': [int(m) for m in self.multiplicities],
            'log10_pof': [finite_or_none(v) for v in self.log10_pof],
            'residuals': None if self.residuals is None else [finite_or_none(v) for v in self.residuals],
            'infinite': [bool(v) for v in self.infinite],
            'spurious': list(self.spurious),
            'larger_side': list(self.larger_side),
        }
