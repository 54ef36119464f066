"""
Settings and result models for stability control and the correction phase
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..utils import complex_to_pair

SIDE_RIGHT = 1
SIDE_LEFT = -1


class StabilityConfig(BaseModel):
    """Thresholds of the indefinite-spectrum stability control (pof values in log10)"""
    model_config = ConfigDict(extra='forbid')

    pofcutoff_log10: float = Field(4.0, gt=0)
    rncutoff: float = Field(1e-3, gt=0)
    small_side_pof_abort_log10: float = Field(20.0, gt=0)
    optional_step1_enabled: bool = False
    step1_pof_threshold_log10: float = Field(14.0, gt=0)
    step1_max_roots: int = Field(3, ge=1)
    step1_half_magnitude_rule: bool = False
    max_deflation_vectors: int = Field(8, ge=0)
    gmres_correction_iters: int = Field(10, ge=1)
    use_ritz_for_sides: bool = False


@dataclass
class HarmonicRitzInfo:
    """A root of the GMRES polynomial with its stability diagnostics"""
    theta: complex
    log10_pof: float
    residual: Optional[float]
    side: int
    spurious: bool = False

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'theta': complex_to_pair(self.theta),
            'log10_pof': self.log10_pof,
            'residual': self.residual,
            'side': self.side,
            'spurious': self.spurious,
        }


@dataclass
class SideClassification:
    """Which side of the imaginary axis the spectrum extends further on"""
    larger_side: int
    sides: List[int]
    spurious: List[bool]
    residuals: List[Optional[float]]
    degenerate: bool = False

    def is_larger(self, theta: complex) -> bool:
        """Whether theta lies on the larger side"""
        return side_of(theta) == self.larger_side

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'larger_side': 'right' if self.larger_side == SIDE_RIGHT else 'left',
            'sides': list(self.sides),
            'spurious': list(self.spurious),
            'residuals': list(self.residuals),
            'degenerate': self.degenerate,
        }


@dataclass
class StabilityOutcome:
    """Augmented polynomial and the roots kept for deflation"""
    polynomial: Any
    classification: SideClassification
    candidates: List[HarmonicRitzInfo] = field(default_factory=list)
    copies_added: int = 0
    step1_roots: List[complex] = field(default_factory=list)
    max_log10_pof: float = float('-inf')
    small_side_max_log10_pof: float = float('-inf')

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        def finite(value):
            return value if value not in (float('inf'), float('-inf')) else None

        return {
            'classification': self.classification.to_dict(),
            'candidates': [c.to_dict() for c in self.candidates],
            'copies_added': self.copies_added,
            'step1_roots': [complex_to_pair(r) for r in self.step1_roots],
            'max_log10_pof': finite(self.max_log10_pof),
            'small_side_max_log10_pof': finite(self.small_side_max_log10_pof),
        }


@dataclass
class CorrectionReport:
    """True residual norms of the three correction tracks"""
    residual_before: float
    residual_after_deflation: Optional[float] = None
    residual_after_gmres: Optional[float] = None
    residual_after_both: Optional[float] = None
    deflation_vectors: int = 0
    deflation_skipped: bool = False
    spurious_roots: List[complex] = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        """Residual of the returned solution"""
        for value in (self.residual_after_both, self.residual_after_gmres, self.residual_after_deflation):
            if value is not None:
                return value
        return self.residual_before

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'residual_before': self.residual_before,
            'residual_after_deflation': self.residual_after_deflation,
            'residual_after_gmres': self.residual_after_gmres,
            'residual_after_both': self.residual_after_both,
            'deflation_vectors': self.deflation_vectors,
            'deflation_skipped': self.deflation_skipped,
            'spurious_roots': [complex_to_pair(r) for r in self.spurious_roots],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CorrectionReport':
        """Create from dictionary"""
        return cls(
            residual_before=data['residual_before'],
            residual_after_deflation=data.get('residual_after_deflation'),
            residual_after_gmres=data.get('residual_after_gmres'),
            residual_after_both=data.get('residual_after_both'),
            deflation_vectors=data.get('deflation_vectors', 0),
            deflation_skipped=data.get('deflation_skipped', False),
            spurious_roots=[complex(*pair) for pair in data.get('spurious_roots', [])],
        )


def side_of(theta: complex) -> int:
    """Right for Re >= 0, left otherwise"""
    return SIDE_RIGHT if complex(theta).real >= 0 else SIDE_LEFT
