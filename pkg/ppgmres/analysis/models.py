"""
Models for the convergence estimator and polynomial samplings
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .. import REPORT_SCHEMA

BRANCH_U = 'u'
BRANCH_GAMMA2 = 'gamma2'


class IntervalSpectrum(BaseModel):
    """Spectrum enclosed in [u, v] U [a, b] with u < v < 0 < a < b"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    u: float
    v: float
    a: float
    b: float

    @model_validator(mode='after')
    def check_order(self) -> 'IntervalSpectrum':
        """Strict ordering, longer interval on the right"""
        if not self.u < self.v < 0.0 < self.a < self.b:
            raise ValueError(f"need u < v < 0 < a < b, got u={self.u}, v={self.v}, a={self.a}, b={self.b}")
        if self.b - self.a < self.v - self.u:
            raise ValueError("the interval right of the origin must be the longer one")
        return self


@dataclass
class CubicMap:
    """
    f(x) = 1 - 2 h(x) / h(xi) with h(x) = (x - a)(x - b)(x - v)

    f sends [u, v] U [a, b] into [-1, 1] and f(0) = 1 + delta with delta > 0.
    """
    spectrum: IntervalSpectrum
    gamma1: float
    gamma2: float
    branch: str
    xi: float
    delta: float
    marginal: bool = False

    def h(self, x):
        s = self.spectrum
        x = np.asarray(x, dtype=float)
        return (x - s.a) * (x - s.b) * (x - s.v)

    def __call__(self, x):
        return 1.0 - 2.0 * self.h(x) / self.h(self.xi)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'spectrum': self.spectrum.model_dump(),
            'gamma1': self.gamma1,
            'gamma2': self.gamma2,
            'branch': self.branch,
            'xi': self.xi,
            'delta': self.delta,
            'marginal': self.marginal,
        }


@dataclass
class ImprovementEstimate:
    """Per-cycle residual reduction of GMRES(m) and PP(d)-GMRES(m) under the cubic model"""
    d: int
    m: int
    cubic: CubicMap
    per_cycle_gmres: float
    per_cycle_ppgmres: float
    speedup_matvecs: float
    fractional_degree: bool = False
    alternate: Optional['ImprovementEstimate'] = None

    @property
    def asymptotic_speedup(self) -> float:
        """Limit of speedup_matvecs as delta goes to zero"""
        return float(self.d)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'schema': REPORT_SCHEMA,
            'd': self.d,
            'm': self.m,
            'cubic': self.cubic.to_dict(),
            'per_cycle_gmres': self.per_cycle_gmres,
            'per_cycle_ppgmres': self.per_cycle_ppgmres,
            'speedup_matvecs': self.speedup_matvecs,
            'asymptotic_speedup': self.asymptotic_speedup,
            'fractional_degree': self.fractional_degree,
            'alternate': None if self.alternate is None else self.alternate.to_dict(),
        }

    def to_json(self) -> str:
        """Serialize with sorted keys"""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass
class PolynomialSamples:
    """phi on a rectangular grid of the complex plane"""
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape

    def write_csv(self, path: Union[str, Path]) -> Path:
        """Columns x, y, re_phi, im_phi; rows run over x fastest"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(['x', 'y', 're_phi', 'im_phi'])
            for i, yi in enumerate(self.y):
                for j, xj in enumerate(self.x):
                    value = self.values[i, j]
                    writer.writerow([repr(float(xj)), repr(float(yi)), repr(float(value.real)), repr(float(value.imag))])
        return path
