"""
Driver settings and eigensolver results
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .. import REPORT_SCHEMA
from ..stability.models import StabilityConfig
from ..utils import complex_to_pair, pair_to_complex

BalanceMethod = Literal['none', 'b1', 'b2', 'b3', 'b4', 'b5']
EigenBalanceMethod = Literal['none', 'b1', 'b5']


class PPGmresConfig(BaseModel):
    """Settings of one PP(d)-GMRES(m) solve"""
    model_config = ConfigDict(extra='forbid')

    d: int = Field(..., ge=1)
    m: int = Field(50, ge=1)
    tol: float = Field(1e-10, gt=0)
    max_mvp: Optional[int] = Field(None, ge=1)
    balance: BalanceMethod = 'none'
    inner_degree: Optional[int] = Field(None, ge=2)
    balance_interval: Optional[float] = Field(None, gt=0)
    stability_enabled: bool = True
    stability: StabilityConfig = Field(default_factory=StabilityConfig)
    spline_check: bool = True
    seed: Optional[int] = None
    verify_true_residual: bool = True
    reorth: bool = False
    max_retries: int = Field(3, ge=0)


class EigenConfig(BaseModel):
    """Settings of one polynomial preconditioned interior eigensolve"""
    model_config = ConfigDict(extra='forbid')

    sigma: float
    nev: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    m: int = Field(80, ge=2)
    k: int = Field(40, ge=1)
    tol: float = Field(1e-8, gt=0)
    balance: EigenBalanceMethod = 'b1'
    balance_interval: Optional[float] = Field(None, gt=0)
    harmonic: bool = False
    stability_enabled: bool = False
    stability: StabilityConfig = Field(default_factory=StabilityConfig)
    max_cycles: int = Field(500, ge=1)
    max_mvp: Optional[int] = Field(None, ge=1)
    volatility_factor: float = Field(10.0, gt=1)
    seed: Optional[int] = None

    @model_validator(mode='after')
    def check_subspace_sizes(self) -> 'EigenConfig':
        """Require m > k >= nev"""
        if not self.m > self.k >= self.nev:
            raise ValueError(f"need m > k >= nev, got m={self.m}, k={self.k}, nev={self.nev}")
        return self


@dataclass
class EigenPair:
    """One converged (or best available) eigenpair"""
    value: complex
    residual: float
    phi_value: complex

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'value': complex_to_pair(self.value),
            'residual': self.residual,
            'phi_value': complex_to_pair(self.phi_value),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EigenPair':
        """Create from dictionary"""
        return cls(
            value=pair_to_complex(data['value']),
            residual=data['residual'],
            phi_value=pair_to_complex(data['phi_value']),
        )


@dataclass
class EigenResult:
    """Eigenvalues of A near sigma found through phi(A - sigma I)"""
    sigma: float
    pairs: List[EigenPair] = field(default_factory=list)
    cycles: int = 0
    matvecs: int = 0
    converged: bool = False
    volatile: bool = False
    degree: int = 0
    seed: Optional[int] = None
    residual_history: List[float] = field(default_factory=list)
    polynomial: Dict[str, Any] = field(default_factory=dict)

    @property
    def values(self) -> List[complex]:
        """Eigenvalues, nearest sigma first"""
        return [pair.value for pair in self.pairs]

    @property
    def residuals(self) -> List[float]:
        """||A v - lambda v|| / ||v|| per pair"""
        return [pair.residual for pair in self.pairs]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'schema': REPORT_SCHEMA,
            'sigma': self.sigma,
            'pairs': [pair.to_dict() for pair in self.pairs],
            'cycles': self.cycles,
            'matvecs': self.matvecs,
            'converged': self.converged,
            'volatile': self.volatile,
            'degree': self.degree,
            'seed': self.seed,
            'residual_history': list(self.residual_history),
            'polynomial': self.polynomial,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EigenResult':
        """Create from dictionary"""
        return cls(
            sigma=data['sigma'],
            pairs=[EigenPair.from_dict(p) for p in data.get('pairs', [])],
            cycles=data.get('cycles', 0),
            matvecs=data.get('matvecs', 0),
            converged=data.get('converged', False),
            volatile=data.get('volatile', False),
            degree=data.get('degree', 0),
            seed=data.get('seed'),
            residual_history=list(data.get('residual_history', [])),
            polynomial=dict(data.get('polynomial', {})),
        )

    def to_json(self) -> str:
        """Serialize with sorted keys"""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_csv(self, path: Union[str, Path]) -> Path:
        """One row per eigenpair"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(['re', 'im', 'residual', 'distance_to_sigma'])
            for pair in self.pairs:
                writer.writerow([repr(pair.value.real), repr(pair.value.imag), repr(pair.residual),
                                 repr(abs(pair.value - self.sigma))])
        return path


class ExperimentConfig(BaseModel):
    """
    One CLI experiment: a matrix source plus solver and eigensolver settings

    The matrix is a preset name, 'rays:<angle>' or 'mm:<path>'.
    """
    model_config = ConfigDict(extra='forbid')

    matrix: Optional[str] = None
    matrix_file: Optional[str] = None
    solver: Optional[PPGmresConfig] = None
    eigen: Optional[EigenConfig] = None
    output_dir: Optional[str] = None
    seed: Optional[int] = None

    @model_validator(mode='after')
    def check_matrix_source(self) -> 'ExperimentConfig':
        """Exactly one matrix source"""
        if (self.matrix is None) == (self.matrix_file is None):
            raise ValueError("give exactly one of matrix and matrix_file")
        return self

    @property
    def matrix_label(self) -> str:
        """Preset name or file stem, for file names"""
        if self.matrix_file is not None:
            return Path(self.matrix_file).stem
        return self.matrix
