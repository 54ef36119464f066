"""
Result models for the Krylov routines
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from .. import REPORT_SCHEMA


@dataclass
class ArnoldiFactorization:
    """A V_k = V_{k+1} H from k Arnoldi steps"""
    V: np.ndarray
    H: np.ndarray
    beta: float
    breakdown: bool = False

    @property
    def steps(self) -> int:
        """Number of completed Arnoldi steps k"""
        return self.H.shape[1]

    @property
    def H_square(self) -> np.ndarray:
        """Leading k x k block of H"""
        k = self.steps
        return self.H[:k, :k]

    @property
    def h_last(self) -> float:
        """Subdiagonal entry h_{k+1,k}"""
        k = self.steps
        return float(self.H[k, k - 1]) if k > 0 else 0.0

    @property
    def basis(self) -> np.ndarray:
        """The k basis vectors V_k"""
        return self.V[:, :self.steps]


@dataclass
class CycleRecord:
    """Residual summary of one restart cycle"""
    cycle: int
    iterations: int
    shortcut_residual: float
    true_residual: Optional[float]
    matvecs: int

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'cycle': self.cycle,
            'iterations': self.iterations,
            'shortcut_residual': self.shortcut_residual,
            'true_residual': self.true_residual,
            'matvecs': self.matvecs,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CycleRecord':
        """Create from dictionary"""
        return cls(
            cycle=data['cycle'],
            iterations=data['iterations'],
            shortcut_residual=data['shortcut_residual'],
            true_residual=data.get('true_residual'),
            matvecs=data['matvecs'],
        )


@dataclass
class SolveReport:
    """
    Outcome and cost of a (restarted) GMRES solve

    Counters are totals of the shared operator counter over the solve:
    matvecs with A, length-n vector updates and dot products.
    """
    rhs_norm: float
    tol: float
    cycles: List[CycleRecord] = field(default_factory=list)
    residual_history: List[float] = field(default_factory=list)
    matvecs: int = 0
    vector_ops: int = 0
    dot_products: int = 0
    converged: bool = False
    stagnated: bool = False
    budget_exhausted: bool = False
    final_true_residual: Optional[float] = None
    seed: Optional[int] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def final_relative_residual(self) -> Optional[float]:
        """Final true residual divided by the right-hand side norm"""
        if self.final_true_residual is None or self.rhs_norm == 0.0:
            return self.final_true_residual
        return self.final_true_residual / self.rhs_norm

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'schema': REPORT_SCHEMA,
            'rhs_norm': self.rhs_norm,
            'tol': self.tol,
            'cycles': [cycle.to_dict() for cycle in self.cycles],
            'residual_history': list(self.residual_history),
            'matvecs': self.matvecs,
            'vector_ops': self.vector_ops,
            'dot_products': self.dot_products,
            'converged': self.converged,
            'stagnated': self.stagnated,
            'budget_exhausted': self.budget_exhausted,
            'final_true_residual': self.final_true_residual,
            'seed': self.seed,
            'extra': self.extra,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolveReport':
        """Create from dictionary"""
        return cls(
            rhs_norm=data['rhs_norm'],
            tol=data['tol'],
            cycles=[CycleRecord.from_dict(c) for c in data.get('cycles', [])],
            residual_history=list(data.get('residual_history', [])),
            matvecs=data.get('matvecs', 0),
            vector_ops=data.get('vector_ops', 0),
            dot_products=data.get('dot_products', 0),
            converged=data.get('converged', False),
            stagnated=data.get('stagnated', False),
            budget_exhausted=data.get('budget_exhausted', False),
            final_true_residual=data.get('final_true_residual'),
            seed=data.get('seed'),
            extra=dict(data.get('extra', {})),
        )

    def to_json(self) -> str:
        """Serialize with sorted keys so equal reports are byte-identical"""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_csv(self, path: Union[str, Path]) -> Path:
        """
        Write one row per cycle

        Args:
            path: Destination file

        Returns:
            The written path
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(['cycle', 'iterations', 'shortcut_residual', 'true_residual', 'matvecs'])
            for cycle in self.cycles:
                true_residual = '' if cycle.true_residual is None else repr(cycle.true_residual)
                writer.writerow([cycle.cycle, cycle.iterations, repr(cycle.shortcut_residual), true_residual, cycle.matvecs])
        return path
