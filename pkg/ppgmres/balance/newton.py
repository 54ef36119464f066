"""
Range-restricted GMRES polynomials in real Newton form and composite
(polynomial of a polynomial) preconditioners.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
import scipy.linalg

from ..errors import BalanceError, DegenerateVectorError
from ..krylov import arnoldi, ritz_values
from ..operators import LinearOperator
from ..polynomial import Polynomial, PolynomialOperator, gmres_polynomial, leja_order
from ..utils import complex_to_pair, pair_structure

logger = logging.getLogger(__name__)

# Normal equations whose condition estimate exceeds this are flagged
ILL_CONDITIONED = 1e14


@dataclass
class NewtonStep:
    """
    One column of the scaled real Newton basis:
    n_k = ((z - shift) n_{k-1} + coupling * n_{k-2}) / scale
    """
    shift: float
    coupling: float
    scale: float

    def to_dict(self) -> Dict[str, float]:
        """Convert to dictionary"""
        return {'shift': self.shift, 'coupling': self.coupling, 'scale': self.scale}


def _newton_columns(apply: Callable, v, seed_scale: float, steps: List[NewtonStep]) -> List:
    """
    Generate the basis n_1 = z v / seed_scale, then one column per step

    Works for vectors (apply = matvec) and for scalar grids (apply = multiply by z).
    """
    columns = [apply(v) / seed_scale]
    for step in steps:
        nxt = apply(columns[-1]) - step.shift * columns[-1]
        if step.coupling != 0.0:
            nxt = nxt + step.coupling * columns[-2]
        columns.append(nxt / step.scale)
    return columns


class NewtonPolynomial(Polynomial):
    """
    phi(z) = z * sum_k g_k n_k(z) with n_1(z) = z / s_0

    Every basis polynomial has a factor z, so phi(0) = phi'(0) = 0. The shifts
    are Ritz values; a conjugate pair enters as (z - Re) followed by
    (z - Re) plus |Im|^2 times the column two back. Each column is divided by
    its norm, so the pair step does not reproduce |z - theta|^2 exactly; it
    spans the same space and keeps every column real.
    """

    kind = 'newton'

    def __init__(self, shifts: np.ndarray, seed_scale: float, steps: List[NewtonStep], g: np.ndarray,
                 condition_estimate: float = 1.0):
        self.shifts = np.asarray(shifts, dtype=complex)
        self.seed_scale = float(seed_scale)
        self.steps = list(steps)
        self.g = np.asarray(g, dtype=float)
        self.condition_estimate = float(condition_estimate)

    @property
    def degree(self) -> int:
        return len(self.g) + 1

    @property
    def ill_conditioned(self) -> bool:
        """True when the normal equations were nearly singular"""
        return self.condition_estimate > ILL_CONDITIONED

    def p_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        """sum_k g_k n_k(A) v"""
        columns = _newton_columns(op.matvec, np.asarray(v), self.seed_scale, self.steps)
        op.counter.add(vector_ops=2 * len(columns))
        return sum(gk * col for gk, col in zip(self.g, columns))

    def phi_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        """A p(A) v"""
        return op.matvec(self.p_apply(op, v))

    def _p_eval(self, z: np.ndarray) -> np.ndarray:
        ones = np.ones_like(z)
        columns = _newton_columns(lambda u: z * u, ones, self.seed_scale, self.steps)
        return sum(gk * col for gk, col in zip(self.g, columns))

    def phi_eval(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return z * self._p_eval(z)

    def phi_deriv(self, z) -> np.ndarray:
        """Derivative by differentiating the column recurrence"""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        cols = [z / self.seed_scale]
        dcols = [np.full_like(z, 1.0 / self.seed_scale)]
        for step in self.steps:
            nxt = (z - step.shift) * cols[-1]
            dnxt = cols[-1] + (z - step.shift) * dcols[-1]
            if step.coupling != 0.0:
                nxt = nxt + step.coupling * cols[-2]
                dnxt = dnxt + step.coupling * dcols[-2]
            cols.append(nxt / step.scale)
            dcols.append(dnxt / step.scale)
        p = sum(gk * c for gk, c in zip(self.g, cols))
        dp = sum(gk * dc for gk, dc in zip(self.g, dcols))
        return p + z * dp

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'kind': self.kind,
            'degree': self.degree,
            'shifts': [complex_to_pair(s) for s in self.shifts],
            'seed_scale': self.seed_scale,
            'steps': [step.to_dict() for step in self.steps],
            'coefficients': [float(x) for x in self.g],
            'condition_estimate': self.condition_estimate,
        }


def newton_steps_for_shifts(shifts: np.ndarray) -> List[Tuple[float, float]]:
    """
    (shift, coupling) pairs of the real Newton recurrence for Leja-ordered
    shifts: a real shift gives (theta, 0); a conjugate pair gives (Re, 0)
    then (Re, |Im|^2)
    """
    recurrence = []
    for unit in pair_structure(shifts):
        theta = shifts[unit[0]]
        if len(unit) == 2:
            recurrence.append((theta.real, 0.0))
            recurrence.append((theta.real, theta.imag ** 2))
        else:
            recurrence.append((theta.real, 0.0))
    return recurrence


def balance3(op: LinearOperator, b: np.ndarray, d: int) -> NewtonPolynomial:
    """
    Range-restricted GMRES polynomial in Newton form

    Arnoldi from A b gives d Ritz values; the first d - 1 (Leja order) shift
    the Newton basis A b, (A - theta_1) A b, ...; the coefficients solve the
    normal equations (AW)^T (AW) g = (AW)^T b on unit-norm columns.
    The result phi(z) = z^2 q(z) has degree d + 1.

    Args:
        op: Real operator
        b: Right-hand side
        d: Number of Newton columns

    Returns:
        NewtonPolynomial
    """
    if d < 1:
        raise BalanceError(f"Newton polynomial needs at least one column, got {d}")
    b = np.asarray(b, dtype=float)
    Ab = op.matvec(b)
    seed_scale = float(np.linalg.norm(Ab))
    if seed_scale == 0.0:
        raise DegenerateVectorError("A b is zero")
    factorization = arnoldi(op, Ab, min(d, op.n), reorth=True)
    shifts = leja_order(ritz_values(factorization))

    recurrence = newton_steps_for_shifts(shifts)[:d - 1]
    W = [Ab / seed_scale]
    steps: List[NewtonStep] = []
    for shift, coupling in recurrence:
        nxt = op.matvec(W[-1]) - shift * W[-1]
        if coupling != 0.0:
            nxt = nxt + coupling * W[-2]
        scale = float(np.linalg.norm(nxt))
        if scale == 0.0:
            logger.warning(f"Newton basis became dependent after {len(W)} columns")
            break
        W.append(nxt / scale)
        steps.append(NewtonStep(shift=shift, coupling=coupling, scale=scale))
    op.counter.add(vector_ops=3 * len(W), dot_products=len(W))

    AW = np.column_stack([op.matvec(w) for w in W])
    gram = AW.T @ AW
    rhs = AW.T @ b
    op.counter.add(dot_products=len(W) * (len(W) + 1))
    condition = float(np.linalg.cond(gram))
    try:
        g = scipy.linalg.solve(gram, rhs, assume_a='pos')
    except (scipy.linalg.LinAlgError, ValueError):
        g, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    poly = NewtonPolynomial(shifts, seed_scale, steps, g, condition)
    if poly.ill_conditioned:
        logger.warning(f"Newton normal equations are ill-conditioned (cond ~ {condition:.2e}); "
                       f"the degree {poly.degree} polynomial may be inaccurate")
    logger.info(f"Built degree {poly.degree} range-restricted Newton polynomial")
    return poly


class CompositePolynomial(Polynomial):
    """phi(z) = phi_outer(phi_inner(z)); x = p_inner(A) p_outer(phi_inner(A)) y"""

    kind = 'composite'

    def __init__(self, inner: Polynomial, outer: Polynomial):
        self.inner = inner
        self.outer = outer
        self._inner_ops: Dict[int, PolynomialOperator] = {}

    @property
    def degree(self) -> int:
        return self.inner.degree * self.outer.degree

    def inner_operator(self, op: LinearOperator) -> PolynomialOperator:
        """phi_inner(A) as an operator (cached per base operator)"""
        cached = self._inner_ops.get(id(op))
        if cached is None or cached.base is not op:
            cached = PolynomialOperator(self.inner, op)
            self._inner_ops[id(op)] = cached
        return cached

    def phi_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        return self.outer.phi_apply(self.inner_operator(op), v)

    def p_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        return self.inner.p_apply(op, self.outer.p_apply(self.inner_operator(op), v))

    def phi_eval(self, z) -> np.ndarray:
        return self.outer.phi_eval(self.inner.phi_eval(z))

    def phi_deriv(self, z) -> np.ndarray:
        inner = self.inner.phi_eval(z)
        return self.outer.phi_deriv(inner) * self.inner.phi_deriv(z)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'kind': self.kind,
            'degree': self.degree,
            'inner': self.inner.to_dict(),
            'outer': self.outer.to_dict(),
        }


def default_inner_degree(total: int) -> int:
    """
    Largest divisor of the total degree that is at most 15 and leaves an
    outer degree of at least 2; the total itself when no such divisor exists
    """
    for candidate in range(min(15, total - 1), 1, -1):
        if total % candidate == 0:
            return candidate
    if total <= 15:
        return total
    raise BalanceError(f"degree {total} has no inner degree between 2 and 15; give the inner degree explicitly")


def balance4(op: LinearOperator, b: np.ndarray, d_inner: int, d_outer: int) -> CompositePolynomial:
    """
    Composite polynomial: a range-restricted Newton inner polynomial of
    degree d_inner and a GMRES outer polynomial of degree d_outer built on
    phi_inner(A)

    Args:
        op: Real operator
        b: Right-hand side (start vector of both constructions)
        d_inner: Inner degree, at least 2
        d_outer: Outer degree, at least 1

    Returns:
        CompositePolynomial of degree d_inner * d_outer
    """
    if d_inner < 2:
        raise BalanceError(f"inner degree must be at least 2, got {d_inner}")
    if d_outer < 1:
        raise BalanceError(f"outer degree must be at least 1, got {d_outer}")
    inner = balance3(op, b, d_inner - 1)
    outer, _ = gmres_polynomial(PolynomialOperator(inner, op), d_outer, np.asarray(b, dtype=float))
    composite = CompositePolynomial(inner, outer)
    logger.info(f"Built composite polynomial: inner {inner.degree} x outer {outer.degree}")
    return composite
