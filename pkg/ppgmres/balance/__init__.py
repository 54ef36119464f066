"""
Balancing of the preconditioner polynomial so phi(A) stays definite on an
indefinite spectrum: root-adding methods here, range-restricted and
composite polynomials in newton, the spline screen in spline.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import BalanceError
from ..polynomial import Polynomial, PreconditionerPolynomial
from ..utils import complex_to_pair, pair_structure
from .newton import CompositePolynomial, NewtonPolynomial, balance3, balance4, default_inner_degree
from .spline import SplineVerdict, spline_definiteness_test

logger = logging.getLogger(__name__)

BALANCE_METHODS = ('none', 'b1', 'b2', 'b3', 'b4', 'b5')

# |phi'(0)| at or below this fraction of sum |m_i/theta_i| counts as balanced
BALANCED_RTOL = 1e-15


@dataclass
class BalanceOutcome:
    """A balanced polynomial and how it was obtained"""
    polynomial: Polynomial
    method: str
    eta: Optional[float] = None
    removed: List[complex] = field(default_factory=list)
    note: str = ""
    spline: Optional[SplineVerdict] = None

    @property
    def changed(self) -> bool:
        """False when balancing left the polynomial as it was"""
        return self.eta is not None or bool(self.removed) or self.method in ('b3', 'b4')

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'method': self.method,
            'eta': self.eta,
            'removed': [complex_to_pair(r) for r in self.removed],
            'note': self.note,
            'degree': self.polynomial.degree,
            'spline': None if self.spline is None else self.spline.to_dict(),
        }


def _slope_terms(poly: PreconditionerPolynomial):
    terms = poly.total_multiplicities / poly.roots
    return complex(np.sum(terms)), float(np.sum(np.abs(terms)))


def balance1(poly: PreconditionerPolynomial) -> BalanceOutcome:
    """
    Add the balancing root eta = -1 / sum(m_i/theta_i) so that phi'(0) = 0

    Args:
        poly: Root-form polynomial

    Returns:
        BalanceOutcome of degree d + 1 (unchanged when already balanced)
    """
    slope, scale = _slope_terms(poly)
    if abs(slope) <= BALANCED_RTOL * scale:
        logger.info("Polynomial is already balanced; Balance Method 1 leaves it unchanged")
        return BalanceOutcome(poly, 'b1', note='already balanced')
    eta = -1.0 / slope.real
    logger.info(f"Balance Method 1: adding root {eta:.6g}")
    return BalanceOutcome(poly.with_roots([eta]), 'b1', eta=eta)


def balance2(poly: PreconditionerPolynomial) -> BalanceOutcome:
    """
    Remove the real root or conjugate pair whose reciprocal (sum) is closest
    to phi'(0), if that reduces |phi'(0)|, then add a balancing root

    Args:
        poly: Root-form polynomial of degree at least 2

    Returns:
        BalanceOutcome of degree d - 1, d or d + 1
    """
    if poly.degree < 2:
        raise BalanceError(f"Balance Method 2 needs degree at least 2, got {poly.degree}")
    slope, scale = _slope_terms(poly)
    if abs(slope) <= BALANCED_RTOL * scale:
        return BalanceOutcome(poly, 'b2', note='already balanced')

    best_unit, best_xi, best_gap = None, 0.0, np.inf
    for unit in pair_structure(poly.roots):
        theta = poly.roots[unit[0]]
        xi = 2.0 * theta.real / abs(theta) ** 2 if len(unit) == 2 else 1.0 / theta.real
        gap = abs(slope.real - xi)
        if gap < best_gap:
            best_unit, best_xi, best_gap = unit, xi, gap

    if best_gap >= abs(slope):
        outcome = balance1(poly)
        return BalanceOutcome(outcome.polynomial, 'b2', eta=outcome.eta, note='same as Balance Method 1')

    removed = [complex(poly.roots[i]) for i in best_unit]
    remaining = slope.real - best_xi
    if remaining == 0.0:
        logger.info("Balance Method 2: removal alone balances the polynomial")
        return BalanceOutcome(poly.with_roots([], remove=best_unit), 'b2', removed=removed, note='no root added')
    eta = -1.0 / remaining
    logger.info(f"Balance Method 2: removing {len(removed)} root(s), adding {eta:.6g}")
    return BalanceOutcome(poly.with_roots([eta], remove=best_unit), 'b2', eta=eta, removed=removed)


def balance5(poly: PreconditionerPolynomial, a: Optional[float] = None) -> BalanceOutcome:
    """
    Add a root so that phi(a) = phi(-a)

    With beta = pi(a)/pi(-a) the root is eta = a (beta + 1)/(beta - 1).

    Args:
        poly: Root-form polynomial
        a: Half-width of the interval (smallest root modulus when None)

    Returns:
        BalanceOutcome of degree d + 1 (unchanged when already balanced)
    """
    if a is None:
        if len(poly.roots) == 0:
            raise BalanceError("Balance Method 5 needs at least one root to choose the interval")
        a = float(np.min(np.abs(poly.roots)))
    if a <= 0:
        raise BalanceError(f"interval half-width must be positive, got {a}")
    pi_plus, pi_minus = np.real(poly.pi_eval(np.array([a, -a])))
    if pi_minus == 0.0:
        eta = a
    else:
        beta = pi_plus / pi_minus
        if beta == 1.0:
            logger.info("Polynomial is already balanced on the interval")
            return BalanceOutcome(poly, 'b5', note='already balanced')
        if beta == -1.0:
            raise BalanceError("pi(a) = -pi(-a): the balancing root would be zero")
        eta = a * (beta + 1.0) / (beta - 1.0)
    logger.info(f"Balance Method 5 on [-{a:g}, {a:g}]: adding root {eta:.6g}")
    return BalanceOutcome(poly.with_roots([eta]), 'b5', eta=float(eta))


def apply_balance(
    method: str,
    poly: Optional[PreconditionerPolynomial] = None,
    op=None,
    b: Optional[np.ndarray] = None,
    degree: Optional[int] = None,
    inner_degree: Optional[int] = None,
    interval: Optional[float] = None,
) -> BalanceOutcome:
    """
    Dispatch on the balance method name

    Args:
        method: One of BALANCE_METHODS
        poly: GMRES polynomial (methods none, b1, b2, b5)
        op: Operator (methods b3, b4)
        b: Right-hand side (methods b3, b4)
        degree: Total degree (methods b3, b4)
        inner_degree: Inner degree for b4 (default_inner_degree when None)
        interval: Half-width for b5

    Returns:
        BalanceOutcome
    """
    if method not in BALANCE_METHODS:
        raise BalanceError(f"unknown balance method {method!r}; choose from {', '.join(BALANCE_METHODS)}")
    if method == 'none':
        return BalanceOutcome(poly, 'none')
    if method == 'b1':
        return balance1(poly)
    if method == 'b2':
        return balance2(poly)
    if method == 'b5':
        return balance5(poly, interval)
    if degree is None or degree < 2:
        raise BalanceError(f"methods b3 and b4 need a total degree of at least 2, got {degree}")
    if method == 'b3':
        return BalanceOutcome(balance3(op, b, degree - 1), 'b3')
    inner = default_inner_degree(degree) if inner_degree is None else inner_degree
    if degree % inner != 0:
        raise BalanceError(f"inner degree {inner} does not divide the total degree {degree}")
    return BalanceOutcome(balance4(op, b, inner, degree // inner), 'b4', note=f"inner {inner} x outer {degree // inner}")


__all__ = [
    'BALANCE_METHODS',
    'BalanceOutcome',
    'CompositePolynomial',
    'NewtonPolynomial',
    'SplineVerdict',
    'apply_balance',
    'balance1',
    'balance2',
    'balance3',
    'balance4',
    'balance5',
    'default_inner_degree',
    'spline_definiteness_test',
]
