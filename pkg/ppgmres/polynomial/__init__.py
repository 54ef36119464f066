"""
The GMRES preconditioner polynomial phi(z) = 1 - pi(z) = z p(z), stored by
its roots (the harmonic Ritz values of a GMRES(d) run).
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionError, SingularMatrixError
from ..krylov import arnoldi, harmonic_ritz_values
from ..krylov.models import ArnoldiFactorization
from ..operators import LinearOperator
from ..utils import complex_to_pair, is_conjugate_closed, pair_structure, pair_to_complex
from .models import PofReport

logger = logging.getLogger(__name__)

PROVENANCE_GMRES = 'gmres'
PROVENANCE_BALANCE = 'balance'
PROVENANCE_STABILITY = 'stability'

# Decades of pof absorbed by each added copy of a root
DECADES_PER_COPY = 14.0


def leja_order(roots: Sequence[complex]) -> np.ndarray:
    """
    Order roots greedily so each next root maximizes the product of its
    distances to the roots already chosen

    The first root has maximum modulus. Products are accumulated as sums of
    log-distances. A non-real root is immediately followed by its conjugate,
    positive imaginary part first.

    Args:
        roots: Conjugate-closed multiset

    Returns:
        Permutation of roots
    """
    roots = np.asarray(roots, dtype=complex)
    n = len(roots)
    if n == 0:
        return roots.copy()
    remaining = list(range(n))
    order: List[int] = []
    log_prod = np.zeros(n)

    def take(i):
        order.append(i)
        remaining.remove(i)
        with np.errstate(divide='ignore'):
            log_prod[:] += np.log(np.abs(roots - roots[i]))

    def take_with_partner(i):
        value = roots[i]
        if value.imag == 0.0:
            take(i)
            return
        partner = next((k for k in remaining if k != i and roots[k] == np.conj(value)), None)
        if partner is None:
            take(i)
            return
        first, second = (i, partner) if value.imag > 0 else (partner, i)
        take(first)
        take(second)

    moduli = np.abs(roots)
    take_with_partner(max(remaining, key=lambda k: (moduli[k], roots[k].imag)))
    while remaining:
        take_with_partner(max(remaining, key=lambda k: log_prod[k]))
    return roots[order]


def apply_root_product(op: LinearOperator, roots: Sequence[complex], v: np.ndarray) -> np.ndarray:
    """
    Compute prod (I - A/theta_i) v in Leja order

    Adjacent conjugate pairs are applied as one real quadratic factor; a
    non-real root without its partner is applied in complex arithmetic.

    Args:
        op: Operator
        roots: Roots of the factors
        v: Vector

    Returns:
        The product applied to v (complex only if an unpaired root is present)
    """
    ordered = leja_order(roots)
    P = np.array(v, dtype=complex if np.iscomplexobj(v) else float)
    for unit in pair_structure(ordered):
        theta = ordered[unit[0]]
        if len(unit) == 2:
            s, q = 2.0 * theta.real / abs(theta) ** 2, 1.0 / abs(theta) ** 2
            w = op.matvec(P)
            w2 = op.matvec(w)
            P = P - s * w + q * w2
            op.counter.add(vector_ops=2)
        elif theta.imag == 0.0:
            P = P - op.matvec(P) / theta.real
            op.counter.add(vector_ops=1)
        else:
            P = P.astype(complex) - op.matvec(P.astype(complex)) / theta
            op.counter.add(vector_ops=1)
    return P


class Polynomial(ABC):
    """A polynomial phi with phi(0) = 0 that can be applied to an operator"""

    kind = 'polynomial'

    @property
    @abstractmethod
    def degree(self) -> int:
        """Degree of phi"""

    @abstractmethod
    def phi_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        """phi(A) v"""

    @abstractmethod
    def p_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        """p(A) v with A p(A) = phi(A)"""

    @abstractmethod
    def phi_eval(self, z) -> np.ndarray:
        """phi at scalar points"""

    @abstractmethod
    def phi_deriv(self, z) -> np.ndarray:
        """phi' at scalar points"""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Dump for reports"""

    def pi_eval(self, z) -> np.ndarray:
        """pi(z) = 1 - phi(z)"""
        return 1.0 - self.phi_eval(z)

    def pi_deriv(self, z) -> np.ndarray:
        """pi'(z) = -phi'(z)"""
        return -self.phi_deriv(z)

    def slope_at_zero(self) -> complex:
        """phi'(0)"""
        return complex(np.asarray(self.phi_deriv(np.array([0.0])))[0])


class PreconditionerPolynomial(Polynomial):
    """
    phi(z) = 1 - prod (1 - z/theta_i)^{m_i}

    Roots are distinct, in Leja order with conjugate pairs adjacent. Extra
    stability copies are tracked separately from the base multiplicity and
    applied after one full pass over the roots.
    """

    kind = 'roots'

    def __init__(
        self,
        roots: Sequence[complex],
        multiplicities: Optional[Sequence[int]] = None,
        provenance: Optional[Sequence[str]] = None,
        added_copies: Optional[Sequence[int]] = None,
    ):
        """
        Args:
            roots: Roots; exactly equal entries are merged into multiplicities
            multiplicities: Base multiplicity per root (ones when omitted)
            provenance: Origin tag per root (gmres when omitted)
            added_copies: Stability copies per root (zeros when omitted)
        """
        roots = np.asarray(roots, dtype=complex)
        count = len(roots)
        multiplicities = np.ones(count, dtype=int) if multiplicities is None else np.asarray(multiplicities, dtype=int)
        provenance = [PROVENANCE_GMRES] * count if provenance is None else list(provenance)
        added_copies = np.zeros(count, dtype=int) if added_copies is None else np.asarray(added_copies, dtype=int)
        if not (len(multiplicities) == len(provenance) == len(added_copies) == count):
            raise DimensionError("roots, multiplicities, provenance and added copies differ in length")
        if np.any(multiplicities < 1) or np.any(added_copies < 0):
            raise ValueError("multiplicities must be positive and added copies non-negative")
        if np.any(roots == 0):
            raise SingularMatrixError("a root is zero; phi(0) = 0 requires nonzero roots")
        if not np.all(np.isfinite(roots)):
            raise SingularMatrixError("a root is not finite")
        if not is_conjugate_closed(roots, rtol=0.0):
            raise ValueError("roots must be closed under exact conjugation")

        # Merge exactly equal roots
        merged: Dict[complex, int] = {}
        keep: List[int] = []
        base: List[int] = []
        extra: List[int] = []
        for i, root in enumerate(roots):
            key = complex(root)
            if key in merged:
                slot = merged[key]
                base[slot] += int(multiplicities[i])
                extra[slot] += int(added_copies[i])
                continue
            merged[key] = len(keep)
            keep.append(i)
            base.append(int(multiplicities[i]))
            extra.append(int(added_copies[i]))

        distinct = roots[keep]
        ordered = leja_order(distinct)
        index = {complex(r): k for k, r in enumerate(distinct)}
        perm = [index[complex(r)] for r in ordered]
        self.roots = ordered
        self.multiplicities = np.array([base[k] for k in perm], dtype=int)
        self.added_copies = np.array([extra[k] for k in perm], dtype=int)
        self.provenance = [provenance[keep[k]] for k in perm]
        self._check_pairs()

    def _check_pairs(self):
        for unit in pair_structure(self.roots):
            if len(unit) == 2:
                a, b = unit
                if self.total_multiplicities[a] != self.total_multiplicities[b]:
                    raise ValueError(f"conjugate roots {self.roots[a]:.6g} have unequal multiplicities")
            elif self.roots[unit[0]].imag != 0.0:
                raise ValueError(f"root {self.roots[unit[0]]:.6g} is not adjacent to its conjugate")

    @classmethod
    def from_factorization(cls, factorization: ArnoldiFactorization) -> 'PreconditionerPolynomial':
        """Polynomial whose roots are the harmonic Ritz values of the factorization"""
        return cls(harmonic_ritz_values(factorization))

    @property
    def total_multiplicities(self) -> np.ndarray:
        """Base multiplicity plus added copies"""
        return self.multiplicities + self.added_copies

    @property
    def degree(self) -> int:
        return int(np.sum(self.total_multiplicities))

    @property
    def copies_added(self) -> int:
        """Total number of stability copies"""
        return int(np.sum(self.added_copies))

    def application_sequence(self) -> List[Tuple[int, ...]]:
        """
        Units (index tuples into roots) in application order: one pass over
        every root in Leja order, then the remaining copies pass by pass
        """
        units = pair_structure(self.roots)
        total = self.total_multiplicities
        sequence = list(units)
        for k in range(2, int(total.max(initial=1)) + 1):
            sequence.extend(unit for unit in units if total[unit[0]] >= k)
        return sequence

    def phi_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        """
        phi(A) v with exactly d matvecs

        Telescoping form: phi(A) v = sum_i (A/theta_i) prod_{k<i} (I - A/theta_k) v,
        with a conjugate pair contributing (sA - qA^2) P, s = 2 Re(theta)/|theta|^2
        and q = 1/|theta|^2.
        """
        v = np.asarray(v)
        dtype = complex if np.iscomplexobj(v) else float
        phi = np.zeros(op.n, dtype=dtype)
        P = np.array(v, dtype=dtype)
        for unit in self.application_sequence():
            theta = self.roots[unit[0]]
            if len(unit) == 2:
                s, q = 2.0 * theta.real / abs(theta) ** 2, 1.0 / abs(theta) ** 2
                w = op.matvec(P)
                w2 = op.matvec(w)
                step = s * w - q * w2
                op.counter.add(vector_ops=3)
            else:
                step = op.matvec(P) / theta.real
                op.counter.add(vector_ops=1)
            phi += step
            P -= step
            op.counter.add(vector_ops=2)
        return phi

    def p_apply(self, op: LinearOperator, v: np.ndarray) -> np.ndarray:
        """p(A) v with d - 1 matvecs (the last factor update is skipped)"""
        v = np.asarray(v)
        dtype = complex if np.iscomplexobj(v) else float
        acc = np.zeros(op.n, dtype=dtype)
        P = np.array(v, dtype=dtype)
        sequence = self.application_sequence()
        for position, unit in enumerate(sequence):
            last = position == len(sequence) - 1
            theta = self.roots[unit[0]]
            if len(unit) == 2:
                s, q = 2.0 * theta.real / abs(theta) ** 2, 1.0 / abs(theta) ** 2
                w = op.matvec(P)
                acc += s * P - q * w
                op.counter.add(vector_ops=2)
                if not last:
                    w2 = op.matvec(w)
                    P = P - s * w + q * w2
                    op.counter.add(vector_ops=2)
            else:
                acc += P / theta.real
                op.counter.add(vector_ops=1)
                if not last:
                    P = P - op.matvec(P) / theta.real
                    op.counter.add(vector_ops=1)
        return acc

    def _factors(self, z) -> Tuple[np.ndarray, np.ndarray]:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return z, 1.0 - z[None, :] / self.roots[:, None]

    def phi_eval(self, z) -> np.ndarray:
        """phi(z) = 1 - prod (1 - z/theta_i)^{m_i}"""
        z, F = self._factors(z)
        if len(self.roots) == 0:
            return np.zeros(len(z), dtype=complex)
        pi = np.prod(F ** self.total_multiplicities[:, None], axis=0)
        return 1.0 - pi

    def phi_deriv(self, z) -> np.ndarray:
        """phi'(z) by the product rule; phi'(0) = sum m_i / theta_i exactly"""
        z, F = self._factors(z)
        total = self.total_multiplicities
        result = np.zeros(len(z), dtype=complex)
        for i in range(len(self.roots)):
            others = np.prod(np.delete(F, i, axis=0) ** np.delete(total, i)[:, None], axis=0)
            own = F[i] ** (total[i] - 1)
            result += total[i] / self.roots[i] * own * others
        return result

    def pof(self) -> PofReport:
        """
        log10 |prod_{i != j} (1 - theta_j/theta_i)| for each distinct root

        One copy of theta_j is removed; any remaining copies vanish at theta_j,
        so a root of total multiplicity two or more has pof zero.
        """
        total = self.total_multiplicities
        count = len(self.roots)
        log10_pof = np.zeros(count)
        for j in range(count):
            if total[j] > 1:
                log10_pof[j] = -np.inf
                continue
            others = np.delete(np.arange(count), j)
            with np.errstate(divide='ignore'):
                terms = np.log10(np.abs(1.0 - self.roots[j] / self.roots[others]))
            log10_pof[j] = float(np.sum(total[others] * terms))
        return PofReport(roots=self.roots.copy(), multiplicities=total.copy(), log10_pof=log10_pof)

    def with_roots(
        self,
        new_roots: Sequence[complex],
        provenance: str = PROVENANCE_BALANCE,
        remove: Iterable[int] = (),
    ) -> 'PreconditionerPolynomial':
        """
        A new polynomial with roots added and/or removed

        Args:
            new_roots: Roots to add
            provenance: Tag for the added roots
            remove: Indices whose base multiplicity drops by one

        Returns:
            New PreconditionerPolynomial
        """
        multiplicities = self.multiplicities.copy()
        for i in remove:
            multiplicities[i] -= 1
        keep = multiplicities > 0
        new_roots = np.asarray(new_roots, dtype=complex)
        return PreconditionerPolynomial(
            np.concatenate([self.roots[keep], new_roots]),
            np.concatenate([multiplicities[keep], np.ones(len(new_roots), dtype=int)]),
            [p for p, k in zip(self.provenance, keep) if k] + [provenance] * len(new_roots),
            np.concatenate([self.added_copies[keep], np.zeros(len(new_roots), dtype=int)]),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Root dump: values, multiplicities, provenance and Leja index"""
        return {
            'kind': self.kind,
            'degree': self.degree,
            'roots': [
                {
                    'value': complex_to_pair(root),
                    'multiplicity': int(self.multiplicities[i]),
                    'added_copies': int(self.added_copies[i]),
                    'provenance': self.provenance[i],
                    'leja_index': i,
                }
                for i, root in enumerate(self.roots)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PreconditionerPolynomial':
        """Create from a root dump"""
        entries = data.get('roots', [])
        return cls(
            [pair_to_complex(e['value']) for e in entries],
            [e.get('multiplicity', 1) for e in entries],
            [e.get('provenance', PROVENANCE_GMRES) for e in entries],
            [e.get('added_copies', 0) for e in entries],
        )


def add_root_copies(
    poly: PreconditionerPolynomial,
    pofcutoff_log10: float,
    side_filter: Optional[Callable[[complex], bool]] = None,
    report: Optional[PofReport] = None,
    exclude: Iterable[int] = (),
) -> PreconditionerPolynomial:
    """
    Add ceil((log10 pof - cutoff) / 14) copies of every root with large pof

    Args:
        poly: Polynomial to augment
        pofcutoff_log10: Threshold in decades
        side_filter: Predicate on the root value; roots failing it are skipped
        report: pof report of poly (computed when omitted)
        exclude: Root indices that never receive copies

    Returns:
        New polynomial (poly itself if nothing is added)
    """
    report = poly.pof() if report is None else report
    excluded = set(exclude)
    added = poly.added_copies.copy()
    changed = False
    for unit in pair_structure(poly.roots):
        if any(i in excluded for i in unit):
            continue
        theta = poly.roots[unit[0]]
        if side_filter is not None and not side_filter(theta):
            continue
        level = max(report.log10_pof[i] for i in unit)
        if not level > pofcutoff_log10:
            continue
        copies = math.ceil((level - pofcutoff_log10) / DECADES_PER_COPY)
        for i in unit:
            added[i] += copies
        changed = True
        logger.debug(f"Adding {copies} copies of root {theta:.6g} (log10 pof {level:.2f})")
    if not changed:
        return poly
    return PreconditionerPolynomial(poly.roots, poly.multiplicities, poly.provenance, added)


class PolynomialOperator(LinearOperator):
    """The operator phi(A), charged through the matvecs of A"""

    def __init__(self, poly: Polynomial, op: LinearOperator):
        eigenvalues = None if op.eigenvalues is None else poly.phi_eval(op.eigenvalues)
        super().__init__(
            op.n,
            lambda x: poly.phi_apply(op, x),
            name=f"phi{poly.degree}({op.name})",
            eigenvalues=eigenvalues,
            counter=op.counter,
            primitive=False,
            is_real=op.is_real,
        )
        self.poly = poly
        self.base = op

    def recover(self, y: np.ndarray) -> np.ndarray:
        """x = p(A) y for a solution y of phi(A) y = b"""
        return self.poly.p_apply(self.base, y)


def gmres_polynomial(op: LinearOperator, d: int, v0: np.ndarray) -> Tuple[PreconditionerPolynomial, ArnoldiFactorization]:
    """
    Build the degree-d GMRES polynomial from one GMRES(d) cycle

    Args:
        op: Operator
        d: Degree
        v0: Start vector of the cycle

    Returns:
        (polynomial, factorization); the degree is lower after an early breakdown
    """
    factorization = arnoldi(op, v0, d, reorth=True)
    if factorization.steps < d:
        logger.warning(f"Krylov space exhausted: polynomial degree reduced from {d} to {factorization.steps}")
    poly = PreconditionerPolynomial.from_factorization(factorization)
    logger.info(f"Built degree {poly.degree} GMRES polynomial for {op.name}")
    return poly, factorization


def phi_apply(poly: Polynomial, op: LinearOperator, v: np.ndarray) -> np.ndarray:
    """phi(A) v"""
    return poly.phi_apply(op, v)


def p_apply(poly: Polynomial, op: LinearOperator, v: np.ndarray) -> np.ndarray:
    """p(A) v"""
    return poly.p_apply(op, v)


def phi_eval(poly: Polynomial, z) -> np.ndarray:
    """phi at scalar points"""
    return poly.phi_eval(z)


def phi_deriv(poly: Polynomial, z) -> np.ndarray:
    """phi' at scalar points"""
    return poly.phi_deriv(z)


def pof(poly: PreconditionerPolynomial) -> PofReport:
    """Product-of-other-factors report"""
    return poly.pof()
