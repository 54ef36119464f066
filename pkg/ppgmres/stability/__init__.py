"""
Stability control for polynomials built on an indefinite spectrum: extra
root copies on the larger side only, and a correction phase (Galerkin
deflation over harmonic Ritz vectors, a short GMRES run) for the smaller side.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..errors import DegreeTooHighError
from ..krylov import gmres_cycle, harmonic_ritz_residual
from ..operators import LinearOperator
from ..polynomial import PROVENANCE_GMRES, PreconditionerPolynomial, add_root_copies, apply_root_product
from ..polynomial.models import PofReport
from ..utils import pair_structure
from .models import (
    SIDE_LEFT, SIDE_RIGHT, CorrectionReport, HarmonicRitzInfo, SideClassification, StabilityConfig,
    StabilityOutcome, side_of,
)

logger = logging.getLogger(__name__)

# Columns of the deflation basis with |R_kk| below this fraction of |R_00| are dropped
DEPENDENCE_RTOL = 1e-10


def classify_sides(
    roots: Sequence[complex],
    pof_report: PofReport,
    config: StabilityConfig,
    residuals: Optional[Sequence[Optional[float]]] = None,
    ritz: Optional[Sequence[complex]] = None,
) -> SideClassification:
    """
    Split roots by the sign of their real part and find the larger side

    A root with log10 pof above the cutoff is spurious when its harmonic Ritz
    residual exceeds rncutoff. The larger side is the one whose non-spurious
    roots (or the Ritz values, when given) reach furthest from the imaginary axis.

    Args:
        roots: Distinct roots, aligned with pof_report
        pof_report: pof values of the roots
        config: Stability thresholds
        residuals: Harmonic Ritz residual per root (None where not computed)
        ritz: Ritz values to use instead of the roots

    Returns:
        SideClassification
    """
    roots = np.asarray(roots, dtype=complex)
    residuals = [None] * len(roots) if residuals is None else list(residuals)
    sides = [side_of(theta) for theta in roots]
    spurious = [
        bool(pof_report.log10_pof[i] > config.pofcutoff_log10 and residuals[i] is not None
             and residuals[i] > config.rncutoff)
        for i in range(len(roots))
    ]
    if ritz is not None and len(ritz) > 0:
        reach = np.asarray(ritz, dtype=complex)
    else:
        reach = np.array([theta for theta, bad in zip(roots, spurious) if not bad], dtype=complex)
    if len(reach) == 0:
        reach = roots

    right = reach.real[reach.real >= 0]
    left = reach.real[reach.real < 0]
    degenerate = len(right) == 0 or len(left) == 0
    if len(left) == 0:
        larger = SIDE_RIGHT
    elif len(right) == 0:
        larger = SIDE_LEFT
    else:
        larger = SIDE_RIGHT if right.max() >= -left.min() else SIDE_LEFT
    return SideClassification(larger, sides, spurious, residuals, degenerate)


def _gmres_roots(poly: PreconditionerPolynomial) -> np.ndarray:
    """Roots of the original GMRES(d) run, repeated by base multiplicity"""
    mask = np.array([p == PROVENANCE_GMRES for p in poly.provenance], dtype=bool)
    return np.repeat(poly.roots[mask], poly.multiplicities[mask])


def _residuals_for(
    poly: PreconditionerPolynomial,
    indices: Iterable[int],
    op: LinearOperator,
    b: np.ndarray,
) -> Dict[int, float]:
    """Harmonic Ritz residuals of the given GMRES roots (one computation per conjugate pair)"""
    gmres_roots = _gmres_roots(poly)
    result: Dict[int, float] = {}
    for i in indices:
        if i in result or poly.provenance[i] != PROVENANCE_GMRES:
            continue
        theta = poly.roots[i]
        j = int(np.flatnonzero(gmres_roots == theta)[0])
        value = harmonic_ritz_residual(j, gmres_roots, op, b)
        result[i] = value
        if theta.imag != 0.0:
            partner = np.flatnonzero(poly.roots == np.conj(theta))
            for k in partner:
                result[int(k)] = value
    return result


def stabilize_indefinite(
    poly: PreconditionerPolynomial,
    op: LinearOperator,
    b: np.ndarray,
    config: StabilityConfig,
    ritz: Optional[Sequence[complex]] = None,
) -> StabilityOutcome:
    """
    Add stability copies on the larger side of the spectrum

    Step 0 computes pof values and classifies sides; the optional step 1 adds
    one copy to a few accurate high-pof roots on the smaller side; step 2
    rejects the degree when the smaller side still has log10 pof above the
    abort level; step 3 augments the larger side. Roots not produced by the
    GMRES run (balancing roots) never receive copies.

    Args:
        poly: Polynomial whose GMRES roots come from a GMRES(d) run on (op, b)
        op: Operator of that run
        b: Start vector of that run
        config: Stability thresholds
        ritz: Ritz values for side classification (used when use_ritz_for_sides)

    Returns:
        StabilityOutcome with the augmented polynomial and deflation candidates

    Raises:
        DegreeTooHighError: the smaller side has an unstable root
    """
    report = poly.pof()
    threshold = config.pofcutoff_log10
    if config.optional_step1_enabled:
        threshold = min(threshold, config.step1_pof_threshold_log10)
    high = [i for i in report.above(threshold) if poly.provenance[i] == PROVENANCE_GMRES]
    residual_map = _residuals_for(poly, high, op, b)
    residuals = [residual_map.get(i) for i in range(len(poly.roots))]
    classification = classify_sides(
        poly.roots, report, config, residuals, ritz if config.use_ritz_for_sides else None,
    )
    report.residuals = np.array([np.nan if r is None else r for r in residuals])
    report.spurious = list(classification.spurious)
    report.larger_side = [classification.is_larger(t) for t in poly.roots]
    exempt = {i for i, p in enumerate(poly.provenance) if p != PROVENANCE_GMRES}
    spurious = {i for i, bad in enumerate(classification.spurious) if bad}

    def small_side(i):
        return not classification.degenerate and not classification.is_larger(poly.roots[i])

    candidates: List[HarmonicRitzInfo] = []
    for i in np.argsort(-report.log10_pof, kind='stable'):
        i = int(i)
        residual = residuals[i]
        if (small_side(i) and i not in spurious and i not in exempt and report.log10_pof[i] >= config.pofcutoff_log10
                and residual is not None and residual <= config.rncutoff):
            candidates.append(HarmonicRitzInfo(
                theta=complex(poly.roots[i]), log10_pof=float(report.log10_pof[i]), residual=residual,
                side=classification.sides[i], spurious=False,
            ))

    # Step 1: limited augmentation on the smaller side
    step1_roots: List[complex] = []
    current = poly
    if config.optional_step1_enabled and not classification.degenerate:
        larger_reach = max(
            (abs(t) for i, t in enumerate(poly.roots) if not small_side(i) and i not in spurious), default=np.inf,
        )
        added = poly.added_copies.copy()
        chosen = 0
        for info in candidates:
            if chosen >= config.step1_max_roots or info.theta.imag < 0:
                continue
            if info.log10_pof <= config.step1_pof_threshold_log10:
                continue
            if config.step1_half_magnitude_rule and abs(info.theta) > 0.5 * larger_reach:
                continue
            for k in np.flatnonzero((poly.roots == info.theta) | (poly.roots == np.conj(info.theta))):
                added[k] += 1
            step1_roots.append(info.theta)
            chosen += 1
        if step1_roots:
            current = PreconditionerPolynomial(poly.roots, poly.multiplicities, poly.provenance, added)
            logger.info(f"Step 1 added one copy each of {len(step1_roots)} smaller-side root(s)")

    current_report = current.pof()
    index_in_current = {complex(t): k for k, t in enumerate(current.roots)}

    def current_index(i):
        return index_in_current[complex(poly.roots[i])]

    # Step 2: unstable smaller side means the degree is too high
    small_levels = [
        (current_report.log10_pof[current_index(i)], poly.roots[i])
        for i in range(len(poly.roots)) if small_side(i) and i not in spurious and i not in exempt
    ]
    small_max = max((level for level, _ in small_levels), default=float('-inf'))
    if small_max > config.small_side_pof_abort_log10:
        level, theta = max(small_levels, key=lambda item: item[0])
        raise DegreeTooHighError(float(level), complex(theta))

    # Step 3: copies on the larger side
    excluded = {current_index(i) for i in spurious | exempt}
    augmented = add_root_copies(
        current,
        config.pofcutoff_log10,
        side_filter=lambda theta: classification.degenerate or classification.is_larger(theta),
        report=current_report,
        exclude=excluded,
    )
    copies = augmented.copies_added - poly.copies_added
    if copies:
        logger.info(f"Stability control added {copies} root copies (max log10 pof {report.max_log10_pof:.1f})")

    budget = config.max_deflation_vectors
    kept: List[HarmonicRitzInfo] = []
    for info in candidates:
        if info.theta.imag < 0:
            continue
        cost = 1 if info.theta.imag == 0 else 2
        if cost > budget:
            break
        kept.append(info)
        budget -= cost

    return StabilityOutcome(
        polynomial=augmented,
        classification=classification,
        candidates=kept,
        copies_added=copies,
        step1_roots=step1_roots,
        max_log10_pof=report.max_log10_pof,
        small_side_max_log10_pof=small_max,
    )


def deflation_vectors(
    candidates: Sequence[HarmonicRitzInfo],
    poly: PreconditionerPolynomial,
    op: LinearOperator,
    b: np.ndarray,
) -> List[np.ndarray]:
    """
    Approximate eigenvectors y_j = prod_{i != j} (I - A/theta_i) b

    A complex y_j contributes its real and imaginary parts.

    Args:
        candidates: Roots selected by stabilize_indefinite
        poly: The polynomial those roots belong to
        op: Operator of the GMRES run
        b: Start vector of the GMRES run

    Returns:
        Real vectors
    """
    gmres_roots = _gmres_roots(poly)
    vectors: List[np.ndarray] = []
    for info in candidates:
        j = int(np.flatnonzero(gmres_roots == info.theta)[0])
        y = apply_root_product(op, np.delete(gmres_roots, j), np.asarray(b, dtype=float))
        if np.iscomplexobj(y):
            vectors.extend([np.real(y).copy(), np.imag(y).copy()])
        else:
            vectors.append(y)
    return vectors


def galerkin_deflation(
    op: LinearOperator,
    x: np.ndarray,
    b: np.ndarray,
    vectors: Sequence[np.ndarray],
) -> Tuple[np.ndarray, bool]:
    """
    Galerkin projection over span(vectors): solve (Y^T A Y) g = Y^T r and
    return x + Y g, so the new residual is orthogonal to span(vectors)

    Dependent vectors are dropped through a pivoted QR.

    Args:
        op: Operator
        x: Current approximation
        b: Right-hand side
        vectors: Approximate eigenvectors

    Returns:
        (new x, applied flag); x is returned unchanged when the projected matrix is singular
    """
    x = np.asarray(x, dtype=float)
    if len(vectors) == 0:
        return x, False
    Y = np.column_stack(vectors)
    Q, R, _ = scipy.linalg.qr(Y, mode='economic', pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        logger.warning("Deflation vectors are all zero; skipping Galerkin projection")
        return x, False
    rank = int(np.sum(diag > DEPENDENCE_RTOL * diag[0]))
    if rank < Y.shape[1]:
        logger.debug(f"Dropped {Y.shape[1] - rank} dependent deflation vector(s)")
    Q = Q[:, :rank]
    r = b - op.matvec(x)
    AQ = np.column_stack([op.matvec(Q[:, k]) for k in range(rank)])
    M = Q.T @ AQ
    op.counter.add(vector_ops=rank + 1, dot_products=rank * (rank + 1))
    try:
        lu, piv = scipy.linalg.lu_factor(M)
        if np.any(np.diag(lu) == 0.0) or np.linalg.cond(M) > 1e14:
            raise scipy.linalg.LinAlgError("projected matrix is singular")
        g = scipy.linalg.lu_solve((lu, piv), Q.T @ r)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        logger.warning(f"Skipping Galerkin deflation: {e}")
        return x, False
    return x + Q @ g, True


def gmres_correction(op: LinearOperator, x: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """
    k iterations of unpreconditioned GMRES from x

    Args:
        op: Operator
        x: Current approximation
        b: Right-hand side
        k: Number of iterations (0 leaves x unchanged)

    Returns:
        Corrected approximation
    """
    x = np.asarray(x, dtype=float)
    if k <= 0:
        return x
    corrected, _, _ = gmres_cycle(op, b, x, k)
    return corrected


def apply_corrections(
    op: LinearOperator,
    x: np.ndarray,
    b: np.ndarray,
    vectors: Sequence[np.ndarray],
    config: StabilityConfig,
    spurious_roots: Sequence[complex] = (),
) -> Tuple[np.ndarray, CorrectionReport]:
    """
    Correction phase: deflation only, GMRES only and both in sequence

    A deflation step that would raise the residual is discarded. The
    returned solution is the combined track.

    Args:
        op: Operator
        x: Approximation from PP-GMRES
        b: Right-hand side
        vectors: Deflation vectors
        config: Supplies the GMRES correction length
        spurious_roots: Recorded in the report

    Returns:
        (corrected x, CorrectionReport)
    """
    def residual(z):
        value = float(np.linalg.norm(b - op.matvec(z)))
        op.counter.add(vector_ops=1, dot_products=1)
        return value

    before = residual(x)
    report = CorrectionReport(residual_before=before, spurious_roots=list(spurious_roots))

    deflated = x
    if vectors:
        candidate, applied = galerkin_deflation(op, x, b, vectors)
        after = residual(candidate) if applied else before
        if applied and after <= before:
            deflated = candidate
            report.deflation_vectors = len(vectors)
        else:
            report.deflation_skipped = True
            if applied:
                logger.warning(f"Deflation raised the residual ({before:.3e} -> {after:.3e}); discarded")
        report.residual_after_deflation = min(after, before)

    k = config.gmres_correction_iters
    gmres_only = gmres_correction(op, x, b, k)
    report.residual_after_gmres = residual(gmres_only)
    both = gmres_correction(op, deflated, b, k)
    report.residual_after_both = residual(both)
    logger.info(
        f"Corrections: before {before:.3e}, deflation {report.residual_after_deflation}, "
        f"GMRES {report.residual_after_gmres:.3e}, both {report.residual_after_both:.3e}"
    )
    return both, report
