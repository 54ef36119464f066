"""
PP(d)-GMRES(m): build a GMRES polynomial, balance it, make it stable, run
restarted GMRES on phi(A) and recover x = p(A) y.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..balance import BalanceOutcome, apply_balance, spline_definiteness_test
from ..config import config as app_config
from ..errors import DegreeTooHighError, DimensionError
from ..krylov import restarted_gmres, ritz_values
from ..krylov.models import SolveReport
from ..operators import LinearOperator
from ..polynomial import PolynomialOperator, PreconditionerPolynomial, gmres_polynomial
from ..stability import apply_corrections, deflation_vectors, stabilize_indefinite
from ..stability.models import StabilityOutcome
from ..utils import STREAM_POLYNOMIAL, make_generator, random_unit_vector
from .models import PPGmresConfig

logger = logging.getLogger(__name__)

# Degree kept after a DegreeTooHighError
RETRY_FRACTION = 0.9


@dataclass
class PreparedPolynomial:
    """Everything decided before the outer GMRES run starts"""
    degree_requested: int
    operator: PolynomialOperator
    balance: BalanceOutcome
    stability: Optional[StabilityOutcome] = None
    retries: int = 0
    construction_matvecs: int = 0
    start_vector: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def polynomial(self):
        return self.operator.poly

    @property
    def degree(self) -> int:
        return self.polynomial.degree


def _build(op: LinearOperator, v0: np.ndarray, d: int, settings: PPGmresConfig) -> Tuple[BalanceOutcome, Optional[StabilityOutcome]]:
    """One attempt at degree d; raises DegreeTooHighError from stability control"""
    if settings.balance in ('b3', 'b4'):
        outcome = apply_balance(
            settings.balance, op=op, b=v0, degree=d, inner_degree=settings.inner_degree,
        )
        return outcome, None

    poly, factorization = gmres_polynomial(op, d, v0)
    outcome = apply_balance(settings.balance, poly, interval=settings.balance_interval)
    ritz = ritz_values(factorization)
    if settings.spline_check:
        outcome.spline = spline_definiteness_test(outcome.polynomial, ritz)
        if outcome.spline.applicable and not outcome.spline.passed:
            logger.warning(
                f"Spline test flags {len(outcome.spline.flagged)} interval(s) where the degree "
                f"{outcome.polynomial.degree} polynomial may be indefinite"
            )

    stability = None
    if settings.stability_enabled and isinstance(outcome.polynomial, PreconditionerPolynomial):
        stability = stabilize_indefinite(outcome.polynomial, op, v0, settings.stability, ritz=ritz)
    return outcome, stability


def prepare_polynomial(op: LinearOperator, settings: PPGmresConfig, seed: int) -> PreparedPolynomial:
    """
    Build the preconditioning polynomial, lowering the degree on DegreeTooHighError

    Args:
        op: Operator
        settings: Solve settings
        seed: Seed of the polynomial start vector

    Returns:
        PreparedPolynomial
    """
    if settings.d > op.n:
        raise DimensionError(f"degree {settings.d} exceeds the dimension {op.n}")
    start = op.counter.matvecs
    v0 = random_unit_vector(op.n, make_generator(seed, STREAM_POLYNOMIAL))
    d = settings.d
    retries = 0
    while True:
        try:
            outcome, stability = _build(op, v0, d, settings)
            break
        except DegreeTooHighError as e:
            lower = int(math.floor(RETRY_FRACTION * d))
            if retries >= settings.max_retries or lower < 1 or lower == d:
                logger.error(f"Giving up at degree {d}: {e}")
                raise
            retries += 1
            logger.warning(f"Degree {d} too high (log10 pof {e.log10_pof:.1f}); retrying with degree {lower}")
            d = lower

    final = stability.polynomial if stability is not None else outcome.polynomial
    return PreparedPolynomial(
        degree_requested=settings.d,
        operator=PolynomialOperator(final, op),
        balance=outcome,
        stability=stability,
        retries=retries,
        construction_matvecs=op.counter.matvecs - start,
        start_vector=v0,
    )


def _polynomial_extra(prepared: PreparedPolynomial) -> Dict[str, Any]:
    poly = prepared.polynomial
    extra: Dict[str, Any] = {
        'degree_requested': prepared.degree_requested,
        'degree': prepared.degree,
        'retries': prepared.retries,
        'polynomial': poly.to_dict(),
        'balance': prepared.balance.to_dict(),
        'stability': None if prepared.stability is None else prepared.stability.to_dict(),
        'copies_added': getattr(poly, 'copies_added', 0),
    }
    if isinstance(poly, PreconditionerPolynomial):
        report = poly.pof()
        level = report.max_log10_pof
        extra['pof'] = report.to_dict()
        extra['max_log10_pof'] = level if np.isfinite(level) else None
    return extra


def pp_gmres(op: LinearOperator, b: np.ndarray, settings: PPGmresConfig) -> Tuple[np.ndarray, SolveReport]:
    """
    Solve A x = b with PP(d)-GMRES(m)

    With d = 1 and no balancing the run is plain restarted GMRES(m). The
    matvec counters of the report cover construction, the outer GMRES run,
    recovery of x and the correction phase.

    Args:
        op: Operator
        b: Right-hand side
        settings: Solve settings

    Returns:
        (x, SolveReport)
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (op.n,):
        raise DimensionError(f"right-hand side has shape {b.shape}, expected ({op.n},)")
    seed = app_config.default_seed if settings.seed is None else settings.seed
    max_mvp = app_config.max_mvp if settings.max_mvp is None else settings.max_mvp
    start = op.counter.snapshot()

    if settings.d == 1 and settings.balance == 'none':
        logger.info(f"Degree 1 without balancing: plain GMRES({settings.m}) on {op.name}")
        x, report = restarted_gmres(
            op, b, settings.m, settings.tol, max_mvp=max_mvp,
            verify=settings.verify_true_residual, reorth=settings.reorth, seed=seed,
        )
        report.extra.update({'degree_requested': 1, 'degree': 1, 'preconditioned': False, 'copies_added': 0})
        return x, report

    prepared = prepare_polynomial(op, settings, seed)
    pre_op = prepared.operator
    remaining = max(max_mvp - prepared.construction_matvecs, 1)
    logger.info(f"Running GMRES({settings.m}) on {pre_op.name}")
    y, report = restarted_gmres(
        pre_op, b, settings.m, settings.tol, max_mvp=remaining,
        verify=settings.verify_true_residual, reorth=settings.reorth, seed=seed,
    )
    before_recovery = op.counter.matvecs
    x = pre_op.recover(y)
    recovery_matvecs = op.counter.matvecs - before_recovery

    true_residual = float(np.linalg.norm(b - op.matvec(x)))
    op.counter.add(vector_ops=1, dot_products=1)
    report.final_true_residual = true_residual
    report.extra.update(_polynomial_extra(prepared))
    report.extra['preconditioned'] = True
    report.extra['residual_before_corrections'] = true_residual

    target = settings.tol * report.rhs_norm
    correction_start = op.counter.matvecs
    if (settings.verify_true_residual and prepared.stability is not None and report.rhs_norm > 0
            and true_residual > target):
        logger.info(f"True residual {true_residual:.3e} misses the target {target:.3e}; running corrections")
        outcome = prepared.stability
        vectors = deflation_vectors(outcome.candidates, outcome.polynomial, op, prepared.start_vector)
        spurious = [
            complex(theta)
            for theta, bad in zip(prepared.balance.polynomial.roots, outcome.classification.spurious) if bad
        ]
        x, corrections = apply_corrections(op, x, b, vectors, settings.stability, spurious)
        report.final_true_residual = corrections.final_residual
        report.extra['corrections'] = corrections.to_dict()
    else:
        report.extra['corrections'] = None

    end = op.counter.snapshot()
    report.matvecs = end['matvecs'] - start['matvecs']
    report.vector_ops = end['vector_ops'] - start['vector_ops']
    report.dot_products = end['dot_products'] - start['dot_products']
    report.extra['work'] = {
        'construction_matvecs': prepared.construction_matvecs,
        'recovery_matvecs': recovery_matvecs,
        'correction_matvecs': end['matvecs'] - correction_start,
    }
    logger.info(
        f"PP({prepared.degree})-GMRES({settings.m}): {'converged' if report.converged else 'not converged'}, "
        f"{report.matvecs} matvecs, true residual {report.final_true_residual:.3e}"
    )
    return x, report
