"""
Interior eigenvalues through polynomial preconditioned Arnoldi

A GMRES polynomial phi built on A - sigma I maps the eigenvalues of A near
sigma close to the origin and the rest towards one. Thick-restarted
(Krylov-Schur) Arnoldi on phi(A - sigma I) keeps the Schur vectors whose
Ritz values are nearest the origin; the eigenvalues of A are read off as
Rayleigh quotients of the Ritz vectors.
"""

import logging
from typing import List, Tuple

import numpy as np
import scipy.linalg

from ..balance import apply_balance
from ..config import config as app_config
from ..errors import DimensionError
from ..krylov import arnoldi_extend
from ..operators import LinearOperator, shifted_operator
from ..polynomial import PolynomialOperator, PreconditionerPolynomial, gmres_polynomial
from ..stability import stabilize_indefinite
from ..utils import STREAM_EIGEN, STREAM_POLYNOMIAL, make_generator, random_unit_vector
from .models import EigenConfig, EigenPair, EigenResult

logger = logging.getLogger(__name__)

# Ritz values whose moduli agree to this relative tolerance are kept or dropped together
PAIR_RTOL = 1e-10


def _projected_matrix(Hm: np.ndarray, last_row: np.ndarray, harmonic: bool) -> Tuple[np.ndarray, np.ndarray]:
    """
    Matrix whose eigenpairs give the Ritz pairs, and the harmonic correction f

    For B V = V Hm + v last_row the harmonic matrix is Hm + f last_row with
    Hm^T f = last_row^T; regular extraction uses Hm itself (f = 0).
    """
    if not harmonic:
        return Hm, np.zeros(Hm.shape[0])
    f = scipy.linalg.solve(Hm.T, last_row)
    return Hm + np.outer(f, last_row), f


def _kept_count(values: np.ndarray, k: int, limit: int) -> Tuple[int, float]:
    """Number of Schur vectors kept and the modulus threshold selecting them"""
    mods = np.sort(np.abs(values))
    if k >= len(mods):
        return len(mods), np.inf
    kept = k
    if mods[k] - mods[k - 1] <= PAIR_RTOL * mods[k]:
        # a conjugate pair straddles position k
        kept = k + 1 if k + 1 < limit else k - 1
    threshold = 0.5 * (mods[kept - 1] + mods[kept]) if kept < len(mods) else np.inf
    return kept, threshold


def _ritz_pairs(
    op: LinearOperator,
    basis: np.ndarray,
    G: np.ndarray,
    sigma: float,
    count: int,
) -> List[EigenPair]:
    """
    Rayleigh quotients of A and their residuals for the Ritz vectors nearest the origin

    The count + 2 Ritz values of smallest modulus form the window; within it
    pairs are ranked by how close the Rayleigh quotient is to sigma.
    """
    theta, S = scipy.linalg.eig(G)
    order = np.argsort(np.abs(theta), kind='stable')
    window = order[:min(len(order), count + 2)]
    pairs = []
    for i in window:
        u = basis @ S[:, i]
        if theta[i].imag == 0.0:
            u = np.real(u)
        u = u / np.linalg.norm(u)
        Au = op.matvec(u)
        rho = complex(np.vdot(u, Au))
        residual = float(np.linalg.norm(Au - rho * u))
        op.counter.add(vector_ops=2, dot_products=2)
        pairs.append(EigenPair(value=rho, residual=residual, phi_value=complex(theta[i])))
    pairs.sort(key=lambda pair: (abs(pair.value - sigma), abs(pair.phi_value)))
    return pairs[:count]


def _restart(
    V: np.ndarray,
    H: np.ndarray,
    steps: int,
    G: np.ndarray,
    f: np.ndarray,
    k: int,
) -> int:
    """
    Krylov-Schur restart in place; returns the number of retained Schur vectors

    With B V_m = V_m Hm + v b^T and Schur vectors Z_k of G, the vector
    w = v - V_m (I - Z_k Z_k^T) f is orthogonal to V_m Z_k and
    B V_m Z_k = V_m Z_k (Z_k^T Hm Z_k) + w b^T Z_k.
    """
    Hm = H[:steps, :steps].copy()
    last_row = H[steps, :steps].copy()
    kept, threshold = _kept_count(scipy.linalg.eigvals(G), k, steps)

    def select(re, im=0.0):
        return abs(complex(re, im)) <= threshold

    _, Z, sdim = scipy.linalg.schur(G, output='real', sort=select)
    kept = int(sdim) if 0 < sdim < steps else kept
    Zk = Z[:, :kept]
    w = V[:, steps] - V[:, :steps] @ (f - Zk @ (Zk.T @ f))
    omega = float(np.linalg.norm(w))

    V[:, :kept] = V[:, :steps] @ Zk
    V[:, kept] = w / omega
    V[:, kept + 1:] = 0.0
    H[:, :] = 0.0
    H[:kept, :kept] = Zk.T @ Hm @ Zk
    H[kept, :kept] = omega * (last_row @ Zk)
    return kept


def _volatile(pairs: List[EigenPair], sigma: float, factor: float) -> bool:
    distances = np.array([abs(pair.value - sigma) for pair in pairs])
    if len(distances) < 2:
        return False
    median = float(np.median(distances))
    return median > 0 and float(distances.max()) > factor * median


def pp_arnoldi_interior(op: LinearOperator, settings: EigenConfig) -> EigenResult:
    """
    Eigenvalues of A nearest sigma by PP(d)-Arnoldi(m, k)

    Args:
        op: Operator A
        settings: Target, counts, degree and balancing

    Returns:
        EigenResult with nev pairs sorted by distance to sigma; converged is
        False when the cycle cap or matvec budget ran out first
    """
    if settings.m >= op.n:
        raise DimensionError(f"Arnoldi length {settings.m} must be below the dimension {op.n}")
    seed = app_config.default_seed if settings.seed is None else settings.seed
    max_mvp = app_config.max_mvp if settings.max_mvp is None else settings.max_mvp
    start = op.counter.matvecs
    sigma = settings.sigma

    shifted = shifted_operator(op, sigma)
    v0 = random_unit_vector(op.n, make_generator(seed, STREAM_POLYNOMIAL))
    poly, _ = gmres_polynomial(shifted, settings.d, v0)
    poly = apply_balance(settings.balance, poly, interval=settings.balance_interval).polynomial
    if settings.stability_enabled and isinstance(poly, PreconditionerPolynomial):
        poly = stabilize_indefinite(poly, shifted, v0, settings.stability).polynomial
    B = PolynomialOperator(poly, shifted)
    logger.info(f"Arnoldi({settings.m},{settings.k}) on {B.name} for {settings.nev} eigenvalues near {sigma:g}")

    m, k = settings.m, settings.k
    V = np.zeros((op.n, m + 1))
    H = np.zeros((m + 1, m))
    V[:, 0] = random_unit_vector(op.n, make_generator(seed, STREAM_EIGEN))
    result = EigenResult(sigma=sigma, degree=poly.degree, seed=seed, polynomial=poly.to_dict())

    active = 0
    pairs: List[EigenPair] = []
    for cycle in range(1, settings.max_cycles + 1):
        steps, breakdown = arnoldi_extend(B, V, H, active, m, reorth=True)
        G, f = _projected_matrix(H[:steps, :steps], H[steps, :steps], settings.harmonic)
        pairs = _ritz_pairs(op, V[:, :steps], G, sigma, settings.nev)
        worst = max(pair.residual for pair in pairs)
        result.cycles = cycle
        result.residual_history.append(worst)
        logger.debug(f"Cycle {cycle}: largest residual among {len(pairs)} wanted pairs {worst:.3e}")
        if len(pairs) >= settings.nev and worst <= settings.tol:
            result.converged = True
            break
        if breakdown:
            logger.warning(f"Invariant subspace of dimension {steps} found before convergence")
            break
        if op.counter.matvecs - start >= max_mvp:
            logger.warning(f"Matvec budget {max_mvp} used up after {cycle} cycles")
            break
        active = _restart(V, H, steps, G, f, k)

    result.pairs = sorted(pairs, key=lambda pair: abs(pair.value - sigma))
    result.matvecs = op.counter.matvecs - start
    result.volatile = _volatile(result.pairs, sigma, settings.volatility_factor)
    if result.volatile:
        span = (min(p.value.real for p in result.pairs), max(p.value.real for p in result.pairs))
        logger.warning(f"Returned eigenvalues spread over [{span[0]:.6g}, {span[1]:.6g}], far from {sigma:g}")
    if not result.converged:
        logger.warning(f"Eigensolve stopped after {result.cycles} cycles without reaching tolerance {settings.tol:g}")
    logger.info(f"Found {len(result.pairs)} eigenvalues near {sigma:g} with {result.matvecs} matvecs")
    return result
