"""
Arnoldi process, one-cycle and restarted GMRES, regular and harmonic Ritz
values and harmonic Ritz residual norms.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import config
from ..errors import DegenerateVectorError, DimensionError
from ..linalg import HessenbergQR, adjoint_solve_last_column, eig_small_dense
from ..operators import LinearOperator
from .models import ArnoldiFactorization, CycleRecord, SolveReport

logger = logging.getLogger(__name__)

# h_{j+1,j} <= BREAKDOWN_TOL * ||A v_j|| is a lucky breakdown
BREAKDOWN_TOL = 1e-14
# Relative residual change over a whole cycle below this means stagnation
STAGNATION_TOL = 1e-14


def arnoldi_step(op: LinearOperator, V: np.ndarray, H: np.ndarray, j: int, reorth: bool = True) -> bool:
    """
    Extend the factorization by one column in place

    Classical Gram-Schmidt, with one full second pass when reorth is on.

    Args:
        op: Operator
        V: n x (m+1) basis array; columns 0..j are orthonormal
        H: (m+1) x m Hessenberg array; column j is filled
        j: Index of the column to compute
        reorth: Run the reorthogonalization pass

    Returns:
        True on (lucky) breakdown, in which case V[:, j+1] is left zero
    """
    w = op.matvec(V[:, j])
    w_norm = np.linalg.norm(w)
    basis = V[:, :j + 1]
    passes = 2 if reorth else 1
    for _ in range(passes):
        c = basis.T @ w
        w = w - basis @ c
        H[:j + 1, j] += c
    h = np.linalg.norm(w)
    op.counter.add(vector_ops=passes * (j + 1) + 1, dot_products=passes * (j + 1) + 2)
    if h <= BREAKDOWN_TOL * w_norm or h == 0.0:
        H[j + 1, j] = 0.0
        V[:, j + 1] = 0.0
        return True
    H[j + 1, j] = h
    V[:, j + 1] = w / h
    return False


def arnoldi_extend(
    op: LinearOperator,
    V: np.ndarray,
    H: np.ndarray,
    start: int,
    m: int,
    reorth: bool = True,
) -> Tuple[int, bool]:
    """
    Continue an Arnoldi-like factorization from column start up to column m

    The leading start columns of H need not be Hessenberg (Krylov-Schur
    restarts leave a full block there).

    Args:
        op: Operator
        V: n x (m+1) basis array with start+1 valid columns
        H: (m+1) x m array with start valid columns
        start: Number of columns already present
        m: Target number of columns

    Returns:
        (number of columns now present, breakdown flag)
    """
    for j in range(start, m):
        if arnoldi_step(op, V, H, j, reorth):
            logger.debug(f"Arnoldi breakdown at step {j + 1}")
            return j + 1, True
    return m, False


def arnoldi(op: LinearOperator, v0: np.ndarray, m: int, reorth: bool = True) -> ArnoldiFactorization:
    """
    Run m steps of the Arnoldi process

    Args:
        op: Operator
        v0: Nonzero start vector
        m: Number of steps, at most n
        reorth: Reorthogonalize every step

    Returns:
        ArnoldiFactorization, shorter than m on breakdown
    """
    if m < 1:
        raise DimensionError(f"number of Arnoldi steps must be positive, got {m}")
    if m > op.n:
        raise DimensionError(f"cannot take {m} Arnoldi steps in dimension {op.n}")
    v0 = np.asarray(v0, dtype=float)
    beta = np.linalg.norm(v0)
    if beta == 0.0:
        raise DegenerateVectorError("Arnoldi start vector is zero")
    V = np.zeros((op.n, m + 1))
    H = np.zeros((m + 1, m))
    V[:, 0] = v0 / beta
    op.counter.add(vector_ops=1, dot_products=1)
    steps, breakdown = arnoldi_extend(op, V, H, 0, m, reorth)
    return ArnoldiFactorization(V=V[:, :steps + 1].copy(), H=H[:steps + 1, :steps].copy(), beta=beta, breakdown=breakdown)


def gmres_cycle(
    op: LinearOperator,
    b: np.ndarray,
    x0: Optional[np.ndarray],
    m: int,
    tol_abs: float = 0.0,
    reorth: bool = False,
    mvp_limit: Optional[int] = None,
) -> Tuple[np.ndarray, List[float], ArnoldiFactorization]:
    """
    One GMRES(m) cycle from x0

    Args:
        op: Operator
        b: Right-hand side
        x0: Initial guess (zero when None)
        m: Maximum number of iterations
        tol_abs: Stop as soon as the shortcut residual is at most this
        reorth: Reorthogonalize the Arnoldi basis
        mvp_limit: Stop before an iteration once the shared counter reaches this many matvecs

    Returns:
        (x, shortcut residual norm after each iteration, factorization)
    """
    if m < 1:
        raise DimensionError(f"GMRES cycle length must be positive, got {m}")
    b = np.asarray(b, dtype=float)
    if x0 is None:
        x = np.zeros(op.n)
        r0 = b.copy()
    else:
        x = np.array(x0, dtype=float)
        r0 = b - op.matvec(x)
        op.counter.add(vector_ops=1)
    beta = np.linalg.norm(r0)
    op.counter.add(dot_products=1)
    m = min(m, op.n)
    if beta == 0.0:
        return x, [0.0], ArnoldiFactorization(V=np.zeros((op.n, 1)), H=np.zeros((1, 0)), beta=0.0)

    V = np.zeros((op.n, m + 1))
    H = np.zeros((m + 1, m))
    V[:, 0] = r0 / beta
    qr = HessenbergQR(beta, m)
    resnorms: List[float] = []
    breakdown = False
    steps = 0
    for j in range(m):
        if mvp_limit is not None and op.counter.matvecs >= mvp_limit:
            break
        breakdown = arnoldi_step(op, V, H, j, reorth)
        resnorms.append(qr.append_column(H[:j + 2, j]))
        steps = j + 1
        if breakdown or resnorms[-1] <= tol_abs:
            break

    if steps > 0:
        y = qr.solve()
        x = x + V[:, :steps] @ y
        op.counter.add(vector_ops=steps)
    factorization = ArnoldiFactorization(
        V=V[:, :steps + 1].copy(), H=H[:steps + 1, :steps].copy(), beta=beta, breakdown=breakdown,
    )
    return x, resnorms, factorization


def restarted_gmres(
    op: LinearOperator,
    b: np.ndarray,
    m: int,
    tol: float,
    max_mvp: Optional[int] = None,
    x0: Optional[np.ndarray] = None,
    verify: bool = True,
    reorth: bool = False,
    seed: Optional[int] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Restarted GMRES(m)

    Stops when the shortcut residual reaches tol * ||b||, when the matvec
    budget is used up or when a whole cycle fails to change the residual.

    Args:
        op: Operator
        b: Right-hand side
        m: Restart length
        tol: Relative residual tolerance
        max_mvp: Budget of matvecs with the primitive operator (configured default when None)
        x0: Initial guess
        verify: Compute the true residual at every restart
        reorth: Reorthogonalize inside cycles
        seed: Recorded in the report

    Returns:
        (x, SolveReport)
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    b = np.asarray(b, dtype=float)
    if b.shape != (op.n,):
        raise DimensionError(f"right-hand side has shape {b.shape}, expected ({op.n},)")
    max_mvp = config.max_mvp if max_mvp is None else max_mvp
    start = op.counter.snapshot()
    limit = start['matvecs'] + max_mvp
    bnorm = float(np.linalg.norm(b))
    report = SolveReport(rhs_norm=bnorm, tol=tol, seed=seed)
    x = np.zeros(op.n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        report.converged = True
        report.final_true_residual = 0.0
        return np.zeros(op.n), report

    target = tol * bnorm
    previous = None
    true_residual = None
    cycle = 0
    while True:
        cycle += 1
        x, resnorms, _ = gmres_cycle(op, b, x if cycle > 1 or x0 is not None else None, m, target, reorth, limit)
        if not resnorms:
            report.budget_exhausted = True
            break
        report.residual_history.extend(resnorms)
        shortcut = resnorms[-1]
        true_residual = None
        if verify:
            true_residual = float(np.linalg.norm(b - op.matvec(x)))
            op.counter.add(vector_ops=1, dot_products=1)
        report.cycles.append(CycleRecord(
            cycle=cycle,
            iterations=len(resnorms),
            shortcut_residual=float(shortcut),
            true_residual=true_residual,
            matvecs=op.counter.matvecs - start['matvecs'],
        ))
        logger.debug(f"Cycle {cycle}: shortcut residual {shortcut:.3e}")
        if shortcut <= target:
            report.converged = True
            break
        if previous is not None and abs(previous - shortcut) <= STAGNATION_TOL * previous:
            report.stagnated = True
            logger.warning(f"GMRES stagnated at residual {shortcut:.3e} after {cycle} cycles")
            break
        previous = shortcut
        if op.counter.matvecs >= limit:
            report.budget_exhausted = True
            break

    if true_residual is None:
        true_residual = float(np.linalg.norm(b - op.matvec(x)))
        op.counter.add(vector_ops=1, dot_products=1)
    report.final_true_residual = true_residual

    end = op.counter.snapshot()
    report.matvecs = end['matvecs'] - start['matvecs']
    report.vector_ops = end['vector_ops'] - start['vector_ops']
    report.dot_products = end['dot_products'] - start['dot_products']
    status = "converged" if report.converged else "did not converge"
    logger.info(
        f"GMRES({m}) {status}: {len(report.cycles)} cycles, {report.matvecs} matvecs, "
        f"relative residual {true_residual / bnorm:.3e}"
    )
    return x, report


def ritz_values(factorization: ArnoldiFactorization) -> np.ndarray:
    """Eigenvalues of H_{k,k}"""
    if factorization.steps == 0:
        raise DegenerateVectorError("factorization has no columns")
    return eig_small_dense(factorization.H_square)


def harmonic_ritz_values(factorization: ArnoldiFactorization) -> np.ndarray:
    """
    Harmonic Ritz values: eigenvalues of H_{d,d} + h_{d+1,d}^2 f e_d^T with
    H_{d,d}^T f = e_d. These are the roots of the degree-d GMRES residual
    polynomial.

    Args:
        factorization: Output of arnoldi

    Returns:
        Conjugate-closed complex array of length d
    """
    d = factorization.steps
    if d == 0:
        raise DegenerateVectorError("factorization has no columns")
    H_dd = factorization.H_square
    h = factorization.h_last
    f = adjoint_solve_last_column(H_dd)
    G = H_dd.copy()
    G[:, -1] += h * h * f
    return eig_small_dense(G)


def harmonic_ritz_residual(j: int, roots: Sequence[complex], op: LinearOperator, b: np.ndarray) -> float:
    """
    Residual norm ||A y_j - theta_j y_j|| / ||y_j|| of the harmonic Ritz vector
    y_j = prod_{i != j} (I - A/theta_i) b

    Args:
        j: Index of the root
        roots: All harmonic Ritz values of one GMRES(d) run, conjugates included
        op: Operator of that run
        b: Start vector of that run

    Returns:
        Relative eigen-residual norm
    """
    from ..polynomial import apply_root_product

    roots = np.asarray(roots, dtype=complex)
    theta = roots[j]
    others = np.delete(roots, j)
    y = apply_root_product(op, others, np.asarray(b, dtype=float))
    y_norm = np.linalg.norm(y)
    if y_norm == 0.0:
        raise DegenerateVectorError(f"harmonic Ritz vector for {theta:.6g} is zero")
    r = op.matvec(y) - theta * y
    op.counter.add(vector_ops=1, dot_products=2)
    return float(np.linalg.norm(r) / y_norm)
