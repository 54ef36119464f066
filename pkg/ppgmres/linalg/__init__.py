"""
Dense kernels shared by the Krylov and polynomial code: Hessenberg least
squares by plane rotations, the adjoint solve used for harmonic Ritz values
and a small nonsymmetric eigenvalue solver.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from ..config import config
from ..errors import BreakdownError, ConvergenceError, DimensionError, SingularMatrixError

logger = logging.getLogger(__name__)

# Deflation threshold used by the QR sweeps: unit roundoff times 64
QR_DEFLATION_EPS = np.finfo(float).eps / 2 * 64


class HessenbergQR:
    """
    Incremental QR factorization of an (m+1) x m upper-Hessenberg matrix by
    Givens rotations, as used inside one GMRES cycle.

    Columns are appended one at a time; after each append the minimal residual
    norm of beta*e1 - H y is available without forming y.
    """

    def __init__(self, beta: float, max_columns: int):
        """
        Args:
            beta: Norm of the initial residual
            max_columns: Largest number of columns that will be appended
        """
        if beta < 0:
            raise ValueError(f"beta must be non-negative, got {beta}")
        self.beta = float(beta)
        self.R = np.zeros((max_columns, max_columns))
        self.cs = np.zeros(max_columns)
        self.sn = np.zeros(max_columns)
        self.g = np.zeros(max_columns + 1)
        self.g[0] = self.beta
        self.k = 0

    def append_column(self, h: np.ndarray) -> float:
        """
        Append Hessenberg column k (length k+2) and return the new residual norm

        Args:
            h: Column entries h[0..k+1]

        Returns:
            Minimal residual norm over the first k+1 columns
        """
        k = self.k
        col = np.array(h[:k + 2], dtype=float)
        for i in range(k):
            temp = self.cs[i] * col[i] + self.sn[i] * col[i + 1]
            col[i + 1] = -self.sn[i] * col[i] + self.cs[i] * col[i + 1]
            col[i] = temp
        a, b = col[k], col[k + 1]
        r = np.hypot(a, b)
        if r == 0.0:
            if k == 0:
                raise BreakdownError("leading Hessenberg column is exactly zero")
            # Swap rows k and k+1 so the unreachable residual component moves down
            self.cs[k], self.sn[k] = 0.0, 1.0
        else:
            self.cs[k], self.sn[k] = a / r, b / r
        col[k] = r
        self.R[:k + 1, k] = col[:k + 1]
        self.g[k + 1] = -self.sn[k] * self.g[k]
        self.g[k] = self.cs[k] * self.g[k]
        self.k += 1
        return abs(self.g[k + 1])

    @property
    def residual_norm(self) -> float:
        """Current minimal residual norm"""
        return abs(self.g[self.k])

    def solve(self) -> np.ndarray:
        """
        Back-substitute for the least-squares coefficients

        Returns:
            y of length k
        """
        k = self.k
        R = self.R[:k, :k]
        if k == 0:
            return np.zeros(0)
        if np.any(np.diag(R) == 0.0):
            # Singular triangle: fall back to a minimum-norm solve
            y, *_ = np.linalg.lstsq(R, self.g[:k], rcond=None)
            return y
        return scipy.linalg.solve_triangular(R, self.g[:k], lower=False)


def hessenberg_least_squares(H: np.ndarray, beta: float) -> Tuple[np.ndarray, float]:
    """
    Minimize ||beta*e1 - H y|| for an (m+1) x m upper-Hessenberg H

    Args:
        H: Upper-Hessenberg matrix, not modified
        beta: Norm of the initial residual

    Returns:
        (y, residual norm)
    """
    H = np.asarray(H, dtype=float)
    rows, cols = H.shape
    if rows != cols + 1:
        raise DimensionError(f"expected an (m+1) x m matrix, got {rows} x {cols}")
    if H[0, 0] == 0.0 and (rows < 2 or H[1, 0] == 0.0):
        raise BreakdownError("leading Hessenberg column is exactly zero")
    qr = HessenbergQR(beta, cols)
    for j in range(cols):
        qr.append_column(H[:j + 2, j])
    return qr.solve(), qr.residual_norm


def adjoint_solve_last_column(H_dd: np.ndarray) -> np.ndarray:
    """
    Solve H^* f = e_d for the harmonic Ritz correction term

    Args:
        H_dd: Square real matrix, not modified

    Returns:
        f with H^T f = e_d
    """
    H_dd = np.asarray(H_dd, dtype=float)
    d = H_dd.shape[0]
    if H_dd.shape != (d, d):
        raise DimensionError(f"expected a square matrix, got {H_dd.shape}")
    e_d = np.zeros(d)
    e_d[-1] = 1.0
    try:
        lu, piv = scipy.linalg.lu_factor(H_dd.T, check_finite=True)
    except (ValueError, scipy.linalg.LinAlgError) as e:
        raise SingularMatrixError(f"cannot factor H_dd: {e}")
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrixError("H_dd is singular; reduce the polynomial degree")
    f = scipy.linalg.lu_solve((lu, piv), e_d)
    if not np.all(np.isfinite(f)):
        raise SingularMatrixError("H_dd is numerically singular; reduce the polynomial degree")
    return f


def order_eigenvalues(values: np.ndarray) -> np.ndarray:
    """
    Sort eigenvalues by ascending real part, ties by imaginary part, with
    each conjugate pair adjacent and the positive-imaginary member first

    Args:
        values: Complex array from a real matrix

    Returns:
        Sorted complex array with exact conjugate pairs
    """
    values = np.asarray(values, dtype=complex)
    units: List[Tuple[float, float, List[complex]]] = []
    remaining = list(range(len(values)))
    taken = set()
    for i in remaining:
        if i in taken:
            continue
        value = values[i]
        taken.add(i)
        if value.imag == 0.0:
            units.append((value.real, 0.0, [complex(value.real, 0.0)]))
            continue
        # Partner with the closest remaining conjugate and make the pair exact
        best, best_dist = -1, np.inf
        for j in remaining:
            if j in taken:
                continue
            dist = abs(values[j] - np.conj(value))
            if dist < best_dist:
                best, best_dist = j, dist
        if best < 0:
            units.append((value.real, value.imag, [value]))
            continue
        taken.add(best)
        re = 0.5 * (value.real + values[best].real)
        im = 0.5 * (abs(value.imag) + abs(values[best].imag))
        units.append((re, -im, [complex(re, im), complex(re, -im)]))
    units.sort(key=lambda unit: (unit[0], unit[1]))
    return np.array([v for unit in units for v in unit[2]], dtype=complex)


def eig_small_dense(M: np.ndarray, cap: Optional[int] = None) -> np.ndarray:
    """
    Eigenvalues of a small real nonsymmetric matrix

    LAPACK reduces to Hessenberg form and runs Francis double-shift QR in real
    arithmetic, so conjugate pairs come back exact.

    Args:
        M: Square real matrix, not modified
        cap: Largest accepted dimension (defaults to the configured cap)

    Returns:
        Eigenvalues in the order of order_eigenvalues
    """
    M = np.asarray(M, dtype=float)
    k = M.shape[0]
    if M.shape != (k, k):
        raise DimensionError(f"expected a square matrix, got {M.shape}")
    cap = config.small_eig_cap if cap is None else cap
    if k > cap:
        raise DimensionError(f"matrix of order {k} exceeds the small eigensolver cap {cap}")
    if k == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    try:
        values = scipy.linalg.eigvals(M, overwrite_a=False, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceError(f"QR iteration did not converge: {e}")
    return order_eigenvalues(values)
