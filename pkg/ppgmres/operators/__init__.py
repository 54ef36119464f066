"""
Linear operators: the matvec abstraction with work counters, the synthetic
test-matrix generators and spectrum images of polynomials.
"""

import logging
import threading
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
import scipy.sparse

from ..errors import DimensionError, UnknownSpectrumError
from ..utils import STREAM_GENERATOR, make_generator
from .models import SparseMatrix

logger = logging.getLogger(__name__)


class WorkCounter:
    """Thread-safe tally of matvecs, length-n vector operations and dot products"""

    def __init__(self):
        self._lock = threading.Lock()
        self.matvecs = 0
        self.vector_ops = 0
        self.dot_products = 0

    def add(self, matvecs: int = 0, vector_ops: int = 0, dot_products: int = 0) -> None:
        """Record work"""
        with self._lock:
            self.matvecs += matvecs
            self.vector_ops += vector_ops
            self.dot_products += dot_products

    def snapshot(self) -> Dict[str, int]:
        """Current totals"""
        with self._lock:
            return {
                'matvecs': self.matvecs,
                'vector_ops': self.vector_ops,
                'dot_products': self.dot_products,
            }


class LinearOperator:
    """
    A square operator known only through y = A x.

    Primitive operators (generators, files) add one to the shared counter's
    matvec total per application. Composed operators (shifts, polynomials of
    an operator) share the counter of the operator they wrap and are charged
    through the primitive matvecs they perform.
    """

    def __init__(
        self,
        n: int,
        matvec: Callable[[np.ndarray], np.ndarray],
        *,
        name: str = "operator",
        eigenvalues: Optional[Sequence[complex]] = None,
        counter: Optional[WorkCounter] = None,
        primitive: bool = True,
        matrix: Optional[scipy.sparse.spmatrix] = None,
        is_real: bool = True,
    ):
        """
        Args:
            n: Dimension
            matvec: Function computing A x
            name: Label used in logs and reports
            eigenvalues: Exact spectrum when known (triangular/diagonal generators)
            counter: Shared work counter (a fresh one when omitted)
            primitive: Whether each application is one matvec with A
            matrix: Explicit sparse matrix backing the operator, if any
            is_real: Whether the operator maps real vectors to real vectors
        """
        if n < 1:
            raise DimensionError(f"dimension must be positive, got {n}")
        self.n = int(n)
        self._matvec = matvec
        self.name = name
        self.eigenvalues = None if eigenvalues is None else np.asarray(eigenvalues, dtype=complex)
        if self.eigenvalues is not None and len(self.eigenvalues) != self.n:
            raise DimensionError(f"{len(self.eigenvalues)} eigenvalues for dimension {self.n}")
        self.counter = counter if counter is not None else WorkCounter()
        self.primitive = primitive
        self.matrix = matrix
        self.is_real = is_real
        self._lock = threading.Lock()
        self.applications = 0

    @property
    def has_known_spectrum(self) -> bool:
        """True when the exact eigenvalues are recorded"""
        return self.eigenvalues is not None

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """
        Apply the operator

        Args:
            x: Vector of length n (real or complex)

        Returns:
            A x
        """
        if x.shape != (self.n,):
            raise DimensionError(f"{self.name}: expected a vector of length {self.n}, got shape {x.shape}")
        y = self._matvec(x)
        with self._lock:
            self.applications += 1
        if self.primitive:
            self.counter.add(matvecs=1)
        return y

    def to_dense(self) -> np.ndarray:
        """
        Assemble the explicit matrix column by column (small n only; not counted)

        Returns:
            n x n array
        """
        if self.matrix is not None:
            return np.asarray(self.matrix.todense())
        columns = []
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = 1.0
            columns.append(self._matvec(e))
        return np.column_stack(columns)

    def to_dict(self) -> Dict[str, Any]:
        """Summary for reports"""
        return {
            'name': self.name,
            'n': self.n,
            'known_spectrum': self.has_known_spectrum,
            'nnz': None if self.matrix is None else int(self.matrix.nnz),
        }


def sparse_operator(matrix, name: Optional[str] = None, eigenvalues=None) -> LinearOperator:
    """
    Wrap an explicit sparse (or dense) matrix as an operator

    Args:
        matrix: SparseMatrix, scipy sparse matrix or 2-D array
        name: Label
        eigenvalues: Known spectrum, if any

    Returns:
        Primitive LinearOperator
    """
    if isinstance(matrix, SparseMatrix):
        name = name or matrix.name
        matrix = matrix.csr
    csr = scipy.sparse.csr_matrix(matrix)
    rows, cols = csr.shape
    if rows != cols:
        raise DimensionError(f"operator must be square, got {rows} x {cols}")
    return LinearOperator(
        rows,
        csr.dot,
        name=name or "sparse",
        eigenvalues=eigenvalues,
        matrix=csr,
        is_real=not np.iscomplexobj(csr.data),
    )


def shifted_operator(op: LinearOperator, sigma: float) -> LinearOperator:
    """
    The operator A - sigma I, charged one matvec of A per application

    Args:
        op: Base operator
        sigma: Real shift

    Returns:
        Composed LinearOperator sharing the base counter
    """
    eigenvalues = None if op.eigenvalues is None else op.eigenvalues - sigma

    def matvec(x):
        y = op.matvec(x) - sigma * x
        op.counter.add(vector_ops=1)
        return y

    return LinearOperator(
        op.n, matvec, name=f"{op.name}-shift({sigma:g})", eigenvalues=eigenvalues,
        counter=op.counter, primitive=False, is_real=op.is_real,
    )


def bidiagonal_operator(diag: Sequence[float], superdiag_value: float, name: str = "bidiagonal") -> LinearOperator:
    """
    Upper-bidiagonal operator with a constant superdiagonal

    Args:
        diag: Diagonal entries (these are the eigenvalues)
        superdiag_value: Value on every superdiagonal position

    Returns:
        LinearOperator with known spectrum
    """
    diag = np.asarray(diag, dtype=float)
    n = len(diag)
    if n < 1:
        raise DimensionError("bidiagonal operator needs n >= 1")
    if n == 1:
        matrix = scipy.sparse.diags([diag], [0], format='csr')
    else:
        matrix = scipy.sparse.diags([diag, np.full(n - 1, float(superdiag_value))], [0, 1], format='csr')
    return sparse_operator(matrix, name=name, eigenvalues=diag)


def diagonal_operator(diag: Sequence[float], name: str = "diagonal") -> LinearOperator:
    """
    Diagonal operator

    Args:
        diag: Diagonal entries

    Returns:
        LinearOperator with known spectrum
    """
    diag = np.asarray(diag, dtype=float)
    if len(diag) < 1:
        raise DimensionError("diagonal operator needs n >= 1")
    matrix = scipy.sparse.diags([diag], [0], format='csr')
    return sparse_operator(matrix, name=name, eigenvalues=diag)


def ray_spectrum_values(rays: int, total_angle_deg: float, radial_points: int) -> np.ndarray:
    """
    Eigenvalues equally spaced along rays that fan out symmetrically about the
    positive real axis

    Args:
        rays: Number of rays
        total_angle_deg: Angle swept from the first ray to the last
        radial_points: Eigenvalues per ray, at radii 1, 2, ..., radial_points

    Returns:
        Complex array of length rays * radial_points, ray by ray
    """
    if rays < 1 or radial_points < 1:
        raise DimensionError("rays and radial_points must be positive")
    if rays == 1:
        angles = np.zeros(1)
    else:
        half = np.deg2rad(total_angle_deg) / 2.0
        angles = np.linspace(-half, half, rays)
        # Mirror so rays k and rays-1-k are exact conjugates
        angles[rays // 2 + rays % 2:] = -angles[:rays // 2][::-1]
    radii = np.arange(1, radial_points + 1, dtype=float)
    values = []
    for angle in angles:
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        if abs(sin_a) < 1e-15:
            sin_a = 0.0
        for r in radii:
            values.append(complex(r * cos_a, r * sin_a))
    return np.array(values, dtype=complex)


def ray_spectrum_operator(
    n: int,
    rays: int,
    total_angle_deg: float,
    radial_points: int,
    seed: int = 0,
    name: Optional[str] = None,
) -> LinearOperator:
    """
    Real block-diagonal operator whose spectrum lies on rays around the origin

    Each conjugate pair becomes a 2 x 2 rotation-scaling block. Dimensions not
    used by the ray eigenvalues are filled with distinct real eigenvalues
    spread evenly over the open interval (1, max(radial_points, 2)). The seed
    permutes the block order only.

    Args:
        n: Dimension
        rays: Number of rays
        total_angle_deg: Angle swept by the rays
        radial_points: Eigenvalues per ray
        seed: Seed for the block permutation

    Returns:
        LinearOperator with known spectrum
    """
    values = ray_spectrum_values(rays, total_angle_deg, radial_points)
    if len(values) > n:
        raise DimensionError(f"{len(values)} ray eigenvalues do not fit in dimension {n}")
    fill = n - len(values)
    top = float(max(radial_points, 2))
    filler = (1.0 + (top - 1.0) * (np.arange(fill) + 0.5) / max(fill, 1)).astype(complex)
    values = np.concatenate([values, filler])

    # Group into real 1x1 and 2x2 blocks
    blocks = []
    used = np.zeros(len(values), dtype=bool)
    for i, value in enumerate(values):
        if used[i]:
            continue
        used[i] = True
        if value.imag == 0.0:
            blocks.append(np.array([[value.real]]))
            continue
        partner = np.flatnonzero(~used & (values == np.conj(value)))
        if len(partner) == 0:
            raise DimensionError(f"eigenvalue {value} has no conjugate partner")
        used[partner[0]] = True
        a, b = value.real, abs(value.imag)
        blocks.append(np.array([[a, b], [-b, a]]))

    rng = make_generator(seed, STREAM_GENERATOR)
    order = rng.permutation(len(blocks))
    blocks = [blocks[i] for i in order]
    matrix = scipy.sparse.block_diag(blocks, format='csr')
    eigenvalues = []
    for block in blocks:
        if block.shape[0] == 1:
            eigenvalues.append(complex(block[0, 0]))
        else:
            eigenvalues.extend([complex(block[0, 0], block[0, 1]), complex(block[0, 0], -block[0, 1])])
    label = name or f"rays{rays}x{radial_points}@{total_angle_deg:g}"
    logger.info(f"Built ray-spectrum operator {label}: n={n}, {len(blocks)} blocks")
    return sparse_operator(matrix, name=label, eigenvalues=eigenvalues)


def hatano_nelson_operator(
    n: int,
    gamma: float,
    d: Optional[Sequence[float]] = None,
    seed: int = 0,
    periodic: bool = False,
) -> LinearOperator:
    """
    Hatano-Nelson non-Hermitian tridiagonal operator

    Subdiagonal couplings are exp(-gamma), superdiagonal couplings exp(gamma).
    The open chain is similar to a symmetric matrix and has a real spectrum;
    periodic=True (n >= 3) adds the ring-closing corner entries, which make the
    spectrum complex. The `hatano` preset uses the periodic ring.

    Args:
        n: Dimension, at least 2
        gamma: Non-Hermiticity parameter
        d: Diagonal disorder; drawn as 0.9 * 4 * uniform(0, 1) when omitted
        seed: Seed for the disorder draw
        periodic: Add the ring-closing corner entries

    Returns:
        LinearOperator (spectrum not recorded)
    """
    if n < 2:
        raise DimensionError("Hatano-Nelson operator needs n >= 2")
    if d is None:
        rng = make_generator(seed, STREAM_GENERATOR)
        d = 0.9 * 4.0 * rng.uniform(0.0, 1.0, n)
    d = np.asarray(d, dtype=float)
    if len(d) != n:
        raise DimensionError(f"disorder has length {len(d)}, expected {n}")
    lower = np.full(n - 1, np.exp(-gamma))
    upper = np.full(n - 1, np.exp(gamma))
    matrix = scipy.sparse.diags([lower, d, upper], [-1, 0, 1], format='lil')
    if periodic and n >= 3:
        matrix[0, n - 1] = np.exp(-gamma)
        matrix[n - 1, 0] = np.exp(gamma)
    return sparse_operator(matrix.tocsr(), name=f"hatano-nelson(n={n},gamma={gamma:g})")


def spectrum_image(poly, eigenvalues=None, op: Optional[LinearOperator] = None) -> np.ndarray:
    """
    Values of the preconditioned spectrum phi(lambda_i)

    Args:
        poly: Any polynomial with a phi_eval method
        eigenvalues: Eigenvalues to map (taken from op when omitted)
        op: Operator with known spectrum

    Returns:
        Complex array phi(lambda_i)
    """
    if eigenvalues is None:
        if op is None or not op.has_known_spectrum:
            name = "operator" if op is None else op.name
            raise UnknownSpectrumError(f"{name} has no known spectrum")
        eigenvalues = op.eigenvalues
    return np.asarray(poly.phi_eval(np.asarray(eigenvalues, dtype=complex)), dtype=complex)
