"""
Convergence estimates from a cubic map composed with Chebyshev polynomials,
and samplings of preconditioner polynomials for plotting.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..operators import LinearOperator, spectrum_image
from .models import (
    BRANCH_GAMMA2, BRANCH_U, CubicMap, ImprovementEstimate, IntervalSpectrum, PolynomialSamples,
)

logger = logging.getLogger(__name__)

# |u - (a + b + v - 2 gamma2)| below this fraction of |u| makes the branch choice marginal
MARGINAL_RTOL = 1e-9


def cubic_map(spectrum: IntervalSpectrum, branch: Optional[str] = None) -> CubicMap:
    """
    Build the cubic f with f(v) = f(a) = f(b) = 1 scaled so the spectrum lands in [-1, 1]

    Args:
        spectrum: The two intervals
        branch: Force BRANCH_U or BRANCH_GAMMA2 instead of choosing by u

    Returns:
        CubicMap
    """
    u, v, a, b = spectrum.u, spectrum.v, spectrum.a, spectrum.b
    s = a + b + v
    root = math.sqrt(a * a + b * b + v * v - (a * b + a * v + b * v))
    gamma1 = (s - root) / 3.0
    gamma2 = (s + root) / 3.0
    mirror = s - 2.0 * gamma2
    if branch is None:
        branch = BRANCH_U if u <= mirror else BRANCH_GAMMA2
    elif branch not in (BRANCH_U, BRANCH_GAMMA2):
        raise ValueError(f"unknown branch {branch!r}")
    xi = u if branch == BRANCH_U else gamma2
    h_xi = (xi - a) * (xi - b) * (xi - v)
    # f(0) - 1 = -2 h(0) / h(xi) with h(0) = -a b v
    delta = 2.0 * a * b * v / h_xi
    marginal = abs(u - mirror) < MARGINAL_RTOL * abs(u)
    return CubicMap(spectrum, gamma1, gamma2, branch, xi, delta, marginal)


def chebyshev_t(n: int, x) -> np.ndarray:
    """T_n(x) by the three-term recurrence"""
    if n < 0:
        raise ValueError(f"Chebyshev degree must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    previous, current = np.ones_like(x), x.copy()
    if n == 0:
        return previous
    for _ in range(n - 1):
        previous, current = current, 2.0 * x * current - previous
    return current


def _acosh(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    t = x - 1.0
    return np.log1p(t + np.sqrt(t * (x + 1.0)))


def log_chebyshev_t(n: float, x) -> np.ndarray:
    """
    log T_n(x) = log cosh(n acosh x) for x >= 1; n may be fractional

    Accurate for x close to one and for values that would overflow.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 1.0):
        raise ValueError("log_chebyshev_t needs arguments >= 1")
    t = n * _acosh(x)
    small = np.minimum(t, 20.0)
    return np.where(
        t < 20.0,
        np.log1p(2.0 * np.sinh(0.5 * small) ** 2),
        t + np.log1p(np.exp(-2.0 * t)) - math.log(2.0),
    )


def _estimate(cubic: CubicMap, d: int, m: int) -> ImprovementEstimate:
    if cubic.delta <= 0:
        raise ValueError(f"cubic model gives delta = {cubic.delta:.3e} <= 0; the interval model does not apply")
    x = 1.0 + cubic.delta
    # T_m(T_{d/3}(x)) = T_{m d / 3}(x)
    log_gmres = float(log_chebyshev_t(m / 3.0, x))
    log_pp = float(log_chebyshev_t(m * d / 3.0, x))
    return ImprovementEstimate(
        d=d,
        m=m,
        cubic=cubic,
        per_cycle_gmres=math.exp(-log_gmres),
        per_cycle_ppgmres=math.exp(-log_pp),
        speedup_matvecs=log_pp / (d * log_gmres),
        fractional_degree=(d % 3 != 0 or m % 3 != 0),
    )


def estimate_improvement(spectrum: IntervalSpectrum, d: int, m: int) -> ImprovementEstimate:
    """
    Residual reduction per cycle of GMRES(m) and PP(d)-GMRES(m) and the matvec speedup

    GMRES(m) is modeled by T_{m/3}(f) and PP(d)-GMRES(m) by T_m(T_{d/3}(f)),
    both normalized at the origin. When the branch choice of the cubic is
    marginal the estimate for the other branch is attached.

    Args:
        spectrum: The two intervals
        d: Preconditioner degree
        m: Restart length

    Returns:
        ImprovementEstimate
    """
    if d < 1 or m < 1:
        raise ValueError(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    cubic = cubic_map(spectrum)
    estimate = _estimate(cubic, d, m)
    if estimate.fractional_degree:
        logger.info(f"d={d}, m={m} not both divisible by 3; using fractional Chebyshev degrees")
    if cubic.marginal:
        other = BRANCH_GAMMA2 if cubic.branch == BRANCH_U else BRANCH_U
        estimate.alternate = _estimate(cubic_map(spectrum, other), d, m)
        logger.warning(f"Branch choice is marginal at u={spectrum.u:g}; reporting both branches")
    logger.info(
        f"Estimate: delta {cubic.delta:.3e}, GMRES({m}) factor {estimate.per_cycle_gmres:.6g}, "
        f"PP({d})-GMRES({m}) factor {estimate.per_cycle_ppgmres:.6g}, speedup {estimate.speedup_matvecs:.2f}"
    )
    return estimate


def parse_range(text: str) -> np.ndarray:
    """
    Parse 'start:stop:step' into evenly spaced points including both ends

    A single number gives one point.
    """
    parts = text.split(':')
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"cannot parse range {text!r}; expected start:stop:step")
    if len(values) == 1:
        return np.array(values)
    if len(values) != 3:
        raise ValueError(f"cannot parse range {text!r}; expected start:stop:step")
    start, stop, step = values
    if step <= 0 or stop < start:
        raise ValueError(f"range {text!r} needs start <= stop and a positive step")
    count = int(round((stop - start) / step)) + 1
    return np.linspace(start, stop, count)


def sample_polynomial(poly, x: Sequence[float], y: Sequence[float]) -> PolynomialSamples:
    """
    Evaluate phi on the grid x + i y, one row per y value

    Args:
        poly: Any polynomial with phi_eval
        x: Real parts
        y: Imaginary parts

    Returns:
        PolynomialSamples with values of shape (len(y), len(x))
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    values = np.empty((len(y), len(x)), dtype=complex)
    for i, yi in enumerate(y):
        values[i] = poly.phi_eval(x + 1j * yi)
    return PolynomialSamples(x=x, y=y, values=values, meta={'degree': poly.degree})


def sample_real_line(poly, x: Sequence[float]) -> PolynomialSamples:
    """phi along the real axis"""
    return sample_polynomial(poly, x, [0.0])


def write_spectrum_image(
    path: Union[str, Path],
    poly,
    eigenvalues: Optional[Sequence[complex]] = None,
    op: Optional[LinearOperator] = None,
) -> Path:
    """
    Write lambda and phi(lambda) for every eigenvalue

    Args:
        path: CSV destination
        poly: Any polynomial with phi_eval
        eigenvalues: Eigenvalues (taken from op when omitted)
        op: Operator with known spectrum

    Returns:
        The path written
    """
    if eigenvalues is None and op is not None:
        eigenvalues = op.eigenvalues
    images = spectrum_image(poly, eigenvalues, op)
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['re_lambda', 'im_lambda', 're_phi', 'im_phi'])
        for lam, value in zip(eigenvalues, images):
            writer.writerow([repr(float(lam.real)), repr(float(lam.imag)), repr(float(value.real)), repr(float(value.imag))])
    negative = int(np.sum((np.abs(images.imag) == 0.0) & (images.real < 0.0)))
    if negative:
        logger.warning(f"{negative} eigenvalue(s) map to negative values of phi")
    return path


__all__ = [
    'BRANCH_GAMMA2',
    'BRANCH_U',
    'CubicMap',
    'ImprovementEstimate',
    'IntervalSpectrum',
    'PolynomialSamples',
    'chebyshev_t',
    'cubic_map',
    'estimate_improvement',
    'log_chebyshev_t',
    'parse_range',
    'sample_polynomial',
    'sample_real_line',
    'write_spectrum_image',
]
