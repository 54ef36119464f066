"""
Hermite cubic spline screen for pi staying below one between real roots
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..polynomial import Polynomial

logger = logging.getLogger(__name__)

VERDICT_PASS = 'pass'
VERDICT_FAIL = 'fail'
VERDICT_INAPPLICABLE = 'inapplicable'


@dataclass
class HermiteCubic:
    """C(x) = a t^3/6 + b t^2/2 + c t with t = x - left, zero at both ends"""
    left: float
    right: float
    a: float
    b: float
    c: float

    @classmethod
    def from_slopes(cls, left: float, right: float, slope_left: float, slope_right: float) -> 'HermiteCubic':
        """Cubic vanishing at both ends with the given end slopes"""
        h = right - left
        a = 6.0 * (slope_right + slope_left) / h ** 2
        b = -(2.0 * slope_right + 4.0 * slope_left) / h
        return cls(left, right, a, b, slope_left)

    def __call__(self, x):
        t = np.asarray(x, dtype=float) - self.left
        return self.a * t ** 3 / 6.0 + self.b * t ** 2 / 2.0 + self.c * t

    def derivative(self, x):
        """C'(x)"""
        t = np.asarray(x, dtype=float) - self.left
        return self.a * t ** 2 / 2.0 + self.b * t + self.c

    def critical_points(self) -> List[float]:
        """Zeros of C' strictly inside (left, right)"""
        h = self.right - self.left
        if self.a == 0.0:
            offsets = [] if self.b == 0.0 else [-self.c / self.b]
        else:
            disc = max(self.b * self.b - 2.0 * self.a * self.c, 0.0)
            root = np.sqrt(disc)
            offsets = [(-self.b + root) / self.a, (-self.b - root) / self.a]
        return [self.left + t for t in offsets if 0.0 < t < h]


@dataclass
class FlaggedInterval:
    """An interval where the spline bump exceeds one"""
    left: float
    right: float
    peak_at: float
    peak_value: float

    def to_dict(self) -> Dict[str, float]:
        """Convert to dictionary"""
        return {'left': self.left, 'right': self.right, 'peak_at': self.peak_at, 'peak_value': self.peak_value}


@dataclass
class SplineVerdict:
    """Outcome of the spline definiteness screen"""
    verdict: str
    flagged: List[FlaggedInterval] = field(default_factory=list)
    intervals_checked: int = 0

    @property
    def passed(self) -> bool:
        """True unless some interval was flagged"""
        return self.verdict != VERDICT_FAIL

    @property
    def applicable(self) -> bool:
        """False when the polynomial has fewer than two real roots"""
        return self.verdict != VERDICT_INAPPLICABLE

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'verdict': self.verdict,
            'intervals_checked': self.intervals_checked,
            'flagged': [interval.to_dict() for interval in self.flagged],
        }


def _ritz_guard(spline: HermiteCubic, peak: float, r_min: Optional[float], r_max: Optional[float]) -> bool:
    """Whether the extreme Ritz values leave the bump unexplained"""
    if r_min is None or r_max is None:
        return True
    near_min = peak <= r_min <= spline.right and spline(r_min) > 1.0
    near_max = spline.left <= r_max <= peak and spline(r_max) > 1.0
    outside = not (peak < r_min < spline.right) and not (spline.left < r_max < peak)
    return bool(near_min or near_max or outside)


def spline_definiteness_test(poly: Polynomial, ritz: Optional[Sequence[complex]] = None) -> SplineVerdict:
    """
    Screen pi between consecutive real roots with Hermite cubics

    On each interval (theta_j, theta_{j+1}) with pi'(theta_j) >= 0 (and not
    both end slopes zero) the cubic matching pi's zeros and slopes is built;
    the interval is flagged when the cubic's interior maximum exceeds one and
    the Ritz-value guard holds.

    Args:
        poly: Root-form polynomial
        ritz: Ritz values of the same Krylov space (guard skipped when None)

    Returns:
        SplineVerdict
    """
    roots = np.asarray(getattr(poly, 'roots', []), dtype=complex)
    real_roots = np.unique(roots[roots.imag == 0.0].real)
    if len(real_roots) < 2:
        return SplineVerdict(verdict=VERDICT_INAPPLICABLE)

    r_min = r_max = None
    if ritz is not None and len(ritz) > 0:
        ritz_real = np.real(np.asarray(ritz, dtype=complex))
        r_min, r_max = float(ritz_real.min()), float(ritz_real.max())

    slopes = np.real(poly.pi_deriv(real_roots))
    flagged: List[FlaggedInterval] = []
    checked = 0
    for j in range(len(real_roots) - 1):
        left_slope, right_slope = slopes[j], slopes[j + 1]
        if left_slope < 0.0 or (left_slope == 0.0 and right_slope == 0.0):
            continue
        checked += 1
        spline = HermiteCubic.from_slopes(real_roots[j], real_roots[j + 1], left_slope, right_slope)
        candidates = spline.critical_points()
        if not candidates:
            continue
        peak = max(candidates, key=lambda x: float(spline(x)))
        value = float(spline(peak))
        if value > 1.0 and _ritz_guard(spline, peak, r_min, r_max):
            flagged.append(FlaggedInterval(float(real_roots[j]), float(real_roots[j + 1]), float(peak), value))
            logger.debug(f"Spline flags ({real_roots[j]:.6g}, {real_roots[j + 1]:.6g}): peak {value:.3g}")

    verdict = VERDICT_FAIL if flagged else VERDICT_PASS
    if flagged:
        logger.warning(f"Spline test rejects the polynomial: {len(flagged)} interval(s) where pi may exceed one")
    return SplineVerdict(verdict=verdict, flagged=flagged, intervals_checked=checked)
