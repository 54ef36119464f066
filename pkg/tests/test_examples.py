"""
Reproductions on the example matrices, mostly n = 5000. Run with -m slow.
"""

import pytest
import numpy as np

from ppgmres.analysis import IntervalSpectrum, estimate_improvement
from ppgmres.balance import balance1
from ppgmres.drivers import EigenConfig, PPGmresConfig, pp_arnoldi_interior, pp_gmres
from ppgmres.operators import diagonal_operator, spectrum_image
from ppgmres.operators.presets import make_preset
from ppgmres.polynomial import gmres_polynomial
from ppgmres.utils import STREAM_POLYNOMIAL, make_generator, random_unit_vector

SEEDS = [1, 2, 3, 4, 5]

# Matvecs of PP(50)-GMRES(50) with Balance Method 1 on Example 1
EXAMPLE1_MATVECS = 95_300


@pytest.mark.slow
def test_example1_balanced_ppgmres_converges(rhs_for):
    op = make_preset('example1')
    hits = 0
    for seed in SEEDS:
        settings = PPGmresConfig(d=50, m=50, balance='b1', tol=1e-10, stability_enabled=False, seed=seed)
        _, report = pp_gmres(op, rhs_for(op.n, seed), settings)
        if report.converged and report.matvecs <= 2 * EXAMPLE1_MATVECS:
            hits += 1
    assert hits >= 4


@pytest.mark.slow
def test_example1_plain_gmres_is_far_slower(rhs_for):
    op = make_preset('example1')
    budget = 20 * EXAMPLE1_MATVECS
    _, report = pp_gmres(op, rhs_for(op.n), PPGmresConfig(d=1, m=50, tol=1e-10, max_mvp=budget))
    assert not report.converged or report.matvecs > budget


@pytest.mark.slow
def test_example1_degree_150_balancing_removes_negative_images():
    op = make_preset('example1')
    hits = 0
    for seed in SEEDS:
        v0 = random_unit_vector(op.n, make_generator(seed, STREAM_POLYNOMIAL))
        poly, _ = gmres_polynomial(op, 150, v0)
        plain = spectrum_image(poly, op=op)
        balanced = spectrum_image(balance1(poly).polynomial, op=op)
        if np.min(plain.real) < 0.0 and np.min(balanced.real) > 0.0:
            hits += 1
    assert hits >= 4


@pytest.mark.slow
def test_example4_balancing_slows_convergence(rhs_for):
    op = make_preset('example4')
    hits = 0
    for seed in SEEDS:
        b = rhs_for(op.n, seed)
        _, plain = pp_gmres(op, b, PPGmresConfig(d=50, m=50, tol=1e-10, stability_enabled=False, seed=seed))
        if not plain.converged or len(plain.cycles) > 30:
            continue
        budget = 50 * plain.matvecs
        settings = PPGmresConfig(d=50, m=50, tol=1e-10, balance='b1', stability_enabled=False, seed=seed, max_mvp=budget)
        _, balanced = pp_gmres(op, b, settings)
        if not balanced.converged:
            hits += 1
    assert hits >= 4


@pytest.mark.slow
def test_example7_corrections_recover_accuracy(rhs_for):
    op = make_preset('example7')
    hits = 0
    for seed in SEEDS:
        b = rhs_for(op.n, seed)
        _, report = pp_gmres(op, b, PPGmresConfig(d=75, m=50, tol=1e-10, seed=seed))
        before = report.extra['residual_before_corrections']
        corrections = report.extra['corrections']
        if corrections is None:
            continue
        after = corrections['residual_after_both']
        if before > 1e-2 and after <= 1e-9 and before / after >= 1e10:
            hits += 1
    assert hits >= 3


@pytest.mark.slow
def test_example9_interior_eigenvalues():
    op = make_preset('example9')
    hits = 0
    for seed in SEEDS:
        balanced = pp_arnoldi_interior(op, EigenConfig(
            sigma=500.33, nev=30, d=50, m=80, k=40, tol=1e-8, balance='b1', seed=seed,
        ))
        plain = pp_arnoldi_interior(op, EigenConfig(
            sigma=500.33, nev=30, d=50, m=80, k=40, tol=1e-8, balance='none', seed=seed,
        ))
        values = np.array([pair.value.real for pair in balanced.pairs])
        unbalanced = np.array([pair.value.real for pair in plain.pairs])
        if len(values) == 30 and np.all((values >= 495) & (values <= 506)) and np.min(unbalanced) < 490:
            hits += 1
    assert hits >= 3


@pytest.mark.slow
def test_measured_speedup_tracks_the_estimate(rhs_for):
    spectrum = np.concatenate([np.arange(-10.0, 0.0), np.arange(1.0, 491.0)])
    intervals = IntervalSpectrum(u=-10, v=-1, a=1, b=490)
    low, high = 6, 18
    expected = (estimate_improvement(intervals, high, 12).speedup_matvecs
                / estimate_improvement(intervals, low, 12).speedup_matvecs)
    hits = 0
    for seed in SEEDS:
        b = rhs_for(len(spectrum), seed)
        counts = []
        for d in (low, high):
            op = diagonal_operator(spectrum, name="lopsided500")
            _, report = pp_gmres(op, b, PPGmresConfig(d=d, m=12, tol=1e-8, balance='b2', seed=seed))
            counts.append(report.matvecs if report.converged else None)
        if None in counts:
            continue
        measured = counts[0] / counts[1]
        if measured > 1.0 and expected / 4.0 <= measured <= 4.0 * expected:
            hits += 1
    assert expected > 1.0
    assert hits >= 3


def test_estimated_speedup_grows_with_degree():
    spectrum = IntervalSpectrum(u=-100, v=-1, a=1, b=4900)
    speedups = [estimate_improvement(spectrum, d, 50).speedup_matvecs for d in (3, 15, 27, 51)]

    assert all(later >= earlier for earlier, later in zip(speedups, speedups[1:]))
    assert all(1.0 <= s <= d for s, d in zip(speedups, (3, 15, 27, 51)))
