import pytest
import numpy as np

from ppgmres.balance import (
    BalanceOutcome, CompositePolynomial, NewtonPolynomial, apply_balance, balance1, balance2, balance5,
    default_inner_degree, spline_definiteness_test,
)
from ppgmres.balance.newton import NewtonStep
from ppgmres.balance.spline import HermiteCubic
from ppgmres.errors import BalanceError
from ppgmres.polynomial import PreconditionerPolynomial

# Test data
LOPSIDED_ROOTS = [-2.0, 1.0, 3.0]


@pytest.fixture
def lopsided_poly():
    return PreconditionerPolynomial(LOPSIDED_ROOTS)


def test_balance1_zeroes_the_slope(lopsided_poly):
    outcome = balance1(lopsided_poly)

    assert outcome.method == 'b1'
    assert outcome.eta == pytest.approx(-1.2)
    assert outcome.polynomial.degree == 4
    assert abs(outcome.polynomial.slope_at_zero()) < 1e-12
    assert outcome.changed


def test_balance1_leaves_balanced_polynomial_alone():
    poly = PreconditionerPolynomial([-1.0, 1.0])
    outcome = balance1(poly)
    assert outcome.polynomial is poly
    assert outcome.eta is None
    assert not outcome.changed


def test_balance2_swaps_the_closest_root(lopsided_poly):
    outcome = balance2(lopsided_poly)

    assert outcome.removed == [1.0]
    assert outcome.eta == pytest.approx(6.0)
    assert outcome.polynomial.degree == 3
    assert abs(outcome.polynomial.slope_at_zero()) < 1e-12


def test_balance2_needs_degree_two():
    with pytest.raises(BalanceError):
        balance2(PreconditionerPolynomial([2.0]))


def test_balance5_equalizes_the_interval_ends(lopsided_poly):
    outcome = balance5(lopsided_poly, 0.5)
    phi = outcome.polynomial.phi_eval(np.array([0.5, -0.5]))

    assert outcome.polynomial.degree == 4
    assert phi[0] == pytest.approx(phi[1], rel=1e-12)


def test_balance5_default_interval_is_smallest_root(lopsided_poly):
    outcome = balance5(lopsided_poly)
    # pi(1) = 0 so the new root sits at -1
    assert outcome.eta == pytest.approx(-1.0)
    phi = outcome.polynomial.phi_eval(np.array([1.0, -1.0]))
    assert phi[0] == pytest.approx(phi[1])


def test_apply_balance_dispatch(lopsided_poly):
    assert apply_balance('none', lopsided_poly).polynomial is lopsided_poly
    assert apply_balance('b1', lopsided_poly).method == 'b1'
    with pytest.raises(BalanceError):
        apply_balance('b9', lopsided_poly)


def test_apply_balance_rejects_bad_degrees(lopsided_op, rhs_for):
    b = rhs_for(lopsided_op.n)
    with pytest.raises(BalanceError):
        apply_balance('b3', op=lopsided_op, b=b, degree=1)
    with pytest.raises(BalanceError):
        apply_balance('b4', op=lopsided_op, b=b, degree=12, inner_degree=5)


def test_balance3_newton_polynomial_is_flat_at_zero(lopsided_op, rhs_for):
    b = rhs_for(lopsided_op.n)
    outcome = apply_balance('b3', op=lopsided_op, b=b, degree=10)
    poly = outcome.polynomial

    assert isinstance(poly, NewtonPolynomial)
    assert poly.degree == 10
    assert poly.slope_at_zero() == 0.0
    assert poly.phi_eval(0.0)[0] == 0.0

    eigenvalues = lopsided_op.eigenvalues
    applied = poly.phi_apply(lopsided_op, np.ones(lopsided_op.n))
    expected = np.real(poly.phi_eval(eigenvalues))
    np.testing.assert_allclose(applied, expected, rtol=1e-8, atol=1e-8 * np.max(np.abs(expected)))


def test_balance4_composite_degree_and_application(lopsided_op, rhs_for):
    b = rhs_for(lopsided_op.n)
    outcome = apply_balance('b4', op=lopsided_op, b=b, degree=12)
    poly = outcome.polynomial

    assert isinstance(poly, CompositePolynomial)
    assert poly.degree == 12
    assert poly.inner.degree == 6
    assert poly.outer.degree == 2
    applied = poly.phi_apply(lopsided_op, np.ones(lopsided_op.n))
    expected = np.real(poly.phi_eval(lopsided_op.eigenvalues))
    np.testing.assert_allclose(applied, expected, rtol=1e-8, atol=1e-8 * np.max(np.abs(expected)))
    assert poly.to_dict()['kind'] == 'composite'


@pytest.mark.parametrize("total, inner", [(50, 10), (12, 6), (7, 7), (34, 2)])
def test_default_inner_degree(total, inner):
    assert default_inner_degree(total) == inner


def test_newton_pair_step_couples_the_scaled_column():
    # shifts 1 +- 2i, columns scaled by 2 and 3
    steps = [NewtonStep(shift=1.0, coupling=0.0, scale=2.0), NewtonStep(shift=1.0, coupling=4.0, scale=3.0)]
    poly = NewtonPolynomial(np.array([1 + 2j, 1 - 2j]), 1.0, steps, np.array([0.0, 0.0, 1.0]))
    z = np.array([2.0, -1.0, 0.5])

    third = ((z - 1.0) ** 2 * z / 2.0 + 4.0 * z) / 3.0
    np.testing.assert_allclose(np.real(poly.phi_eval(z)), z * third, rtol=1e-13)
    # same space as z |z - theta|^2 and z, not a multiple of the former
    pair = z * np.abs(z - (1 + 2j)) ** 2
    np.testing.assert_allclose(third, pair / 6.0 + 2.0 * z / 3.0, rtol=1e-13)
    assert poly.phi_eval(2.0)[0].real == pytest.approx(6.0)


def test_default_inner_degree_without_small_divisor():
    with pytest.raises(BalanceError):
        default_inner_degree(17 * 19)


def test_hermite_cubic_matches_end_data():
    spline = HermiteCubic.from_slopes(-1.0, 1.0, 2.0, -2.0)
    assert spline(-1.0) == pytest.approx(0.0)
    assert spline(1.0) == pytest.approx(0.0)
    assert spline.derivative(-1.0) == pytest.approx(2.0)
    assert spline.derivative(1.0) == pytest.approx(-2.0)
    assert spline.critical_points() == [pytest.approx(0.0)]


def test_spline_passes_when_bump_stays_below_one():
    # pi = 1 - z^2 peaks at exactly one
    verdict = spline_definiteness_test(PreconditionerPolynomial([-1.0, 1.0]))
    assert verdict.applicable
    assert verdict.passed
    assert verdict.intervals_checked == 1


def test_spline_flags_overshoot():
    verdict = spline_definiteness_test(PreconditionerPolynomial([-1.0, 1.0, 3.0]))

    assert not verdict.passed
    assert len(verdict.flagged) == 1
    flagged = verdict.flagged[0]
    assert (flagged.left, flagged.right) == (-1.0, 1.0)
    assert flagged.peak_value > 1.0
    assert verdict.to_dict()['verdict'] == 'fail'


def test_spline_inapplicable_without_two_real_roots():
    verdict = spline_definiteness_test(PreconditionerPolynomial([1.0 + 1.0j, 1.0 - 1.0j]))
    assert not verdict.applicable
    assert verdict.passed


def test_balance_outcome_dict(lopsided_poly):
    data = balance2(lopsided_poly).to_dict()
    assert data['method'] == 'b2'
    assert data['removed'] == [[1.0, 0.0]]
    assert data['degree'] == 3
    assert BalanceOutcome(lopsided_poly, 'none').to_dict()['spline'] is None


def test_balance1_on_four_real_roots():
    outcome = balance1(PreconditionerPolynomial([-3.0, -1.0, 2.0, 4.0]))
    assert outcome.eta == pytest.approx(12.0 / 7.0, rel=1e-14)


def test_balance5_single_root():
    outcome = balance5(PreconditionerPolynomial([2.0]), a=1.0)
    poly = outcome.polynomial

    assert outcome.eta == pytest.approx(-2.0)
    values = np.real(poly.phi_eval(np.array([1.0, -1.0])))
    assert values[0] == pytest.approx(values[1], abs=1e-14)


def test_random_root_sets_balance_exactly():
    rng = np.random.default_rng(11)
    for _ in range(100):
        count = int(rng.integers(1, 6))
        real = rng.uniform(0.1, 10.0, size=count) * rng.choice([-1.0, 1.0], size=count)
        pairs = rng.uniform(-5.0, 5.0, size=rng.integers(0, 3)) + 1j * rng.uniform(0.5, 3.0)
        roots = np.concatenate([real, pairs, np.conj(pairs)])
        poly = PreconditionerPolynomial(roots)
        scale = float(np.sum(np.abs(1.0 / roots)))
        for method in (balance1, balance2):
            if method is balance2 and poly.degree < 2:
                continue
            balanced = method(poly).polynomial
            assert abs(balanced.slope_at_zero()) <= 1e-12 * scale
