import pytest
import numpy as np
from pydantic import ValidationError

from ppgmres.errors import DegreeTooHighError
from ppgmres.operators import diagonal_operator
from ppgmres.polynomial import PreconditionerPolynomial
from ppgmres.polynomial.models import PofReport
from ppgmres.stability import (
    apply_corrections, classify_sides, deflation_vectors, galerkin_deflation, gmres_correction,
    stabilize_indefinite,
)
from ppgmres.stability.models import SIDE_LEFT, SIDE_RIGHT, CorrectionReport, StabilityConfig

# Test data: roots equal to the eigenvalues make every harmonic Ritz vector exact
LARGER_RIGHT = [-1.0, 1.0, 2.0, 3.0, 1000.0]
SMALL_SIDE_CANDIDATE = [-1000.0, 1.0, 2.0, 3.0, 2000.0]


def _report(roots, levels):
    roots = np.asarray(roots, dtype=complex)
    return PofReport(roots=roots, multiplicities=np.ones(len(roots), dtype=int), log10_pof=np.asarray(levels, dtype=float))


def _root_index(poly, value):
    return int(np.flatnonzero(poly.roots == value)[0])


def test_stability_config_validation():
    with pytest.raises(ValidationError):
        StabilityConfig(pofcutoff_log10=-1.0)
    with pytest.raises(ValidationError):
        StabilityConfig(unknown_threshold=1.0)


def test_classify_sides_finds_larger_side():
    roots = [-1.0, -2.0, 5.0, 10.0]
    classification = classify_sides(roots, _report(roots, [0, 0, 0, 0]), StabilityConfig())

    assert classification.larger_side == SIDE_RIGHT
    assert classification.sides == [SIDE_LEFT, SIDE_LEFT, SIDE_RIGHT, SIDE_RIGHT]
    assert not classification.degenerate
    assert classification.is_larger(3.0 + 1.0j)


def test_classify_sides_one_sided_spectrum_is_degenerate():
    roots = [1.0, 5.0]
    classification = classify_sides(roots, _report(roots, [0, 0]), StabilityConfig())
    assert classification.degenerate
    assert classification.larger_side == SIDE_RIGHT


def test_spurious_roots_do_not_decide_the_side():
    roots = [-20.0, 1.0, 5.0]
    classification = classify_sides(
        roots, _report(roots, [10.0, 0.0, 0.0]), StabilityConfig(), residuals=[1.0, None, None],
    )

    assert classification.spurious == [True, False, False]
    assert classification.larger_side == SIDE_RIGHT
    assert classification.degenerate


def test_ritz_values_can_decide_the_side():
    roots = [-1.0, 5.0]
    classification = classify_sides(roots, _report(roots, [0, 0]), StabilityConfig(), ritz=[-30.0, 4.0])
    assert classification.larger_side == SIDE_LEFT


def test_copies_go_to_the_larger_side_only():
    op = diagonal_operator(LARGER_RIGHT)
    poly = PreconditionerPolynomial(LARGER_RIGHT)

    outcome = stabilize_indefinite(poly, op, np.ones(op.n), StabilityConfig())

    assert outcome.classification.larger_side == SIDE_RIGHT
    assert outcome.copies_added == 1
    assert outcome.polynomial.degree == 6
    augmented = outcome.polynomial
    assert augmented.added_copies[_root_index(augmented, 1000.0)] == 1
    assert augmented.added_copies[_root_index(augmented, -1.0)] == 0
    assert outcome.candidates == []
    assert outcome.max_log10_pof == pytest.approx(np.log10(1001.0 * 999.0 * 499.0 * (1000.0 / 3.0 - 1.0)))


def test_balancing_roots_never_receive_copies():
    op = diagonal_operator(LARGER_RIGHT)
    poly = PreconditionerPolynomial(LARGER_RIGHT[:4]).with_roots([1000.0])

    outcome = stabilize_indefinite(poly, op, np.ones(op.n), StabilityConfig())

    assert outcome.copies_added == 0
    assert outcome.polynomial.degree == 5


def test_unstable_smaller_side_raises():
    op = diagonal_operator([-1.0, 2.0, 3.0, 4.0, 5.0])
    poly = PreconditionerPolynomial([-1.0, 2.0, 3.0, 4.0])

    with pytest.raises(DegreeTooHighError) as excinfo:
        stabilize_indefinite(poly, op, np.ones(op.n), StabilityConfig(small_side_pof_abort_log10=0.1))

    assert excinfo.value.theta == -1.0
    assert excinfo.value.log10_pof == pytest.approx(np.log10(2.5))


def test_accurate_smaller_side_root_becomes_deflation_candidate():
    op = diagonal_operator(SMALL_SIDE_CANDIDATE)
    b = np.ones(op.n)
    poly = PreconditionerPolynomial(SMALL_SIDE_CANDIDATE)

    outcome = stabilize_indefinite(poly, op, b, StabilityConfig())

    assert [info.theta for info in outcome.candidates] == [-1000.0]
    assert outcome.candidates[0].side == SIDE_LEFT
    assert outcome.polynomial.added_copies[_root_index(outcome.polynomial, -1000.0)] == 0
    assert outcome.polynomial.added_copies[_root_index(outcome.polynomial, 2000.0)] == 1

    vectors = deflation_vectors(outcome.candidates, outcome.polynomial, op, b)
    assert len(vectors) == 1
    assert vectors[0][0] != 0.0
    np.testing.assert_allclose(vectors[0][1:], 0.0, atol=1e-12 * abs(vectors[0][0]))

    x, applied = galerkin_deflation(op, np.zeros(op.n), b, vectors)
    assert applied
    assert x[0] == pytest.approx(-1e-3)
    np.testing.assert_allclose(x[1:], 0.0, atol=1e-15)


def test_deflation_vector_cap():
    op = diagonal_operator(SMALL_SIDE_CANDIDATE)
    poly = PreconditionerPolynomial(SMALL_SIDE_CANDIDATE)
    outcome = stabilize_indefinite(poly, op, np.ones(op.n), StabilityConfig(max_deflation_vectors=0))
    assert outcome.candidates == []


def test_step1_adds_one_copy_on_the_smaller_side():
    op = diagonal_operator(SMALL_SIDE_CANDIDATE)
    poly = PreconditionerPolynomial(SMALL_SIDE_CANDIDATE)
    settings = StabilityConfig(optional_step1_enabled=True, step1_pof_threshold_log10=5.0)

    outcome = stabilize_indefinite(poly, op, np.ones(op.n), settings)

    assert outcome.step1_roots == [-1000.0]
    assert outcome.polynomial.added_copies[_root_index(outcome.polynomial, -1000.0)] == 1


def test_galerkin_deflation_without_vectors():
    op = diagonal_operator([1.0, 2.0])
    x, applied = galerkin_deflation(op, np.ones(2), np.ones(2), [])
    assert not applied
    np.testing.assert_array_equal(x, np.ones(2))


def test_gmres_correction_zero_iterations_is_identity(definite_op):
    x = np.ones(definite_op.n)
    np.testing.assert_array_equal(gmres_correction(definite_op, x, np.zeros(definite_op.n), 0), x)
    assert definite_op.counter.matvecs == 0


def test_apply_corrections_runs_every_track(definite_op, rhs_for):
    b = rhs_for(definite_op.n)
    x, report = apply_corrections(definite_op, np.zeros(definite_op.n), b, [], StabilityConfig(gmres_correction_iters=5))

    assert report.residual_before == pytest.approx(1.0)
    assert report.residual_after_deflation is None
    assert report.residual_after_gmres < report.residual_before
    assert report.residual_after_both == pytest.approx(report.residual_after_gmres)
    assert report.final_residual == report.residual_after_both
    assert np.linalg.norm(b - definite_op.to_dense() @ x) == pytest.approx(report.final_residual)


def test_correction_report_round_trip():
    report = CorrectionReport(residual_before=1.0, residual_after_gmres=0.5, spurious_roots=[2.0 + 1.0j])
    restored = CorrectionReport.from_dict(report.to_dict())
    assert restored == report
    assert restored.final_residual == 0.5
