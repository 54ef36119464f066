import pytest
import numpy as np

from ppgmres.errors import DegenerateVectorError, DimensionError
from ppgmres.krylov import (
    arnoldi, gmres_cycle, harmonic_ritz_residual, harmonic_ritz_values, restarted_gmres, ritz_values,
)
from ppgmres.krylov.models import SolveReport
from ppgmres.operators import diagonal_operator

# Test data
SMALL_SPECTRUM = np.arange(1.0, 9.0)
TEST_SEED = 7


def test_arnoldi_relation_and_orthonormality(definite_op, rhs_for):
    fact = arnoldi(definite_op, rhs_for(definite_op.n), 15)
    V, H = fact.V, fact.H
    A = definite_op.to_dense()

    assert fact.steps == 15
    np.testing.assert_allclose(V.T @ V, np.eye(16), atol=1e-12)
    np.testing.assert_allclose(A @ V[:, :15], V @ H, atol=1e-10)
    assert np.allclose(np.tril(H, k=-2), 0.0)


def test_arnoldi_counts_one_matvec_per_step(definite_op, rhs_for):
    arnoldi(definite_op, rhs_for(definite_op.n), 10)
    assert definite_op.counter.matvecs == 10


def test_arnoldi_argument_errors(definite_op):
    with pytest.raises(DimensionError):
        arnoldi(definite_op, np.ones(definite_op.n), definite_op.n + 1)
    with pytest.raises(DegenerateVectorError):
        arnoldi(definite_op, np.zeros(definite_op.n), 3)


def test_full_space_ritz_values_are_eigenvalues():
    """With d = n both Ritz and harmonic Ritz values reproduce the spectrum."""
    op = diagonal_operator(SMALL_SPECTRUM)
    fact = arnoldi(op, np.ones(len(SMALL_SPECTRUM)), len(SMALL_SPECTRUM))

    np.testing.assert_allclose(np.sort(ritz_values(fact).real), SMALL_SPECTRUM, rtol=1e-8)
    np.testing.assert_allclose(np.sort(harmonic_ritz_values(fact).real), SMALL_SPECTRUM, rtol=1e-8)


def test_harmonic_ritz_values_are_conjugate_closed(indefinite_op, rhs_for):
    values = harmonic_ritz_values(arnoldi(indefinite_op, rhs_for(indefinite_op.n), 20))
    assert len(values) == 20
    for value in values:
        assert np.min(np.abs(values - np.conj(value))) <= 1e-8 * abs(value)


def test_gmres_cycle_shortcut_matches_true_residual(definite_op, rhs_for):
    b = rhs_for(definite_op.n)
    x, resnorms, _ = gmres_cycle(definite_op, b, None, 20)

    assert len(resnorms) == 20
    assert all(r2 <= r1 + 1e-14 for r1, r2 in zip(resnorms, resnorms[1:]))
    true = np.linalg.norm(b - definite_op.to_dense() @ x)
    assert true == pytest.approx(resnorms[-1], rel=1e-6, abs=1e-12)


def test_restarted_gmres_converges_on_definite_problem(definite_op, rhs_for):
    b = rhs_for(definite_op.n)
    x, report = restarted_gmres(definite_op, b, 30, 1e-8, seed=TEST_SEED)

    assert report.converged
    assert not report.stagnated
    assert report.final_relative_residual <= 1e-7
    assert report.matvecs == definite_op.counter.matvecs
    assert report.seed == TEST_SEED
    assert len(report.cycles) >= 1
    assert report.residual_history[-1] <= 1e-8


def test_restarted_gmres_stops_at_budget(indefinite_op, rhs_for):
    b = rhs_for(indefinite_op.n)
    _, report = restarted_gmres(indefinite_op, b, 10, 1e-14, max_mvp=25)

    assert report.budget_exhausted
    assert not report.converged
    assert report.final_true_residual is not None


def test_restarted_gmres_uses_configured_budget(indefinite_op, rhs_for, mock_config_object):
    mock_config_object.max_mvp = 15
    _, report = restarted_gmres(indefinite_op, rhs_for(indefinite_op.n), 10, 1e-14)
    assert report.budget_exhausted


def test_restarted_gmres_zero_rhs(definite_op):
    x, report = restarted_gmres(definite_op, np.zeros(definite_op.n), 10, 1e-8)
    assert report.converged
    assert not np.any(x)
    assert report.matvecs == 0


def test_restarted_gmres_rejects_bad_tolerance(definite_op):
    with pytest.raises(ValueError):
        restarted_gmres(definite_op, np.ones(definite_op.n), 10, 0.0)


def test_solve_report_serialization(definite_op, rhs_for, tmp_path):
    _, report = restarted_gmres(definite_op, rhs_for(definite_op.n), 30, 1e-8, seed=TEST_SEED)

    data = report.to_dict()
    assert data['schema'] == 1
    restored = SolveReport.from_dict(data)
    assert restored.to_json() == report.to_json()

    path = report.write_csv(tmp_path / "cycles.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "cycle,iterations,shortcut_residual,true_residual,matvecs"
    assert len(lines) == len(report.cycles) + 1


def test_harmonic_ritz_residual_vanishes_on_exact_roots():
    op = diagonal_operator(SMALL_SPECTRUM)
    residual = harmonic_ritz_residual(3, SMALL_SPECTRUM, op, np.ones(op.n))
    assert residual < 1e-12


def test_harmonic_ritz_residual_of_a_perturbed_root():
    op = diagonal_operator(SMALL_SPECTRUM)
    roots = SMALL_SPECTRUM.copy()
    roots[3] += 0.5
    # y is still e_4 so the residual is the root error
    assert harmonic_ritz_residual(3, roots, op, np.ones(op.n)) == pytest.approx(0.5, rel=1e-10)


def test_harmonic_ritz_residual_zero_vector():
    # powers of two keep every factor exact
    spectrum = 2.0 ** np.arange(8)
    op = diagonal_operator(spectrum)
    b = np.ones(op.n)
    b[3] = 0.0
    with pytest.raises(DegenerateVectorError):
        harmonic_ritz_residual(3, spectrum, op, b)
