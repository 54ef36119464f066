import json

import pytest
import numpy as np
import scipy.sparse

from ppgmres.errors import DegreeTooHighError
from ppgmres.main import EXIT_CONFIG_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main, run
from ppgmres.operators.matrix_market import write_matrix_market

# Test data
TEST_SEED = 7
DIAGONAL = np.arange(1.0, 101.0)


@pytest.fixture
def matrix_file(tmp_path):
    """A diagonal 100 x 100 system stored in Matrix Market format."""
    return write_matrix_market(tmp_path / "diag100.mtx", scipy.sparse.diags([DIAGONAL], [0]))


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "results"


def _solve_args(matrix_file, out_dir, *extra):
    return ['solve', '--matrix', f'mm:{matrix_file}', '--output-dir', str(out_dir), *extra]


def test_solve_writes_report_and_cycle_csv(matrix_file, out_dir, capsys):
    """A converged solve exits 0 and leaves JSON and CSV output."""
    code = main(_solve_args(matrix_file, out_dir, '--d', '5', '--m', '20', '--tol', '1e-8'))

    assert code == EXIT_OK
    report = json.loads((out_dir / f"solve_diag100_d5_seed{TEST_SEED}.json").read_text())
    assert report['converged'] is True
    assert report['seed'] == TEST_SEED
    assert report['extra']['matrix'] == 'diag100'
    assert report['extra']['settings']['d'] == 5
    assert (out_dir / f"solve_diag100_d5_seed{TEST_SEED}_cycles.csv").exists()
    printed = capsys.readouterr().out
    assert "converged=True" in printed
    assert f"seed={TEST_SEED}" in printed


def test_solve_budget_exhausted_exits_one(matrix_file, out_dir):
    code = main(_solve_args(matrix_file, out_dir, '--d', '5', '--tol', '1e-12', '--max-mvp', '5'))

    assert code == EXIT_NOT_CONVERGED
    report = json.loads((out_dir / f"solve_diag100_d5_seed{TEST_SEED}.json").read_text())
    assert report['converged'] is False
    assert report['budget_exhausted'] is True


def test_config_file_values_are_overridden_by_flags(matrix_file, out_dir, tmp_path):
    """Flags win over the JSON file; unspecified settings come from the file."""
    config_path = tmp_path / "experiment.json"
    config_path.write_text(json.dumps({
        'matrix_file': str(matrix_file),
        'seed': 11,
        'solver': {'d': 4, 'm': 15, 'tol': 1e-6},
    }))

    code = main(['solve', '--config', str(config_path), '--d', '6', '--output-dir', str(out_dir)])

    assert code == EXIT_OK
    report = json.loads((out_dir / "solve_diag100_d6_seed11.json").read_text())
    assert report['extra']['settings']['d'] == 6
    assert report['extra']['settings']['m'] == 15
    assert report['extra']['settings']['seed'] == 11


def test_missing_matrix_is_a_configuration_error(out_dir):
    code = main(['solve', '--d', '5', '--output-dir', str(out_dir)])

    assert code == EXIT_CONFIG_ERROR
    failure = json.loads((out_dir / f"solve_error_seed{TEST_SEED}.json").read_text())
    assert failure['status'] == 'error'
    assert failure['exit_code'] == EXIT_CONFIG_ERROR
    assert failure['error_type'] == 'ValidationError'


def test_inner_degree_must_divide_total(matrix_file, out_dir):
    code = main(_solve_args(matrix_file, out_dir, '--d', '12', '--balance', 'b4', '--inner-degree', '5'))
    assert code == EXIT_CONFIG_ERROR
    failure = json.loads((out_dir / f"solve_error_seed{TEST_SEED}.json").read_text())
    assert failure['error_type'] == 'BalanceError'


def test_degree_too_high_exits_one_with_failure_report(mocker, matrix_file, out_dir):
    """Numerical failures map to exit code 1 and still leave a record."""
    mocker.patch('ppgmres.main.pp_gmres', side_effect=DegreeTooHighError(30.0, complex(-2.0)))

    code = main(_solve_args(matrix_file, out_dir, '--d', '40', '--seed', '3'))

    assert code == EXIT_NOT_CONVERGED
    failure = json.loads((out_dir / "solve_error_seed3.json").read_text())
    assert failure['error_type'] == 'DegreeTooHighError'
    assert "reduce the polynomial degree" in failure['error']


def test_poly_command_writes_samplings(matrix_file, out_dir):
    code = main([
        'poly', '--matrix', f'mm:{matrix_file}', '--d', '6', '--balance', 'b1',
        '--sample', '0:10:1', '--grid-re', '0:2:1', '--grid-im', '-1:1:1', '--output-dir', str(out_dir),
    ])

    assert code == EXIT_OK
    stem = f"poly_diag100_d6_seed{TEST_SEED}"
    payload = json.loads((out_dir / f"{stem}.json").read_text())
    assert payload['balance']['method'] == 'b1'
    assert payload['degree'] >= 7
    assert len((out_dir / f"{stem}_real.csv").read_text().splitlines()) == 12
    assert len((out_dir / f"{stem}_grid.csv").read_text().splitlines()) == 10
    assert not (out_dir / f"{stem}_spectrum.csv").exists()


def test_eig_command(matrix_file, out_dir, capsys):
    code = main([
        'eig', '--matrix', f'mm:{matrix_file}', '--sigma', '50.3', '--nev', '2', '--d', '1',
        '--arnoldi', '40,20', '--tol', '1e-6', '--output-dir', str(out_dir),
    ])

    assert code == EXIT_OK
    result = json.loads((out_dir / f"eig_diag100_d1_seed{TEST_SEED}.json").read_text())
    values = sorted(pair['value'][0] for pair in result['pairs'])
    np.testing.assert_allclose(values, [50.0, 51.0], atol=1e-6)
    assert (out_dir / f"eig_diag100_d1_seed{TEST_SEED}_pairs.csv").exists()
    assert "converged=True" in capsys.readouterr().out


def test_eig_command_rejects_bad_arnoldi_sizes(matrix_file, out_dir):
    code = main([
        'eig', '--matrix', f'mm:{matrix_file}', '--sigma', '50.0', '--nev', '2', '--d', '4',
        '--arnoldi', 'forty', '--output-dir', str(out_dir),
    ])
    assert code == EXIT_CONFIG_ERROR


def test_estimate_command(out_dir, capsys):
    code = main([
        'estimate', '--u', '-5', '--v', '-1', '--a', '1', '--b', '10', '--d', '3', '--m', '30',
        '--output-dir', str(out_dir),
    ])

    assert code == EXIT_OK
    data = json.loads((out_dir / "estimate_d3_m30.json").read_text())
    assert data['cubic']['branch'] == 'u'
    assert "branch=u" in capsys.readouterr().out


def test_estimate_command_rejects_unordered_intervals(out_dir):
    code = main([
        'estimate', '--u', '1', '--v', '-1', '--a', '1', '--b', '10', '--d', '3', '--m', '30',
        '--output-dir', str(out_dir),
    ])
    assert code == EXIT_CONFIG_ERROR


def test_gen_command_writes_matrix_and_spectrum(tmp_path, out_dir):
    destination = tmp_path / "rays.mtx"

    code = main(['gen', '--matrix', 'rays:230', '--out', str(destination), '--output-dir', str(out_dir)])

    assert code == EXIT_OK
    assert destination.exists()
    eigenvalues = np.loadtxt(tmp_path / "rays.eig.csv", delimiter=',', skiprows=1)
    assert eigenvalues.shape == (2000, 2)


def test_run_script_is_the_cli_entry_point():
    import run as script

    assert script.run is run
    assert 'solve' in script.__doc__


def test_run_exits_with_the_main_status(mocker):
    mocker.patch('ppgmres.main.main', return_value=EXIT_CONFIG_ERROR)
    with pytest.raises(SystemExit) as excinfo:
        run()
    assert excinfo.value.code == EXIT_CONFIG_ERROR
