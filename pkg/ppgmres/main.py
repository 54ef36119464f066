"""
Command-line entry point for ppgmres
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from . import REPORT_SCHEMA
from .analysis import (
    IntervalSpectrum, estimate_improvement, parse_range, sample_polynomial, sample_real_line, write_spectrum_image,
)
from .balance import BALANCE_METHODS
from .config import config
from .drivers import (
    ExperimentConfig, pp_arnoldi_interior, pp_gmres, prepare_polynomial,
)
from .errors import (
    BreakdownError, ConvergenceError, DegreeTooHighError, PPGmresError, SingularMatrixError,
)
from .operators import LinearOperator, sparse_operator
from .operators.matrix_market import read_matrix_market, write_matrix_market
from .operators.presets import make_preset, preset_names
from .utils import STREAM_RHS, format_count, make_generator, random_unit_vector, sanitize_filename

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_CONFIG_ERROR = 2

MATRIX_FILE_PREFIX = 'mm:'

# Failures of the numerical method rather than of the input
NUMERICAL_ERRORS = (DegreeTooHighError, ConvergenceError, BreakdownError, SingularMatrixError)

SOLVER_FLAGS = ('d', 'm', 'tol', 'max_mvp', 'balance', 'inner_degree', 'balance_interval', 'reorth')
STABILITY_FLAGS = ('pofcutoff_log10', 'rncutoff', 'gmres_correction_iters', 'max_deflation_vectors')
EIGEN_FLAGS = ('sigma', 'nev', 'd', 'tol', 'balance', 'balance_interval', 'max_cycles', 'max_mvp')


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once: stdout plus an optional log file"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    if config.log_file:
        handlers.append(logging.FileHandler(config.log_file))
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, (level or config.log_level).upper(), logging.INFO),
        handlers=handlers,
    )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment type"""
    parser = argparse.ArgumentParser(
        prog='ppgmres',
        description="Polynomial preconditioned GMRES and Arnoldi for indefinite problems",
    )
    parser.add_argument('--log-level', default=None, help="Overrides PPGMRES_LOG_LEVEL")
    commands = parser.add_subparsers(dest='command', required=True)

    def common(sub):
        sub.add_argument('--matrix', default=None,
                         help=f"Preset ({', '.join(preset_names())}, rays:<angle>) or mm:<path>")
        sub.add_argument('--config', default=None, help="JSON experiment configuration file")
        sub.add_argument('--seed', type=int, default=None)
        sub.add_argument('--output-dir', default=None)

    def polynomial_flags(sub):
        sub.add_argument('--d', type=int, default=None, help="Polynomial degree")
        sub.add_argument('--balance', choices=BALANCE_METHODS, default=None)
        sub.add_argument('--inner-degree', dest='inner_degree', type=int, default=None)
        sub.add_argument('--interval', dest='balance_interval', type=float, default=None,
                         help="Half-width a of the Balance Method 5 interval [-a, a]")
        sub.add_argument('--no-stability', dest='no_stability', action='store_true')
        sub.add_argument('--pofcutoff', dest='pofcutoff_log10', type=float, default=None, help="log10 of pofcutoff")
        sub.add_argument('--rncutoff', type=float, default=None)

    solve = commands.add_parser('solve', help="Solve A x = b with PP(d)-GMRES(m)")
    common(solve)
    polynomial_flags(solve)
    solve.add_argument('--m', type=int, default=None, help="Restart length")
    solve.add_argument('--tol', type=float, default=None)
    solve.add_argument('--max-mvp', dest='max_mvp', type=int, default=None)
    solve.add_argument('--reorth', action='store_true', default=None)
    solve.add_argument('--no-verify', dest='no_verify', action='store_true')
    solve.add_argument('--correction-iters', dest='gmres_correction_iters', type=int, default=None)
    solve.add_argument('--deflation-vectors', dest='max_deflation_vectors', type=int, default=None)

    eig = commands.add_parser('eig', help="Interior eigenvalues near sigma")
    common(eig)
    eig.add_argument('--sigma', type=float, default=None)
    eig.add_argument('--nev', type=int, default=None)
    eig.add_argument('--d', type=int, default=None)
    eig.add_argument('--balance', choices=('none', 'b1', 'b5'), default=None)
    eig.add_argument('--interval', dest='balance_interval', type=float, default=None)
    eig.add_argument('--arnoldi', default=None, help="m,k of the restarted Arnoldi")
    eig.add_argument('--tol', type=float, default=None)
    eig.add_argument('--harmonic', action='store_true', default=None)
    eig.add_argument('--stability', action='store_true', default=None)
    eig.add_argument('--max-cycles', dest='max_cycles', type=int, default=None)
    eig.add_argument('--max-mvp', dest='max_mvp', type=int, default=None)

    poly = commands.add_parser('poly', help="Dump a preconditioner polynomial and sample it")
    common(poly)
    polynomial_flags(poly)
    poly.add_argument('--sample', default=None, help="start:stop:step on the real axis")
    poly.add_argument('--grid-re', dest='grid_re', default=None, help="start:stop:step of real parts")
    poly.add_argument('--grid-im', dest='grid_im', default=None, help="start:stop:step of imaginary parts")

    estimate = commands.add_parser('estimate', help="Convergence estimate for a two-interval spectrum")
    estimate.add_argument('--u', type=float, required=True)
    estimate.add_argument('--v', type=float, required=True)
    estimate.add_argument('--a', type=float, required=True)
    estimate.add_argument('--b', type=float, required=True)
    estimate.add_argument('--d', type=int, required=True)
    estimate.add_argument('--m', type=int, required=True)
    estimate.add_argument('--output-dir', default=None)

    gen = commands.add_parser('gen', help="Write a generated matrix in Matrix Market format")
    common(gen)
    gen.add_argument('--out', default=None, help="Destination .mtx file")
    return parser


def _flag_values(args: argparse.Namespace, names) -> Dict[str, Any]:
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """
    Merge the JSON configuration file (if any) with command-line flags

    Flags win over file values; nested solver and eigensolver settings are
    validated after merging.
    """
    data: Dict[str, Any] = {}
    if getattr(args, 'config', None):
        with open(args.config, 'r', encoding='utf-8') as f:
            data = json.load(f)
    if args.matrix is not None:
        data.pop('matrix', None)
        data.pop('matrix_file', None)
        if args.matrix.startswith(MATRIX_FILE_PREFIX):
            data['matrix_file'] = args.matrix[len(MATRIX_FILE_PREFIX):]
        else:
            data['matrix'] = args.matrix
    if args.seed is not None:
        data['seed'] = args.seed
    if args.output_dir is not None:
        data['output_dir'] = args.output_dir

    if args.command in ('solve', 'poly'):
        solver = dict(data.get('solver') or {})
        solver.update(_flag_values(args, SOLVER_FLAGS))
        stability = dict(solver.get('stability') or {})
        stability.update(_flag_values(args, STABILITY_FLAGS))
        solver['stability'] = stability
        if getattr(args, 'no_stability', False):
            solver['stability_enabled'] = False
        if getattr(args, 'no_verify', False):
            solver['verify_true_residual'] = False
        if 'seed' in data:
            solver.setdefault('seed', data['seed'])
        data['solver'] = solver
    elif args.command == 'eig':
        eigen = dict(data.get('eigen') or {})
        eigen.update(_flag_values(args, EIGEN_FLAGS))
        if args.arnoldi is not None:
            eigen['m'], eigen['k'] = _parse_arnoldi(args.arnoldi)
        if args.harmonic:
            eigen['harmonic'] = True
        if args.stability:
            eigen['stability_enabled'] = True
        if 'seed' in data:
            eigen.setdefault('seed', data['seed'])
        data['eigen'] = eigen
    return ExperimentConfig(**data)


def _parse_arnoldi(text: str) -> Tuple[int, int]:
    try:
        m, k = (int(part) for part in text.split(','))
    except ValueError:
        raise ValueError(f"--arnoldi expects m,k, got {text!r}")
    return m, k


def load_operator(experiment: ExperimentConfig, seed: int) -> LinearOperator:
    """Build the operator named by the experiment"""
    if experiment.matrix_file is not None:
        return sparse_operator(read_matrix_market(experiment.matrix_file))
    return make_preset(experiment.matrix, seed)


def _output_dir(experiment: Optional[ExperimentConfig], args: argparse.Namespace) -> Path:
    directory = None
    if experiment is not None:
        directory = experiment.output_dir
    directory = directory or getattr(args, 'output_dir', None) or config.output_dir
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2), encoding='utf-8')
    logger.info(f"Wrote {path}")
    return path


def _stem(command: str, label: str, degree: Optional[int], seed: int) -> str:
    parts = [command, sanitize_filename(label)]
    if degree is not None:
        parts.append(f"d{degree}")
    parts.append(f"seed{seed}")
    return '_'.join(parts)


def cmd_solve(args: argparse.Namespace, experiment: ExperimentConfig, seed: int) -> int:
    """Run pp_gmres and write the report JSON and per-cycle CSV"""
    settings = experiment.solver
    op = load_operator(experiment, seed)
    b = random_unit_vector(op.n, make_generator(seed, STREAM_RHS))
    _, report = pp_gmres(op, b, settings)
    report.extra['matrix'] = op.name
    report.extra['settings'] = settings.model_dump()

    out = _output_dir(experiment, args)
    stem = _stem('solve', experiment.matrix_label, settings.d, seed)
    (out / f"{stem}.json").write_text(report.to_json(), encoding='utf-8')
    report.write_csv(out / f"{stem}_cycles.csv")
    logger.info(f"Wrote {out / stem}.json and cycle CSV")

    print(
        f"degree={report.extra.get('degree')} copies={report.extra.get('copies_added', 0)} "
        f"matvecs={report.matvecs} ({format_count(report.matvecs)}) converged={report.converged} "
        f"true_residual={report.final_true_residual:.3e} seed={seed}"
    )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_eig(args: argparse.Namespace, experiment: ExperimentConfig, seed: int) -> int:
    """Run pp_arnoldi_interior and write the result JSON and CSV"""
    settings = experiment.eigen
    op = load_operator(experiment, seed)
    result = pp_arnoldi_interior(op, settings)

    out = _output_dir(experiment, args)
    stem = _stem('eig', experiment.matrix_label, settings.d, seed)
    (out / f"{stem}.json").write_text(result.to_json(), encoding='utf-8')
    result.write_csv(out / f"{stem}_pairs.csv")

    values = [value.real for value in result.values]
    span = f"[{min(values):.6g}, {max(values):.6g}]" if values else "[]"
    print(
        f"eigenvalues={len(result.pairs)} range={span} cycles={result.cycles} matvecs={result.matvecs} "
        f"converged={result.converged} volatile={result.volatile} seed={seed}"
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_poly(args: argparse.Namespace, experiment: ExperimentConfig, seed: int) -> int:
    """Build the polynomial, dump its roots and write samplings"""
    settings = experiment.solver
    op = load_operator(experiment, seed)
    prepared = prepare_polynomial(op, settings, seed)
    poly = prepared.polynomial

    out = _output_dir(experiment, args)
    stem = _stem('poly', experiment.matrix_label, settings.d, seed)
    payload: Dict[str, Any] = {
        'schema': REPORT_SCHEMA,
        'seed': seed,
        'matrix': op.name,
        'degree': poly.degree,
        'retries': prepared.retries,
        'polynomial': poly.to_dict(),
        'balance': prepared.balance.to_dict(),
        'stability': None if prepared.stability is None else prepared.stability.to_dict(),
        'construction_matvecs': prepared.construction_matvecs,
    }
    if hasattr(poly, 'pof'):
        payload['pof'] = poly.pof().to_dict()
    _write_json(out / f"{stem}.json", payload)

    if args.sample:
        sample_real_line(poly, parse_range(args.sample)).write_csv(out / f"{stem}_real.csv")
    if args.grid_re or args.grid_im:
        x = parse_range(args.grid_re or '0')
        y = parse_range(args.grid_im or '0')
        sample_polynomial(poly, x, y).write_csv(out / f"{stem}_grid.csv")
    if op.has_known_spectrum:
        write_spectrum_image(out / f"{stem}_spectrum.csv", poly, op=op)

    print(f"degree={poly.degree} balance={prepared.balance.method} retries={prepared.retries} seed={seed}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    """Print and store the convergence estimate"""
    spectrum = IntervalSpectrum(u=args.u, v=args.v, a=args.a, b=args.b)
    estimate = estimate_improvement(spectrum, args.d, args.m)
    out = _output_dir(None, args)
    name = f"estimate_d{args.d}_m{args.m}.json"
    (out / name).write_text(estimate.to_json(), encoding='utf-8')
    print(
        f"delta={estimate.cubic.delta:.6e} branch={estimate.cubic.branch} "
        f"gmres_factor={estimate.per_cycle_gmres:.6g} pp_factor={estimate.per_cycle_ppgmres:.6g} "
        f"speedup={estimate.speedup_matvecs:.3f}"
    )
    return EXIT_OK


def cmd_gen(args: argparse.Namespace, experiment: ExperimentConfig, seed: int) -> int:
    """Write the generated matrix (and its spectrum when known)"""
    op = load_operator(experiment, seed)
    if op.matrix is None:
        raise PPGmresError(f"{op.name} has no explicit matrix to write")
    out = _output_dir(experiment, args)
    path = Path(args.out) if args.out else out / f"{sanitize_filename(op.name)}_seed{seed}.mtx"
    write_matrix_market(path, op.matrix)
    if op.has_known_spectrum:
        eigenvalues = np.column_stack([op.eigenvalues.real, op.eigenvalues.imag])
        np.savetxt(path.with_suffix('.eig.csv'), eigenvalues, delimiter=',', header='re,im', comments='')
    print(f"n={op.n} nnz={op.matrix.nnz} path={path} seed={seed}")
    return EXIT_OK


def _failure_report(args: argparse.Namespace, seed: Optional[int], error: Exception, code: int) -> None:
    """Leave a machine-readable record of a failed run"""
    payload = {
        'schema': REPORT_SCHEMA,
        'command': args.command,
        'status': 'error',
        'exit_code': code,
        'error_type': type(error).__name__,
        'error': str(error),
        'seed': seed,
    }
    try:
        out = _output_dir(None, args)
        _write_json(out / f"{args.command}_error_seed{seed}.json", payload)
    except OSError as e:
        logger.error(f"Could not write failure report: {e}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one command and return its exit code

    Args:
        argv: Arguments without the program name (sys.argv when None)

    Returns:
        0 on success, 1 when the method did not converge, 2 on bad input
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    seed = getattr(args, 'seed', None)
    if seed is None:
        seed = config.default_seed
    try:
        if args.command == 'estimate':
            return cmd_estimate(args)
        experiment = load_experiment(args)
        seed = experiment.seed if experiment.seed is not None else config.default_seed
        logger.info(f"Running {args.command} on {experiment.matrix_label} with seed {seed}")
        handlers = {'solve': cmd_solve, 'eig': cmd_eig, 'poly': cmd_poly, 'gen': cmd_gen}
        return handlers[args.command](args, experiment, seed)
    except NUMERICAL_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        _failure_report(args, seed, e, EXIT_NOT_CONVERGED)
        return EXIT_NOT_CONVERGED
    except (PPGmresError, ValidationError, ValueError, OSError) as e:
        logger.error(f"Invalid input for {args.command}: {e}")
        _failure_report(args, seed, e, EXIT_CONFIG_ERROR)
        return EXIT_CONFIG_ERROR


def run():
    """Console script entry point"""
    sys.exit(main())


if __name__ == "__main__":
    run()
