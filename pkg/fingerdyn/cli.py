"""
finger-dyn command line: simulate, validate, compare and calibrate.

Exit codes: 0 success, 1 configuration or file error, 2 simulation failure or a
failing validation check, 3 calibration did not converge.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from termcolor import colored

from .calibration import fit, fitted_params_document
from .config import RunConfig, calibration_problem, parse_config
from .enums import ModelVariant, enum_from_string
from .exceptions import CalibrationError, ConfigError, DynamicsError, IntegrationError, NotConverged
from .model import link_positions
from .oracles import compare_variants, needs_report, run_validation, write_report
from .simulation import energy_audit, simulate
from .time_helpers import time_it

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION, EXIT_CALIBRATION = 0, 1, 2, 3
DEFAULT_REPORT = 'discrepancy-report.txt'


def _fmt(values, precision: int = 6) -> str:
    return '(' + ', '.join(f'{v:.{precision}g}' for v in values) + ')'


def _print_params(config: RunConfig):
    for line in config.params.summary():
        print(colored(line, 'cyan'))


@time_it
def cmd_simulate(config: RunConfig, out_path: Path, variant: Optional[ModelVariant] = None) -> int:
    """
    run the configured simulation, write the trajectory CSV and print a summary

    :return: exit code
    """
    sim = replace(config.sim, variant=variant) if variant else config.sim
    _print_params(config)
    traj = simulate(sim, config.params, config.profile)
    traj.write_csv(out_path)
    audit = energy_audit(traj, config.params)

    q_final = traj.q[-1]
    tip = link_positions(q_final, config.params)[-1]
    print(colored(f'simulate: {len(traj)} samples to {out_path} ({sim.variant.value}, {sim.integrator.value})',
                  'cyan'))
    print(f'final q = {_fmt(q_final)} rad = {_fmt(np.degrees(q_final), 4)} deg')
    print(f'peak |qdot| = {_fmt(np.max(np.abs(traj.qd), axis=0))} rad/s')
    print(f'fingertip = ({tip[0] * 1000:.3f}, {tip[1] * 1000:.3f}) mm')
    print(f'energy drift (rel) = {audit.max_drift_rel:.3e}, work balance residual = {audit.work_balance_residual:.3e}')
    return EXIT_OK


@time_it
def cmd_validate(config: RunConfig, seed: int = 0, paper_d11: bool = False,
                 report_path: Path = Path(DEFAULT_REPORT)) -> int:
    """
    run every oracle check; exit 0 only if all pass, the report is written when a
    check fails or an entry-level disagreement was noted

    :return: exit code
    """
    report = run_validation(config.params, seed=seed, paper_d11=paper_d11)
    for check in report.checks:
        status = colored('pass', 'green') if check.passed else colored('FAIL', 'red')
        detail = f'  [{check.detail}]' if check.detail else ''
        print(f'{status} {check.name}: {check.value:.3e} (tolerance {check.tolerance:.1e}){detail}')
    for key, value in report.info.items():
        print(colored(f'note {key}: {value}', 'yellow'))

    if needs_report(report):
        write_report(report_path, report, paper_d11)
        print(colored(f'discrepancy report written to {report_path}', 'cyan'))

    failed = [c for c in report.checks if not c.passed]
    if failed:
        names = ', '.join(f'{c.name} ({c.detail})' if c.detail else c.name for c in failed)
        print(colored(f'ERROR: validation failed: {names}', 'red'))
        return EXIT_SIMULATION
    print(colored(f'validate: all {len(report.checks)} checks passed (seed {seed})', 'green'))
    return EXIT_OK


@time_it
def cmd_compare(config: RunConfig, report_path: Optional[Path] = None) -> int:
    """
    run FULL and REDUCED on identical inputs and report how far they diverge

    :return: exit code
    """
    _print_params(config)
    result = compare_variants(config.sim, config.params, config.profile)
    lines = [
        f'max_angle_diff: {_fmt(result.max_angle_diff)}',
        f'max_velocity_diff: {_fmt(result.max_velocity_diff)}',
        f'max_inertial_torque: {_fmt(result.max_inertial_torque)}',
        f'max_coriolis_torque: {_fmt(result.max_coriolis_torque)}',
        f'max_neglected_torque: {_fmt(result.max_neglected_torque)}',
        f'peak_speed: {result.peak_speed:.6g}',
    ]
    print(colored('compare: FULL vs REDUCED', 'cyan'))
    for line in lines:
        print(line)
    if result.peak_speed < 0.1:
        print(colored('quasi-static run (peak |qdot| < 0.1 rad/s)', 'cyan'))
    if report_path is not None:
        report_path.write_text('\n'.join(lines) + '\n')
    return EXIT_OK


@time_it
def cmd_calibrate(config: RunConfig, reference: Optional[Path], out_path: Path) -> int:
    """
    fit the free parameters of the calibration section to a reference trajectory

    :return: exit code
    """
    problem = calibration_problem(config, reference)
    spec = config.calibration
    try:
        result = fit(problem, spec.x0, spec.method)
    except NotConverged as err:
        best = err.result
        print(colored(str(err), 'red'))
        print(f'best {json.dumps(best.params)}, cost = {best.final_cost:.6e}, '
              f'gradient = {_fmt(best.gradient)}, flat cost = {best.flat_cost}')
        return EXIT_CALIBRATION

    for name, value in result.params.items():
        print(colored(f'{name} = {value:.8g}', 'green'))
    print(f'final cost = {result.final_cost:.6e}, iterations = {result.iterations}, '
          f'evaluations = {result.n_evaluations}, converged = {result.converged}')
    out_path.write_text(json.dumps(fitted_params_document(problem, result), indent=2) + '\n')
    print(colored(f'fitted params written to {out_path}', 'cyan'))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='finger-dyn', description=__doc__.strip().splitlines()[0])
    parser.add_argument('command', choices=['simulate', 'validate', 'compare', 'calibrate'])
    parser.add_argument('--config', required=True, type=Path, help='run configuration (JSON)')
    parser.add_argument('--out', type=Path, help='output file (trajectory CSV or fitted params JSON)')
    parser.add_argument('--variant', choices=[v.value for v in ModelVariant], help='override sim.variant')
    parser.add_argument('--seed', type=int, default=0, help='seed of the randomized validation sweeps')
    parser.add_argument('--use-paper-d11', action='store_true',
                        help='validate with the uncorrected closed-form d11 (expected to fail)')
    parser.add_argument('--reference', type=Path, help='reference trajectory CSV (t,q1,q2,q3) for calibrate')
    parser.add_argument('--report', type=Path, help=f'report file of validate (default {DEFAULT_REPORT}) and compare')
    parser.add_argument('--timing', action='store_true', help='print the wall time of the command')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    commands = {'simulate': cmd_simulate, 'validate': cmd_validate, 'compare': cmd_compare,
                'calibrate': cmd_calibrate}
    try:
        config = parse_config(args.config)
        variant = enum_from_string(ModelVariant, args.variant, '--variant') if args.variant else None
        if args.command == 'simulate':
            code = cmd_simulate(config, args.out or Path('trajectory.csv'), variant)
        elif args.command == 'validate':
            code = cmd_validate(config, args.seed, args.use_paper_d11, args.report or Path(DEFAULT_REPORT))
        elif args.command == 'compare':
            if variant:
                print(colored('--variant is ignored by compare, both variants are run', 'yellow'))
            code = cmd_compare(config, args.report)
        else:
            if variant:
                config = replace(config, sim=replace(config.sim, variant=variant))
            code = cmd_calibrate(config, args.reference, args.out or Path('fitted-params.json'))
    except ConfigError as err:
        print(colored(str(err), 'red'), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(colored(f'ERROR: {err}', 'red'), file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, DynamicsError, CalibrationError) as err:
        print(colored(str(err), 'red'), file=sys.stderr)
        return EXIT_SIMULATION

    if args.timing:
        print(colored(f'{args.command} took {commands[args.command].last_elapsed:.3f} s', 'cyan'))
    return code


if __name__ == '__main__':
    sys.exit(main())
