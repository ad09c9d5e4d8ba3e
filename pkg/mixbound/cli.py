"""
Command line front end.

    python run.py mixing   --spec chain.yml [--n N] [--horizon S]
    python run.py bounds   --spec chain.yml [--n N] [--eps 0.02,0.05 | --abs-dev 20,50] [--nonstationary]
    python run.py simulate --spec chain.yml [--n N] [--trials T] [--statistic sup|tv] [--workers W]
    python run.py verify   [--spec chain.yml] [--limit L] [--instances I] [--pairs P]

Reports go to stdout, logs to stderr. Exit codes: 0 success, 1 verification failure, 2 input error.
"""
import sys
import argparse
from typing import Callable, Sequence

from .log import logger
from .shared import config
from .config import APP_VERSION, create_config
from . import rng
from .chain_core import tv_distance, stationary_distribution, stationary_observation_law
from .mixing import (
    contraction_coefficient, fit_ergodicity, delta_matrix, delta_inf_norm, delta_2_norm, contraction_bound_inf_norm,
)
from .bounds import (
    master_bound, hmm_concentration_bound, dkw_bound, naive_union_bound, lambda_n, uniform_chernoff_bound,
    epsilon_from_deviation,
)
from .empirics import deviation_experiment, lipschitz_audit, exact_lemma_suite
from .spec_io import load_chain_spec
from .render import render_report
from .handles.exception_handles import add_default_handlers, run_guarded
from .structs.chain import StochasticVector
from .structs.bounds import BoundQuery
from .structs.run_config import RunConfig
from .structs.reports import BaseReport, MixingReport, BoundsRow, BoundsReport, DeviationReport, VerifyReport
from .structs.exceptions import EXIT_OK, EXIT_INPUT_ERROR, InputError, VerificationFailure

__all__ = (
    'AUDIT_LENGTH',
    'AUDIT_SYMBOLS',
    'build_parser',
    'run_config_from_args',
    'cmd_mixing',
    'cmd_bounds',
    'cmd_simulate',
    'cmd_verify',
    'main',
)

cli_logger = logger.bind(name='cli')

# verify 的 Lipschitz 审计规模 (无 --spec 时用 5 个符号的均匀分布)
AUDIT_LENGTH = 50
AUDIT_SYMBOLS = 5


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.replace(',', ' ').split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expect a comma separated list of numbers, but got {text!r}') from None


def build_parser() -> argparse.ArgumentParser:
    defaults = config.run

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--spec', dest='spec_path', metavar='PATH', help='chain spec file (YAML or JSON)')
    common.add_argument('--n', type=int, default=defaults.n, help='chain length (default: %(default)s)')
    common.add_argument('--seed', type=int, default=defaults.seed, help='64-bit seed (default: %(default)s)')
    common.add_argument(
        '--horizon', type=int, default=defaults.horizon,
        help='number of tau_s values used to fit (G, theta) (default: %(default)s)'
    )
    common.add_argument(
        '--format', dest='output_format', choices=('text', 'csv', 'structured'), default=defaults.output_format,
        help='report format (default: %(default)s)'
    )
    grid = common.add_mutually_exclusive_group()
    grid.add_argument(
        '--eps', type=_float_list, metavar='LIST',
        help='per-coordinate deviations, comma separated (default: {})'.format(
            ','.join(str(eps) for eps in defaults.epsilon_grid)
        )
    )
    grid.add_argument('--abs-dev', type=_float_list, metavar='LIST', help='absolute deviations t = n * eps')
    common.add_argument(
        '--nonstationary', action='store_true',
        help='start from the chain\'s initial law instead of the stationary one, bounds get the TV correction'
    )

    parser = argparse.ArgumentParser(
        prog='mixbound', description='mixing coefficients and concentration bounds of (hidden) Markov chains'
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {APP_VERSION}')
    parser.add_argument(
        '--config-dump', action='store_true', help='write the merged configuration to merged.config.yml and exit'
    )
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')

    commands.add_parser('mixing', parents=[common], help='contraction, tau_s table, (G, theta) and Delta norms')
    commands.add_parser('bounds', parents=[common], help='every tail bound over the epsilon grid')

    simulate = commands.add_parser('simulate', parents=[common], help='Monte Carlo deviation frequencies')
    simulate.add_argument('--trials', type=int, default=defaults.trials, help='(default: %(default)s)')
    simulate.add_argument('--statistic', choices=('sup', 'tv'), default='sup', help='(default: %(default)s)')
    simulate.add_argument('--workers', type=int, default=defaults.workers, help='(default: %(default)s)')

    verify = commands.add_parser('verify', parents=[common], help='exact lemma suite and Lipschitz audit')
    verify.add_argument(
        '--limit', type=int, default=defaults.limit, help='enumeration size of one instance (default: %(default)s)'
    )
    verify.add_argument('--instances', type=int, default=defaults.instances, help='(default: %(default)s)')
    verify.add_argument('--pairs', type=int, default=defaults.pairs, help='(default: %(default)s)')
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    :raise pydantic.ValidationError: a flag is out of range
    :raise InputError: `--abs-dev` with a nonpositive `--n`
    """
    defaults = config.run
    if args.abs_dev is not None:
        if args.n < 1:
            raise InputError(f'n must be positive, but got `{args.n}`')
        grid = [epsilon_from_deviation(t, args.n) for t in args.abs_dev]
    else:
        grid = defaults.epsilon_grid if args.eps is None else args.eps

    return RunConfig(
        command=args.command,
        spec_path=args.spec_path,
        n=args.n,
        trials=getattr(args, 'trials', defaults.trials),
        seed=args.seed,
        epsilon_grid=tuple(grid),
        horizon=args.horizon,
        output_format=args.output_format,
        stationary=not args.nonstationary,
        statistic=getattr(args, 'statistic', 'sup'),
        workers=getattr(args, 'workers', defaults.workers),
        limit=getattr(args, 'limit', defaults.limit),
        instances=getattr(args, 'instances', defaults.instances),
        pairs=getattr(args, 'pairs', defaults.pairs),
    )


def cmd_mixing(cfg: RunConfig) -> MixingReport:
    spec = load_chain_spec(cfg.spec_path)
    pi = stationary_distribution(spec.transition)
    constants = fit_ergodicity(spec.transition, cfg.horizon)
    delta = delta_matrix(constants, cfg.n)
    return MixingReport(
        spec_id=spec.spec_id,
        n=cfg.n,
        kappa=contraction_coefficient(spec.transition),
        stationary=tuple(float(p) for p in pi.probs),
        constants=constants,
        delta_inf=delta_inf_norm(delta),
        delta_2=delta_2_norm(delta),
        delta_inf_cap=contraction_bound_inf_norm(constants),
    )


def cmd_bounds(cfg: RunConfig) -> BoundsReport:
    spec = load_chain_spec(cfg.spec_path)
    pi = stationary_distribution(spec.transition)
    rho = stationary_observation_law(spec)
    constants = fit_ergodicity(spec.transition, cfg.horizon)
    delta = delta_matrix(constants, cfg.n)
    delta_inf, delta_2 = delta_inf_norm(delta), delta_2_norm(delta)
    correction = 0.0 if cfg.stationary else tv_distance(pi, spec.initial)

    rows = []
    for epsilon in cfg.epsilon_grid:
        query = BoundQuery(n=cfg.n, epsilon=epsilon, constants=constants)
        dkw = dkw_bound(constants, cfg.n, epsilon)
        chernoff = uniform_chernoff_bound(rho, constants, cfg.n, epsilon)
        rows.append(BoundsRow(
            epsilon=epsilon,
            hmm_tail=hmm_concentration_bound(query).value,
            hmm_tail_two_sided=hmm_concentration_bound(query, two_tailed=True).value,
            dkw_threshold=dkw.threshold,
            dkw_tail=dkw.tail.value,
            naive_union_tail=naive_union_bound(rho, constants, cfg.n, epsilon).value,
            lambda_breakdown=lambda_n(rho, constants, cfg.n),
            chernoff_threshold=chernoff.threshold,
            chernoff_tail=chernoff.tail.value,
            master_tail=master_bound(delta_inf, delta_2, cfg.n, epsilon).value,
            nonstationary_correction=correction,
        ))

    return BoundsReport(
        spec_id=spec.spec_id,
        n=cfg.n,
        stationary=cfg.stationary,
        constants=constants,
        delta_inf=delta_inf,
        delta_2=delta_2,
        rows=tuple(rows),
    )


def cmd_simulate(cfg: RunConfig) -> DeviationReport:
    spec = load_chain_spec(cfg.spec_path)
    return deviation_experiment(
        spec,
        cfg.n,
        cfg.trials,
        cfg.seed,
        cfg.statistic,
        cfg.epsilon_grid,
        stationary=cfg.stationary,
        workers=cfg.workers,
        constants=fit_ergodicity(spec.transition, cfg.horizon),
        with_expectation=True,
    )


def cmd_verify(cfg: RunConfig) -> VerifyReport:
    extra, rho = {}, StochasticVector.uniform(AUDIT_SYMBOLS)
    if cfg.spec_path is not None:
        spec = load_chain_spec(cfg.spec_path)
        extra[spec.spec_id] = spec
        rho = stationary_observation_law(spec)

    suite = exact_lemma_suite(cfg.limit, seed=cfg.seed, instances=cfg.instances, extra=extra)
    audit = lipschitz_audit(rho, AUDIT_LENGTH, cfg.pairs, rng.derive_seed(cfg.seed, 1))
    return VerifyReport(suite=suite, audit=audit)


_COMMANDS: dict[str, Callable[[RunConfig], BaseReport]] = {
    'mixing': cmd_mixing,
    'bounds': cmd_bounds,
    'simulate': cmd_simulate,
    'verify': cmd_verify,
}


def _run(args: argparse.Namespace) -> int:
    cfg = run_config_from_args(args)
    cli_logger.debug('running {} with {}', cfg.command, cfg)
    report = _COMMANDS[cfg.command](cfg)
    sys.stdout.write(render_report(report, cfg.output_format))
    sys.stdout.flush()

    if not report.passed:
        raise VerificationFailure(f'{cfg.command} failed, see the report', report)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.config_dump:
        path = create_config(config)
        if path is None:
            cli_logger.error('can not write the merged configuration')
            return EXIT_INPUT_ERROR
        cli_logger.success('merged configuration written to {}', path)
        return EXIT_OK

    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INPUT_ERROR

    add_default_handlers()
    return run_guarded(_run, args)
