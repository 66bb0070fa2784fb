"""
Command line interface: verify, sparse, whitney, weights and report subcommands.
Exit codes: 0 all assertions pass, 1 verification failure or inconclusive, 2 configuration error.
"""
import argparse
import logging
from typing import Optional, Sequence

import config_util.cio as cio
import config_util.logging as log
from dyadic.codec import dump_json, dump_sparse_family, encode_chains, encode_weight, load_grid_function
from dyadic.domain import DomainRaster, build_chains, parse_domain_spec, whitney_decompose
from dyadic.grid import Cube
from dyadic.sp_exception import ConfigError, SPException
from dyadic.sparse import LEVELSET, OSCILLATION, build_sparse_levelset, build_sparse_oscillation
from dyadic.weight_spec import build_weight
from harness import report
from harness.experiment import ExperimentConfig
from harness.verify import run_experiment

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _point(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma separated numbers, got {text!r}')


def _construct_cli() -> argparse.ArgumentParser:
    """
    Function that creates command line interface
    """
    parser = argparse.ArgumentParser(prog='sparse-poincare', description='Dyadic sparse domination and weighted '
                                                                         'Poincare verification harness')
    parser.add_argument('-q', '--quiet', help='no console output', action='store_true')
    commands = parser.add_subparsers(dest='command', required=True)

    verify = commands.add_parser('verify', help='run an experiment config')
    verify.add_argument('-c', '--config', help='experiment config JSON', required=True)
    verify.add_argument('-o', '--out', help='report path, output/<theorem>.<format> by default')
    verify.add_argument('-s', '--seed', help='override the config seed', type=int)
    verify.add_argument('-l', '--level', help='override the config level', type=int)
    verify.add_argument('-f', '--format', help='json or csv', choices=('json', 'csv'))
    verify.add_argument('-t', '--threads', help='worker threads', type=int)

    sparse = commands.add_parser('sparse', help='build a sparse family for a stored grid function')
    sparse.add_argument('--function', help='grid function JSON', required=True)
    sparse.add_argument('--variant', choices=(OSCILLATION, LEVELSET), default=OSCILLATION)
    sparse.add_argument('--rho', type=float, default=2.0)
    sparse.add_argument('--alpha', type=float, default=0.0)
    sparse.add_argument('--a', type=float)
    sparse.add_argument('--dump', help='family JSON', required=True)

    whitney = commands.add_parser('whitney', help='Whitney decomposition and chains of a domain')
    whitney.add_argument('--domain', help='domain spec, e.g. "box(0,0;1,1)"', required=True)
    whitney.add_argument('--level', type=int, required=True)
    whitney.add_argument('--root-center', type=_point)
    whitney.add_argument('--root-half-side', type=float)
    whitney.add_argument('--dump', help='decomposition JSON')

    weights = commands.add_parser('weights', help='sample a weight spec')
    weights.add_argument('--spec', required=True)
    weights.add_argument('--n', type=int, required=True)
    weights.add_argument('--level', type=int, required=True)
    weights.add_argument('--root-center', type=_point)
    weights.add_argument('--root-half-side', type=float, default=0.5)
    weights.add_argument('--dump', help='weight JSON')

    report_parser = commands.add_parser('report', help='convert a stored report')
    report_parser.add_argument('--input', required=True)
    report_parser.add_argument('--format', choices=('json', 'csv'), default='csv')
    report_parser.add_argument('--out')
    return parser


def _root(n: int, center: Optional[tuple], half_side: Optional[float]) -> Cube:
    if center is not None and len(center) != n:
        raise ConfigError('root-center', f'a point of dimension {n} is required')
    return Cube(center if center is not None else (0.5,) * n, half_side if half_side is not None else 0.5)


def _verify(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    overrides = {key: value for key, value in (('seed', args.seed), ('level', args.level)) if value is not None}
    if overrides:
        cfg = cfg.replace(**overrides)
    report_format = args.format or cio.get_report_format()
    out = args.out or f'{cio.get_output_dir()}/{cfg.theorem.lower()}{cio.CSV if report_format == "csv" else cio.JSON}'
    result = run_experiment(cfg, args.threads)
    report.write_report([result], out, report_format)
    log.print_and_log(f'Report written to {out}', log.INFO)
    for line in report.failures([result]):
        log.print_and_log(line, log.ERROR)
    return EXIT_PASS if result['passed'] else EXIT_FAIL


def _sparse(args) -> int:
    f = load_grid_function(args.function)
    if args.variant == LEVELSET:
        family = build_sparse_levelset(f, args.alpha, a=args.a)
    else:
        family = build_sparse_oscillation(f, rho=args.rho)
    dump_sparse_family(family, args.dump)
    log.print_and_log(f'{args.variant} family with {len(family)} cubes written to {args.dump}', log.INFO)
    return EXIT_PASS


def _whitney(args) -> int:
    domain = DomainRaster.from_spec(args.domain, _root(parse_domain_spec(args.domain).n, args.root_center,
                                                       args.root_half_side), args.level)
    chains = build_chains(whitney_decompose(domain))
    record = encode_chains(chains)
    log.print_and_log(f'{len(chains.whitney)} Whitney cubes, Boman N = {chains.boman}, '
                      f'overlap {record["overlap_count"]}', log.INFO)
    if args.dump:
        dump_json(record, args.dump)
    return EXIT_PASS


def _weights(args) -> int:
    weight = build_weight(args.spec, _root(args.n, args.root_center, args.root_half_side), args.level)
    samples = weight.samples
    log.print_and_log(f'{weight.label}: min {samples.min()!r}, max {samples.max()!r}', log.INFO)
    if args.dump:
        dump_json(encode_weight(weight), args.dump)
    return EXIT_PASS


def _report(args) -> int:
    reports = report.load_reports(args.input)
    if args.out:
        report.write_report(reports, args.out, args.format)
    elif args.format == 'csv':
        print(report.format_csv(reports), end='')
    else:
        raise ConfigError('out', 'an output path is required for json')
    return EXIT_PASS if report.overall_passed(reports) else EXIT_FAIL


COMMANDS = {'verify': _verify, 'sparse': _sparse, 'whitney': _whitney, 'weights': _weights, 'report': _report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _construct_cli().parse_args(argv)
    log.quiet = args.quiet
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        log.print_and_log(f'Configuration error: {e}', log.ERROR)
        return EXIT_CONFIG
    except SPException as e:
        log.print_and_log(f'{args.command} failed: {e}', log.ERROR)
        return EXIT_CONFIG
