#!/usr/bin/env python3
"""
Experiment runner for distinguished coalescents and their dual Fleming-Viot flows
Every subcommand writes one JSON or CSV artifact to stdout (or --out)
"""
import argparse
import csv
import functools
import io
import json
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

from batch_processor import ReplicaBatchProcessor, replica_rng, summarize
from coalescents.cdi import classify_cdi, dust_laplace_exponent, fixation_bound, simulate_dust
from coalescents.coalescent import (GeneralCoagulationSpec, block_count_path, fixation_time,
                                    rate_table, simulate_general_coalescent,
                                    simulate_m_coalescent, simulate_simple_poissonian)
from coalescents.errors import CoalescentError, NumericalCapExceeded
from coalescents.flows import (TEST_FUNCTIONS, AtomicProbabilityMeasure, DistinguishedBridge,
                               compose_check, duality_check, simulate_gfvi)
from coalescents.measures import BoundedMeasure, MParams, lambda_from_nu, nu_measure
from coalescents.quadrature import set_limits
from config_manager import ConfigManager, RunConfig

logger = logging.getLogger(__name__)

SIMULATION_COMMANDS = {'simulate', 'fixation', 'gfvi', 'duality', 'bridge-test', 'dust'}
TRAJECTORY_COMMANDS = {'simulate', 'gfvi'}

# CSV columns per subcommand (documented in docs/output_schema.md)
CSV_COLUMNS = {
    'rates': ['b', 'kind', 'k', 'rate', 'aggregate'],
    'simulate': ['replica', 't', 'count'],
    'cdi-check': ['window', 'increment', 'ratio'],
    'fixation': ['replica', 'fixation_time'],
    'gfvi': ['replica', 't', 'w0', 'lebesgue', 'atoms', 'mean'],
    'duality': ['p', 't', 'replicas', 'lhs_mean', 'lhs_se', 'rhs_mean', 'rhs_se', 'z_score'],
    'bridge-test': ['partition', 'bridge', 'coag', 'exact'],
    'dust': ['t', 'q', 'replicas', 'mean', 'se', 'exact', 'laplace_exponent'],
}

Artifact = Tuple[Dict[str, Any], List[Dict[str, Any]]]


def setup_logging(verbose: bool = False, log_file: Optional[str] = None):
    """Set up logging configuration; stdout stays reserved for artifacts"""
    level = logging.DEBUG if verbose else logging.INFO
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    zero = common.add_mutually_exclusive_group()
    zero.add_argument('--lambda0', help='Lambda0 measure spec, e.g. dirac0:1+beta:0.5:1.5:2')
    zero.add_argument('--nu0', help='nu0 measure spec (Lambda0 = x nu0)')
    one = common.add_mutually_exclusive_group()
    one.add_argument('--lambda1', help='Lambda1 measure spec')
    one.add_argument('--nu1', help='nu1 measure spec (Lambda1 = x^2 nu1)')
    common.add_argument('--n', type=int, help='Ground size: partitions of {0..n}')
    common.add_argument('--t', type=float, help='Time horizon')
    common.add_argument('--replicas', type=int, help='Monte Carlo replicas')
    common.add_argument('--seed', type=int, help='Seed (mandatory for simulations)')
    common.add_argument('--depth', type=int, help='Series depth N (default 10000)')
    common.add_argument('--qmax', type=float, help='psi-integral cap Q (default 1e6)')
    common.add_argument('--out', help='Write the artifact here instead of stdout')
    common.add_argument('--format', choices=['json', 'csv'], help='Artifact format')
    common.add_argument('--no-progress', action='store_true', help='Hide progress bars')
    common.add_argument('--verbose', '-v', action='store_true', help='Enable verbose logging')
    common.add_argument('--log-file', help='Also write the log to this file')

    parser = argparse.ArgumentParser(
        description="Distinguished coalescents, coming down from infinity and GFVI duality",
        epilog="CSV columns: " + "; ".join(f"{name}: {','.join(cols)}"
                                           for name, cols in CSV_COLUMNS.items()),
    )
    commands = parser.add_subparsers(dest='command', required=True)

    rates = commands.add_parser('rates', parents=[common],
                                help='Tables of lambda_{b,k} and r_{b,k}')
    rates.add_argument('--b', type=int, default=5, help='Largest block count')

    simulate = commands.add_parser('simulate', parents=[common], help='Coalescent trajectories')
    simulate.add_argument('--method', choices=['gillespie', 'poissonian', 'general'],
                          default='gillespie')
    _add_general_flags(simulate)

    cdi = commands.add_parser('cdi-check', parents=[common],
                              help='Coming-down-from-infinity verdict')
    cdi.add_argument('--windows', type=int, help='Log-width windows over [1, Q]')

    commands.add_parser('fixation', parents=[common], help='Fixation-time MC and bound')

    gfvi = commands.add_parser('gfvi', parents=[common], help='Forward GFVI trajectories')
    gfvi.add_argument('--sample-times', default='', help='Comma-separated times to record')

    duality = commands.add_parser('duality', parents=[common], help='Duality MC report')
    duality.add_argument('--p', type=int, default=1, help='Arity of the test function')
    duality.add_argument('--f', choices=sorted(TEST_FUNCTIONS), default='id',
                         help='Test function on [0,1]^p')

    bridge = commands.add_parser('bridge-test', parents=[common],
                                 help='Bridge composition versus coagulation')
    for name in ('y1', 'x1', 'y2', 'x2'):
        bridge.add_argument(f'--{name}', type=float, default=0.0)

    dust = commands.add_parser('dust', parents=[common], help='Dust subordinator moments')
    dust.add_argument('--q', type=float, default=1.0, help='Moment order')
    _add_general_flags(dust)

    return parser


def _add_general_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--c0', type=float, default=0.0, help='Kingman absorption rate')
    parser.add_argument('--c1', type=float, default=0.0, help='Kingman pair-merge rate')
    parser.add_argument('--mixture', default='', help="Paint-box atoms 's0;s1,...@w' joined by '+'")


def _measure(spec: Optional[str], nu_spec: Optional[str], power: int) -> BoundedMeasure:
    if nu_spec is not None:
        return lambda_from_nu(BoundedMeasure.parse(nu_spec), power)
    return BoundedMeasure.parse(spec or '0')


def resolve_m(args) -> MParams:
    return MParams(_measure(args.lambda0, args.nu0, 1), _measure(args.lambda1, args.nu1, 2))


def resolve_nu(args) -> Tuple[BoundedMeasure, BoundedMeasure]:
    nu0 = BoundedMeasure.parse(args.nu0) if args.nu0 else nu_measure(
        BoundedMeasure.parse(args.lambda0 or '0'), 1)
    nu1 = BoundedMeasure.parse(args.nu1) if args.nu1 else nu_measure(
        BoundedMeasure.parse(args.lambda1 or '0'), 2)
    return nu0, nu1


def _extra(args) -> Dict[str, Any]:
    shared = {'lambda0', 'lambda1', 'nu0', 'nu1', 'n', 't', 'replicas', 'seed', 'depth', 'qmax',
              'windows', 'out', 'format', 'command', 'verbose', 'log_file', 'no_progress'}
    return {key: value for key, value in sorted(vars(args).items()) if key not in shared}


def run_rates(args, run: RunConfig) -> Artifact:
    rows = rate_table(resolve_m(args), args.b)
    return {'rows': rows}, rows


def run_simulate(args, run: RunConfig) -> Artifact:
    horizon = run.t if run.t is not None else math.inf
    n = run.n if run.n is not None else 10

    if args.method == 'general':
        spec = GeneralCoagulationSpec.parse(args.c0, args.c1, args.mixture)

        def task(rng, index):
            return simulate_general_coalescent(spec, n, rng, horizon=horizon, seed=run.seed)
    else:
        M = resolve_m(args)
        simulator = (simulate_m_coalescent if args.method == 'gillespie'
                     else simulate_simple_poissonian)

        def task(rng, index):
            return simulator(M, n, rng, horizon=horizon, seed=run.seed)

    processor = ReplicaBatchProcessor("Simulating coalescents")
    trajectories = processor.process_batch(task, run.replicas, run.seed,
                                           show_progress=run.show_progress)
    payload = {'trajectories': [dict(replica=i, fixation_time=fixation_time(traj), **traj.to_dict())
                                for i, traj in enumerate(trajectories)]}
    rows = [{'replica': i, 't': t, 'count': count}
            for i, traj in enumerate(trajectories) for t, count in block_count_path(traj)]
    return payload, rows


def run_cdi_check(args, run: RunConfig) -> Artifact:
    verdict = classify_cdi(resolve_m(args), depth=run.depth, qmax=run.qmax,
                           windows=run.windows, ratio_threshold=run.ratio_threshold,
                           decisive_windows=run.decisive_windows)
    increments = verdict.evidence.get('increments', [])
    ratios = [None] + verdict.evidence.get('ratios', [])
    rows = [{'window': j, 'increment': inc, 'ratio': ratio}
            for j, (inc, ratio) in enumerate(zip(increments, ratios))]
    return {'verdict': verdict.to_dict()}, rows


def run_fixation(args, run: RunConfig) -> Artifact:
    M = resolve_m(args)
    bound = fixation_bound(M, run.depth)
    n = run.n if run.n is not None else 50
    horizon = run.t if run.t is not None else math.inf

    processor = ReplicaBatchProcessor("Fixation replicas")
    times = processor.process_batch(
        lambda rng, index: fixation_time(simulate_m_coalescent(M, n, rng, horizon=horizon)),
        run.replicas, run.seed, show_progress=run.show_progress)
    fixed = [t for t in times if t is not None]
    stats = summarize(fixed) if fixed else {'mean': None, 'se': None, 'count': 0}

    payload = {
        'bound': bound.to_dict(),
        'monte_carlo': stats,
        'unfixed': len(times) - len(fixed),
    }
    if bound.bound is not None and fixed:
        payload['mean_within_bound'] = stats['mean'] <= bound.bound + 3 * stats['se']
    rows = [{'replica': i, 'fixation_time': t} for i, t in enumerate(times)]
    return payload, rows


def run_gfvi(args, run: RunConfig) -> Artifact:
    nu0, nu1 = resolve_nu(args)
    t = run.t if run.t is not None else 1.0
    sample_times = [float(s) for s in args.sample_times.split(',') if s.strip()]
    z0 = AtomicProbabilityMeasure.lebesgue_measure()

    processor = ReplicaBatchProcessor("Simulating GFVI")
    trajectories = processor.process_batch(
        lambda rng, index: simulate_gfvi(nu0, nu1, z0, t, rng, sample_times=sample_times),
        run.replicas, run.seed, show_progress=run.show_progress)
    payload = {'trajectories': [dict(replica=i, **traj.to_dict())
                                for i, traj in enumerate(trajectories)]}
    rows = []
    for i, traj in enumerate(trajectories):
        for time, state in traj.samples + [(t, traj.final)]:
            rows.append({'replica': i, 't': time, 'w0': state.w0, 'lebesgue': state.lebesgue,
                         'atoms': len(state.weights), 'mean': state.mean()})
    return payload, rows


def run_duality(args, run: RunConfig) -> Artifact:
    t = run.t if run.t is not None else 1.0
    report = duality_check(resolve_m(args), args.p, TEST_FUNCTIONS[args.f], t, run.replicas,
                           replica_rng(run.seed, run.replicas), nodes=run.lebesgue_nodes,
                           show_progress=run.show_progress, seed=run.seed,
                           streams=functools.partial(replica_rng, run.seed))
    row = {'p': report.p, 't': report.t, 'replicas': report.replicas,
           'lhs_mean': report.lhs_mean, 'lhs_se': report.lhs_se,
           'rhs_mean': report.rhs_mean, 'rhs_se': report.rhs_se, 'z_score': report.z_score}
    return {'report': report.to_dict()}, [row]


def run_bridge_test(args, run: RunConfig) -> Artifact:
    b1 = DistinguishedBridge(y=args.y1, x=args.x1)
    b2 = DistinguishedBridge(y=args.y2, x=args.x2)
    n = run.n if run.n is not None else 2
    report = compose_check(b1, b2, n, run.replicas, replica_rng(run.seed, run.replicas),
                           show_progress=run.show_progress,
                           streams=functools.partial(replica_rng, run.seed))
    payload = report.to_dict()
    exact = payload['exact_law'] or {}
    support = sorted(set(payload['bridge_law']) | set(payload['coag_law']) | set(exact))
    rows = [{'partition': p, 'bridge': payload['bridge_law'].get(p, 0.0),
             'coag': payload['coag_law'].get(p, 0.0), 'exact': exact.get(p, 0.0)}
            for p in support]
    return {'report': payload}, rows


def run_dust(args, run: RunConfig) -> Artifact:
    spec = GeneralCoagulationSpec.parse(args.c0, args.c1, args.mixture)
    t = run.t if run.t is not None else 1.0
    q = args.q

    processor = ReplicaBatchProcessor("Dust replicas")
    values = processor.process_batch(lambda rng, index: simulate_dust(spec, t, rng) ** q,
                                     run.replicas, run.seed, show_progress=run.show_progress)
    stats = summarize(values)
    exponent = dust_laplace_exponent(q, spec.c0, spec.mixture)
    exact = math.exp(-t * exponent) if spec.c1 == 0 else 0.0
    row = {'t': t, 'q': q, 'replicas': run.replicas, 'mean': stats['mean'], 'se': stats['se'],
           'exact': exact, 'laplace_exponent': exponent}
    return {'spec': spec.to_dict(), 'summary': row}, [row]


HANDLERS: Dict[str, Callable[..., Artifact]] = {
    'rates': run_rates,
    'simulate': run_simulate,
    'cdi-check': run_cdi_check,
    'fixation': run_fixation,
    'gfvi': run_gfvi,
    'duality': run_duality,
    'bridge-test': run_bridge_test,
    'dust': run_dust,
}


def render(payload: Dict[str, Any], rows: List[Dict[str, Any]], command: str,
           run: RunConfig) -> str:
    if run.format == 'csv':
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS[command], lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
        return buffer.getvalue()
    document = {'command': command, 'config': run.to_dict(), **payload}
    return json.dumps(document, indent=2, sort_keys=True) + '\n'


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(args.verbose, args.log_file)

    try:
        config = ConfigManager().resolve(depth=args.depth, qmax=args.qmax,
                                         windows=getattr(args, 'windows', None),
                                         replicas=args.replicas, format=args.format)
        if args.no_progress:
            config['show_progress'] = False

        if args.command in SIMULATION_COMMANDS and args.seed is None:
            logger.error(f"❌ {args.command} needs an explicit --seed")
            return 2

        replicas = args.replicas
        if replicas is None:
            replicas = 1 if args.command in TRAJECTORY_COMMANDS else config['replicas']
        if replicas < 1:
            logger.error(f"❌ --replicas must be >= 1, got {replicas}")
            return 2

        run = RunConfig.from_config(
            config, subcommand=args.command, lambda0=args.lambda0, lambda1=args.lambda1,
            nu0=args.nu0, nu1=args.nu1, n=args.n, t=args.t, replicas=replicas,
            seed=args.seed, out=args.out, extra=_extra(args),
        )
        if run.format not in ('json', 'csv'):
            logger.error(f"❌ Unknown output format {run.format!r}")
            return 2
        set_limits(run.quad_tolerance, run.quad_max_subdivisions)

        logger.info(f"Running {args.command}")
        payload, rows = HANDLERS[args.command](args, run)
        text = render(payload, rows, args.command, run)
    except NumericalCapExceeded as e:
        logger.error(f"❌ Numerical cap exceeded: {e}")
        return 3
    except (CoalescentError, ValueError) as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return 2

    if args.out:
        try:
            with open(args.out, 'w') as f:
                f.write(text)
        except OSError as e:
            logger.error(f"❌ Could not write {args.out}: {e}")
            return 2
        logger.info(f"✅ Wrote {args.command} artifact to {args.out}")
    else:
        sys.stdout.write(text)
        logger.info(f"✅ {args.command} complete")
    return 0


if __name__ == "__main__":
    sys.exit(main())
