"""Command-line entry point ``crowdgen``."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..domains import StandardKind, build_random_dataset, sample_representative, save_dataset, standard_suite
from ..errors import CrowdgenError, StageError, ValidationError
from ..guidance import WaypointGuidance
from ..learning import load_policy, rollout, save_policy
from ..world import Scenario, TrajectoryLog
from .config import MODEL_IDS, SCALES, TEST_DOMAINS, ExperimentConfig, ExperimentSpec
from .experiment import (evaluate_saved, prepare_training, run_bidirectional, scenario_guidance, sim_config_for,
                         simulate_expert, train_model)
from .export import export_results, load_reports
from .ingest import export_windows, ingest_trajectories
from .render import save_svg
from .repro import SUITES, hard_failures, repro

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILURE = 2


def cmd_gen(args, config: ExperimentConfig) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.domain == 'R':
        count = config.data.r_pairs if args.count is None else args.count
        features, actions = build_random_dataset(count, args.seed, config.random_pairs)
        save_dataset(out / f'random-pairs-s{args.seed}.npz', features, actions)
        return
    if args.domain == 'X':
        kinds = [StandardKind(k) for k in (args.kind or config.data.x_test_kinds)]
        densities = args.density or config.data.x_test_densities
        scenarios = standard_suite(kinds, densities, args.variations, args.seed)
    else:
        count = config.data.g_train if args.count is None else args.count
        scenarios = (sample_representative(args.seed + k, config.generator, config.planner) for k in range(count))
    written = 0
    for scenario in scenarios:
        scenario.save(out / f'{scenario.id}.json')
        written += 1
    logger.info('wrote %d scenarios to %s', written, out)


def cmd_simulate(args, config: ExperimentConfig) -> None:
    scenario = Scenario.load(args.scenario)
    expert_log = simulate_expert(scenario, config)
    if args.model is None:
        log = expert_log
    else:
        policy = load_policy(args.model)
        logs, _ = rollout([scenario], policy, scenario_guidance(scenario, expert_log, config),
                          sim_config_for(scenario, config), seed=args.seed)
        log = logs[0]
    log.save_csv(args.out)
    logger.info('wrote %d transitions to %s', log.num_transitions, args.out)


def cmd_train(args, config: ExperimentConfig) -> None:
    spec = ExperimentSpec(args.model_id, 'G', seed=args.seed, scale=args.scale)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = prepare_training(spec.train_domain, config, args.seed)
    policy, trace = train_model(spec.model_id, data, config, args.seed, progress=args.progress)
    save_policy(policy, out / f'model-{spec.model_id}.json')
    trace.save_csv(out / f'trace-{spec.model_id}.csv')


def cmd_evaluate(args, config: ExperimentConfig) -> None:
    policy = load_policy(args.model)
    reports = evaluate_saved(policy, args.model_id, args.test_domain, config, args.seed, args.real_csv,
                             args.real_layout)
    export_results(reports, args.out)


def cmd_experiment(args, config: ExperimentConfig) -> None:
    specs = [ExperimentSpec(model_id, args.test_domain, seed=args.seed, scale=args.scale, output_dir=args.out,
                            real_csv=args.real_csv, real_layout=args.real_layout, config_path=args.config)
             for model_id in args.model_id]
    run_bidirectional(specs, config, progress=args.progress)


def cmd_rank(args, config: ExperimentConfig) -> None:
    reports = [report for path in args.metrics for report in load_reports(path)]
    export_results(reports, args.out)


def cmd_render(args, config: ExperimentConfig) -> None:
    scenario = Scenario.load(args.scenario)
    logs = [TrajectoryLog.load_csv(path, config.sim.dt) for path in args.log]
    waypoints = None
    if args.waypoints:
        waypoints = WaypointGuidance.for_scenario(scenario, config.planner, config.sim.max_speed).grid.waypoints
    save_svg(args.out, scenario, logs, waypoints, width=args.width)


def cmd_ingest(args, config: ExperimentConfig) -> None:
    windows = ingest_trajectories(args.csv, args.layout, args.window or config.data.window,
                                  args.stride or config.data.stride, config.sim.dt, config.agent_radius,
                                  log_dt=args.log_dt)
    export_windows(windows, args.out)


def cmd_repro(args, config: ExperimentConfig) -> None:
    table = repro(args.out, args.seed, None if args.config is None else config, args.suite)
    failed = hard_failures(table)
    if failed:
        raise CrowdgenError(f'{failed} acceptance cases failed')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help='Root random seed')
    common.add_argument('--scale', choices=SCALES, default='desk', help='Preset data and training scale')
    common.add_argument('--config', default=None, help='JSON file overriding configuration fields')
    common.add_argument('--verbose', action='store_true', help='Log at debug level')

    parser = argparse.ArgumentParser(prog='crowdgen', description='Crowd steering imitation benchmark')
    commands = parser.add_subparsers(dest='command', required=True)

    gen = commands.add_parser('gen', parents=[common], help='Generate scenarios or random-domain pairs')
    gen.add_argument('--domain', choices=('X', 'G', 'R'), required=True)
    gen.add_argument('--out', required=True, help='Output directory')
    gen.add_argument('--count', type=int, default=None, help='Scenario or pair count (G, R)')
    gen.add_argument('--kind', action='append', choices=[k.value for k in StandardKind], help='Standard kind (X)')
    gen.add_argument('--density', action='append', type=int, help='Agent count (X)')
    gen.add_argument('--variations', type=int, default=3, help='Seeds per kind and density (X)')
    gen.set_defaults(handler=cmd_gen)

    simulate = commands.add_parser('simulate', parents=[common], help='Simulate a scenario')
    simulate.add_argument('--scenario', required=True)
    simulate.add_argument('--model', default=None, help='Policy file; the scenario expert is used without it')
    simulate.add_argument('--out', required=True, help='Trajectory CSV')
    simulate.set_defaults(handler=cmd_simulate)

    train = commands.add_parser('train', parents=[common], help='Train one model')
    train.add_argument('--model-id', choices=MODEL_IDS, required=True)
    train.add_argument('--out', required=True)
    train.add_argument('--progress', action='store_true')
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser('evaluate', parents=[common], help='Evaluate a trained model')
    evaluate.add_argument('--model', required=True)
    evaluate.add_argument('--model-id', required=True)
    evaluate.add_argument('--test-domain', choices=TEST_DOMAINS, required=True)
    evaluate.add_argument('--real-csv', default=None)
    evaluate.add_argument('--real-layout', default=None)
    evaluate.add_argument('--out', required=True)
    evaluate.set_defaults(handler=cmd_evaluate)

    experiment = commands.add_parser('experiment', parents=[common], help='Train and rank models on one test set')
    experiment.add_argument('--model-id', action='append', choices=MODEL_IDS, required=True)
    experiment.add_argument('--test-domain', choices=TEST_DOMAINS, required=True)
    experiment.add_argument('--real-csv', default=None)
    experiment.add_argument('--real-layout', default=None)
    experiment.add_argument('--out', required=True)
    experiment.add_argument('--progress', action='store_true')
    experiment.set_defaults(handler=cmd_experiment)

    rank = commands.add_parser('rank', parents=[common], help='Rank models from metric CSVs')
    rank.add_argument('--metrics', nargs='+', required=True)
    rank.add_argument('--out', required=True)
    rank.set_defaults(handler=cmd_rank)

    render = commands.add_parser('render', parents=[common], help='Render a scenario to SVG')
    render.add_argument('--scenario', required=True)
    render.add_argument('--log', action='append', default=[])
    render.add_argument('--waypoints', action='store_true', help='Draw planned A* waypoints')
    render.add_argument('--width', type=float, default=600.0)
    render.add_argument('--out', required=True)
    render.set_defaults(handler=cmd_render)

    ingest = commands.add_parser('ingest', parents=[common], help='Cut recorded trajectories into scenarios')
    ingest.add_argument('--csv', required=True)
    ingest.add_argument('--layout', required=True, help='Scenario or layout JSON with bounds and obstacles')
    ingest.add_argument('--window', type=float, default=None, help='Window length in seconds')
    ingest.add_argument('--stride', type=float, default=None, help='Window stride in seconds')
    ingest.add_argument('--log-dt', type=float, default=0.1, help='Step length of trajectory-log input')
    ingest.add_argument('--out', required=True)
    ingest.set_defaults(handler=cmd_ingest)

    repro_cmd = commands.add_parser('repro', parents=[common], help='Run the acceptance suite')
    repro_cmd.add_argument('--suite', choices=sorted(SUITES), default='reduced',
                           help='Case counts: full acceptance or a reduced run')
    repro_cmd.add_argument('--out', required=True)
    repro_cmd.set_defaults(handler=cmd_repro)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        config = ExperimentConfig.load(args.config, args.scale)
        args.handler(args, config)
    except ValidationError as exc:
        logger.error('%s', exc)
        return EXIT_INVALID
    except StageError as exc:
        logger.error('%s', exc)
        return EXIT_INVALID if isinstance(exc.cause, ValidationError) else EXIT_FAILURE
    except (CrowdgenError, OSError) as exc:
        logger.error('%s', exc)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
