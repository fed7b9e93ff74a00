"""
Command line interface of the look-alike clustering lab.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical failures.
"""

import argparse
import sys

import numpy as np

from ..glm.glm_lab import GlmConfig, glm_gain_experiment
from ..models.problem import ProblemConfig, build_ground_truth
from ..theory.asymptotics import (
    TheoryParams,
    gain_case,
    gain_theory,
    gain_threshold_case2,
    risk_lookalike,
    risk_minnorm,
)
from ..util.config_util import check_known_keys, read_config
from ..util.csv_util import write_csv
from ..util.errors import ConfigError, NumericalError, PoleError
from ..util.misc_util import print_error
from ..util.timing import Timer
from .presets import PRESETS, get_preset
from .sweep import (
    ESTIMATORS,
    ClusterExpSpec,
    GainMapSpec,
    SweepSpec,
    as_list,
    run_cluster_experiment,
    run_gain_map,
    run_sweep,
    simulate,
    split_overrides,
    theory_params,
    write_output,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
SIMULATE_KEYS = ('estimators', 'replicates', 'mc_test', 'out', 'dump_data', 'dump_model')

SPEC_CLASSES = {
    'sweep': SweepSpec,
    'gain_map': GainMapSpec,
    'cluster': ClusterExpSpec,
    'glm': GlmConfig,
}


def get_parser():
    """Return the argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='path to an INI config file')
    common.add_argument('--seed', type=int, help='master seed (unsigned 64-bit)')
    common.add_argument('--out', help="output CSV path ('-' for stdout)")
    common.add_argument('--replicates', type=int, help='replicates per grid point')
    common.add_argument('--mc-test', type=int, dest='mc_test',
                        help='Monte Carlo test set size (0 = closed-form risk)')
    common.add_argument('--preset', choices=sorted(PRESETS), help='named experiment')
    common.add_argument('--n-jobs', type=int, dest='n_jobs', help='worker threads')
    common.add_argument('--verbose', action='store_true', help='progress and timing')

    parser = argparse.ArgumentParser(
        prog='lookalike', description='Look-alike clustering simulation and theory lab.'
    )
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('validate', parents=[common], help='check a config file or preset')
    sub.add_parser('theory', parents=[common], help='predicted risks and gain')
    sub.add_parser('gain-map', parents=[common], help='predicted gain over a grid')
    sim = sub.add_parser('simulate', parents=[common], help='evaluate one configuration')
    sim.add_argument('--dump-data', dest='dump_data', help='write the dataset CSV')
    sim.add_argument('--dump-model', dest='dump_model', help='write fitted coefficients')
    sub.add_parser('sweep', parents=[common], help='risk sweep against theory')
    sub.add_parser('cluster-exp', parents=[common], help='label-flip cluster experiment')
    sub.add_parser('glm', parents=[common], help='binomial GLM gain experiment')
    return parser


def get_overrides(args):
    """CLI flags that override config file values."""
    overrides = {
        'seed': args.seed,
        'out': args.out,
        'replicates': args.replicates,
        'mc_test': args.mc_test,
        'n_jobs': args.n_jobs,
    }
    return {key: val for key, val in overrides.items() if val is not None}


def load_sections(args, required=True):
    """Read the config file named by --config."""
    if args.config:
        return read_config(args.config)
    if required:
        raise ConfigError('--config or --preset is required')
    return {}


def detect_kind(sections):
    """Guess the experiment kind of a config file from its sections."""
    for kind, section in (('sweep', 'sweep'), ('gain_map', 'gain_map'),
                          ('cluster', 'cluster'), ('glm', 'glm')):
        if section in sections:
            return kind
    if 'theory' in sections:
        return 'gain_map'
    return 'problem'


def load_spec(args, kind):
    """Build the spec of one experiment kind from --preset or --config."""
    overrides = get_overrides(args)
    if args.preset:
        preset_kind, spec = get_preset(args.preset, overrides)
        if preset_kind != kind:
            raise ConfigError(f'preset {args.preset} is a {preset_kind} preset, not {kind}')
        return spec
    if kind == 'glm' and 'mc_test' in overrides:
        overrides.pop('mc_test')
    sections = load_sections(args, required=kind not in ('glm', 'cluster'))
    return SPEC_CLASSES[kind].from_sections(sections, overrides, verbose=args.verbose)


def output_path(spec_out, args):
    """Output path: --out wins, then the config value, then stdout."""
    return args.out or spec_out or '-'


def cmd_validate(args):
    if args.preset:
        kind, spec = get_preset(args.preset, get_overrides(args))
    else:
        sections = load_sections(args)
        kind = detect_kind(sections)
        if kind == 'problem':
            problem_over, _ = split_overrides(get_overrides(args))
            spec = ProblemConfig.from_sections(sections, problem_over)
        else:
            overrides = get_overrides(args)
            if kind == 'glm':
                overrides.pop('mc_test', None)
            spec = SPEC_CLASSES[kind].from_sections(sections, overrides)

    print(f'ok: valid {kind} config')
    if isinstance(spec, ProblemConfig):
        problem = spec
    else:
        problem = getattr(spec.params, 'problem', None)
    if problem is not None:
        regime = problem.regime()
        print(f'psi_d={regime.psi_d:.6g} psi_p={regime.psi_p:.6g} '
              f'look_alike={regime.regime_lookalike} min_norm={regime.regime_minnorm}')
    return EXIT_OK


def theory_row(tp, Ut_theta0s=None):
    """
    Predicted risks, gain and gain case at one set of theory parameters. A single
    point inside the pole margin is an error, not a row.
    """
    case = gain_case(tp)
    gain = gain_theory(tp, Ut_theta0s)
    row = {
        'psi_d': tp.psi_d,
        'psi_p': tp.psi_p,
        'risk_lookalike': risk_lookalike(tp, Ut_theta0s).risk,
        'risk_minnorm': risk_minnorm(tp, Ut_theta0s).risk,
        'gain': gain,
        'log_gain': float(np.log(gain)),
        'case': case,
        'snr_sq_threshold': np.nan,
    }
    if case == 2 and tp.psi_p < tp.psi_d:
        row['snr_sq_threshold'] = gain_threshold_case2(tp.psi_d, tp.psi_p)
    return row


def cmd_theory(args):
    sections = load_sections(args)
    if 'theory' in sections:
        tp = theory_params(sections['theory'])
        Ut_theta0s = None
    else:
        problem_over, _ = split_overrides(get_overrides(args))
        cfg = ProblemConfig.from_sections(sections, problem_over)
        tp = TheoryParams.from_problem(cfg)
        Ut_theta0s = build_ground_truth(cfg).Ut_theta0s
    write_csv([theory_row(tp, Ut_theta0s)], args.out or '-')
    return EXIT_OK


def cmd_gain_map(args):
    spec = load_spec(args, 'gain_map')
    spec.params.out = output_path(spec.params.out, args)
    run_gain_map(spec, verbose=args.verbose)
    return EXIT_OK


def cmd_simulate(args):
    sections = load_sections(args)
    problem_over, overrides = split_overrides(get_overrides(args))
    cfg = ProblemConfig.from_sections(sections, problem_over)
    sim = dict(sections.get('simulate', {}))
    check_known_keys('simulate', sim, SIMULATE_KEYS)
    sim.update({key: val for key, val in overrides.items() if key in SIMULATE_KEYS})

    with Timer('simulate', verbose=args.verbose):
        rows = simulate(
            cfg,
            estimators=as_list(sim.get('estimators', list(ESTIMATORS[:2]))),
            replicates=sim.get('replicates', 1),
            mc_test=sim.get('mc_test', 0),
            dump_data=args.dump_data or sim.get('dump_data'),
            dump_model=args.dump_model or sim.get('dump_model'),
        )
    write_csv(rows, output_path(sim.get('out'), args))
    return EXIT_OK


def cmd_sweep(args):
    spec = load_spec(args, 'sweep')
    spec.params.out = output_path(spec.params.out, args)
    run_sweep(spec, verbose=args.verbose)
    return EXIT_OK


def cmd_cluster_exp(args):
    spec = load_spec(args, 'cluster')
    spec.params.out = output_path(spec.params.out, args)
    run_cluster_experiment(spec, verbose=args.verbose)
    return EXIT_OK


def cmd_glm(args):
    spec = load_spec(args, 'glm')
    rows = glm_gain_experiment(spec, verbose=args.verbose)
    write_output(rows, output_path(spec.params.out, args), 'glm')
    return EXIT_OK


COMMANDS = {
    'validate': cmd_validate,
    'theory': cmd_theory,
    'gain-map': cmd_gain_map,
    'simulate': cmd_simulate,
    'sweep': cmd_sweep,
    'cluster-exp': cmd_cluster_exp,
    'glm': cmd_glm,
}


def main(argv=None):
    """Run the CLI and return the exit code."""
    args = get_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print_error(f'config error: {e}')
        return EXIT_CONFIG
    except (NumericalError, PoleError) as e:
        print_error(f'numerical error: {e}')
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())
