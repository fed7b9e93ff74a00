"""
Experiment orchestration: parameter sweeps comparing simulated and predicted risks,
theory-only gain maps, single-configuration simulations, and the cluster
estimation experiment.
"""

import os

import numpy as np
import pandas as pd

from ..alg.cluster_est import cluster_experiment, kmeans
from ..data.synth import dump_dataset_csv, sample_dataset
from ..models.estimators import (
    dump_model_csv,
    fit_look_alike,
    fit_look_alike_estimated,
    min_norm_fit,
)
from ..models.problem import PROBLEM_KEYS, ProblemConfig, build_ground_truth
from ..risk.risk_eval import gain, risk_closed_form, risk_monte_carlo, risk_report
from ..theory.asymptotics import (
    TheoryParams,
    gain_case,
    gain_theory,
    risk_lookalike,
    risk_minnorm,
)
from ..util.base import Base
from ..util.config_util import check_known_keys
from ..util.csv_util import write_csv
from ..util.errors import ConfigError, PoleError
from ..util.misc_util import (
    dict_to_namespace,
    map_tasks,
    mean_and_stderr,
    print_info,
    print_warn,
    replicate_seed,
)
from ..util.timing import Timer
from .plot_script import write_plot_script

ESTIMATORS = ('min_norm', 'look_alike_true', 'look_alike_estimated')
SWEEP_AXES = ('n', 'd', 'p', 'k', 'mu', 'sigma', 'r_s', 'r_ns', 'rho')
INT_AXES = ('n', 'd', 'p', 'k')
SWEEP_KEYS = (
    'axis', 'grid', 'series_axis', 'series_grid', 'replicates', 'estimators', 'out',
    'mc_test', 'n_jobs',
)
GAIN_AXES = ('psi_d', 'psi_p', 'sigma', 'r_s', 'r_ns', 'rho', 'mu', 'k', 'snr')
THEORY_KEYS = ('psi_d', 'psi_p', 'sigma', 'r_s', 'r_ns', 'rho', 'mu', 'k', 'snr',
               'pole_margin')
GAIN_MAP_KEYS = ('axis1', 'grid1', 'axis2', 'grid2', 'out')
CLUSTER_KEYS = ('flip_rates', 'replicates', 'out', 'n_jobs')
CFG_PREFIX = 'cfg_'
CLUSTER_PROBLEM_DEFAULTS = {'n': 400, 'd': 200, 'p': 100, 'k': 3, 'mu': 1.0}
THEORY_DEFAULTS = {
    'psi_d': 2.0, 'psi_p': 1.7, 'sigma': 1.0, 'r_s': 0.5, 'r_ns': 1.0, 'rho': 0.3,
    'mu': 5.0, 'k': 3, 'pole_margin': 0.02,
}


def theory_params(values):
    """
    Balanced-prior TheoryParams from a dict of theory values, where k sets the
    number of clusters and snr, if present, sets r_s = snr * sigma.
    """
    vals = dict(THEORY_DEFAULTS)
    vals.update(values)
    check_known_keys('theory', vals, THEORY_KEYS)
    k = vals.pop('k')
    snr = vals.pop('snr', None)
    if int(k) != k or k < 1:
        raise ConfigError(f'k must be a positive integer, got {k}')
    if snr is not None:
        vals['r_s'] = float(snr) * float(vals['sigma'])
    vals = {key: float(val) for key, val in vals.items()}
    return TheoryParams(priors=np.full(int(k), 1.0 / int(k)), **vals)


def as_list(val):
    """Wrap a scalar config value in a list."""
    if val is None:
        return []
    return list(val) if isinstance(val, (list, tuple, np.ndarray)) else [val]


def axis_value(axis, value):
    """Cast a grid value to the type of the config field it sets."""
    return int(value) if axis in INT_AXES else float(value)


def split_overrides(overrides):
    """Split CLI overrides into problem overrides (seed) and the rest."""
    overrides = {key: val for key, val in (overrides or {}).items() if val is not None}
    problem = {'seed': overrides.pop('seed')} if 'seed' in overrides else {}
    return problem, overrides


class SweepSpec(Base):
    """
    A sweep of one problem parameter (optionally crossed with a series parameter),
    with a number of replicates per grid point and a set of estimators.
    """

    def set_params(self, params):
        """Set self.params, the parameters for this sweep."""
        super().set_params(params)
        params = dict_to_namespace(params)

        self.params.name = getattr(params, 'name', 'SweepSpec')
        problem = getattr(params, 'problem', None)
        if not isinstance(problem, ProblemConfig):
            problem = ProblemConfig(problem)
        self.params.problem = problem
        self.params.axis = getattr(params, 'axis', 'n')
        self.params.grid = as_list(getattr(params, 'grid', None))
        self.params.series_axis = getattr(params, 'series_axis', None)
        self.params.series_grid = as_list(getattr(params, 'series_grid', None))
        self.params.replicates = getattr(params, 'replicates', 20)
        self.params.estimators = as_list(
            getattr(params, 'estimators', ['look_alike_true', 'min_norm'])
        )
        self.params.out = getattr(params, 'out', None)
        self.params.mc_test = getattr(params, 'mc_test', 0)
        self.params.n_jobs = getattr(params, 'n_jobs', 1)

    def validate(self):
        """Raise ConfigError if the sweep is invalid."""
        pr = self.params
        if pr.axis not in SWEEP_AXES:
            raise ConfigError(f'axis must be one of {SWEEP_AXES}, got {pr.axis!r}')
        if not pr.grid:
            raise ConfigError('grid must be non-empty')
        if pr.series_axis is not None:
            if pr.series_axis not in SWEEP_AXES or pr.series_axis == pr.axis:
                raise ConfigError(f'invalid series_axis {pr.series_axis!r}')
            if not pr.series_grid:
                raise ConfigError('series_grid must be non-empty when series_axis is set')
        for key in ('replicates', 'n_jobs'):
            val = getattr(pr, key)
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError(f'{key} must be a positive integer, got {val!r}')
        if isinstance(pr.mc_test, bool) or not isinstance(pr.mc_test, (int, np.integer)):
            raise ConfigError(f'mc_test must be an integer, got {pr.mc_test!r}')
        if pr.mc_test < 0 or pr.mc_test == 1:
            raise ConfigError(f'mc_test must be 0 or at least 2, got {pr.mc_test}')
        unknown = [est for est in pr.estimators if est not in ESTIMATORS]
        if not pr.estimators or unknown:
            raise ConfigError(f'estimators must be a non-empty subset of {ESTIMATORS}')

    def series(self):
        """Return the list of series values ([None] without a series axis)."""
        if self.params.series_axis is None:
            return [None]
        return [axis_value(self.params.series_axis, v) for v in self.params.series_grid]

    def config_at(self, value, series_value=None):
        """Return the ProblemConfig at one grid point."""
        pr = self.params
        kwargs = {pr.axis: axis_value(pr.axis, value)}
        if series_value is not None:
            kwargs[pr.series_axis] = series_value
        return pr.problem.replace(**kwargs)

    @classmethod
    def from_sections(cls, sections, overrides=None, verbose=False):
        """Build a SweepSpec from [problem], [priors] and [sweep] sections."""
        problem_over, overrides = split_overrides(overrides)
        problem = ProblemConfig.from_sections(sections, problem_over)
        sweep = dict(sections.get('sweep', {}))
        check_known_keys('sweep', sweep, SWEEP_KEYS)
        sweep.update(overrides)
        sweep['problem'] = problem
        return cls(sweep, verbose=verbose)


class GainMapSpec(Base):
    """Theory-only gain over a two-dimensional grid of asymptotic parameters."""

    def set_params(self, params):
        """Set self.params, the base theory parameters and the two axes."""
        super().set_params(params)
        params = dict_to_namespace(params)

        self.params.name = getattr(params, 'name', 'GainMapSpec')
        theory = dict(THEORY_DEFAULTS)
        theory.update(getattr(params, 'theory', None) or {})
        self.params.theory = theory
        self.params.axis1 = getattr(params, 'axis1', 'psi_p')
        self.params.grid1 = as_list(getattr(params, 'grid1', None))
        self.params.axis2 = getattr(params, 'axis2', 'snr')
        self.params.grid2 = as_list(getattr(params, 'grid2', None))
        self.params.out = getattr(params, 'out', None)

    def validate(self):
        pr = self.params
        check_known_keys('theory', pr.theory, THEORY_KEYS)
        for axis, grid in ((pr.axis1, pr.grid1), (pr.axis2, pr.grid2)):
            if axis not in GAIN_AXES:
                raise ConfigError(f'gain map axis must be one of {GAIN_AXES}, got {axis!r}')
            if not grid:
                raise ConfigError(f'grid of axis {axis} must be non-empty')
        if pr.axis1 == pr.axis2:
            raise ConfigError('gain map axes must differ')

    def theory_at(self, value1, value2):
        """Return the balanced-prior TheoryParams at one grid point."""
        pr = self.params
        vals = dict(pr.theory)
        vals[pr.axis1] = value1
        vals[pr.axis2] = value2
        return theory_params(vals)

    @classmethod
    def from_sections(cls, sections, overrides=None, verbose=False):
        """Build a GainMapSpec from [theory] and [gain_map] sections."""
        _, overrides = split_overrides(overrides)
        gain_map = dict(sections.get('gain_map', {}))
        check_known_keys('gain_map', gain_map, GAIN_MAP_KEYS)
        if 'out' in overrides:
            gain_map['out'] = overrides['out']
        gain_map['theory'] = dict(sections.get('theory', {}))
        return cls(gain_map, verbose=verbose)


class ClusterExpSpec(Base):
    """Label-flip sweep of the cluster estimation experiment."""

    def set_params(self, params):
        super().set_params(params)
        params = dict_to_namespace(params)

        self.params.name = getattr(params, 'name', 'ClusterExpSpec')
        problem = getattr(params, 'problem', None)
        if not isinstance(problem, ProblemConfig):
            defaults = dict(CLUSTER_PROBLEM_DEFAULTS)
            defaults.update(problem or {})
            problem = ProblemConfig(defaults)
        self.params.problem = problem
        self.params.flip_rates = as_list(
            getattr(params, 'flip_rates', [0.0, 0.01, 0.02, 0.05, 0.1])
        )
        self.params.replicates = getattr(params, 'replicates', 5)
        self.params.out = getattr(params, 'out', None)
        self.params.n_jobs = getattr(params, 'n_jobs', 1)

    def validate(self):
        pr = self.params
        if not pr.flip_rates:
            raise ConfigError('flip_rates must be non-empty')
        if any(not 0 <= q <= 1 for q in pr.flip_rates):
            raise ConfigError(f'flip rates must lie in [0, 1], got {pr.flip_rates}')
        if isinstance(pr.replicates, bool) or pr.replicates < 1:
            raise ConfigError(f'replicates must be at least 1, got {pr.replicates}')

    @classmethod
    def from_sections(cls, sections, overrides=None, verbose=False):
        """Build a ClusterExpSpec from [problem], [priors] and [cluster] sections."""
        problem_over, overrides = split_overrides(overrides)
        overrides.pop('mc_test', None)
        merged = dict(sections)
        merged['problem'] = dict(CLUSTER_PROBLEM_DEFAULTS, **sections.get('problem', {}))
        problem = ProblemConfig.from_sections(merged, problem_over)
        cluster = dict(sections.get('cluster', {}))
        check_known_keys('cluster', cluster, CLUSTER_KEYS)
        cluster.update(overrides)
        cluster['problem'] = problem
        return cls(cluster, verbose=verbose)


def fit_estimator(name, ds, gt, cfg, rng):
    """Fit one of the named estimators on a dataset."""
    if name == 'min_norm':
        return min_norm_fit(ds.X, ds.y)
    if name == 'look_alike_true':
        return fit_look_alike(ds, gt, mode=cfg.params.centers)
    if name == 'look_alike_estimated':
        est = kmeans(ds.X[:cfg.params.p], cfg.params.k, rng)
        return fit_look_alike_estimated(ds, est.centers_s, est.labels)
    raise ConfigError(f'unknown estimator {name!r}')


def theory_risk(cfg, name, Ut_theta0s):
    """
    Predicted risk of a named estimator at the aspect ratios of cfg, averaged over the
    alignment vectors U_s^T theta0_s of the replicates (a single vector or a list).
    Estimators built from estimated clusters share the look-alike prediction.
    """
    tp = TheoryParams.from_problem(cfg)
    predict = risk_minnorm if name == 'min_norm' else risk_lookalike
    if Ut_theta0s is None or np.ndim(Ut_theta0s) == 1:
        return predict(tp, Ut_theta0s).risk
    # Unbalanced priors make the prediction depend on the drawn frame
    return float(np.mean([predict(tp, vec).risk for vec in Ut_theta0s]))


def config_columns(cfg):
    """Return the cfg_* columns that identify a ProblemConfig exactly."""
    cols = {}
    for key in PROBLEM_KEYS:
        cols[CFG_PREFIX + key] = getattr(cfg.params, key)
    cols[CFG_PREFIX + 'priors'] = ';'.join(repr(float(x)) for x in cfg.priors)
    return cols


def config_from_row(row):
    """Rebuild the exact ProblemConfig of a sweep CSV row (dict or pandas Series)."""
    params = {}
    for key in PROBLEM_KEYS:
        val = row[CFG_PREFIX + key]
        params[key] = val.item() if isinstance(val, np.generic) else val
    if isinstance(params['centers'], bool):
        # pandas parses the bare word 'true' as a boolean
        params['centers'] = str(params['centers']).lower()
    params['priors'] = [float(tok) for tok in str(row[CFG_PREFIX + 'priors']).split(';')]
    return ProblemConfig(params)


def _sweep_replicate(spec, cfg, key, rep):
    """Fit every estimator on one replicate; return risks and U_s^T theta0_s."""
    pr = spec.params
    rng = np.random.default_rng(replicate_seed(pr.problem.params.seed, key, rep))
    gt = build_ground_truth(cfg, rng)
    ds = sample_dataset(cfg, gt, rng)

    risks = {}
    for name in pr.estimators:
        model = fit_estimator(name, ds, gt, cfg, rng)
        if pr.mc_test:
            risks[name] = risk_monte_carlo(model.theta, gt, cfg, pr.mc_test, rng)[0]
        else:
            risks[name] = risk_closed_form(model.theta, gt, cfg)
    return risks, gt.Ut_theta0s


def run_sweep(spec, verbose=False):
    """
    Run a sweep and return its table. For each grid point and replicate: build the
    ground truth, sample data, fit the estimators and evaluate their risk; aggregate
    mean and standard error per grid point and attach the predicted risk. Grid points
    near an interpolation threshold get an empty prediction and a warning.

    Parameters
    ----------
    spec : SweepSpec
        Sweep specification; the CSV is written to spec.params.out if set.

    Returns
    -------
    df : DataFrame
        One row per (series value, grid value, estimator).
    """
    pr = spec.params
    seed = pr.problem.params.seed
    points = []
    for si, series_value in enumerate(spec.series()):
        for gi, value in enumerate(pr.grid):
            key = (si, gi) if pr.series_axis is not None else gi
            points.append((key, series_value, value, spec.config_at(value, series_value)))

    tasks = [(pi, rep) for pi in range(len(points)) for rep in range(pr.replicates)]

    def run_task(task):
        pi, rep = task
        key, _, _, cfg = points[pi]
        return _sweep_replicate(spec, cfg, key, rep)

    with Timer(f'sweep over {pr.axis}', verbose=verbose):
        results = map_tasks(run_task, tasks, pr.n_jobs, desc='sweep', verbose=verbose)

    rows = []
    for pi, (key, series_value, value, cfg) in enumerate(points):
        chunk = results[pi * pr.replicates:(pi + 1) * pr.replicates]
        Ut_theta0s = [vec for _, vec in chunk]
        for name in pr.estimators:
            risk_mean, risk_stderr = mean_and_stderr([risks[name] for risks, _ in chunk])
            warning = ''
            try:
                theory = theory_risk(cfg, name, Ut_theta0s)
            except PoleError as e:
                theory = np.nan
                warning = 'pole'
                print_warn(f'{pr.axis}={value} {name}: {e}')

            row = {
                'axis_value': axis_value(pr.axis, value),
                'psi_d': cfg.psi_d,
                'psi_p': cfg.psi_p,
                'estimator': name,
                'risk_mean': risk_mean,
                'risk_stderr': risk_stderr,
                'risk_theory': theory,
                'replicates': pr.replicates,
                'seed': seed,
                'warning': warning,
                'axis': pr.axis,
                'series_axis': pr.series_axis or '',
                'series_value': np.nan if series_value is None else series_value,
                'mc_test': pr.mc_test,
            }
            row.update(config_columns(cfg))
            rows.append(row)

    df = pd.DataFrame(rows)
    if pr.out:
        write_output(rows, pr.out, 'sweep')
    return df


def run_gain_map(spec, verbose=False):
    """
    Evaluate the predicted gain on the grid of a GainMapSpec; no simulation. Points
    near an interpolation threshold are kept with an empty gain and a warning.

    Returns
    -------
    df : DataFrame
        Columns axis1_name, axis1, axis2_name, axis2, log_gain, gain, case, warning.
    """
    pr = spec.params
    rows = []
    with Timer('gain map', verbose=verbose):
        for v1 in pr.grid1:
            for v2 in pr.grid2:
                tp = spec.theory_at(v1, v2)
                row = {
                    'axis1_name': pr.axis1,
                    'axis1': float(v1),
                    'axis2_name': pr.axis2,
                    'axis2': float(v2),
                    'log_gain': np.nan,
                    'gain': np.nan,
                    'case': np.nan,
                    'warning': '',
                }
                try:
                    row['case'] = gain_case(tp)
                    row['gain'] = gain_theory(tp)
                    row['log_gain'] = float(np.log(row['gain']))
                except PoleError as e:
                    row['warning'] = 'pole'
                    print_warn(f'{pr.axis1}={v1}, {pr.axis2}={v2}: {e}')
                rows.append(row)

    df = pd.DataFrame(rows)
    if pr.out:
        write_output(rows, pr.out, 'gain_map')
    return df


def simulate(cfg, estimators=ESTIMATORS[:2], replicates=1, mc_test=0, seed=None,
             dump_data=None, dump_model=None):
    """
    Evaluate the estimators on one configuration.

    Parameters
    ----------
    cfg : ProblemConfig
        Problem configuration.
    estimators : list
        Estimator names.
    replicates : int
        Number of datasets.
    mc_test : int
        Monte Carlo test set size (0 for closed form only).
    seed : int
        Master seed; defaults to cfg.params.seed.
    dump_data : str
        If given, the first replicate's dataset is written here as CSV.
    dump_model : str
        If given, the first replicate's fitted coefficients are written here (with
        the estimator name appended to the file stem when several are fitted).

    Returns
    -------
    rows : list
        One dict per estimator with closed-form, Monte Carlo and predicted risks and
        the gain over min-norm.
    """
    estimators = list(estimators)
    if replicates < 1:
        raise ConfigError(f'replicates must be at least 1, got {replicates}')
    if any(name not in ESTIMATORS for name in estimators):
        raise ConfigError(f'estimators must be a subset of {ESTIMATORS}')
    seed = cfg.params.seed if seed is None else seed

    reports = {name: [] for name in estimators}
    Ut_theta0s = []
    for rep in range(replicates):
        rng = np.random.default_rng(replicate_seed(seed, 0, rep))
        gt = build_ground_truth(cfg, rng)
        ds = sample_dataset(cfg, gt, rng)
        Ut_theta0s.append(gt.Ut_theta0s)
        if rep == 0 and dump_data:
            dump_dataset_csv(ds, dump_data)
        for name in estimators:
            model = fit_estimator(name, ds, gt, cfg, rng)
            reports[name].append(risk_report(model.theta, gt, cfg, mc_test, rng))
            if rep == 0 and dump_model:
                dump_model_csv(model, model_dump_path(dump_model, name, len(estimators)))

    tp = TheoryParams.from_problem(cfg)
    try:
        gain_case(tp)
        theory_gain = gain(theory_risk(cfg, 'min_norm', Ut_theta0s),
                           theory_risk(cfg, 'look_alike_true', Ut_theta0s))
    except PoleError:
        theory_gain = np.nan

    rows = []
    for name in estimators:
        closed, closed_se = mean_and_stderr([r.risk_closed_form for r in reports[name]])
        row = {
            'estimator': name,
            'risk_closed_form': closed,
            'risk_closed_form_stderr': closed_se,
            'risk_monte_carlo': np.nan,
            'mc_std_error': np.nan,
            'risk_theory': np.nan,
            'gain': np.nan,
            'gain_theory': np.nan,
            'replicates': replicates,
            'seed': seed,
            'warning': '',
        }
        if mc_test:
            row['risk_monte_carlo'] = float(np.mean([r.risk_monte_carlo for r in reports[name]]))
            se = np.array([r.mc_std_error for r in reports[name]])
            row['mc_std_error'] = float(np.sqrt(np.sum(se ** 2)) / len(se))
        try:
            row['risk_theory'] = theory_risk(cfg, name, Ut_theta0s)
        except PoleError:
            row['warning'] = 'pole'
        if name != 'min_norm' and 'min_norm' in reports:
            ref = np.mean([r.risk_closed_form for r in reports['min_norm']])
            row['gain'] = gain(ref, closed)
            row['gain_theory'] = theory_gain
        rows.append(row)
    return rows


def model_dump_path(path, name, n_models):
    """Path of one model dump; the estimator name is appended when several are dumped."""
    if n_models == 1:
        return path
    root, ext = os.path.splitext(path)
    return f'{root}_{name}{ext or ".csv"}'


def run_cluster_experiment(spec, verbose=False):
    """Run the cluster estimation experiment of a ClusterExpSpec and write its CSV."""
    pr = spec.params
    rows, slope = cluster_experiment(
        pr.problem, pr.flip_rates, pr.replicates, n_jobs=pr.n_jobs, verbose=verbose
    )
    print_info(f'risk gap linear envelope slope: {slope:.6g}')
    if pr.out:
        write_output(rows, pr.out, 'cluster')
    return pd.DataFrame(rows), slope


def write_output(rows, out, kind):
    """Write rows as CSV; file outputs also get a sibling plotting script."""
    write_csv(rows, out)
    if out != '-':
        write_plot_script(out, kind)
