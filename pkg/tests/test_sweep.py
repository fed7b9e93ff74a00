import os

import numpy as np
import pandas as pd
import pytest

from lookalike.exp.plot_script import plot_script_path
from lookalike.exp.presets import PRESETS, get_preset, validation_grid
from lookalike.exp.sweep import (
    ESTIMATORS,
    GainMapSpec,
    SweepSpec,
    config_from_row,
    run_gain_map,
    run_sweep,
    simulate,
    theory_params,
    theory_risk,
)
from lookalike.models.problem import ProblemConfig, build_ground_truth
from lookalike.theory.asymptotics import TheoryParams, risk_lookalike
from lookalike.util.csv_util import read_csv
from lookalike.util.errors import ConfigError
from lookalike.util.misc_util import replicate_seed


def small_sweep(**kwargs):
    params = {
        'problem': {'d': 60, 'p': 20, 'k': 2, 'mu': 2.0, 'seed': 7},
        'axis': 'n',
        'grid': [100, 25],
        'replicates': 3,
        'estimators': ['min_norm', 'look_alike_true'],
    }
    params.update(kwargs)
    return SweepSpec(params)


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        small_sweep(axis='theta')
    with pytest.raises(ConfigError):
        small_sweep(grid=[])
    with pytest.raises(ConfigError):
        small_sweep(estimators=['ridge'])
    with pytest.raises(ConfigError):
        small_sweep(series_axis='n', series_grid=[1])
    with pytest.raises(ConfigError):
        small_sweep(mc_test=1)


def test_run_sweep_rows():
    df = run_sweep(small_sweep())
    assert len(df) == 4
    assert list(df['estimator']) == ['min_norm', 'look_alike_true'] * 2
    assert list(df['axis_value']) == [100, 100, 25, 25]
    np.testing.assert_allclose(df['psi_d'], [0.6, 0.6, 2.4, 2.4])
    assert (df['replicates'] == 3).all()
    assert np.all(np.isfinite(df['risk_mean']))
    assert np.all(np.isfinite(df['risk_theory']))
    assert (df['warning'] == '').all()
    assert (df['risk_stderr'] > 0).all()


def test_run_sweep_deterministic():
    first = run_sweep(small_sweep())
    second = run_sweep(small_sweep())
    pd.testing.assert_frame_equal(first, second)

    threaded = run_sweep(small_sweep(n_jobs=2))
    np.testing.assert_allclose(threaded['risk_mean'], first['risk_mean'], rtol=1e-9)


def test_run_sweep_seed_changes_results():
    first = run_sweep(small_sweep())
    other = run_sweep(small_sweep(problem={'d': 60, 'p': 20, 'k': 2, 'mu': 2.0, 'seed': 8}))
    assert not np.allclose(first['risk_mean'], other['risk_mean'])


def test_adding_grid_points_keeps_existing_streams():
    base = run_sweep(small_sweep(grid=[100]))
    longer = run_sweep(small_sweep(grid=[100, 25]))
    np.testing.assert_array_equal(base['risk_mean'], longer['risk_mean'][:2])


def test_single_grid_point_single_replicate():
    df = run_sweep(small_sweep(grid=[100], replicates=1))
    assert len(df) == 2
    assert df['risk_stderr'].isna().all()


def test_pole_rows_are_kept():
    df = run_sweep(small_sweep(grid=[40]))
    la = df[df['estimator'] == 'look_alike_true'].iloc[0]
    mn = df[df['estimator'] == 'min_norm'].iloc[0]
    assert la['warning'] == 'pole'
    assert np.isnan(la['risk_theory'])
    assert np.isfinite(la['risk_mean'])
    assert mn['warning'] == ''
    assert np.isfinite(mn['risk_theory'])


def test_series_axis():
    spec = small_sweep(series_axis='r_s', series_grid=[0.5, 1.0], replicates=2)
    df = run_sweep(spec)
    assert len(df) == 8
    assert sorted(set(df['series_value'])) == [0.5, 1.0]
    assert (df['series_axis'] == 'r_s').all()
    assert (df.loc[df['series_value'] == 0.5, 'cfg_r_s'] == 0.5).all()


def test_monte_carlo_sweep():
    df = run_sweep(small_sweep(grid=[100], replicates=2, mc_test=5000))
    assert (df['mc_test'] == 5000).all()
    assert np.all(np.isfinite(df['risk_mean']))


def test_config_from_row_round_trip(tmp_path):
    out = str(tmp_path / 'sweep.csv')
    spec = small_sweep(out=out, problem={'d': 60, 'p': 20, 'k': 2, 'mu': 2.0, 'seed': 7,
                                         'priors': [0.25, 0.75]})
    run_sweep(spec)

    df = read_csv(out)
    for (_, row), value in zip(df.iloc[::2].iterrows(), [100, 25]):
        cfg = config_from_row(row)
        assert cfg.to_dict() == spec.config_at(value).to_dict()


def test_sweep_writes_plot_script(tmp_path):
    out = str(tmp_path / 'results' / 'sweep.csv')
    run_sweep(small_sweep(out=out))
    assert os.path.isfile(out)
    script = plot_script_path(out)
    assert script.endswith('sweep.plot.py')
    with open(script) as f:
        text = f.read()
    assert 'plot_sweep' in text
    assert 'sweep.csv' in text


def test_theory_params():
    tp = theory_params({'psi_d': 0.9, 'psi_p': 0.5, 'sigma': 2.0, 'snr': 1.5, 'k': 4})
    assert tp.r_s == pytest.approx(3.0)
    assert tp.k == 4
    assert tp.is_balanced()
    with pytest.raises(ConfigError):
        theory_params({'k': 0})
    with pytest.raises(ConfigError):
        theory_params({'gamma': 1.0})


def test_gain_map_case1_crossing_grows_with_psi_p():
    _, spec = get_preset('fig3a')
    df = run_gain_map(spec)
    assert len(df) == 500
    assert (df['case'] == 1).all()

    crossings = []
    for psi_p in (0.1, 0.3, 0.5, 0.7, 0.9):
        sub = df[df['axis1'] == psi_p].sort_values('axis2')
        assert np.all(np.diff(sub['log_gain']) < 0)
        crossings.append(sub.loc[sub['log_gain'] < 0, 'axis2'].iloc[0])
    assert np.all(np.diff(crossings) > 0)
    assert crossings[0] == pytest.approx(1.05)


def test_gain_map_case2_monotone():
    _, spec = get_preset('fig4a')
    df = run_gain_map(spec)
    assert (df['case'] == 2).all()

    curves = []
    for r_ns in (0.2, 1.0, 2.0, 5.0):
        sub = df[df['axis1'] == r_ns].sort_values('axis2')
        assert np.all(np.diff(sub['log_gain']) <= 0)
        curves.append(sub['log_gain'].to_numpy())
    assert np.all(np.diff(np.array(curves), axis=0) > 0)


def test_gain_map_pole_rows():
    spec = GainMapSpec({'theory': {'psi_d': 2.0}, 'axis1': 'psi_p', 'grid1': [1.0, 0.5],
                        'axis2': 'mu', 'grid2': [1.0]})
    df = run_gain_map(spec)
    assert list(df['warning']) == ['pole', '']
    assert np.isnan(df['log_gain'].iloc[0])
    assert df['case'].iloc[1] == 3


def test_gain_map_spec_validation():
    with pytest.raises(ConfigError):
        GainMapSpec({'axis1': 'mu', 'grid1': [1.0], 'axis2': 'mu', 'grid2': [2.0]})
    with pytest.raises(ConfigError):
        GainMapSpec({'axis1': 'n', 'grid1': [1.0], 'axis2': 'mu', 'grid2': [2.0]})
    with pytest.raises(ConfigError):
        GainMapSpec({'axis1': 'psi_p', 'grid1': [], 'axis2': 'mu', 'grid2': [2.0]})


def test_simulate_dumps(tmp_path):
    cfg = ProblemConfig({'n': 80, 'd': 50, 'p': 20, 'k': 2, 'mu': 2.0, 'seed': 3})
    data = tmp_path / 'data.csv'
    model = tmp_path / 'model.csv'
    rows = simulate(cfg, estimators=['min_norm', 'look_alike_true'], replicates=2,
                    dump_data=str(data), dump_model=str(model))

    assert [row['estimator'] for row in rows] == ['min_norm', 'look_alike_true']
    assert os.path.isfile(data)
    assert os.path.isfile(tmp_path / 'model_min_norm.csv')
    assert os.path.isfile(tmp_path / 'model_look_alike_true.csv')
    assert read_csv(data).shape == (80, 52)

    mn, la = rows
    assert np.isnan(mn['gain'])
    assert la['gain'] == pytest.approx(mn['risk_closed_form'] / la['risk_closed_form'])
    assert np.isfinite(la['gain_theory'])
    assert np.isnan(la['risk_monte_carlo'])


def test_simulate_all_estimators():
    cfg = ProblemConfig({'n': 80, 'd': 50, 'p': 20, 'k': 2, 'mu': 4.0, 'seed': 5})
    rows = simulate(cfg, estimators=ESTIMATORS, mc_test=4000)
    assert len(rows) == 3
    for row in rows:
        assert np.isfinite(row['risk_closed_form'])
        assert np.isfinite(row['risk_monte_carlo'])
        assert abs(row['risk_monte_carlo'] - row['risk_closed_form']) < 5 * row['mc_std_error']

    with pytest.raises(ConfigError):
        simulate(cfg, estimators=['ridge'])


def test_theory_averages_replicate_alignments():
    problem = {'d': 100, 'p': 50, 'k': 2, 'mu': 2.0, 'priors': [0.2, 0.8], 'seed': 7}
    cfg = ProblemConfig(dict(problem, n=40))
    vecs = [build_ground_truth(cfg, np.random.default_rng(replicate_seed(7, 0, rep))).Ut_theta0s
            for rep in range(4)]
    tp = TheoryParams.from_problem(cfg)
    per_rep = [risk_lookalike(tp, vec).risk for vec in vecs]
    # Unbalanced priors make the prediction depend on the drawn frame
    assert np.ptp(per_rep) > 1e-8

    assert theory_risk(cfg, 'look_alike_true', vecs) == pytest.approx(np.mean(per_rep), rel=1e-12)
    assert theory_risk(cfg, 'look_alike_true', vecs[1]) == pytest.approx(per_rep[1], rel=1e-12)

    rows = simulate(cfg, estimators=['look_alike_true'], replicates=4)
    assert rows[0]['risk_theory'] == pytest.approx(np.mean(per_rep), rel=1e-12)

    spec = SweepSpec({'problem': problem, 'axis': 'n', 'grid': [40], 'replicates': 4,
                      'estimators': ['look_alike_true']})
    df = run_sweep(spec)
    assert df['risk_theory'].iloc[0] == pytest.approx(np.mean(per_rep), rel=1e-12)


def test_presets():
    assert validation_grid() == [1500, 1000, 750, 600, 429, 375, 250, 231, 214, 200, 188,
                                 176, 167]
    for name, (kind, _) in PRESETS.items():
        got_kind, spec = get_preset(name, {'seed': 3, 'out': 'x.csv'})
        assert got_kind == kind
        assert spec.params.out == 'x.csv'
    with pytest.raises(ConfigError):
        get_preset('fig9')


@pytest.mark.slow
@pytest.mark.parametrize('preset', ['fig2a', 'fig2b', 'fig2c', 'fig2d', 'fig2e', 'fig2f'])
def test_validation_sweep_matches_theory(preset):
    _, spec = get_preset(preset)
    df = run_sweep(spec, verbose=True)
    assert (df['warning'] == '').all()
    tol = np.maximum(0.05 * df['risk_theory'], 4 * df['risk_stderr'])
    err = np.abs(df['risk_mean'] - df['risk_theory'])
    assert (err <= tol).all(), df.loc[err > tol, ['axis_value', 'risk_mean', 'risk_theory']]
