"""
Named experiment presets: risk validation sweeps, theory gain maps, the label-flip
cluster experiment, and the binomial GLM experiment.
"""

import numpy as np

from ..glm.glm_lab import GlmConfig
from ..util.errors import ConfigError
from .sweep import (
    CLUSTER_PROBLEM_DEFAULTS,
    ClusterExpSpec,
    GainMapSpec,
    SweepSpec,
    split_overrides,
)

# Values of (d - p) / n, away from both interpolation thresholds (psi_d = 5/3 gap)
VALIDATION_GAPS = (0.2, 0.3, 0.4, 0.5, 0.7, 0.8, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8)
VALIDATION_PROBLEM = {'d': 500, 'p': 200, 'k': 3, 'mu': 5.0, 'rho': 0.3}


def validation_grid(d=500, p=200, gaps=VALIDATION_GAPS):
    """Sample sizes n placing psi_d - psi_p = (d - p) / n near the given values."""
    return [int(round((d - p) / gap)) for gap in gaps]


def _validation_sweep(estimator, series_axis, series_grid, fixed, overrides):
    problem_over, overrides = split_overrides(overrides)
    problem = dict(VALIDATION_PROBLEM)
    problem.update(fixed)
    problem.update(problem_over)
    params = {
        'problem': problem,
        'axis': 'n',
        'grid': validation_grid(),
        'series_axis': series_axis,
        'series_grid': series_grid,
        'replicates': 20,
        'estimators': [estimator],
    }
    params.update(overrides)
    return SweepSpec(params)


def _gain_map(theory, axis1, grid1, axis2, grid2, overrides):
    _, overrides = split_overrides(overrides)
    params = {'theory': theory, 'axis1': axis1, 'grid1': grid1, 'axis2': axis2,
              'grid2': grid2}
    params.update({key: val for key, val in overrides.items() if key == 'out'})
    return GainMapSpec(params)


def fig2a(overrides=None):
    return _validation_sweep('look_alike_true', 'r_s', [0.5, 1.0, 2.0],
                             {'sigma': 1.0, 'r_ns': 2.0}, overrides)


def fig2b(overrides=None):
    return _validation_sweep('min_norm', 'r_s', [0.5, 1.0, 2.0],
                             {'sigma': 1.0, 'r_ns': 2.0}, overrides)


def fig2c(overrides=None):
    return _validation_sweep('look_alike_true', 'r_ns', [1.0, 2.0, 3.0],
                             {'sigma': 1.0, 'r_s': 1.0}, overrides)


def fig2d(overrides=None):
    return _validation_sweep('min_norm', 'r_ns', [1.0, 2.0, 3.0],
                             {'sigma': 1.0, 'r_s': 1.0}, overrides)


def fig2e(overrides=None):
    return _validation_sweep('look_alike_true', 'sigma', [0.5, 1.0, 2.0],
                             {'r_s': 1.0, 'r_ns': 2.0}, overrides)


def fig2f(overrides=None):
    return _validation_sweep('min_norm', 'sigma', [0.5, 1.0, 2.0],
                             {'r_s': 1.0, 'r_ns': 2.0}, overrides)


def fig3a(overrides=None):
    """Both estimators underparametrized: gain versus SNR for several psi_p."""
    theory = {'psi_d': 0.9, 'rho': 0.3, 'sigma': 1.0}
    return _gain_map(theory, 'psi_p', [0.1, 0.3, 0.5, 0.7, 0.9],
                     'snr', list(np.linspace(0.05, 5.0, 100)), overrides)


def fig3b(overrides=None):
    theory = {'psi_d': 0.9, 'psi_p': 0.5, 'sigma': 1.0}
    return _gain_map(theory, 'rho', [0.1, 0.3, 0.5, 0.7, 0.9],
                     'snr', list(np.linspace(0.05, 5.0, 100)), overrides)


def fig4a(overrides=None):
    """Look-alike underparametrized, min-norm overparametrized: gain versus mu."""
    theory = {'psi_d': 2.0, 'psi_p': 1.7, 'sigma': 1.0, 'k': 5, 'r_s': 0.5, 'rho': 0.3}
    return _gain_map(theory, 'r_ns', [0.2, 1.0, 2.0, 5.0],
                     'mu', list(np.linspace(0.5, 10.0, 40)), overrides)


def fig4b(overrides=None):
    theory = {'psi_d': 2.0, 'psi_p': 1.7, 'sigma': 1.0, 'k': 5, 'r_s': 0.5, 'r_ns': 0.2}
    return _gain_map(theory, 'rho', [0.1, 0.3, 0.5, 0.7, 0.9],
                     'mu', list(np.linspace(0.5, 10.0, 40)), overrides)


def fig5a(overrides=None):
    """Both estimators overparametrized: gain versus r_ns for several psi_p."""
    theory = {'psi_d': 4.0, 'sigma': 0.1, 'rho': 0.3, 'mu': 5.0, 'k': 5, 'r_s': 0.5}
    return _gain_map(theory, 'psi_p', [0.5, 1.0, 1.5, 2.0, 2.5],
                     'r_ns', list(np.linspace(0.1, 10.0, 50)), overrides)


def fig5b(overrides=None):
    theory = {'psi_d': 4.0, 'sigma': 0.1, 'rho': 0.3, 'mu': 5.0, 'k': 5, 'r_ns': 2.0}
    return _gain_map(theory, 'psi_p', [0.5, 1.0, 1.5, 2.0, 2.5],
                     'snr', list(np.linspace(0.5, 30.0, 60)), overrides)


def fig6(overrides=None):
    """Binomial GLM defaults: n=200, d=180, N=1000, 50 replicates, 50K test samples."""
    problem_over, overrides = split_overrides(overrides)
    overrides.pop('mc_test', None)
    params = {'problem': problem_over}
    params.update(overrides)
    return GlmConfig(params)


def prop1(overrides=None):
    """Label-flip cluster experiment with psi_d - psi_p = 0.25."""
    problem_over, overrides = split_overrides(overrides)
    overrides.pop('mc_test', None)
    problem = dict(CLUSTER_PROBLEM_DEFAULTS)
    problem.update(problem_over)
    params = {'problem': problem}
    params.update(overrides)
    return ClusterExpSpec(params)


PRESETS = {
    'fig2a': ('sweep', fig2a),
    'fig2b': ('sweep', fig2b),
    'fig2c': ('sweep', fig2c),
    'fig2d': ('sweep', fig2d),
    'fig2e': ('sweep', fig2e),
    'fig2f': ('sweep', fig2f),
    'fig3a': ('gain_map', fig3a),
    'fig3b': ('gain_map', fig3b),
    'fig4a': ('gain_map', fig4a),
    'fig4b': ('gain_map', fig4b),
    'fig5a': ('gain_map', fig5a),
    'fig5b': ('gain_map', fig5b),
    'fig6': ('glm', fig6),
    'prop1': ('cluster', prop1),
}


def get_preset(name, overrides=None):
    """Return (kind, spec) for a named preset."""
    if name not in PRESETS:
        raise ConfigError(f'unknown preset {name!r}; choose from {", ".join(PRESETS)}')
    kind, build = PRESETS[name]
    return kind, build(overrides)
