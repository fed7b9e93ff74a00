"""
Plotting scripts emitted next to experiment CSVs, and the functions they call.
Nothing is rendered while an experiment runs; the CSV is the contract.
"""

import os

import numpy as np

from ..util.csv_util import read_csv

PLOT_KINDS = ('sweep', 'gain_map', 'cluster', 'glm')

SCRIPT_TEMPLATE = '''"""
Plot {csv_name}. Written by the lookalike lab next to the CSV it reads.
"""

import pathlib

from lookalike.exp.plot_script import {func}

here = pathlib.Path(__file__).resolve().parent
{func}(here / {csv_name!r}, str(here / {stem!r}))
'''


def plot_script_path(csv_path):
    """Return the path of the plotting script that belongs to a CSV."""
    root, _ = os.path.splitext(csv_path)
    return root + '.plot.py'


def write_plot_script(csv_path, kind):
    """Write a plotting script for the CSV at csv_path and return its path."""
    if kind not in PLOT_KINDS:
        raise ValueError(f'unknown plot kind {kind!r}')
    csv_name = os.path.basename(csv_path)
    stem = os.path.splitext(csv_name)[0]
    path = plot_script_path(csv_path)
    with open(path, 'w') as f:
        f.write(SCRIPT_TEMPLATE.format(csv_name=csv_name, stem=stem, func=f'plot_{kind}'))
    return path


def _pyplot():
    import matplotlib.pyplot as plt
    import neatplot

    neatplot.set_style()
    return plt, neatplot


def plot_sweep(csv_path, out_stem):
    """Risk versus psi_d - psi_p: predicted curves and simulated means with error bars."""
    plt, neatplot = _pyplot()

    df = read_csv(csv_path)
    df['gap'] = df['psi_d'] - df['psi_p']
    fig, ax = plt.subplots()
    groups = df.groupby(['estimator', 'series_value'], dropna=False, sort=False)
    for (name, series_value), sub in groups:
        sub = sub.sort_values('gap')
        label = name
        if not np.isnan(series_value):
            label = f'{name}, {sub["series_axis"].iloc[0]}={series_value:g}'
        line, = ax.plot(sub['gap'], sub['risk_theory'], label=label)
        ax.errorbar(sub['gap'], sub['risk_mean'], yerr=sub['risk_stderr'].fillna(0.0),
                    fmt='o', color=line.get_color())
    ax.set_xlabel(r'$\psi_d - \psi_p$')
    ax.set_ylabel('risk')
    ax.legend()
    neatplot.save_figure(out_stem)
    plt.close(fig)


def plot_gain_map(csv_path, out_stem):
    """log gain versus the second axis, one curve per value of the first axis."""
    plt, neatplot = _pyplot()

    df = read_csv(csv_path)
    fig, ax = plt.subplots()
    axis1, axis2 = df['axis1_name'].iloc[0], df['axis2_name'].iloc[0]
    for value, sub in df.groupby('axis1', sort=False):
        ax.plot(sub['axis2'], sub['log_gain'], label=f'{axis1}={value:g}')
    ax.axhline(0.0, color='k', linewidth=0.8)
    ax.set_xlabel(axis2)
    ax.set_ylabel(r'$\log \Delta$')
    ax.legend()
    neatplot.save_figure(out_stem)
    plt.close(fig)


def plot_cluster(csv_path, out_stem):
    """Risk gap of the corrupted-cluster estimator versus delta_n."""
    plt, neatplot = _pyplot()

    df = read_csv(csv_path)
    fig, ax = plt.subplots()
    gap = df['risk_lookalike_estimated'] - df['risk_lookalike_true']
    ax.scatter(df['delta_n'], gap)
    ax.set_xlabel(r'$\delta_n$')
    ax.set_ylabel('risk gap')
    neatplot.save_figure(out_stem)
    plt.close(fig)


def plot_glm(csv_path, out_stem):
    """Mean log gain of the look-alike GLM versus r_s, under both risk metrics."""
    plt, neatplot = _pyplot()

    df = read_csv(csv_path)
    fig, ax = plt.subplots()
    ax.errorbar(df['r_s'], df['mean_log_gain'], yerr=df['stderr'], fmt='o-',
                label='response-scale MSE')
    ax.errorbar(df['r_s'], df['mean_log_gain_prob'], yerr=df['stderr_prob'], fmt='s--',
                label='probability-scale MSE')
    ax.axhline(0.0, color='k', linewidth=0.8)
    ax.set_xlabel(r'$r_s$')
    ax.set_ylabel(r'$\log \Delta$')
    ax.legend()
    neatplot.save_figure(out_stem)
    plt.close(fig)
