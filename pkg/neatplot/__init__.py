"""
Neat plotting utilities for Python.
"""

import matplotlib.pyplot as plt

STYLES = {
    'default': {
        'figure.figsize': (5.0, 3.5),
        'figure.dpi': 110,
        'axes.grid': True,
        'grid.alpha': 0.3,
        'axes.spines.top': False,
        'axes.spines.right': False,
        'axes.labelsize': 10,
        'legend.fontsize': 8,
        'legend.frameon': False,
        'lines.linewidth': 1.5,
        'lines.markersize': 4,
        'savefig.dpi': 300,
    },
    'fonts': {
        'font.family': 'serif',
        'mathtext.fontset': 'cm',
        'axes.labelsize': 11,
        'xtick.labelsize': 9,
        'ytick.labelsize': 9,
    },
}


def set_style(style_str='default'):
    """Apply one of the named rc styles ('fonts' is applied on top of 'default')."""
    if style_str not in STYLES:
        raise ValueError(f'unknown style {style_str!r}')
    plt.rcParams.update(STYLES['default'])
    if style_str != 'default':
        plt.rcParams.update(STYLES[style_str])


def save_figure(file_name='figure', ext_list=('pdf', 'png')):
    """Save figure for all extensions in ext_list."""
    if isinstance(ext_list, str):
        ext_list = [ext_list]

    for ext in ext_list:
        save_str = f'{file_name}.{ext}'
        plt.savefig(save_str, bbox_inches='tight')
        print(f'Saved figure {save_str}')


def update_rc(key_str, value):
    """Update matplotlib rc params."""
    plt.rcParams.update({key_str: value})
