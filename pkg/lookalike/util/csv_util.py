"""
CSV output utilities.
"""

import os

import pandas as pd

FLOAT_FORMAT = '%.17g'


def write_csv(rows, path, columns=None):
    """
    Write a list of row dicts to CSV (or to stdout when path is None or '-').

    Parameters
    ----------
    rows : list
        List of dicts, one per row.
    path : str
        Output path.
    columns : list
        Column order; defaults to the key order of the first row.

    Returns
    -------
    df : DataFrame
        The written table.
    """
    df = pd.DataFrame(rows, columns=columns)
    if path is None or path == '-':
        print(df.to_csv(index=False, float_format=FLOAT_FORMAT), end='')
        return df

    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return df


def read_csv(path):
    """Read a CSV written by write_csv."""
    return pd.read_csv(path, float_precision='round_trip')
