"""
Miscellaneous utilities.
"""

from argparse import Namespace
from concurrent.futures import ThreadPoolExecutor, as_completed
import sys

import numpy as np
from tqdm import tqdm

from .errors import NumericalError


def dict_to_namespace(params):
    """
    If params is a dict, convert it to a Namespace, and return it.

    Parameters
    ----------
    params : Namespace_or_dict
        Namespace or dict.

    Returns
    -------
    params : Namespace
        Namespace of params
    """
    # If params is a dict, convert to Namespace
    if isinstance(params, dict):
        params = Namespace(**params)

    return params


def print_info(msg):
    """Print an informational message to stderr."""
    print('*[INFO] ' + msg, file=sys.stderr)


def print_warn(msg):
    """Print a warning message to stderr."""
    print('*[WARN] ' + msg, file=sys.stderr)


def print_error(msg):
    print('*[ERROR] ' + msg, file=sys.stderr)


def make_rng(seed):
    """Return a numpy Generator for an int seed, a SeedSequence, or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replicate_seed(master_seed, grid_index, replicate_index):
    """
    Return the SeedSequence for one replicate. Keyed on the indices (grid_index may be
    a tuple for nested grids), so that adding grid points never changes the stream of
    an existing replicate.
    """
    key = list(grid_index) if isinstance(grid_index, tuple) else [grid_index]
    entropy = [int(master_seed)] + [int(i) for i in key] + [int(replicate_index)]
    return np.random.SeedSequence(entropy)


def replicate_rngs(master_seed, grid_index, n_rep):
    """Return a list of n_rep independent Generators for one grid point."""
    return [
        np.random.default_rng(replicate_seed(master_seed, grid_index, r))
        for r in range(n_rep)
    ]


def mean_and_stderr(values):
    """Return mean and standard error of a 1d array (stderr is nan for one value)."""
    arr = np.asarray(values, dtype=float).reshape(-1)
    mean = float(np.mean(arr))
    if arr.size < 2:
        return mean, float('nan')
    return mean, float(np.std(arr, ddof=1) / np.sqrt(arr.size))


def check_finite(name, *arrays):
    """Raise NumericalError if any array has a non-finite entry."""
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f'{name}: non-finite input')


def map_tasks(func, tasks, n_jobs=1, desc=None, verbose=False):
    """
    Apply func to every task and return the results in task order. With n_jobs > 1
    the tasks run in a thread pool; numpy releases the GIL in the linear algebra.
    """
    tasks = list(tasks)
    progress = tqdm(total=len(tasks), desc=desc, disable=not verbose, file=sys.stderr)
    with progress:
        if n_jobs is None or n_jobs <= 1:
            results = []
            for task in tasks:
                results.append(func(task))
                progress.update(1)
            return results

        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(func, task) for task in tasks]
            for fut in as_completed(futures):
                progress.update(1)
            return [fut.result() for fut in futures]
