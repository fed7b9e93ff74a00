"""
Sampling from the GMM + linear response model, and look-alike anonymization.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..util.csv_util import FLOAT_FORMAT
from ..util.errors import ConfigError, EmptyClusterError
from ..util.misc_util import make_rng


def one_hot(labels, k):
    """Return the k x n one-hot membership matrix of integer labels."""
    labels = np.asarray(labels)
    lam = np.zeros((k, labels.shape[0]))
    lam[labels, np.arange(labels.shape[0])] = 1.0
    return lam


@dataclass(frozen=True)
class Dataset:
    """Features X (d x n, one column per sample), responses y, and cluster labels."""

    X: np.ndarray
    y: np.ndarray
    labels: np.ndarray
    k: int

    def __post_init__(self):
        for arr in (self.X, self.y, self.labels):
            arr.setflags(write=False)

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def d(self):
        return self.X.shape[0]

    @property
    def Lambda(self):
        """One-hot membership matrix (k x n)."""
        return one_hot(self.labels, self.k)

    def cluster_sizes(self):
        return np.bincount(self.labels, minlength=self.k)


@dataclass(frozen=True)
class AnonymizedDataset:
    """Dataset whose sensitive block has been replaced by cluster centers."""

    X_L: np.ndarray
    y: np.ndarray
    labels: np.ndarray
    k: int

    def __post_init__(self):
        for arr in (self.X_L, self.y, self.labels):
            arr.setflags(write=False)

    def as_dataset(self):
        """View the anonymized features as a plain Dataset."""
        return Dataset(X=self.X_L, y=self.y, labels=self.labels, k=self.k)


def check_consistent(cfg, gt):
    """Raise ConfigError if the ground truth does not match the config dimensions."""
    pr = cfg.params
    if (gt.d, gt.p, gt.k) != (pr.d, pr.p, pr.k):
        raise ConfigError(
            f'ground truth has (d, p, k)={(gt.d, gt.p, gt.k)} but config has '
            f'{(pr.d, pr.p, pr.k)}'
        )


def sample_labels(priors, n, rng):
    """Draw n i.i.d. cluster labels from the prior vector."""
    return rng.choice(len(priors), size=n, p=priors)


def sample_features(M, labels, rng):
    """Return X = M Lambda + Z with Z i.i.d. N(0, 1)."""
    d = M.shape[0]
    return M[:, labels] + rng.standard_normal((d, labels.shape[0]))


def sample_dataset(cfg, gt, rng=None):
    """
    Sample a training set: labels i.i.d. from the priors, X = M Lambda + Z and
    y = X^T theta0 + eps with eps i.i.d. N(0, sigma^2).

    Parameters
    ----------
    cfg : ProblemConfig
        Problem configuration.
    gt : GroundTruth
        Ground truth matching cfg.
    rng : Generator_or_int
        Random state.

    Returns
    -------
    ds : Dataset
    """
    check_consistent(cfg, gt)
    pr = cfg.params
    rng = make_rng(pr.seed if rng is None else rng)

    labels = sample_labels(cfg.priors, pr.n, rng)
    X = sample_features(gt.M, labels, rng)
    y = X.T @ gt.theta0 + pr.sigma * rng.standard_normal(pr.n)
    return Dataset(X=X, y=y, labels=labels, k=pr.k)


def anonymize(ds, centers_s):
    """
    Replace the sensitive block (first p rows, p = centers_s.shape[0]) of every sample
    with the center of its cluster. Non-sensitive rows and y are left untouched.
    """
    centers_s = np.asarray(centers_s, dtype=float)
    if centers_s.ndim != 2 or centers_s.shape[1] != ds.k:
        raise ConfigError(f'centers_s must have k={ds.k} columns, got shape {centers_s.shape}')
    p = centers_s.shape[0]
    if p > ds.d:
        raise ConfigError(f'centers_s has {p} rows but the data has d={ds.d}')

    X_L = np.array(ds.X, dtype=float)
    X_L[:p] = centers_s[:, ds.labels]
    return AnonymizedDataset(X_L=X_L, y=ds.y, labels=ds.labels, k=ds.k)


def empirical_centers(ds, p):
    """Return the p x k matrix of within-cluster means of the sensitive rows."""
    counts = ds.cluster_sizes()
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyClusterError(int(empty[0]))
    return (ds.X[:p] @ ds.Lambda.T) / counts


def dataset_frame(ds):
    """Return the dataset as a DataFrame with one row per sample: label, y, x1..xd."""
    df = pd.DataFrame(ds.X.T, columns=[f'x{j + 1}' for j in range(ds.d)])
    df.insert(0, 'y', ds.y)
    df.insert(0, 'label', ds.labels)
    return df


def dump_dataset_csv(ds, path):
    """Write the dataset to CSV for external inspection."""
    dataset_frame(ds).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
