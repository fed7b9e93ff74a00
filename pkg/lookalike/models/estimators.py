"""
Minimum-norm least squares, look-alike estimators, and the ridge consistency oracle.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.linalg import svd

from .problem import GroundTruth
from ..data.synth import Dataset, anonymize, empirical_centers
from ..util.csv_util import FLOAT_FORMAT
from ..util.errors import ConfigError
from ..util.misc_util import check_finite

TRUE_MODES = ('true', 'true_centers')
EMPIRICAL_MODES = ('empirical', 'empirical_centers')


@dataclass(frozen=True)
class FittedModel:
    """Fitted coefficient vector and some facts about the solve that produced it."""

    theta: np.ndarray
    rank_used: int
    sigma_min_kept: float
    kind: str
    converged: bool = True
    grad_norm: Optional[float] = None
    n_iter: int = 0
    loglik_path: Optional[tuple] = None

    def predict(self, X):
        """Return X^T theta for a d x m feature matrix."""
        return np.asarray(X).T @ self.theta


def thin_svd(design):
    """Return the thin SVD (U, s, Vt) of design^T, an n x d matrix."""
    return svd(np.asarray(design, dtype=float).T, full_matrices=False)


def default_rcond(n, d):
    """Relative singular value cutoff used for the pseudoinverse."""
    return np.finfo(float).eps * max(n, d)


def min_norm_fit(design, y, rcond=None, kind='min_norm'):
    """
    Minimum l2-norm least squares fit of y on design^T.

    Parameters
    ----------
    design : ndarray
        A d x n matrix with one column per sample.
    y : ndarray
        Length-n response vector.
    rcond : float
        Singular values below rcond * sigma_max are truncated; defaults to
        machine epsilon * max(n, d).
    kind : str
        Tag stored on the returned model.

    Returns
    -------
    model : FittedModel
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    check_finite('min_norm_fit', design, y)
    d, n = design.shape
    if n < 1 or y.shape[0] != n:
        raise ConfigError(f'design is {design.shape} but y has length {y.shape[0]}')

    umat, svals, vtmat = thin_svd(design)
    if rcond is None:
        rcond = default_rcond(n, d)

    smax = svals[0] if svals.size else 0.0
    keep = svals > rcond * smax if smax > 0 else np.zeros_like(svals, dtype=bool)
    coef = (umat[:, keep].T @ y) / svals[keep]
    theta = vtmat[keep].T @ coef
    sigma_min_kept = float(svals[keep].min()) if keep.any() else 0.0

    return FittedModel(
        theta=theta, rank_used=int(keep.sum()), sigma_min_kept=sigma_min_kept, kind=kind
    )


def resolve_centers(ds, gt_or_centers, mode):
    """Return the p x k sensitive centers to anonymize with."""
    if isinstance(gt_or_centers, GroundTruth):
        true_centers = gt_or_centers.M_s
    else:
        true_centers = np.asarray(gt_or_centers, dtype=float)

    if mode in TRUE_MODES:
        return true_centers
    if mode in EMPIRICAL_MODES:
        return empirical_centers(ds, true_centers.shape[0])
    raise ConfigError(f'unknown centers mode {mode!r}')


def fit_look_alike(ds, gt_or_centers, mode='true_centers'):
    """
    Look-alike estimator: min-norm fit on features whose sensitive block is replaced
    by cluster centers (true centers M_s, or empirical within-cluster means).
    """
    centers_s = resolve_centers(ds, gt_or_centers, mode)
    anon = anonymize(ds, centers_s)
    return min_norm_fit(anon.X_L, ds.y, kind='look_alike')


def fit_look_alike_estimated(ds, centers_s, labels):
    """Look-alike estimator using estimated centers and estimated memberships."""
    est = Dataset(X=ds.X, y=ds.y, labels=np.asarray(labels), k=np.asarray(centers_s).shape[1])
    anon = anonymize(est, centers_s)
    return min_norm_fit(anon.X_L, ds.y, kind='look_alike_estimated')


def ridge_fit(design, y, lam):
    """
    Ridge fit minimizing (1/2n) ||y - design^T theta||^2 + lam ||theta||^2, solved by
    shrinking singular values: sigma -> sigma / (sigma^2 + 2 n lam).
    """
    if not lam > 0:
        raise ConfigError(f'ridge penalty must be positive, got {lam}')
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    check_finite('ridge_fit', design, y)
    n = design.shape[1]

    umat, svals, vtmat = thin_svd(design)
    shrink = svals / (svals ** 2 + 2 * n * lam)
    theta = vtmat.T @ (shrink * (umat.T @ y))
    nonzero = svals[svals > 0]

    return FittedModel(
        theta=theta,
        rank_used=int(nonzero.size),
        sigma_min_kept=float(nonzero.min()) if nonzero.size else 0.0,
        kind='ridge',
    )


def dump_model_csv(model, path):
    """Write model coefficients to CSV with columns (index, coefficient)."""
    df = pd.DataFrame({'index': np.arange(model.theta.shape[0]), 'coefficient': model.theta})
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
