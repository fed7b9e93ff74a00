"""
Cluster estimation from the sensitive features, the cluster estimation error rate
delta_n, and the pseudoinverse perturbation machinery relating estimated-cluster and
true-cluster look-alike estimators.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import svdvals
from sklearn.cluster import KMeans

from ..data.synth import check_consistent, sample_dataset
from ..models.estimators import fit_look_alike, fit_look_alike_estimated
from ..models.problem import build_ground_truth
from ..risk.risk_eval import risk_closed_form
from ..util.errors import ConfigError
from ..util.misc_util import check_finite, make_rng, map_tasks, replicate_seed
from ..util.timing import Timer

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0
CONDITIONS = ('condition_i', 'condition_ii', 'neither')


@dataclass(frozen=True)
class ClusterEstimate:
    """Estimated sensitive centers (p x k), memberships, and fit diagnostics."""

    centers_s: np.ndarray
    labels: np.ndarray
    iterations: int
    inertia: float
    delta_n: Optional[float] = None

    def product(self):
        """Return the p x n matrix of estimated centers per sample (M~_s Lambda~)."""
        return self.centers_s[:, self.labels]

    def with_delta(self, Ms_Lambda_true):
        """Return a copy with delta_n measured against the true M_s Lambda."""
        delta = delta_rate(Ms_Lambda_true, self.product())
        return ClusterEstimate(
            centers_s=self.centers_s,
            labels=self.labels,
            iterations=self.iterations,
            inertia=self.inertia,
            delta_n=delta,
        )


def kmeans(Xs, k, rng=None, max_iter=300, n_restarts=10):
    """
    Lloyd k-means with k-means++ seeding on the columns of Xs.

    Parameters
    ----------
    Xs : ndarray
        A p x n matrix with one sample per column.
    k : int
        Number of clusters.
    rng : Generator_or_int
        Random state for the seeding.
    max_iter : int
        Maximum number of Lloyd iterations per restart.
    n_restarts : int
        Number of k-means++ restarts; the restart with the lowest inertia wins, the
        earliest one on ties.

    Returns
    -------
    est : ClusterEstimate
        Estimate without delta_n.
    """
    Xs = np.asarray(Xs, dtype=float)
    check_finite('kmeans', Xs)
    n = Xs.shape[1]
    if not 1 <= k <= n:
        raise ConfigError(f'k must satisfy 1 <= k <= n, got k={k}, n={n}')
    if max_iter < 1 or n_restarts < 1:
        raise ConfigError('max_iter and n_restarts must be at least 1')

    rng = make_rng(rng)
    km = KMeans(
        n_clusters=k,
        init='k-means++',
        n_init=n_restarts,
        max_iter=max_iter,
        tol=0,
        algorithm='lloyd',
        random_state=int(rng.integers(2 ** 31 - 1)),
    )
    km.fit(Xs.T)

    return ClusterEstimate(
        centers_s=km.cluster_centers_.T.copy(),
        labels=km.labels_.astype(int),
        iterations=int(km.n_iter_),
        inertia=float(km.inertia_),
    )


def delta_rate(Ms_Lambda_true, Ms_Lambda_est):
    """Cluster estimation error rate (1/sqrt(n)) ||M_s Lambda - M~_s Lambda~||_2."""
    true = np.asarray(Ms_Lambda_true, dtype=float)
    est = np.asarray(Ms_Lambda_est, dtype=float)
    if true.shape != est.shape:
        raise ConfigError(f'shape mismatch: {true.shape} vs {est.shape}')
    n = true.shape[1]
    if true.size == 0:
        return 0.0
    return float(svdvals(true - est)[0] / np.sqrt(n))


def power_iteration_norm(A, max_iter=5000, tol=1e-13, seed=0):
    """Spectral norm of A from power iteration on A^T A."""
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=A.shape[1])
    x /= np.linalg.norm(x)

    lam = 0.0
    for _ in range(max_iter):
        y = A.T @ (A @ x)
        y_norm = np.linalg.norm(y)
        if y_norm == 0:
            return 0.0
        lam_new = float(x @ y)
        x = y / y_norm
        if abs(lam_new - lam) <= tol * max(lam_new, 1.0):
            lam = lam_new
            break
        lam = lam_new

    return float(np.sqrt(max(lam, 0.0)))


def pinv_perturbation_bound(sigma_min_a, sigma_min_b, diff_norm):
    """
    Perturbation bound on the pseudoinverse:
    ||A^+ - B^+|| <= (1 + sqrt(5))/2 * max(sigma_min_a^-2, sigma_min_b^-2) * ||A - B||.
    """
    if not (sigma_min_a > 0 and sigma_min_b > 0):
        raise ConfigError(
            f'smallest singular values must be positive, got {sigma_min_a}, {sigma_min_b}'
        )
    return GOLDEN * max(sigma_min_a ** -2, sigma_min_b ** -2) * diff_norm


def condition_thresholds(psi_d, psi_p):
    """Return the delta thresholds of the two sufficient conditions (nan if excluded)."""
    gap = psi_d - psi_p
    thresh_i = np.sqrt(1.0 - gap) - np.sqrt(gap) if 0 <= gap < 0.5 else np.nan
    thresh_ii = np.sqrt(gap - 1.0) - 1.0 if gap > 2 else np.nan
    return thresh_i, thresh_ii


def prop1_condition(psi_d, psi_p, delta):
    """Classify which sufficient condition for a stable look-alike estimator holds."""
    if delta < 0:
        raise ConfigError(f'delta must be nonnegative, got {delta}')
    thresh_i, thresh_ii = condition_thresholds(psi_d, psi_p)
    if delta < thresh_i:
        return 'condition_i'
    if delta < thresh_ii:
        return 'condition_ii'
    return 'neither'


def sigma_min_lower_bound(psi_d, psi_p, n, condition):
    """
    High-probability lower bound on the smallest singular value of the anonymized
    design under either sufficient condition.
    """
    gap = psi_d - psi_p
    slack = np.sqrt(2.0 * np.log(n) / n)
    if condition == 'condition_i':
        return np.sqrt(n) * (np.sqrt(1.0 - gap) - np.sqrt(gap) - slack)
    if condition == 'condition_ii':
        return np.sqrt(n) * (np.sqrt(gap - 1.0) - 1.0 - slack)
    raise ConfigError(f'condition must be condition_i or condition_ii, got {condition!r}')


def response_norm_limit(gt, cfg):
    """
    Limit of ||y|| / sqrt(n):
    sqrt(theta0^T M diag(pi) M^T theta0 + ||theta0||^2 + sigma^2).
    """
    check_consistent(cfg, gt)
    theta0 = gt.theta0
    proj = gt.M.T @ theta0
    energy = proj @ (cfg.priors * proj) + theta0 @ theta0
    return float(np.sqrt(energy + cfg.params.sigma ** 2))


def flip_labels(labels, k, q, rng):
    """
    Reassign a fraction q of the labels (chosen without replacement) to a uniformly
    random different cluster.
    """
    if not 0 <= q <= 1:
        raise ConfigError(f'flip rate must lie in [0, 1], got {q}')
    labels = np.array(labels, dtype=int)
    n_flip = int(round(q * labels.shape[0]))
    if k < 2 or n_flip == 0:
        return labels
    idx = rng.choice(labels.shape[0], size=n_flip, replace=False)
    labels[idx] = (labels[idx] + rng.integers(1, k, size=n_flip)) % k
    return labels


def _flip_replicate(cfg, gt, q, rng):
    """Compare the true-cluster and corrupted-cluster look-alike fits on one dataset."""
    ds = sample_dataset(cfg, gt, rng)
    M_s = gt.M_s
    flipped = flip_labels(ds.labels, cfg.params.k, q, rng)

    model_true = fit_look_alike(ds, gt)
    model_est = fit_look_alike_estimated(ds, M_s, flipped)

    delta = delta_rate(M_s[:, ds.labels], M_s[:, flipped])
    diff_norm = delta * np.sqrt(ds.n)
    if model_true.sigma_min_kept > 0 and model_est.sigma_min_kept > 0:
        pinv_bound = pinv_perturbation_bound(
            model_true.sigma_min_kept, model_est.sigma_min_kept, diff_norm
        )
    else:
        pinv_bound = np.inf

    return {
        'delta_n': delta,
        'risk_lookalike_true': risk_closed_form(model_true.theta, gt, cfg),
        'risk_lookalike_estimated': risk_closed_form(model_est.theta, gt, cfg),
        'bound': pinv_bound * float(np.linalg.norm(ds.y)),
        'theta_gap': float(np.linalg.norm(model_true.theta - model_est.theta)),
        'sigma_min': model_true.sigma_min_kept,
        'condition': prop1_condition(cfg.psi_d, cfg.psi_p, delta),
    }


def envelope_slope(delta_n, risk_gap):
    """Smallest slope C with risk_gap <= C delta_n at every point with delta_n > 0."""
    delta_n = np.asarray(delta_n, dtype=float)
    risk_gap = np.asarray(risk_gap, dtype=float)
    mask = delta_n > 0
    if not mask.any():
        return 0.0
    return float(max(np.max(risk_gap[mask] / delta_n[mask]), 0.0))


def cluster_experiment(cfg, flip_rates, replicates, seed=None, n_jobs=1, verbose=False):
    """
    Sweep the label flip rate and compare look-alike estimators built from true and
    corrupted memberships (both with the true centers M_s).

    Parameters
    ----------
    cfg : ProblemConfig
        Problem configuration.
    flip_rates : list
        Fractions of labels to corrupt.
    replicates : int
        Datasets per flip rate.
    seed : int
        Master seed; defaults to cfg.params.seed.

    Returns
    -------
    rows : list
        One dict per (flip rate, replicate) with columns flip_rate, replicate, delta_n,
        risk_lookalike_true, risk_lookalike_estimated, bound, theta_gap, sigma_min,
        condition.
    slope : float
        Linear envelope slope of the risk gap against delta_n.
    """
    flip_rates = list(flip_rates)
    if not flip_rates:
        raise ConfigError('flip_rates must be non-empty')
    if replicates < 1:
        raise ConfigError(f'replicates must be at least 1, got {replicates}')
    seed = cfg.params.seed if seed is None else seed

    def run_task(task):
        qi, rep = task
        rng = np.random.default_rng(replicate_seed(seed, qi, rep))
        gt = build_ground_truth(cfg, rng)
        row = {'flip_rate': float(flip_rates[qi]), 'replicate': rep}
        row.update(_flip_replicate(cfg, gt, flip_rates[qi], rng))
        return row

    tasks = [(qi, rep) for qi in range(len(flip_rates)) for rep in range(replicates)]
    with Timer('cluster experiment', verbose=verbose):
        rows = map_tasks(run_task, tasks, n_jobs, desc='cluster-exp', verbose=verbose)

    slope = envelope_slope(
        [row['delta_n'] for row in rows],
        [row['risk_lookalike_estimated'] - row['risk_lookalike_true'] for row in rows],
    )
    return rows, slope

