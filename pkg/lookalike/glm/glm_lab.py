"""
Binomial-logit version of the lab: data generation, GLM fitting by iteratively
reweighted least squares, and the gain of look-alike clustering under a nonlinear
response.
"""

import numpy as np
from scipy.linalg import pinvh
from scipy.special import expit

from ..data.synth import (
    Dataset,
    anonymize,
    check_consistent,
    sample_features,
    sample_labels,
)
from ..models.estimators import FittedModel, default_rcond, thin_svd
from ..models.problem import ProblemConfig, build_ground_truth
from ..util.base import Base
from ..util.config_util import check_known_keys, priors_from_section
from ..util.errors import ConfigError
from ..util.misc_util import (
    check_finite,
    dict_to_namespace,
    make_rng,
    map_tasks,
    mean_and_stderr,
    print_warn,
    replicate_seed,
)
from ..util.timing import Timer

GLM_PROBLEM_DEFAULTS = {
    'n': 200, 'd': 180, 'p': 36, 'k': 3, 'mu': 5.0, 'sigma': 1.0, 'rho': 0.3,
    'r_s': 1.0, 'r_ns': 2.0,
}
GLM_KEYS = ('N', 'n_test', 'r_s_grid', 'replicates', 'max_iter', 'tol', 'n_jobs', 'out')
DEFAULT_R_S_GRID = [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9]
RIDGE_FLOOR = 1e-10
MAX_HALVING = 30
# Relative rounding slack when comparing log-likelihoods
LOGLIK_SLACK = 1e-13
TEST_BATCH = 10000


class GlmConfig(Base):
    """Problem configuration plus the binomial trial count and the test set size."""

    def set_params(self, params):
        """Set self.params, the parameters for the GLM experiment."""
        super().set_params(params)
        params = dict_to_namespace(params)

        self.params.name = getattr(params, 'name', 'GlmConfig')
        problem = getattr(params, 'problem', None)
        if not isinstance(problem, ProblemConfig):
            merged = dict(GLM_PROBLEM_DEFAULTS)
            merged.update(problem or {})
            problem = ProblemConfig(merged)
        self.params.problem = problem
        self.params.N = getattr(params, 'N', 1000)
        self.params.n_test = getattr(params, 'n_test', 50000)
        self.params.r_s_grid = list(getattr(params, 'r_s_grid', DEFAULT_R_S_GRID))
        self.params.replicates = getattr(params, 'replicates', 50)
        self.params.max_iter = getattr(params, 'max_iter', 100)
        self.params.tol = getattr(params, 'tol', 1e-8)
        self.params.n_jobs = getattr(params, 'n_jobs', 1)
        self.params.out = getattr(params, 'out', None)

    def validate(self):
        """Raise ConfigError if any parameter is invalid."""
        pr = self.params
        for key in ('N', 'n_test', 'replicates', 'max_iter', 'n_jobs'):
            val = getattr(pr, key)
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError(f'{key} must be a positive integer, got {val!r}')
        if not pr.r_s_grid:
            raise ConfigError('r_s_grid must be non-empty')
        if any(not np.isfinite(r) or r < 0 for r in pr.r_s_grid):
            raise ConfigError(f'r_s_grid entries must be finite and >= 0, got {pr.r_s_grid}')
        if not pr.tol > 0:
            raise ConfigError(f'tol must be positive, got {pr.tol}')

    @property
    def problem(self):
        return self.params.problem

    @classmethod
    def from_sections(cls, sections, overrides=None, verbose=False):
        """Build a GlmConfig from the [problem], [priors] and [glm] sections."""
        overrides = {key: val for key, val in (overrides or {}).items() if val is not None}
        problem = dict(GLM_PROBLEM_DEFAULTS)
        problem.update(sections.get('problem', {}))
        priors = priors_from_section(sections.get('priors'))
        if priors is not None:
            problem['priors'] = priors
        if 'seed' in overrides:
            problem['seed'] = overrides.pop('seed')

        glm = dict(sections.get('glm', {}))
        check_known_keys('glm', glm, GLM_KEYS)
        if 'r_s_grid' in glm and not isinstance(glm['r_s_grid'], list):
            glm['r_s_grid'] = [glm['r_s_grid']]
        glm.update(overrides)
        glm['problem'] = ProblemConfig(problem)
        return cls(glm, verbose=verbose)


def _draw(problem, gt, N, size, rng):
    """Draw size samples: features, binomial counts, and success probabilities."""
    labels = sample_labels(problem.priors, size, rng)
    X = sample_features(gt.M, labels, rng)
    eps = problem.params.sigma * rng.standard_normal(size)
    prob = expit(X.T @ gt.theta0 - eps)
    y = rng.binomial(N, prob).astype(float)
    return labels, X, y, prob


def sample_glm(cfg, gt, rng=None, return_prob=False):
    """
    Sample a training set with y ~ Binomial(N, p_x),
    p_x = 1 / (1 + exp(-<x, theta0> + eps)) and eps ~ N(0, sigma^2) per sample.

    Returns
    -------
    ds : Dataset
        Dataset whose y holds the binomial counts.
    prob : ndarray
        Success probabilities p_x (only when return_prob is True).
    """
    problem = cfg.problem
    check_consistent(problem, gt)
    rng = make_rng(problem.params.seed if rng is None else rng)
    labels, X, y, prob = _draw(problem, gt, cfg.params.N, problem.params.n, rng)
    ds = Dataset(X=X, y=y, labels=labels, k=problem.params.k)
    return (ds, prob) if return_prob else ds


def binomial_loglik(eta, y_counts, N):
    """Binomial log-likelihood with logit link, up to the theta-free constant."""
    return float(np.sum(y_counts * eta - N * np.logaddexp(0.0, eta)))


def glm_fit(design, y_counts, N, max_iter=100, tol=1e-8, ridge=RIDGE_FLOOR):
    """
    Fit a binomial GLM with logit link by Newton / IRLS from theta = 0.

    Iterates are kept in the row space of the design, so rank deficient designs
    (such as anonymized ones) give the minimum-norm maximizer. Each Newton step uses
    the pseudoinverse of the weighted Gram matrix in row-space coordinates, with a
    ridge floor on its diagonal, and is halved until the log-likelihood does not
    decrease.

    Parameters
    ----------
    design : ndarray
        A d x n matrix with one sample per column.
    y_counts : ndarray
        Length-n success counts in [0, N].
    N : int
        Number of binomial trials.
    max_iter : int
        Maximum number of Newton steps.
    tol : float
        Convergence threshold on the gradient infinity norm.

    Returns
    -------
    model : FittedModel
        Fitted model; converged is False if the gradient threshold was not reached.
    """
    design = np.asarray(design, dtype=float)
    y_counts = np.asarray(y_counts, dtype=float).reshape(-1)
    check_finite('glm_fit', design, y_counts)
    d, n = design.shape
    if y_counts.shape[0] != n:
        raise ConfigError(f'design is {design.shape} but y has length {y_counts.shape[0]}')
    if np.any(y_counts < 0) or np.any(y_counts > N):
        raise ConfigError(f'counts must lie in [0, N={N}]')

    _, svals, vtmat = thin_svd(design)
    cutoff = default_rcond(n, d) * svals[0] if svals.size else 0.0
    keep = svals > cutoff

    # Newton runs in coordinates of the row space of the design
    basis = vtmat[keep]
    reduced = basis @ design
    beta = np.zeros(basis.shape[0])
    eta = reduced.T @ beta
    loglik = binomial_loglik(eta, y_counts, N)
    path = [loglik]
    n_iter = 0

    for _ in range(max_iter):
        mean = N * expit(eta)
        if np.max(np.abs(design @ (y_counts - mean)), initial=0.0) <= tol:
            break

        grad = reduced @ (y_counts - mean)
        weights = mean * (1.0 - mean / N)
        gram = (reduced * weights) @ reduced.T
        gram[np.diag_indices(gram.shape[0])] += ridge
        step = pinvh(gram) @ grad

        scale = 1.0
        floor = loglik - LOGLIK_SLACK * (1.0 + abs(loglik))
        for _ in range(MAX_HALVING):
            cand = beta + scale * step
            eta_cand = reduced.T @ cand
            loglik_cand = binomial_loglik(eta_cand, y_counts, N)
            if loglik_cand >= floor:
                break
            scale /= 2.0
        else:
            # No ascent along the Newton direction
            break

        beta, eta, loglik = cand, eta_cand, loglik_cand
        path.append(loglik)
        n_iter += 1

    theta = basis.T @ beta
    grad_norm = float(np.max(np.abs(design @ (y_counts - N * expit(eta))), initial=0.0))
    converged = grad_norm <= tol
    if not converged:
        print_warn(f'IRLS stopped after {n_iter} steps with gradient norm {grad_norm:.3g}')

    return FittedModel(
        theta=theta,
        rank_used=int(np.sum(keep)),
        sigma_min_kept=float(svals[keep].min()) if keep.any() else 0.0,
        kind='glm',
        converged=converged,
        grad_norm=grad_norm,
        n_iter=n_iter,
        loglik_path=tuple(path),
    )


def glm_test_risk(thetas, problem, gt, N, n_test, rng, batch_size=TEST_BATCH):
    """
    Test risks of several coefficient vectors on one fresh test set of n_test samples.

    Returns
    -------
    risks : ndarray
        Array of shape (len(thetas), 2): response-scale MSE E[(y/N - p_hat)^2] and
        probability-scale MSE E[(p_x - p_hat)^2].
    """
    thetas = [np.asarray(theta, dtype=float) for theta in thetas]
    sums = np.zeros((len(thetas), 2))
    for start in range(0, n_test, batch_size):
        size = min(batch_size, n_test - start)
        _, X, y, prob = _draw(problem, gt, N, size, rng)
        for i, theta in enumerate(thetas):
            p_hat = expit(X.T @ theta)
            sums[i, 0] += np.sum((y / N - p_hat) ** 2)
            sums[i, 1] += np.sum((prob - p_hat) ** 2)
    return sums / n_test


def _glm_replicate(cfg, problem, rng):
    """Fit on raw and anonymized features; return log gains and non-convergence count."""
    pr = cfg.params
    gt = build_ground_truth(problem, rng)
    labels, X, y, _ = _draw(problem, gt, pr.N, problem.params.n, rng)
    ds = Dataset(X=X, y=y, labels=labels, k=problem.params.k)

    model_raw = glm_fit(ds.X, ds.y, pr.N, pr.max_iter, pr.tol)
    anon = anonymize(ds, gt.M_s)
    model_la = glm_fit(anon.X_L, ds.y, pr.N, pr.max_iter, pr.tol)

    risks = glm_test_risk([model_raw.theta, model_la.theta], problem, gt, pr.N, pr.n_test, rng)
    log_gain = np.log(risks[0] / risks[1])
    not_converged = int(not model_raw.converged) + int(not model_la.converged)
    return log_gain[0], log_gain[1], not_converged


def glm_gain_experiment(cfg, r_s_grid=None, replicates=None, seed=None, verbose=False):
    """
    Gain of the look-alike GLM over the raw-feature GLM across an r_s grid.

    Parameters
    ----------
    cfg : GlmConfig
        Experiment configuration.
    r_s_grid : list
        Values of r_s; defaults to cfg.params.r_s_grid.
    replicates : int
        Datasets per grid value; defaults to cfg.params.replicates.
    seed : int
        Master seed; defaults to the problem seed.

    Returns
    -------
    rows : list
        One dict per r_s with columns r_s, mean_log_gain, stderr, replicates,
        mean_log_gain_prob, stderr_prob, not_converged, metric.
    """
    pr = cfg.params
    r_s_grid = list(pr.r_s_grid if r_s_grid is None else r_s_grid)
    replicates = pr.replicates if replicates is None else replicates
    if not r_s_grid:
        raise ConfigError('r_s_grid must be non-empty')
    if replicates < 1:
        raise ConfigError(f'replicates must be at least 1, got {replicates}')
    seed = cfg.problem.params.seed if seed is None else seed
    problems = [cfg.problem.replace(r_s=float(r_s)) for r_s in r_s_grid]

    def run_task(task):
        gi, rep = task
        rng = np.random.default_rng(replicate_seed(seed, gi, rep))
        return _glm_replicate(cfg, problems[gi], rng)

    tasks = [(gi, rep) for gi in range(len(r_s_grid)) for rep in range(replicates)]
    with Timer('glm experiment', verbose=verbose):
        results = map_tasks(run_task, tasks, pr.n_jobs, desc='glm', verbose=verbose)

    rows = []
    for gi, r_s in enumerate(r_s_grid):
        chunk = np.array(results[gi * replicates:(gi + 1) * replicates], dtype=float)
        mean_resp, se_resp = mean_and_stderr(chunk[:, 0])
        mean_prob, se_prob = mean_and_stderr(chunk[:, 1])
        rows.append({
            'r_s': float(r_s),
            'mean_log_gain': mean_resp,
            'stderr': se_resp,
            'replicates': replicates,
            'mean_log_gain_prob': mean_prob,
            'stderr_prob': se_prob,
            'not_converged': int(chunk[:, 2].sum()),
            'metric': 'response_mse',
        })
    return rows
