"""
Out-of-sample prediction risk: exact closed form, Monte Carlo oracle, and gain.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data.synth import check_consistent, sample_features, sample_labels
from ..util.errors import ConfigError, NumericalError
from ..util.misc_util import make_rng

MC_BATCH = 10000


@dataclass(frozen=True)
class RiskReport:
    """Risk of one fitted model, with optional Monte Carlo, theory, and gain values."""

    risk_closed_form: float
    risk_monte_carlo: Optional[float] = None
    mc_std_error: Optional[float] = None
    theory_prediction: Optional[float] = None
    gain_reference: Optional[str] = None
    gain: Optional[float] = None

    @property
    def mc_gap(self):
        """Absolute difference between the Monte Carlo and closed-form risks."""
        if self.risk_monte_carlo is None:
            return None
        return abs(self.risk_monte_carlo - self.risk_closed_form)


def risk_closed_form(theta, gt, cfg):
    """
    Exact risk of theta under the GMM:
    sigma^2 + ||theta0 - theta||^2 + (theta0 - theta)^T M diag(pi) M^T (theta0 - theta).
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != gt.d:
        raise ConfigError(f'theta has length {theta.shape[0]} but d={gt.d}')
    check_consistent(cfg, gt)

    err = gt.theta0 - theta
    proj = gt.M.T @ err
    quad = float(err @ err + proj @ (cfg.priors * proj))
    return cfg.params.sigma ** 2 + quad


def risk_monte_carlo(theta, gt, cfg, n_test, rng=None, batch_size=MC_BATCH):
    """
    Monte Carlo estimate of the risk of theta from n_test fresh draws of (x, y).

    Returns
    -------
    mean : float
        Mean squared prediction error.
    std_error : float
        Standard error of the mean.
    """
    if n_test < 2:
        raise ConfigError(f'n_test must be at least 2, got {n_test}')
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != gt.d:
        raise ConfigError(f'theta has length {theta.shape[0]} but d={gt.d}')
    check_consistent(cfg, gt)
    rng = make_rng(cfg.params.seed if rng is None else rng)

    sq_err = np.empty(n_test)
    theta0 = gt.theta0
    for start in range(0, n_test, batch_size):
        size = min(batch_size, n_test - start)
        labels = sample_labels(cfg.priors, size, rng)
        X = sample_features(gt.M, labels, rng)
        y = X.T @ theta0 + cfg.params.sigma * rng.standard_normal(size)
        sq_err[start:start + size] = (y - X.T @ theta) ** 2

    mean = float(np.mean(sq_err))
    std_error = float(np.std(sq_err, ddof=1) / np.sqrt(n_test))
    return mean, std_error


def gain(risk_ref, risk_lookalike):
    """Return the gain Risk(reference) / Risk(look-alike)."""
    if not risk_lookalike > 0:
        raise NumericalError(f'look-alike risk must be positive, got {risk_lookalike}')
    return float(risk_ref) / float(risk_lookalike)


def risk_report(theta, gt, cfg, n_test=0, rng=None, theory=None):
    """Build a RiskReport; Monte Carlo is only run when n_test > 0."""
    closed = risk_closed_form(theta, gt, cfg)
    mc_mean, mc_se = None, None
    if n_test:
        mc_mean, mc_se = risk_monte_carlo(theta, gt, cfg, n_test, rng)
    return RiskReport(
        risk_closed_form=closed,
        risk_monte_carlo=mc_mean,
        mc_std_error=mc_se,
        theory_prediction=theory,
    )
