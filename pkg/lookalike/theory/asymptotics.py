"""
Closed-form asymptotic risks of the look-alike and min-norm estimators, the gain
Risk(min-norm) / Risk(look-alike), and the low-SNR gain condition.

All formulas hold in the proportional limit n, d, p -> infinity with d/n -> psi_d and
p/n -> psi_p. They diverge at the interpolation thresholds psi_d - psi_p = 1
(look-alike) and psi_d = 1 (min-norm); evaluating within pole_margin of a threshold
raises PoleError.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..models.problem import classify_ratio
from ..util.errors import ConfigError, NumericalError, PoleError

PRIOR_TOL = 1e-12


@dataclass(frozen=True)
class TheoryParams:
    """Parameters of the asymptotic risk formulas."""

    psi_d: float
    psi_p: float
    sigma: float
    r_s: float
    r_ns: float
    rho: float
    mu: float
    priors: np.ndarray = field(default_factory=lambda: np.ones(1))
    pole_margin: float = 0.02

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=float).reshape(-1)
        object.__setattr__(self, 'priors', priors)
        if not self.psi_d > 0:
            raise ConfigError(f'psi_d must be positive, got {self.psi_d}')
        if not 0 <= self.psi_p <= self.psi_d:
            raise ConfigError(f'psi_p must lie in [0, psi_d], got {self.psi_p}')
        if not 0 <= self.rho <= 1:
            raise ConfigError(f'rho must lie in [0, 1], got {self.rho}')
        for key in ('sigma', 'r_s', 'r_ns', 'mu'):
            val = getattr(self, key)
            if not np.isfinite(val) or val < 0:
                raise ConfigError(f'{key} must be finite and >= 0, got {val}')
        if np.any(priors < 0) or abs(priors.sum() - 1) > PRIOR_TOL:
            raise ConfigError(f'priors must be nonnegative and sum to 1, got {priors}')

    @classmethod
    def from_problem(cls, cfg):
        """Theory parameters at the aspect ratios of a finite ProblemConfig."""
        pr = cfg.params
        return cls(
            psi_d=cfg.psi_d,
            psi_p=cfg.psi_p,
            sigma=pr.sigma,
            r_s=pr.r_s,
            r_ns=pr.r_ns,
            rho=pr.rho,
            mu=pr.mu,
            priors=cfg.priors,
            pole_margin=pr.pole_margin,
        )

    @property
    def k(self):
        return self.priors.shape[0]

    @property
    def gap(self):
        """Effective aspect ratio psi_d - psi_p of the look-alike estimator."""
        return self.psi_d - self.psi_p

    @property
    def snr(self):
        return self.r_s / self.sigma if self.sigma > 0 else np.inf

    def is_balanced(self):
        return bool(np.all(np.abs(self.priors - 1.0 / self.k) <= PRIOR_TOL))

    def replace(self, **kwargs):
        vals = dict(vars(self))
        vals.update(kwargs)
        return TheoryParams(**vals)


@dataclass(frozen=True)
class TheoryPrediction:
    """Predicted risk plus the fixed-point quantities of the overparametrized formulas."""

    risk: float
    regime: str
    alpha: Optional[np.ndarray] = None
    gamma0_sq: Optional[float] = None


def regime_or_raise(ratio, pole_margin, what):
    """Classify an aspect ratio, raising PoleError inside the pole margin."""
    tag = classify_ratio(ratio, pole_margin)
    if tag == 'pole':
        raise PoleError(
            f'{what}: aspect ratio {ratio:.6g} within {pole_margin} of the interpolation '
            'threshold'
        )
    return tag


def default_alignment(tp):
    """
    Alignment vector U_s^T theta0_s of norm sqrt(rho) r_s along the first cluster.
    Only meaningful for balanced priors, where the risk depends on its norm alone.
    """
    if not tp.is_balanced():
        raise ConfigError('unbalanced priors need an explicit U_s^T theta0_s vector')
    vec = np.zeros(tp.k)
    vec[0] = np.sqrt(tp.rho) * tp.r_s
    return vec


def check_alignment(tp, Ut_theta0s):
    """Return the alignment vector as an array, checking length and norm."""
    if Ut_theta0s is None:
        return default_alignment(tp)
    vec = np.asarray(Ut_theta0s, dtype=float).reshape(-1)
    if vec.shape[0] != tp.k:
        raise ConfigError(f'U_s^T theta0_s must have length k={tp.k}, got {vec.shape[0]}')
    target = np.sqrt(tp.rho) * tp.r_s
    if not np.isclose(np.linalg.norm(vec), target, rtol=1e-8, atol=1e-12):
        raise ConfigError(
            f'||U_s^T theta0_s|| = {np.linalg.norm(vec):.12g} but sqrt(rho) r_s = {target:.12g}'
        )
    return vec


def risk_lookalike_under(tp):
    """
    Look-alike risk for psi_d - psi_p < 1:
    (sigma^2 + r_s^2) / (1 - (psi_d - psi_p)) - rho r_s^2.
    Priors, mu and r_ns drop out of the limit.
    """
    tag = regime_or_raise(tp.gap, tp.pole_margin, 'look-alike risk')
    if tag != 'under':
        raise ConfigError(f'psi_d - psi_p = {tp.gap:.6g} is not underparametrized')
    return (tp.sigma ** 2 + tp.r_s ** 2) / (1.0 - tp.gap) - tp.rho * tp.r_s ** 2


def lookalike_over_terms(tp, alpha):
    """gamma0^2 of the overparametrized look-alike formula, given alpha."""
    g = tp.gap - 1.0
    energy = tp.mu ** 2 * float(np.sum(tp.priors * alpha ** 2))
    return (tp.sigma ** 2 + tp.r_s ** 2 + energy) / g + (1.0 - 1.0 / tp.gap) * tp.r_ns ** 2


def risk_lookalike_over(tp, Ut_theta0s=None):
    """
    Look-alike risk for psi_d - psi_p > 1 under orthogonal, equal-energy centers:
    sigma^2 + (1 - rho) r_s^2 + gamma0^2 + alpha^T (I + mu^2 diag(pi)) alpha, with
    alpha = (I + mu^2 diag(pi) / (psi_d - psi_p - 1))^{-1} U_s^T theta0_s.
    """
    tag = regime_or_raise(tp.gap, tp.pole_margin, 'look-alike risk')
    if tag != 'over':
        raise ConfigError(f'psi_d - psi_p = {tp.gap:.6g} is not overparametrized')
    vec = check_alignment(tp, Ut_theta0s)

    g = tp.gap - 1.0
    alpha = vec / (1.0 + tp.mu ** 2 * tp.priors / g)
    gamma0_sq = lookalike_over_terms(tp, alpha)
    if gamma0_sq < 0:
        raise NumericalError(f'negative gamma0^2 = {gamma0_sq}')

    quad = float(np.sum((1.0 + tp.mu ** 2 * tp.priors) * alpha ** 2))
    risk = tp.sigma ** 2 + (1.0 - tp.rho) * tp.r_s ** 2 + gamma0_sq + quad
    return TheoryPrediction(risk=risk, regime='over', alpha=alpha, gamma0_sq=gamma0_sq)


def lookalike_over_residual(tp, Ut_theta0s, pred):
    """Max absolute residual of the defining relations of alpha and gamma0^2."""
    vec = check_alignment(tp, Ut_theta0s)
    g = tp.gap - 1.0
    res_alpha = pred.alpha + tp.mu ** 2 * tp.priors * pred.alpha / g - vec
    res_gamma = pred.gamma0_sq - lookalike_over_terms(tp, pred.alpha)
    return float(max(np.max(np.abs(res_alpha), initial=0.0), abs(res_gamma)))


def risk_lookalike_misspecified_under(tp):
    """Look-alike risk with no sensitive cluster structure (M_s = 0), psi_d - psi_p < 1."""
    tag = regime_or_raise(tp.gap, tp.pole_margin, 'look-alike risk')
    if tag != 'under':
        raise ConfigError(f'psi_d - psi_p = {tp.gap:.6g} is not underparametrized')
    return (tp.sigma ** 2 + tp.r_s ** 2) / (1.0 - tp.gap)


def risk_lookalike_misspecified_over(tp):
    """Look-alike risk with no cluster structure (mu = 0), psi_d - psi_p > 1."""
    tag = regime_or_raise(tp.gap, tp.pole_margin, 'look-alike risk')
    if tag != 'over':
        raise ConfigError(f'psi_d - psi_p = {tp.gap:.6g} is not overparametrized')
    return ((1.0 + 1.0 / (tp.gap - 1.0)) * (tp.sigma ** 2 + tp.r_s ** 2)
            + (1.0 - 1.0 / tp.gap) * tp.r_ns ** 2)


def minnorm_over_terms(tp, alpha_tilde):
    """Return (gamma0_tilde^2, alpha_tilde^T (I + mu^2 diag(pi)) alpha_tilde)."""
    quad = float(np.sum((1.0 + tp.mu ** 2 * tp.priors) * alpha_tilde ** 2))
    gamma0_sq = ((tp.sigma ** 2 + quad) / (tp.psi_d - 1.0)
                 + (1.0 - 1.0 / tp.psi_d) * ((1.0 - tp.rho) * tp.r_s ** 2 + tp.r_ns ** 2))
    return gamma0_sq, quad


def risk_minnorm(tp, Ut_theta0s=None):
    """
    Min-norm risk on the raw features. For psi_d < 1 this is sigma^2 / (1 - psi_d),
    independent of everything else. For psi_d > 1 (orthogonal, equal-energy centers)
    it is sigma^2 + gamma0~^2 + alpha~^T (I + mu^2 diag(pi)) alpha~ with
    alpha~ = (I + (I + mu^2 diag(pi)) / (psi_d - 1))^{-1} U_s^T theta0_s.
    """
    tag = regime_or_raise(tp.psi_d, tp.pole_margin, 'min-norm risk')
    if tag == 'under':
        return TheoryPrediction(risk=tp.sigma ** 2 / (1.0 - tp.psi_d), regime='under')

    vec = check_alignment(tp, Ut_theta0s)
    alpha_tilde = vec / (1.0 + (1.0 + tp.mu ** 2 * tp.priors) / (tp.psi_d - 1.0))
    gamma0_sq, quad = minnorm_over_terms(tp, alpha_tilde)
    if gamma0_sq < 0:
        raise NumericalError(f'negative gamma0~^2 = {gamma0_sq}')
    return TheoryPrediction(
        risk=tp.sigma ** 2 + gamma0_sq + quad,
        regime='over',
        alpha=alpha_tilde,
        gamma0_sq=gamma0_sq,
    )


def minnorm_over_residual(tp, Ut_theta0s, pred):
    """Max absolute residual of the defining relations of alpha~ and gamma0~^2."""
    vec = check_alignment(tp, Ut_theta0s)
    scale = 1.0 + (1.0 + tp.mu ** 2 * tp.priors) / (tp.psi_d - 1.0)
    res_alpha = scale * pred.alpha - vec
    gamma0_sq, _ = minnorm_over_terms(tp, pred.alpha)
    return float(max(np.max(np.abs(res_alpha), initial=0.0), abs(pred.gamma0_sq - gamma0_sq)))


def risk_lookalike(tp, Ut_theta0s=None):
    """Look-alike risk in whichever regime (psi_d, psi_p) falls."""
    tag = regime_or_raise(tp.gap, tp.pole_margin, 'look-alike risk')
    if tag == 'under':
        return TheoryPrediction(risk=risk_lookalike_under(tp), regime='under')
    return risk_lookalike_over(tp, Ut_theta0s)


def gain_case(tp):
    """Return 1 (both under), 2 (look-alike under, min-norm over), or 3 (both over)."""
    tag_la = regime_or_raise(tp.gap, tp.pole_margin, 'look-alike risk')
    tag_mn = regime_or_raise(tp.psi_d, tp.pole_margin, 'min-norm risk')
    if tag_mn == 'under':
        return 1
    return 2 if tag_la == 'under' else 3


def gain_theory(tp, Ut_theta0s=None):
    """Asymptotic gain Risk(min-norm) / Risk(look-alike)."""
    gain_case(tp)
    risk_mn = risk_minnorm(tp, Ut_theta0s).risk
    risk_la = risk_lookalike(tp, Ut_theta0s).risk
    if not risk_la > 0:
        raise NumericalError(f'look-alike risk must be positive, got {risk_la}')
    return risk_mn / risk_la


def gain_threshold_case2(psi_d, psi_p):
    """
    Squared-SNR threshold below which the gain is at least 1 when the look-alike
    estimator is underparametrized and the min-norm estimator overparametrized:
    (1 + (psi_d - 1)^{-1} - a^{-1}) / (a^{-1} + psi_d^{-1} - 1), a = 1 - psi_d + psi_p.
    """
    if not (psi_d > 1 and 0 <= psi_p < psi_d and psi_d - psi_p < 1):
        raise ConfigError(
            f'(psi_d, psi_p) = ({psi_d}, {psi_p}) is outside the region psi_d > 1, '
            '0 <= psi_p < psi_d, psi_d - psi_p < 1'
        )
    inv_a = 1.0 / (1.0 - psi_d + psi_p)
    return (1.0 + 1.0 / (psi_d - 1.0) - inv_a) / (inv_a + 1.0 / psi_d - 1.0)


def risk_lookalike_under_balanced(gap, sigma, r_s, rho):
    """Vectorized look-alike underparametrized risk."""
    gap, sigma, r_s, rho = np.broadcast_arrays(*map(np.asarray, (gap, sigma, r_s, rho)))
    return (sigma ** 2 + r_s ** 2) / (1.0 - gap) - rho * r_s ** 2


def risk_minnorm_over_balanced(psi_d, sigma, r_s, rho, r_ns, mu2_over_k):
    """
    Vectorized min-norm overparametrized risk for balanced priors, where only
    ||alpha~|| matters:
    psi_d / (psi_d - 1) (sigma^2 + c alpha~^2) + (1 - 1/psi_d) ((1 - rho) r_s^2 + r_ns^2)
    with c = mu^2/k + 1 and alpha~ = sqrt(rho) r_s / (1 + c / (psi_d - 1)).
    """
    c = np.asarray(mu2_over_k) + 1.0
    psi_d = np.asarray(psi_d)
    alpha_sq = rho * np.asarray(r_s) ** 2 / (1.0 + c / (psi_d - 1.0)) ** 2
    return (psi_d / (psi_d - 1.0) * (np.asarray(sigma) ** 2 + c * alpha_sq)
            + (1.0 - 1.0 / psi_d) * ((1.0 - rho) * np.asarray(r_s) ** 2 + np.asarray(r_ns) ** 2))


def gain_case2_balanced(psi_d, psi_p, sigma, r_s, rho, r_ns, mu2_over_k):
    """Vectorized gain in the mixed regime (look-alike under, min-norm over)."""
    if np.any(np.asarray(psi_d) <= 1) or np.any(np.asarray(psi_d) - np.asarray(psi_p) >= 1):
        raise ConfigError('gain_case2_balanced needs psi_d > 1 and psi_d - psi_p < 1')
    risk_mn = risk_minnorm_over_balanced(psi_d, sigma, r_s, rho, r_ns, mu2_over_k)
    risk_la = risk_lookalike_under_balanced(np.asarray(psi_d) - psi_p, sigma, r_s, rho)
    return risk_mn / risk_la


def gain_case1_closed_form(psi_d, psi_p, snr, rho):
    """Gain when both estimators are underparametrized, as a function of SNR."""
    snr_sq = np.asarray(snr) ** 2
    return (1.0 / (1.0 - psi_d)) / ((1.0 + snr_sq) / (1.0 - psi_d + psi_p) - rho * snr_sq)


def gain_case1_snr0_limit(psi_d, psi_p):
    """Limit of the both-underparametrized gain as SNR -> 0."""
    return (1.0 - psi_d + psi_p) / (1.0 - psi_d)


def gain_case3_rns_limit(psi_d, psi_p):
    """Limit of the both-overparametrized gain as r_ns -> infinity."""
    return (1.0 - 1.0 / psi_d) / (1.0 - 1.0 / (psi_d - psi_p))
