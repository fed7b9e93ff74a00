"""
Problem parameters, asymptotic regimes, and ground-truth construction.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, svd

from ..util.base import Base
from ..util.config_util import check_known_keys, priors_from_section, read_config
from ..util.errors import ConfigError, NumericalError
from ..util.misc_util import dict_to_namespace, make_rng

PROBLEM_KEYS = (
    'n', 'd', 'p', 'k', 'mu', 'sigma', 'r_s', 'r_ns', 'rho', 'seed', 'pole_margin',
    'centers',
)
CENTER_MODES = ('true', 'empirical')
PRIOR_TOL = 1e-12


class ProblemConfig(Base):
    """
    Scalar parameters of the GMM + linear response model. Defaults are the settings
    of the risk validation experiment (d=500, p=200, k=3, mu=5, rho=0.3).
    """

    def set_params(self, params):
        """Set self.params, the problem parameters."""
        super().set_params(params)
        params = dict_to_namespace(params)

        self.params.name = getattr(params, 'name', 'ProblemConfig')
        self.params.n = getattr(params, 'n', 300)
        self.params.d = getattr(params, 'd', 500)
        self.params.p = getattr(params, 'p', 200)
        self.params.k = getattr(params, 'k', 3)
        self.params.mu = getattr(params, 'mu', 5.0)
        self.params.sigma = getattr(params, 'sigma', 1.0)
        self.params.r_s = getattr(params, 'r_s', 1.0)
        self.params.r_ns = getattr(params, 'r_ns', 2.0)
        self.params.rho = getattr(params, 'rho', 0.3)
        self.params.seed = getattr(params, 'seed', 0)
        self.params.pole_margin = getattr(params, 'pole_margin', 0.02)
        self.params.centers = getattr(params, 'centers', 'true')

        priors = getattr(params, 'priors', None)
        if priors is None:
            priors = [1.0 / self.params.k] * self.params.k
        self.params.priors = [float(x) for x in np.asarray(priors, dtype=float).reshape(-1)]

    def validate(self):
        """Raise ConfigError if any parameter is invalid."""
        pr = self.params

        for key in ('n', 'd', 'p', 'k', 'seed'):
            val = getattr(pr, key)
            try:
                is_int = not isinstance(val, (bool, np.bool_)) and int(val) == val
            except (TypeError, ValueError):
                is_int = False
            if not is_int:
                raise ConfigError(f'{key} must be an integer, got {val!r}')
            setattr(pr, key, int(val))

        if pr.n < 1:
            raise ConfigError(f'n must be positive, got {pr.n}')
        if pr.d < 1:
            raise ConfigError(f'd must be positive, got {pr.d}')
        if not 0 <= pr.p <= pr.d:
            raise ConfigError(f'p must satisfy 0 <= p <= d, got p={pr.p}, d={pr.d}')
        if pr.k < 1:
            raise ConfigError(f'k must be at least 1, got {pr.k}')
        if pr.k > pr.n:
            raise ConfigError(f'k must not exceed n, got k={pr.k}, n={pr.n}')
        if pr.mu > 0 and pr.k > pr.p:
            raise ConfigError(f'k must not exceed p when mu > 0, got k={pr.k}, p={pr.p}')
        if not 0 <= pr.seed < 2 ** 64:
            raise ConfigError(f'seed must be a 64-bit unsigned integer, got {pr.seed}')

        for key in ('mu', 'sigma', 'r_s', 'r_ns', 'rho', 'pole_margin'):
            try:
                setattr(pr, key, float(getattr(pr, key)))
            except (TypeError, ValueError):
                raise ConfigError(f'{key} must be a number, got {getattr(pr, key)!r}')

        for key in ('mu', 'sigma', 'r_s', 'r_ns'):
            val = getattr(pr, key)
            if not np.isfinite(val) or val < 0:
                raise ConfigError(f'{key} must be finite and >= 0, got {val}')

        if not 0.0 <= pr.rho <= 1.0:
            raise ConfigError(f'rho must lie in [0, 1], got {pr.rho}')

        if not 0.0 < pr.pole_margin < 0.5:
            raise ConfigError(f'pole_margin must lie in (0, 0.5), got {pr.pole_margin}')

        if pr.centers not in CENTER_MODES:
            raise ConfigError(f'centers must be one of {CENTER_MODES}, got {pr.centers!r}')

        priors = np.asarray(pr.priors, dtype=float)
        if not np.all(np.isfinite(priors)):
            raise ConfigError(f'priors must be finite, got {pr.priors}')
        if priors.shape != (pr.k,):
            raise ConfigError(f'priors must have length k={pr.k}, got {priors.size}')
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > PRIOR_TOL:
            raise ConfigError(f'priors must be nonnegative and sum to 1, got {pr.priors}')

    @property
    def priors(self):
        """Cluster priors as a numpy array."""
        return np.asarray(self.params.priors, dtype=float)

    @property
    def psi_d(self):
        return self.params.d / self.params.n

    @property
    def psi_p(self):
        return self.params.p / self.params.n

    def is_balanced(self):
        """Return True if the cluster priors are all equal to 1/k."""
        return bool(np.all(np.abs(self.priors - 1.0 / self.params.k) <= PRIOR_TOL))

    def regime(self):
        """Return the AsymptoticRegime of this configuration."""
        return classify_regime(self.psi_d, self.psi_p, self.params.pole_margin)

    def replace(self, **kwargs):
        """Return a copy of this config with some parameters replaced."""
        params = self.to_dict()
        if 'k' in kwargs and 'priors' not in kwargs:
            params['priors'] = None
        params.update(kwargs)
        return ProblemConfig(params, verbose=False)

    @classmethod
    def from_file(cls, path, overrides=None, verbose=False):
        """Build a ProblemConfig from the [problem] and [priors] sections of a file."""
        sections = read_config(path)
        return cls.from_sections(sections, overrides, verbose)

    @classmethod
    def from_sections(cls, sections, overrides=None, verbose=False):
        """Build a ProblemConfig from parsed config sections."""
        problem = dict(sections.get('problem', {}))
        check_known_keys('problem', problem, PROBLEM_KEYS)
        priors = priors_from_section(sections.get('priors'))
        if priors is not None:
            problem['priors'] = priors
        problem.update({key: val for key, val in (overrides or {}).items() if val is not None})
        return cls(problem, verbose=verbose)


@dataclass(frozen=True)
class AsymptoticRegime:
    """Aspect ratios and regime tags of the look-alike and min-norm estimators."""

    psi_d: float
    psi_p: float
    regime_lookalike: str
    regime_minnorm: str


def classify_ratio(ratio, pole_margin=0.02):
    """Return 'under', 'over', or 'pole' for an effective aspect ratio."""
    if ratio < 1.0 - pole_margin:
        return 'under'
    if ratio > 1.0 + pole_margin:
        return 'over'
    return 'pole'


def classify_regime(psi_d, psi_p, pole_margin=0.02):
    """Classify the regimes of both estimators at aspect ratios (psi_d, psi_p)."""
    return AsymptoticRegime(
        psi_d=float(psi_d),
        psi_p=float(psi_p),
        regime_lookalike=classify_ratio(psi_d - psi_p, pole_margin),
        regime_minnorm=classify_ratio(psi_d, pole_margin),
    )


@dataclass(frozen=True)
class GroundTruth:
    """
    True model theta0 = (theta0_s, theta0_ns), the d x k center matrix M, and the
    p x r frame U_s of left singular vectors of the sensitive centers M_s.
    """

    theta0_s: np.ndarray
    theta0_ns: np.ndarray
    U_s: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        for arr in (self.theta0_s, self.theta0_ns, self.U_s, self.M):
            arr.setflags(write=False)

    @property
    def p(self):
        return self.theta0_s.shape[0]

    @property
    def d(self):
        return self.M.shape[0]

    @property
    def k(self):
        return self.M.shape[1]

    @property
    def theta0(self):
        return np.concatenate([self.theta0_s, self.theta0_ns])

    @property
    def M_s(self):
        """Sensitive rows of the center matrix (p x k)."""
        return self.M[:self.p]

    @property
    def Ut_theta0s(self):
        """Alignment vector U_s^T theta0_s."""
        return self.U_s.T @ self.theta0_s


def random_frame(p, k, rng):
    """Return a Haar-distributed p x k matrix with orthonormal columns."""
    gmat = rng.standard_normal((p, k))
    qmat, rmat = qr(gmat, mode='economic')
    # Sign fix makes the distribution exactly Haar
    signs = np.sign(np.diag(rmat))
    signs[signs == 0] = 1.0
    return qmat * signs


def _unit_direction(draw, project, what):
    """Project draws from draw() with project() and normalize; resample once."""
    for _ in range(2):
        vec = project(draw())
        norm = np.linalg.norm(vec)
        if norm > 1e-12:
            return vec / norm
    raise NumericalError(f'zero-norm projection while building {what}')


def build_ground_truth(cfg, rng=None):
    """
    Build the ground truth under orthogonal, equal-energy sensitive centers:
    M = [mu U_s; 0] with U_s Haar distributed, and theta0_s split between span(U_s)
    and its complement with energies rho r_s^2 and (1 - rho) r_s^2.

    Parameters
    ----------
    cfg : ProblemConfig
        Problem configuration.
    rng : Generator_or_int
        Random state; defaults to a Generator seeded with cfg.params.seed.

    Returns
    -------
    gt : GroundTruth
    """
    pr = cfg.params
    rng = make_rng(pr.seed if rng is None else rng)
    p, d, k = pr.p, pr.d, pr.k

    if k > p:
        raise ConfigError(f'cannot fit an orthonormal {p} x {k} frame: k > p')
    if pr.rho < 1.0 and pr.r_s > 0 and p == k:
        raise ConfigError('rho < 1 needs a nonzero complement of span(U_s), but p == k')
    if pr.r_ns > 0 and d == p:
        raise ConfigError('r_ns > 0 needs non-sensitive features, but d == p')

    U_s = random_frame(p, k, rng)
    M = np.zeros((d, k))
    M[:p] = pr.mu * U_s

    z1 = rng.standard_normal(p)
    z2 = rng.standard_normal(p)

    def proj(v):
        return U_s @ (U_s.T @ v)

    def first_then_fresh(first):
        pending = [first]
        return lambda: pending.pop() if pending else rng.standard_normal(p)

    theta0_s = np.zeros(p)
    if pr.rho > 0:
        unit = _unit_direction(first_then_fresh(z1), proj, 'theta0_s')
        theta0_s += pr.r_s * np.sqrt(pr.rho) * unit
    if pr.rho < 1 and pr.r_s > 0:
        unit = _unit_direction(first_then_fresh(z2), lambda v: v - proj(v), 'theta0_s')
        theta0_s += pr.r_s * np.sqrt(1.0 - pr.rho) * unit

    theta0_ns = np.zeros(d - p)
    if d > p:
        theta0_ns = pr.r_ns * _unit_direction(
            lambda: rng.standard_normal(d - p), lambda v: v, 'theta0_ns'
        )

    return GroundTruth(theta0_s=theta0_s, theta0_ns=theta0_ns, U_s=U_s, M=M)


def ground_truth_from_centers(M, theta0, p, rank_tol=1e-12):
    """
    Build a GroundTruth from an arbitrary d x k center matrix, taken verbatim. U_s is
    the frame of left singular vectors of M[:p] with nonzero singular values. How
    theta0_ns relates to non-sensitive cluster structure is left to the caller.
    """
    M = np.array(M, dtype=float)
    theta0 = np.array(theta0, dtype=float).reshape(-1)
    if M.ndim != 2 or theta0.shape[0] != M.shape[0]:
        raise ConfigError(f'M is {M.shape} but theta0 has length {theta0.shape[0]}')
    if not 0 <= p <= M.shape[0]:
        raise ConfigError(f'p={p} outside [0, d={M.shape[0]}]')

    M_s = M[:p]
    if p == 0 or not np.any(M_s):
        U_s = np.zeros((p, 0))
    else:
        umat, svals, _ = svd(M_s, full_matrices=False)
        rank = int(np.sum(svals > rank_tol * svals[0]))
        U_s = umat[:, :rank]

    return GroundTruth(theta0_s=theta0[:p].copy(), theta0_ns=theta0[p:].copy(), U_s=U_s, M=M)
