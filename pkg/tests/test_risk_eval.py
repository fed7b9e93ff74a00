import numpy as np
import pytest

from lookalike.models.problem import ProblemConfig, build_ground_truth, ground_truth_from_centers
from lookalike.risk.risk_eval import (
    gain,
    risk_closed_form,
    risk_monte_carlo,
    risk_report,
)
from lookalike.util.errors import ConfigError, NumericalError


@pytest.fixture
def problem():
    cfg = ProblemConfig({
        'n': 50, 'd': 20, 'p': 10, 'k': 2, 'mu': 2.0, 'sigma': 0.5, 'r_s': 1.0,
        'r_ns': 1.0, 'rho': 0.6, 'priors': [0.3, 0.7], 'seed': 4,
    })
    return cfg, build_ground_truth(cfg)


def test_closed_form_at_truth_is_noise(problem):
    cfg, gt = problem
    assert risk_closed_form(gt.theta0, gt, cfg) == pytest.approx(0.25)


def test_closed_form_at_zero(problem):
    cfg, gt = problem
    proj = gt.M.T @ gt.theta0
    expected = 0.25 + gt.theta0 @ gt.theta0 + proj @ (cfg.priors * proj)
    assert risk_closed_form(np.zeros(20), gt, cfg) == pytest.approx(expected, rel=1e-12)


def test_closed_form_matches_monte_carlo(problem):
    cfg, gt = problem
    theta = gt.theta0 + 0.3 * np.random.default_rng(0).standard_normal(20)
    closed = risk_closed_form(theta, gt, cfg)
    mean, se = risk_monte_carlo(theta, gt, cfg, 200000, np.random.default_rng(1))
    assert se > 0
    assert abs(mean - closed) < 4 * se



def test_closed_form_matches_monte_carlo_random_configs():
    rng = np.random.default_rng(11)
    agree = 0
    for trial in range(50):
        k = int(rng.integers(1, 5))
        d = int(rng.integers(6, 26))
        p = int(rng.integers(k + 1, d))
        cfg = ProblemConfig({
            'n': 100, 'd': d, 'p': p, 'k': k,
            'mu': float(rng.uniform(0, 3)), 'sigma': float(rng.uniform(0.2, 2)),
            'r_s': float(rng.uniform(0, 2)), 'r_ns': float(rng.uniform(0, 2)),
            'rho': float(rng.uniform(0, 1)), 'priors': list(rng.dirichlet(np.ones(k))),
            'seed': trial,
        })
        gt = build_ground_truth(cfg)
        theta = gt.theta0 + rng.standard_normal(d) / np.sqrt(d)
        mean, se = risk_monte_carlo(theta, gt, cfg, 100000, rng)
        agree += abs(mean - risk_closed_form(theta, gt, cfg)) <= 3 * se
    assert agree >= 47


def test_closed_form_rotation_invariant(problem):
    cfg, gt = problem
    rng = np.random.default_rng(5)
    qmat, _ = np.linalg.qr(rng.standard_normal((20, 20)))
    rotated = ground_truth_from_centers(qmat @ gt.M, qmat @ gt.theta0, cfg.params.p)
    for _ in range(5):
        theta = rng.standard_normal(20)
        assert risk_closed_form(qmat @ theta, rotated, cfg) == pytest.approx(
            risk_closed_form(theta, gt, cfg), rel=1e-10
        )

def test_monte_carlo_deterministic(problem):
    cfg, gt = problem
    theta = np.zeros(20)
    first = risk_monte_carlo(theta, gt, cfg, 5000, np.random.default_rng(3), batch_size=700)
    second = risk_monte_carlo(theta, gt, cfg, 5000, np.random.default_rng(3), batch_size=700)
    assert first == second


def test_risk_errors(problem):
    cfg, gt = problem
    with pytest.raises(ConfigError):
        risk_closed_form(np.zeros(19), gt, cfg)
    with pytest.raises(ConfigError):
        risk_monte_carlo(np.zeros(20), gt, cfg, 1)
    with pytest.raises(ConfigError):
        risk_monte_carlo(np.zeros(19), gt, cfg, 100)
    with pytest.raises(ConfigError):
        risk_closed_form(np.zeros(20), gt, cfg.replace(k=3))


def test_gain():
    assert gain(3.0, 1.5) == pytest.approx(2.0)
    with pytest.raises(NumericalError):
        gain(1.0, 0.0)


def test_risk_report(problem):
    cfg, gt = problem
    report = risk_report(gt.theta0, gt, cfg)
    assert report.risk_closed_form == pytest.approx(0.25)
    assert report.risk_monte_carlo is None
    assert report.mc_gap is None

    report = risk_report(gt.theta0, gt, cfg, n_test=20000, rng=np.random.default_rng(2),
                         theory=0.25)
    assert report.mc_gap < 4 * report.mc_std_error
    assert report.theory_prediction == 0.25
