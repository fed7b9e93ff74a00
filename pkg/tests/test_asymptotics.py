import numpy as np
import pytest

from lookalike.models.problem import ProblemConfig
from lookalike.theory.asymptotics import (
    TheoryParams,
    gain_case,
    gain_case1_closed_form,
    gain_case1_snr0_limit,
    gain_case2_balanced,
    gain_case3_rns_limit,
    gain_theory,
    gain_threshold_case2,
    lookalike_over_residual,
    minnorm_over_residual,
    risk_lookalike,
    risk_lookalike_misspecified_over,
    risk_lookalike_misspecified_under,
    risk_lookalike_over,
    risk_lookalike_under,
    risk_minnorm,
    risk_minnorm_over_balanced,
)
from lookalike.util.errors import ConfigError, PoleError


def balanced(k=3, **kwargs):
    params = dict(psi_d=2.0, psi_p=1.7, sigma=1.0, r_s=0.5, r_ns=1.0, rho=0.3, mu=5.0)
    params.update(kwargs)
    return TheoryParams(priors=np.full(k, 1.0 / k), **params)


def test_worked_example_overparametrized_lookalike():
    tp = TheoryParams(psi_d=3.0, psi_p=1.0, sigma=1.0, r_s=np.sqrt(2.0), r_ns=0.0,
                      rho=0.5, mu=np.sqrt(2.0), priors=[0.5, 0.5])
    pred = risk_lookalike_over(tp, [1.0, 0.0])
    np.testing.assert_allclose(pred.alpha, [0.5, 0.0], atol=1e-12)
    assert pred.gamma0_sq == pytest.approx(3.25, rel=1e-12)
    assert pred.risk == pytest.approx(5.75, rel=1e-12)
    assert pred.regime == 'over'


def test_lookalike_under():
    tp = balanced(psi_d=0.9, psi_p=0.5, r_s=1.0)
    assert risk_lookalike_under(tp) == pytest.approx(2.0 / 0.6 - 0.3)
    assert risk_lookalike(tp).risk == risk_lookalike_under(tp)
    assert risk_lookalike_misspecified_under(tp) == pytest.approx(2.0 / 0.6)


def test_lookalike_under_worked_values():
    assert risk_lookalike_under(balanced(psi_d=0.9, psi_p=0.4, r_s=0.0)) == pytest.approx(2.0)
    tp = balanced(psi_d=0.9, psi_p=0.4, r_s=1.0, rho=0.3)
    assert risk_lookalike_under(tp) == pytest.approx(3.7, rel=1e-12)
    # Noise free, perfectly aligned, no excess dimensions
    tp = balanced(psi_d=0.9, psi_p=0.9, sigma=0.0, r_s=1.0, rho=1.0)
    assert risk_lookalike_under(tp) == pytest.approx(0.0, abs=1e-12)


def test_lookalike_over_large_gap_limit():
    vec = np.sqrt(0.5) * np.array([0.6, 0.8])
    tp = TheoryParams(psi_d=1e6 + 1.0, psi_p=1.0, sigma=1.0, r_s=1.0, r_ns=1.0, rho=0.5,
                      mu=2.0, priors=[0.3, 0.7])
    pred = risk_lookalike_over(tp, vec)
    np.testing.assert_allclose(pred.alpha, vec, atol=1e-4)
    assert pred.gamma0_sq == pytest.approx(1.0, abs=1e-4)
    quad = float(np.sum((1.0 + 4.0 * tp.priors) * vec ** 2))
    assert pred.risk == pytest.approx(1.0 + 0.5 + 1.0 + quad, abs=1e-4)


def test_minnorm_under():
    tp = balanced(psi_d=0.6, psi_p=0.2, sigma=2.0)
    pred = risk_minnorm(tp)
    assert pred.regime == 'under'
    assert pred.risk == pytest.approx(4.0 / 0.4)


def test_minnorm_over_without_clusters():
    for psi_d in (1.5, 2.0, 4.0):
        tp = balanced(psi_d=psi_d, psi_p=0.5, mu=0.0, sigma=0.7, r_s=1.2, r_ns=0.4)
        expected = (0.49 * psi_d / (psi_d - 1.0)
                    + (1.0 - 1.0 / psi_d) * (1.2 ** 2 + 0.4 ** 2))
        assert risk_minnorm(tp).risk == pytest.approx(expected, rel=1e-12)


def test_lookalike_over_without_clusters():
    tp = balanced(psi_d=4.0, psi_p=1.0, mu=0.0)
    assert risk_lookalike(tp).risk == pytest.approx(risk_lookalike_misspecified_over(tp),
                                                    rel=1e-12)


def test_fixed_point_residuals_unbalanced():
    rng = np.random.default_rng(0)
    priors = np.array([0.1, 0.2, 0.3, 0.4])
    tp = TheoryParams(psi_d=5.0, psi_p=2.0, sigma=0.8, r_s=1.3, r_ns=0.9, rho=0.45,
                      mu=3.0, priors=priors)
    vec = rng.standard_normal(4)
    vec *= np.sqrt(tp.rho) * tp.r_s / np.linalg.norm(vec)

    pred = risk_lookalike_over(tp, vec)
    assert lookalike_over_residual(tp, vec, pred) <= 1e-12
    pred = risk_minnorm(tp, vec)
    assert minnorm_over_residual(tp, vec, pred) <= 1e-12


def test_alignment_checks():
    tp = balanced(psi_d=4.0, psi_p=1.0)
    with pytest.raises(ConfigError):
        risk_lookalike_over(tp, [1.0, 0.0, 0.0])
    with pytest.raises(ConfigError):
        risk_lookalike_over(tp, [0.1, 0.1])

    unbalanced = tp.replace(priors=np.array([0.2, 0.3, 0.5]))
    with pytest.raises(ConfigError):
        risk_lookalike_over(unbalanced)


def test_balanced_alignment_direction_irrelevant():
    tp = balanced(psi_d=4.0, psi_p=1.0)
    norm = np.sqrt(tp.rho) * tp.r_s
    first = risk_lookalike(tp, [norm, 0.0, 0.0]).risk
    spread = risk_lookalike(tp, np.full(3, norm / np.sqrt(3.0))).risk
    assert first == pytest.approx(spread, rel=1e-12)


def test_pole_errors():
    with pytest.raises(PoleError):
        risk_lookalike(balanced(psi_d=2.0, psi_p=1.005))
    with pytest.raises(PoleError):
        risk_minnorm(balanced(psi_d=1.01, psi_p=0.5))
    with pytest.raises(PoleError):
        gain_theory(balanced(psi_d=1.0, psi_p=0.5))


def test_wrong_regime():
    with pytest.raises(ConfigError):
        risk_lookalike_under(balanced(psi_d=3.0, psi_p=0.5))
    with pytest.raises(ConfigError):
        risk_lookalike_over(balanced(psi_d=0.9, psi_p=0.5))


def test_theory_params_validation():
    with pytest.raises(ConfigError):
        balanced(psi_d=1.0, psi_p=1.5)
    with pytest.raises(ConfigError):
        balanced(sigma=-1.0)
    with pytest.raises(ConfigError):
        balanced(rho=1.2)
    with pytest.raises(ConfigError):
        TheoryParams(psi_d=2.0, psi_p=1.0, sigma=1.0, r_s=1.0, r_ns=1.0, rho=0.3, mu=1.0,
                     priors=[0.5, 0.6])


def test_from_problem():
    tp = TheoryParams.from_problem(ProblemConfig({'priors': [0.2, 0.3, 0.5]}))
    assert tp.psi_d == pytest.approx(5 / 3)
    assert tp.psi_p == pytest.approx(2 / 3)
    assert tp.k == 3
    assert not tp.is_balanced()
    assert tp.snr == pytest.approx(1.0)


def test_gain_case():
    assert gain_case(balanced(psi_d=0.9, psi_p=0.5)) == 1
    assert gain_case(balanced(psi_d=2.0, psi_p=1.7)) == 2
    assert gain_case(balanced(psi_d=4.0, psi_p=1.0)) == 3


def test_threshold_case2():
    assert gain_threshold_case2(2.0, 1.7) == pytest.approx(8.0 / 13.0, rel=1e-12)
    with pytest.raises(ConfigError):
        gain_threshold_case2(2.0, 2.0)
    with pytest.raises(ConfigError):
        gain_threshold_case2(0.9, 0.5)
    with pytest.raises(ConfigError):
        gain_threshold_case2(3.0, 1.0)


def test_gain_at_least_one_below_threshold():
    snr_max = np.sqrt(gain_threshold_case2(2.0, 1.7))
    for snr in np.linspace(0.0, snr_max, 7):
        for rho in (0.0, 0.3, 1.0):
            for mu in (0.0, 1.0, 10.0):
                for r_ns in (0.0, 2.0):
                    tp = balanced(r_s=snr, rho=rho, mu=mu, r_ns=r_ns)
                    assert gain_theory(tp) >= 1.0 - 1e-12


def test_gain_equals_one_at_threshold():
    snr = np.sqrt(gain_threshold_case2(2.0, 1.7))
    tp = balanced(r_s=snr, rho=0.0, r_ns=0.0)
    assert gain_theory(tp) == pytest.approx(1.0, rel=1e-12)


def test_case2_monotone():
    mu2_over_k = np.linspace(0.05, 30.0, 40)
    g = gain_case2_balanced(2.0, 1.7, 1.0, 0.5, 0.3, 1.0, mu2_over_k)
    assert np.all(np.diff(g) < 0)

    r_ns = np.linspace(0.0, 5.0, 20)
    g = gain_case2_balanced(2.0, 1.7, 1.0, 0.5, 0.3, r_ns, 2.0)
    assert np.all(np.diff(g) > 0)

    with pytest.raises(ConfigError):
        gain_case2_balanced(0.9, 0.5, 1.0, 0.5, 0.3, 1.0, 2.0)


def test_case2_grid():
    mu2k, rho, r_ns, snr = np.meshgrid(np.linspace(0.0, 50.0, 20), np.linspace(0.0, 1.0, 20),
                                       np.linspace(0.0, 5.0, 20), np.linspace(0.0, 2.0, 20),
                                       indexing='ij')
    g = gain_case2_balanced(2.0, 1.7, 1.0, snr, rho, r_ns, mu2k)
    assert np.all(np.isfinite(g))
    assert np.all(np.diff(g, axis=0) <= 1e-12)
    assert np.all(np.diff(g, axis=2) >= -1e-12)

    # Increasing in rho along lines that start with a gain of at least one
    helps = g[:, :1] >= 1.0
    assert np.all(np.where(helps, np.diff(g, axis=1), 0.0) >= -1e-12)

    below = snr ** 2 <= gain_threshold_case2(2.0, 1.7)
    assert np.all(g[below] >= 1.0 - 1e-12)


def test_case2_balanced_matches_general():
    tp = balanced(k=5, mu=3.0, r_ns=2.0)
    g = gain_case2_balanced(2.0, 1.7, 1.0, 0.5, 0.3, 2.0, 9.0 / 5.0)
    assert float(g) == pytest.approx(gain_theory(tp), rel=1e-12)
    risk = risk_minnorm_over_balanced(2.0, 1.0, 0.5, 0.3, 2.0, 9.0 / 5.0)
    assert float(risk) == pytest.approx(risk_minnorm(tp).risk, rel=1e-12)


def test_case1_closed_form_and_limit():
    for snr in (0.1, 1.0, 3.0):
        tp = balanced(psi_d=0.9, psi_p=0.5, sigma=1.0, r_s=snr)
        assert float(gain_case1_closed_form(0.9, 0.5, snr, 0.3)) == pytest.approx(
            gain_theory(tp), rel=1e-12
        )
    assert float(gain_case1_closed_form(0.9, 0.5, 1e-8, 0.3)) == pytest.approx(
        gain_case1_snr0_limit(0.9, 0.5), rel=1e-9
    )
    assert gain_case1_snr0_limit(0.9, 0.5) == pytest.approx(6.0)


def test_case1_crossing_grows_with_psi_p():
    snr = np.linspace(0.01, 5.0, 2000)
    crossings = []
    for psi_p in (0.1, 0.5, 0.7, 0.9):
        g = gain_case1_closed_form(0.9, psi_p, snr, 0.3)
        crossings.append(snr[np.argmax(g < 1.0)])
    assert np.all(np.diff(crossings) > 0)
    assert crossings[0] == pytest.approx(1.03, abs=0.01)
    assert crossings[-1] == pytest.approx(3.59, abs=0.01)


def test_case3_rns_limit():
    tp = balanced(psi_d=4.0, psi_p=1.5, r_ns=1e6)
    assert gain_theory(tp) == pytest.approx(gain_case3_rns_limit(4.0, 1.5), rel=1e-6)
    assert gain_case3_rns_limit(4.0, 1.5) == pytest.approx(1.25)
