import numpy as np
import pytest

from lookalike.data.synth import (
    Dataset,
    anonymize,
    check_consistent,
    dump_dataset_csv,
    empirical_centers,
    one_hot,
    sample_dataset,
    sample_labels,
)
from lookalike.models.problem import ProblemConfig, build_ground_truth
from lookalike.util.csv_util import read_csv
from lookalike.util.errors import ConfigError, EmptyClusterError


@pytest.fixture
def problem():
    cfg = ProblemConfig({'n': 60, 'd': 30, 'p': 12, 'k': 3, 'mu': 3.0, 'seed': 5})
    return cfg, build_ground_truth(cfg)


def test_one_hot():
    lam = one_hot([0, 2, 2, 1], 3)
    np.testing.assert_array_equal(lam, [[1, 0, 0, 0], [0, 0, 0, 1], [0, 1, 1, 0]])


def test_sample_dataset(problem):
    cfg, gt = problem
    ds = sample_dataset(cfg, gt, np.random.default_rng(0))
    assert ds.X.shape == (30, 60)
    assert ds.y.shape == (60,)
    assert (ds.n, ds.d, ds.k) == (60, 30, 3)
    assert ds.cluster_sizes().sum() == 60
    np.testing.assert_array_equal(ds.Lambda.sum(axis=0), np.ones(60))

    ds2 = sample_dataset(cfg, gt, np.random.default_rng(0))
    np.testing.assert_array_equal(ds.X, ds2.X)
    np.testing.assert_array_equal(ds.y, ds2.y)


def test_sample_dataset_noise_free(problem):
    cfg, gt = problem
    cfg = cfg.replace(sigma=0.0)
    ds = sample_dataset(cfg, gt)
    np.testing.assert_allclose(ds.y, ds.X.T @ gt.theta0, atol=1e-12)


def test_check_consistent(problem):
    cfg, gt = problem
    check_consistent(cfg, gt)
    with pytest.raises(ConfigError):
        check_consistent(cfg.replace(d=31), gt)


def test_anonymize_replaces_only_sensitive_rows(problem):
    cfg, gt = problem
    ds = sample_dataset(cfg, gt)
    anon = anonymize(ds, gt.M_s)

    np.testing.assert_array_equal(anon.X_L[:12], gt.M_s[:, ds.labels])
    np.testing.assert_array_equal(anon.X_L[12:], ds.X[12:])
    np.testing.assert_array_equal(anon.y, ds.y)
    np.testing.assert_array_equal(anon.as_dataset().labels, ds.labels)



def test_anonymize_idempotent(problem):
    cfg, gt = problem
    anon = anonymize(sample_dataset(cfg, gt), gt.M_s)
    again = anonymize(anon.as_dataset(), gt.M_s)
    np.testing.assert_array_equal(again.X_L, anon.X_L)
    np.testing.assert_array_equal(again.y, anon.y)


def test_sample_labels_frequencies():
    priors = np.array([0.2, 0.3, 0.5])
    labels = sample_labels(priors, 100000, np.random.default_rng(8))
    freq = np.bincount(labels, minlength=3) / labels.shape[0]
    np.testing.assert_allclose(freq, priors, atol=0.01)

def test_anonymize_shape_errors(problem):
    cfg, gt = problem
    ds = sample_dataset(cfg, gt)
    with pytest.raises(ConfigError):
        anonymize(ds, np.zeros((12, 2)))
    with pytest.raises(ConfigError):
        anonymize(ds, np.zeros((31, 3)))


def test_empirical_centers():
    X = np.array([[1.0, 3.0, 10.0, 0.0], [2.0, 4.0, 20.0, 5.0]])
    ds = Dataset(X=X, y=np.zeros(4), labels=np.array([0, 0, 1, 1]), k=2)
    np.testing.assert_allclose(empirical_centers(ds, 2), [[2.0, 5.0], [3.0, 12.5]])
    np.testing.assert_allclose(empirical_centers(ds, 1), [[2.0, 5.0]])


def test_empirical_centers_empty_cluster():
    ds = Dataset(X=np.ones((2, 3)), y=np.zeros(3), labels=np.array([0, 0, 2]), k=3)
    with pytest.raises(EmptyClusterError) as err:
        empirical_centers(ds, 2)
    assert err.value.cluster == 1


def test_dump_dataset_csv(problem, tmp_path):
    cfg, gt = problem
    ds = sample_dataset(cfg, gt)
    path = tmp_path / 'data.csv'
    dump_dataset_csv(ds, path)

    df = read_csv(path)
    assert list(df.columns[:3]) == ['label', 'y', 'x1']
    assert df.shape == (60, 32)
    np.testing.assert_array_equal(df['label'].to_numpy(), ds.labels)
    np.testing.assert_array_equal(df['y'].to_numpy(), ds.y)
    np.testing.assert_array_equal(df[[f'x{j + 1}' for j in range(30)]].to_numpy(), ds.X.T)
