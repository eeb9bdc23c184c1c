import numpy as np
import pytest

from enes.features import (
    FEATURE_DIM,
    featurize,
    features_from_tables,
    mirror_features,
    node_tables,
    standardize_rows,
)


def gaussian(shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


def test_identical_rows_fully_correlated():
    x = gaussian((2, 200))
    f = featurize(np.vstack([x[0], x[0], x[1]]))
    assert f.shape == (FEATURE_DIM,)
    assert f[0] == pytest.approx(1.0)
    assert f[1] == pytest.approx(1.0)


def test_independent_rows_near_zero():
    f = featurize(gaussian((3, 10000), 1))
    assert np.all(np.abs(f[:15]) < 0.05)
    assert np.all(np.abs(f[15:18]) < 0.1)  # skewness, se ~ 0.024
    assert np.all(np.abs(f[18:21]) < 0.2)  # excess kurtosis, se ~ 0.049


def test_square_dependence_visible():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(10000)
    f = featurize(np.vstack([x, x**2, rng.standard_normal(10000)]))
    assert abs(f[0]) < 0.05
    assert f[3] > 0.5


def test_column_permutation_invariance():
    x = gaussian((3, 300), 3)
    x[1] += 0.8 * x[0] ** 2
    perm = np.random.default_rng(4).permutation(300)
    np.testing.assert_allclose(featurize(x), featurize(x[:, perm]), atol=1e-12)


def test_tables_agree_with_single_block():
    x = gaussian((6, 120), 5)
    x[2] += np.tanh(x[0])
    tables = node_tables(x)
    order = np.array([[0, 2, 4], [5, 1, 3], [4, 0, 1]])
    batch = features_from_tables(tables, order)
    for row, (a, j, b) in zip(batch, order):
        np.testing.assert_allclose(row, featurize(x[[a, j, b]]), atol=1e-12)


def test_mirror_features_match_reversed_block():
    x = gaussian((3, 150), 6)
    x[1] = x[0] + x[1] ** 3
    np.testing.assert_allclose(mirror_features(featurize(x))[0], featurize(x[::-1]), atol=1e-12)


def test_degenerate_row_gives_zero():
    x = gaussian((3, 50), 7)
    x[1] = 4.2
    f = featurize(x)
    pair_ij, pair_jk = f[0:5], f[5:10]
    assert np.all(pair_ij == 0) and np.all(pair_jk == 0)
    assert f[16] == 0 and f[19] == 0
    assert np.isfinite(f).all()


def test_too_few_samples():
    with pytest.raises(ValueError, match="too few samples"):
        featurize(gaussian((3, 7)))


def test_standardize_rows():
    z = standardize_rows(np.array([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]))
    np.testing.assert_allclose(z[0], [-1.224744871391589, 0, 1.224744871391589])
    assert np.all(z[1] == 0)
