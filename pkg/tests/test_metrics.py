import numpy as np
import pytest
from scipy import stats

from compsearch.metrics import LengthMismatch, ZeroVariance, kendall_tau, pearson, ranking_metrics, spearman

from oracles import kendall_oracle_float, pearson_oracle, spearman_oracle


def test_fixed_cases():
    assert kendall_tau([1, 2, 3], [1, 2, 3])[0] == 1.0
    assert kendall_tau([1, 2, 3], [3, 2, 1])[0] == -1.0
    assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4])[0] == pytest.approx(4 / 6, abs=1e-15)
    assert spearman([1, 2, 3], [1, 2, 3])[0] == 1.0
    assert spearman([1, 2, 3], [3, 2, 1])[0] == -1.0
    x = np.arange(10.0)
    assert pearson(x, 2 * x + 1)[0] == pytest.approx(1.0, abs=1e-15)
    assert pearson(x, -x)[0] == pytest.approx(-1.0, abs=1e-15)


def test_errors():
    with pytest.raises(LengthMismatch):
        kendall_tau([1, 2], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        kendall_tau([1], [1])
    with pytest.raises(LengthMismatch):
        spearman([1, 2], [1, 2])
    with pytest.raises(ZeroVariance):
        pearson([1, 1, 1], [1, 2, 3])


def test_against_oracles_and_scipy():
    rng = np.random.default_rng(0)
    for _ in range(30):
        a = rng.integers(0, 10, 50).astype(float)  # with ties
        b = a + rng.normal(0, 3, 50)
        tau, p = kendall_tau(a, b)
        assert tau == pytest.approx(kendall_oracle_float(list(a), list(b)), abs=1e-15)
        ref = stats.kendalltau(a, b, method="asymptotic")
        assert tau == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9)
        r, p = spearman(a, b)
        assert r == pytest.approx(spearman_oracle(list(a), list(b)), abs=1e-12)
        assert p == pytest.approx(stats.spearmanr(a, b).pvalue, rel=1e-9)
        r, p = pearson(a, b)
        assert r == pytest.approx(pearson_oracle(list(a), list(b)), abs=1e-12)
        assert p == pytest.approx(stats.pearsonr(a, b).pvalue, rel=1e-9)


def test_symmetry_and_invariance():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=40), rng.normal(size=40)
    for fn in (kendall_tau, spearman, pearson):
        assert fn(a, b)[0] == pytest.approx(fn(b, a)[0], abs=1e-12)
        assert fn(3 * a + 2, b)[0] == pytest.approx(fn(a, b)[0], abs=1e-12)
    assert kendall_tau(np.exp(a), b) == kendall_tau(a, b)
    assert spearman(np.exp(a), b)[0] == pytest.approx(spearman(a, b)[0], abs=1e-15)


def test_ranking_metrics_bounds_and_format():
    rng = np.random.default_rng(2)
    m = ranking_metrics(rng.normal(size=30), rng.normal(size=30))
    for coef, p in (m.kendall_tau, m.spearman, m.pearson):
        assert -1 <= coef <= 1 and 0 <= p <= 1
    assert m.format_cell().startswith("k-tau: (")
