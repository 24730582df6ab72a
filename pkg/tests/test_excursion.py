import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from xmem.config import ExperimentConfig
from xmem.distributions import ZDistribution
from xmem.excursion import (
    excursion_stat,
    excursion_volume,
    mc_ensemble,
    normalized_stat,
    partial_sum_scaling,
    scaling_exponent,
    window_variance,
    xi_and_rank,
)
from xmem.fieldsim import FieldSample
from xmem.memory import CovarianceModel, Transform


def _sample(values, d=1):
    values = np.asarray(values, dtype=float)
    return FieldSample(values, values.shape[0], d, None, None, None)


def test_volume_uses_strict_inequality():
    s = _sample([0.0, 1.0, 1.0, 2.0])
    assert excursion_volume(s, 1.0) == 1.0
    assert excursion_volume(s, 0.5) == 3.0


def test_normalized_stat_formula():
    s = _sample(np.arange(16.0).reshape(4, 4), d=2)
    # 8 of 16 values exceed 7.5; centred on n^d * tail with tail = 1/4, scaled by n^(d/2) = 4
    assert normalized_stat(s, 7.5, 0.25) == pytest.approx((8 - 4) / 4)
    st_ = excursion_stat(s, 7.5, 0.25)
    assert st_.raw_volume == 8 and st_.window_n == 4 and st_.d == 2
    with pytest.raises(ValueError):
        normalized_stat(s, 0.0, 1.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 3), st.floats(0.1, 5), st.integers(4, 7))
def test_scaling_exponent_recovers_power_law(slope, scale, points):
    n = 2 ** np.arange(8, 8 + points)
    rep = scaling_exponent(n, scale * n.astype(float) ** slope)
    assert rep.exponent == pytest.approx(slope, abs=1e-10)
    assert 0 < rep.exponent_stderr < 1e-8


def test_scaling_exponent_stderr_matches_ols():
    n = np.array([1024, 2048, 4096, 8192, 16384])
    v = np.array([1.0, 2.2, 3.9, 8.5, 15.0])
    rep = scaling_exponent(n, v)
    x, y = np.log2(n), np.log2(v)
    fit = np.polyfit(x, y, 1, cov=True)
    assert rep.exponent == pytest.approx(fit[0][0])
    # polyfit scales the covariance by the residual variance over N - 2
    assert rep.exponent_stderr == pytest.approx(math.sqrt(fit[1][0, 0]), rel=1e-9)


@pytest.mark.parametrize("n,v", [
    ([1, 2], [1, 2]),
    ([4, 2, 8, 16], [1, 1, 1, 1]),
    ([2, 3, 4], [1, 1, 1]),
    ([2, 8, 32], [1, 0, 1]),
])
def test_scaling_exponent_rejects_bad_input(n, v):
    with pytest.raises(ValueError):
        scaling_exponent(n, v)


# -- theory --------------------------------------------------------------


def test_rank_one_for_monotone_transform():
    th = xi_and_rank(Transform.identity(), None, 1.0, CovarianceModel.cauchy(0.4))
    assert th.q == 1 and th.predicted_exponent == pytest.approx(1.6)
    assert th.sigma2 == 0.0  # X = Y is a deterministic function of Y


def test_volatility_rank_dichotomy():
    G = Transform.abs_exp_sq(2.0)
    z = ZDistribution.symmetric_pareto(1.5)
    model = CovarianceModel.cauchy(0.3)
    zero = xi_and_rank(G, z, 0.0, model)
    assert zero.xi_zero and zero.predicted_exponent == 1.0
    assert zero.sigma2 == pytest.approx(0.25, abs=1e-12)
    one = xi_and_rank(G, z, 1.0, model)
    assert one.q == 2 and one.predicted_exponent == pytest.approx(1.4)


def test_boundary_flag_and_short_memory_prediction():
    th = xi_and_rank(Transform.exp_sq(2.0), None, 3.0, CovarianceModel.cauchy(0.52))
    assert th.q == 2 and th.boundary
    assert xi_and_rank(Transform.identity(), None, 0.0, CovarianceModel.exp_decay(1.0)).predicted_exponent == 1.0


def test_window_variance_white_noise():
    p = norm.sf(0.5)
    got = window_variance(Transform.identity(), None, 0.5, CovarianceModel.white_noise(), 100)
    assert got == pytest.approx(100 * p * (1 - p))


def test_window_variance_matches_brute_force():
    model = CovarianceModel.cauchy(0.7)
    n, u = 12, 0.3
    from xmem.bigauss import indicator_cov_integral
    p = norm.sf(u)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += p * (1 - p) if i == j else indicator_cov_integral(float(model.corr(i - j)), u, u)
    assert window_variance(Transform.identity(), None, u, model, n) == pytest.approx(total, rel=1e-10)


def test_window_variance_2d_white_noise():
    got = window_variance(Transform.identity(), None, 0.0, CovarianceModel.white_noise(2), 16)
    assert got == pytest.approx(256 * 0.25)


# -- Monte Carlo ---------------------------------------------------------


def _small_clt(**kw):
    base = dict(command="clt", eta=0.6, levels=(0.0, 1.0), n_values=(64, 128, 256, 512),
                replicates=40, seed=2024)
    base.update(kw)
    return ExperimentConfig(**base)


def test_ensemble_is_deterministic_and_thread_independent():
    a = mc_ensemble(_small_clt())
    b = mc_ensemble(_small_clt(), threads=3)
    np.testing.assert_array_equal(a.stats, b.stats)
    assert a.stats.shape == (2, 4, 40)
    lv = a.levels[0]
    assert lv.theory.q == 1 and len(lv.variance) == 4 and lv.scaling.bootstrap_stderr > 0


def test_ensemble_seed_changes_output():
    a = mc_ensemble(_small_clt())
    b = mc_ensemble(_small_clt(seed=2025))
    assert not np.array_equal(a.stats, b.stats)


def test_ensemble_prefix_windows_are_consistent():
    cfg = _small_clt(levels=(0.2,), replicates=3)
    res = mc_ensemble(cfg)
    from xmem.excursion import _simulate_x
    x = _simulate_x(cfg, cfg.build_model(), cfg.build_transform(), None, 512, 1).values
    p = norm.sf(0.2)
    want = (np.count_nonzero(x[:128] > 0.2) - 128 * p) / math.sqrt(128)
    assert res.stats[0, 1, 1] == pytest.approx(want)


def test_ensemble_2d_runs():
    cfg = ExperimentConfig(command="clt", d=2, eta=1.0, levels=(0.0,), n_values=(8, 16, 32, 64),
                           replicates=10, seed=1)
    res = mc_ensemble(cfg)
    assert res.stats.shape == (1, 4, 10)
    assert res.levels[0].theory.predicted_exponent == pytest.approx(3.0)


def test_partial_sums_small_run():
    cfg = ExperimentConfig(command="partial-sum", eta=0.8, transform_name="exp_sq", alpha=1.5,
                           n_values=(128, 256, 512, 1024), replicates=50, seed=3)
    res = partial_sum_scaling(cfg)
    assert res.mean_x == pytest.approx(math.sqrt(3))
    assert res.predicted_exponent == pytest.approx(2 / 3)
    assert res.report.statistic == "iqr" and len(res.quantiles) == 4
    again = partial_sum_scaling(cfg.with_overrides(threads=2))
    assert again.report == res.report


def test_partial_sums_validate_alpha():
    cfg = ExperimentConfig(command="partial-sum", eta=0.8, transform_name="exp_sq", alpha=2.5, seed=3)
    with pytest.raises(ValueError):
        partial_sum_scaling(cfg)
