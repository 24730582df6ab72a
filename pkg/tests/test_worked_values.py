"""Hand-checkable values and small end-to-end examples, one module at a time."""

import io
import math

import numpy as np
import pytest
from scipy.special import gamma
from scipy.stats import norm

from xmem import cli
from xmem.bigauss import (
    hoeffding_reconstruct,
    indicator_cov_integral,
    indicator_cov_series,
    orthant_oracle,
)
from xmem.config import ExperimentConfig
from xmem.distributions import ZDistribution
from xmem.excursion import _simulate_x, excursion_volume, mc_ensemble, partial_sum_scaling, xi_and_rank
from xmem.fieldsim import (
    FieldSample,
    RngSpec,
    marginal_tail,
    simulate_gaussian_1d,
    simulate_gaussian_2d,
    subordinate,
    volatility_field,
)
from xmem.hermite import hermite_coeff, hermite_eval, hermite_rank
from xmem.memory import (
    LRD,
    SRD,
    CovarianceModel,
    FiniteMeasure,
    Transform,
    bk_coefficient,
    classify_subordinated,
    generalized_inverse,
    rho_power_integral,
    sigma2_numeric,
    volatility_memory_series,
)
from xmem.memory.transforms import EVEN_COMPOSED, MONOTONE_INCREASING

PHI0 = 1 / math.sqrt(2 * math.pi)


# -- Hermite -------------------------------------------------------------


def test_polynomial_values():
    assert hermite_eval(2, 0.0) == -1
    assert hermite_eval(0, 7.3) == 1
    assert hermite_eval(3, 1.0) == -2


def test_coefficient_values():
    assert hermite_coeff(lambda y: y * y - 1, 2) == pytest.approx(2.0, abs=1e-10)
    assert hermite_coeff(lambda y: y, 2) == pytest.approx(0.0, abs=1e-14)
    step = hermite_coeff(lambda y: (y > 0) - 0.5, 1, breakpoints=[0.0])
    assert step == pytest.approx(PHI0, abs=1e-12)


def test_rank_values():
    assert hermite_rank(lambda y: np.tanh(y), k_max=6).rank == 1
    # y -> G(|y|) with G(x) = x
    assert hermite_rank(lambda y: np.abs(y) - math.sqrt(2 / math.pi), k_max=6, breakpoints=[0.0]).rank == 2
    assert hermite_rank(lambda y: 0 * y, k_max=6).none_up_to == 6


# -- bivariate normal ----------------------------------------------------


def test_indicator_covariance_values():
    assert indicator_cov_integral(0.0, 1.0, -2.0) == 0.0
    assert indicator_cov_integral(0.5, 0, 0) == pytest.approx(1 / 12, abs=1e-12)
    ref = orthant_oracle(0.3, 1, -0.5) - norm.sf(1) * norm.sf(-0.5)
    assert indicator_cov_integral(0.3, 1, -0.5) == pytest.approx(ref, abs=1e-8)


def test_series_values():
    assert indicator_cov_series(0.0, 0.4, -1.1, K=50) == 0.0
    assert indicator_cov_series(0.5, 0, 0, K=60) == pytest.approx(1 / 12, abs=1e-10)
    assert indicator_cov_series(0.9, 1, 1, K=200) == pytest.approx(indicator_cov_integral(0.9, 1, 1), abs=1e-10)


def test_orthant_values():
    assert orthant_oracle(0, 0, 0) == pytest.approx(0.25, abs=1e-12)
    assert orthant_oracle(0.5, 0, 0) == pytest.approx(1 / 3, abs=1e-12)
    assert orthant_oracle(-0.5, 0, 0) == pytest.approx(1 / 6, abs=1e-12)


def test_reconstruction_at_zero():
    assert abs(hoeffding_reconstruct(0.0, 8, 0.05)) < 1e-6


# -- memory --------------------------------------------------------------


def test_generalized_inverse_values():
    assert generalized_inverse(Transform.identity(), 0.7) == 0.7
    assert generalized_inverse(Transform.exp_sq(2), math.exp(0.25)) == pytest.approx(1.0, abs=1e-12)
    assert generalized_inverse(Transform.signed_exp(1.3), 0.0) == 0.0


def test_bk_values():
    I = Transform.identity()
    assert bk_coefficient(I, FiniteMeasure.dirac(0.0), 1) == 0.0
    assert bk_coefficient(I, FiniteMeasure.dirac(0.0), 0) == pytest.approx(0.1591549, abs=1e-7)
    got = bk_coefficient(Transform.exp_sq(2), FiniteMeasure.dirac(math.exp(0.25)), 1)
    assert got == pytest.approx(0.0585498, abs=1e-7)


def test_rho_power_values():
    assert math.isinf(rho_power_integral(CovarianceModel.cauchy(0.3), 3))
    want = math.sqrt(math.pi) * gamma(0.9) / gamma(1.4)
    assert rho_power_integral(CovarianceModel.cauchy(0.7), 4) == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(2.1347, abs=1e-4)
    assert rho_power_integral(CovarianceModel.cauchy(2.0), 1) == pytest.approx(math.pi, rel=1e-12)


def test_classify_values():
    G = Transform.exp_sq(2)
    mu = FiniteMeasure.dirac(2.0)
    lrd = classify_subordinated(G, CovarianceModel.cauchy(0.3), mu)
    assert lrd.verdict == LRD and lrd.certificate[0] == 2
    assert classify_subordinated(G, CovarianceModel.cauchy(0.8), mu).verdict == SRD
    srd = classify_subordinated(Transform.identity(), CovarianceModel.cauchy(3.0), FiniteMeasure.dirac(0.0))
    assert srd.verdict == SRD and math.isfinite(srd.series_value)


def test_volatility_values_with_gaussian_noise():
    G = Transform.exp_sq(2)
    z = ZDistribution.gaussian()
    mu = FiniteMeasure.dirac(1.0)
    assert volatility_memory_series(G, z, CovarianceModel.cauchy(0.4), mu).verdict == LRD
    srd = volatility_memory_series(G, z, CovarianceModel.cauchy(0.8), mu)
    assert srd.verdict == SRD
    assert srd.leading_terms[0] == 0.0  # first-order coefficient vanishes for even G


def test_direct_integral_values():
    mu = FiniteMeasure.dirac(0.0)
    white = sigma2_numeric(lambda t: np.where(np.asarray(t) == 0, 1.0, 0.0), mu, lattice=True)
    assert white == pytest.approx(0.25)  # lag zero only
    r = lambda t: (1 + np.asarray(t) ** 2) ** -1.5
    base = sigma2_numeric(r, mu, T_cutoff=200)
    series = classify_subordinated(Transform.identity(), CovarianceModel.cauchy(3.0), mu).series_value
    assert base == pytest.approx(series, rel=1e-3)
    assert sigma2_numeric(r, FiniteMeasure.dirac(0.0, 2.0), T_cutoff=200) == pytest.approx(4 * base, rel=1e-12)


# -- simulation ----------------------------------------------------------


def test_white_noise_lag_one():
    m = CovarianceModel.white_noise()
    ys = np.array([simulate_gaussian_1d(1024, m, RngSpec(1, i)).values for i in range(200)])
    assert abs(np.mean(ys[:, :-1] * ys[:, 1:])) < 3 / math.sqrt(200 * 1024)


def test_long_memory_sequence_moments():
    m = CovarianceModel.cauchy(0.4)
    ys = np.array([simulate_gaussian_1d(4096, m, RngSpec(2, i)).values for i in range(100)])
    assert np.var(ys) == pytest.approx(1.0, abs=0.05)
    assert np.mean(ys[:, :-10] * ys[:, 10:]) == pytest.approx(101**-0.2, abs=0.03)


def test_planar_field_values():
    wn = CovarianceModel.white_noise(2)
    ys = np.array([simulate_gaussian_2d(256, wn, RngSpec(3, i)).values for i in range(4)])
    assert abs(np.mean(ys[:, :-1, :] * ys[:, 1:, :])) < 3 / (256 * math.sqrt(4))
    m = CovarianceModel.cauchy(0.6, d=2)
    ys = np.array([simulate_gaussian_2d(256, m, RngSpec(4, i)).values for i in range(50)])
    c50 = np.mean(ys[:, :-5, :] * ys[:, 5:, :])
    c05 = np.mean(ys[:, :, :-5] * ys[:, :, 5:])
    assert abs(c50 - c05) < 0.02
    assert np.mean(ys[:, :-3, :-4] * ys[:, 3:, 4:]) == pytest.approx(26**-0.3, abs=0.03)


def test_subordination_values():
    y = simulate_gaussian_1d(1 << 16, CovarianceModel.white_noise(), RngSpec(5))
    assert np.array_equal(subordinate(y, Transform.identity()).values, y.values)
    G = Transform.exp_sq(2)
    x = subordinate(y, G).values
    q = math.exp(norm.isf(0.005) ** 2 / 4)
    assert q / 1.5 <= np.quantile(x, 0.99) <= 1.5 * q
    flipped = FieldSample(-y.values, y.n, 1, y.model, y.seed, y.stream_id)
    assert np.array_equal(subordinate(flipped, G).values, x)


def test_volatility_field_values():
    rng = RngSpec(6)
    N = 1 << 16
    flat = FieldSample(np.zeros(N), N, 1, None, 6, 0)
    x = volatility_field(flat, Transform.constant(1.0), ZDistribution.gaussian(), rng).values
    assert abs(np.corrcoef(x[:-1], x[1:])[0, 1]) < 3 / math.sqrt(N)
    y = simulate_gaussian_1d(N, CovarianceModel.cauchy(0.3), rng)
    G = Transform.exp_sq(2)
    z = ZDistribution.gaussian()
    x = volatility_field(y, G, z, rng).values
    assert abs(np.mean(x > 0) - 0.5) < 3 / (2 * math.sqrt(N))
    # exceedance indicators are dependent through Y, so the binomial standard error is only a guide
    p = marginal_tail(G, z, 1.0)
    se = math.sqrt(p * (1 - p) / N)
    assert abs(np.mean(x > 1.0) - p) < 3 * se * 3


def test_marginal_tail_values():
    assert marginal_tail(Transform.identity(), None, 0.0) == 0.5
    assert marginal_tail(Transform.exp_sq(2), None, math.exp(0.25)) == pytest.approx(0.3173105, abs=1e-7)
    assert marginal_tail(Transform.exp_sq(2), ZDistribution.gaussian(), 0.0) == pytest.approx(0.5, abs=1e-12)


# -- excursion sets ------------------------------------------------------


def test_volume_extremes_and_concentration():
    y = simulate_gaussian_1d(1 << 14, CovarianceModel.white_noise(), RngSpec(7))
    assert excursion_volume(y, y.values.min() - 1) == y.n
    assert excursion_volume(y, y.values.max() + 1) == 0
    assert abs(excursion_volume(y, 0.0) / y.n - 0.5) < 3 / (2 * 2**7)
    flat = FieldSample(np.zeros(64), 64, 1, None, None, None)
    assert excursion_volume(flat, 1.0) == 0


@pytest.mark.parametrize("eta", [0.3, 0.8])
def test_volatility_at_zero_has_bernoulli_variance(eta):
    cfg = ExperimentConfig(command="clt", eta=eta, transform_name="abs_exp_sq", alpha=2.0,
                           z_family="symmetric_pareto", z_alpha=1.5, levels=(0.0,),
                           n_values=(256, 512, 1024, 2048), replicates=300, seed=11)
    var = mc_ensemble(cfg).levels[0].variance[-1]
    assert var == pytest.approx(0.25, rel=0.2)


def test_variance_growth_by_regime():
    grows = mc_ensemble(ExperimentConfig(command="clt", eta=0.4, levels=(1.0,),
                                         n_values=(256, 512, 1024, 2048), replicates=150, seed=12))
    v = grows.levels[0].variance  # already divided by n
    assert v[-1] > 2 * v[0]
    square = Transform(EVEN_COMPOSED, lambda y: np.asarray(y) ** 2, "square")
    assert classify_subordinated(square, CovarianceModel.cauchy(1.5), FiniteMeasure.dirac(1.0)).verdict == SRD
    cfg = ExperimentConfig(command="clt", eta=1.5, levels=(1.0,), n_values=(256, 512, 1024, 2048),
                           replicates=150, seed=12)
    model = cfg.build_model()
    counts = np.array([[np.count_nonzero(_simulate_x(cfg, model, square, None, 2048, i).values[:n] > 1.0)
                        for n in cfg.n_values] for i in range(150)])
    per_n = counts.var(axis=0, ddof=1) / np.array(cfg.n_values)
    assert per_n[-1] == pytest.approx(per_n[-2], rel=0.35)


def test_partial_sum_rerun_is_bit_exact():
    cfg = ExperimentConfig(command="partial-sum", eta=0.2, transform_name="exp_sq", alpha=1.5,
                           n_values=(256, 512, 1024, 2048), replicates=8, seed=77)
    a, b = partial_sum_scaling(cfg), partial_sum_scaling(cfg)
    assert a.report.exponent == b.report.exponent and a.quantiles == b.quantiles


def test_rank_values_for_conditional_exceedance():
    z = ZDistribution.symmetric_pareto(1.5)
    th = xi_and_rank(Transform.abs_exp_sq(2), z, 0.0, CovarianceModel.cauchy(0.3))
    assert th.xi_zero and th.predicted_exponent == 1 and th.sigma2 == pytest.approx(0.25)
    assert xi_and_rank(Transform.exp_sq(3), ZDistribution.gaussian(), 1.0).q == 2
    pos = Transform(MONOTONE_INCREASING, lambda y: np.exp(y), "exp")
    assert xi_and_rank(pos, None, 1.0).q == 1
    assert xi_and_rank(pos, ZDistribution.gaussian(), 1.0).q == 1


# -- report --------------------------------------------------------------


def test_report_shows_verdict_flip(tmp_path):
    text = ("command = classify\nexperiment.id = sweep\ntransform.name = exp_sq\ntransform.alpha = 2\n"
            "measure.dirac = 2\nsweep.eta = 0.1..1.0:0.1\n")
    cfg = tmp_path / "s.cfg"
    cfg.write_text(text)
    runs = tmp_path / "runs"
    assert cli.main(["classify", "--config", str(cfg), "--out", str(runs / "sweep.json")]) == 0
    buf = io.StringIO()
    cli.report(runs, stream=buf)
    table = dict(line.split() for line in buf.getvalue().splitlines()[2:12])
    assert table["0.4"] == "LRD" and table["0.5"] == "BOUNDARY" and table["0.6"] == "SRD"
