import math

import numpy as np
import pytest
import scipy.stats

import torusfp as tf
from torusfp.errors import ValidationError
from torusfp.sampler import (
    box_probabilities,
    density_tv_quadrature,
    discrete_state_tv,
    normalized_series_distance,
)



def _normalized(fld):
    return tf.GridField(fld.lattice, fld.values / fld.norm(), is_real=fld.is_real)


def _uniform_state(lat):
    return tf.GridField(lat, np.full(lat.shape, 1 / math.sqrt(lat.size)), is_real=True)


# ---------------------------------------------------------------------------
# upsampling


def test_upsample_identity_at_M_equals_N(rng):
    lat = tf.make_lattice(1, 6, 1.0)
    psi = _normalized(tf.GridField(lat, rng.standard_normal(lat.shape), is_real=True))
    out = tf.upsample(psi, 6)
    assert np.abs(out.values - psi.values).max() <= 1e-12


def test_upsample_nyquist_band_limited(rng):
    # a function with max frequency <= N discretizes consistently on any
    # finer lattice, up to the node-count normalization
    l = 1.0
    for d in (1, 2):
        latN = tf.make_lattice(d, 4, l)
        latM = tf.make_lattice(d, 9, l, cap=None)

        def u(pts):
            phase = 2 * np.pi / l
            s = np.cos(phase * pts[..., 0]) + 0.3
            for j in range(1, d):
                s = s + 0.5 * np.sin(2 * phase * pts[..., j])
            return s + 2.0

        uN = _normalized(tf.discretize(u, latN))
        uM = _normalized(tf.discretize(u, latM))
        up = tf.upsample(uN, 9)
        assert np.abs(up.values - uM.values).max() <= 1e-10


def test_upsample_isometry_and_validation(rng):
    lat = tf.make_lattice(2, 3, 1.0)
    psi = _normalized(tf.GridField(lat, rng.standard_normal(lat.shape), is_real=True))
    out = tf.upsample(psi, 8)
    assert abs(out.norm() - 1.0) <= 1e-12
    with pytest.raises(ValidationError):
        tf.upsample(psi, 2)
    with pytest.raises(ValidationError):
        tf.upsample(tf.GridField(lat, 2.0 * psi.values), 8)


# ---------------------------------------------------------------------------
# continuous sampling


def test_one_hot_state_samples_center_box():
    lat = tf.make_lattice(1, 4, 1.0)
    vals = np.zeros(lat.shape)
    vals[4] = 1.0  # node n = 0
    batch = tf.continuous_sample(tf.GridField(lat, vals, is_real=True), 500, seed=1)
    half_box = 1.0 / (2 * (2 * 4 + 1))
    assert np.abs(batch.points).max() <= half_box


def test_uniform_state_chi2_goodness_of_fit():
    lat = tf.make_lattice(1, 64, 1.0, cap=None)
    batch = tf.continuous_sample(_uniform_state(lat), 100_000, seed=42)
    counts, _ = np.histogram(batch.points[:, 0], bins=50, range=(-0.5, 0.5))
    expected = 100_000 / 50
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < scipy.stats.chi2.ppf(1 - 1e-3, 49)


def test_box_frequencies_match_multinomial(rng):
    lat = tf.make_lattice(1, 16, 1.0)
    vals = rng.random(lat.shape) + 0.2
    psi = _normalized(tf.GridField(lat, vals, is_real=True))
    n = 100_000
    batch = tf.continuous_sample(psi, n, seed=123)
    p = box_probabilities(psi)
    idx = np.floor((batch.points[:, 0] + 0.5) * lat.points_per_axis).astype(int)
    counts = np.bincount(idx, minlength=lat.size)
    z = np.abs(counts - n * p) / np.sqrt(n * p * (1 - p))
    assert z.max() <= 4.0


def test_sampling_determinism():
    lat = tf.make_lattice(2, 4, 1.0)
    psi = _uniform_state(lat)
    b1 = tf.continuous_sample(psi, 1000, seed=77)
    b2 = tf.continuous_sample(psi, 1000, seed=77)
    assert np.array_equal(b1.points, b2.points)
    assert b1.to_csv() == b2.to_csv()
    b3 = tf.continuous_sample(psi, 1000, seed=78)
    assert not np.array_equal(b1.points, b3.points)


def test_sample_validation():
    lat = tf.make_lattice(1, 4, 1.0)
    with pytest.raises(ValidationError):
        tf.continuous_sample(_uniform_state(lat), 0, seed=1)
    with pytest.raises(ValidationError):
        tf.continuous_sample(tf.constant_field(lat, 1.0), 10, seed=1)  # not unit norm


def test_sampling_density_integrates_to_one(rng):
    lat = tf.make_lattice(2, 5, 1.0)
    psi = _normalized(tf.GridField(lat, rng.standard_normal(lat.shape), is_real=True))
    mu = box_probabilities(psi) * (lat.points_per_axis / lat.l) ** 2
    box_vol = (lat.l / lat.points_per_axis) ** 2
    assert abs(mu.sum() * box_vol - 1.0) <= 1e-12


# ---------------------------------------------------------------------------
# exact density and TV


def test_exact_gibbs_density_flat():
    oracle = tf.exact_gibbs_density(tf.zero_potential(1, 2.0))
    np.testing.assert_allclose(oracle.density(np.array([[0.3]])), 0.5, rtol=1e-12)


def test_exact_gibbs_density_beta_convention():
    # beta = 2 on E equals beta = 1 on the doubled potential
    E = tf.cosine_potential(1.0, 1, 1.0)
    E2 = tf.cosine_potential(2.0, 1, 1.0)
    hot = tf.exact_gibbs_density(E, beta=2.0)
    ref = tf.exact_gibbs_density(E2)
    xs = np.linspace(-0.5, 0.5, 17)[:, None]
    np.testing.assert_allclose(hot.density(xs), ref.density(xs), rtol=1e-12)


def test_exact_gibbs_density_bessel_normalizer():
    # Z = 2 pi e^{-2} I_0(2) for E = 2(1 - cos x) on l = 2 pi
    E = tf.cosine_potential(2.0, 1, 2 * np.pi)
    oracle = tf.exact_gibbs_density(E)
    exact_Z = 2 * math.pi * math.exp(-2) * tf.bessel_i(0, 2.0)
    assert abs(oracle.Z - exact_Z) <= 1e-10 * exact_Z
    masses = oracle.cell_masses(M=32)
    assert abs(masses.sum() - 1.0) <= 1e-10


def test_tv_discretized_gibbs_state():
    # |(e^{-E/2})_M> at M=256 lands within 0.01 of the Gibbs density
    E = tf.cosine_potential(2.0, 1, 2 * np.pi)
    lat = tf.make_lattice(1, 256, 2 * np.pi, cap=None)
    fld = tf.discretize(lambda p: np.exp(-E.evaluate(p) / 2), lat)
    rep = tf.tv_distance(_normalized(fld), E)
    assert rep.method == "quadrature"
    assert rep.tv <= 0.01


def test_tv_orthogonal_supports():
    lat = tf.make_lattice(1, 8, 1.0)
    left = np.zeros(lat.shape)
    left[: lat.N] = 1.0

    def right_density(pts):
        return np.where(pts[..., 0] > 0, 1.0, 0.0)

    psi = _normalized(tf.GridField(lat, left, is_real=True))
    tv = density_tv_quadrature(psi, right_density)
    assert tv >= 1 - 1e-9


def test_tv_chain_bound_random_pairs(rng):
    lat = tf.make_lattice(1, 12, 1.0)
    for _ in range(10):
        psi = _normalized(tf.GridField(lat, rng.standard_normal(lat.shape), is_real=True))
        phi = _normalized(tf.GridField(lat, rng.standard_normal(lat.shape), is_real=True))
        tv = discrete_state_tv(psi, phi)
        assert tv <= np.linalg.norm(psi.flat - phi.flat) + 1e-10


def test_tv_quadrature_resolution_cap():
    lat = tf.make_lattice(2, 64, 1.0, cap=None)
    psi = _uniform_state(lat)
    with pytest.raises(tf.SizeError):
        density_tv_quadrature(psi, lambda p: np.ones(p.shape[0]), subcells=512)


def test_tv_monte_carlo_d3():
    lat = tf.make_lattice(3, 4, 1.0, cap=None)
    rep = tf.tv_distance(_uniform_state(lat), tf.zero_potential(3, 1.0))
    assert rep.method == "histogram"
    assert rep.tv <= 1e-9
    assert rep.ci_99 is not None


def test_born_rule_convention():
    # squared amplitudes of the evolved W = E/2 state target e^{-E}
    E = tf.cosine_potential(2.0, 1, 1.0)
    lat = tf.make_lattice(1, 16, 1.0)
    op = tf.build_generator(E, lat)
    res = tf.evolve(op, tf.constant_field(lat), T=2.0, snapshots=2)
    psi = _normalized(tf.GridField(lat, res.final.reshape(lat.shape), is_real=True))
    p = box_probabilities(psi)
    target = np.exp(-E.evaluate(lat.points()))
    target /= target.sum()
    assert np.abs(p - target.reshape(lat.shape)).max() <= 1e-8
    wrong = np.exp(-E.evaluate(lat.points()) / 2)
    wrong /= wrong.sum()
    assert np.abs(p - wrong.reshape(lat.shape)).max() > 1e-2


def test_lem_T_chain_along_trajectory():
    # chi-square closeness at level delta forces TV(u^2, rho_s^2) <= 2 delta e^{D/2}
    E = tf.cosine_potential(1.0, 1, 1.0)
    lat = tf.make_lattice(1, 16, 1.0)
    op = tf.build_generator(E, lat)
    res = tf.evolve(op, tf.constant_field(lat), T=2.0 / op.spectral_gap, snapshots=12, chi2=True)
    rho = tf.GridField(lat, op.stationary.reshape(lat.shape), is_real=True)
    for i in range(len(res.times)):
        delta = math.sqrt(res.chi2[i] / res.chi2[0]) if res.chi2[0] > 0 else 0.0
        state = _normalized(tf.GridField(lat, res.states[i].reshape(lat.shape), is_real=True))
        tv = discrete_state_tv(state, _normalized(rho))
        assert tv <= 2 * delta * math.exp(op.delta_W / 2) + 1e-6


# ---------------------------------------------------------------------------
# M selection and the pipeline


def test_choose_M_examples():
    assert tf.choose_M(0.1, 1.0, 1.0, 1, 1.0, 1.0, 1.0) == 2579
    assert tf.choose_M(0.99, 0.0, 1.0, 1, 1e-9, 1e-9, 1.0) == 1  # floor
    base = tf.choose_M(0.2, 1.0, 1.0, 1, 1.0, 1.0, 1.0)
    assert tf.choose_M(0.1, 1.0, 1.0, 1, 1.0, 1.0, 1.0) in (2 * base - 1, 2 * base, 2 * base + 1)
    with pytest.raises(ValidationError):
        tf.choose_M(1.2, 1.0, 1.0, 1, 1.0, 1.0, 1.0)


def test_pipeline_flat_potential():
    result = tf.run_pipeline(tf.zero_potential(1, 1.0), N=8, M=64, T=0.5, count=500, seed=5)
    assert result.tv_report.tv <= 0.01
    assert result.resolved["M"] == 64


def test_pipeline_d3_uses_monte_carlo_tv():
    E = tf.cosine_potential(0.5, 3, 1.0)
    result = tf.run_pipeline(E, N=3, M=6, T=0.2, eps=0.3, count=1000, seed=2)
    assert result.tv_report.method == "histogram"
    assert result.tv_report.ci_99 is not None
    assert result.tv_report.tv <= 0.3
    assert result.batch.points.shape == (1000, 3)


def test_pipeline_auto_resolution():
    E = tf.cosine_potential(2.0, 1, 1.0)
    result = tf.run_pipeline(E, N=16, eps=0.05, count=2000, seed=7)
    assert result.resolved["T_mode"] == "auto"
    assert result.resolved["M_mode"] == "auto"
    assert result.resolved["M"] <= 512
    assert result.tv_report.tv <= 0.05
    assert result.batch.count == 2000
    with pytest.raises(ValidationError):
        tf.run_pipeline(E, N=16, M=8, count=10, seed=0)


# ---------------------------------------------------------------------------
# means


def test_mean_of_constant():
    lat = tf.make_lattice(1, 8, 1.0)
    batch = tf.continuous_sample(_uniform_state(lat), 200, seed=9)
    est = tf.estimate_mean(lambda p: np.full(p.shape[0], 2.5), batch)
    assert est.mean == pytest.approx(2.5)
    assert est.stderr == 0.0


def test_exact_mean_bessel_ratio():
    E = tf.cosine_potential(2.0, 1, 1.0)
    got = tf.exact_mean(lambda p: np.cos(2 * np.pi * p[..., 0]), E)
    assert got == pytest.approx(tf.bessel_i(1, 2.0) / tf.bessel_i(0, 2.0), abs=1e-12)
    np.testing.assert_allclose(got, 0.69777, atol=1e-5)


def test_mean_clt_scaling():
    lat = tf.make_lattice(1, 32, 1.0, cap=None)
    psi = _uniform_state(lat)
    f = lambda p: np.cos(2 * np.pi * p[..., 0])
    small = tf.estimate_mean(f, tf.continuous_sample(psi, 20_000, seed=3))
    large = tf.estimate_mean(f, tf.continuous_sample(psi, 80_000, seed=3))
    ratio = large.stderr / small.stderr
    assert 0.4 <= ratio <= 0.6


# ---------------------------------------------------------------------------
# interpolation error bound check


def test_interpolation_check_band_limited():
    l = 1.0

    def u(p):
        return np.cos(2 * np.pi * p[..., 0] / l)

    def u_hat(k):
        return 0.5 if abs(k) == 1 else 0.0

    params = tf.SemiAnalyticityParams(C=1 / math.sqrt(2), a=1.0)
    rep = tf.interpolation_error_bound_check(u, u_hat, params, N=4, l=l, lipschitz=1.05 * 2 * math.pi)
    assert rep.measured_distance <= 1e-10
    assert rep.distance_ok


def test_interpolation_check_expcos_sweep():
    u, _, _, C, a, u_hat = tf.expcos_family(2.0, l=1.0)
    params = tf.SemiAnalyticityParams(C, a)
    lip = 1.05 * 4 * math.pi * math.exp(2)  # coarse bound on |u'|
    measured = []
    for N in (8, 12, 16, 24, 32, 40, 48):
        rep = tf.interpolation_error_bound_check(u, u_hat, params, N, 1.0, lip, k_max=80)
        assert rep.distance_ok
        assert rep.tv_ok
        measured.append((N, rep.measured_distance))
    pts = [(N, math.log(m)) for N, m in measured if m > 1e-13]
    slope = np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0]
    assert slope <= -0.6 / a + 0.05


def test_interpolation_check_precondition():
    u, _, _, C, a, u_hat = tf.expcos_family(2.0, l=1.0)
    with pytest.raises(tf.PreconditionError):
        tf.interpolation_error_bound_check(u, u_hat, tf.SemiAnalyticityParams(C, a), N=1, l=1.0, lipschitz=1.0)


def test_series_distance_matches_manual(rng):
    # independent accumulation of the same distance
    u, _, _, _, _, u_hat = tf.expcos_family(1.0, l=1.0)
    lat = tf.make_lattice(1, 5, 1.0)
    fld = tf.discretize(u, lat)
    state = _normalized(fld)
    got = normalized_series_distance(state, u_hat, k_max=50)
    coeffs = tf.dft(state).flat
    ks = np.arange(-50, 51)
    series = np.array([u_hat(int(k)) for k in ks])
    series = series / np.linalg.norm(series)
    manual = np.concatenate([coeffs - series[(ks >= -5) & (ks <= 5)], series[np.abs(ks) > 5]])
    assert got == pytest.approx(float(np.linalg.norm(manual)), rel=1e-12)
