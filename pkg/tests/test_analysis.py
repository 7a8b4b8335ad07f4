import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphtelegraph.analysis import (
    CrossoverError,
    _harmonic_table,
    _ls,
    _ms,
    chebyshev_tail_probability,
    covariance,
    evolved_spectrum,
    monte_carlo_covariance,
    monte_carlo_spatial_mse,
    point_pair,
    spatial_increment_mse,
    temporal_increment_norm,
    truncation_bound,
    truncation_constant,
    truncation_error_exact,
    variance,
)
from sphtelegraph.field import sample_coefficients
from sphtelegraph.modes import ModelParams, crossover_degree, evolution_factors, mode_factors, to_physical_time
from sphtelegraph.spectrum import AngularSpectrum, bundled_spectrum_path, load_spectrum, power_law_spectrum

P01 = ModelParams(1.0, 1.0, 0.1)
P001 = ModelParams(1.0, 1.0, 0.01)
L4 = power_law_spectrum(4.0, lmax=4095)
L5 = power_law_spectrum(5.0, lmax=4095)


@pytest.fixture(scope="module")
def planck():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_spectrum(bundled_spectrum_path())


def mp_truncation_error(L, t, spec, p):
    """Brute-force extended-precision tail sum from the characteristic roots."""
    mp.mp.dps = 30
    c, D, k = (mp.mpf(v) for v in (p.c, p.D, p.k))
    a = c * c / (2 * D)
    total = mp.mpf(0)
    for l in range(L, spec.size):
        Kp = c * mp.sqrt(l * (l + 1) * k * k - c * c / (4 * D * D))
        B = mp.cos(Kp * t) + a / Kp * mp.sin(Kp * t)
        total += (2 * l + 1) * mp.mpf(spec[l]) * B * B
    return float(mp.exp(-a * t) * mp.sqrt(total) / (2 * mp.sqrt(mp.pi)))


def test_covariance_origin():
    spec = power_law_spectrum(3.0, lmax=50)
    expected = np.sum((2 * np.arange(51) + 1) * spec.values) / (4 * math.pi)
    assert covariance(0.0, 0.0, 0.0, spec, P01) == pytest.approx(expected, rel=1e-14)
    assert variance(0.0, spec, P01) == pytest.approx(expected, rel=1e-14)


def test_covariance_vectorized_theta():
    spec = power_law_spectrum(3.0, lmax=50)
    th = np.linspace(0, math.pi, 5)
    vec = covariance(th, 0.3, 0.7, spec, P01)
    for i, v in enumerate(th):
        assert vec[i] == pytest.approx(covariance(float(v), 0.3, 0.7, spec, P01))


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0, math.pi),
    st.floats(0, 20),
    st.floats(0, 20),
    st.floats(2.1, 6.0),
    st.sampled_from([P01, P001, ModelParams(2.0, 0.3, 0.5)]),
)
def test_covariance_symmetry_and_cauchy_schwarz(theta, t, tp, alpha, p):
    spec = power_law_spectrum(alpha, lmax=200)
    c1 = covariance(theta, t, tp, spec, p)
    assert c1 == covariance(theta, tp, t, spec, p)
    bound = math.sqrt(variance(t, spec, p) * variance(tp, spec, p))
    assert abs(c1) <= bound * (1 + 1e-12) + 1e-300
    assert variance(t, spec, p) >= 0


def test_evolved_spectrum_basics(planck):
    assert evolved_spectrum(planck, 0.0, P001) == planck
    spec = power_law_spectrum(3.0, lmax=30)
    for t in (0.5, 9.0):
        assert evolved_spectrum(spec, t, P01)[0] == spec[0]
    f = mode_factors(30, 2.0, P01)
    np.testing.assert_allclose(evolved_spectrum(spec, 2.0, P01).values, spec.values * f * f)


@pytest.mark.parametrize("tp,lmax", [(0.02, 2502), (0.04, 1902)])
def test_evolved_spectrum_deviation_grows_with_degree(planck, tp, lmax):
    # growth holds while K_l' t < pi/2; at t'=0.04 that is l < ~1960
    t = to_physical_time(tp, P001)
    mult = evolved_spectrum(AngularSpectrum(np.ones(planck.size)), t, P001).values
    dev = np.abs(1.0 - mult[2:lmax]).reshape(-1, 100).mean(axis=1)
    assert np.all(np.diff(dev) > 0)
    dl_dev = np.abs(planck.scaled_dl() - evolved_spectrum(planck, t, P001).scaled_dl())
    assert dl_dev[1000:1100].mean() > dl_dev[100:200].mean()


def test_truncation_error_empty_tail():
    spec = power_law_spectrum(4.0, lmax=99)
    assert truncation_error_exact(100, 1.0, spec, P01) == 0.0
    assert truncation_error_exact(500, 1.0, spec, P01) == 0.0


def test_truncation_error_monotone_in_degree():
    errs = [truncation_error_exact(L, 3.0, L4, P01) for L in range(1, 400)]
    assert np.all(np.diff(errs) <= 0)


def test_truncation_error_matches_brute_force():
    spec = power_law_spectrum(4.0, lmax=600)
    got = truncation_error_exact(32, 10.0, spec, P01)
    assert got == pytest.approx(mp_truncation_error(32, 10.0, spec, P01), rel=1e-12)


def test_truncation_error_below_crossover_finite():
    # overdamped tail terms are allowed in the exact error
    assert truncation_error_exact(2, 1.0, L4, P01) > truncation_error_exact(5, 1.0, L4, P01)


@pytest.mark.parametrize("p", [P01, P001])
@pytest.mark.parametrize("t", [0.0, 1.0, 20.0])
def test_bound_dominates_error(p, t):
    start = math.floor(crossover_degree(p)) + 1
    for L in list(range(start, start + 20)) + [200, 1000, 4000]:
        assert truncation_bound(L, t, L4, p) >= truncation_error_exact(L, t, L4, p)


def test_bound_rejects_crossover_region():
    with pytest.raises(CrossoverError):
        truncation_bound(4, 1.0, L4, P01)
    with pytest.raises(CrossoverError):
        truncation_constant(49, P001)
    assert truncation_constant(5, P01) == pytest.approx((1 + 0.5 / math.sqrt(0.05)) / (2 * math.sqrt(math.pi)))


def test_oscillatory_tail_decay_envelope():
    # the B-only tail times exp(c^2 t/(2D)) stays inside the constant of the bound
    L = 10
    ts = np.linspace(0, 50, 101)
    scaled = np.array([truncation_error_exact(L, t, L4, P01) * math.exp(P01.damping * t) for t in ts])
    cap = truncation_bound(L, 0.0, L4, P01)
    assert np.all(scaled <= cap * (1 + 1e-10))
    assert scaled.min() > 0.1 * scaled.max()


def test_chebyshev_scaling():
    b1 = chebyshev_tail_probability(10, 1.0, 0.01, L4, P01)
    b2 = chebyshev_tail_probability(10, 1.0, 0.02, L4, P01)
    assert b2 == pytest.approx(b1 / 4, rel=1e-14)
    assert chebyshev_tail_probability(10, 1.0, 1e12, L4, P01) < 1e-20
    with pytest.raises(ValueError):
        chebyshev_tail_probability(10, 1.0, 0.0, L4, P01)
    with pytest.raises(CrossoverError):
        chebyshev_tail_probability(3, 1.0, 0.1, L4, P01)


def test_chebyshev_monte_carlo_exceedance():
    spec = power_law_spectrum(4.0, lmax=60)
    L, t = 10, 1.0
    one = chebyshev_tail_probability(L, t, 1.0, spec, P01)
    eps = math.sqrt(one / 0.2)
    bound = chebyshev_tail_probability(L, t, eps, spec, P01)
    assert bound == pytest.approx(0.2)

    (th, ph), _ = point_pair(0.0)
    Y = _harmonic_table(60, th, ph)
    degrees = _ls(60)
    w = np.where(_ms(60) == 0, 1.0, 2.0) * (degrees >= L) * mode_factors(60, t, P01)[degrees]
    n = 10_000
    tail = np.array([np.sum(w * (sample_coefficients(spec, s).data * Y).real) for s in range(n)])
    # pointwise tail variance is the numerator of the bound
    assert np.var(tail) == pytest.approx(one, rel=0.05)
    assert np.mean(np.abs(tail) >= eps) <= bound


def test_temporal_increment_examples():
    mono = AngularSpectrum([2.0, 0.0, 0.0])
    assert temporal_increment_norm(1.0, 0.3, mono, P01) == 0.0
    norms = [temporal_increment_norm(1.0, h, L5, P01) for h in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert np.all(np.diff(norms) < 0) and norms[-1] < 1e-6
    with pytest.raises(ValueError):
        temporal_increment_norm(1.0, 0.0, L5, P01)


def test_temporal_increment_lipschitz():
    hs = np.logspace(-6, -2, 9)
    ratios = [temporal_increment_norm(1.0, h, L5, P01) / h for h in hs]
    assert max(ratios) < 2 * min(ratios)


def test_temporal_increment_matches_ab_form():
    spec = power_law_spectrum(5.0, lmax=40)
    t, h = 0.7, 0.05
    ls = np.arange(41)
    A0, B0, _ = evolution_factors(ls, t, P01)
    A1, B1, _ = evolution_factors(ls, t + h, P01)
    e = math.exp(-P01.damping * h)
    s = np.sum((2 * ls + 1) * spec.values * ((e * A1 - A0) ** 2 + (e * B1 - B0) ** 2))
    ref = math.exp(-P01.damping * t) * math.sqrt(s) / (2 * math.sqrt(math.pi))
    assert temporal_increment_norm(t, h, spec, P01) == pytest.approx(ref, rel=1e-12)


def test_spatial_increment_examples():
    assert spatial_increment_mse(0.0, 1.0, 0.5, L5, P01)[0] == 0.0
    with pytest.raises(ValueError):
        spatial_increment_mse(4.0, 1.0, 0.5, L5, P01)
    with pytest.raises(ValueError):
        spatial_increment_mse(1.0, 1.0, 1.5, L5, P01)


def test_spatial_increment_bound_random():
    rng = np.random.default_rng(7)
    spectra = [power_law_spectrum(a, lmax=500) for a in (4.5, 5.0, 6.0)]
    for _ in range(100):
        theta, gamma, t = rng.uniform(0, math.pi), rng.uniform(0, 1), rng.uniform(0, 5)
        spec = spectra[rng.integers(3)]
        exact, bound = spatial_increment_mse(theta, t, gamma, spec, P01)
        assert 0 <= exact <= bound


def test_spatial_increment_monte_carlo():
    spec = power_law_spectrum(5.0, lmax=60)
    exact, _ = spatial_increment_mse(0.5, 0.0, 0.5, spec, P01)
    mean, se = monte_carlo_spatial_mse(0.5, 0.0, spec, P01, 4000, seed=17)
    assert abs(mean - exact) <= 3 * se


def test_monte_carlo_covariance_basics():
    assert monte_carlo_covariance(0.3, 0, 0, AngularSpectrum(np.zeros(5)), P01, 200, 1) == (0.0, 0.0)
    with pytest.raises(ValueError):
        monte_carlo_covariance(0.3, 0, 0, L4, P01, 50, 1)
    spec = AngularSpectrum([0, 0, 1.0])
    mean, se = monte_carlo_covariance(0.0, 0.0, 0.0, spec, P01, 10_000, seed=5)
    assert abs(mean - 5 / (4 * math.pi)) <= 3 * se


def test_monte_carlo_covariance_deterministic():
    spec = power_law_spectrum(3.0, lmax=10)
    r1 = monte_carlo_covariance(0.5, 0.1, 0.2, spec, P01, 150, seed=3)
    assert r1 == monte_carlo_covariance(0.5, 0.1, 0.2, spec, P01, 150, seed=3)


def test_monte_carlo_covariance_calibration():
    spec = power_law_spectrum(3.0, lmax=4)
    exact = covariance(0.8, 0.5, 1.0, spec, P01)
    hits = 0
    for rep in range(100):
        mean, se = monte_carlo_covariance(0.8, 0.5, 1.0, spec, P01, 300, seed=1000 + rep)
        hits += abs(mean - exact) <= 3 * se
    assert hits >= 99
