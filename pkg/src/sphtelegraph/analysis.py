"""Closed-form second-order analytics of the evolving field.

Every quantity here is a finite sum over the stored spectrum ``C_0 .. C_{L0-1}``.
Because the overdamped and oscillatory branches are disjoint,
``exp(-c^2 t/D) (A_l^2 + B_l^2) = f_l(t)^2`` and
``exp(-c^2 (t+t')/(2D)) (A_l(t) A_l(t') + B_l(t) B_l(t')) = f_l(t) f_l(t')``;
sums are evaluated through ``f_l``, which stays finite for any ``t``.
"""

import math

import numpy as np

from .field import SphereGrid, sample_coefficients, synthesize
from .legendre import legendre_table, normalized_legendre_rows
from .modes import crossover_degree, evolution_factors, mode_factors
from .spectrum import AngularSpectrum

__all__ = [
    "CrossoverError",
    "covariance",
    "variance",
    "evolved_spectrum",
    "truncation_error_exact",
    "truncation_constant",
    "truncation_bound",
    "chebyshev_tail_probability",
    "temporal_increment_norm",
    "spatial_increment_mse",
    "monte_carlo_covariance",
    "monte_carlo_seeds",
    "point_pair",
]

_INV_FOUR_PI = 1.0 / (4.0 * math.pi)
_INV_TWO_SQRT_PI = 1.0 / (2.0 * math.sqrt(math.pi))


class CrossoverError(ValueError):
    """Truncation degree does not exceed the crossover degree."""


def _cl(spectrum, L=None):
    cl = spectrum.values if isinstance(spectrum, AngularSpectrum) else np.asarray(spectrum, float)
    if L is not None:
        cl = cl[: max(0, int(L))]
    return cl


def _require_beyond_crossover(L, params):
    lstar = crossover_degree(params)
    if not L > lstar:
        raise CrossoverError(
            f"L={L} must exceed the crossover degree {lstar:.6g}; the explicit bound "
            "only covers purely oscillatory tails"
        )


def covariance(theta_distance, t, t_prime, spectrum, params, L=None):
    """``Cov(u(P, t), u(Q, t'))`` for points at angular distance ``theta_distance``.

    ``(4 pi)^-1 sum_{l<L} (2l+1) C_l P_l(cos Theta) f_l(t) f_l(t')``; the sum
    runs over the whole stored spectrum when ``L`` is None.
    """
    theta_distance = np.asarray(theta_distance, dtype=float)
    if np.any(theta_distance < 0) or np.any(theta_distance > math.pi):
        raise ValueError("angular distance must lie in [0, pi]")
    cl = _cl(spectrum, L)
    ls = np.arange(cl.size)
    f_t = evolution_factors(ls, t, params)[2]
    f_tp = evolution_factors(ls, t_prime, params)[2]
    # multiply the factors first so swapping t and t' is bitwise symmetric
    w = (2 * ls + 1) * cl * (f_t * f_tp)
    P = legendre_table(cl.size - 1, np.clip(np.cos(theta_distance), -1.0, 1.0))
    out = _INV_FOUR_PI * np.tensordot(w, P, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def variance(t, spectrum, params, L=None):
    """Pointwise variance ``(4 pi)^-1 sum (2l+1) C_l f_l(t)^2``."""
    cl = _cl(spectrum, L)
    f = mode_factors(cl.size - 1, t, params)
    return _INV_FOUR_PI * float(np.sum((2 * np.arange(cl.size) + 1) * cl * f * f))


def evolved_spectrum(spectrum, t, params):
    """Spectrum at time ``t``: ``C_l exp(-c^2 t/D) (A_l^2 + B_l^2) = C_l f_l(t)^2``."""
    cl = _cl(spectrum)
    f = mode_factors(cl.size - 1, t, params)
    return AngularSpectrum(cl * f * f)


def _tail_weighted(L, t, spectrum, params):
    cl = _cl(spectrum)
    L = int(L)
    if L < 1:
        raise ValueError("truncation degree L must be at least 1")
    if L >= cl.size:
        return 0.0
    ls = np.arange(L, cl.size)
    f = evolution_factors(ls, t, params)[2]
    return float(np.sum((2 * ls + 1) * cl[L:] * f * f))


def truncation_error_exact(L, t, spectrum, params):
    """Exact mean-square distance between ``u`` and its truncation ``u_L``.

    ``(2 sqrt(pi))^-1 exp(-c^2 t/(2D)) (sum_{L<=l<L0} (2l+1) C_l [A_l^2 + B_l^2])^(1/2)``.
    Valid for every ``L >= 1``, including ``L`` below the crossover degree.
    """
    return _INV_TWO_SQRT_PI * math.sqrt(_tail_weighted(L, t, spectrum, params))


def truncation_constant(L, params):
    """Explicit bound constant ``(2 sqrt(pi))^-1 sup_{l>=L} (1 + c^2/(2D K_l'))``.

    ``K_l'`` increases with ``l`` so the supremum sits at ``l = L``.
    """
    L = int(L)
    _require_beyond_crossover(L, params)
    c, D, k = params.c, params.D, params.k
    k_prime = c * math.sqrt(L * (L + 1) * k * k - c * c / (4 * D * D))
    return _INV_TWO_SQRT_PI * (1.0 + params.damping / k_prime)


def truncation_bound(L, t, spectrum, params):
    """Upper bound on :func:`truncation_error_exact` for ``L`` beyond the crossover.

    ``C(L) exp(-c^2 t/(2D)) (sum_{l>=L} (2l+1) C_l)^(1/2)`` with ``C(L)`` from
    :func:`truncation_constant`. Raises :class:`CrossoverError` otherwise.
    """
    L = int(L)
    const = truncation_constant(L, params)
    cl = _cl(spectrum)
    tail = float(np.sum((2 * np.arange(L, cl.size) + 1) * cl[L:])) if L < cl.size else 0.0
    return const * math.exp(-params.damping * t) * math.sqrt(tail)


def chebyshev_tail_probability(L, t, epsilon, spectrum, params):
    """Chebyshev bound on ``P(|u - u_L| >= epsilon)`` at any point.

    Exact pointwise tail variance divided by ``epsilon^2``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    _require_beyond_crossover(int(L), params)
    tail_var = _INV_FOUR_PI * _tail_weighted(L, t, spectrum, params)
    return tail_var / epsilon**2


def temporal_increment_norm(t, h, spectrum, params, L=None):
    """Exact mean-square norm of ``u(., t+h) - u(., t)``.

    ``(2 sqrt(pi))^-1 exp(-c^2 t/(2D)) (sum (2l+1) C_l [(e^{-c^2 h/(2D)} A_l(t+h) - A_l(t))^2
    + (same with B)^2])^(1/2)``, which equals
    ``(2 sqrt(pi))^-1 (sum (2l+1) C_l (f_l(t+h) - f_l(t))^2)^(1/2)``.
    """
    if not h > 0:
        raise ValueError("time step h must be positive")
    if t < 0:
        raise ValueError("time must be nonnegative")
    cl = _cl(spectrum, L)
    ls = np.arange(cl.size)
    df = evolution_factors(ls, t + h, params)[2] - evolution_factors(ls, t, params)[2]
    return _INV_TWO_SQRT_PI * math.sqrt(float(np.sum((2 * ls + 1) * cl * df * df)))


def spatial_increment_mse(theta_distance, t, gamma, spectrum, params, L=None):
    """Mean squared increment between two points at angular distance ``Theta``.

    Returns ``(exact, bound)`` with

        exact = 2 (4 pi)^-1 sum C_l (2l+1) f_l(t)^2 (1 - P_l(cos Theta))
        bound = 2 * 2 (4 pi)^-1 * E * sum C_l (2l+1)^(1+2 gamma) (1 - cos Theta)^gamma

    where ``E = sup_{l, s>=0} f_l(s)^2 = 1`` (zero initial velocity and
    nonnegative damping make the mode energy nonincreasing, so ``|f_l| <= 1``)
    and ``|1 - P_l(x)| <= 2 |1 - x|^gamma (l(l+1))^gamma <= 2 |1-x|^gamma (2l+1)^(2 gamma)``.
    """
    if not 0 <= theta_distance <= math.pi:
        raise ValueError("angular distance must lie in [0, pi]")
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    cl = _cl(spectrum, L)
    ls = np.arange(cl.size)
    f = mode_factors(cl.size - 1, t, params)
    x = math.cos(theta_distance)
    P = legendre_table(cl.size - 1, x)
    const = 2.0 * _INV_FOUR_PI
    exact = const * float(np.sum(cl * (2 * ls + 1) * f * f * (1.0 - P)))
    envelope = 1.0
    bound = (
        2.0
        * const
        * envelope
        * float(np.sum(cl * (2.0 * ls + 1.0) ** (1.0 + 2.0 * gamma)))
        * (1.0 - x) ** gamma
    )
    return max(exact, 0.0), bound


def point_pair(theta_distance):
    """Two fixed equatorial points ``(pi/2, 0)`` and ``(pi/2, Theta)``."""
    return (math.pi / 2, 0.0), (math.pi / 2, float(theta_distance))


def monte_carlo_seeds(seed, n):
    """Per-sample 64-bit seeds derived from one master seed."""
    return np.random.SeedSequence(int(seed)).generate_state(int(n), dtype=np.uint64)


def monte_carlo_covariance(theta_distance, t, t_prime, spectrum, params, n_samples, seed, L=None):
    """Simulation estimate of :func:`covariance`.

    Samples ``n_samples`` independent initial fields (degrees ``l < L``),
    evolves each to ``t`` and ``t'`` and averages ``u_t(P) u_t'(Q)`` over the
    pair from :func:`point_pair`. Returns ``(mean, standard_error)`` with the
    standard error from the sample standard deviation of the products.
    """
    n_samples = int(n_samples)
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    cl = _cl(spectrum, L)
    if not np.any(cl > 0):
        return 0.0, 0.0
    lmax = cl.size - 1
    f_t = mode_factors(lmax, t, params)
    f_tp = mode_factors(lmax, t_prime, params)
    (tp, pp), (tq, pq) = point_pair(theta_distance)

    # Y_lm at both points once; per-sample work is then a dot product
    YP = _harmonic_table(lmax, tp, pp)
    YQ = _harmonic_table(lmax, tq, pq)
    wts = np.where(_ms(lmax) == 0, 1.0, 2.0)
    degrees = _ls(lmax)
    products = np.empty(n_samples)
    for i, s in enumerate(monte_carlo_seeds(seed, n_samples)):
        a = sample_coefficients(cl, int(s)).data
        uP = np.sum(wts * (a * YP).real * f_t[degrees])
        uQ = np.sum(wts * (a * YQ).real * f_tp[degrees])
        products[i] = uP * uQ
    return float(products.mean()), float(products.std(ddof=1) / math.sqrt(n_samples))


def _ls(lmax):
    return np.repeat(np.arange(lmax + 1), np.arange(1, lmax + 2))


def _ms(lmax):
    return np.concatenate([np.arange(l + 1) for l in range(lmax + 1)])


def _harmonic_table(lmax, theta, phi):
    """Packed ``Y_lm(theta, phi)`` for ``m >= 0``."""
    x = np.array([math.cos(theta)])
    out = []
    for l, N in normalized_legendre_rows(lmax, x):
        out.append(N[:, 0] * np.exp(1j * np.arange(l + 1) * phi))
    return np.concatenate(out)


def monte_carlo_spatial_mse(theta_distance, t, spectrum, params, n_samples, seed, L=None):
    """Simulation estimate of the exact part of :func:`spatial_increment_mse`."""
    cl = _cl(spectrum, L)
    lmax = cl.size - 1
    f = mode_factors(lmax, t, params)
    (tp, pp), (tq, pq) = point_pair(theta_distance)
    diff = _harmonic_table(lmax, tp, pp) - _harmonic_table(lmax, tq, pq)
    wts = np.where(_ms(lmax) == 0, 1.0, 2.0)
    fd = f[_ls(lmax)]
    sq = np.empty(int(n_samples))
    for i, s in enumerate(monte_carlo_seeds(seed, n_samples)):
        a = sample_coefficients(cl, int(s)).data
        sq[i] = np.sum(wts * (a * diff).real * fd) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(sq.size))


def field_at_points(coeffs, theta, phi):
    """Convenience wrapper: synthesize on an explicit point list."""
    return synthesize(coeffs, SphereGrid.explicit(theta, phi))
