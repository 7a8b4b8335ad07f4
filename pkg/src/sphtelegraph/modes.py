"""Per-degree temporal propagators of the telegraph equation on the sphere.

A degree-``l`` coefficient obeys

    (1/c^2) b'' + (1/D) b' + l(l+1) k^2 b = 0,   b(0) = 1,  b'(0) = 0,

whose characteristic roots are ``-c^2/(2D) +/- K_l``. Degrees at or below the
crossover degree are overdamped (``cosh``/``sinh`` bracket ``A_l``), the rest
oscillate (``cos``/``sin`` bracket ``B_l``). The mode factor
``f_l(t) = exp(-c^2 t/(2D)) (A_l(t) + B_l(t))`` is ``b(t)/b(0)``.

All functions accept a scalar or integer array for ``l``.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "EvolutionFactors",
    "HYPERBOLIC",
    "OSCILLATORY",
    "crossover_degree",
    "rate",
    "a_factor",
    "b_factor",
    "mode_factor",
    "mode_factors",
    "evolution_factors",
    "mode_ode_oracle",
    "to_physical_time",
    "to_dimensionless_time",
]

HYPERBOLIC = "hyperbolic"
OSCILLATORY = "oscillatory"


@dataclass(frozen=True)
class ModelParams:
    """Constants of ``(1/c^2) u_tt + (1/D) u_t = k^2 Lap u``."""

    c: float
    D: float
    k: float

    def __post_init__(self):
        for name in ("c", "D", "k"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c!r}")
        if self.D <= 0:
            raise ValueError(f"D must be positive, got {self.D!r}")
        if self.k == 0:
            raise ValueError("k must be nonzero")

    @property
    def damping(self):
        """Attenuation rate ``c^2/(2D)``."""
        return self.c**2 / (2.0 * self.D)

    @property
    def crossover(self):
        return crossover_degree(self)


@dataclass(frozen=True)
class EvolutionFactors:
    l: int
    branch: str
    rate: float
    a_value: float
    b_value: float
    mode_factor: float


def crossover_degree(params):
    """Largest real degree ``l*`` still on the overdamped branch.

    ``l* = (sqrt(D^2 k^2 + c^2) - D|k|) / (2 D |k|)``; only ``k^2`` enters the
    equation so the sign of ``k`` is irrelevant.
    """
    c, D, k = params.c, params.D, abs(params.k)
    # rationalized form, no cancellation for small k
    return c * c / (2.0 * D * k * (math.hypot(D * k, c) + D * k))


def _rates(l, params):
    l = np.asarray(l)
    if np.any(l < 0):
        raise ValueError("degree must be nonnegative")
    lf = l.astype(float)
    c, D, k = params.c, params.D, params.k
    hyper = lf <= crossover_degree(params)
    # K^2 = c^2 (c^2/(4D^2) - l(l+1)k^2), c^2 factored out before subtracting
    inner = c * c / (4.0 * D * D) - lf * (lf + 1.0) * k * k
    rates = c * np.sqrt(np.abs(inner))
    rates = np.where(hyper & (inner < 0), 0.0, rates)
    rates = np.where(l == 0, params.damping, rates)
    return hyper, rates


def rate(l, params):
    """Return ``(branch, rate)``: ``K_l`` if hyperbolic, else ``K_l'``."""
    hyper, r = _rates(int(l), params)
    return (HYPERBOLIC if hyper else OSCILLATORY), float(r)


def _sinhc_scaled(z):
    # sinh(z)/z * exp(-z) for z >= 0, exact at z = 0
    z = np.asarray(z, dtype=float)
    safe = np.where(z > 0, z, 1.0)
    return np.where(z > 0, -np.expm1(-2.0 * safe) / (2.0 * safe), 1.0)


def _hyper_bracket_scaled(z, a_t):
    """``exp(-z) * (cosh z + a t sinh(z)/z)`` for ``z = K t >= 0``."""
    return 0.5 * (1.0 + np.exp(-2.0 * z)) + a_t * _sinhc_scaled(z)


def _osc_bracket(z, a_t):
    """``cos z + a t sin(z)/z``; finite as ``K' -> 0``."""
    return np.cos(z) + a_t * np.sinc(z / math.pi)


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(~np.isfinite(t)):
        raise ValueError("time must be finite and nonnegative")
    return t


def evolution_factors(l, t, params):
    """Vectorized ``(A_l(t), B_l(t), f_l(t))`` for degree array ``l``.

    ``A`` may overflow to ``inf`` at large times because it grows like
    ``exp(c^2 t/(2D))``; ``f`` is evaluated in scaled form and never does.
    """
    t = _check_time(t)
    hyper, r = _rates(l, params)
    a = params.damping
    z = r * t
    a_t = a * t
    # each branch only sees its own arguments so the discarded one cannot overflow
    z_h = np.where(hyper, z, 0.0)
    z_o = np.where(hyper, 0.0, z)
    hyper_scaled = _hyper_bracket_scaled(z_h, a_t)
    osc = _osc_bracket(z_o, a_t)
    with np.errstate(over="ignore"):
        A = np.where(hyper, np.exp(z_h) * hyper_scaled, 0.0)
    B = np.where(hyper, 0.0, osc)
    f = np.where(hyper, np.exp(z_h - a_t) * hyper_scaled, np.exp(-a_t) * osc)
    # constant mode is conserved exactly
    f = np.where(np.asarray(l) == 0, 1.0, f)
    return A, B, f


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def a_factor(l, t, params):
    """Overdamped bracket ``A_l(t)`` (zero on the oscillatory branch)."""
    return _scalar(evolution_factors(l, t, params)[0])


def b_factor(l, t, params):
    """Oscillatory bracket ``B_l(t)`` (zero on the overdamped branch)."""
    return _scalar(evolution_factors(l, t, params)[1])


def mode_factor(l, t, params):
    """``f_l(t)``; ``f_l(0) = 1`` and ``f_0(t) = 1`` exactly."""
    return _scalar(evolution_factors(l, t, params)[2])


def mode_factors(lmax, t, params):
    """``f_0(t) .. f_lmax(t)`` as an array."""
    return evolution_factors(np.arange(int(lmax) + 1), t, params)[2]


def factors(l, t, params):
    """All per-degree quantities for one ``(l, t)`` as an :class:`EvolutionFactors`."""
    branch, r = rate(l, params)
    A, B, f = evolution_factors(int(l), t, params)
    return EvolutionFactors(int(l), branch, r, float(A), float(B), float(f))


def mode_ode_oracle(l, t, params, steps):
    """Integrate the per-degree ODE with classical RK4 and return ``b(t)/b(0)``.

    Independent of the closed form; used to verify it. ``l`` may be an
    array, in which case all degrees are advanced together. Raises
    ``ValueError`` if the step ``h = t/steps`` is too coarse, i.e.
    ``h * max(c^2/D, c |k| sqrt(l(l+1))) >= 0.1``.
    """
    steps = int(steps)
    if steps <= 0:
        raise ValueError("steps must be a positive integer")
    t = float(t)
    if t < 0:
        raise ValueError("time must be nonnegative")
    c2, D = params.c**2, params.D
    lf = np.asarray(l, dtype=float)
    stiffness = lf * (lf + 1.0) * params.k**2
    h = t / steps
    scale = max(c2 / D, params.c * abs(params.k) * math.sqrt(float(np.max(lf * (lf + 1.0)))))
    if h * scale >= 0.1:
        raise ValueError(
            f"step size {h:g} too large: h*max(c^2/D, c|k|sqrt(l(l+1))) = {h * scale:g} >= 0.1"
        )

    def accel(b, v):
        return -c2 * (v / D + stiffness * b)

    b = np.ones_like(lf)
    v = np.zeros_like(lf)
    for _ in range(steps):
        k1b, k1v = v, accel(b, v)
        k2b, k2v = v + 0.5 * h * k1v, accel(b + 0.5 * h * k1b, v + 0.5 * h * k1v)
        k3b, k3v = v + 0.5 * h * k2v, accel(b + 0.5 * h * k2b, v + 0.5 * h * k2v)
        k4b, k4v = v + h * k3v, accel(b + h * k3b, v + h * k3v)
        b = b + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return _scalar(b)


def to_physical_time(t_prime, params):
    """Convert dimensionless ``t' = c^2 t/(2D)`` to physical time."""
    return np.asarray(t_prime, dtype=float) / params.damping


def to_dimensionless_time(t, params):
    return np.asarray(t, dtype=float) * params.damping
