"""Diffusion length of a point-source disturbance in flat 3-D space.

The density is the normalized heat kernel
``Q (4 pi D t)^(-3/2) exp(-r^2 / (4 D t))``. The level-set radius used for
the diffusion length is

    r(t) = 2 sqrt(D t) sqrt(ln(Q / (u (8 pi D t)^(3/2)))),

which peaks at ``t* = (Q/u)^(2/3) / (8 e pi D)`` with
``r_D = (1/2) sqrt(3/(pi e)) (Q/u)^(1/3) ~= 0.29636 (Q/u)^(1/3)``.
Note the level-set form carries ``(8 pi D t)^(3/2)``, not the kernel's
``(4 pi D t)^(3/2)``; only the former yields the 0.296 constant.
"""

import math

import numpy as np

__all__ = [
    "point_source_density",
    "level_set_radius",
    "level_set_radius_rate",
    "diffusion_length",
    "DIFFUSION_LENGTH_CONSTANT",
]

DIFFUSION_LENGTH_CONSTANT = 0.5 * math.sqrt(3.0 / (math.pi * math.e))


def _positive(name, v):
    if not np.all(np.asarray(v) > 0):
        raise ValueError(f"{name} must be positive")


def point_source_density(r, t, diffusivity, mass):
    """Heat-kernel density at radius ``r`` and time ``t`` from a point mass ``mass``."""
    _positive("t", t)
    _positive("diffusivity", diffusivity)
    _positive("mass", mass)
    r = np.asarray(r, dtype=float)
    out = mass * (4.0 * math.pi * diffusivity * t) ** -1.5 * np.exp(-(r * r) / (4.0 * diffusivity * t))
    return float(out) if out.ndim == 0 else out


def _log_arg(t, ratio, D):
    return math.log(ratio) - 1.5 * math.log(8.0 * math.pi * D * t)


def level_set_radius(t, ratio, D=1.0):
    """Radius of the level set at threshold ``u = Q/ratio``; zero once it has collapsed."""
    _positive("t", t)
    g = _log_arg(t, ratio, D)
    return 2.0 * math.sqrt(D * t) * math.sqrt(g) if g > 0 else 0.0


def level_set_radius_rate(t, ratio, D=1.0):
    """Closed-form ``dr/dt`` of :func:`level_set_radius` (where the level set exists)."""
    g = _log_arg(t, ratio, D)
    if g <= 0:
        raise ValueError("level set does not exist at this time")
    return math.sqrt(D / t) * (g - 1.5) / math.sqrt(g)


def diffusion_length(mass, threshold_density, D=1.0):
    """Return ``(r_D, t_star)``; ``r_D`` does not depend on ``D``."""
    _positive("mass", mass)
    _positive("threshold_density", threshold_density)
    _positive("D", D)
    ratio = mass / threshold_density
    t_star = ratio ** (2.0 / 3.0) / (8.0 * math.e * math.pi * D)
    r_d = DIFFUSION_LENGTH_CONSTANT * ratio ** (1.0 / 3.0)
    return r_d, t_star
