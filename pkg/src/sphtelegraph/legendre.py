"""Legendre polynomials, normalized associated Legendre functions and
complex spherical harmonics.

Conventions
-----------
``Y_lm(theta, phi) = N_lm(cos theta) * exp(i m phi)`` with

    N_lm(x) = d_lm * P_l^m(x),
    d_lm    = (-1)^m sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!),
    P_l^m(x) = (-1)^m (1-x^2)^(m/2) d^m/dx^m P_l(x).

Both factors carry a ``(-1)^m``, so for ``m >= 0`` the normalized function
is positive near the north pole (``N_11 = +sqrt(3/(8 pi)) sin theta``).
Negative orders follow ``N_{l,-m} = (-1)^m N_lm`` which gives
``conj(Y_lm) = (-1)^m Y_{l,-m}``.

The normalized functions are generated by a fully-normalized ascending
recurrence. Sectoral seeds ``N_mm ~ sin(theta)^m`` underflow long before
``l = 3000``, so mantissas are carried with a separate binary exponent and
only converted back to floats on output.
"""

import math

import numpy as np

__all__ = [
    "legendre_p",
    "legendre_table",
    "assoc_legendre_normalized",
    "normalized_legendre_rows",
    "y_lm",
    "zonal_kernel",
]

_FOUR_PI = 4.0 * math.pi
_Y00 = 1.0 / math.sqrt(_FOUR_PI)
# rescale carried mantissas once they pass 2**_RESCALE_BITS
_RESCALE_BITS = 256
_RESCALE_LIMIT = 2.0**_RESCALE_BITS


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(np.abs(x) > 1.0):
        raise ValueError("argument must lie in [-1, 1] (cosine of an angle)")
    return x


def _check_degree(l):
    if int(l) != l or l < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {l!r}")
    return int(l)


def legendre_table(lmax, x):
    """Return ``P_0(x) .. P_lmax(x)`` stacked along a new leading axis.

    Bonnet recurrence ``l P_l = (2l-1) x P_{l-1} - (l-1) P_{l-2}``.
    """
    lmax = _check_degree(lmax)
    x = _check_x(x)
    out = np.empty((lmax + 1,) + x.shape)
    out[0] = 1.0
    if lmax >= 1:
        out[1] = x
    for l in range(2, lmax + 1):
        out[l] = ((2 * l - 1) * x * out[l - 1] - (l - 1) * out[l - 2]) / l
    return out


def legendre_p(l, x):
    """Legendre polynomial ``P_l(x)`` for ``x`` in [-1, 1] (scalar or array)."""
    l = _check_degree(l)
    x = _check_x(x)
    p_prev = np.ones_like(x)
    if l == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for n in range(2, l + 1):
        p_prev, p = p, ((2 * n - 1) * x * p - (n - 1) * p_prev) / n
    return p if p.ndim else float(p)


def _recurrence_coeffs(l, m):
    # N_lm = a (x N_{l-1,m} - b N_{l-2,m})
    l = float(l)
    m = np.asarray(m, dtype=float)
    a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
    b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
    return a, b


def _sectoral(m, x):
    """Mantissa/exponent pair for ``N_mm(x)``."""
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    mant = np.full(x.shape, _Y00)
    expo = np.zeros(x.shape, dtype=np.int64)
    for k in range(1, m + 1):
        mant, e = np.frexp(mant * math.sqrt((2 * k + 1) / (2.0 * k)) * s)
        expo += e
    return mant, expo


def assoc_legendre_normalized(l, m, x):
    """Normalized associated Legendre function ``N_lm(x) = d_lm P_l^m(x)``.

    Accepts negative ``m`` via ``N_{l,-m} = (-1)^m N_lm``. ``x`` may be an
    array. Values stay finite for any degree; exponents that really fall
    below the double range flush to zero.
    """
    l = _check_degree(l)
    if int(m) != m or abs(m) > l:
        raise ValueError(f"order must satisfy |m| <= l, got l={l}, m={m}")
    m = int(m)
    x = _check_x(x)
    sign = -1.0 if (m < 0 and m % 2) else 1.0
    m = abs(m)

    mant, expo = _sectoral(m, x)
    if l == m:
        out = np.ldexp(mant, expo)
    else:
        prev, cur = mant, math.sqrt(2 * m + 3) * x * mant
        for n in range(m + 2, l + 1):
            a, b = _recurrence_coeffs(n, m)
            prev, cur = cur, a * (x * cur - b * prev)
            big = np.abs(cur) > _RESCALE_LIMIT
            if np.any(big):
                cur = np.where(big, np.ldexp(cur, -_RESCALE_BITS), cur)
                prev = np.where(big, np.ldexp(prev, -_RESCALE_BITS), prev)
                expo = expo + _RESCALE_BITS * big
        out = np.ldexp(cur, expo)
    out = sign * out
    return out if out.ndim else float(out)


def normalized_legendre_rows(lmax, x):
    """Yield ``(l, rows)`` for ``l = 0 .. lmax`` where ``rows[m] = N_lm(x)``.

    ``rows`` has shape ``(l + 1,) + x.shape``. All orders of one degree are
    advanced together, which is what synthesis and analysis consume.
    """
    lmax = _check_degree(lmax)
    x = _check_x(x)
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    shape = x.shape
    size = lmax + 1

    # mantissas of degrees l-1 and l-2, and one exponent per (m, point)
    p1 = np.zeros((size,) + shape)
    p2 = np.zeros((size,) + shape)
    expo = np.zeros((size,) + shape, dtype=np.int64)

    p1[0] = _Y00
    yield 0, np.full((1,) + shape, _Y00)
    if lmax == 0:
        return

    ms = np.arange(size, dtype=float)
    for l in range(1, lmax + 1):
        cur = np.empty((l + 1,) + shape)
        if l >= 2:
            m = ms[: l - 1]
            a, b = _recurrence_coeffs(l, m)
            a = a.reshape((-1,) + (1,) * len(shape))
            b = b.reshape((-1,) + (1,) * len(shape))
            cur[: l - 1] = a * (x * p1[: l - 1] - b * p2[: l - 1])
        cur[l - 1] = math.sqrt(2 * l + 1) * x * p1[l - 1]
        mant, e = np.frexp(math.sqrt((2 * l + 1) / (2.0 * l)) * s * p1[l - 1])
        cur[l] = mant
        expo[l] = expo[l - 1] + e

        big = np.abs(cur) > _RESCALE_LIMIT
        if np.any(big):
            cur = np.where(big, np.ldexp(cur, -_RESCALE_BITS), cur)
            p1[: l + 1] = np.where(big, np.ldexp(p1[: l + 1], -_RESCALE_BITS), p1[: l + 1])
            expo[: l + 1] += _RESCALE_BITS * big

        p2[: l + 1] = p1[: l + 1]
        p1[: l + 1] = cur
        yield l, np.ldexp(cur, expo[: l + 1])


def y_lm(l, m, theta, phi):
    """Complex spherical harmonic ``Y_lm(theta, phi)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(theta < 0) or np.any(theta > math.pi):
        raise ValueError("theta must lie in [0, pi]")
    val = assoc_legendre_normalized(l, m, np.cos(theta)) * np.exp(1j * m * phi)
    return val if np.ndim(val) else complex(val)


def zonal_kernel(l, cos_theta):
    """Degree-``l`` zonal kernel ``(2l+1)/(4 pi) P_l(cos theta)`` about the pole."""
    l = _check_degree(l)
    return (2 * l + 1) / _FOUR_PI * legendre_p(l, cos_theta)
