"""Gaussian isotropic random fields on the sphere and their evolution.

Coefficients are stored for ``m >= 0`` only, packed degree-major at index
``l(l+1)/2 + m``; negative orders follow from ``a_{l,-m} = (-1)^m conj(a_lm)``.

Sampling uses a Philox generator keyed by the seed. The draw order is the
packed index, two standard normals per ``(l, m)``, so the stream position of
every coefficient is fixed and a field sampled to ``lmax`` is a prefix of
the same field sampled to any larger ``lmax``.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .legendre import legendre_table, normalized_legendre_rows
from .modes import evolution_factors, mode_factors
from .spectrum import AngularSpectrum

__all__ = [
    "HarmonicCoefficients",
    "SphereGrid",
    "ResolutionError",
    "packed_index",
    "sample_coefficients",
    "evolve_coefficients",
    "synthesize",
    "analyze",
    "green_function",
    "green_function_series",
    "read_coefficients",
    "write_coefficients",
]

# tolerance on the imaginary part of a synthesized (real) field
IMAG_TOL = 1e-9


class ResolutionError(ValueError):
    """Grid too coarse to integrate the requested band limit exactly."""


def packed_index(l, m):
    return l * (l + 1) // 2 + m


def _n_packed(lmax):
    return (lmax + 1) * (lmax + 2) // 2


def _packed_lm(lmax):
    ls = np.repeat(np.arange(lmax + 1), np.arange(1, lmax + 2))
    ms = np.concatenate([np.arange(l + 1) for l in range(lmax + 1)])
    return ls, ms


class HarmonicCoefficients:
    """Immutable triangular set of complex coefficients ``a_lm``, ``m >= 0``."""

    def __init__(self, lmax, data):
        lmax = int(lmax)
        if lmax < 0:
            raise ValueError("lmax must be nonnegative")
        data = np.array(data, dtype=complex)
        if data.shape != (_n_packed(lmax),):
            raise ValueError(f"expected {_n_packed(lmax)} packed coefficients, got {data.shape}")
        zonal = data[packed_index(np.arange(lmax + 1), 0)]
        if np.any(np.abs(zonal.imag) > IMAG_TOL * np.maximum(1.0, np.abs(zonal.real))):
            raise ValueError("m = 0 coefficients of a real field must be real")
        data[packed_index(np.arange(lmax + 1), 0)] = zonal.real
        data.setflags(write=False)
        self.lmax = lmax
        self.data = data

    @classmethod
    def zeros(cls, lmax):
        return cls(lmax, np.zeros(_n_packed(lmax), dtype=complex))

    @classmethod
    def from_dict(cls, lmax, entries):
        """Build from ``{(l, m): value}``; negative ``m`` entries are folded in."""
        data = np.zeros(_n_packed(lmax), dtype=complex)
        for (l, m), v in entries.items():
            if m < 0:
                v, m = (-1) ** m * np.conj(v), -m
            data[packed_index(l, m)] = v
        return cls(lmax, data)

    def __getitem__(self, lm):
        l, m = lm
        if not 0 <= l <= self.lmax or abs(m) > l:
            raise IndexError(f"(l, m) = {lm} outside lmax={self.lmax}")
        v = self.data[packed_index(l, abs(m))]
        if m < 0:
            v = (-1) ** m * np.conj(v)
        return complex(v)

    def __eq__(self, other):
        return (
            isinstance(other, HarmonicCoefficients)
            and self.lmax == other.lmax
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"HarmonicCoefficients(lmax={self.lmax})"

    def __mul__(self, alpha):
        return HarmonicCoefficients(self.lmax, self.data * float(alpha))

    __rmul__ = __mul__

    def degrees(self):
        """Degree of each packed entry."""
        return _packed_lm(self.lmax)[0]

    def scale_degrees(self, factors):
        """Multiply every degree-``l`` coefficient by real ``factors[l]``."""
        factors = np.asarray(factors, dtype=float)
        return HarmonicCoefficients(self.lmax, self.data * factors[self.degrees()])

    def truncated(self, L):
        """Keep degrees ``l < L``."""
        lmax = min(int(L) - 1, self.lmax)
        if lmax < 0:
            raise ValueError("truncation must keep at least degree 0")
        return HarmonicCoefficients(lmax, self.data[: _n_packed(lmax)])

    def rows(self):
        """List of per-degree arrays ``a_l0 .. a_ll``."""
        return [self.data[packed_index(l, 0) : packed_index(l, l) + 1] for l in range(self.lmax + 1)]

    def power(self):
        """Empirical spectrum ``(2l+1)^-1 sum_m |a_lm|^2``."""
        out = np.zeros(self.lmax + 1)
        for l, row in enumerate(self.rows()):
            out[l] = (abs(row[0]) ** 2 + 2.0 * np.sum(np.abs(row[1:]) ** 2)) / (2 * l + 1)
        return out


@dataclass(frozen=True)
class SphereGrid:
    """Evaluation points on the sphere.

    ``layout`` is ``"equal-angle"`` or ``"gauss-legendre"`` (separable rings
    ``theta`` x uniform ``phi``) or ``"explicit"`` (paired ``theta[i]``,
    ``phi[i]``). ``weights`` holds the Gauss weights in ``cos theta`` for
    the Gauss-Legendre layout.
    """

    layout: str
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        if self.layout not in ("equal-angle", "gauss-legendre", "explicit"):
            raise ValueError(f"unknown grid layout {self.layout!r}")
        th = np.asarray(self.theta, dtype=float)
        ph = np.asarray(self.phi, dtype=float)
        if np.any(th < 0) or np.any(th > math.pi) or np.any(ph < 0) or np.any(ph >= 2 * math.pi):
            raise ValueError("grid angles out of range: theta in [0, pi], phi in [0, 2 pi)")
        if self.layout == "explicit" and th.shape != ph.shape:
            raise ValueError("explicit grids need matching theta and phi arrays")

    @classmethod
    def equal_angle(cls, ntheta, nphi):
        """Ring centres ``theta_i = (i + 1/2) pi / ntheta``, ``phi_j = 2 pi j / nphi``."""
        theta = (np.arange(ntheta) + 0.5) * math.pi / ntheta
        return cls("equal-angle", theta, 2 * math.pi * np.arange(nphi) / nphi)

    @classmethod
    def gauss_legendre(cls, ntheta, nphi):
        x, w = np.polynomial.legendre.leggauss(ntheta)
        # north to south
        x, w = x[::-1], w[::-1]
        return cls("gauss-legendre", np.arccos(x), 2 * math.pi * np.arange(nphi) / nphi, w)

    @classmethod
    def explicit(cls, theta, phi):
        return cls("explicit", np.atleast_1d(np.asarray(theta, float)), np.atleast_1d(np.asarray(phi, float)))

    @property
    def separable(self):
        return self.layout != "explicit"

    @property
    def shape(self):
        if self.separable:
            return (len(self.theta), len(self.phi))
        return (len(self.theta),)

    @property
    def size(self):
        return int(np.prod(self.shape))


def _rng_for(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(key=seed))


def sample_coefficients(spectrum, seed, lmax=None):
    """Draw ``a_lm`` of a Gaussian isotropic field with angular spectrum ``spectrum``.

    ``a_l0 ~ N(0, C_l)``; for ``m > 0`` real and imaginary parts are
    independent ``N(0, C_l/2)``, so ``E|a_lm|^2 = C_l`` for every order.
    """
    cl = spectrum.values if isinstance(spectrum, AngularSpectrum) else np.asarray(spectrum, float)
    if lmax is None:
        lmax = cl.size - 1
    lmax = int(lmax)
    full = np.zeros(lmax + 1)
    n = min(lmax + 1, cl.size)
    full[:n] = cl[:n]

    z = _rng_for(seed).standard_normal((_n_packed(lmax), 2))
    ls, ms = _packed_lm(lmax)
    sigma = np.sqrt(full[ls])
    data = np.where(
        ms == 0,
        sigma * z[:, 0],
        sigma * math.sqrt(0.5) * (z[:, 0] + 1j * z[:, 1]),
    )
    return HarmonicCoefficients(lmax, data)


def evolve_coefficients(coeffs, t, params):
    """Coefficients of the solution at time ``t``: ``a_lm * f_l(t)``."""
    return coeffs.scale_degrees(mode_factors(coeffs.lmax, t, params))


def _ring_sums(coeffs, x):
    """``F[m, i] = sum_l a_lm N_lm(x_i)`` for ``m = 0 .. lmax``."""
    lmax = coeffs.lmax
    F = np.zeros((lmax + 1, x.size), dtype=complex)
    rows = coeffs.rows()
    for l, N in normalized_legendre_rows(lmax, x):
        F[: l + 1] += rows[l][:, None] * N
    return F


def _check_real(F0):
    resid = np.abs(F0.imag)
    if np.any(resid > IMAG_TOL * np.maximum(1.0, np.abs(F0.real))):
        raise ArithmeticError(f"synthesized field is not real (max |Im| = {resid.max():.3g})")


def synthesize(coeffs, grid):
    """Evaluate ``sum_{l <= lmax} sum_m a_lm Y_lm`` on ``grid``.

    Separable grids return an array of shape ``(ntheta, nphi)``, explicit
    grids one value per point. The ``m``-sum is folded as
    ``a_l0 N_l0 + 2 Re sum_{m>0} a_lm N_lm e^{i m phi}``.
    """
    if grid.size == 0:
        raise ValueError("cannot synthesize on an empty grid")
    x = np.cos(np.asarray(grid.theta, float))
    F = _ring_sums(coeffs, x)
    _check_real(F[0])
    weights = np.full(coeffs.lmax + 1, 2.0)
    weights[0] = 1.0
    C = F * weights[:, None]
    C[0] = C[0].real

    phi = np.asarray(grid.phi, float)
    if not grid.separable:
        m = np.arange(coeffs.lmax + 1)
        phase = np.exp(1j * np.outer(m, phi))
        return np.real(np.sum(C * phase, axis=0))

    nphi = phi.size
    uniform = np.allclose(phi, 2 * math.pi * np.arange(nphi) / nphi, rtol=0, atol=1e-12)
    if uniform:
        # fold orders onto the FFT grid, then a single inverse transform per ring
        H = np.zeros((x.size, nphi), dtype=complex)
        for m in range(coeffs.lmax + 1):
            H[:, m % nphi] += C[m]
        return np.real(np.fft.ifft(H, axis=1)) * nphi
    m = np.arange(coeffs.lmax + 1)
    phase = np.exp(1j * np.outer(m, phi))
    return np.real(C.T @ phase)


def analyze(field, grid, lmax):
    """Quadrature estimate of ``a_lm = int u conj(Y_lm) dsigma`` on a Gauss grid.

    Exact for fields band-limited to ``lmax`` when ``ntheta >= lmax + 1`` and
    ``nphi >= 2 lmax + 1``; otherwise :class:`ResolutionError`.
    """
    lmax = int(lmax)
    if grid.layout != "gauss-legendre":
        raise ResolutionError("analysis requires a gauss-legendre grid")
    ntheta, nphi = grid.shape
    if ntheta < lmax + 1 or nphi < 2 * lmax + 1:
        raise ResolutionError(
            f"grid {ntheta}x{nphi} too coarse for lmax={lmax}: "
            f"need ntheta >= {lmax + 1} and nphi >= {2 * lmax + 1}"
        )
    field = np.asarray(field, dtype=float)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    # G[i, m] = (2 pi / nphi) sum_j u_ij exp(-i m phi_j)
    G = np.fft.fft(field, axis=1)[:, : lmax + 1] * (2 * math.pi / nphi)
    Gw = G * np.asarray(grid.weights)[:, None]
    x = np.cos(np.asarray(grid.theta, float))
    data = np.zeros(_n_packed(lmax), dtype=complex)
    for l, N in normalized_legendre_rows(lmax, x):
        data[packed_index(l, 0) : packed_index(l, l) + 1] = np.einsum("mi,im->m", N, Gw[:, : l + 1])
    data[packed_index(np.arange(lmax + 1), 0)] = data[packed_index(np.arange(lmax + 1), 0)].real
    return HarmonicCoefficients(lmax, data)


def green_function_series(theta, t, L, params):
    """Per-degree terms ``Q_l(cos theta) f_l(t)``, shape ``(L,) + theta.shape``."""
    L = int(L)
    if L < 1:
        raise ValueError("truncation degree L must be at least 1")
    x = np.cos(np.asarray(theta, dtype=float))
    P = legendre_table(L - 1, np.clip(x, -1.0, 1.0))
    ls = np.arange(L)
    f = evolution_factors(ls, t, params)[2]
    q = (2 * ls + 1) / (4 * math.pi) * f
    return q.reshape((-1,) + (1,) * x.ndim) * P


def green_function(theta, t, L, params):
    """Truncated point-source solution ``sum_{l<L} Q_l(cos theta) f_l(t)``.

    At ``t = 0`` this is the truncated (Dirichlet-type) expansion of a delta
    at the pole; it oscillates and does not converge as ``L`` grows, and no
    smoothing is applied. For any ``t`` and ``L`` it integrates to one over
    the sphere.
    """
    out = green_function_series(theta, t, L, params).sum(axis=0)
    return out if np.ndim(out) else float(out)


def write_coefficients(coeffs, path_or_buf, comment=None):
    """Write ``l,m,re,im`` rows for ``m >= 0`` with 17 significant digits."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", encoding="utf-8", newline="\n") if own else path_or_buf
    try:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write("l,m,re,im\n")
        ls, ms = _packed_lm(coeffs.lmax)
        for l, m, v in zip(ls, ms, coeffs.data):
            fh.write(f"{l},{m},{v.real:.17g},{v.imag:.17g}\n")
    finally:
        if own:
            fh.close()


def read_coefficients(path_or_buf):
    """Inverse of :func:`write_coefficients`."""
    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = path_or_buf.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or [h.strip() for h in lines[0].split(",")] != ["l", "m", "re", "im"]:
        raise ValueError("coefficient file must start with header 'l,m,re,im'")
    entries = {}
    lmax = 0
    for row in csv.reader(io.StringIO("\n".join(lines[1:]))):
        l, m = int(row[0]), int(row[1])
        if m < 0 or m > l:
            raise ValueError(f"coefficient rows must have 0 <= m <= l, got ({l}, {m})")
        entries[(l, m)] = complex(float(row[2]), float(row[3]))
        lmax = max(lmax, l)
    return HarmonicCoefficients.from_dict(lmax, entries)
