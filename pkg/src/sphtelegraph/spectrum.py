"""Angular power spectra: container, CSV I/O, D_l <-> C_l conversion,
synthetic power laws and validation.

CSV layout::

    # optional comment lines
    l,Cl            (or l,Dl)
    0,1.0
    1,0.5

``D_l = l(l+1) C_l / (2 pi)``. Missing degrees are filled with zero and
reported through :mod:`warnings`.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import special

__all__ = [
    "AngularSpectrum",
    "SpectrumFormatError",
    "SpectrumReport",
    "load_spectrum",
    "save_spectrum",
    "power_law_spectrum",
    "power_law_tail_integral",
    "power_law_tail_exact",
    "validate_spectrum",
    "planck_like_spectrum",
    "bundled_spectrum_path",
]

DEFAULT_POWER_LAW_L0 = 4096


class SpectrumFormatError(ValueError):
    """Malformed spectrum file or an impossible unit conversion."""


class AngularSpectrum:
    """Nonnegative sequence ``C_0 .. C_{L0-1}`` (read-only)."""

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("spectrum must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrum values must be finite")
        if np.any(values < 0):
            bad = int(np.flatnonzero(values < 0)[0])
            raise ValueError(f"negative power C_{bad} = {values[bad]!r}")
        values.setflags(write=False)
        self._values = values

    @property
    def values(self):
        return self._values

    @property
    def size(self):
        """Number of stored degrees ``L0``."""
        return self._values.size

    @property
    def lmax(self):
        return self._values.size - 1

    @property
    def ells(self):
        return np.arange(self.size)

    def __len__(self):
        return self.size

    def __getitem__(self, l):
        return self._values[l]

    def __eq__(self, other):
        return isinstance(other, AngularSpectrum) and np.array_equal(self._values, other._values)

    def __repr__(self):
        return f"AngularSpectrum(lmax={self.lmax})"

    def truncated(self, L):
        """First ``L`` degrees (``C_0 .. C_{L-1}``), zero-padded if needed."""
        L = int(L)
        out = np.zeros(L)
        n = min(L, self.size)
        out[:n] = self._values[:n]
        return AngularSpectrum(out)

    def scaled_dl(self):
        """``D_l = l(l+1) C_l / (2 pi)``."""
        l = self.ells.astype(float)
        return l * (l + 1.0) * self._values / (2.0 * math.pi)

    @classmethod
    def from_dl(cls, dl):
        """Build from ``D_0 .. D_lmax``; ``D_0`` must be zero and maps to ``C_0 = 0``."""
        dl = np.asarray(dl, dtype=float)
        if dl.size and dl[0] != 0:
            raise SpectrumFormatError("D_l at l=0 cannot be converted: l(l+1) = 0")
        l = np.arange(dl.size, dtype=float)
        cl = np.zeros_like(dl)
        cl[1:] = 2.0 * math.pi * dl[1:] / (l[1:] * (l[1:] + 1.0))
        return cls(cl)


def _parse_rows(text, source):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise SpectrumFormatError(f"{source}: no header line")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) != 2 or header[0] != "l" or header[1].lower() not in ("cl", "dl"):
        raise SpectrumFormatError(
            f"{source}: header must be 'l,Cl' or 'l,Dl', got {lines[0].strip()!r}"
        )
    kind = "dl" if header[1].lower() == "dl" else "cl"
    ls, vals = [], []
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if len(row) != 2:
            raise SpectrumFormatError(f"{source}: row {lineno}: expected 2 fields, got {row!r}")
        try:
            lf = float(row[0])
            v = float(row[1])
        except ValueError as exc:
            raise SpectrumFormatError(f"{source}: row {lineno}: {exc}") from None
        if lf != int(lf) or lf < 0:
            raise SpectrumFormatError(f"{source}: row {lineno}: bad degree {row[0]!r}")
        if ls and int(lf) <= ls[-1]:
            raise SpectrumFormatError(f"{source}: row {lineno}: degrees must be strictly increasing")
        ls.append(int(lf))
        vals.append(v)
    if not ls:
        raise SpectrumFormatError(f"{source}: no data rows")
    return kind, np.array(ls), np.array(vals)


def load_spectrum(path, format=None):
    """Read a spectrum CSV and return it as ``C_l``.

    ``format`` ("cl" or "dl") is optional; when given it must agree with the
    file header. Degrees absent from the file get ``C_l = 0`` with a warning.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_spectrum(text, format=format, source=str(path))


def parse_spectrum(text, format=None, source="<string>"):
    kind, ls, vals = _parse_rows(text, source)
    if format is not None and format.lower() != kind:
        raise SpectrumFormatError(f"{source}: header declares {kind!r} but format={format!r}")
    if kind == "dl" and ls[0] == 0:
        raise SpectrumFormatError(f"{source}: D_l row at l=0 cannot be converted (l(l+1) = 0)")

    cl = np.zeros(ls[-1] + 1)
    if kind == "dl":
        lf = ls.astype(float)
        cl[ls] = 2.0 * math.pi * vals / (lf * (lf + 1.0))
    else:
        cl[ls] = vals
    missing = np.setdiff1d(np.arange(ls[-1] + 1), ls)
    if missing.size:
        warnings.warn(
            f"{source}: {missing.size} missing degree(s) set to zero "
            f"(first: {missing[:5].tolist()})",
            stacklevel=3,
        )
    if np.any(cl < 0):
        bad = int(np.flatnonzero(cl < 0)[0])
        raise SpectrumFormatError(f"{source}: negative power at l={bad}")
    return AngularSpectrum(cl)


def format_spectrum(spectrum, format="cl", comment=None):
    out = io.StringIO()
    if comment:
        for line in comment.splitlines():
            out.write(f"# {line}\n")
    if format.lower() == "dl":
        out.write("l,Dl\n")
        vals = spectrum.scaled_dl()
        start = 1
    else:
        out.write("l,Cl\n")
        vals = spectrum.values
        start = 0
    for l in range(start, spectrum.size):
        out.write(f"{l},{vals[l]:.17g}\n")
    return out.getvalue()


def save_spectrum(spectrum, path, format="cl", comment=None):
    """Write ``spectrum`` as CSV with 17 significant digits (lossless)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_spectrum(spectrum, format=format, comment=comment))


def power_law_spectrum(alpha, scale=1.0, l0=1, lmax=DEFAULT_POWER_LAW_L0 - 1):
    """``C_l = scale * l**-alpha`` for ``l >= max(1, l0)``, ``scale`` below.

    ``alpha`` must exceed 2, otherwise ``sum (2l+1) C_l`` diverges.
    """
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2 for a summable spectrum, got {alpha!r}")
    if scale <= 0:
        raise ValueError("scale must be positive")
    l0, lmax = int(l0), int(lmax)
    if l0 < 0 or lmax < l0:
        raise ValueError("need 0 <= l0 <= lmax")
    l = np.arange(lmax + 1, dtype=float)
    cl = np.full(lmax + 1, float(scale))
    tail = l >= max(1, l0)
    cl[tail] = scale * l[tail] ** (-alpha)
    return AngularSpectrum(cl)


def power_law_tail_integral(alpha, L, scale=1.0):
    """``int_L^inf (2x+1) scale x^-alpha dx``: integral estimate of the tail."""
    return scale * (2.0 * L ** (2.0 - alpha) / (alpha - 2.0) + L ** (1.0 - alpha) / (alpha - 1.0))


def power_law_tail_exact(alpha, L, scale=1.0):
    """``sum_{l>=L} (2l+1) scale l^-alpha`` via Hurwitz zeta, ``L >= 1``."""
    return scale * (2.0 * special.zeta(alpha - 1.0, L) + special.zeta(alpha, L))


@dataclass(frozen=True)
class SpectrumReport:
    lmax: int
    sum_2l1: float
    sum_2l1_cubed: float
    tail_exponent: float
    zero_degrees: int

    def lines(self):
        return [
            f"lmax                    {self.lmax}",
            f"sum (2l+1) C_l          {self.sum_2l1:.17g}",
            f"sum (2l+1)^3 C_l        {self.sum_2l1_cubed:.17g}",
            f"fitted tail exponent    {self.tail_exponent:.6g}",
            f"degrees with C_l = 0    {self.zero_degrees}",
        ]


def validate_spectrum(spectrum):
    """Summability report for ``spectrum``.

    Raises ``ValueError`` on negative entries. The tail exponent is the
    negated least-squares slope of ``log C_l`` against ``log l`` over the top
    decade of positive entries (NaN when fewer than three are available).
    """
    values = np.asarray(spectrum.values if isinstance(spectrum, AngularSpectrum) else spectrum, float)
    if np.any(values < 0):
        bad = int(np.flatnonzero(values < 0)[0])
        raise ValueError(f"not a power spectrum: C_{bad} = {values[bad]!r} < 0")
    l = np.arange(values.size, dtype=float)
    lmax = values.size - 1
    sel = (l >= max(1.0, lmax / 10.0)) & (values > 0)
    if np.count_nonzero(sel) >= 3:
        slope = np.polyfit(np.log(l[sel]), np.log(values[sel]), 1)[0]
        alpha_hat = float(-slope)
    else:
        alpha_hat = float("nan")
    return SpectrumReport(
        lmax=lmax,
        sum_2l1=float(np.sum((2 * l + 1) * values)),
        sum_2l1_cubed=float(np.sum((2 * l + 1) ** 3 * values)),
        tail_exponent=alpha_hat,
        zero_degrees=int(np.count_nonzero(values == 0)),
    )


# Acoustic-peak template in uK^2: (centre, width, height) of each bump.
_PEAKS = (
    (220.0, 85.0, 4600.0),
    (537.0, 80.0, 1500.0),
    (810.0, 85.0, 1750.0),
    (1130.0, 90.0, 850.0),
    (1425.0, 95.0, 560.0),
    (1720.0, 100.0, 300.0),
    (2020.0, 110.0, 160.0),
)


def planck_like_spectrum(lmax=2508):
    """Synthetic best-fit-like scaled spectrum, returned as ``C_l``.

    A smooth plateau with seven Gaussian acoustic bumps and an exponential
    damping tail. It imitates the shape of the published temperature
    spectrum (first peak near l=220, ~5.7e3 uK^2) for desk-scale runs and
    is not a fit to any data. ``C_0 = C_1 = 0``.
    """
    l = np.arange(lmax + 1, dtype=float)
    plateau = 1050.0 * (1.0 + 0.5 * np.exp(-((l - 60.0) / 120.0) ** 2))
    bumps = sum(h * np.exp(-0.5 * ((l - c) / w) ** 2) for c, w, h in _PEAKS)
    damping = np.exp(-((l / 1700.0) ** 1.6))
    dl = (plateau + bumps) * damping
    dl[:2] = 0.0
    return AngularSpectrum.from_dl(dl)


def bundled_spectrum_path():
    """Path of the packaged ``planck_like_dl.csv`` (``l,Dl`` for l = 2..2508)."""
    return resources.files("sphtelegraph").joinpath("data", "planck_like_dl.csv")
