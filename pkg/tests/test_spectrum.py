import math
import warnings

import mpmath as mp
import numpy as np
import pytest

from sphtelegraph.spectrum import (
    AngularSpectrum,
    SpectrumFormatError,
    bundled_spectrum_path,
    load_spectrum,
    parse_spectrum,
    planck_like_spectrum,
    power_law_spectrum,
    power_law_tail_exact,
    power_law_tail_integral,
    save_spectrum,
    validate_spectrum,
)


def write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_cl(tmp_path):
    spec = load_spectrum(write(tmp_path, "# comment\nl,Cl\n0,1\n1,0.5\n"))
    np.testing.assert_array_equal(spec.values, [1.0, 0.5])


def test_load_dl_converts(tmp_path):
    with pytest.warns(UserWarning, match="missing"):
        spec = load_spectrum(write(tmp_path, "l,Dl\n2,3.0\n"), format="dl")
    assert spec[0] == 0 and spec[1] == 0
    assert spec[2] == pytest.approx(2 * math.pi * 3.0 / 6)


def test_planck_style_start_warns(tmp_path):
    with pytest.warns(UserWarning, match=r"2 missing degree\(s\)"):
        spec = load_spectrum(bundled_spectrum_path())
    assert spec.values[0] == 0 and spec.values[1] == 0
    assert spec.lmax == 2508


def test_bundled_matches_generator():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = load_spectrum(bundled_spectrum_path(), format="dl")
    np.testing.assert_allclose(spec.values, planck_like_spectrum().values, rtol=1e-14)
    dl = spec.scaled_dl()
    assert 200 < np.argmax(dl) < 240


@pytest.mark.parametrize(
    "text,match",
    [
        ("l,Xl\n0,1\n", "header"),
        ("l,Cl\n", "no data"),
        ("l,Cl\n0,1\n0,2\n", "strictly increasing"),
        ("l,Cl\n0,abc\n", "row 2"),
        ("l,Cl\n0.5,1\n", "bad degree"),
        ("l,Cl\n0,-1\n", "negative"),
        ("l,Dl\n0,1\n1,2\n", "l=0"),
        ("", "no header"),
    ],
)
def test_malformed(text, match):
    with pytest.raises(SpectrumFormatError, match=match):
        parse_spectrum(text)


def test_format_mismatch():
    with pytest.raises(SpectrumFormatError):
        parse_spectrum("l,Cl\n0,1\n", format="dl")


def test_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        load_spectrum(tmp_path / "nope.csv")


@pytest.mark.parametrize("fmt", ["cl", "dl"])
def test_save_load_round_trip(tmp_path, fmt):
    spec = AngularSpectrum(np.r_[0.0, np.random.default_rng(3).random(50)])
    path = tmp_path / "out.csv"
    save_spectrum(spec, path, format=fmt, comment="round trip\nsecond line")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        back = load_spectrum(path, format=fmt)
    np.testing.assert_allclose(back.values, spec.values, rtol=1e-14, atol=0)
    if fmt == "cl":
        assert back == spec


def test_dl_cl_dl_identity():
    dl = np.r_[0.0, np.random.default_rng(1).random(200) * 1e3]
    np.testing.assert_allclose(AngularSpectrum.from_dl(dl).scaled_dl()[1:], dl[1:], rtol=1e-14)


def test_from_dl_rejects_monopole():
    with pytest.raises(SpectrumFormatError):
        AngularSpectrum.from_dl([1.0, 2.0])


def test_spectrum_is_read_only():
    spec = AngularSpectrum([1.0, 2.0])
    with pytest.raises(ValueError):
        spec.values[0] = 3.0
    with pytest.raises(ValueError):
        AngularSpectrum([1.0, -2.0])
    assert spec.truncated(4).values.tolist() == [1.0, 2.0, 0.0, 0.0]


def test_power_law():
    spec = power_law_spectrum(4.0, lmax=100)
    assert spec[0] == 1.0
    assert spec[10] == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        power_law_spectrum(2.0)
    with pytest.raises(ValueError):
        power_law_spectrum(3.0, scale=0.0)


def test_tail_sum_vs_integral():
    L = 32
    exact = power_law_tail_exact(4.0, L)
    mp.mp.dps = 30
    brute = mp.nsum(lambda l: (2 * l + 1) * l**-4, [L, mp.inf])
    assert exact == pytest.approx(float(brute), rel=1e-12)
    assert power_law_tail_integral(4.0, L) == pytest.approx(exact, rel=0.05)


def test_validate_reports():
    zero = validate_spectrum(AngularSpectrum(np.zeros(10)))
    assert zero.sum_2l1 == 0 and zero.sum_2l1_cubed == 0
    assert zero.zero_degrees == 10
    with pytest.raises(ValueError):
        validate_spectrum(np.array([1.0, -1e-3]))
    rep = validate_spectrum(power_law_spectrum(4.0, lmax=4095))
    assert rep.tail_exponent == pytest.approx(4.0, abs=0.1)
    assert len(rep.lines()) == 5
