"""Command-line front end.

    sphtelegraph evolve            sample a field, evolve it, write maps
    sphtelegraph spectrum-evolve   D_l(t) and per-degree multipliers
    sphtelegraph cov               covariance surface over (Theta, t, t')
    sphtelegraph truncation        exact truncation error and its bound
    sphtelegraph diffusion-length  flat-space diffusion length

Exit codes: 0 success, 2 validation failure, 3 I/O failure.
"""

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    CrossoverError,
    covariance,
    evolved_spectrum,
    truncation_bound,
    truncation_error_exact,
    variance,
)
from .diffusion import diffusion_length
from .field import SphereGrid, evolve_coefficients, sample_coefficients, synthesize, write_coefficients
from .modes import ModelParams, crossover_degree, mode_factors
from .spectrum import bundled_spectrum_path, load_spectrum, validate_spectrum

log = logging.getLogger("sphtelegraph")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3

# c = 1, D = 1 presets with the three k values and t' = 0, 0.02, 0.04
PROFILES = {
    f"cmb-k{k}": {"c": 1.0, "D": 1.0, "k": k, "t": "0,0.02,0.04", "time_unit": "tprime", "L": "2508"}
    for k in ("0.01", "0.05", "0.1")
}
DEFAULTS = {"c": 1.0, "D": 1.0, "k": 0.01, "time_unit": "tprime"}


class ValidationError(ValueError):
    pass


def parse_list(text, cast=float):
    """``"a,b,c"`` or ``"start:stop:step"`` (stop inclusive) or a mix."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            fields = part.split(":")
            if len(fields) != 3:
                raise ValidationError(f"range must be start:stop:step, got {part!r}")
            start, stop, step = (float(v) for v in fields)
            if step <= 0:
                raise ValidationError("range step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(cast(start + i * step) for i in range(max(n, 0)))
        else:
            out.append(cast(float(part)) if cast is int else cast(part))
    if not out:
        raise ValidationError(f"empty list {text!r}")
    return out


def parse_grid(text):
    try:
        kind, dims = text.split(":")
        nt, nphi = (int(v) for v in dims.lower().split("x"))
    except ValueError:
        raise ValidationError(f"grid must look like neq:NTHETAxNPHI or gl:NTHETAxNPHI, got {text!r}") from None
    if nt < 1 or nphi < 1:
        raise ValidationError("grid dimensions must be positive")
    if kind == "neq":
        return SphereGrid.equal_angle(nt, nphi)
    if kind == "gl":
        return SphereGrid.gauss_legendre(nt, nphi)
    raise ValidationError(f"unknown grid kind {kind!r} (use neq or gl)")


def _fmt(v):
    return f"{v:.17g}"


def _resolve(args):
    """Fill unset model flags from the chosen profile, then the defaults."""
    profile = PROFILES.get(args.profile, {}) if getattr(args, "profile", None) else {}
    for key in ("c", "D", "k", "time_unit", "t", "L"):
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, profile.get(key, DEFAULTS.get(key)))
    try:
        args.params = ModelParams(float(args.c), float(args.D), float(args.k))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return args


def _times(args):
    values = parse_list(args.t)
    if any(v < 0 for v in values):
        raise ValidationError("times must be nonnegative")
    if args.time_unit == "tprime":
        physical = [v / args.params.damping for v in values]
    else:
        physical = list(values)
    return values, physical


def _spectrum(args):
    path = args.spectrum or bundled_spectrum_path()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = load_spectrum(path, format=args.format)
    for w in caught:
        # the bundled template starts at l=2 by design
        (log.info if args.spectrum is None else log.warning)("%s", w.message)
    validate_spectrum(spec)
    return spec


def _invocation(args, command):
    """Flags that determine the output; the output location is left out."""
    skip = {"out", "func", "params", "command", "verbose"}
    parts = [command]
    for key in sorted(vars(args)):
        if key in skip:
            continue
        val = getattr(args, key)
        if val is None or val is False:
            continue
        parts.append(f"--{key.replace('_', '-')}" + ("" if val is True else f" {val}"))
    return " ".join(parts)


def _header(args, command, extra=()):
    lines = [f"# sphtelegraph {__version__}", f"# invocation: {_invocation(args, command)}"]
    lines += [f"# {e}" for e in extra]
    return "\n".join(lines) + "\n"


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _map_csv(grid, values, header):
    th = np.repeat(grid.theta, len(grid.phi))
    ph = np.tile(grid.phi, len(grid.theta))
    vals = np.asarray(values).ravel()
    rows = "\n".join(f"{a:.17g},{b:.17g},{c:.17g}" for a, b, c in zip(th, ph, vals))
    return header + "theta,phi,u\n" + rows + "\n"


def write_pgm(path, values, comment=None):
    """8-bit binary PGM with linear min-max scaling; returns the bounds."""
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    scaled = np.zeros(values.shape) if span == 0 else (values - lo) / span * 255.0
    pix = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        for line in (comment or "").splitlines():
            fh.write(f"# {line.lstrip('# ')}\n".encode("ascii", "replace"))
        fh.write(f"{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
    return lo, hi


def _stats(values):
    v = np.asarray(values, dtype=float)
    mean = float(v.mean())
    max_abs = float(np.abs(v).max())
    return {
        "mean": mean,
        "std": float(v.std()),
        "min": float(v.min()),
        "max": float(v.max()),
        "max_abs": max_abs,
        "max_abs_over_abs_mean": max_abs / abs(mean) if mean != 0 else math.inf,
        "max_abs_over_std": max_abs / float(v.std()) if v.std() > 0 else math.inf,
    }


def _sidecar(args, lo, hi):
    meta = {"generator": f"sphtelegraph {__version__}", "invocation": _invocation(args, "evolve"),
            "min": lo, "max": hi}
    return json.dumps(meta, indent=2) + "\n"


def cmd_evolve(args):
    spec = _spectrum(args)
    grid = parse_grid(args.grid)
    L = parse_list(args.L, int)[0] if args.L is not None else spec.size
    lmax = min(L, spec.size) - 1
    labels, times = _times(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    coeffs = sample_coefficients(spec, args.seed, lmax=lmax)
    head = _header(args, "evolve")
    with open(out / "alm_initial.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(head)
        write_coefficients(coeffs, fh)

    maps = []
    summary = {"generator": f"sphtelegraph {__version__}", "invocation": _invocation(args, "evolve"),
               "lmax": lmax, "maps": [], "differences": []}
    for i, (label, t) in enumerate(zip(labels, times)):
        u = synthesize(evolve_coefficients(coeffs, t, args.params), grid)
        maps.append(u)
        name = f"map_{i:03d}"
        extra = [f"time {args.time_unit}={label!r} physical_t={_fmt(t)}", f"grid {args.grid}"]
        _write_text(out / f"{name}.csv", _map_csv(grid, u, _header(args, "evolve", extra)))
        entry = {"file": f"{name}.csv", "time": label, "physical_t": t, "stats": _stats(u)}
        if args.pgm:
            lo, hi = write_pgm(out / f"{name}.pgm", u, head)
            _write_text(out / f"{name}.json", _sidecar(args, lo, hi))
        summary["maps"].append(entry)

    for i in range(len(maps)):
        for j in range(i + 1, len(maps)):
            d = maps[j] - maps[i]
            name = f"diff_{i:03d}_{j:03d}"
            extra = [f"difference map_{j:03d} - map_{i:03d}", f"grid {args.grid}"]
            _write_text(out / f"{name}.csv", _map_csv(grid, d, _header(args, "evolve", extra)))
            if args.pgm:
                lo, hi = write_pgm(out / f"{name}.pgm", d, head)
                _write_text(out / f"{name}.json", _sidecar(args, lo, hi))
            summary["differences"].append({"file": f"{name}.csv", "stats": _stats(d)})

    _write_text(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for entry in summary["differences"]:
        s = entry["stats"]
        print(f"{entry['file']}: max|d|={s['max_abs']:.6g} mean={s['mean']:.6g} "
              f"max|d|/|mean|={s['max_abs_over_abs_mean']:.6g} max|d|/std={s['max_abs_over_std']:.6g}")
    return EXIT_OK


def cmd_spectrum_evolve(args):
    spec = _spectrum(args)
    labels, times = _times(args)
    l = np.arange(spec.size)
    cols, names = [], []
    for i, t in enumerate(times):
        cols.append(evolved_spectrum(spec, t, args.params).scaled_dl())
        names.append(f"Dl_t{i}")
    for i, t in enumerate(times):
        f = mode_factors(spec.lmax, t, args.params)
        cols.append(f * f)
        names.append(f"mult_t{i}")
    extra = [f"t{i}: {args.time_unit}={lab!r} physical_t={_fmt(t)}" for i, (lab, t) in enumerate(zip(labels, times))]
    lines = [_header(args, "spectrum-evolve", extra) + "l," + ",".join(names)]
    table = np.column_stack(cols)
    for ll, row in zip(l, table):
        lines.append(f"{ll}," + ",".join(_fmt(v) for v in row))
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_cov(args):
    spec = _spectrum(args)
    thetas = parse_list(args.theta)
    if any(not 0 <= th <= math.pi + 1e-12 for th in thetas):
        raise ValidationError("theta values must lie in [0, pi]")
    thetas = np.clip(thetas, 0.0, math.pi)
    labels, times = _times(args)
    L = parse_list(args.L, int)[0] if args.L is not None else None
    norm = variance(0.0, spec, args.params, L=L) if args.normalize else 1.0
    if norm == 0:
        raise ValidationError("cannot normalize: variance at t=0 is zero")
    lines = [_header(args, "cov", [f"normalization {_fmt(norm)}"]) + "theta,t,tprime,cov"]
    surfaces = {}
    for lab_i, t_i in zip(labels, times):
        for lab_j, t_j in zip(labels, times):
            cov = covariance(thetas, t_i, t_j, spec, args.params, L=L) / norm
            surfaces[(lab_i, lab_j)] = cov
            for th, v in zip(thetas, cov):
                lines.append(f"{_fmt(th)},{_fmt(lab_i)},{_fmt(lab_j)},{_fmt(v)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    base = surfaces[(labels[0], labels[0])]
    scale = float(np.max(np.abs(base))) or 1.0
    for lab in labels[1:]:
        gap = float(np.max(np.abs(surfaces[(labels[0], lab)] - base))) / scale
        print(f"lag {lab}: max relative gap to lag {labels[0]} = {gap:.6g}")
    return EXIT_OK


def cmd_truncation(args):
    spec = _spectrum(args)
    labels, times = _times(args)
    if len(times) != 1:
        raise ValidationError("truncation takes a single time")
    t = times[0]
    Ls = parse_list(args.L, int)
    lstar = crossover_degree(args.params)
    bad = [L for L in Ls if not L > lstar]
    if bad:
        raise ValidationError(f"every L must exceed the crossover degree {lstar:.6g}; got {bad[:5]}")
    lines = [_header(args, "truncation", [f"physical_t={_fmt(t)}"]) + "L,error,bound,log_diff"]
    for L in Ls:
        err = truncation_error_exact(L, t, spec, args.params)
        bnd = truncation_bound(L, t, spec, args.params)
        diff = bnd - err
        log_diff = math.log(diff) if diff > 0 else float("-inf")
        lines.append(f"{L},{_fmt(err)},{_fmt(bnd)},{_fmt(log_diff)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_diffusion_length(args):
    r_d, t_star = diffusion_length(args.Q, args.u, args.D)
    ratio = args.Q / args.u
    report = {
        "Q": args.Q,
        "u": args.u,
        "D": args.D,
        "r_D": r_d,
        "t_star": t_star,
        "r_D_over_cube_root_Q_over_u": r_d / ratio ** (1.0 / 3.0),
    }
    text = "\n".join(f"{k} {_fmt(v)}" for k, v in report.items()) + "\n"
    if args.out:
        _write_text(args.out, _header(args, "diffusion-length") + "quantity,value\n"
                    + "".join(f"{k},{_fmt(v)}\n" for k, v in report.items()))
    sys.stdout.write(text)
    return EXIT_OK


def _model_flags(p, times=True):
    p.add_argument("--profile", choices=sorted(PROFILES), help="named parameter preset")
    p.add_argument("--c", type=float, help="propagation speed bound (default 1)")
    p.add_argument("--D", type=float, help="diffusivity (default 1)")
    p.add_argument("--k", type=float, help="spatial scale constant (default 0.01)")
    if times:
        p.add_argument("--time-unit", dest="time_unit", choices=("t", "tprime"),
                       help="interpret --t as physical t or t' = c^2 t/(2D) (default tprime)")
        p.add_argument("--t", help="comma list or start:stop:step of times")


def _spectrum_flags(p):
    p.add_argument("--spectrum", help="spectrum CSV (header l,Cl or l,Dl); default: bundled template")
    p.add_argument("--format", choices=("cl", "dl"), help="expected value column")


def build_parser():
    parser = argparse.ArgumentParser(prog="sphtelegraph", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="sample, evolve and map a random field")
    _spectrum_flags(p)
    _model_flags(p)
    p.add_argument("--L", help="truncation degree (number of retained degrees)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", default="neq:128x256")
    p.add_argument("--pgm", action="store_true", help="also write 8-bit PGM heatmaps")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("spectrum-evolve", help="evolved D_l and multipliers")
    _spectrum_flags(p)
    _model_flags(p)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_spectrum_evolve)

    p = sub.add_parser("cov", help="covariance surface")
    _spectrum_flags(p)
    _model_flags(p)
    p.add_argument("--theta", default=f"0:{math.pi!r}:{math.pi / 180!r}", help="angular distances")
    p.add_argument("--L", help="truncation degree")
    p.add_argument("--normalize", action="store_true", help="divide by the variance at t=0")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_cov)

    p = sub.add_parser("truncation", help="truncation error and bound")
    _spectrum_flags(p)
    _model_flags(p)
    p.add_argument("--L", required=True, help="truncation degrees, e.g. 50:1000:10")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_truncation)

    p = sub.add_parser("diffusion-length", help="flat-space diffusion length")
    p.add_argument("--Q", type=float, required=True, help="disturbance mass")
    p.add_argument("--u", type=float, required=True, help="threshold density")
    p.add_argument("--D", type=float, default=1.0, help="diffusivity (only affects t*)")
    p.add_argument("--out", help="optional CSV report")
    p.set_defaults(func=cmd_diffusion_length)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command != "diffusion-length":
            _resolve(args)
        return args.func(args)
    except OSError as exc:
        print(f"sphtelegraph: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, CrossoverError) as exc:
        print(f"sphtelegraph: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
