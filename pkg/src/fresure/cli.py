"""Command-line front end: ``fresure <command> ...``.

Exit status is 0 when every requested file was written and every fit
converged, 1 for an unconverged fit (unless ``--allow-unconverged``), 2 for
usage errors and 3 for unreadable or unwritable files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats, plotting
from .config import ExperimentConfig, load_config
from .dynamics import STATE_TAGS, noise_averaged_fids
from .metrology import allan_deviation, default_m_values, peak_position_series, resolution_limit
from .model import derived_frequencies
from .spectra import (
    check_same_grid,
    count_inversions,
    coupling_sweep,
    fft_spectrum,
    find_peaks,
    fit_decomposition_scale,
    fit_multi_lorentzian,
    Spectrum,
    valid_range,
)

log = logging.getLogger("fresure")

EXIT_OK, EXIT_UNCONVERGED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "mc", None) is not None:
        cfg.n_mc = args.mc
    return cfg


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def _state_tags(state: str) -> list[str]:
    if state == "all":
        return list(STATE_TAGS)
    if state == "thermal":
        return ["thermal"]
    return [state[-1]]


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    tags = _state_tags(args.state)
    fids = noise_averaged_fids(tags, cfg.system, cfg.noise, cfg.n_mc, cfg.seed, cfg.dt_s, cfg.n_samples,
                               hamiltonian=args.model, sampling=cfg.sampling)
    spectra = {}
    for tag, fid in fids.items():
        formats.write_fid_csv(fid, out / f"fid_{tag}.csv")
        spectra[tag] = fft_spectrum(fid, cfg.zero_pad_factor, cfg.mode)
        formats.write_spectrum_csv(spectra[tag], out / f"spectrum_{tag}.csv")
    summary = {"model": args.model, "n_mc": cfg.n_mc, "seed": cfg.seed, "states": tags}
    if args.state == "all":
        lam = cfg.system.thermal_p / cfg.system.pps_q
        total = (spectra["A"] + spectra["B"] + spectra["C"] + spectra["D"]).scaled(lam)
        formats.write_spectrum_csv(total, out / "spectrum_sum.csv")
        th = spectra["thermal"]
        m = th.mask(cfg.window_hz)
        dev = float(np.max(np.abs(th.amplitude[m] - total.amplitude[m])) / np.max(np.abs(th.amplitude[m])))
        summary["sum_vs_thermal_max_rel_deviation"] = dev
        plotting.plot_decomposition(spectra, total, out / "decomposition.svg", cfg.window_hz,
                                    f"{args.model} Hamiltonian, Γ = {cfg.noise.gamma_fwhm_hz:g} Hz")
    else:
        tag = tags[0]
        summary["peaks"] = [p.to_dict() for p in find_peaks(spectra[tag], cfg.window_hz, 4, cfg.prominence)]
        plotting.plot_spectrum(spectra[tag], out / f"spectrum_{tag}.svg", cfg.window_hz, f"state {tag}")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _load_aligned(paths, resample: bool) -> list[Spectrum]:
    specs = [formats.read_spectrum_csv(p) for p in paths]
    ref = specs[0]
    out = [ref]
    for p, s in zip(paths[1:], specs[1:]):
        try:
            check_same_grid(ref, s)
            out.append(s)
        except ValueError:
            if not resample:
                raise ValueError(f"{p} is not on the frequency grid of {paths[0]} (use --resample)")
            z = np.interp(ref.freq_hz, s.freq_hz, s.complex_values.real) + 1j * np.interp(
                ref.freq_hz, s.freq_hz, s.complex_values.imag)
            out.append(Spectrum(ref.freq_hz, z, s.mode if s.mode != "custom" else "absorption",
                                amplitude=np.interp(ref.freq_hz, s.freq_hz, s.amplitude)))
    return out


def cmd_decompose(args) -> int:
    out = _outdir(args.out)
    specs = _load_aligned([args.thermal, *args.pps], args.resample)
    thermal, parts = specs[0], specs[1:]
    window = tuple(args.window)
    result = fit_decomposition_scale(thermal, parts, window)
    table = {}
    for label, s in zip("ABCD", parts):
        peaks = find_peaks(s, window, 1, args.prominence)
        table[label] = peaks[0].to_dict() if peaks else None
    report = {**result.to_dict(), "pps": table}
    formats.write_json(report, out / "decomposition.json")
    total = parts[0]
    for s in parts[1:]:
        total = total + s
    plotting.plot_decomposition({"thermal": thermal, **dict(zip("ABCD", parts))}, total.scaled(result.lam),
                                out / "decomposition.svg", window, f"λ = {result.lam:.4f}")
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _parse_triples(items):
    triples = []
    for item in items:
        vals = [float(v) for v in item.split(",")]
        if len(vals) != 3:
            raise ValueError(f"--init expects position,height,fwhm; got {item!r}")
        triples.append(vals)
    return triples


def default_fit_init(cfg: ExperimentConfig, spec: Spectrum, n_peaks: int):
    """Start from the analytic line positions (4 peaks) or A, mid(B,C), D (3 peaks)."""
    a, b, c, d = derived_frequencies(cfg.system).peak_hz
    positions = [a, b, c, d] if n_peaks == 4 else [a, 0.5 * (b + c), d]
    top = float(np.max(spec.amplitude[spec.mask(cfg.window_hz)]))
    return [(p, 0.5 * top, cfg.noise.gamma_fwhm_hz) for p in positions]


def cmd_fit(args) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    spec = formats.read_spectrum_csv(args.spectrum)
    init = _parse_triples(args.init) if args.init else default_fit_init(cfg, spec, args.n_peaks)
    bounds = None
    if args.bounds:
        bounds = [tuple(float(v) for v in b.split(":")) for b in args.bounds]
    window = tuple(args.window) if args.window else cfg.window_hz
    fit = fit_multi_lorentzian(spec, args.n_peaks, init, bounds, args.constraint, window, args.range)
    report = fit.to_dict()
    formats.write_json(report, out / "fit.json")
    plotting.plot_fit(spec, fit, out / "fit.svg", window)
    print(json.dumps(report, indent=2))
    if not fit.converged and not args.allow_unconverged:
        log.error("fit did not converge: %s", fit.message)
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    mc = args.mc if args.mc is not None else cfg.sweep_mc_samples
    window = tuple(args.window) if args.window else None
    results = coupling_sweep(cfg.system, cfg.noise, cfg.sweep_n_values, mc, cfg.seed, cfg.dt_s, cfg.n_samples,
                             cfg.zero_pad_factor, window, cfg.mode)
    threshold = args.threshold if args.threshold is not None else cfg.sweep_threshold
    formats.write_sweep_csv(results, out / "sweep.csv")
    plotting.plot_sweep(results, out / "sweep.svg", threshold)
    inversions, drop = count_inversions([r.delta_s_over_s for r in results])
    report = {"results": [r.to_dict() for r in results], "mc_samples": mc, "seed": cfg.seed,
              "inversions": inversions, "largest_drop": drop, "threshold": threshold}
    if threshold is not None:
        limit = valid_range(results, threshold)
        report["valid_up_to_n"] = None if np.isinf(limit) else limit
    formats.write_json(report, out / "sweep.json")
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_allan(args) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    if args.series:
        series = {"sigma_hz": formats.read_series_csv(args.series)}
    elif args.generate == "white":
        rng = np.random.default_rng(cfg.seed)
        series = {"sigma_hz": rng.normal(0.0, args.white_std, args.length)}
    else:
        series = peak_position_series(cfg.system, cfg.noise, args.length, args.mc_per_measurement, cfg.seed,
                                      args.model, dt_s=cfg.dt_s, n_samples=cfg.n_samples,
                                      zero_pad_factor=cfg.zero_pad_factor, window_hz=cfg.window_hz,
                                      prominence=cfg.prominence)
        for k, v in series.items():
            formats.write_series_csv(v, out / f"positions_{k}.csv", "position_hz")
    length = len(next(iter(series.values())))
    m_values = args.m or default_m_values(length)
    results = {k: allan_deviation(v, m_values) for k, v in series.items()}
    sigmas = {k: r.sigma_hz for k, r in results.items()}
    formats.write_allan_csv(m_values, sigmas, out / "allan.csv")
    plotting.plot_allan(m_values, sigmas if len(sigmas) > 1 else {"σ": sigmas["sigma_hz"]}, out / "allan.svg")
    report = {}
    for k, r in results.items():
        smin, mmin = resolution_limit(r)
        report[k] = {"sigma_min_hz": smin, "m_at_min": mmin, **r.to_dict()}
    formats.write_json(report, out / "allan.json")
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_import_fid(args) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    fid = formats.read_fid_csv(args.fid)
    spec = fft_spectrum(fid, args.zero_pad or cfg.zero_pad_factor, args.mode or cfg.mode)
    stem = Path(args.fid).stem
    formats.write_spectrum_csv(spec, out / f"{stem}_spectrum.csv")
    plotting.plot_spectrum(spec, out / f"{stem}_spectrum.svg", cfg.window_hz, stem)
    peaks = [p.to_dict() for p in find_peaks(spec, cfg.window_hz, 4, cfg.prominence)]
    formats.write_json({"peaks": peaks}, out / f"{stem}_peaks.json")
    print(json.dumps({"n_samples": fid.n_samples, "dt_s": fid.dt_s, "peaks": peaks}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fresure", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--out", default=".", help="output directory")
        if seed:
            p.add_argument("--seed", type=int, help="override mc.seed")

    p = sub.add_parser("simulate", help="noise-averaged FIDs and spectra")
    common(p)
    p.add_argument("--state", default="all", choices=["thermal", "ppsA", "ppsB", "ppsC", "ppsD", "all"])
    p.add_argument("--model", default="full", choices=["full", "secular"])
    p.add_argument("--mc", type=int, help="override mc.n_mc")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="fit λ between a thermal spectrum and four PPS spectra")
    p.add_argument("thermal")
    p.add_argument("pps", nargs=4, metavar="PPS")
    p.add_argument("--window", nargs=2, type=float, default=[850.0, 1200.0])
    p.add_argument("--prominence", type=float, default=0.05)
    p.add_argument("--resample", action="store_true", help="interpolate mismatched grids instead of failing")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("fit", help="multi-Lorentzian least-squares fit")
    common(p, seed=False)
    p.add_argument("spectrum")
    p.add_argument("--n-peaks", type=int, choices=[3, 4], default=4)
    p.add_argument("--constraint", default="none", choices=["none", "equal_width", "equal_width_and_height"])
    p.add_argument("--init", nargs="+", metavar="POS,HEIGHT,FWHM")
    p.add_argument("--bounds", nargs="+", metavar="LO:HI")
    p.add_argument("--range", type=float, default=10.0, help="default position bound half-width (Hz)")
    p.add_argument("--window", nargs=2, type=float)
    p.add_argument("--allow-unconverged", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="secular-vs-full infidelity versus coupling magnification")
    common(p)
    p.add_argument("--mc", type=int, help="override sweep.mc_samples")
    p.add_argument("--threshold", type=float)
    p.add_argument("--window", nargs=2, type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("allan", help="Allan deviation of a measurement series")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--series", help="single-column CSV of peak positions (Hz)")
    src.add_argument("--generate", choices=["white", "pipeline"])
    p.add_argument("--m", type=int, nargs="+", help="averaging sizes")
    p.add_argument("--length", type=int, default=64, help="generated series length")
    p.add_argument("--white-std", type=float, default=1.0)
    p.add_argument("--mc-per-measurement", type=int, default=1000)
    p.add_argument("--model", default="full", choices=["full", "secular"])
    p.set_defaults(func=cmd_allan)

    p = sub.add_parser("import-fid", help="spectrum and peaks of a FID CSV")
    common(p, seed=False)
    p.add_argument("fid")
    p.add_argument("--zero-pad", type=int)
    p.add_argument("--mode", choices=["absorption", "magnitude"])
    p.set_defaults(func=cmd_import_fid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"fresure: {exc}", file=sys.stderr)
        return EXIT_IO
    except formats.FormatError as exc:
        print(f"fresure: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"fresure: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
