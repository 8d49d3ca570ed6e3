"""Command-line front end: ``degrade``, ``deblur``, ``evaluate``, ``sweep``, ``benchmark``.

Every subcommand takes its settings from an optional JSON manifest
(``--manifest``) overlaid by explicit flags; flags win. Failures print one
line ``error: <reason>: <detail>`` on stderr and exit with 2 (validation or
I/O) or 3 (numerical divergence).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .degrade import NoiseSpec, RNG_NAME, degrade, parse_psf_spec, standard_psfs, synthetic_image
from .image import PnmFormatError, load_pnm, save_pnm
from .metrics import CSV_FIELDS, SsimConfig, mssim_color, psnr
from .operators import Psf, load_psf, save_psf
from .solver import DivergenceError, SolverConfig, deblur, method_label

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3

DEFAULT_GRID = (0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0)
SWEEP_FIELDS = ("nu1", "nu2", "mssim", "psnr", "iterations", "status")


class CliError(Exception):
    def __init__(self, reason: str, detail: str = "", code: int = EXIT_INVALID):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.code = code


# ---------------------------------------------------------------- settings

def _read_manifest(path):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError("manifest-not-found", str(path)) from None
    except json.JSONDecodeError as exc:
        raise CliError("manifest-invalid", f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise CliError("manifest-invalid", f"{path}: top level must be an object")
    return data


def settings(args) -> dict:
    """Manifest values overlaid by every flag the user actually gave."""
    merged = _read_manifest(args.manifest)
    for key, value in vars(args).items():
        if key in ("manifest", "command", "func", "verbose"):
            continue
        if value is not None and value is not False:
            merged[key] = value
        else:
            merged.setdefault(key, value)
    return merged


def _psf(spec) -> Psf:
    if spec is None:
        raise CliError("psf-missing", "give --psf as a file or kind spec")
    spec = str(spec)
    if Path(spec).is_file():
        try:
            return load_psf(spec)
        except ValueError as exc:
            raise CliError("psf-invalid", str(exc)) from None
    try:
        return parse_psf_spec(spec)
    except ValueError as exc:
        raise CliError("psf-invalid", str(exc)) from None


def _load_image(spec, what="input"):
    """Read a PNM file, or build ``synthetic:<kind>[:size]``."""
    if spec is None:
        raise CliError(f"{what}-missing")
    spec = str(spec)
    if spec.startswith("synthetic:"):
        _, kind, *size = spec.split(":")
        try:
            return synthetic_image(kind, int(size[0]) if size else 128)[None]
        except ValueError as exc:
            raise CliError(f"{what}-invalid", str(exc)) from None
    path = Path(spec)
    if not path.is_file():
        raise CliError(f"{what}-not-found", spec)
    try:
        return load_pnm(path)
    except PnmFormatError as exc:
        raise CliError(f"{what}-invalid", f"{spec}: {exc}") from None


def _stem(spec) -> str:
    spec = str(spec)
    if spec.startswith("synthetic:"):
        return spec.split(":")[1]
    return Path(spec).stem


def _out_dir(opts) -> Path:
    out = Path(opts.get("out") or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("output-unwritable", str(exc)) from None
    return out


def _noise(opts) -> NoiseSpec:
    try:
        return NoiseSpec(float(opts.get("noise") or 0.0), int(opts.get("seed") or 0))
    except ValueError as exc:
        raise CliError("noise-invalid", str(exc)) from None


def solver_config(opts) -> SolverConfig:
    """Noise-level preset, then any explicit solver flag."""
    over = {}
    if opts.get("mu") is not None:
        over["mu"] = float(opts["mu"])
    if opts.get("beta") is not None:
        over.update(beta1=float(opts["beta"]), beta2=float(opts["beta"]), beta3=float(opts["beta"]))
    if opts.get("tol") is not None:
        over["tol"] = float(opts["tol"])
    if opts.get("max_iters") is not None:
        over["max_iters"] = int(opts["max_iters"])
    try:
        cfg = SolverConfig.for_noise(float(opts.get("noise") or 0.0), **over)
        if opts.get("nu1") is not None or opts.get("nu2") is not None:
            w = cfg.weights
            cfg = cfg.with_nu(
                float(opts["nu1"]) if opts.get("nu1") is not None else w.nu1,
                float(opts["nu2"]) if opts.get("nu2") is not None else w.nu2,
            )
        if opts.get("baseline_tv"):
            cfg = cfg.baseline_tv()
    except ValueError as exc:
        raise CliError("config-invalid", str(exc)) from None
    return cfg


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError("output-unwritable", str(exc)) from None


def _csv_text(rows, fields) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    return "inf" if x == float("inf") else f"{x:.6f}"


# ---------------------------------------------------------------- commands

def cmd_degrade(opts) -> int:
    img = _load_image(opts.get("input"))
    psf = _psf(opts.get("psf"))
    noise = _noise(opts)
    out = _out_dir(opts)
    stem = _stem(opts["input"])
    # distinct planes get distinct, reproducible noise streams
    planes = [degrade(p, psf, replace(noise, seed=noise.seed + i)) for i, p in enumerate(img)]
    target = out / f"{stem}_degraded.{'pgm' if len(planes) == 1 else 'ppm'}"
    try:
        save_pnm(np.stack(planes), target)
        save_psf(psf, out / f"{stem}_psf.txt")
    except OSError as exc:
        raise CliError("output-unwritable", str(exc)) from None
    manifest = {
        "input": str(opts["input"]),
        "output": str(target),
        "psf": {"label": psf.label, "size": psf.size, "params": psf.params, "raw_sum": psf.raw_sum},
        "psf_file": str(out / f"{stem}_psf.txt"),
        "noise": noise.to_dict(),
        "seed": noise.seed,
    }
    _write(out / f"{stem}_degraded.json", json.dumps(manifest, indent=2, sort_keys=True))
    print(target)
    return EXIT_OK


def _zeta_writer(out: Path, stem: str):
    zdir = out / f"{stem}_zeta"
    zdir.mkdir(parents=True, exist_ok=True)

    def callback(prev, new):
        save_pnm(255.0 * new.zeta, zdir / f"zeta_{new.iteration:04d}.pgm")

    return callback


def _metrics_row(image_id, psf_id, noise, method, ref, test, report=None) -> dict:
    return {
        "image_id": image_id,
        "psf_id": psf_id,
        "noise_percent": f"{noise:g}",
        "method": method,
        "mssim": _fmt(mssim_color(ref, test)),
        "psnr": _fmt(psnr(ref, test)),
        "iterations": report.iterations if report is not None else 0,
        "wall_time_s": f"{report.wall_time:.3f}" if report is not None else "0.000",
    }


def cmd_deblur(opts) -> int:
    g = _load_image(opts.get("input"))
    psf = _psf(opts.get("psf"))
    cfg = solver_config(opts)
    out = _out_dir(opts)
    stem = _stem(opts["input"])
    callback = _zeta_writer(out, stem) if opts.get("debug_zeta") else None
    restored, reports = [], []
    for plane in g:
        try:
            rep = deblur(plane, psf, cfg, callback)
        except DivergenceError as exc:
            path = out / f"{stem}_report.json"
            _write(path, json.dumps(_report_json(opts, [exc.report]), indent=2))
            raise CliError("diverged", f"iteration {exc.iteration}; report at {path}", EXIT_DIVERGED) from None
        except ValueError as exc:
            raise CliError("input-invalid", str(exc)) from None
        restored.append(rep.restored)
        reports.append(rep)
    restored = np.stack(restored)
    target = out / f"{stem}_restored.{'pgm' if len(restored) == 1 else 'ppm'}"
    try:
        save_pnm(restored, target)
    except OSError as exc:
        raise CliError("output-unwritable", str(exc)) from None
    doc = _report_json(opts, reports)
    if opts.get("reference"):
        ref = _load_image(opts["reference"], "reference")
        if ref.shape != restored.shape:
            raise CliError("dimension-mismatch", f"{ref.shape} vs {restored.shape}")
        row = _metrics_row(
            _stem(opts["reference"]), str(opts.get("psf")), float(opts.get("noise") or 0),
            method_label(cfg), ref, restored, reports[0],
        )
        doc["metrics"] = row
        _write(out / f"{stem}_metrics.csv", _csv_text([row], CSV_FIELDS))
    _write(out / f"{stem}_report.json", json.dumps(doc, indent=2))
    print(target)
    return EXIT_OK


def _report_json(opts, reports) -> dict:
    flags = {k: v for k, v in opts.items() if isinstance(v, (int, float, str, bool)) or v is None}
    return {
        "flags": flags,
        "noise_semantics": "sigma = percent / 100 * 255 gray levels",
        "rng": RNG_NAME,
        "planes": [r.to_dict() for r in reports],
    }


def _pairs(ref_spec, test_spec):
    ref_p, test_p = Path(ref_spec), Path(test_spec)
    if ref_p.is_dir() != test_p.is_dir():
        raise CliError("input-invalid", "reference and test must both be files or both directories")
    if not ref_p.is_dir():
        return [(ref_p.stem, str(ref_p), str(test_p))]
    pairs = []
    for ref in sorted(ref_p.iterdir()):
        if ref.suffix.lower() not in (".pgm", ".ppm", ".pnm"):
            continue
        match = [t for t in test_p.iterdir() if t.stem == ref.stem]
        if not match:
            raise CliError("input-not-found", f"no test image for {ref.name} in {test_p}")
        pairs.append((ref.stem, str(ref), str(match[0])))
    if not pairs:
        raise CliError("input-not-found", f"no PNM images in {ref_p}")
    return sorted(pairs)


def cmd_evaluate(opts) -> int:
    if opts.get("reference") is None or opts.get("input") is None:
        raise CliError("input-missing", "evaluate needs --reference and an input")
    rows = []
    for image_id, ref_path, test_path in _pairs(opts["reference"], opts["input"]):
        ref = _load_image(ref_path, "reference")
        test = _load_image(test_path)
        if ref.shape != test.shape:
            raise CliError("dimension-mismatch", f"{image_id}: {ref.shape} vs {test.shape}")
        rows.append(_metrics_row(
            image_id, str(opts.get("psf") or ""), float(opts.get("noise") or 0),
            opts.get("method") or "", ref, test,
        ))
    text = _csv_text(rows, CSV_FIELDS)
    if opts.get("out"):
        _write(_out_dir(opts) / "metrics.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def _grid(opts):
    grid = opts.get("grid")
    if grid is None:
        return [(a, b) for a in DEFAULT_GRID for b in DEFAULT_GRID]
    try:
        cells = [(float(a), float(b)) for a, b in grid]
    except (TypeError, ValueError):
        raise CliError("grid-invalid", "grid must be a list of [nu1, nu2] pairs") from None
    if not cells:
        raise CliError("grid-invalid", "grid is empty")
    return cells


def run_sweep(g, ref, psf, cfg, cells):
    """One row per grid cell; divergent cells are recorded, not fatal."""
    rows = []
    for nu1, nu2 in cells:
        row = {"nu1": f"{nu1:g}", "nu2": f"{nu2:g}"}
        try:
            rep = deblur(g, psf, cfg.with_nu(nu1, nu2))
        except DivergenceError as exc:
            row.update(mssim="nan", psnr="nan", iterations=exc.iteration, status="diverged")
        except ValueError as exc:
            row.update(mssim="nan", psnr="nan", iterations=0, status=f"invalid: {exc}")
        else:
            row.update(
                mssim=_fmt(mssim_color(ref, rep.restored)), psnr=_fmt(psnr(ref, rep.restored)),
                iterations=rep.iterations, status="ok",
            )
        rows.append(row)
    return rows


def sweep_argmax(rows):
    ok = [r for r in rows if r["status"] == "ok"]
    if not ok:
        return None
    best = max(ok, key=lambda r: float(r["mssim"]))
    return float(best["nu1"]), float(best["nu2"]), float(best["mssim"])


def cmd_sweep(opts) -> int:
    g = _load_image(opts.get("input"))
    ref = _load_image(opts.get("reference"), "reference")
    if ref.shape != g.shape:
        raise CliError("dimension-mismatch", f"{ref.shape} vs {g.shape}")
    if len(g) != 1:
        raise CliError("input-invalid", "sweep expects a gray-level image")
    psf = _psf(opts.get("psf"))
    cfg = solver_config(opts)
    cells = _grid(opts)
    out = _out_dir(opts)
    rows = run_sweep(g[0], ref[0], psf, cfg, cells)
    best = sweep_argmax(rows)
    stem = _stem(opts["input"])
    _write(out / f"{stem}_sweep.csv", _csv_text(rows, SWEEP_FIELDS))
    summary = {"cells": len(rows), "argmax": None}
    if best is not None:
        summary["argmax"] = {"nu1": best[0], "nu2": best[1], "mssim": best[2]}
    _write(out / f"{stem}_sweep.json", json.dumps(summary, indent=2))
    print(json.dumps(summary))
    return EXIT_OK


def benchmark_rows(images=("cells", "terrain"), noises=(0, 1, 2, 5), size=128, seed=0, max_iters=None):
    """Synthetic protocol: every image x standard kernel x noise level, three methods."""
    rows = []
    psfs = standard_psfs()
    for kind in images:
        f = synthetic_image(kind, size, seed=seed)
        for pid, psf in psfs.items():
            for level in noises:
                g = degrade(f, psf, NoiseSpec(level, seed=seed + 1))
                base = dict(image_id=kind, psf_id=pid, noise=level, ref=f)
                rows.append(_metrics_row(method="degraded", test=g, **base))
                over = {} if max_iters is None else {"max_iters": max_iters}
                cfg = SolverConfig.for_noise(level, **over)
                for c in (cfg, cfg.baseline_tv()):
                    rep = deblur(g, psf, c)
                    rows.append(_metrics_row(method=method_label(c), test=rep.restored, report=rep, **base))
    return rows


def cmd_benchmark(opts) -> int:
    out = _out_dir(opts)
    rows = benchmark_rows(
        seed=int(opts.get("seed") or 0),
        max_iters=int(opts["max_iters"]) if opts.get("max_iters") is not None else None,
    )
    _write(out / "benchmark.csv", _csv_text(rows, CSV_FIELDS))
    print(out / "benchmark.csv")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p):
    p.add_argument("input", nargs="?", help="PNM file, directory (evaluate) or synthetic:<kind>[:size]")
    p.add_argument("--manifest", help="JSON file of settings; flags override it")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--psf", help="kernel text file or spec such as 1, 2, 3, gaussian:13,std=2")
    p.add_argument("--noise", type=float, help="noise level in percent of 255")
    p.add_argument("--reference", help="ground-truth image (or directory for batch evaluate)")
    p.add_argument("--mu", type=float)
    p.add_argument("--beta", type=float, help="sets beta1 = beta2 = beta3")
    p.add_argument("--nu1", type=float)
    p.add_argument("--nu2", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--baseline-tv", action="store_true", help="convex TV: nu = 1, zeta = 1")
    p.add_argument("--debug-zeta", action="store_true", help="write the zeta map of every iteration")
    p.add_argument("--method", help="method label for evaluate rows")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-deblur", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("degrade", cmd_degrade, "blur and add noise to an image"),
        ("deblur", cmd_deblur, "restore a degraded image"),
        ("evaluate", cmd_evaluate, "MSSIM / PSNR rows for image pairs"),
        ("sweep", cmd_sweep, "grid over (nu1, nu2)"),
        ("benchmark", cmd_benchmark, "synthetic protocol to one CSV"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(settings(args))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: io-error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
