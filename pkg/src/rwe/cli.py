"""Command-line front end: noise synthesis, denoising, and benchmark sweeps.

Noise levels on all flags and manifests are quoted in 8-bit units (sigma of
10 means 10/255 on the unit intensity scale), matching the convention the
result tables use. Exit codes: 0 success, 2 usage or validation error,
3 I/O failure, 4 numerical failure.
"""

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from rwe.image import ImageFormatError, load_image, save_image
from rwe.metrics import psnr, ssim
from rwe.noise import NoiseSpec, mask_to_bytes, synthesize
from rwe.prefilter import initialize
from rwe.solver import NumericalError, SolverConfig, denoise

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_SOLVER_FLAGS = {
    "patch": "patch_side",
    "k": "k",
    "stride": "stride",
    "window": "search_window",
    "beta": "beta",
    "inner": "inner_iters",
    "outer": "outer_iters",
    "gamma_scope": "gamma_scope",
    "weight_rule": "weight_rule",
    "xi": "xi",
}


class ManifestError(ValueError):
    """Raised when a benchmark manifest fails to parse or validate."""


def _fmt(v):
    """Compact numeric formatting for filenames and records: 30, 0.5, 0.05."""
    f = float(v)
    return str(int(f)) if f == int(f) else ("%g" % f)


def _solver_config(args):
    kwargs = {}
    for flag, field in _SOLVER_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            kwargs[field] = value
    return SolverConfig(**kwargs)


def _load_labels(path):
    """Read a synthesis label map saved by `synth --mask` (labels scaled by 64)."""
    return np.rint(load_image(path) * 255.0 / 64.0).astype(np.int64)


def cmd_synth(args):
    clean = load_image(args.input)
    spec = NoiseSpec(
        sigma8=args.sigma, spin_ratio=args.spin, rvin_ratio=args.rvin, seed=args.seed
    )
    noisy, mask = synthesize(clean, spec)
    stem, ext = os.path.splitext(os.path.basename(args.input))
    name = "%s_s%s_sp%s_rv%s_seed%d%s" % (
        stem, _fmt(spec.sigma8), _fmt(spec.spin_ratio), _fmt(spec.rvin_ratio), spec.seed, ext,
    )
    out_path = os.path.join(args.out, name)
    save_image(noisy, out_path)
    if args.mask:
        save_image(mask_to_bytes(mask) / 255.0, args.mask)
    print(
        "synth %s sigma=%s spin=%s rvin=%s seed=%d"
        % (out_path, _fmt(spec.sigma8), _fmt(spec.spin_ratio), _fmt(spec.rvin_ratio), spec.seed)
    )
    return EXIT_OK


def cmd_denoise(args):
    y = load_image(args.input)
    cfg = _solver_config(args)
    ref = load_image(args.ref) if args.ref else None
    mask = _load_labels(args.mask) if args.mask else None

    if args.init_only:
        x = initialize(y, args.kind)
        save_image(x, args.out)
        if ref is not None:
            print("init %s -> %s psnr=%.4f ssim=%.4f" % (args.input, args.out, psnr(x, ref), ssim(x, ref)))
        else:
            print("init %s -> %s" % (args.input, args.out))
        return EXIT_OK

    x, report = denoise(y, cfg, kind=args.kind, ref=ref, mask=mask)
    save_image(x, args.out)
    if args.report:
        report.to_csv(args.report)
    last = report.iterations[-1]
    if ref is not None:
        print(
            "denoise %s -> %s sigma=%.2f psnr=%.4f ssim=%.4f"
            % (args.input, args.out, 255.0 * last.sigma, last.psnr, last.ssim)
        )
    else:
        print("denoise %s -> %s sigma=%.2f" % (args.input, args.out, 255.0 * last.sigma))
    return EXIT_OK


def _parse_manifest(path):
    """Flat sectioned key = value text: one [defaults] plus repeated [run]."""
    sections = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                sections.append((line[1:-1].strip().lower(), {}))
                continue
            if not sections or "=" not in line:
                raise ManifestError("%s:%d: expected [section] or key = value" % (path, lineno))
            key, value = line.split("=", 1)
            sections[-1][1][key.strip().lower()] = value.strip()
    defaults, runs = {}, []
    for name, kv in sections:
        if name == "defaults":
            defaults.update(kv)
        elif name == "run":
            runs.append({**defaults, **kv})
        else:
            raise ManifestError("%s: unknown section [%s]" % (path, name))
    if not runs:
        raise ManifestError("%s: no [run] sections" % path)
    return runs


def _floats(text):
    return [float(tok) for tok in str(text).split(",") if tok.strip() != ""]


def _expand_cells(runs):
    """Cartesian product of each run's noise grid and weight rules."""
    cells = []
    for run in runs:
        if "image" not in run:
            raise ManifestError("run section missing image =")
        image = run["image"]
        if not os.path.isfile(image):
            raise FileNotFoundError("manifest image does not exist: %s" % image)
        ref = run.get("ref", image)
        if not os.path.isfile(ref):
            raise FileNotFoundError("manifest ref does not exist: %s" % ref)
        kind = run.get("kind", "both")
        seed = int(run.get("seed", 0))
        rules = [r.strip() for r in run.get("rules", "pareto").split(",") if r.strip()]
        overrides = {}
        for key, field in _SOLVER_FLAGS.items():
            if key in ("weight_rule",):
                continue
            if key in run:
                raw = run[key]
                overrides[field] = float(raw) if field in ("beta", "xi") else (
                    raw if field == "gamma_scope" else int(raw)
                )
        for sigma in _floats(run.get("sigma", "0")):
            for s in _floats(run.get("spin", "0")):
                for r in _floats(run.get("rvin", "0")):
                    for rule in rules:
                        cells.append(
                            {
                                "image": image,
                                "ref": ref,
                                "kind": kind,
                                "seed": seed,
                                "sigma": sigma,
                                "s": s,
                                "r": r,
                                "rule": rule,
                                "overrides": dict(overrides),
                            }
                        )
    return cells


def _run_cell(cell):
    row = {
        "image": os.path.basename(cell["image"]),
        "sigma": _fmt(cell["sigma"]),
        "s": _fmt(cell["s"]),
        "r": _fmt(cell["r"]),
        "rule": cell["rule"],
        "psnr": "",
        "ssim": "",
        "seconds": "",
        "error": "",
    }
    start = time.time()
    try:
        clean = load_image(cell["image"])
        ref = clean if cell["ref"] == cell["image"] else load_image(cell["ref"])
        spec = NoiseSpec(
            sigma8=cell["sigma"], spin_ratio=cell["s"], rvin_ratio=cell["r"], seed=cell["seed"]
        )
        noisy, mask = synthesize(clean, spec)
        cfg = SolverConfig(weight_rule=cell["rule"], **cell["overrides"])
        x, _ = denoise(noisy, cfg, kind=cell["kind"], mask=mask)
        row["psnr"] = "%.4f" % psnr(x, ref)
        row["ssim"] = "%.4f" % ssim(x, ref)
    except Exception as exc:  # per-cell failures recorded, sweep continues
        row["error"] = "%s: %s" % (type(exc).__name__, exc)
    row["seconds"] = "%.2f" % (time.time() - start)
    return row


def cmd_bench(args):
    cells = _expand_cells(_parse_manifest(args.manifest))
    workers = max(1, int(os.environ.get("RWE_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(cell) for cell in cells]
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["image", "sigma", "s", "r", "rule", "psnr", "ssim", "seconds", "error"]
        )
        writer.writeheader()
        writer.writerows(rows)
    failures = sum(1 for row in rows if row["error"])
    print("bench %s: %d cells, %d failed -> %s" % (args.manifest, len(rows), failures, args.out))
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(prog="rwe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="corrupt an image with mixed noise")
    synth.add_argument("--in", dest="input", required=True)
    synth.add_argument("--out", default=".", help="output directory")
    synth.add_argument("--sigma", type=float, default=0.0, help="AWGN std, 8-bit units")
    synth.add_argument("--spin", type=float, default=0.0, help="salt-and-pepper ratio")
    synth.add_argument("--rvin", type=float, default=0.0, help="random-valued ratio")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--mask", default=None, help="also write the label map here")
    synth.set_defaults(func=cmd_synth)

    den = sub.add_parser("denoise", help="restore a mixed-noise image")
    den.add_argument("--in", dest="input", required=True)
    den.add_argument("--out", required=True)
    den.add_argument("--ref", default=None, help="clean reference for scoring")
    den.add_argument("--kind", choices=("spin", "rvin", "both"), default="both")
    den.add_argument("--weight-rule", dest="weight_rule",
                     choices=("pareto", "rcsr", "ones", "oracle"), default=None)
    den.add_argument("--mask", default=None, help="label map for the oracle weight rule")
    den.add_argument("--xi", type=float, default=None, help="rcsr decay scale, unit-intensity variance")
    den.add_argument("--patch", type=int, default=None)
    den.add_argument("--k", type=int, default=None)
    den.add_argument("--stride", type=int, default=None)
    den.add_argument("--window", type=int, default=None)
    den.add_argument("--beta", type=float, default=None)
    den.add_argument("--inner", type=int, default=None)
    den.add_argument("--outer", type=int, default=None)
    den.add_argument("--gamma-scope", dest="gamma_scope", choices=("local", "global"), default=None)
    den.add_argument("--init-only", dest="init_only", action="store_true")
    den.add_argument("--report", default=None, help="write per-iteration report CSV here")
    den.set_defaults(func=cmd_denoise)

    bench = sub.add_parser("bench", help="run a manifest of synth+denoise cells")
    bench.add_argument("manifest")
    bench.add_argument("--out", default="bench_results.csv")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ManifestError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (ImageFormatError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_IO
    except (NumericalError, FloatingPointError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
