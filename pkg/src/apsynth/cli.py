"""Command-line surface: apsynth <layout|simulate|reconstruct|metrics|dataset>.

All randomness is controlled by --seed; --json prints a machine-readable
summary on stdout; --threads (or APSYNTH_THREADS) caps worker parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import apertures, datasets, forward, metrics, recon
from . import io as raster_io

__all__ = ["main"]


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("APSYNTH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _emit(args, human: str, payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload))
    else:
        print(human)


def _coverage_png(layout_or_schedule, path) -> None:
    if isinstance(layout_or_schedule, apertures.SnapshotSchedule):
        sched = layout_or_schedule
        n = sched.base.field_size
        union = np.zeros((n, n))
        for s in range(sched.k):
            for spec in sched.snapshot_apertures(s):
                union += apertures.disk_mask(spec, n, allow_partial=True)
    else:
        n = layout_or_schedule.field_size
        union = np.zeros((n, n))
        for spec in layout_or_schedule.apertures:
            union += apertures.disk_mask(spec, n, allow_partial=True)
    peak = union.max()
    raster_io.save_png(union / peak if peak > 0 else union, path)


def cmd_layout(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.strategy == "fp":
        obj = apertures.build_fp_grid(
            field_size=args.field_size, d=args.diameter, count=args.count, overlap=args.overlap
        )
        base = obj
    elif args.strategy == "schedule":
        base = apertures.build_strategy(4, field_size=args.field_size, seed=args.seed)
        obj = apertures.build_snapshot_schedule(base, args.k, seed=args.seed)
    else:
        obj = apertures.build_strategy(int(args.strategy), field_size=args.field_size, seed=args.seed)
        base = obj
    apertures.save_layout(obj, out / "layout.json")
    _coverage_png(obj, out / "coverage.png")
    cov = apertures.coverage(obj)
    mp = apertures.measured_pixels(base)
    n_aps = len(base.apertures)
    payload = {
        "strategy": args.strategy,
        "apertures": n_aps,
        "measured_pixels": mp,
        "coverage_percent": round(100.0 * cov, 4),
        "layout": str(out / "layout.json"),
    }
    if args.strategy == "schedule":
        payload["snapshots"] = obj.k
        payload["shifts"] = [list(s) for s in obj.shifts]
    _emit(
        args,
        f"strategy {args.strategy}: {n_aps} apertures, "
        f"{mp} measured pixels, coverage {100.0 * cov:.1f}%",
        payload,
    )
    return 0


def cmd_simulate(args) -> int:
    layout = apertures.load_layout(args.layout)
    obj = raster_io.load_png(args.object)
    photon = None
    if args.photons is not None:
        photon = forward.PhotonModel(
            n=args.photons,
            budget_mode="total_shared" if args.budget == "shared" else "per_snapshot",
            rng_seed=args.seed,
        )
    stack = forward.simulate(obj, layout, photon, object_id=Path(args.object).stem)
    stack.save(args.out)
    _emit(
        args,
        f"wrote {len(stack.entries)} measurements to {args.out}"
        + ("" if photon is None else f" (Poisson n={args.photons:g}, {args.budget})"),
        {
            "entries": len(stack.entries),
            "out": str(args.out),
            "photon_scale": stack.photon_scale,
            "noise_free": photon is None,
        },
    )
    return 0


def cmd_reconstruct(args) -> int:
    stack = forward.MeasurementStack.load(args.stack)
    init_image = None
    if args.init is not None:
        path = Path(args.init)
        if path.suffix == ".cafp":
            init_image = raster_io.read_tensor(path).astype(np.float64)
        else:
            init_image = raster_io.load_png(path)
    config = recon.APConfig(
        max_sweeps=args.sweeps,
        tol=args.tol,
        init="external_image" if init_image is not None else "brightfield_upsample",
        clamp_nonnegative_object=not args.no_clamp,
    )
    result = recon.ap_reconstruct(stack, config, init_image)
    out = Path(args.out)
    result.save(out, write_spectrum=args.spectrum)
    payload = {
        "sweeps_run": result.sweeps_run,
        "final_misfit": result.residual_log[-1],
        "out": str(out),
    }
    line = f"reconstructed in {result.sweeps_run} sweeps, final misfit {result.residual_log[-1]:.3e}"
    if args.gt is not None:
        gt = raster_io.load_png(args.gt)
        amp = np.clip(result.amplitude, 0.0, 1.0)
        report = metrics.compute_report(amp, gt)
        payload["metrics"] = report.to_dict()
        line += f"; PSNR {report.psnr:.2f} dB, SSIM {report.ssim:.4f}"
    _emit(args, line, payload)
    return 0


def _metric_pairs(a: Path, b: Path):
    if a.is_dir() != b.is_dir():
        raise ValueError("--a and --b must both be files or both directories")
    if not a.is_dir():
        return [(a.name, a, b)]
    names = sorted(p.name for p in a.iterdir() if p.suffix.lower() == ".png")
    pairs = []
    for n in names:
        if (b / n).is_file():
            pairs.append((n, a / n, b / n))
    if not pairs:
        raise ValueError(f"no matching PNG pairs between {a} and {b}")
    return pairs


def cmd_metrics(args) -> int:
    pairs = _metric_pairs(Path(args.a), Path(args.b))
    rows = []
    for name, pa, pb in pairs:
        rows.append((name, metrics.compute_report(raster_io.load_png(pa), raster_io.load_png(pb))))
    if args.report == "csv":
        text = metrics.reports_to_csv(rows)
    elif len(rows) == 1:
        text = rows[0][1].to_json()
    else:
        text = json.dumps({name: rep.to_dict() for name, rep in rows}, indent=2)
    if args.out:
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
        print(f"wrote {args.report} report for {len(rows)} pair(s) to {args.out}")
    else:
        print(text, end="" if text.endswith("\n") else "\n")
    return 0


def cmd_dataset(args) -> int:
    out = Path(args.out)
    if args.preset == "slm":
        counts = tuple(args.counts) if args.counts else None
        n = sum(counts) if counts else 32
        datasets.build_slm_dataset(n, out, seed=args.seed, counts=counts)
        _emit(args, f"wrote SLM-style dataset ({n} samples) to {out}", {"samples": n, "out": str(out)})
        return 0

    preset = datasets.PRESETS[args.preset]
    patch_size = preset["patch_size"]
    counts = tuple(args.counts) if args.counts else preset["counts"]
    total = sum(counts)

    if args.layout:
        layout = apertures.load_layout(args.layout)
    elif patch_size == 64:
        layout = apertures.build_mini_layout(field_size=64, diameter=16, seed=args.seed)
    else:
        layout = apertures.build_strategy(4, field_size=patch_size, seed=args.seed)

    if args.sources:
        patches, provenance = datasets.crop_patches(args.sources, patch_size, total, seed=args.seed)
        source_names = sorted({p["source"] for p in provenance})
    else:
        # No sources: deterministic synthetic natural-like patches.
        patches = _synthetic_patches(total, patch_size, seed=args.seed)
        source_names = ["synthetic"]

    photon = None
    if args.photons is not None:
        photon = {
            "n": args.photons,
            "budget_mode": "total_shared" if args.budget == "shared" else "per_snapshot",
            "normalization": "brightfield_mean",
        }
    datasets.build_pairs(
        patches,
        layout,
        photon,
        out,
        counts,
        split_seed=args.seed,
        sim_seed=args.seed,
        name=args.preset,
        crop_seed=args.seed,
        source_names=source_names,
        threads=_threads(args),
    )
    _emit(
        args,
        f"wrote {total} sample pairs ({counts[0]}/{counts[1]}/{counts[2]} train/val/test) to {out}",
        {"samples": total, "counts": list(counts), "out": str(out)},
    )
    return 0


def _synthetic_patches(count: int, size: int, seed: int = 0):
    """Natural-like test patches: 1/f-filtered noise plus geometric occluders."""
    from .fields import fft2, fftshift, ifft2, ifftshift

    rng = np.random.default_rng(seed)
    freq = np.fft.fftfreq(size)
    rad = np.sqrt(freq[:, None] ** 2 + freq[None, :] ** 2)
    rad[0, 0] = 1.0 / size
    patches = []
    for _ in range(count):
        spec = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / rad
        img = np.fft.ifft2(spec).real
        img = (img - img.min()) / (img.max() - img.min() + 1e-12)
        for _ in range(int(rng.integers(1, 4))):
            r0, c0 = rng.integers(0, size, size=2)
            rh, cw = rng.integers(size // 8, size // 3, size=2)
            img[r0 : r0 + rh, c0 : c0 + cw] = rng.random()
        patches.append(np.clip(img, 0.0, 1.0))
    return patches


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apsynth",
        description="Snapshot coherent aperture synthesis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
        p.add_argument("--threads", type=int, default=None, help="worker cap (APSYNTH_THREADS fallback)")
        p.add_argument("--json", action="store_true", help="machine-readable stdout")

    p = sub.add_parser("layout", help="build an aperture layout or snapshot schedule")
    p.add_argument("--strategy", required=True, help="1..10, fp, or schedule")
    p.add_argument("--k", type=int, default=6, help="snapshots (schedule only)")
    p.add_argument("--field-size", type=int, default=512)
    p.add_argument("--diameter", type=int, default=128, help="aperture diameter (fp only)")
    p.add_argument("--count", type=int, default=100, help="aperture count (fp only)")
    p.add_argument("--overlap", type=float, default=0.61, help="area overlap (fp only)")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("simulate", help="simulate a measurement stack for one object")
    p.add_argument("--layout", required=True, help="layout/schedule JSON file")
    p.add_argument("--object", required=True, help="object PNG in [0,1]")
    p.add_argument("--photons", type=float, default=None, help="expected photons n (omit = noise-free)")
    p.add_argument("--budget", choices=("shared", "per"), default="per")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="alternating-projection reconstruction")
    p.add_argument("--stack", required=True, help="measurement stack directory")
    p.add_argument("--init", default=None, help="initialization image (PNG or CAFP)")
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--no-clamp", action="store_true", help="skip nonnegativity projection")
    p.add_argument("--spectrum", action="store_true", help="also write spectrum.cafp")
    p.add_argument("--gt", default=None, help="ground truth PNG for metric report")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="image quality metrics (file pair or directories)")
    p.add_argument("--a", required=True, help="prediction image/directory")
    p.add_argument("--b", required=True, help="reference image/directory")
    p.add_argument("--report", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("dataset", help="materialize a training dataset")
    p.add_argument("--preset", choices=sorted(datasets.PRESETS), default="desk64")
    p.add_argument("--sources", default=None, help="directory of source images")
    p.add_argument("--counts", type=int, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--layout", default=None, help="layout/schedule JSON (default: preset layout)")
    p.add_argument("--photons", type=float, default=None)
    p.add_argument("--budget", choices=("shared", "per"), default="per")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_dataset)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, IOError, apertures.LayoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
