"""Dataset construction: patch cropping, synthetic binary patterns,
augmentation, and materialized (ground truth, measurement stack) pairs.

A materialized dataset directory looks like:

    manifest.json
    train.txt / val.txt / test.txt
    samples/{id}/gt.png
    samples/{id}/stack/manifest.json + s{s}_a{a}.cafp

Everything is seeded; rebuilding from the same manifest parameters gives
byte-identical trees (no timestamps anywhere).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from . import io as raster_io
from .apertures import layout_from_json, layout_to_json
from .forward import PhotonModel, simulate

__all__ = [
    "DatasetManifest",
    "PRESETS",
    "crop_patches",
    "gen_binary_patterns",
    "augment",
    "build_pairs",
    "build_slm_dataset",
]

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}

# Patch-count presets; "sim512" matches the full-scale protocol, "desk64" is
# the CI-runnable default scale.
PRESETS = {
    "sim512": {"patch_size": 512, "counts": (15000, 2500, 2500)},
    "desk512": {"patch_size": 512, "counts": (200, 25, 25)},
    "desk64": {"patch_size": 64, "counts": (200, 25, 25)},
    "slm": {"target_size": (600, 800), "lowres_size": (90, 120), "counts": (20000, 0, 3200)},
}


@dataclass
class DatasetManifest:
    name: str
    patch_size: int
    counts: dict
    split_seed: int
    crop_seed: int
    layout: dict
    photon: dict | None
    augmentations: list = field(default_factory=list)
    source_names: list = field(default_factory=list)
    samples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "format": "apsynth-dataset",
            "version": 1,
            "name": self.name,
            "patch_size": self.patch_size,
            "counts": self.counts,
            "split_seed": self.split_seed,
            "crop_seed": self.crop_seed,
            "layout": self.layout,
            "photon": self.photon,
            "augmentations": self.augmentations,
            "source_names": self.source_names,
            "samples": self.samples,
        }

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != "apsynth-dataset":
            raise IOError(f"{path}: not an apsynth dataset manifest")
        return cls(
            name=doc["name"],
            patch_size=doc["patch_size"],
            counts=doc["counts"],
            split_seed=doc["split_seed"],
            crop_seed=doc["crop_seed"],
            layout=doc["layout"],
            photon=doc.get("photon"),
            augmentations=doc.get("augmentations", []),
            source_names=doc.get("source_names", []),
            samples=doc.get("samples", []),
        )


# Patch extraction ------------------------------------------------------------


def crop_patches(image_dir, patch_size: int = 512, count: int = 100, seed: int = 0):
    """Seeded random grayscale patches from a directory of source images.

    Returns (patches, provenance): patches are [0,1] float arrays, provenance
    records (source file, row, col) per patch; crops are deduplicated by
    source+offset.
    """
    image_dir = Path(image_dir)
    paths = sorted(
        p for p in image_dir.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    sources = []
    for p in paths:
        img = raster_io.load_png(p)
        if img.shape[0] >= patch_size and img.shape[1] >= patch_size:
            sources.append((p.name, img))
    if count > 0 and not sources:
        raise ValueError(
            f"no source image in {image_dir} is at least {patch_size}x{patch_size}"
        )
    rng = np.random.default_rng(seed)
    patches, provenance, seen = [], [], set()
    attempts = 0
    while len(patches) < count:
        attempts += 1
        if attempts > 100 * count + 100:
            raise ValueError(
                f"could not draw {count} distinct {patch_size}^2 patches "
                f"from {len(sources)} sources"
            )
        si = int(rng.integers(len(sources)))
        name, img = sources[si]
        r = int(rng.integers(img.shape[0] - patch_size + 1))
        c = int(rng.integers(img.shape[1] - patch_size + 1))
        key = (si, r, c)
        if key in seen:
            continue
        seen.add(key)
        patches.append(img[r : r + patch_size, c : c + patch_size].copy())
        provenance.append({"source": name, "row": r, "col": c})
    return patches, provenance


# Synthetic binary patterns ----------------------------------------------------


def _draw_random_shape(draw: ImageDraw.ImageDraw, w: int, h: int, rng) -> None:
    kind = rng.integers(5)
    if kind == 0:  # line
        pts = [tuple(rng.integers((w, h))) for _ in range(2)]
        draw.line(pts, fill=255, width=int(rng.integers(2, 14)))
    elif kind == 1:  # polygon
        k = int(rng.integers(3, 7))
        cx, cy = rng.integers((w, h))
        rad = int(rng.integers(20, max(21, min(w, h) // 3)))
        angs = np.sort(rng.uniform(0, 2 * np.pi, size=k))
        pts = [(int(cx + rad * np.cos(a)), int(cy + rad * np.sin(a))) for a in angs]
        draw.polygon(pts, fill=255 if rng.random() < 0.5 else None, outline=255, width=int(rng.integers(2, 8)))
    elif kind == 2:  # ellipse
        cx, cy = rng.integers((w, h))
        rx, ry = rng.integers(10, max(11, min(w, h) // 4), size=2)
        box = [int(cx - rx), int(cy - ry), int(cx + rx), int(cy + ry)]
        draw.ellipse(box, fill=255 if rng.random() < 0.5 else None, outline=255, width=int(rng.integers(2, 8)))
    elif kind == 3:  # rectangle
        x0, y0 = rng.integers((w, h))
        x1 = int(x0 + rng.integers(10, w // 3 + 11))
        y1 = int(y0 + rng.integers(10, h // 3 + 11))
        draw.rectangle([int(x0), int(y0), x1, y1], fill=255 if rng.random() < 0.5 else None, outline=255, width=int(rng.integers(2, 8)))
    else:  # text-like stroke: short connected polyline
        k = int(rng.integers(3, 6))
        x, y = (int(v) for v in rng.integers((w, h)))
        pts = [(x, y)]
        for _ in range(k):
            x = int(np.clip(x + rng.integers(-60, 61), 0, w - 1))
            y = int(np.clip(y + rng.integers(-60, 61), 0, h - 1))
            pts.append((x, y))
        draw.line(pts, fill=255, width=int(rng.integers(2, 10)), joint="curve")


def pattern_shape_counts(count: int, seed: int = 0, shapes_range=(4, 12)) -> list[int]:
    """Per-image shape counts of gen_binary_patterns (same seeded streams)."""
    lo, hi = shapes_range
    return [int(np.random.default_rng([seed, i]).integers(lo, hi + 1)) for i in range(count)]


def gen_binary_patterns(
    count: int,
    width: int = 768,
    height: int = 576,
    pad_to: tuple[int, int] | None = (600, 800),
    seed: int = 0,
    shapes_range: tuple[int, int] = (4, 12),
):
    """Seeded random binary images of geometric shapes, zero-padded.

    Each image draws from its own (seed, index) stream, the first value being
    its shape count. pad_to is (height, width) of the padded canvas; padding
    splits evenly (576x768 -> 600x800 pads 12 rows and 16 columns per side).
    """
    lo, hi = shapes_range
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        img = Image.new("L", (width, height), 0)
        draw = ImageDraw.Draw(img)
        for _ in range(int(rng.integers(lo, hi + 1))):
            _draw_random_shape(draw, width, height, rng)
        arr = (np.asarray(img) > 127).astype(np.float64)
        if pad_to is not None:
            ph, pw = pad_to
            if ph < height or pw < width:
                raise ValueError(f"pad_to {pad_to} smaller than pattern {height}x{width}")
            top, left = (ph - height) // 2, (pw - width) // 2
            arr = np.pad(arr, ((top, ph - height - top), (left, pw - width - left)))
        out.append(arr)
    return out


# Augmentation -----------------------------------------------------------------


def flip_image(img: np.ndarray, horizontal: bool) -> np.ndarray:
    return img[:, ::-1].copy() if horizontal else img[::-1, :].copy()


def rotate_image(img: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the center, nearest-neighbor (binary stays binary)."""
    if degrees == 0.0:
        return img.copy()
    pil = Image.fromarray((img * 255).astype(np.uint8))
    rot = pil.rotate(degrees, resample=Image.NEAREST, fillcolor=0)
    return np.asarray(rot, dtype=np.float64) / 255.0


def scale_image(img: np.ndarray, factor: float) -> np.ndarray:
    """Rescale about the center, keeping the canvas size (nearest-neighbor)."""
    if factor == 1.0:
        return img.copy()
    h, w = img.shape
    nh, nw = max(1, round(h * factor)), max(1, round(w * factor))
    pil = Image.fromarray((img * 255).astype(np.uint8)).resize((nw, nh), Image.NEAREST)
    arr = np.asarray(pil, dtype=np.float64) / 255.0
    out = np.zeros((h, w))
    if factor >= 1.0:
        r0, c0 = (nh - h) // 2, (nw - w) // 2
        out = arr[r0 : r0 + h, c0 : c0 + w].copy()
    else:
        r0, c0 = (h - nh) // 2, (w - nw) // 2
        out[r0 : r0 + nh, c0 : c0 + nw] = arr
    return out


def augment(
    images,
    ops=("rotate", "flip", "scale"),
    count: int | None = None,
    factor: int | None = None,
    seed: int = 0,
    rotate_range: tuple[float, float] = (-25.0, 25.0),
    scale_range: tuple[float, float] = (0.8, 1.25),
):
    """Deterministically expand an image set by seeded random ops.

    Either `count` (total outputs) or `factor` (outputs per input) sets the
    output size; sources are used round-robin. 2665 inputs with count=23200
    reproduces the binary-pattern dataset arithmetic.
    """
    if count is None:
        count = len(images) * (factor if factor is not None else 1)
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        img = images[i % len(images)]
        if "rotate" in ops and rng.random() < 0.75:
            img = rotate_image(img, float(rng.uniform(*rotate_range)))
        if "flip" in ops and rng.random() < 0.5:
            img = flip_image(img, horizontal=bool(rng.integers(2)))
        if "scale" in ops and rng.random() < 0.5:
            img = scale_image(img, float(rng.uniform(*scale_range)))
        if img is images[i % len(images)]:
            img = img.copy()
        out.append(img)
    return out


# Materialized pairs -----------------------------------------------------------


def _split_ids(ids, counts, seed):
    rng = np.random.default_rng(seed)
    order = list(ids)
    rng.shuffle(order)
    n_train, n_val, n_test = counts
    if n_train + n_val + n_test > len(order):
        raise ValueError(f"split counts {counts} exceed {len(order)} samples")
    return (
        sorted(order[:n_train]),
        sorted(order[n_train : n_train + n_val]),
        sorted(order[n_train + n_val : n_train + n_val + n_test]),
    )


def _materialize_sample(args):
    sample_dir, patch, layout_obj, photon, sim_seed, index = args
    sample_dir.mkdir(parents=True, exist_ok=True)
    gt_path = sample_dir / "gt.png"
    raster_io.save_png(patch, gt_path, bit_depth=16)
    # Simulate from the quantized PNG so a rebuild from disk is bit-identical.
    gt = raster_io.load_png(gt_path)
    pm = None
    if photon is not None:
        pm = PhotonModel(
            n=photon["n"],
            budget_mode=photon.get("budget_mode", "per_snapshot"),
            normalization=photon.get("normalization", "brightfield_mean"),
            rng_seed=sim_seed + index,
        )
    stack = simulate(gt, layout_obj, pm, object_id=sample_dir.name)
    stack.save(sample_dir / "stack")


def build_pairs(
    patches,
    layout_or_schedule,
    photon: dict | None,
    out_dir,
    counts: tuple[int, int, int],
    split_seed: int = 0,
    sim_seed: int = 0,
    name: str = "dataset",
    crop_seed: int = 0,
    source_names=(),
    threads: int = 1,
) -> DatasetManifest:
    """Materialize (gt.png, stack/) sample directories plus split files.

    `photon` is the JSON photon description ({"n": ..., "budget_mode": ...})
    or None for noise-free; per-sample noise seeds derive from sim_seed.
    """
    out_dir = Path(out_dir)
    ids = [f"{i:05d}" for i in range(len(patches))]
    train, val, test = _split_ids(ids, counts, split_seed)

    jobs = [
        (out_dir / "samples" / sid, patch, layout_or_schedule, photon, sim_seed, i)
        for i, (sid, patch) in enumerate(zip(ids, patches))
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_materialize_sample, jobs))
    else:
        for job in jobs:
            _materialize_sample(job)

    for fname, members in (("train.txt", train), ("val.txt", val), ("test.txt", test)):
        (out_dir / fname).write_text("".join(m + "\n" for m in members))

    manifest = DatasetManifest(
        name=name,
        patch_size=int(np.asarray(patches[0]).shape[0]) if patches else 0,
        counts={"train": counts[0], "val": counts[1], "test": counts[2]},
        split_seed=split_seed,
        crop_seed=crop_seed,
        layout=layout_to_json(layout_or_schedule),
        photon=photon,
        source_names=list(source_names),
        samples=ids,
    )
    (out_dir / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")
    return manifest


def build_slm_dataset(
    count: int,
    out_dir,
    seed: int = 0,
    target_size: tuple[int, int] = (600, 800),
    lowres_size: tuple[int, int] = (90, 120),
    counts: tuple[int, int, int] | None = None,
) -> None:
    """Qualitative SLM-style preset: binary targets plus ~6.7x downsampled
    low-resolution views (no Fourier stacks; does not model the optics)."""
    out_dir = Path(out_dir)
    ph, pw = target_size
    patterns = gen_binary_patterns(
        count, width=pw * 768 // 800, height=ph * 576 // 600, pad_to=target_size, seed=seed
    )
    ids = [f"{i:05d}" for i in range(count)]
    for sid, pattern in zip(ids, patterns):
        sample = out_dir / "samples" / sid
        sample.mkdir(parents=True, exist_ok=True)
        raster_io.save_png(pattern, sample / "gt.png")
        pil = Image.fromarray((pattern * 255).astype(np.uint8))
        low = pil.resize((lowres_size[1], lowres_size[0]), Image.BICUBIC)
        raster_io.save_png(np.asarray(low, dtype=np.float64) / 255.0, sample / "lowres.png")
    if counts is None:
        counts = (count, 0, 0)
    train, val, test = _split_ids(ids, counts, seed)
    for fname, members in (("train.txt", train), ("val.txt", val), ("test.txt", test)):
        (out_dir / fname).write_text("".join(m + "\n" for m in members))
    doc = {
        "format": "apsynth-dataset",
        "version": 1,
        "name": "slm",
        "patch_size": list(target_size),
        "lowres_size": list(lowres_size),
        "counts": {"train": counts[0], "val": counts[1], "test": counts[2]},
        "split_seed": seed,
        "crop_seed": seed,
        "layout": None,
        "photon": None,
        "augmentations": [],
        "source_names": [],
        "samples": ids,
    }
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")
