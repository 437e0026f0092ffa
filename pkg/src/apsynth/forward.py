"""Array-camera measurement simulation.

Three equivalent noise-free measurement paths (the first two are the
correctness oracle pair; the third is what the cameras record):

- measure_fullres: mask the object's DC-centered spectrum with the aperture
  passband, inverse-transform, take |.|^2 at full field resolution.
- measure_spatial: multiply the object by the aperture's linear phase tilt,
  circularly convolve with the centered-aperture impulse response, |.|^2.
  Numerically identical to measure_fullres by the Fourier-shift theorem.
- measure_decimated: inverse-transform only the d x d spectrum window around
  the aperture center (the tilt carrier is demodulated by the re-centering),
  giving the camera-pixel-limited d x d image. Shares the exact coefficient
  set with measure_fullres, so total energy matches to rounding.

Poisson photon noise scales intensities so the bright-field mean is 1, then
multiplies by the expected photon count n (divided across snapshots in
total_shared budget mode) and draws independent per-pixel counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as raster_io
from .apertures import (
    ApertureSpec,
    LayoutError,
    SnapshotSchedule,
    StrategyLayout,
    layout_from_json,
    layout_to_json,
    local_passband_mask,
    window_slices,
)
from .fields import fft2, fftshift, ifft2, ifftshift

__all__ = [
    "PhotonModel",
    "StackEntry",
    "MeasurementStack",
    "SpatialOracleConfig",
    "measure_fullres",
    "measure_decimated",
    "measure_spatial",
    "simulate",
]


@dataclass(frozen=True)
class PhotonModel:
    """Poisson noise model: n = expected photons per bright-field pixel."""

    n: float
    budget_mode: str = "per_snapshot"  # or "total_shared"
    normalization: str = "brightfield_mean"
    rng_seed: int = 0

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError(f"photon count n must be > 0, got {self.n}")
        if self.budget_mode not in ("per_snapshot", "total_shared"):
            raise ValueError(f"unknown budget_mode {self.budget_mode!r}")
        if self.normalization != "brightfield_mean":
            raise ValueError(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True)
class SpatialOracleConfig:
    """Parameters of the spatial-domain measurement path.

    tilt_scale is the linear phase slope in radians per (pixel * pixel); the
    default 2*pi/N is the discrete Fourier-shift value, the one for which the
    spatial path equals the Fourier path exactly.
    """

    tilt_scale: float | None = None
    psf_support: int | None = None


@dataclass
class StackEntry:
    snapshot: int
    aperture_index: int
    spec: ApertureSpec  # effective (snapshot-shifted) aperture
    image: np.ndarray
    partial: bool = False


@dataclass
class MeasurementStack:
    """Per-aperture intensity images for one object and acquisition."""

    entries: list[StackEntry]
    object_id: str
    field_size: int
    photon: PhotonModel | None
    photon_scale: float  # counts per unit natural intensity; 1.0 if noise-free
    layout_doc: dict

    def __post_init__(self):
        for e in self.entries:
            d = e.spec.diameter
            if e.image.shape != (d, d):
                raise ValueError(
                    f"entry s{e.snapshot}_a{e.aperture_index}: image {e.image.shape} "
                    f"does not match aperture d={d}"
                )
            if not np.all(np.isfinite(e.image)):
                raise ValueError(
                    f"entry s{e.snapshot}_a{e.aperture_index}: non-finite values"
                )

    @property
    def brightfield_index(self) -> int:
        """Index of the most-central snapshot-0 entry (the bright field)."""
        best, best_r = 0, float("inf")
        for i, e in enumerate(self.entries):
            if e.snapshot != 0:
                continue
            r = e.spec.center_u**2 + e.spec.center_v**2
            if r < best_r:
                best, best_r = i, r
        return best

    def natural_images(self) -> list[np.ndarray]:
        """Entry images divided by the photon scale (noise-free units)."""
        return [e.image / self.photon_scale for e in self.entries]

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": "apsynth-stack",
            "version": 1,
            "object_id": self.object_id,
            "field_size": self.field_size,
            "layout": self.layout_doc,
            "photon": None
            if self.photon is None
            else {
                "n": self.photon.n,
                "budget_mode": self.photon.budget_mode,
                "normalization": self.photon.normalization,
                "rng_seed": self.photon.rng_seed,
            },
            "photon_scale": self.photon_scale,
            "entries": [
                {
                    "snapshot": e.snapshot,
                    "aperture": e.aperture_index,
                    "u": e.spec.center_u,
                    "v": e.spec.center_v,
                    "d": e.spec.diameter,
                    "partial": e.partial,
                    "file": f"s{e.snapshot}_a{e.aperture_index}.cafp",
                }
                for e in self.entries
            ],
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        for e in self.entries:
            raster_io.write_tensor(
                e.image.astype(np.float32),
                directory / f"s{e.snapshot}_a{e.aperture_index}.cafp",
            )

    @classmethod
    def load(cls, directory) -> "MeasurementStack":
        directory = Path(directory)
        manifest_path = directory / "manifest.json"
        if not manifest_path.is_file():
            raise IOError(f"{directory} is not a measurement stack (no manifest.json)")
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("format") != "apsynth-stack":
            raise IOError(f"{manifest_path}: not an apsynth stack manifest")
        photon = None
        if manifest.get("photon"):
            photon = PhotonModel(**manifest["photon"])
        entries = []
        for doc in manifest["entries"]:
            image = raster_io.read_tensor(directory / doc["file"]).astype(np.float64)
            entries.append(
                StackEntry(
                    snapshot=int(doc["snapshot"]),
                    aperture_index=int(doc["aperture"]),
                    spec=ApertureSpec(doc["u"], doc["v"], int(doc["d"])),
                    image=image,
                    partial=bool(doc.get("partial", False)),
                )
            )
        return cls(
            entries=entries,
            object_id=manifest["object_id"],
            field_size=int(manifest["field_size"]),
            photon=photon,
            photon_scale=float(manifest.get("photon_scale", 1.0)),
            layout_doc=manifest["layout"],
        )


# Measurement paths -----------------------------------------------------------


def _passband_full(spec: ApertureSpec, n: int) -> np.ndarray:
    """Effective measurement passband embedded in the full field: the disk
    restricted to its d x d window, clipped at the field boundary."""
    (r0, r1, c0, c1), (lr0, lr1, lc0, lc1) = window_slices(spec, n)
    mask = np.zeros((n, n), dtype=bool)
    mask[r0:r1, c0:c1] = local_passband_mask(spec.diameter)[lr0:lr1, lc0:lc1]
    return mask


def _as_field(obj: np.ndarray, square: bool = True) -> np.ndarray:
    arr = np.asarray(obj)
    if arr.ndim != 2:
        raise ValueError(f"object must be 2-D, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"object must be square, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("object contains non-finite values")
    return arr.astype(np.complex128)


def measure_fullres(obj: np.ndarray, spec: ApertureSpec) -> np.ndarray:
    """Noise-free full-resolution intensity through one aperture."""
    field = _as_field(obj)
    n = field.shape[0]
    if not spec.in_field(n):
        raise LayoutError(f"aperture {spec} exceeds field of size {n}")
    spectrum = fftshift(fft2(field))
    out = ifft2(ifftshift(spectrum * _passband_full(spec, n)))
    return np.abs(out) ** 2


def _decimate_spectrum(spectrum: np.ndarray, spec: ApertureSpec, allow_partial: bool):
    """d x d demodulated sub-spectrum under one aperture (DC-centered input)."""
    n = spectrum.shape[0]
    partial = not spec.in_field(n)
    if partial and not allow_partial:
        raise LayoutError(f"aperture {spec} exceeds field of size {n}")
    d = spec.diameter
    (r0, r1, c0, c1), (lr0, lr1, lc0, lc1) = window_slices(spec, n)
    sub = np.zeros((d, d), dtype=spectrum.dtype)
    sub[lr0:lr1, lc0:lc1] = spectrum[r0:r1, c0:c1]
    sub *= local_passband_mask(d)
    return sub, partial


def measure_decimated(
    obj: np.ndarray, spec: ApertureSpec, allow_partial: bool = False
) -> np.ndarray:
    """Noise-free d x d camera image through one aperture.

    Requires an integer aperture center so the crop window aligns to the
    spectrum grid. Total intensity equals measure_fullres exactly (identical
    spectrum coefficients, orthonormal transforms).
    """
    field = _as_field(obj)
    spectrum = fftshift(fft2(field))
    sub, _ = _decimate_spectrum(spectrum, spec, allow_partial)
    return np.abs(ifft2(ifftshift(sub))) ** 2


def measure_spatial(
    obj: np.ndarray, spec: ApertureSpec, cfg: SpatialOracleConfig | None = None
) -> np.ndarray:
    """Spatial-path measurement: tilt the object, convolve with the centered
    aperture's impulse response, take |.|^2.

    With the default tilt scale 2*pi/N this equals measure_fullres to
    rounding; it is the independent oracle for the Fourier path.
    """
    cfg = cfg or SpatialOracleConfig()
    field = _as_field(obj)
    n = field.shape[0]
    if not spec.in_field(n):
        raise LayoutError(f"aperture {spec} exceeds field of size {n}")
    tilt_scale = cfg.tilt_scale if cfg.tilt_scale is not None else 2.0 * np.pi / n
    x = np.arange(n)
    phase = tilt_scale * (spec.center_u * x[None, :] + spec.center_v * x[:, None])
    # Negative sign: with the e^{-2 pi i kx/N} forward-DFT convention this
    # demodulates the +center band onto the centered pupil.
    tilted = field * np.exp(-1j * phase)

    centered = ApertureSpec(0.0, 0.0, spec.diameter)
    pupil = _passband_full(centered, n)
    psf = ifft2(ifftshift(pupil))
    if cfg.psf_support is not None and cfg.psf_support < n:
        # Optional truncation: keep only the central support of the PSF.
        k = cfg.psf_support
        keep = np.zeros((n, n), dtype=bool)
        c = n // 2
        keep[c - k // 2 : c - k // 2 + k, c - k // 2 : c - k // 2 + k] = True
        psf = np.where(np.fft.ifftshift(keep), psf, 0.0)
    # Circular convolution with unit-energy normalization (matches the
    # orthonormal-transform convention of the Fourier path).
    out = ifft2(fft2(tilted) * fft2(psf))
    return np.abs(out) ** 2


# Full stack simulation ---------------------------------------------------------


def _entry_rng(seed: int, entry_index: int) -> np.random.Generator:
    # Independent stream per entry: results do not depend on execution order.
    return np.random.default_rng([seed, entry_index])


def simulate(
    obj: np.ndarray,
    layout_or_schedule,
    photon: PhotonModel | None = None,
    object_id: str = "object",
) -> MeasurementStack:
    """Simulate the full measurement stack for one object.

    The object is a real image in [0, 1] used directly as the (zero-phase)
    object field. Noise-free entries are the decimated intensities; with a
    photon model they are scaled so the bright-field mean is n expected
    photons per pixel (n/k per snapshot in total_shared mode) and replaced by
    independent Poisson draws.
    """
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"object must be a square 2-D image, got {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1 + 1e-6:
        raise ValueError("object values must be finite and in [0, 1]")

    if isinstance(layout_or_schedule, SnapshotSchedule):
        schedule = layout_or_schedule
        layout = schedule.base
    elif isinstance(layout_or_schedule, StrategyLayout):
        layout = layout_or_schedule
        schedule = SnapshotSchedule(layout, ((0, 0),))
    else:
        raise TypeError(f"expected layout or schedule, got {type(layout_or_schedule)}")
    if not layout.apertures:
        raise LayoutError("empty layout")
    n = layout.field_size
    if arr.shape[0] != n:
        raise ValueError(f"object is {arr.shape[0]}^2 but layout field is {n}^2")

    spectrum = fftshift(fft2(arr.astype(np.complex128)))
    entries: list[StackEntry] = []
    for s_idx in range(schedule.k):
        for a_idx, spec in enumerate(schedule.snapshot_apertures(s_idx)):
            sub, partial = _decimate_spectrum(spectrum, spec, allow_partial=s_idx > 0)
            image = np.abs(ifft2(ifftshift(sub))) ** 2
            entries.append(StackEntry(s_idx, a_idx, spec, image, partial))

    photon_scale = 1.0
    if photon is not None:
        stack_tmp = MeasurementStack(
            entries, object_id, n, None, 1.0, layout_to_json(layout_or_schedule)
        )
        bf_mean = float(entries[stack_tmp.brightfield_index].image.mean())
        if bf_mean <= 0:
            raise ValueError("bright-field measurement has zero mean; cannot set photon scale")
        n_eff = photon.n / schedule.k if photon.budget_mode == "total_shared" else photon.n
        photon_scale = n_eff / bf_mean
        for i, e in enumerate(entries):
            lam = e.image * photon_scale
            e.image = _entry_rng(photon.rng_seed, i).poisson(lam).astype(np.float64)

    return MeasurementStack(
        entries=entries,
        object_id=object_id,
        field_size=n,
        photon=photon,
        photon_scale=photon_scale,
        layout_doc=layout_to_json(layout_or_schedule),
    )
