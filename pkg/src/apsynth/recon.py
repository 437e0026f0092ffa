"""Alternating-projection Fourier-ptychographic reconstruction.

Sequential Gerchberg-Saxton-style modulus replacement: for each measurement,
extract the demodulated sub-spectrum under its aperture, inverse-transform,
replace the modulus with the measured one (keeping phase), transform back and
overwrite the spectrum inside the aperture support only. Optionally projects
the object to real nonnegative between sweeps. Fourier pixels outside the
union of aperture supports are only ever touched by that object-space
projection; with it disabled they keep their initialization values exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as raster_io
from .apertures import local_passband_mask, window_slices
from .fields import fft2, fftshift, ifft2, ifftshift, upsample_bicubic
from .forward import MeasurementStack

__all__ = ["APConfig", "ReconResult", "ap_reconstruct", "data_misfit"]


@dataclass(frozen=True)
class APConfig:
    max_sweeps: int = 200
    tol: float = 1e-6                      # relative spectrum change per sweep
    sweep_order: str = "by_diameter_desc"  # raster | by_diameter_desc | seeded_random
    init: str = "brightfield_upsample"     # brightfield_upsample | external_image | flat
    clamp_nonnegative_object: bool = True
    order_seed: int = 0

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.sweep_order not in ("raster", "by_diameter_desc", "seeded_random"):
            raise ValueError(f"unknown sweep_order {self.sweep_order!r}")
        if self.init not in ("brightfield_upsample", "external_image", "flat"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class ReconResult:
    estimate: np.ndarray       # recovered intensity |ifft2(spectrum)|^2
    spectrum: np.ndarray       # DC-centered complex spectrum
    residual_log: list[float]  # per-sweep RMS data misfit
    sweeps_run: int

    @property
    def amplitude(self) -> np.ndarray:
        """Recovered field amplitude sqrt(estimate); commensurate with the
        [0, 1] object image the simulation used as the field."""
        return np.sqrt(np.maximum(self.estimate, 0.0))

    def save(self, directory, write_spectrum: bool = False) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        raster_io.save_png(np.clip(self.estimate, 0.0, 1.0), directory / "estimate.png", bit_depth=16)
        raster_io.save_png(np.clip(self.amplitude, 0.0, 1.0), directory / "amplitude.png", bit_depth=16)
        (directory / "recon.json").write_text(
            json.dumps(
                {"sweeps_run": self.sweeps_run, "residual_log": self.residual_log},
                indent=2,
            )
            + "\n"
        )
        if write_spectrum:
            raster_io.write_tensor(self.spectrum.astype(np.complex64), directory / "spectrum.cafp")


def _entry_geometry(stack: MeasurementStack):
    """Precompute per-entry window slices, local masks and target moduli."""
    n = stack.field_size
    geo = []
    for e in stack.entries:
        (r0, r1, c0, c1), (lr0, lr1, lc0, lc1) = window_slices(e.spec, n)
        local = local_passband_mask(e.spec.diameter).copy()
        # Out-of-field parts of a shifted aperture carry no spectrum.
        inside = np.zeros_like(local)
        inside[lr0:lr1, lc0:lc1] = True
        local &= inside
        target = np.sqrt(np.maximum(e.image, 0.0) / stack.photon_scale)
        geo.append(
            {
                "d": e.spec.diameter,
                "field": (slice(r0, r1), slice(c0, c1)),
                "window": (slice(lr0, lr1), slice(lc0, lc1)),
                "mask": local,
                "target": target,
            }
        )
    return geo


def _extract_sub(spectrum: np.ndarray, g: dict) -> np.ndarray:
    sub = np.zeros((g["d"], g["d"]), dtype=spectrum.dtype)
    sub[g["window"]] = spectrum[g["field"]]
    sub *= g["mask"]
    return sub


def _misfit_from_geometry(geo, spectrum) -> float:
    total, count = 0.0, 0
    for g in geo:
        sim = np.abs(ifft2(ifftshift(_extract_sub(spectrum, g)))) ** 2
        diff = sim - g["target"] ** 2
        total += float((diff * diff).sum())
        count += diff.size
    return float(np.sqrt(total / count))


def data_misfit(stack: MeasurementStack, spectrum: np.ndarray) -> float:
    """RMS intensity mismatch between a spectrum and the (noise-normalized)
    measured stack, over all entries and pixels."""
    return _misfit_from_geometry(_entry_geometry(stack), spectrum)


def _init_spectrum(stack: MeasurementStack, config: APConfig, init_image) -> np.ndarray:
    n = stack.field_size
    if config.init == "external_image":
        if init_image is None:
            raise ValueError("init='external_image' requires an init image")
        img = np.asarray(init_image, dtype=np.float64)
        if img.shape != (n, n):
            raise ValueError(f"init image must be {n}x{n}, got {img.shape}")
        field = np.clip(img, 0.0, 1.0)
    else:
        bf = stack.entries[stack.brightfield_index]
        # d-point orthonormal transforms leave decimated amplitudes (n/d)x
        # brighter than object units; rescale so the init is commensurate.
        amp = np.sqrt(np.maximum(bf.image, 0.0) / stack.photon_scale)
        amp *= bf.spec.diameter / n
        if config.init == "flat":
            field = np.full((n, n), float(amp.mean()))
        else:
            field = upsample_bicubic(amp, n, n)
    return fftshift(fft2(field.astype(np.complex128)))


def _sweep_order(stack: MeasurementStack, config: APConfig, rng) -> list[int]:
    idx = list(range(len(stack.entries)))
    if config.sweep_order == "by_diameter_desc":
        idx.sort(key=lambda i: (-stack.entries[i].spec.diameter, i))
    elif config.sweep_order == "seeded_random":
        rng.shuffle(idx)
    return idx


def ap_reconstruct(
    stack: MeasurementStack,
    config: APConfig | None = None,
    init_image: np.ndarray | None = None,
) -> ReconResult:
    """Reconstruct the object from a measurement stack by alternating
    projections; see the module docstring for the update rule.

    Passing init_image switches initialization to that image (the hybrid
    neural-prediction refinement path) unless a config says otherwise.
    """
    config = config or APConfig(init="external_image" if init_image is not None else "brightfield_upsample")
    if init_image is not None and config.init != "external_image":
        config = APConfig(
            max_sweeps=config.max_sweeps,
            tol=config.tol,
            sweep_order=config.sweep_order,
            init="external_image",
            clamp_nonnegative_object=config.clamp_nonnegative_object,
            order_seed=config.order_seed,
        )
    if not stack.entries:
        raise ValueError("empty measurement stack")
    n = stack.field_size
    geo = _entry_geometry(stack)
    spectrum = _init_spectrum(stack, config, init_image)
    rng = np.random.default_rng(config.order_seed)

    residual_log: list[float] = []
    sweeps = 0
    for sweep in range(config.max_sweeps):
        previous = spectrum.copy()
        for i in _sweep_order(stack, config, rng):
            g = geo[i]
            sub = _extract_sub(spectrum, g)
            field_i = ifft2(ifftshift(sub))
            phase = np.exp(1j * np.angle(field_i))
            updated = fftshift(fft2(g["target"] * phase))
            block = spectrum[g["field"]]
            mask = g["mask"][g["window"]]
            block[mask] = updated[g["window"]][mask]
            spectrum[g["field"]] = block
        if config.clamp_nonnegative_object:
            obj = ifft2(ifftshift(spectrum))
            spectrum = fftshift(fft2(np.maximum(obj.real, 0.0).astype(np.complex128)))
        sweeps += 1
        residual_log.append(_misfit_from_geometry(geo, spectrum))
        denom = float(np.linalg.norm(previous))
        change = float(np.linalg.norm(spectrum - previous)) / denom if denom > 0 else np.inf
        if change < config.tol:
            break

    estimate = np.abs(ifft2(ifftshift(spectrum))) ** 2
    return ReconResult(estimate=estimate, spectrum=spectrum, residual_log=residual_log, sweeps_run=sweeps)
