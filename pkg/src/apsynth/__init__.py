"""apsynth: snapshot coherent aperture synthesis toolkit.

Fourier-plane sampling design for camera arrays, array-measurement
simulation with Poisson photon noise, alternating-projection ptychographic
reconstruction, image-quality metrics, and reproducible dataset pipelines.
"""

from .apertures import (
    ApertureSpec,
    SnapshotSchedule,
    StrategyLayout,
    build_fp_grid,
    build_mini_layout,
    build_snapshot_schedule,
    build_strategy,
    coverage,
    disk_mask,
    measured_pixels,
)
from .fields import crop_centered, fft2, fftshift, ifft2, ifftshift, pad_centered, upsample_bicubic
from .forward import MeasurementStack, PhotonModel, measure_decimated, measure_fullres, measure_spatial, simulate
from .io import load_png, read_tensor, save_png, write_tensor
from .metrics import MetricsReport, bce, compute_report, mse, psnr, ssim, threshold
from .recon import APConfig, ReconResult, ap_reconstruct, data_misfit

__version__ = "0.1.0"
