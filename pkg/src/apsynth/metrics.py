"""Image-quality metrics: MSE, PSNR, SSIM, binary cross-entropy, threshold.

All metrics take [0, 1] images (peak fixed at 1.0). SSIM uses the de facto
standard parameters: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
population covariance, symmetric boundary, edge-cropped mean.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["MetricsReport", "mse", "psnr", "ssim", "bce", "threshold", "compute_report"]

_BCE_EPS = 1e-7
_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _check_pair(a, b, name):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"{name}: shape mismatch {a.shape} vs {b.shape}")
    return a, b


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check_pair(a, b, "mse")
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak SNR in dB for peak 1.0; identical images give +inf."""
    m = mse(a, b)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / m)


def _gaussian_window(radius: int = _SSIM_RADIUS, sigma: float = _SSIM_SIGMA) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_sym(img: np.ndarray, g: np.ndarray, radius: int) -> np.ndarray:
    """Separable correlation with symmetric (half-sample) boundary."""
    pad = np.pad(img, radius, mode="symmetric")
    rows = np.zeros_like(pad)
    for k in range(2 * radius + 1):
        rows[:, radius:-radius] += g[k] * pad[:, k : k + img.shape[1]]
    out = np.zeros(img.shape, dtype=np.float64)
    for k in range(2 * radius + 1):
        out += g[k] * rows[k : k + img.shape[0], radius:-radius]
    return out


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local structural similarity for images with dynamic range 1."""
    a, b = _check_pair(a, b, "ssim")
    win = 2 * _SSIM_RADIUS + 1
    if min(a.shape) < win:
        raise ValueError(f"ssim needs images of at least {win}x{win}, got {a.shape}")
    g = _gaussian_window()
    ua = _filter_sym(a, g, _SSIM_RADIUS)
    ub = _filter_sym(b, g, _SSIM_RADIUS)
    uaa = _filter_sym(a * a, g, _SSIM_RADIUS)
    ubb = _filter_sym(b * b, g, _SSIM_RADIUS)
    uab = _filter_sym(a * b, g, _SSIM_RADIUS)
    va = uaa - ua * ua
    vb = ubb - ub * ub
    cab = uab - ua * ub
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    s = ((2 * ua * ub + c1) * (2 * cab + c2)) / ((ua * ua + ub * ub + c1) * (va + vb + c2))
    r = _SSIM_RADIUS
    return float(s[r:-r, r:-r].mean())


def bce(pred: np.ndarray, target: np.ndarray) -> float:
    """Binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7]."""
    pred, target = _check_pair(pred, target, "bce")
    p = np.clip(pred, _BCE_EPS, 1.0 - _BCE_EPS)
    return float(-np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)))


def threshold(image: np.ndarray, t: float = 0.5) -> np.ndarray:
    """Elementwise binarization; values equal to t map to 1."""
    return (np.asarray(image, dtype=np.float64) >= t).astype(np.float64)


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    psnr: float
    ssim: float
    bce: float

    def to_dict(self) -> dict:
        # json cannot carry inf; the identical-image PSNR becomes the string "inf".
        p = self.psnr if math.isfinite(self.psnr) else "inf"
        return {"mse": self.mse, "psnr": p, "ssim": self.ssim, "bce": self.bce}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def csv_header() -> list[str]:
        return ["name", "mse", "psnr", "ssim", "bce"]

    def csv_row(self, name: str = "") -> list[str]:
        p = f"{self.psnr:.6f}" if math.isfinite(self.psnr) else "inf"
        return [name, f"{self.mse:.8e}", p, f"{self.ssim:.6f}", f"{self.bce:.8e}"]


def compute_report(a: np.ndarray, b: np.ndarray) -> MetricsReport:
    """All four metrics of prediction a against reference b."""
    return MetricsReport(mse=mse(a, b), psnr=psnr(a, b), ssim=ssim(a, b), bce=bce(a, b))


def reports_to_csv(rows: list[tuple[str, MetricsReport]]) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf)
    writer.writerow(MetricsReport.csv_header())
    for name, report in rows:
        writer.writerow(report.csv_row(name))
    return buf.getvalue()
