"""Complex-field arithmetic on centered grids.

Conventions shared by the whole toolkit:

- 2-D arrays are indexed [row, col] = [v, u]; fields are ``(height, width)``.
- Fourier-plane quantities are stored DC-at-center: on an n-sample axis the
  DC pixel sits at index ``n // 2`` (the fftshift convention). Conversion to
  DC-at-corner happens only inside the transform calls.
- Both transforms are orthonormal, so Parseval holds exactly:
  ``sum(|fft2(x)|^2) == sum(|x|^2)``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "fft2",
    "ifft2",
    "fftshift",
    "ifftshift",
    "center_index",
    "crop_centered",
    "pad_centered",
    "upsample_bicubic",
]


def _require_2d(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    if a.size == 0:
        raise ValueError("empty array")
    return a


def fft2(field: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DFT (energy preserving)."""
    return np.fft.fft2(_require_2d(field), norm="ortho")


def ifft2(spectrum: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`fft2` (same orthonormal scaling)."""
    return np.fft.ifft2(_require_2d(spectrum), norm="ortho")


def fftshift(a: np.ndarray) -> np.ndarray:
    """Move DC from index 0 to index n//2 on both axes."""
    return np.fft.fftshift(_require_2d(a))


def ifftshift(a: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fftshift`, correct for odd sizes too."""
    return np.fft.ifftshift(_require_2d(a))


def center_index(n: int) -> int:
    """Index of the DC pixel on an n-sample axis (fftshift convention)."""
    return n // 2


def crop_centered(a: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Extract the centered out_h x out_w window.

    The window is aligned so its own center pixel (``out//2``) lands on the
    input's center pixel; e.g. cropping 512 -> 128 keeps rows/cols [192, 320).
    """
    a = _require_2d(a)
    h, w = a.shape
    if not (1 <= out_h <= h and 1 <= out_w <= w):
        raise ValueError(f"crop {out_w}x{out_h} invalid for input {w}x{h}")
    r0 = h // 2 - out_h // 2
    c0 = w // 2 - out_w // 2
    return a[r0 : r0 + out_h, c0 : c0 + out_w].copy()


def pad_centered(a: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Zero-pad to out_h x out_w keeping the same center alignment."""
    a = _require_2d(a)
    h, w = a.shape
    if out_h < h or out_w < w:
        raise ValueError(f"pad {out_w}x{out_h} smaller than input {w}x{h}")
    out = np.zeros((out_h, out_w), dtype=a.dtype)
    r0 = out_h // 2 - h // 2
    c0 = out_w // 2 - w // 2
    out[r0 : r0 + h, c0 : c0 + w] = a
    return out


def _bicubic_kernel(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Keys cubic convolution kernel (a = -0.5)."""
    x = np.abs(x)
    out = np.zeros_like(x)
    m1 = x <= 1.0
    m2 = (x > 1.0) & (x < 2.0)
    out[m1] = (a + 2.0) * x[m1] ** 3 - (a + 3.0) * x[m1] ** 2 + 1.0
    out[m2] = a * x[m2] ** 3 - 5.0 * a * x[m2] ** 2 + 8.0 * a * x[m2] - 4.0 * a
    return out


def _bicubic_matrix(n_in: int, n_out: int) -> np.ndarray:
    # Corner-aligned mapping (dst i samples src at i*n_in/n_out): decimated
    # camera images sample the object grid at stride N/d starting at pixel 0,
    # so this convention upsamples them back without a subpixel shift.
    src = np.arange(n_out) * (n_in / n_out)
    base = np.floor(src).astype(int)
    mat = np.zeros((n_out, n_in))
    for t in (-1, 0, 1, 2):
        idx = base + t
        w = _bicubic_kernel(src - idx)
        np.add.at(mat, (np.arange(n_out), np.clip(idx, 0, n_in - 1)), w)
    return mat


def upsample_bicubic(image: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bicubic upsampling (Keys kernel a = -0.5, edge-clamped).

    Exact identity when the output size equals the input size.
    """
    image = _require_2d(image).astype(np.float64)
    h, w = image.shape
    if out_h < h or out_w < w:
        raise ValueError("upsample_bicubic only enlarges (out dims >= in dims)")
    if (out_h, out_w) == (h, w):
        return image.copy()
    mr = _bicubic_matrix(h, out_h)
    mc = _bicubic_matrix(w, out_w)
    return mr @ image @ mc.T
