"""Reconstruction quality metrics: PSNR and SSIM on grayscale arrays."""

import numpy as np
from scipy.signal import fftconvolve

from .errors import ShapeError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def _pair(reference, reconstructed):
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(reconstructed, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(reference, reconstructed, dynamic_range=255.0):
    """Peak signal-to-noise ratio in dB: 10 log10(L^2 / mean squared error).

    Identical inputs return +inf.
    """
    a, b = _pair(reference, reconstructed)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(dynamic_range * dynamic_range / mse)


def _gaussian_window():
    half = (SSIM_WINDOW - 1) / 2.0
    t = np.arange(SSIM_WINDOW) - half
    g = np.exp(-(t * t) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(reference, reconstructed, dynamic_range=255.0):
    """Mean structural similarity over an 11 x 11 Gaussian window, sigma 1.5.

    Local statistics are Gaussian-weighted moments; the map is averaged over
    the fully-covered (valid) region, so inputs must be at least 11 x 11.
    Constants C1 = (0.01 L)^2 and C2 = (0.03 L)^2.
    """
    a, b = _pair(reference, reconstructed)
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ShapeError(
            f"ssim needs 2-D inputs at least {SSIM_WINDOW} pixels on a side"
        )
    win = _gaussian_window()
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2

    mu_a = fftconvolve(a, win, mode="valid")
    mu_b = fftconvolve(b, win, mode="valid")
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = fftconvolve(a * a, win, mode="valid") - mu_aa
    var_b = fftconvolve(b * b, win, mode="valid") - mu_bb
    cov = fftconvolve(a * b, win, mode="valid") - mu_ab

    num = (2.0 * mu_ab + c1) * (2.0 * cov + c2)
    den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
