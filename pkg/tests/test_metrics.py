"""PSNR and SSIM against hand-computed values and the scikit-image reference."""

import numpy as np
import pytest

from bigcs.errors import ShapeError
from bigcs.metrics import psnr, ssim


def test_psnr_identical_is_infinite():
    img = np.random.default_rng(0).uniform(0, 255, (16, 16))
    assert psnr(img, img) == float("inf")


def test_psnr_known_value():
    # constant error of 16 gray levels: mse = 256,
    # psnr = 10 log10(255^2 / 256) = 24.0483...
    a = np.full((8, 8), 100.0)
    b = np.full((8, 8), 116.0)
    assert psnr(a, b) == pytest.approx(24.0483, abs=1e-3)
    # halving the dynamic range costs 20 log10(2) dB
    assert psnr(a, b, dynamic_range=127.5) == pytest.approx(
        24.0483 - 20 * np.log10(2), abs=1e-3
    )


def test_psnr_shape_mismatch():
    with pytest.raises(ShapeError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_ssim_identical_is_one():
    img = np.random.default_rng(1).uniform(0, 255, (32, 32))
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_images_closed_form():
    # no variance anywhere: ssim = (2ab + C1) / (a^2 + b^2 + C1)
    a, b = 120.0, 140.0
    c1 = (0.01 * 255.0) ** 2
    want = (2 * a * b + c1) / (a * a + b * b + c1)
    got = ssim(np.full((16, 16), a), np.full((16, 16), b))
    assert got == pytest.approx(want, abs=1e-12)


def test_ssim_against_skimage():
    from scipy.ndimage import gaussian_filter
    from skimage.metrics import structural_similarity

    gen = np.random.default_rng(2)
    for _ in range(3):
        a = gaussian_filter(gen.uniform(0, 255, (64, 64)), 2.0)
        b = np.clip(a + gen.normal(0, 12, (64, 64)), 0, 255)
        ours = ssim(a, b)
        theirs = structural_similarity(
            a, b, data_range=255.0, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False,
        )
        # boundary handling differs (valid-region mean vs filtered-and-
        # cropped), so agreement is approximate
        assert ours == pytest.approx(theirs, abs=5e-3)


def test_ssim_penalizes_structure_loss_more_than_bias():
    gen = np.random.default_rng(3)
    from scipy.ndimage import gaussian_filter

    img = gaussian_filter(gen.uniform(0, 255, (64, 64)), 1.5)
    shifted = np.clip(img + 5.0, 0, 255)  # slight bias, structure intact
    scrambled = gen.permutation(img.ravel()).reshape(img.shape)
    assert ssim(img, shifted) > 0.8
    assert ssim(img, scrambled) < 0.3


def test_ssim_input_validation():
    with pytest.raises(ShapeError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))  # smaller than the window
    with pytest.raises(ShapeError):
        ssim(np.zeros((16, 16)), np.zeros((16, 17)))
