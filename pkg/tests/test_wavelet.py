"""Wavelet transform: orthogonality, layout geometry, quadtree relations."""

import numpy as np
import pytest

from bigcs import linop, wavelet
from bigcs.errors import DomainError, ShapeError
from bigcs.wavelet import CoefficientVector, WaveletLayout


def test_filter_taps_are_daubechies4():
    # two vanishing moments: sum g = 0 and sum t * g[t] = 0; unit energy
    h = wavelet._H
    g = wavelet._G
    assert abs(np.sum(h) - np.sqrt(2.0)) <= 1e-14
    assert abs(np.sum(g)) <= 1e-14
    assert abs(np.sum(np.arange(4) * g)) <= 1e-12
    assert abs(np.sum(h * h) - 1.0) <= 1e-14
    # orthogonality to the double shift
    assert abs(h[0] * h[2] + h[1] * h[3]) <= 1e-14


@pytest.mark.parametrize("size,levels", [(8, 1), (8, 2), (8, 3), (32, 3), (64, 4)])
def test_roundtrip_exact(size, levels):
    img = np.random.default_rng(size + levels).normal(size=(size, size))
    coeffs = wavelet.dwt2(img, levels)
    back = wavelet.idwt2(coeffs)
    assert np.max(np.abs(back - img)) <= 1e-12


def test_energy_preserved():
    img = np.random.default_rng(5).normal(size=(32, 32)) * 100
    coeffs = wavelet.dwt2(img, 3)
    assert abs(np.linalg.norm(coeffs.values) - np.linalg.norm(img)) <= 1e-9


def test_constant_image_concentrates_in_ll():
    size, levels, c = 32, 3, 2.5
    coeffs = wavelet.dwt2(np.full((size, size), c), levels)
    layout = coeffs.layout
    ll = layout.ll_indices()
    detail = np.delete(coeffs.values, ll)
    assert np.max(np.abs(detail)) <= 1e-12
    # each LL entry is c * 2^S; the block's l2 norm is c * N
    assert np.allclose(coeffs.values[ll], c * 2**levels, atol=1e-12)
    assert abs(np.linalg.norm(coeffs.values[ll]) - c * size) <= 1e-10


def test_synthesis_operator_is_orthogonal():
    layout = WaveletLayout(16, 3)
    op = wavelet.wavelet_synthesis_op(layout)
    dense = linop.materialize(op)
    assert np.max(np.abs(dense.T @ dense - np.eye(256))) <= 1e-10
    assert np.max(np.abs(dense @ dense.T - np.eye(256))) <= 1e-10
    # adjoint equals analysis: columns reconstruct single coefficients
    gen = np.random.default_rng(0)
    for _ in range(100):
        u = gen.normal(size=256)
        v = gen.normal(size=256)
        bound = 1e-10 * (np.linalg.norm(u) * np.linalg.norm(v) + 1)
        assert abs(op.forward(u) @ v - u @ op.adjoint(v)) <= bound


def test_synthesis_adjoint_matches_dwt2():
    layout = WaveletLayout(32, 3)
    op = wavelet.wavelet_synthesis_op(layout)
    img = np.random.default_rng(1).normal(size=(32, 32))
    via_op = op.adjoint(img.ravel(order="F"))
    via_dwt = wavelet.dwt2(img, 3).values
    assert np.array_equal(via_op, via_dwt)


def test_forward_does_not_mutate_input():
    layout = WaveletLayout(8, 2)
    op = wavelet.wavelet_synthesis_op(layout)
    x = np.random.default_rng(2).normal(size=64)
    x_copy = x.copy()
    op.forward(x)
    assert np.array_equal(x, x_copy)


def test_layout_counts():
    layout = WaveletLayout(8, 2)
    assert layout.n == 64
    assert layout.ll_indices().size == 4
    for band in wavelet.BANDS:
        assert layout.band_indices(2, band).size == 4
        assert layout.band_indices(1, band).size == 16
    assert layout.detail_indices(2).size == 12
    assert layout.detail_indices(1).size == 48
    # band sizes at level s are (N / 2^s)^2 and partition the plane
    total = layout.ll_indices().size + sum(
        layout.detail_indices(s).size for s in (1, 2)
    )
    assert total == 64
    all_idx = np.concatenate(
        [layout.ll_indices()] + [layout.detail_indices(s) for s in (1, 2)]
    )
    assert np.array_equal(np.sort(all_idx), np.arange(64))


def test_vec_is_column_major():
    layout = WaveletLayout(8, 2)
    plane = np.arange(64, dtype=np.float64).reshape(8, 8)
    v = layout.vec(plane)
    for r in range(8):
        for c in range(8):
            assert v[r + c * 8] == plane[r, c]
    assert np.array_equal(layout.unvec(v), plane)


def test_band_origins():
    layout = WaveletLayout(8, 2)
    assert layout.band_origin(2, "LH") == (0, 2)
    assert layout.band_origin(2, "HL") == (2, 0)
    assert layout.band_origin(2, "HH") == (2, 2)
    assert layout.band_origin(1, "LH") == (0, 4)
    with pytest.raises(DomainError):
        layout.band_origin(2, "XX")
    with pytest.raises(DomainError):
        layout.band_origin(3, "LH")


def test_children_worked_example():
    # N=8, S=2: the LH root at plane (0, 2) has children at plane
    # (0,4), (0,5), (1,4), (1,5), i.e. column-major indices 32, 40, 33, 41.
    layout = WaveletLayout(8, 2)
    root = 0 + 2 * 8
    assert layout.children(root).tolist() == [32, 40, 33, 41]


def brute_force_children(layout, index):
    """Oracle: scan every index and keep those whose parent position
    (same band, one level finer, halved coordinates) equals `index`."""
    level, band, r, c = layout.locate(index)
    if band == "LL" or level < 2:
        return []
    out = []
    for j in range(layout.n):
        jl, jb, jr, jc = layout.locate(j)
        if jb == band and jl == level - 1 and jr // 2 == r and jc // 2 == c:
            out.append(j)
    return sorted(out)


def test_children_against_brute_force():
    layout = WaveletLayout(16, 3)
    for index in range(layout.n):
        got = sorted(layout.children(index).tolist())
        assert got == brute_force_children(layout, index)


def test_parent_inverts_children():
    layout = WaveletLayout(16, 3)
    for index in range(layout.n):
        kids = layout.children(index)
        for k in kids:
            assert layout.parent(int(k)) == index
    # roots and LL have no parent
    for index in layout.detail_indices(3):
        assert layout.parent(int(index)) == -1
    for index in layout.ll_indices():
        assert layout.parent(int(index)) == -1


def test_locate_roundtrip():
    layout = WaveletLayout(16, 2)
    for index in range(layout.n):
        level, band, r, c = layout.locate(index)
        if band == "LL":
            assert index == r + c * 16
            assert max(r, c) < 4
        else:
            r0, c0 = layout.band_origin(level, band)
            assert index == (r0 + r) + (c0 + c) * 16


def test_validation_errors():
    with pytest.raises(ShapeError):
        WaveletLayout(12, 2)
    with pytest.raises(DomainError):
        WaveletLayout(8, 0)
    with pytest.raises(DomainError):
        WaveletLayout(8, 4)
    with pytest.raises(ShapeError):
        wavelet.dwt2(np.zeros((8, 4)), 2)
    with pytest.raises(ShapeError):
        CoefficientVector(np.zeros(60), WaveletLayout(8, 2))


def test_default_levels():
    assert wavelet.default_levels(16) == 3
    assert wavelet.default_levels(64) == 3
    assert wavelet.default_levels(256) == 4
    assert wavelet.default_levels(1024) == 6
    assert wavelet.default_levels(4) == 2
    assert wavelet.default_levels(2) == 1


def test_storage_accounting():
    layout = WaveletLayout(32, 3)
    assert wavelet.wavelet_synthesis_op(layout).storage_scalars == 2 * layout.n
