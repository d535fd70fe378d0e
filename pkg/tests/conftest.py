"""Shared test helpers: allocation audit, natural images, planted supports."""

import gc
import tracemalloc

import numpy as np
import pytest


def peak_alloc_bytes(fn):
    """Run fn() and return (result, peak newly-allocated bytes).

    numpy registers its buffers with tracemalloc, so the peak bounds the
    largest transient buffer any operator application creates.
    """
    gc.collect()
    tracemalloc.start()
    try:
        result = fn()
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return result, peak


def rel_err(truth, estimate):
    truth = np.asarray(truth, dtype=np.float64)
    return float(np.linalg.norm(estimate - truth) / np.linalg.norm(truth))


def block_mean(img, factor):
    """Downsample by averaging factor x factor blocks."""
    rows, cols = img.shape
    img = img[: rows - rows % factor, : cols - cols % factor]
    return img.reshape(rows // factor, factor, cols // factor, factor).mean(
        axis=(1, 3)
    )


@pytest.fixture(scope="session")
def camera_256():
    """The 512x512 camera test image, block-averaged to 256x256 float64."""
    from skimage import data

    return block_mean(data.camera().astype(np.float64), 2)


@pytest.fixture(scope="session")
def moon_256():
    """The 512x512 moon test image, block-averaged to 256x256 float64."""
    from skimage import data

    return block_mean(data.moon().astype(np.float64), 2)


def planted_tree_support(layout, n_detail, seed):
    """A parent-closed detail support of exactly n_detail indices.

    Grows randomly: start from root-level candidates, repeatedly add either
    a new root or all four children of a frontier node, trimming children
    one by one if the last step overshoots.  Returns ascending int64 indices.
    """
    rng = np.random.default_rng(seed)
    roots = layout.detail_indices(layout.levels)
    chosen = []
    frontier = []
    available_roots = list(rng.permutation(roots))
    while len(chosen) < n_detail:
        grow_child = frontier and (not available_roots or rng.random() < 0.7)
        if grow_child:
            pick = frontier.pop(int(rng.integers(len(frontier))))
            kids = layout.children(pick)
            for k in kids:
                if len(chosen) >= n_detail:
                    break
                chosen.append(int(k))
                if layout.children(int(k)).size:
                    frontier.append(int(k))
        else:
            r = int(available_roots.pop())
            chosen.append(r)
            frontier.append(r)
    out = np.unique(np.asarray(chosen[:n_detail], dtype=np.int64))
    assert out.size == n_detail
    return out
