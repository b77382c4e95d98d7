import numpy as np
import pytest

from matk import _pykernels, kernels


def random_case(seed, shape=(17, 13, 3), density=0.6):
    g = np.random.default_rng(seed)
    values = g.integers(0, 256, size=shape).astype(np.float64)
    mask = g.random(shape[:2]) < density
    mask[0, 0] = False
    return values, mask


@pytest.mark.skipif(not kernels.COMPILED, reason="compiled kernels not built")
@pytest.mark.parametrize("seed", range(8))
def test_inpaint_kernels_bit_identical(seed):
    values, mask = random_case(seed)
    known = np.ascontiguousarray(~mask, dtype=np.uint8)
    m8 = np.ascontiguousarray(mask, dtype=np.uint8)
    a, b = values.copy(), values.copy()
    pa = kernels.diffuse_fill(a, known.copy())
    pb = _pykernels.diffuse_fill(b, known.copy())
    assert pa == pb
    assert a.tobytes() == b.tobytes()
    kernels.smooth_masked(a, m8, 3)
    _pykernels.smooth_masked(b, m8, 3)
    assert a.tobytes() == b.tobytes()


@pytest.mark.skipif(not kernels.COMPILED, reason="compiled kernels not built")
@pytest.mark.parametrize("seed", range(8))
def test_rank_sum_kernels_identical(seed):
    g = np.random.default_rng(seed)
    scores = np.sort(g.integers(0, 6, size=40).astype(np.float64))
    labels = g.integers(0, 2, size=40).astype(np.int64)
    assert kernels.positive_rank_sum(scores, labels) == _pykernels.positive_rank_sum(scores, labels)


def test_diffusion_progress_guarantee():
    values, mask = random_case(3, shape=(20, 20, 1), density=0.99)
    known = np.ascontiguousarray(~mask, dtype=np.uint8)
    passes = kernels.diffuse_fill(values, known)
    assert known.all()
    assert passes <= 40


def test_fallback_selected_by_env(monkeypatch):
    import importlib

    monkeypatch.setenv("MATK_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.COMPILED is False
        assert mod.diffuse_fill is _pykernels.diffuse_fill
    finally:
        monkeypatch.delenv("MATK_PURE_PYTHON")
        importlib.reload(kernels)
