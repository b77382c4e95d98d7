import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matk.errors import (BackendUnavailable, BadMagic, CorruptIndex, DecodeError,
                         DimensionMismatch, DuplicateId, MissingFeature)
from matk.preprocess import (FeatureCache, FeatureCacheEntry, FullMaskWarning, clean_image,
                             detect_text, dilate, extract_global_embedding,
                             extract_region_features, generate_caption, get_backend, inpaint,
                             read_cache, save_image, text_mask, write_cache)


def noisy(h=24, w=32, seed=0):
    return np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def with_sidecar(tmp_path, image, boxes, name="m.png"):
    p = tmp_path / name
    save_image(image, p)
    (tmp_path / (p.stem + ".ocr.json")).write_text(json.dumps(boxes))
    return p


# ---- OCR ----------------------------------------------------------------

def test_blank_image_no_regions():
    assert detect_text(np.zeros((8, 8, 3), np.uint8)) == []


def test_sidecar_box_and_default_confidence(tmp_path):
    p = with_sidecar(tmp_path, noisy(), [{"box": [2, 3, 10, 9]}])
    (r,) = detect_text(p)
    assert r.box == (2, 3, 10, 9) and r.confidence == 1.0


def test_boxes_clamped_and_sorted(tmp_path):
    p = with_sidecar(tmp_path, noisy(), [
        {"box": [-5, 2, 50, 9], "confidence": 0.3},
        {"box": [1, 1, 4, 4], "confidence": 0.9},
    ])
    regions = detect_text(p)
    assert [r.confidence for r in regions] == [0.9, 0.3]
    assert regions[1].box == (0, 2, 32, 9)


def test_unknown_backend():
    with pytest.raises(BackendUnavailable):
        detect_text(np.zeros((4, 4, 3), np.uint8), backend="keras")


def test_undecodable_file(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(DecodeError):
        extract_global_embedding(bad)


# ---- inpainting -----------------------------------------------------------

def test_empty_mask_identity():
    img = noisy()
    out = inpaint(img, np.zeros(img.shape[:2], bool))
    assert np.array_equal(out, img) and out is not img


def test_constant_image_invariant():
    img = np.full((20, 20, 3), (40, 200, 90), np.uint8)
    mask = np.zeros((20, 20), bool)
    mask[3:15, 2:19] = True
    assert np.array_equal(inpaint(img, mask), img)


def test_full_mask_gray_and_warns():
    img = noisy()
    with pytest.warns(FullMaskWarning):
        out = inpaint(img, np.ones(img.shape[:2], bool))
    assert (out == 128).all()


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        inpaint(noisy(), np.zeros((3, 3), bool))


masks = st.builds(
    lambda seed, density: np.random.default_rng(seed).random((12, 15)) < density,
    st.integers(0, 10_000), st.floats(0.0, 0.97),
)


@settings(max_examples=60, deadline=None)
@given(masks)
def test_inpaint_only_touches_masked_pixels(mask):
    if mask.all():
        return
    img = noisy(12, 15, seed=int(mask.sum()))
    out = inpaint(img, mask)
    assert np.array_equal(out[~mask], img[~mask])
    assert out.dtype == np.uint8


def test_inpaint_fills_between_bounds():
    img = np.zeros((9, 9, 3), np.uint8)
    img[:, 5:] = 200
    mask = np.zeros((9, 9), bool)
    mask[:, 3:6] = True
    out = inpaint(img, mask)
    assert out[:, 3:6].min() >= 0 and out[:, 3:6].max() <= 200
    assert 0 < out[4, 4, 0] < 200


def test_dilate_square():
    m = np.zeros((9, 9), bool)
    m[4, 4] = True
    d = dilate(m)
    assert d.sum() == 25 and d[2:7, 2:7].all()


def test_clean_no_detections_identity(tmp_path):
    img = noisy()
    p = tmp_path / "x.png"
    save_image(img, p)
    assert np.array_equal(clean_image(p), img)


def test_clean_below_threshold_identity(tmp_path):
    img = noisy()
    p = with_sidecar(tmp_path, img, [{"box": [2, 2, 8, 8], "confidence": 0.4}])
    assert np.array_equal(clean_image(p, confidence_threshold=0.5), img)


def test_clean_constant_image(tmp_path):
    img = np.full((16, 16, 3), 77, np.uint8)
    p = with_sidecar(tmp_path, img, [{"box": [4, 4, 9, 9]}])
    assert np.array_equal(clean_image(p), img)


def test_clean_only_changes_dilated_mask(tmp_path):
    img = noisy(30, 30)
    p = with_sidecar(tmp_path, img, [{"box": [5, 6, 12, 14], "confidence": 0.8}])
    mask = text_mask(p)
    assert mask.sum() == (12 - 5 + 4) * (14 - 6 + 4)
    out = clean_image(p)
    assert np.array_equal(out[~mask], img[~mask])
    assert not np.array_equal(out[mask], img[mask])


# ---- feature extraction -----------------------------------------------------

def test_region_grid_boxes():
    _, boxes = extract_region_features(noisy(), n_regions=4)
    assert boxes.tolist() == [[0, 0, .5, .5], [.5, 0, 1, .5], [0, .5, .5, 1], [.5, .5, 1, 1]]


def test_constant_image_rows_identical():
    feats, _ = extract_region_features(np.full((16, 16, 3), 100, np.uint8), n_regions=4)
    assert feats.shape == (4, 64)
    assert (feats == feats[0]).all()


def test_extraction_deterministic():
    img = noisy()
    a = extract_region_features(img, n_regions=5)
    b = extract_region_features(img, n_regions=5)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert a[0].shape == (5, 64)
    assert np.array_equal(extract_global_embedding(img), extract_global_embedding(img))


def test_global_gray_channel_means():
    v = extract_global_embedding(np.full((8, 8, 3), 0.5))
    assert v.shape == (64,)
    assert np.allclose(v[:3], 0.5)


def test_caption_red():
    red = np.zeros((8, 8, 3), np.uint8)
    red[..., 0] = 230
    assert generate_caption(red) == "an image with dominant color red"
    assert generate_caption(red) == generate_caption(red)
    with pytest.raises(BackendUnavailable):
        generate_caption(red, backend="blip2")


def test_backend_options():
    assert get_backend("regions", "stub", d=16).extract(noisy(), 2)[0].shape == (2, 16)


# ---- feature cache ------------------------------------------------------------

def region_entries(n=3, N=4, d=8, seed=0):
    g = np.random.default_rng(seed)
    return [FeatureCacheEntry(f"id{i}", "regions", g.standard_normal((N, d)).astype(np.float32),
                              g.random((N, 4)).astype(np.float32)) for i in range(n)]


def test_cache_roundtrip_three(tmp_path):
    entries = region_entries()
    write_cache(entries, tmp_path / "c.bin")
    cache = read_cache(tmp_path / "c.bin")
    assert isinstance(cache, FeatureCache)
    for e in entries:
        got = cache.get(e.id)
        assert got == e
        assert got.features.tobytes() == e.features.tobytes()


def test_cache_header_layout(tmp_path):
    write_cache(region_entries(n=2, N=3, d=5), tmp_path / "c.bin")
    raw = (tmp_path / "c.bin").read_bytes()
    assert raw[:8] == b"MATKFC01"
    hlen = int.from_bytes(raw[8:12], "little")
    header = json.loads(raw[12:12 + hlen])
    assert header["dtype"] == "float32" and header["d"] == 5 and header["kind"] == "regions"
    assert header["index"]["id1"] == [3 * 5 * 4 + 3 * 16, 3, 5]
    assert len(raw) == 12 + hlen + 2 * (3 * 5 * 4 + 3 * 16)


def test_cache_missing_and_duplicate(tmp_path):
    entries = region_entries()
    write_cache(entries, tmp_path / "c.bin")
    with pytest.raises(MissingFeature):
        read_cache(tmp_path / "c.bin").get("nope")
    with pytest.raises(DuplicateId):
        write_cache(entries + entries[:1], tmp_path / "d.bin")


def test_cache_truncated_and_bad_magic(tmp_path):
    write_cache(region_entries(), tmp_path / "c.bin")
    raw = (tmp_path / "c.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-10])
    with pytest.raises(CorruptIndex):
        read_cache(tmp_path / "t.bin")
    (tmp_path / "h.bin").write_bytes(raw[:20])
    with pytest.raises(CorruptIndex):
        read_cache(tmp_path / "h.bin")
    (tmp_path / "m.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(BadMagic):
        read_cache(tmp_path / "m.bin")


def test_cache_rejects_nonfinite(tmp_path):
    bad = FeatureCacheEntry("x", "global", np.array([1.0, np.nan], np.float32))
    with pytest.raises(ValueError):
        write_cache([bad], tmp_path / "c.bin")


def test_caption_cache_roundtrip(tmp_path):
    entries = [FeatureCacheEntry("a", "caption", caption="an image with dominant color red"),
               FeatureCacheEntry("b", "caption", caption="ünïcode")]
    write_cache(entries, tmp_path / "c.jsonl")
    cache = read_cache(tmp_path / "c.jsonl")
    assert [cache.get(e.id) for e in entries] == entries
    assert cache["b"] == "ünïcode"


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(1, 9), st.integers(0, 999),
       st.sampled_from(["regions", "global"]))
def test_cache_roundtrip_property(tmp_path_factory, n, N, d, seed, kind):
    g = np.random.default_rng(seed)
    if kind == "regions":
        entries = region_entries(n, N, d, seed)
    else:
        entries = [FeatureCacheEntry(f"g{i}", "global", g.standard_normal(d).astype(np.float32))
                   for i in range(n)]
    p = tmp_path_factory.mktemp("cache") / "c.bin"
    write_cache(entries, p)
    back = read_cache(p).entries()
    assert back == entries
    q = p.with_name("again.bin")
    write_cache(back, q)
    assert q.read_bytes() == p.read_bytes()
