import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from trackcount.raster import (ImageFormatError, as_gray, load_gray, luminance,
                               median_filter, save_image)

from oracles import median_brute


def test_load_gray_roundtrip_2x2(tmp_path):
    px = np.array([[0, 255], [128, 64]], dtype=np.uint8)
    Image.fromarray(px, mode="L").save(tmp_path / "a.png")
    np.testing.assert_array_equal(load_gray(tmp_path / "a.png"), px)


@pytest.mark.parametrize("rgb,expected", [((255, 255, 255), 255), ((255, 0, 0), 76),
                                          ((0, 255, 0), 150), ((0, 0, 255), 29)])
def test_luminance_examples(rgb, expected, tmp_path):
    # 0.299*255 = 76.245, 0.587*255 = 149.685, 0.114*255 = 29.07
    assert luminance(np.array(rgb))[()] == expected
    Image.new("RGB", (1, 1), rgb).save(tmp_path / "p.png")
    assert load_gray(tmp_path / "p.png")[0, 0] == expected


def test_palette_and_bilevel_modes(tmp_path):
    Image.new("RGB", (2, 2), (255, 0, 0)).convert("P").save(tmp_path / "p.png")
    assert np.all(load_gray(tmp_path / "p.png") == 76)
    Image.new("1", (3, 1), 1).save(tmp_path / "b.png")
    assert np.all(load_gray(tmp_path / "b.png") == 255)


def test_16bit_is_stretched(tmp_path):
    arr = np.array([[0, 1000], [2000, 4000]], dtype=np.uint16)
    Image.fromarray(arr).save(tmp_path / "w.png")
    out = load_gray(tmp_path / "w.png")
    assert out.dtype == np.uint8
    np.testing.assert_array_equal(out, [[0, 64], [128, 255]])


def test_unsupported_mode_names_depth(tmp_path):
    Image.new("F", (2, 2), 0.5).save(tmp_path / "f.tif")
    with pytest.raises(ImageFormatError, match="'F'"):
        load_gray(tmp_path / "f.tif")


def test_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        load_gray(tmp_path / "nope.png")


def test_save_roundtrip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (9, 13), dtype=np.uint8)
    save_image(tmp_path / "x.png", img)
    np.testing.assert_array_equal(load_gray(tmp_path / "x.png"), img)


def test_as_gray_rejects_out_of_range():
    with pytest.raises(ValueError):
        as_gray(np.array([[300]]))
    with pytest.raises(ValueError):
        as_gray(np.zeros((2, 2, 2)))


def test_median_constant_image():
    img = np.full((11, 9), 37, dtype=np.uint8)
    for win in [(1, 1), (3, 3), (7, 7), (3, 5), (9, 1)]:
        np.testing.assert_array_equal(median_filter(img, win), img)


def test_median_removes_spike():
    img = np.full((3, 3), 10, dtype=np.uint8)
    img[1, 1] = 200
    assert median_filter(img, (3, 3))[1, 1] == 10
    np.testing.assert_array_equal(median_filter(img, (3, 3)), median_brute(img, 3, 3))


def test_median_identity_window():
    img = np.random.default_rng(1).integers(0, 256, (5, 6), dtype=np.uint8)
    out = median_filter(img, (1, 1))
    np.testing.assert_array_equal(out, img)
    assert out is not img


@pytest.mark.parametrize("win", [(3, 3), (5, 5), (7, 7), (3, 5), (5, 1), (1, 3)])
def test_median_matches_brute_force(win):
    rng = np.random.default_rng(sum(win))
    img = rng.integers(0, 256, (12, 10), dtype=np.uint8)
    np.testing.assert_array_equal(median_filter(img, win), median_brute(img, *win))


def test_median_border_mirror_without_edge_repeat():
    # a 7x7 window on a 4x4 image mirrors 3 rows: needs k <= 2h - 1
    img = np.arange(16, dtype=np.uint8).reshape(4, 4) * 10
    np.testing.assert_array_equal(median_filter(img, (7, 7)), median_brute(img, 7, 7))
    with pytest.raises(ValueError):
        median_filter(img, (9, 9))


@pytest.mark.parametrize("win", [(2, 3), (3, 4), (0, 1), (-1, 3)])
def test_median_rejects_even_or_nonpositive(win):
    with pytest.raises(ValueError):
        median_filter(np.zeros((9, 9), dtype=np.uint8), win)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(3, 12), st.integers(3, 12))),
       st.sampled_from([(3, 3), (3, 1), (1, 3), (5, 5)]))
def test_median_is_a_window_order_statistic(img, win):
    k, l = win
    if k > 2 * img.shape[0] - 1 or l > 2 * img.shape[1] - 1:
        return
    out = median_filter(img, win)
    assert out.shape == img.shape and out.dtype == np.uint8
    # bounded by the global extremes and equal to the brute-force window median
    assert out.min() >= img.min() and out.max() <= img.max()
    np.testing.assert_array_equal(out, median_brute(img, k, l))
