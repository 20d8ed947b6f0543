"""Image containers, grayscale I/O and the median prefilter.

Images are plain numpy arrays: a gray image is a 2-D ``uint8`` array and a
binary image is a 2-D ``bool`` array, both indexed ``[row, col]``.  Pixel
coordinates are ``(row, col)`` tuples.
"""
from __future__ import annotations

import os
from typing import Tuple

import cv2
import numpy as np
import scipy.ndimage as ndi
from PIL import Image

PixelCoord = Tuple[int, int]

DEFAULT_WINDOW = (7, 7)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    """Raised for rasters whose mode or bit depth cannot be ingested."""


def as_gray(pixels) -> np.ndarray:
    """Validate and return ``pixels`` as a 2-D uint8 array.

    Float or wider integer arrays are accepted only when every value already
    lies in [0, 255] and is integral.
    """
    arr = np.asarray(pixels)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"gray image must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        return arr
    if arr.dtype == bool:
        return arr.astype(np.uint8) * 255
    if arr.size and (arr.min() < 0 or arr.max() > 255 or not np.all(np.mod(arr, 1) == 0)):
        raise ValueError("gray intensities must be integers in [0, 255]")
    return arr.astype(np.uint8)


def as_binary(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"binary image must be a non-empty 2-D array, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Integer luminance ``round(0.299 R + 0.587 G + 0.114 B)``, halves rounded up."""
    rgb = np.asarray(rgb, dtype=np.float64)
    y = rgb[..., 0] * LUMA_WEIGHTS[0] + rgb[..., 1] * LUMA_WEIGHTS[1] + rgb[..., 2] * LUMA_WEIGHTS[2]
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def stretch_to_uint8(arr: np.ndarray) -> np.ndarray:
    """Linear min-max stretch of a wide integer array onto [0, 255]."""
    arr = np.asarray(arr, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros(arr.shape, dtype=np.uint8)
    return np.floor((arr - lo) * 255.0 / (hi - lo) + 0.5).astype(np.uint8)


def load_gray(path: str | os.PathLike) -> np.ndarray:
    """Read a raster file and return it as an 8-bit grayscale array.

    RGB(A) and palette images are reduced with :func:`luminance`; 16- and
    32-bit integer grayscale images are min-max stretched to 8 bits.

    Raises
    ------
    OSError
        The file is missing or cannot be decoded.
    ImageFormatError
        The pixel mode (bit depth) is not supported.
    """
    with Image.open(path) as im:
        im.load()
        mode = im.mode
        if mode == "L":
            return np.array(im, dtype=np.uint8)
        if mode == "1":
            return np.array(im, dtype=np.uint8) * 255
        if mode in ("RGB", "RGBA", "RGBX"):
            return luminance(np.array(im)[..., :3])
        if mode in ("P", "PA"):
            return luminance(np.array(im.convert("RGB")))
        if mode == "LA":
            return np.array(im, dtype=np.uint8)[..., 0]
        if mode.startswith("I;16") or mode == "I":
            return stretch_to_uint8(np.array(im))
    raise ImageFormatError(f"unsupported pixel mode {mode!r} (bit depth not 1/8/16/32-bit integer)")


def save_image(path: str | os.PathLike, pixels: np.ndarray) -> None:
    """Write a gray (H, W) or RGB (H, W, 3) uint8 array; format from the suffix."""
    arr = np.asarray(pixels)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    Image.fromarray(arr.astype(np.uint8)).save(path)


def median_filter(img, window: Tuple[int, int] = DEFAULT_WINDOW) -> np.ndarray:
    """Median of the ``k x l`` window centred on every pixel.

    Borders are mirrored without repeating the edge pixel (``c b | a b c d``),
    so ``k`` may be at most ``2 * height - 1`` and ``l`` at most
    ``2 * width - 1``.

    Parameters
    ----------
    img : ndarray, shape (H, W), uint8
    window : (k, l)
        Odd window height and width.

    Returns
    -------
    ndarray, shape (H, W), uint8
    """
    img = as_gray(img)
    k, l = (int(w) for w in window)
    if k < 1 or l < 1 or k % 2 == 0 or l % 2 == 0:
        raise ValueError(f"median window must have odd positive sides, got {k}x{l}")
    h, w = img.shape
    if k > 2 * h - 1 or l > 2 * w - 1:
        raise ValueError(f"window {k}x{l} too large for a {h}x{w} image")
    if k == 1 and l == 1:
        return img.copy()
    if k == l and k <= 255:
        # OpenCV's histogram median is exact on uint8; padding first keeps its
        # own border rule from ever being consulted.
        r = k // 2
        padded = cv2.copyMakeBorder(img, r, r, r, r, cv2.BORDER_REFLECT_101)
        return np.ascontiguousarray(cv2.medianBlur(padded, k)[r:r + h, r:r + w])
    return ndi.median_filter(img, size=(k, l), mode="mirror")
