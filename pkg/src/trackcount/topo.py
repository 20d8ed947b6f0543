"""Region separation, thinning and neighbourhood classification of skeleton pixels."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, FrozenSet, List

import numpy as np
import scipy.ndimage as ndi
from skimage.morphology import skeletonize as _sk_skeletonize

from .raster import PixelCoord, as_binary

EIGHT = np.ones((3, 3), dtype=bool)
OFFSETS = tuple((dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0))


class PixelClass(str, enum.Enum):
    EXTREMITY = "extremity"
    INTERSECTION = "intersection"
    COMMON = "common"
    ISOLATED = "isolated"


@dataclass(frozen=True)
class LabeledImage:
    labels: np.ndarray
    count: int

    @property
    def shape(self):
        return self.labels.shape


@dataclass(frozen=True)
class Region:
    """One 8-connected foreground component.

    ``mask`` is the tight crop of the component; ``offset`` is the
    ``(row, col)`` of its top-left corner in the source image.
    """
    label: int
    offset: PixelCoord
    mask: np.ndarray

    @property
    def bbox(self):
        r0, c0 = self.offset
        h, w = self.mask.shape
        return (r0, c0, r0 + h - 1, c0 + w - 1)

    @property
    def pixels(self) -> FrozenSet[PixelCoord]:
        r0, c0 = self.offset
        rr, cc = np.nonzero(self.mask)
        return frozenset(zip((rr + r0).tolist(), (cc + c0).tolist()))

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    @classmethod
    def from_pixels(cls, pixels, label: int = 1) -> "Region":
        pts = np.asarray(sorted(pixels), dtype=np.int64).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("region must contain at least one pixel")
        r0, c0 = pts.min(axis=0)
        r1, c1 = pts.max(axis=0)
        mask = np.zeros((r1 - r0 + 1, c1 - c0 + 1), dtype=bool)
        mask[pts[:, 0] - r0, pts[:, 1] - c0] = True
        return cls(label, (int(r0), int(c0)), mask)


@dataclass(frozen=True)
class Skeleton:
    pixels: FrozenSet[PixelCoord]
    source_label: int = 0

    def __len__(self):
        return len(self.pixels)

    def neighbours(self, p: PixelCoord) -> List[PixelCoord]:
        r, c = p
        return [(r + dr, c + dc) for dr, dc in OFFSETS if (r + dr, c + dc) in self.pixels]


def label_regions(mask) -> LabeledImage:
    """8-connected labelling, labels numbered in raster order of first pixel."""
    labels, n = ndi.label(as_binary(mask), structure=EIGHT)
    return LabeledImage(labels, int(n))


def regions(lab: LabeledImage) -> List[Region]:
    out = []
    for i, sl in enumerate(ndi.find_objects(lab.labels), start=1):
        if sl is None:
            continue
        out.append(Region(i, (sl[0].start, sl[1].start), lab.labels[sl] == i))
    return out


# N8 neighbours in circular order starting east: x1..x8
_RING = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


def _is_simple(img: np.ndarray, r: int, c: int) -> bool:
    """Yokoi 8-connectivity number equals 1 (deletion keeps topology)."""
    x = [not img[r + dr, c + dc] for dr, dc in _RING]
    n = 0
    for k in (0, 2, 4, 6):
        n += x[k] - (x[k] and x[(k + 1) % 8] and x[(k + 2) % 8])
    return n == 1


def _keeps_connected(img: np.ndarray, r: int, c: int) -> bool:
    """Foreground 8-neighbours of (r, c) stay 8-connected without it."""
    ring = img[r - 1:r + 2, c - 1:c + 2].copy()
    ring[1, 1] = False
    return ndi.label(ring, structure=EIGHT)[1] == 1


def _break_blocks(img: np.ndarray) -> np.ndarray:
    """Delete pixels from fully set 2x2 blocks, in raster order.

    A simple pixel is preferred.  Failing that, a pixel whose neighbours stay
    connected is removed, which may merge enclosed background but never
    splits the foreground.  ``img`` must have a one-pixel background frame.
    """
    img = img.copy()
    changed = True
    while changed:
        changed = False
        blocks = img[:-1, :-1] & img[1:, :-1] & img[:-1, 1:] & img[1:, 1:]
        for r, c in zip(*np.nonzero(blocks)):
            quad = ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1))
            if not all(img[p] for p in quad):
                continue
            pick = next((p for p in quad if _is_simple(img, *p)), None)
            if pick is None:
                pick = next((p for p in quad if _keeps_connected(img, *p)), None)
            if pick is not None:
                img[pick] = False
                changed = True
    return img


def skeletonize(region: Region) -> Skeleton:
    """Thin a region to a unit-width, topology-preserving skeleton.

    Uses Lee's thinning on the region crop padded by one background pixel,
    then deletes simple pixels from any 2x2 block the thinning left behind.
    """
    padded = np.pad(region.mask, 1)
    skel = _break_blocks(_sk_skeletonize(padded, method="lee").astype(bool))
    rr, cc = np.nonzero(skel)
    r0, c0 = region.offset
    pixels = frozenset(zip((rr - 1 + r0).tolist(), (cc - 1 + c0).tolist()))
    if not pixels:
        # Thinning never deletes an isolated point, so this is only a guard.
        pixels = frozenset([min(region.pixels)])
    return Skeleton(pixels, region.label)


def classify_pixels(skel: Skeleton) -> Dict[PixelCoord, PixelClass]:
    """Class of every skeleton pixel from its count of skeleton 8-neighbours."""
    if not skel.pixels:
        raise ValueError("skeleton is empty")
    out = {}
    for p in skel.pixels:
        n = len(skel.neighbours(p))
        if n == 0:
            out[p] = PixelClass.ISOLATED
        elif n == 1:
            out[p] = PixelClass.EXTREMITY
        elif n == 2:
            out[p] = PixelClass.COMMON
        else:
            out[p] = PixelClass.INTERSECTION
    return out


def pixels_of(classes: Dict[PixelCoord, PixelClass], kind: PixelClass) -> List[PixelCoord]:
    return sorted(p for p, k in classes.items() if k == kind)
