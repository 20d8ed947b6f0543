"""Annotated RGB rendering of a :class:`CountReport`."""
from __future__ import annotations

import numpy as np
import scipy.ndimage as ndi
from PIL import Image, ImageDraw

from .raster import as_gray
from .trackseg import CountReport

MAGENTA = (255, 0, 255)   # outline of regions holding one track
ORANGE = (255, 140, 0)    # outline of regions with 0 or several tracks
GREEN = (0, 200, 0)       # end points and chords
BLUE = (30, 60, 255)      # routes along the skeleton
YELLOW = (255, 230, 0)    # region counts


def _paint(rgb, pts, color):
    if not pts:
        return
    p = np.asarray(pts)
    ok = (p[:, 0] >= 0) & (p[:, 0] < rgb.shape[0]) & (p[:, 1] >= 0) & (p[:, 1] < rgb.shape[1])
    rgb[p[ok, 0], p[ok, 1]] = color


def render_overlay(img, report: CountReport) -> np.ndarray:
    """Draw outlines, routes, chords, end points and per-region counts.

    The report is only read; rendering twice gives identical arrays.
    """
    gray = as_gray(img)
    rgb = np.repeat(gray[..., None], 3, axis=2).copy()
    labels = report.labels
    if labels is not None and report.regions:
        edge = labels != ndi.grey_erosion(labels, size=(3, 3), mode="nearest")
        edge &= labels > 0
        single = np.zeros(labels.max() + 1, dtype=bool)
        for rc in report.regions:
            single[rc.label] = rc.n_tracks == 1
        rgb[edge & single[labels]] = MAGENTA
        rgb[edge & ~single[labels]] = ORANGE

    for rc in report.regions:
        for cand in rc.candidates:
            _paint(rgb, list(cand.route.path), BLUE)
        for cand in rc.candidates:
            _paint(rgb, list(cand.chord.raster), GREEN)
        for r, c in rc.extremities:
            _paint(rgb, [(r + dr, c + dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)], GREEN)

    im = Image.fromarray(rgb)
    draw = ImageDraw.Draw(im)
    for rc in report.regions:
        if rc.bbox is None:
            continue
        r0, c0, _, c1 = rc.bbox
        draw.text((c1 + 2, max(r0 - 10, 0)), str(rc.n_tracks), fill=YELLOW)
    return np.asarray(im)
