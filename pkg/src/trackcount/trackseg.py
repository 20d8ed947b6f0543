"""Separation and counting of overlapping tracks.

Each region is thinned; pairs of skeleton end points are joined both by the
shortest path along the skeleton (the route) and by a straight rasterized
segment (the chord).  The pair enclosing the smallest area between route and
chord is taken as one track, its end points are retired, and the search
repeats.  An unpaired end point is joined to the nearest junction pixel.
"""
from __future__ import annotations

import enum
import heapq
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import binarize as bz
from .raster import DEFAULT_WINDOW, PixelCoord, as_gray, median_filter
from .topo import (PixelClass, Region, Skeleton, classify_pixels, label_regions,
                   pixels_of, regions, skeletonize)

SQRT2 = math.sqrt(2.0)
_STEPS = tuple((dr, dc, SQRT2 if dr and dc else 1.0)
               for dr in (-1, 0, 1) for dc in (-1, 0, 1) if dr or dc)


class UnreachableError(ValueError):
    pass


class Degenerate(str, enum.Enum):
    NONE = "none"
    SINGLE_PIXEL = "single_pixel"
    NO_INTERSECTIONS = "no_intersections"
    CLOSED_LOOP = "closed_loop"


@dataclass(frozen=True)
class Route:
    path: Tuple[PixelCoord, ...]
    cost: float


@dataclass(frozen=True)
class Chord:
    a: PixelCoord
    b: PixelCoord
    raster: Tuple[PixelCoord, ...]
    euclid: float


@dataclass(frozen=True)
class TrackCandidate:
    endpoints: Tuple[PixelCoord, PixelCoord]
    route: Route
    chord: Chord
    inner_area: int
    closes_on_intersection: bool = False
    via_intersection: bool = False


@dataclass
class RegionCount:
    label: int
    n_tracks: int
    candidates: List[TrackCandidate] = field(default_factory=list)
    degenerate: Degenerate = Degenerate.NONE
    bbox: Optional[Tuple[int, int, int, int]] = None
    extremities: List[PixelCoord] = field(default_factory=list)
    intersections: List[PixelCoord] = field(default_factory=list)


@dataclass(frozen=True)
class PipelineConfig:
    method: bz.Method = bz.Method.ISODATA
    threshold: Optional[int] = None
    polarity: bz.Polarity = bz.Polarity.DARK
    window: Tuple[int, int] = DEFAULT_WINDOW
    min_size: int = bz.DEFAULT_MIN_SIZE
    area: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "method", bz.Method(self.method))
        object.__setattr__(self, "polarity", bz.Polarity(self.polarity))
        object.__setattr__(self, "window", tuple(int(w) for w in self.window))
        k, l = self.window
        if k < 1 or l < 1 or k % 2 == 0 or l % 2 == 0:
            raise ValueError(f"window dimensions must be odd, got {k}x{l}")
        if self.min_size < 0:
            raise ValueError("min_size must be >= 0")
        if self.area is not None and self.area <= 0:
            raise ValueError("area must be > 0")
        if self.threshold is not None and not 0 <= self.threshold <= 255:
            raise ValueError("threshold must lie in [0, 255]")

    def snapshot(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["polarity"] = self.polarity.value
        d["window"] = list(self.window)
        return d


@dataclass
class CountReport:
    image: str
    total_tracks: int
    regions: List[RegionCount]
    config: dict
    threshold: Optional[int]
    elapsed_s: float
    labels: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def n_regions(self) -> int:
        return len(self.regions)


# -- geometry -----------------------------------------------------------------

def _dijkstra(pixels, src: PixelCoord, dst: Optional[PixelCoord] = None):
    dist = {src: 0.0}
    prev: Dict[PixelCoord, PixelCoord] = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, p = heapq.heappop(heap)
        if p in done:
            continue
        done.add(p)
        if p == dst:
            break
        r, c = p
        for dr, dc, w in _STEPS:
            q = (r + dr, c + dc)
            if q not in pixels or q in done:
                continue
            nd = d + w
            if nd < dist.get(q, math.inf) - 1e-12:
                dist[q] = nd
                prev[q] = p
                heapq.heappush(heap, (nd, q))
    return dist, prev


def _walk_back(prev, src, dst) -> Tuple[PixelCoord, ...]:
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return tuple(reversed(path))


def shortest_route(skel: Skeleton, a: PixelCoord, b: PixelCoord) -> Route:
    """Minimum-cost 8-connected path from ``a`` to ``b`` along the skeleton.

    Orthogonal steps cost 1 and diagonal steps sqrt(2).  Equal-cost frontier
    pixels are expanded in (row, col) order, which fixes the path on ties.
    """
    a, b = tuple(a), tuple(b)
    for p in (a, b):
        if p not in skel.pixels:
            raise ValueError(f"pixel {p} is not on the skeleton")
    dist, prev = _dijkstra(skel.pixels, a, b)
    if b not in dist:
        raise UnreachableError(f"{b} cannot be reached from {a} along the skeleton")
    return Route(_walk_back(prev, a, b), dist[b])


def rasterize_chord(a: PixelCoord, b: PixelCoord) -> Chord:
    """Bresenham segment from ``a`` to ``b`` with its exact Euclidean length."""
    r0, c0 = (int(v) for v in a)
    r1, c1 = (int(v) for v in b)
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    err = dc - dr
    r, c = r0, c0
    out = [(r, c)]
    while (r, c) != (r1, c1):
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr
        out.append((r, c))
    return Chord((r0, c0), (r1, c1), tuple(out), math.hypot(r1 - r0, c1 - c0))


def inner_area(route: Route, chord: Chord) -> int:
    """Pixels enclosed by the closed curve formed by route and chord.

    The curve is drawn in its bounding box padded by one pixel; background is
    flood filled (4-connected) from outside and whatever is neither reached
    nor on the curve is enclosed.  Several pockets all count.
    """
    ends = {route.path[0], route.path[-1]}
    if ends != {chord.a, chord.b}:
        raise ValueError("route and chord must share both end points")
    pts = np.array(route.path + chord.raster)
    lo = pts.min(axis=0) - 1
    hi = pts.max(axis=0) + 1
    curve = np.zeros(hi - lo + 1, dtype=bool)
    curve[pts[:, 0] - lo[0], pts[:, 1] - lo[1]] = True
    filled = bz.fill_holes(curve)
    return int(np.count_nonzero(filled & ~curve))


def _candidate(route: Route, intersections, closes=False) -> TrackCandidate:
    a, b = route.path[0], route.path[-1]
    chord = rasterize_chord(a, b)
    via = any(p in intersections for p in route.path)
    return TrackCandidate((a, b), route, chord, inner_area(route, chord), closes, via)


# -- per-region counting ------------------------------------------------------

def pair_extremities(skel: Skeleton, classes: Dict[PixelCoord, PixelClass]) -> RegionCount:
    """Greedy smallest-inner-area pairing of skeleton end points.

    Route, chord and area of a pair do not depend on which pairs were retired
    earlier, so all pairs are scored once and then taken in order of
    (area, sorted end points), skipping pairs with a retired end point.
    """
    ext = pixels_of(classes, PixelClass.EXTREMITY)
    inter = pixels_of(classes, PixelClass.INTERSECTION)
    rc = RegionCount(skel.source_label, 0, extremities=ext, intersections=inter)
    if not inter:
        raise ValueError("pair_extremities needs at least one intersection pixel")
    if not ext:
        rc.degenerate = Degenerate.CLOSED_LOOP
        return rc

    inter_set = set(inter)
    scored = []
    for i, a in enumerate(ext):
        dist, prev = _dijkstra(skel.pixels, a)
        for b in ext[i + 1:]:
            if b not in dist:
                continue
            cand = _candidate(Route(_walk_back(prev, a, b), dist[b]), inter_set)
            scored.append(((cand.inner_area, a, b), cand))
    scored.sort(key=lambda s: s[0])

    used = set()
    for _, cand in scored:
        a, b = cand.endpoints
        if a in used or b in used:
            continue
        used.update((a, b))
        rc.candidates.append(cand)

    for leftover in (p for p in ext if p not in used):
        target = min(inter, key=lambda q: ((q[0] - leftover[0]) ** 2 + (q[1] - leftover[1]) ** 2, q))
        route = shortest_route(skel, leftover, target)
        rc.candidates.append(_candidate(route, inter_set, closes=True))

    rc.n_tracks = len(rc.candidates)
    return rc


def count_skeleton(skel: Skeleton) -> RegionCount:
    classes = classify_pixels(skel)
    ext = pixels_of(classes, PixelClass.EXTREMITY)
    inter = pixels_of(classes, PixelClass.INTERSECTION)
    if all(k == PixelClass.ISOLATED for k in classes.values()):
        return RegionCount(skel.source_label, 0, degenerate=Degenerate.SINGLE_PIXEL,
                           extremities=[], intersections=[])
    if inter:
        return pair_extremities(skel, classes)
    if len(ext) != 2:
        # no end points and no junctions: a closed ring
        return RegionCount(skel.source_label, 0, degenerate=Degenerate.CLOSED_LOOP,
                           extremities=ext, intersections=[])
    cand = _candidate(shortest_route(skel, ext[0], ext[1]), set())
    return RegionCount(skel.source_label, 1, [cand], Degenerate.NO_INTERSECTIONS,
                       extremities=ext, intersections=[])


def count_region(region: Region) -> RegionCount:
    rc = count_skeleton(skeletonize(region))
    rc.bbox = region.bbox
    return rc


# -- whole image --------------------------------------------------------------

def binarize_image(img, cfg: PipelineConfig):
    """Filtered, thresholded and cleaned mask plus the threshold used.

    A histogram with a single populated level yields an empty mask and
    threshold ``None``.
    """
    smooth = median_filter(img, cfg.window)
    if cfg.threshold is not None:
        t = bz.ThresholdResult(bz.Method.MANUAL, int(cfg.threshold), 0, cfg.polarity)
    else:
        try:
            t = bz.THRESHOLDS[cfg.method](bz.compute_histogram(smooth))
        except bz.DegenerateHistogramError:
            return np.zeros(smooth.shape, dtype=bool), None
        t = bz.ThresholdResult(t.method, t.threshold, t.iterations, cfg.polarity)
    mask = bz.apply_threshold(smooth, t)
    mask = bz.remove_small_objects(mask, cfg.min_size)
    mask = bz.fill_holes(mask)
    mask = bz.clear_lower_right(mask)
    return mask, t.threshold


def count_image(img, cfg: PipelineConfig = PipelineConfig(), image_id: str = "") -> CountReport:
    """Run the full pipeline on one gray image.

    median filter -> threshold -> remove small regions -> fill holes ->
    clear lower/right borders -> label -> per-region track count.
    """
    img = as_gray(img)
    t0 = time.perf_counter()
    mask, threshold = binarize_image(img, cfg)
    lab = label_regions(mask)
    counts = [count_region(r) for r in regions(lab)]
    elapsed = time.perf_counter() - t0
    return CountReport(
        image=image_id,
        total_tracks=sum(rc.n_tracks for rc in counts),
        regions=counts,
        config=cfg.snapshot(),
        threshold=threshold,
        elapsed_s=elapsed,
        labels=lab.labels,
    )

