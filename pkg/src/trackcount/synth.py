"""Seeded synthetic photomicrographs with known track counts.

Tracks are dark capsules (a segment thickened by a disc) on a bright
background with additive uniform noise.  Isolated tracks keep a clearance
from each other and from every image border; crossing pairs share one
interior point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

Point = Tuple[float, float]
Segment = Tuple[Point, Point]


class CapacityError(RuntimeError):
    """Tracks could not be placed within the retry budget."""


@dataclass(frozen=True)
class SynthSpec:
    width: int = 512
    height: int = 512
    n_tracks: int = 12
    length_range: Tuple[float, float] = (24.0, 44.0)
    width_range: Tuple[float, float] = (5.0, 8.0)
    overlap_prob: float = 0.0
    background: int = 200
    track_intensity: int = 60
    noise: int = 25
    seed: int = 0
    forced_crossings: int = 0
    clearance: float = 10.0
    border: int = 12
    max_retries: int = 2000

    def __post_init__(self):
        if self.track_intensity >= self.background:
            raise ValueError("tracks must be darker than the background")
        for lo, hi in (self.length_range, self.width_range):
            if not 0 < lo <= hi:
                raise ValueError("ranges must be positive and non-empty")
        if not 0.0 <= self.overlap_prob <= 1.0:
            raise ValueError("overlap_prob must lie in [0, 1]")
        if self.n_tracks < 0 or 2 * self.forced_crossings > self.n_tracks:
            raise ValueError("forced crossings need two tracks each")


@dataclass
class GroundTruth:
    seed: int
    n_tracks: int
    endpoints: List[Segment] = field(default_factory=list)
    widths: List[float] = field(default_factory=list)
    crossings: List[Tuple[int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "n_tracks": self.n_tracks,
            "endpoints": [[list(a), list(b)] for a, b in self.endpoints],
            "crossings": [list(c) for c in self.crossings],
        }


def _seg_dist(p: Segment, q: Segment) -> float:
    """Minimum distance between two 2-D segments."""
    (a, b), (c, d) = p, q
    a, b, c, d = map(np.asarray, (a, b, c, d))

    def point_seg(x, s0, s1):
        v = s1 - s0
        t = np.clip(np.dot(x - s0, v) / max(np.dot(v, v), 1e-12), 0.0, 1.0)
        return float(np.linalg.norm(x - (s0 + t * v)))

    def cross(u, v):
        return u[0] * v[1] - u[1] * v[0]

    r, s = b - a, d - c
    den = cross(r, s)
    if den != 0:
        t = cross(c - a, s) / den
        u = cross(c - a, r) / den
        if 0 <= t <= 1 and 0 <= u <= 1:
            return 0.0
    return min(point_seg(a, c, d), point_seg(b, c, d), point_seg(c, a, b), point_seg(d, a, b))


def _segment(center: Point, length: float, angle: float, t: float = 0.5) -> Segment:
    """Segment of ``length`` at ``angle`` with ``center`` at fraction ``t``."""
    dr, dc = math.sin(angle), math.cos(angle)
    r, c = center
    a = (r - t * length * dr, c - t * length * dc)
    b = (r + (1 - t) * length * dr, c + (1 - t) * length * dc)
    return a, b


def _inside(seg: Segment, w: float, spec: SynthSpec) -> bool:
    pad = spec.border + w / 2
    return all(pad <= r <= spec.height - 1 - pad and pad <= c <= spec.width - 1 - pad
               for r, c in seg)


def _render(spec: SynthSpec, segs: List[Segment], widths: List[float], rng) -> np.ndarray:
    img = np.full((spec.height, spec.width), float(spec.background))
    for (a, b), w in zip(segs, widths):
        half = w / 2
        r0 = max(int(math.floor(min(a[0], b[0]) - half)) - 1, 0)
        r1 = min(int(math.ceil(max(a[0], b[0]) + half)) + 2, spec.height)
        c0 = max(int(math.floor(min(a[1], b[1]) - half)) - 1, 0)
        c1 = min(int(math.ceil(max(a[1], b[1]) + half)) + 2, spec.width)
        rr, cc = np.mgrid[r0:r1, c0:c1].astype(float)
        vr, vc = b[0] - a[0], b[1] - a[1]
        t = np.clip(((rr - a[0]) * vr + (cc - a[1]) * vc) / (vr * vr + vc * vc), 0, 1)
        d = np.hypot(rr - (a[0] + t * vr), cc - (a[1] + t * vc))
        img[r0:r1, c0:c1][d <= half] = spec.track_intensity
    if spec.noise:
        img += rng.uniform(-spec.noise, spec.noise, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate(spec: SynthSpec) -> Tuple[np.ndarray, GroundTruth]:
    """Render ``spec.n_tracks`` tracks and return the image with ground truth."""
    rng = np.random.default_rng(spec.seed)
    segs: List[Segment] = []
    widths: List[float] = []
    partner: List[int] = []          # index of the crossing partner, or -1
    crossings: List[Tuple[int, int]] = []

    def clear_of_all(seg, w, skip=()):
        return all(_seg_dist(seg, s) >= (w + ws) / 2 + spec.clearance
                   for i, (s, ws) in enumerate(zip(segs, widths)) if i not in skip)

    def place_single():
        for _ in range(spec.max_retries):
            length = rng.uniform(*spec.length_range)
            w = rng.uniform(*spec.width_range)
            center = (rng.uniform(0, spec.height), rng.uniform(0, spec.width))
            seg = _segment(center, length, rng.uniform(0, math.pi))
            if _inside(seg, w, spec) and clear_of_all(seg, w):
                segs.append(seg)
                widths.append(w)
                partner.append(-1)
                return len(segs) - 1
        raise CapacityError(f"could not place track {len(segs) + 1} of {spec.n_tracks}")

    def place_crossing(base: int) -> bool:
        (a, b), wb = segs[base], widths[base]
        base_angle = math.atan2(b[0] - a[0], b[1] - a[1])
        for _ in range(spec.max_retries // 10):
            s = rng.uniform(0.3, 0.7)
            center = (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))
            diff = rng.uniform(math.radians(30), math.radians(90)) * rng.choice((-1, 1))
            length = rng.uniform(*spec.length_range)
            w = rng.uniform(*spec.width_range)
            seg = _segment(center, length, base_angle + diff, rng.uniform(0.3, 0.7))
            # every arm must stick out past its partner or thinning absorbs it
            sin = abs(math.sin(diff))
            arms_b = (s * math.dist(a, b), (1 - s) * math.dist(a, b))
            arms_n = (math.dist(seg[0], center), math.dist(seg[1], center))
            protrudes = (min(arms_n) * sin >= wb / 2 + w
                         and min(arms_b) * sin >= w / 2 + wb)
            if protrudes and _inside(seg, w, spec) and clear_of_all(seg, w, skip=(base,)):
                segs.append(seg)
                widths.append(w)
                partner.append(base)
                partner[base] = len(segs) - 1
                crossings.append((base, len(segs) - 1))
                return True
        return False

    for _ in range(spec.forced_crossings):
        for _ in range(spec.max_retries):
            base = place_single()
            if place_crossing(base):
                break
            segs.pop(), widths.pop(), partner.pop()
        else:
            raise CapacityError("could not place a crossing pair")

    while len(segs) < spec.n_tracks:
        free = [i for i, p in enumerate(partner) if p < 0]
        if free and spec.overlap_prob > 0 and rng.random() < spec.overlap_prob:
            if place_crossing(int(rng.choice(free))):
                continue
        place_single()

    img = _render(spec, segs, widths, rng)
    truth = GroundTruth(spec.seed, len(segs), segs, widths, crossings)
    return img, truth
