"""Global histogram thresholds and binary clean-up tools.

Threshold convention: a threshold ``T`` splits intensities into ``i <= T``
(the lower class) and ``i > T`` (the upper class).  With dark foreground,
the default, pixels at or below ``T`` are foreground.

When several thresholds reach the same optimum the smallest one is returned.
Otsu and Yen objectives are compared in exact integer arithmetic so that
this tie rule holds exactly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import cv2
import numpy as np

from .raster import as_binary, as_gray

DEFAULT_MIN_SIZE = 25
LI_TOLERANCE = 0.5
LI_MAX_ITER = 100


class Method(str, enum.Enum):
    OTSU = "otsu"
    YEN = "yen"
    LI = "li"
    ISODATA = "isodata"
    MANUAL = "manual"


class Polarity(str, enum.Enum):
    DARK = "dark"
    BRIGHT = "bright"


class DegenerateHistogramError(ValueError):
    """Fewer than two populated intensity levels; no two classes exist."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, last_iterates):
        super().__init__(f"{message}; last iterates {last_iterates}")
        self.last_iterates = last_iterates


@dataclass(frozen=True)
class Histogram:
    bins: np.ndarray
    total: int

    def __post_init__(self):
        if self.bins.shape != (256,):
            raise ValueError("histogram must have 256 bins")
        if np.any(self.bins < 0) or int(self.bins.sum()) != self.total:
            raise ValueError("histogram bins must be non-negative and sum to total")

    @classmethod
    def from_counts(cls, counts) -> "Histogram":
        bins = np.zeros(256, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        bins[: len(counts)] = counts
        return cls(bins, int(bins.sum()))

    def support(self) -> tuple[int, int]:
        """Lowest and highest populated level; raises if fewer than two levels."""
        nz = np.flatnonzero(self.bins)
        if len(nz) < 2:
            raise DegenerateHistogramError(
                f"histogram has {len(nz)} populated level(s); need at least 2")
        return int(nz[0]), int(nz[-1])


@dataclass(frozen=True)
class ThresholdResult:
    method: Method
    threshold: int
    iterations: int = 0
    polarity: Polarity = Polarity.DARK

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold {self.threshold} outside [0, 255]")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


def compute_histogram(img) -> Histogram:
    img = as_gray(img)
    bins = np.bincount(img.ravel(), minlength=256).astype(np.int64)
    return Histogram(bins, int(img.size))


def _cumulative(h: Histogram):
    """Python-int prefix sums of counts, first moments and squared counts."""
    counts = [int(c) for c in h.bins]
    n = s = q = 0
    cn, cs, cq = [], [], []
    for i, c in enumerate(counts):
        n += c
        s += i * c
        q += c * c
        cn.append(n)
        cs.append(s)
        cq.append(q)
    return cn, cs, cq


def _argmax_fraction(candidates, num, den) -> int:
    """Smallest candidate maximizing num(t)/den(t); den > 0, all exact ints."""
    best_t, best_num, best_den = None, 0, 1
    for t in candidates:
        a, b = num(t), den(t)
        if best_t is None or a * best_den > best_num * b:
            best_t, best_num, best_den = t, a, b
    return best_t


def threshold_otsu(h: Histogram) -> ThresholdResult:
    """Threshold maximizing the between-class variance.

    ``w0 * w1 * (mu0 - mu1)**2`` is proportional to
    ``(s0 * n1 - s1 * n0)**2 / (n0 * n1)`` in raw counts ``n`` and intensity
    sums ``s``; that ratio is maximized exactly.
    """
    lo, hi = h.support()
    cn, cs, _ = _cumulative(h)
    N, S = cn[-1], cs[-1]

    def num(t):
        n0, s0 = cn[t], cs[t]
        return (s0 * (N - n0) - (S - s0) * n0) ** 2

    def den(t):
        return cn[t] * (N - cn[t])

    return ThresholdResult(Method.OTSU, _argmax_fraction(range(lo, hi), num, den))


def threshold_yen(h: Histogram) -> ThresholdResult:
    """Maximum-correlation threshold.

    The criterion ``-ln(Gb * Gf) + 2 ln(P (1 - P))`` (``G`` the class sums of
    squared bin probabilities, ``P`` the lower-class probability) is a
    monotone transform of ``C0**2 * C1**2 / (Q0 * Q1)`` with class counts
    ``C`` and class sums of squared counts ``Q``, which is compared exactly.
    """
    lo, hi = h.support()
    cn, _, cq = _cumulative(h)
    N, Q = cn[-1], cq[-1]

    def num(t):
        return (cn[t] * (N - cn[t])) ** 2

    def den(t):
        return cq[t] * (Q - cq[t])

    return ThresholdResult(Method.YEN, _argmax_fraction(range(lo, hi), num, den))


def _li_means(bins: np.ndarray, levels: np.ndarray, t: float):
    below = levels <= t
    wb, wf = bins[below].sum(), bins[~below].sum()
    mb = (bins[below] * (levels[below] + 1)).sum() / wb
    mf = (bins[~below] * (levels[~below] + 1)).sum() / wf
    return mb, mf


def li_iterates(h: Histogram, max_iter: int = LI_MAX_ITER):
    """Successive real-valued iterates of the minimum cross-entropy scheme.

    Intensities are offset by +1 inside the means so no logarithm sees 0.
    Yields the starting guess (the mean level) then each update.
    """
    h.support()
    bins = h.bins.astype(np.float64)
    levels = np.arange(256, dtype=np.float64)
    t = float((bins * levels).sum() / bins.sum())
    yield t
    for _ in range(max_iter):
        mb, mf = _li_means(bins, levels, t)
        t = (mf - mb) / (math.log(mf) - math.log(mb)) - 1.0
        yield t


def li_objective(h: Histogram) -> np.ndarray:
    """:func:`li_cross_entropy` for every cut ``0..254`` at once (inf where a class is empty)."""
    levels = np.arange(1, 257, dtype=np.float64)
    b = h.bins.astype(np.float64)
    wb, mb = np.cumsum(b)[:-1], np.cumsum(b * levels)[:-1]
    wf, mf = b.sum() - wb, (b * levels).sum() - mb
    out = np.full(255, np.inf)
    ok = (wb > 0) & (wf > 0)
    out[ok] = -(mb[ok] * np.log(mb[ok] / wb[ok]) + mf[ok] * np.log(mf[ok] / wf[ok]))
    return out


def threshold_li(h: Histogram, tol: float = LI_TOLERANCE,
                 max_iter: int = LI_MAX_ITER, refine: str = "global") -> ThresholdResult:
    """Minimum cross-entropy threshold by Li-Tam fixed-point iteration.

    Stops once successive iterates differ by less than ``tol``.  The
    stationarity condition behind the update is first order only, and on flat
    histograms the floor of the last iterate can sit a few levels off the
    discrete optimum, so the cut is finished by steepest descent on
    :func:`li_cross_entropy` over neighbouring levels.  Every iteration and
    descent step counts towards ``iterations``.

    The iteration starts at the mean level and can settle in a local minimum
    when the objective is multimodal.  With ``refine="global"`` (default) the
    cut is then replaced by the smallest global minimizer of the objective if
    that is strictly lower; ``refine="local"`` keeps the iteration's answer.
    """
    if refine not in ("global", "local"):
        raise ValueError(f"refine must be 'global' or 'local', got {refine!r}")
    cut, n = _li_local(h, tol, max_iter)
    if refine == "global":
        obj = li_objective(h)
        cuts = np.flatnonzero(h.bins[:h.support()[1]])
        best = int(cuts[np.argmin(obj[cuts])])
        if obj[best] < obj[cut] - 1e-12 * abs(obj[cut]):
            cut = best
    return ThresholdResult(Method.LI, cut, n)


def _li_local(h: Histogram, tol: float, max_iter: int):
    lo, hi = h.support()
    it = li_iterates(h, max_iter)
    prev = next(it)
    n = 0
    for t in it:
        n += 1
        if abs(t - prev) < tol:
            break
        prev = t
    else:
        raise ConvergenceError(f"Li iteration did not converge in {max_iter} steps", (prev, t))

    # A cut inside a run of empty bins gives the same partition as the
    # populated level below it, so the descent walks populated levels only
    # and ties resolve to the smallest equivalent threshold.
    cuts = np.flatnonzero(h.bins[:hi])
    obj = li_objective(h)
    k = int(np.searchsorted(cuts, min(max(math.floor(t), lo), hi - 1), side="right")) - 1
    while True:
        step = k
        for j in (k - 1, k + 1):
            if 0 <= j < len(cuts) and obj[cuts[j]] < obj[cuts[step]]:
                step = j
        if step == k:
            return int(cuts[k]), n
        k = step
        n += 1


def li_cross_entropy(h: Histogram, t: int) -> float:
    """Objective minimized by :func:`threshold_li` for the integer cut ``t``."""
    levels = np.arange(1, 257, dtype=np.float64)
    m = h.bins * levels
    wb, wf = h.bins[: t + 1].sum(), h.bins[t + 1:].sum()
    mb_sum, mf_sum = m[: t + 1].sum(), m[t + 1:].sum()
    return -(mb_sum * math.log(mb_sum / wb) + mf_sum * math.log(mf_sum / wf))


def isodata_update(cn, cs, t: int) -> int:
    n0, s0 = cn[t], cs[t]
    n1, s1 = cn[-1] - n0, cs[-1] - s0
    # floor((s0/n0 + s1/n1) / 2) without rounding error
    return (s0 * n1 + s1 * n0) // (2 * n0 * n1)


def threshold_isodata(h: Histogram) -> ThresholdResult:
    """Ridler-Calvard iteration on integer thresholds.

    Moves to the floor of the midpoint of the two class means until the
    threshold repeats.  The update is non-decreasing in ``t`` and never drops
    below the lowest populated level, so starting there the sequence climbs
    monotonically to the smallest fixed point.  Starting at the mean instead
    can stop inside a dominant background mode when the foreground is sparse.
    """
    lo, hi = h.support()
    cn, cs, _ = _cumulative(h)
    t = lo
    n = 0
    while True:
        new = isodata_update(cn, cs, t)
        n += 1
        if new == t:
            return ThresholdResult(Method.ISODATA, t, n)
        t = new
        if n > 256:  # unreachable for a monotone update on 256 levels
            raise ConvergenceError("ISODATA did not converge", (t, new))


THRESHOLDS = {
    Method.OTSU: threshold_otsu,
    Method.YEN: threshold_yen,
    Method.LI: threshold_li,
    Method.ISODATA: threshold_isodata,
}


def apply_threshold(img, t: ThresholdResult) -> np.ndarray:
    img = as_gray(img)
    if t.polarity == Polarity.BRIGHT:
        return img > t.threshold
    return img <= t.threshold


def _component_labels(mask: np.ndarray):
    """8-connected labels (raster order) and the component count."""
    n, labels = cv2.connectedComponents(mask.view(np.uint8), connectivity=8, ltype=cv2.CV_32S)
    return labels, n - 1


def remove_small_objects(mask, min_size: int = DEFAULT_MIN_SIZE) -> np.ndarray:
    """Drop 8-connected foreground components with fewer than ``min_size`` pixels."""
    mask = as_binary(mask)
    if min_size < 0:
        raise ValueError("min_size must be >= 0")
    if min_size <= 1:
        return mask.copy()
    labels, n = _component_labels(mask)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    keep = sizes >= min_size
    if keep[1:].all():
        return mask.copy()
    keep[0] = False
    return keep[labels]


def fill_holes(mask) -> np.ndarray:
    """Set background not 4-connected to the image border to foreground.

    The mask is framed with background and flood filled from the corner, so
    every background pixel reaching the border is marked in one pass.
    """
    mask = as_binary(mask)
    framed = np.pad(mask, 1).astype(np.uint8)
    cv2.floodFill(framed, None, (0, 0), 2, flags=4)
    return framed[1:-1, 1:-1] != 2


def clear_lower_right(mask) -> np.ndarray:
    """Erase 8-connected components touching the last row or last column."""
    mask = as_binary(mask)
    labels, n = _component_labels(mask)
    drop = np.zeros(n + 1, dtype=bool)
    drop[labels[-1, :]] = True
    drop[labels[:, -1]] = True
    if not drop[1:].any():
        return mask.copy()
    drop[0] = True
    return ~drop[labels]
