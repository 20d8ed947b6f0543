"""Track densities, the GQR efficiency factor, Poisson KS test and FT ages."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import poisson

LAMBDA_F = 8.5e-17   # spontaneous fission decay constant of 238U, 1/a
R_U = 3.2e-8         # induced fissions per uranium atom
KS_SERIES_RTOL = 1e-8


@dataclass(frozen=True)
class TrackDensity:
    n: int
    images: int
    area_per_image: float
    rho: float
    sigma: float
    per_image_mean: float
    per_image_sigma: float


@dataclass(frozen=True)
class GqrResult:
    gqr: float
    sigma: float
    n_ed: int
    n_is: int


@dataclass(frozen=True)
class KsResult:
    d: float
    p_value: float
    rate: float
    n: int


@dataclass(frozen=True)
class AgeParams:
    lambda_total: float
    c238: float
    rho_s: float
    rho_i: float
    gqr: float
    lambda_f: float = LAMBDA_F
    r_u: float = R_U

    def __post_init__(self):
        for name in ("lambda_total", "c238", "rho_i", "gqr", "lambda_f", "r_u"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.rho_s >= 0:
            raise ValueError("rho_s must be >= 0")


@dataclass(frozen=True)
class AgeResult:
    age_ma: float
    argument: float


def track_density(counts: Sequence[int], area_per_image: float) -> TrackDensity:
    """Pooled density of per-image counts with one Poisson standard deviation.

    ``rho = N / (images * area)`` and ``sigma = rho / sqrt(N)``; the
    per-image figures are ``N / images`` and ``sqrt(N) / images``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or len(counts) < 1:
        raise ValueError("need counts for at least one image")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    if not area_per_image > 0:
        raise ValueError("area_per_image must be > 0")
    n, images = int(counts.sum()), len(counts)
    rho = n / (images * area_per_image)
    sigma = rho / math.sqrt(n) if n else math.nan
    return TrackDensity(n, images, float(area_per_image), rho, sigma,
                        n / images, math.sqrt(n) / images)


def pooled_density(n: int, images: int, area_per_image: float) -> TrackDensity:
    """Density from a pooled total when per-image counts are not at hand."""
    if images < 1:
        raise ValueError("images must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    if not area_per_image > 0:
        raise ValueError("area_per_image must be > 0")
    rho = n / (images * area_per_image)
    sigma = rho / math.sqrt(n) if n else math.nan
    return TrackDensity(int(n), int(images), float(area_per_image), rho, sigma,
                        n / images, math.sqrt(n) / images)


def compute_gqr(ed: TrackDensity, is_: TrackDensity) -> GqrResult:
    """Ratio of external-detector to internal-surface induced track density.

    ``sigma / GQR = sqrt(1/N_ED + 1/N_IS)``.
    """
    if not math.isclose(ed.area_per_image, is_.area_per_image, rel_tol=1e-12):
        raise ValueError(
            f"area per image differs: {ed.area_per_image} vs {is_.area_per_image}")
    if ed.n == 0 or is_.n == 0:
        raise ZeroDivisionError("GQR undefined with zero tracks in either detector")
    gqr = ed.rho / is_.rho
    return GqrResult(gqr, gqr * math.sqrt(1.0 / ed.n + 1.0 / is_.n), ed.n, is_.n)


def kolmogorov_sf(x: float, rtol: float = KS_SERIES_RTOL) -> float:
    """Asymptotic P(sqrt(n) D > x) = 2 sum_k (-1)^(k-1) exp(-2 k^2 x^2)."""
    if x < 0.2:
        # tail is 1 - O(1e-12) here and the series converges slowly
        return 1.0
    total = 0.0
    k = 1
    while True:
        term = 2.0 * math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term <= rtol * abs(total):
            break
        k += 1
    return min(max(total, 0.0), 1.0)


def ks_statistic(counts, rate: float) -> float:
    """Largest gap between the empirical and Poisson CDFs over the integers.

    Both CDFs are right-continuous steps on the integers, so the supremum over
    the real line is attained at some integer in ``[0, max(counts)]``.
    """
    counts = np.sort(np.asarray(counts, dtype=np.int64))
    k = np.arange(0, counts[-1] + 1)
    ecdf = np.searchsorted(counts, k, side="right") / len(counts)
    return float(np.max(np.abs(ecdf - poisson.cdf(k, rate))))


def poisson_ks(counts: Sequence[int]) -> KsResult:
    """One-sample two-sided KS test of counts against Poisson(sample mean).

    The p-value is the asymptotic Kolmogorov tail at ``sqrt(n) * D``; with a
    discrete null and an estimated rate it is conservative.
    """
    counts = np.asarray(counts)
    if counts.ndim != 1 or len(counts) < 5:
        raise ValueError("need at least 5 counts")
    if np.any(counts < 0) or np.any(counts != np.round(counts)):
        raise ValueError("counts must be non-negative integers")
    rate = float(counts.mean())
    if rate == 0:
        raise ValueError("all counts are zero; Poisson rate is degenerate")
    d = ks_statistic(counts, rate)
    n = len(counts)
    return KsResult(d, kolmogorov_sf(math.sqrt(n) * d), rate, n)


def age_argument(p: AgeParams) -> float:
    return p.gqr * (p.rho_s / p.rho_i) * (p.lambda_total * p.r_u) / (p.lambda_f * p.c238)


def ft_age(p: AgeParams) -> AgeResult:
    """Standardless fission-track age in Ma.

    ``t = ln(1 + GQR (rho_s/rho_i) lambda R_U / (lambda_f C238)) / lambda``.
    """
    x = age_argument(p)
    if not 1.0 + x > 0:
        raise ValueError("non-positive logarithm argument")
    t_years = math.log1p(x) / p.lambda_total
    return AgeResult(t_years / 1e6, x)


def density_ratio_for_age(age_ma: float, p: AgeParams) -> float:
    """rho_s / rho_i giving ``age_ma`` with the other parameters of ``p``."""
    t = age_ma * 1e6
    return math.expm1(p.lambda_total * t) * p.lambda_f * p.c238 / (p.gqr * p.lambda_total * p.r_u)
