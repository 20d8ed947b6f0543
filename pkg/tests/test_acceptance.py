"""Acceptance criteria: one PASS/FAIL line each (see the terminal summary).

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced.  Tolerances are fixed here and are not loosened when a criterion
fails.
"""
import math
import os
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from trackcount import binarize as bz, ftstats as fs
from trackcount.raster import load_gray
from trackcount.synth import SynthSpec, generate
from trackcount.topo import Region, Skeleton, label_regions, regions, skeletonize
from trackcount.trackseg import (PipelineConfig, count_image, count_region, inner_area,
                                 shortest_route)

from oracles import (brute_min_path_cost, enclosed_count, flood_components,
                     isodata_fixed_points, li_brute, otsu_brute, yen_brute)
from shapes import (capsule_mask, ellipse_blob, random_connected_pixels, thick_plus_mask,
                    thick_y_mask)
from test_binarize import random_histograms
from test_ftstats import _sympy_sigma
from test_trackseg import l_loop, square_loop, staircase_loop

GQR_ROWS = {  # method: (N_ED over 49 images, N_IS over 30 images, GQR, sigma)
    "ISODATA": (2136, 2282, 0.57, 0.02),
    "Yen": (2407, 2484, 0.59, 0.02),
    "Li": (2079, 2150, 0.59, 0.02),
    "Manual": (2838, 3114, 0.56, 0.01),
}
REFERENCE_COUNTS = {"isodata": 41, "li": 43, "otsu": 41, "yen": 44}
REFERENCE_IMAGE_ENV = "TRACKCOUNT_REFERENCE_IMAGE"


def test_ac01_gqr_reproduction(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    parts = []
    for name, (n_ed, n_is, g, s) in GQR_ROWS.items():
        res = fs.compute_gqr(fs.pooled_density(n_ed, 49, 1.0), fs.pooled_density(n_is, 30, 1.0))
        worst = max(worst, abs(res.gqr - g), abs(res.sigma - s))
        parts.append(f"{name} {res.gqr:.4f}±{res.sigma:.4f}")
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.005 and elapsed < 1.0
    criterion(1, "GQR table reproduction",
              ok, f"{', '.join(parts)}; max |dev| {worst:.4f} (tol 0.005); {elapsed * 1e3:.1f} ms")
    assert ok


def test_ac02_sigma_propagation(criterion):
    sigma = _sympy_sigma()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        n_ed, n_is = (int(v) for v in rng.integers(1, 10 ** 6, 2))
        k_ed, k_is = (int(v) for v in rng.integers(1, 100, 2))
        res = fs.compute_gqr(fs.pooled_density(n_ed, k_ed, 1.0), fs.pooled_density(n_is, k_is, 1.0))
        ref = sigma(n_ed, n_is, k_ed, k_is, 1.0)
        worst = max(worst, abs(res.sigma - ref) / ref)
    ok = worst <= 1e-12
    criterion(2, "sigma_GQR first-order propagation", ok,
              f"max relative error {worst:.2e} over 1000 pairs (tol 1e-12)")
    assert ok


def test_ac03_threshold_oracles(criterion):
    hists = random_histograms(200, 3)
    t0 = time.perf_counter()
    got = [(bz.threshold_otsu(h).threshold, bz.threshold_yen(h).threshold,
            bz.threshold_li(h).threshold, bz.threshold_isodata(h).threshold) for h in hists]
    elapsed = time.perf_counter() - t0
    bad = {"otsu": 0, "yen": 0, "li": 0, "isodata": 0}
    for h, (o, y, li, iso) in zip(hists, got):
        bins = [int(b) for b in h.bins]
        bad["otsu"] += o != otsu_brute(bins)
        bad["yen"] += y != yen_brute(bins)
        bad["li"] += abs(li - li_brute(bins)) > 1
        bad["isodata"] += min(abs(iso - f) for f in isodata_fixed_points(bins)) > 1
    ok = not any(bad.values()) and elapsed < 5.0
    criterion(3, "threshold oracle equivalence", ok,
              f"mismatches {bad} on 200 histograms; thresholds took {elapsed:.2f} s (limit 5 s)")
    assert ok


def test_ac04_dijkstra_oracle(criterion):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(100):
        pts = random_connected_pixels(rng, int(rng.integers(2, 13)))
        order = sorted(pts)
        a, b = (order[i] for i in rng.choice(len(order), 2, replace=False))
        cost = shortest_route(Skeleton(frozenset(pts)), a, b).cost
        bad += not math.isclose(cost, brute_min_path_cost(pts, a, b), abs_tol=1e-9)
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 10.0
    criterion(4, "Dijkstra vs path enumeration", ok,
              f"{bad}/100 mismatches; {elapsed:.2f} s (limit 10 s)")
    assert ok


def _fifty_loops():
    loops = [square_loop(r, c, s) for s in (3, 5, 8, 10, 14) for r, c in ((0, 0), (7, 3))]
    loops += [l_loop(h, w) for h in (3, 5, 8, 12, 17) for w in (4, 9, 15)]
    loops += [staircase_loop(n, rise, run) for n in (1, 2, 4, 6, 8)
              for rise, run in ((1, 1), (2, 3), (3, 1))]
    loops += [staircase_loop(n, 2, 5) for n in (1, 3)]
    loops += [staircase_loop(n, rise, run) for n in (1, 2, 3, 4) for rise, run in ((1, 4), (4, 2))]
    assert len(loops) == 50
    return loops


def test_ac05_inner_area_oracle(criterion):
    loops = _fifty_loops()
    bad = sum(inner_area(r, c) != enclosed_count(r.path + c.raster) for r, c in loops)
    ok = bad == 0
    criterion(5, "inner area vs flood fill", ok, f"{bad}/50 mismatches")
    assert ok


def test_ac06_skeleton_properties(criterion):
    rng = np.random.default_rng(6)
    not_subset = blocks = split = 0
    n_regions = 0
    for _ in range(200):
        blob = ellipse_blob(rng)
        for region in regions(label_regions(blob)):
            n_regions += 1
            skel = skeletonize(region).pixels
            not_subset += not skel <= region.pixels
            blocks += any({(r, c + 1), (r + 1, c), (r + 1, c + 1)} <= skel for r, c in skel)
            m = np.zeros((blob.shape[0] + 2, blob.shape[1] + 2), bool)
            for r, c in skel:
                m[r + 1, c + 1] = True
            split += len(flood_components(m)) != 1
    ok = not_subset == blocks == split == 0
    criterion(6, "skeleton properties", ok,
              f"{n_regions} regions from 200 blobs: not-subset {not_subset}, "
              f"2x2 blocks {blocks}, component changes {split}")
    assert ok


def _only_region(mask):
    (r,) = regions(label_regions(mask))
    return r


def test_ac07_overlap_separation(criterion):
    counts = {
        "plus": count_region(_only_region(thick_plus_mask())).n_tracks,
        "Y": count_region(_only_region(thick_y_mask())).n_tracks,
        "capsule": count_region(_only_region(capsule_mask((40, 40), (8, 6), (30, 32), 6))).n_tracks,
        "pixel": count_region(Region.from_pixels({(5, 5)})).n_tracks,
    }
    ok = counts == {"plus": 2, "Y": 2, "capsule": 1, "pixel": 0}
    criterion(7, "overlap separation", ok, f"counts {counts} (expected plus 2, Y 2, capsule 1, pixel 0)")
    assert ok


def _synth_accuracy(crossings):
    exact = 0
    for seed in range(100):
        n = int(np.random.default_rng(1000 + seed).integers(10, 21))
        img, truth = generate(SynthSpec(n_tracks=n, seed=seed, forced_crossings=crossings))
        exact += count_image(img).total_tracks == truth.n_tracks
    return exact


def test_ac08_synthetic_accuracy(criterion):
    disjoint, crossed = _synth_accuracy(0), _synth_accuracy(1)
    ok = disjoint >= 95 and crossed >= 80
    criterion(8, "synthetic end-to-end accuracy (ISODATA)", ok,
              f"disjoint {disjoint}/100 exact (need 95), one crossing {crossed}/100 (need 80)")
    assert ok


def test_ac09_reference_image_regression(criterion):
    path = os.environ.get(REFERENCE_IMAGE_ENV)
    if not path or not Path(path).exists():
        criterion(9, "reference muscovite image", None,
                  f"set {REFERENCE_IMAGE_ENV} to the image file to run this criterion")
        pytest.skip(f"{REFERENCE_IMAGE_ENV} not set; supplementary image unavailable")
    img = load_gray(path)
    got = {m: count_image(img, PipelineConfig(method=m)).total_tracks for m in REFERENCE_COUNTS}
    worst = max(abs(got[m] - n) for m, n in REFERENCE_COUNTS.items())
    ok = worst <= 2
    criterion(9, "reference muscovite image", ok,
              f"counts {got} vs {REFERENCE_COUNTS}; max |dev| {worst} (exact wanted, ±2 accepted)")
    assert ok


def test_ac10_timing(criterion):
    img, truth = generate(SynthSpec(width=1024, height=1024, n_tracks=50, seed=10))
    limit = 0.5 if os.environ.get("CI") else 0.1
    count_image(img)  # warm-up
    times = [count_image(img).elapsed_s for _ in range(20)]
    med = statistics.median(times)
    ok = med < limit
    criterion(10, "counting time 1024x1024, 50 tracks", ok,
              f"median {med * 1e3:.1f} ms over 20 runs (limit {limit * 1e3:.0f} ms)")
    assert ok


def test_ac11_ks_calibration(criterion):
    rng = np.random.default_rng(11)
    poisson_rej = sum(fs.poisson_ks(rng.poisson(44, 49)).p_value < 0.05 for _ in range(500))
    uniform_rej = sum(fs.poisson_ks(rng.integers(0, 101, 49)).p_value < 0.05 for _ in range(500))
    ok = poisson_rej <= 50 and uniform_rej >= 450
    criterion(11, "KS calibration", ok,
              f"Poisson(44) rejected {poisson_rej}/500 (max 50); "
              f"uniform rejected {uniform_rej}/500 (min 450)")
    assert ok


def test_ac12_age_limits(criterion):
    base = dict(lambda_total=1.55125e-10, c238=0.992745, rho_i=3.7e5, gqr=0.57)
    zero = fs.ft_age(fs.AgeParams(rho_s=0.0, **base)).age_ma
    p = fs.AgeParams(rho_s=1.0, **base)
    small = fs.AgeParams(rho_s=1e-6 / fs.age_argument(p), **base)
    x = fs.age_argument(small)
    lin_err = abs(fs.ft_age(small).age_ma - x / small.lambda_total / 1e6) / (x / small.lambda_total / 1e6)
    trip = 0.0
    for age in (0.1, 31.4, 500.0, 3000.0):
        ratio = fs.density_ratio_for_age(age, p)
        back = fs.ft_age(fs.AgeParams(rho_s=ratio * base["rho_i"], **base)).age_ma
        trip = max(trip, abs(back - age) / age)
    ok = zero == 0.0 and lin_err <= 1e-5 and trip <= 1e-10
    criterion(12, "ft_age limits", ok,
              f"t(rho_s=0)={zero}; linearization rel err {lin_err:.1e} (tol 1e-5); "
              f"round trip rel err {trip:.1e} (tol 1e-10)")
    assert ok
