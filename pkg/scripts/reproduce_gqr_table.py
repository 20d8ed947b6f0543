"""Recompute GQR and its uncertainty from pooled mica/apatite track counts.

Prints one row per counting method with the per-image means, GQR and sigma.
The pooled counts are the reference values also used by the test suite.
"""
import argparse

from trackcount import ftstats as fs

ROWS = {  # method: (N over 49 mica images, N over 30 apatite images)
    "Otsu": (2133, 2279),
    "Yen": (2407, 2484),
    "Li": (2079, 2150),
    "ISODATA": (2136, 2282),
    "Manual": (2838, 3114),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--area", type=float, default=1.0, help="area per image in cm^2")
    args = ap.parse_args()
    print(f"{'method':8s} {'ED/img':>12s} {'IS/img':>13s} {'GQR':>6s} {'sigma':>6s}")
    for name, (n_ed, n_is) in ROWS.items():
        ed = fs.pooled_density(n_ed, 49, args.area)
        is_ = fs.pooled_density(n_is, 30, args.area)
        res = fs.compute_gqr(ed, is_)
        print(f"{name:8s} {ed.per_image_mean:6.1f}±{ed.per_image_sigma:4.1f} "
              f"{is_.per_image_mean:7.1f}±{is_.per_image_sigma:4.1f} "
              f"{res.gqr:6.2f} {res.sigma:6.2f}")


if __name__ == "__main__":
    main()
