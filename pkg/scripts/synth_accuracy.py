"""End-to-end counting accuracy on synthetic images.

For each seed a synthetic image with a random number of tracks is generated,
counted with every automatic threshold method, and compared to ground truth.
"""
import argparse
from collections import Counter

import numpy as np

from trackcount import Method, PipelineConfig, count_image
from trackcount.synth import SynthSpec, generate

METHODS = [m for m in Method if m != Method.MANUAL]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--crossings", type=int, default=0, help="forced crossing pairs per image")
    args = ap.parse_args()

    exact = Counter()
    errors = {m: [] for m in METHODS}
    for seed in range(args.seeds):
        n = int(np.random.default_rng(1000 + seed).integers(10, 21))
        img, truth = generate(SynthSpec(n_tracks=n, seed=seed, forced_crossings=args.crossings))
        for m in METHODS:
            got = count_image(img, PipelineConfig(method=m)).total_tracks
            exact[m] += got == truth.n_tracks
            errors[m].append(got - truth.n_tracks)
    for m in METHODS:
        err = np.asarray(errors[m])
        print(f"{m.value:8s} exact {exact[m]:3d}/{args.seeds}  "
              f"mean error {err.mean():+.2f}  max |error| {np.abs(err).max()}")


if __name__ == "__main__":
    main()
