"""Median wall time of the counting pipeline on a 1024x1024 synthetic image."""
import argparse
import statistics

from trackcount import count_image
from trackcount.synth import SynthSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=1024)
    ap.add_argument("--tracks", type=int, default=50)
    ap.add_argument("--runs", type=int, default=20)
    args = ap.parse_args()
    img, truth = generate(SynthSpec(width=args.size, height=args.size,
                                    n_tracks=args.tracks, seed=10))
    count_image(img)  # warm-up
    times = [count_image(img).elapsed_s for _ in range(args.runs)]
    print(f"{args.size}x{args.size}, {truth.n_tracks} tracks: "
          f"median {statistics.median(times) * 1e3:.1f} ms, "
          f"min {min(times) * 1e3:.1f} ms over {args.runs} runs")


if __name__ == "__main__":
    main()
