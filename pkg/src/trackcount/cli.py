"""Command-line interface: ``trackcount {count,batch,gqr,kstest,age,synth}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import List, NamedTuple, Optional

import tomli

from . import ftstats
from .binarize import Method, Polarity
from .raster import load_gray, save_image
from .synth import SynthSpec, generate
from .trackseg import CountReport, PipelineConfig, count_image

log = logging.getLogger("trackcount")

CONFIG_ENV = "TRACKCOUNT_CONFIG"
COUNTS_HEADER = ["image", "n_tracks", "n_regions", "elapsed_s"]
IMAGE_SUFFIXES = {".png", ".tif", ".tiff", ".bmp", ".pgm", ".ppm"}
CONFIG_KEYS = {"method", "threshold", "polarity", "window", "min_size", "area", "out"}


class CountsSchemaError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


class CountRow(NamedTuple):
    image: str
    n_tracks: int
    n_regions: int
    elapsed_s: float


# -- counts CSV / JSON ----------------------------------------------------------

def report_row(report: CountReport) -> CountRow:
    return CountRow(report.image, report.total_tracks, report.n_regions, report.elapsed_s)


def format_counts_csv(rows: List[CountRow], footer: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNTS_HEADER)
    for r in rows:
        w.writerow([r.image, r.n_tracks, r.n_regions, repr(float(r.elapsed_s))])
    if footer and rows:
        n = sum(r.n_tracks for r in rows)
        k = len(rows)
        buf.write(f"# images={k} N={n} per_image={n / k!r} sigma={math.sqrt(n) / k!r}\n")
    return buf.getvalue()


def parse_counts_csv(text: str, path: str = "<counts>") -> List[CountRow]:
    """Rows of a counts CSV; lines starting with ``#`` are ignored."""
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1)
             if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise CountsSchemaError(path, 1, "empty file")
    first, header = lines[0]
    if next(csv.reader([header])) != COUNTS_HEADER:
        raise CountsSchemaError(path, first, f"header must be {','.join(COUNTS_HEADER)}")
    rows = []
    for lineno, ln in lines[1:]:
        fields = next(csv.reader([ln]))
        if len(fields) != len(COUNTS_HEADER):
            raise CountsSchemaError(path, lineno, f"expected 4 fields, got {len(fields)}")
        try:
            row = CountRow(fields[0], int(fields[1]), int(fields[2]), float(fields[3]))
        except ValueError as exc:
            raise CountsSchemaError(path, lineno, str(exc)) from None
        if row.n_tracks < 0 or row.n_regions < 0 or not row.elapsed_s >= 0:
            raise CountsSchemaError(path, lineno, "counts and elapsed time must be >= 0")
        rows.append(row)
    return rows


def read_counts_csv(path) -> List[CountRow]:
    return parse_counts_csv(Path(path).read_text(encoding="utf-8"), str(path))


def counts_to_json(rows: List[CountRow]) -> list:
    return [r._asdict() for r in rows]


def counts_from_json(data: list) -> List[CountRow]:
    return [CountRow(d["image"], int(d["n_tracks"]), int(d["n_regions"]), float(d["elapsed_s"]))
            for d in data]


# -- configuration --------------------------------------------------------------

def parse_window(text: str):
    try:
        k, l = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like 7x7, got {text!r}") from None
    if k % 2 == 0 or l % 2 == 0 or k < 1 or l < 1:
        raise argparse.ArgumentTypeError(f"window sides must be odd, got {text!r}")
    return (k, l)


def load_config_file(path) -> dict:
    """``key = value`` settings; unknown keys are an error."""
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys in {path}: {sorted(unknown)}")
    if "window" in data and isinstance(data["window"], str):
        data["window"] = parse_window(data["window"])
    return data


def resolve_config(args) -> tuple[PipelineConfig, Optional[str]]:
    """Defaults, then the config file, then command-line flags."""
    settings = {}
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        settings.update(load_config_file(path))
    for key in ("method", "threshold", "polarity", "window", "min_size", "area", "out"):
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    out = settings.pop("out", None)
    return PipelineConfig(**settings), out


def _pipeline_args(p: argparse.ArgumentParser):
    p.add_argument("--method", choices=[m.value for m in Method if m != Method.MANUAL])
    p.add_argument("--threshold", type=int, help="manual threshold, overrides --method")
    p.add_argument("--polarity", choices=[v.value for v in Polarity])
    p.add_argument("--window", type=parse_window, help="median window, e.g. 7x7")
    p.add_argument("--min-size", dest="min_size", type=int)
    p.add_argument("--area", type=float, help="area per image in cm^2")
    p.add_argument("--overlay", action="store_true")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help=f"key=value config file (default ${CONFIG_ENV})")


# -- subcommands ------------------------------------------------------------------

def _count_file(path: Path, cfg: PipelineConfig) -> CountReport:
    return count_image(load_gray(path), cfg, image_id=path.name)


def _write_overlay(path: Path, report: CountReport, out_dir: Path) -> Path:
    from .overlay import render_overlay
    target = out_dir / f"{path.stem}_overlay.png"
    save_image(target, render_overlay(load_gray(path), report))
    return target


def cmd_count(args) -> int:
    cfg, out = resolve_config(args)
    path = Path(args.image)
    report = _count_file(path, cfg)
    text = format_counts_csv([report_row(report)])
    sys.stdout.write(text)
    out_dir = Path(out) if out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{path.stem}.csv").write_text(text, encoding="utf-8")
    if args.overlay:
        target = _write_overlay(path, report, out_dir or Path("."))
        log.info("overlay written to %s", target)
    return 0


def _batch_worker(item):
    path, cfg = item
    try:
        return path.name, _count_file(path, cfg), None
    except Exception as exc:  # reported per file
        return path.name, None, f"{type(exc).__name__}: {exc}"


def cmd_batch(args) -> int:
    cfg, out = resolve_config(args)
    folder = Path(args.directory)
    files = sorted(p for p in folder.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        log.error("no supported images in %s", folder)
        return 2
    items = [(p, cfg) for p in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_batch_worker, items))
    else:
        results = [_batch_worker(it) for it in items]

    rows, failures, reports = [], [], {}
    for name, report, err in results:
        if err:
            failures.append((name, err))
            log.error("%s: %s", name, err)
        else:
            rows.append(report_row(report))
            reports[name] = report
    text = format_counts_csv(rows, footer=True)
    for name, err in failures:
        text += f"# failed {name}: {err}\n"
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "counts.csv").write_text(text, encoding="utf-8")
        if args.overlay:
            for p in files:
                if p.name in reports:
                    _write_overlay(p, reports[p.name], out_dir)
    else:
        sys.stdout.write(text)
    return 1 if failures else 0


def _emit_json(obj, out: Optional[str]):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def gqr_summary(ed_rows, is_rows, area: float) -> dict:
    ed = ftstats.track_density([r.n_tracks for r in ed_rows], area)
    is_ = ftstats.track_density([r.n_tracks for r in is_rows], area)
    res = ftstats.compute_gqr(ed, is_)
    return {
        "gqr": res.gqr,
        "sigma": res.sigma,
        "gqr_text": f"{res.gqr:.2f} ± {res.sigma:.2f}",
        "ed": asdict(ed),
        "is": asdict(is_),
    }


def cmd_gqr(args) -> int:
    summary = gqr_summary(read_counts_csv(args.ed_csv), read_counts_csv(args.is_csv), args.area)
    print(f"GQR = {summary['gqr_text']}", file=sys.stderr)
    _emit_json(summary, args.out)
    return 0


def cmd_kstest(args) -> int:
    rows = read_counts_csv(args.counts_csv)
    res = ftstats.poisson_ks([r.n_tracks for r in rows])
    print(f"D = {res.d:.4f}, p-value = {res.p_value:.4f}", file=sys.stderr)
    _emit_json(asdict(res), args.out)
    return 0


def cmd_age(args) -> int:
    params = ftstats.AgeParams(lambda_total=args.lambda_total, c238=args.c238,
                               rho_s=args.rho_s, rho_i=args.rho_i, gqr=args.gqr,
                               lambda_f=args.lambda_f, r_u=args.r_u)
    res = ftstats.ft_age(params)
    print(f"t = {res.age_ma:.4f} Ma", file=sys.stderr)
    _emit_json({"age_ma": res.age_ma, "argument": res.argument, "params": asdict(params)}, args.out)
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(width=args.width, height=args.height, n_tracks=args.n_tracks,
                     overlap_prob=args.overlap, forced_crossings=args.crossings, seed=args.seed)
    img, truth = generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"synth_{args.seed:04d}"
    save_image(out_dir / f"{stem}.png", img)
    (out_dir / f"{stem}.json").write_text(json.dumps(truth.to_json(), indent=2) + "\n",
                                          encoding="utf-8")
    print(out_dir / f"{stem}.png")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trackcount", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count tracks in one image")
    p.add_argument("image")
    _pipeline_args(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("batch", help="count every image in a directory")
    p.add_argument("directory")
    _pipeline_args(p)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("gqr", help="GQR from external-detector and internal-surface counts")
    p.add_argument("ed_csv")
    p.add_argument("is_csv")
    p.add_argument("--area", type=float, required=True, help="area per image in cm^2")
    p.add_argument("--out", help="JSON output file")
    p.set_defaults(func=cmd_gqr)

    p = sub.add_parser("kstest", help="KS test of per-image counts against Poisson")
    p.add_argument("counts_csv")
    p.add_argument("--out", help="JSON output file")
    p.set_defaults(func=cmd_kstest)

    p = sub.add_parser("age", help="standardless fission-track age")
    p.add_argument("--lambda", dest="lambda_total", type=float, required=True,
                   help="total decay constant of 238U, 1/a")
    p.add_argument("--c238", type=float, required=True, help="isotopic abundance of 238U")
    p.add_argument("--rho-s", dest="rho_s", type=float, required=True)
    p.add_argument("--rho-i", dest="rho_i", type=float, required=True)
    p.add_argument("--gqr", type=float, required=True)
    p.add_argument("--lambda-f", dest="lambda_f", type=float, default=ftstats.LAMBDA_F)
    p.add_argument("--r-u", dest="r_u", type=float, default=ftstats.R_U)
    p.add_argument("--out", help="JSON output file")
    p.set_defaults(func=cmd_age)

    p = sub.add_parser("synth", help="write a synthetic image and its ground truth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-tracks", dest="n_tracks", type=int, default=12)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--overlap", type=float, default=0.0, help="crossing probability per track")
    p.add_argument("--crossings", type=int, default=0, help="number of forced crossing pairs")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CountsSchemaError as exc:
        log.error("%s", exc)
        return 3
    except (OSError, ValueError, ZeroDivisionError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
