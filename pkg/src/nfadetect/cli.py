"""Batch command-line frontend: detect, baseline, eval, synth, bench.

Exit codes: 0 success, 1 usage error (bad flags or flag domains), 2 I/O or
data error.  The environment variable NFA_THREADS caps bench workers
(0 or unset = one worker per CPU).
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import sys
import time

from . import io as nfio
from .baselines import connected_components, morphological_open, threshold_binarize
from .detector import Box3D, Detection, DetectorParams, detect, merge_overlapping
from .evaluation import compute_prf, match_objects, region_from_detection
from .synth import NoiseLaw, generate_corpus
from .transform import TransformParams

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def worker_count() -> int:
    raw = os.environ.get("NFA_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 0:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=0.2, help="score floor (default 0.2)")
    p.add_argument("--bins", type=int, default=16, help="z-axis bins (default 16)")
    p.add_argument("--max-area", type=int, default=64,
                   help="maximal footprint area in pixels (default 64)")
    p.add_argument("--s-min", type=float, default=0.0,
                   help="minimal significance (default 0)")
    p.add_argument("--relative-factor", type=float, default=0.8,
                   help="keep S > factor * S_max (default 0.8)")


def _detector_params(args) -> DetectorParams:
    return DetectorParams(
        max_area=args.max_area,
        s_min=args.s_min,
        transform=TransformParams(tau=args.tau, bins=args.bins),
        relative_factor=args.relative_factor,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="nfadetect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="NFA detection on a score map")
    p.add_argument("--in", dest="input", required=True, help="score-map file")
    p.add_argument("--out", required=True, help="detection file to write")
    p.add_argument("--format", default="auto",
                   choices=["auto", "pgm", "png-gray", "raw-f32"])
    _add_detector_flags(p)
    p.add_argument("--merge-overlaps", action="store_true",
                   help="union detections with footprint IoU > 0.5 (presentation)")

    p = sub.add_parser("baseline", help="fixed-threshold baseline (S or S+F)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="auto",
                   choices=["auto", "pgm", "png-gray", "raw-f32"])
    p.add_argument("--mode", required=True, choices=["s", "sf"],
                   help="s = threshold, sf = threshold + opening")
    p.add_argument("--theta", type=float, default=0.5, help="threshold (default 0.5)")
    p.add_argument("--radius", type=int, default=1,
                   help="opening element radius (default 1)")

    p = sub.add_parser("eval", help="object-level P/R/F1 of detections vs masks")
    p.add_argument("--pred-dir", required=True, help="directory of detection files")
    p.add_argument("--gt-dir", required=True, help="directory of mask PGMs")
    p.add_argument("--out", help="write the micro-averaged record here")

    p = sub.add_parser("synth", help="generate a synthetic map/mask corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, required=True, help="number of images")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--noise", default="uniform:0,1",
                   help="uniform:lo,hi or beta:a,b (default uniform:0,1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--targets-per-image", type=int, default=0)
    p.add_argument("--target-size", default="5x5", help="WxH (default 5x5)")
    p.add_argument("--target-intensity", type=float, default=0.9)
    p.add_argument("--profile", default="solid", choices=["solid", "gaussian"])

    p = sub.add_parser("bench", help="sweep a parameter over a corpus")
    p.add_argument("--corpus", required=True, help="directory with manifest.jsonl")
    p.add_argument("--method", default="nfa", choices=["nfa", "s", "sf"])
    p.add_argument("--sweep", required=True,
                   help="s-min:v1,v2,... (nfa) or theta:v1,v2,... (s/sf)")
    p.add_argument("--out", help="write the results table here (TSV)")
    _add_detector_flags(p)
    p.add_argument("--radius", type=int, default=1)
    return parser


def _parse_noise(text: str) -> NoiseLaw:
    kind, _, rest = text.partition(":")
    parts = rest.split(",")
    if kind not in ("uniform", "beta") or len(parts) != 2:
        raise ValueError(f"bad noise law {text!r}, expected uniform:lo,hi or beta:a,b")
    return NoiseLaw(kind=kind, a=float(parts[0]), b=float(parts[1]))


def _parse_sweep(text: str) -> tuple[str, list[float]]:
    name, _, rest = text.partition(":")
    if name not in ("s-min", "theta") or not rest:
        raise ValueError(f"bad sweep {text!r}, expected s-min:... or theta:...")
    return name, [float(v) for v in rest.split(",")]


def _baseline_detections(smap, mode: str, theta: float, radius: int) -> list[Detection]:
    mask = threshold_binarize(smap, theta)
    if mode == "sf":
        mask = morphological_open(mask, radius)
    detections = []
    for i, region in enumerate(connected_components(mask)):
        x0, y0, w, h = region.bbox
        box = Box3D(x0=x0, y0=y0, w=w, h=h, z0=0, zlen=0, kappa=region.area)
        detections.append(Detection(box=box, significance=0.0, rank=i))
    return detections


def cmd_detect(args) -> int:
    try:
        params = _detector_params(args)
    except ValueError as exc:
        print(f"nfadetect detect: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        smap = nfio.load_scoremap(args.input, args.format)
        detections = detect(smap, params)
        if args.merge_overlaps:
            detections = merge_overlapping(detections)
        nfio.save_detections(detections, args.out)
    except (OSError, ValueError) as exc:
        print(f"nfadetect detect: {exc}", file=sys.stderr)
        return DATA_ERROR
    print(f"{len(detections)} detections -> {args.out}")
    return 0


def cmd_baseline(args) -> int:
    if not (0.0 <= args.theta <= 1.0):
        print(f"nfadetect baseline: error: theta must be in [0, 1], got {args.theta}",
              file=sys.stderr)
        return USAGE_ERROR
    if args.radius < 1:
        print(f"nfadetect baseline: error: radius must be >= 1, got {args.radius}",
              file=sys.stderr)
        return USAGE_ERROR
    try:
        smap = nfio.load_scoremap(args.input, args.format)
        detections = _baseline_detections(smap, args.mode, args.theta, args.radius)
        nfio.save_detections(detections, args.out)
    except (OSError, ValueError) as exc:
        print(f"nfadetect baseline: {exc}", file=sys.stderr)
        return DATA_ERROR
    print(f"{len(detections)} regions -> {args.out}")
    return 0


def _region_lists(pred_path: str | None, mask_path: str):
    gt = connected_components(nfio.load_mask(mask_path))
    if pred_path is None:
        return [], gt
    preds = [region_from_detection(d) for d in nfio.load_detections(pred_path)]
    return preds, gt


def cmd_eval(args) -> int:
    try:
        pred_files = sorted(
            os.path.join(args.pred_dir, f) for f in os.listdir(args.pred_dir)
        )
        gt_files = sorted(
            os.path.join(args.gt_dir, f) for f in os.listdir(args.gt_dir)
        )
    except OSError as exc:
        print(f"nfadetect eval: {exc}", file=sys.stderr)
        return DATA_ERROR
    # An empty prediction directory stands for "no detections anywhere";
    # otherwise the two sorted listings must pair up one-to-one.
    if not pred_files:
        pred_files = [None] * len(gt_files)
    if len(pred_files) != len(gt_files):
        print(
            f"nfadetect eval: error: {len(pred_files)} prediction files vs "
            f"{len(gt_files)} ground-truth files",
            file=sys.stderr,
        )
        return USAGE_ERROR
    if not gt_files:
        print("nfadetect eval: error: no ground-truth files", file=sys.stderr)
        return USAGE_ERROR
    tp = fp = fn = 0
    try:
        for pred_path, mask_path in zip(pred_files, gt_files):
            preds, gt = _region_lists(pred_path, mask_path)
            itp, ifp, ifn = match_objects(preds, gt)
            tp, fp, fn = tp + itp, fp + ifp, fn + ifn
            rep = compute_prf(itp, ifp, ifn)
            name = os.path.basename(mask_path)
            print(
                f"{name} tp={itp} fp={ifp} fn={ifn} "
                f"P={rep.precision:.4f} R={rep.recall:.4f} F1={rep.f1:.4f}"
            )
    except (OSError, ValueError) as exc:
        print(f"nfadetect eval: {exc}", file=sys.stderr)
        return DATA_ERROR
    total = compute_prf(tp, fp, fn)
    record = (
        f"{total.tp} {total.fp} {total.fn} "
        f"{total.precision:.6g} {total.recall:.6g} {total.f1:.6g}"
    )
    print(f"micro {record}")
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(record + "\n")
        except OSError as exc:
            print(f"nfadetect eval: {exc}", file=sys.stderr)
            return DATA_ERROR
    return 0


def cmd_synth(args) -> int:
    try:
        noise = _parse_noise(args.noise)
        tw, _, th = args.target_size.lower().partition("x")
        target_w, target_h = int(tw), int(th)
        if args.n < 1:
            raise ValueError(f"--n must be >= 1, got {args.n}")
    except ValueError as exc:
        print(f"nfadetect synth: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        entries = generate_corpus(
            args.out_dir, args.n, args.width, args.height, noise, args.seed,
            targets_per_image=args.targets_per_image,
            target_w=target_w, target_h=target_h,
            target_intensity=args.target_intensity, profile=args.profile,
        )
    except (OSError, ValueError) as exc:
        print(f"nfadetect synth: {exc}", file=sys.stderr)
        return DATA_ERROR
    print(f"{len(entries)} map/mask pairs -> {args.out_dir}")
    return 0


def _bench_one(task) -> tuple[int, int, int, int]:
    """(tp, fp, fn, n_detections) for one image at one parameter value."""
    (map_path, mask_path, method, value, params_kw, radius) = task
    smap = nfio.load_scoremap(map_path, "raw-f32")
    if method == "nfa":
        params = DetectorParams(
            max_area=params_kw["max_area"],
            s_min=value,
            transform=TransformParams(tau=params_kw["tau"], bins=params_kw["bins"]),
            relative_factor=params_kw["relative_factor"],
        )
        detections = detect(smap, params)
    else:
        detections = _baseline_detections(smap, method, value, radius)
    preds = [region_from_detection(d) for d in detections]
    gt = connected_components(nfio.load_mask(mask_path))
    tp, fp, fn = match_objects(preds, gt)
    return tp, fp, fn, len(detections)


def cmd_bench(args) -> int:
    try:
        sweep_name, values = _parse_sweep(args.sweep)
        if args.method == "nfa" and sweep_name != "s-min":
            raise ValueError("method nfa sweeps s-min")
        if args.method in ("s", "sf") and sweep_name != "theta":
            raise ValueError(f"method {args.method} sweeps theta")
        params_kw = {
            "max_area": args.max_area, "tau": args.tau, "bins": args.bins,
            "relative_factor": args.relative_factor,
        }
        DetectorParams(  # validate flag domains up front
            max_area=args.max_area,
            transform=TransformParams(tau=args.tau, bins=args.bins),
            relative_factor=args.relative_factor,
        )
    except ValueError as exc:
        print(f"nfadetect bench: error: {exc}", file=sys.stderr)
        return USAGE_ERROR

    manifest = os.path.join(args.corpus, "manifest.jsonl")
    try:
        import json

        with open(manifest, "r", encoding="utf-8") as fh:
            entries = [json.loads(line) for line in fh if line.strip()]
        if not entries:
            raise ValueError(f"{manifest}: empty manifest")
        pairs = [
            (os.path.join(args.corpus, e["map"]), os.path.join(args.corpus, e["mask"]))
            for e in entries
        ]
    except (OSError, ValueError, KeyError) as exc:
        print(f"nfadetect bench: {exc}", file=sys.stderr)
        return DATA_ERROR

    workers = min(worker_count(), len(pairs))
    header = f"{sweep_name}\tprecision\trecall\tf1\tmean_detections"
    rows = [header]
    print(header + "\twall_s")
    try:
        for value in values:
            tasks = [
                (mp, mk, args.method, value, params_kw, args.radius)
                for mp, mk in pairs
            ]
            t0 = time.perf_counter()
            if workers > 1:
                with multiprocessing.Pool(workers) as pool:
                    results = pool.map(_bench_one, tasks, chunksize=4)
            else:
                results = [_bench_one(t) for t in tasks]
            wall = time.perf_counter() - t0
            tp = sum(r[0] for r in results)
            fp = sum(r[1] for r in results)
            fn = sum(r[2] for r in results)
            mean_det = sum(r[3] for r in results) / len(results)
            rep = compute_prf(tp, fp, fn)
            row = (
                f"{value:g}\t{rep.precision:.6g}\t{rep.recall:.6g}\t"
                f"{rep.f1:.6g}\t{mean_det:.6g}"
            )
            rows.append(row)
            print(f"{row}\t{wall:.3f}")
    except (OSError, ValueError) as exc:
        print(f"nfadetect bench: {exc}", file=sys.stderr)
        return DATA_ERROR
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("\n".join(rows) + "\n")
        except OSError as exc:
            print(f"nfadetect bench: {exc}", file=sys.stderr)
            return DATA_ERROR
    return 0


_COMMANDS = {
    "detect": cmd_detect,
    "baseline": cmd_baseline,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return 0 if code in (0, None) else int(code)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
