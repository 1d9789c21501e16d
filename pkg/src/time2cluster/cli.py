"""Command-line front end.

Usage::

    time2cluster synth walkrun --out walkrun.csv
    time2cluster cluster --input walkrun.csv -m 200 -k 2 --out run/
    time2cluster eval --labels run/labels.csv --truth walkrun.csv --out run/
    time2cluster window --input walkrun.csv --variable --batch 2000 --out win/

Every subcommand accepts ``--seed``, ``--mem-cap``, ``--threads`` and
``--method``. Exit status is 0 on success, 2 on invalid input and 3 when a
resource limit is hit.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cluster import KMeansConfig, elbow_sweep, expand_labels, time2cluster
from .core import InvalidArgumentError, NoPeriodicityError, ResourceError, TimeSeries
from .evaluation import LabelVector, evaluate, robustness_sweep, sensitivity_sweep
from .profile import DEFAULT_MEM_CAP
from .projection import project_2d
from .synthgen import SCENARIO_NAMES, scenario
from .window import multi_window_finder, variable_window

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RESOURCE = 3

# Fixed output precision keeps reruns byte-identical.
CONF_FMT = "{:.6f}"
REAL_FMT = "{:.9f}"
VALUE_FMT = "{:.17g}"


@dataclass
class RunConfig:
    """Everything a run depended on; echoed verbatim into its report."""

    command: str
    input: Optional[str] = None
    value_column: Optional[str] = None
    label_column: Optional[str] = None
    m: Optional[int] = None
    ks: Optional[int] = None
    k: Optional[int] = None
    seed: int = 0
    stride: int = 1
    output: Optional[str] = None
    mem_cap: int = DEFAULT_MEM_CAP
    threads: int = 1
    method: str = "fast"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.m is not None and self.m < 2:
            raise InvalidArgumentError(f"m must be >= 2, got {self.m}")
        if self.ks is not None and self.ks < 1:
            raise InvalidArgumentError(f"ks must be >= 1, got {self.ks}")
        if self.k is not None and self.k < 1:
            raise InvalidArgumentError(f"K must be >= 1, got {self.k}")
        if self.threads < 1:
            raise InvalidArgumentError("threads must be >= 1")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _resolve_column(spec, header, width, what):
    if spec is None:
        return None
    spec = str(spec)
    if header is not None and spec in header:
        return header.index(spec)
    if spec.lstrip("-").isdigit():
        idx = int(spec)
        if 0 <= idx < width:
            return idx
        raise InvalidArgumentError(f"{what} column index {idx} out of range (file has {width} columns)")
    raise InvalidArgumentError(f"{what} column {spec!r} not found in header {header}")


def ingest_csv(path, value_column=None, label_column=None):
    """Read one value column (and optionally integer labels) from a CSV file.

    A first row containing any non-numeric cell is taken as a header.
    Columns may be given by header name or 0-based index. Without
    `value_column` the column named ``value`` is used if present, else the
    second column of multi-column files, else the only column.

    Returns
    -------
    (TimeSeries, LabelVector or None)
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise InvalidArgumentError(f"{path}: file is empty")
    header = None
    first = [c.strip() for c in rows[0][1]]
    if not all(_is_number(c) for c in first):
        header = first
        rows = rows[1:]
    if not rows:
        raise InvalidArgumentError(f"{path}: no data rows after the header")
    width = len(header) if header is not None else len(rows[0][1])
    vcol = _resolve_column(value_column, header, width, "value")
    if vcol is None:
        if header is not None and "value" in header:
            vcol = header.index("value")
        else:
            vcol = 1 if width > 1 else 0
    lcol = _resolve_column(label_column, header, width, "label")
    vname = header[vcol] if header else str(vcol)

    values = np.empty(len(rows))
    labels = np.empty(len(rows), dtype=np.int64) if lcol is not None else None
    for k, (line, row) in enumerate(rows):
        if vcol >= len(row) or (lcol is not None and lcol >= len(row)):
            raise InvalidArgumentError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        cell = row[vcol].strip()
        try:
            v = float(cell)
        except ValueError:
            raise InvalidArgumentError(
                f"{path}: row {line}, column {vname!r}: non-numeric value {cell!r}") from None
        if not math.isfinite(v):
            raise InvalidArgumentError(f"{path}: row {line}, column {vname!r}: non-finite value {cell!r}")
        values[k] = v
        if lcol is not None:
            lcell = row[lcol].strip()
            try:
                labels[k] = int(lcell)
            except ValueError:
                raise InvalidArgumentError(
                    f"{path}: row {line}: label {lcell!r} is not an integer") from None
    ts = TimeSeries(values, name=path.stem)
    return ts, (LabelVector.of(labels) if labels is not None else None)


def _write_csv(path: Path, header: Sequence[str], rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _kcfg(args) -> KMeansConfig:
    return KMeansConfig(args.k, max_iters=args.max_iters, n_restarts=args.restarts, seed=args.seed)


def _config(args, **extra) -> RunConfig:
    return RunConfig(
        command=args.command,
        input=getattr(args, "input", None),
        value_column=getattr(args, "value_column", None),
        label_column=getattr(args, "label_column", None),
        m=getattr(args, "m", None),
        ks=getattr(args, "ks", None),
        k=getattr(args, "k", None),
        seed=args.seed,
        output=getattr(args, "out", None),
        mem_cap=args.mem_cap,
        threads=args.threads,
        method=args.method,
        extra=extra,
    )


def cmd_synth(args) -> int:
    sc = scenario(args.name, seed=args.seed)
    rows = ((i, VALUE_FMT.format(v), int(l)) for i, (v, l) in enumerate(zip(sc.series.values, sc.labels)))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, ["index", "value", "label"], rows)
    print(f"{args.name}: n={sc.series.n} m={sc.m} ks={sc.ks} K={sc.k} -> {out}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    if args.ks is None:
        args.ks = args.m
    cfg = _config(args, restarts=args.restarts, max_iters=args.max_iters,
                  confidence_radius=args.confidence_radius,
                  confidence_exclusion=args.confidence_exclusion, pca=args.pca)
    ts, _ = ingest_csv(args.input, args.value_column, args.label_column)
    res = time2cluster(ts, args.m, args.ks, _kcfg(args), method=args.method, mem_cap=args.mem_cap,
                       threads=args.threads, confidence_radius=args.confidence_radius,
                       confidence_exclusion=args.confidence_exclusion)
    t0 = time.perf_counter()
    point_labels, point_conf = expand_labels(res.labels, res.confidence, ts.n, args.m)
    timings = dict(res.diagnostics.get("timings", {}))
    timings["expand_labels_s"] = time.perf_counter() - t0
    out = _outdir(args.out)
    N = res.labels.size
    rows = (
        (i, int(res.labels[i]) if i < N else "", int(point_labels[i]), CONF_FMT.format(point_conf[i]))
        for i in range(ts.n)
    )
    _write_csv(out / "labels.csv", ["index", "subseq_label", "timepoint_label", "confidence"], rows)
    if args.pca:
        t0 = time.perf_counter()
        coords = project_2d(res.augmented, seed=args.seed)
        timings["pca_s"] = time.perf_counter() - t0
        _write_csv(out / "pca.csv", ["index", "pc1", "pc2", "subseq_label"],
                   ((i, REAL_FMT.format(a), REAL_FMT.format(b), int(res.labels[i]))
                    for i, (a, b) in enumerate(coords)))
    diag = res.diagnostics
    _write_json(out / "report.json", {
        "version": __version__,
        "config": asdict(cfg),
        "n": ts.n,
        "n_subsequences": N,
        "inertia": res.inertia,
        "iterations_run": res.iterations_run,
        "cluster_sizes": np.bincount(res.labels, minlength=args.k).tolist(),
        "mean_confidence": float(np.mean(res.confidence)),
        "restart_inertias": list(diag.get("restart_inertias", [])),
        "best_restart": diag.get("best_restart"),
        "empty_cluster_repairs": diag.get("empty_cluster_repairs", 0),
        "confidence_radius": diag.get("confidence_radius"),
        "confidence_exclusion": diag.get("confidence_exclusion"),
        "timings_s": timings,
    })
    print(f"clustered {N} subsequences into {args.k} clusters; inertia {res.inertia:.6g} -> {out}")
    return EXIT_OK


def _curve_rows(curve, batch=0):
    minima = set(curve.local_minima.tolist())
    return [(batch, int(w), REAL_FMT.format(s), int(i in minima))
            for i, (w, s) in enumerate(zip(curve.w_values, curve.scores))]


def _estimate_dict(est):
    return {
        "window": est.window,
        "confidence": est.confidence,
        "residuals": est.residuals.tolist(),
        "minima_windows": est.minima_windows.tolist(),
    }


def cmd_window(args) -> int:
    cfg = _config(args, s=args.s, e_init=args.e_init, variable=args.variable, batch=args.batch)
    ts, _ = ingest_csv(args.input, args.value_column)
    out = _outdir(args.out)
    header = ["batch", "w", "moving_dist", "is_minimum"]
    if args.variable:
        meta = variable_window(ts, batch_length=args.batch, s=args.s)
        batches, rows = [], []
        for b, ((lo, hi), est) in enumerate(zip(meta.bounds, meta.estimates)):
            entry = {"batch": b, "start": lo, "end": hi}
            if est is not None:
                entry.update(status="ok", **_estimate_dict(est))
                rows += _curve_rows(est.curve, b)
            else:
                why = meta.rejected.get(b)
                if isinstance(why, NoPeriodicityError):
                    entry.update(status="no_periodicity", window=None, confidence=None)
                    rows += _curve_rows(why.curve, b)
                elif why is not None and hasattr(why, "confidence"):
                    entry.update(status="low_confidence", **_estimate_dict(why))
                    entry["window"] = None
                    entry["rejected_window"] = why.window
                    rows += _curve_rows(why.curve, b)
                else:
                    entry.update(status="failed", window=None, confidence=None, reason=str(why))
            batches.append(entry)
        payload = {"config": asdict(cfg), "mode": "variable", "batches": batches}
        print("batch windows: " + ", ".join(
            "-" if e["window"] is None else f"{e['window']:.1f}" for e in batches))
    else:
        try:
            est = multi_window_finder(ts, s=args.s, e_init=args.e_init)
        except NoPeriodicityError as exc:
            payload = {"config": asdict(cfg), "mode": "single", "status": "no_periodicity",
                       "window": None, "confidence": None, "message": str(exc)}
            rows = _curve_rows(exc.curve)
            print(f"no periodicity found: {exc}", file=sys.stderr)
        else:
            payload = {"config": asdict(cfg), "mode": "single", "status": "ok", **_estimate_dict(est)}
            rows = _curve_rows(est.curve)
            print(f"window {est.window:.2f} (confidence {est.confidence:.3f})")
    _write_json(out / "window.json", payload)
    _write_csv(out / "movingdist.csv", header, rows)
    return EXIT_OK


def _read_label_column(path, column):
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise InvalidArgumentError(f"{path}: no column {column!r}")
        out = []
        for row in reader:
            cell = row[column].strip()
            try:
                out.append(int(cell))
            except ValueError:
                raise InvalidArgumentError(
                    f"{path}: row {reader.line_num}: label {cell!r} is not an integer") from None
    return np.array(out, dtype=np.int64)


def cmd_eval(args) -> int:
    cfg = _config(args, labels=args.labels, truth=args.truth, column=args.column,
                  truth_column=args.truth_column)
    pred = _read_label_column(args.labels, args.column)
    _, truth = ingest_csv(args.truth, args.value_column, args.truth_column)
    if truth.labels.size != pred.size:
        raise InvalidArgumentError(
            f"label count mismatch: {pred.size} predicted vs {truth.labels.size} ground truth")
    report = evaluate(truth, pred)
    out = _outdir(args.out)
    _write_json(out / "metrics.json", {"config": asdict(cfg), **report.to_dict()})
    print(f"macro-F1 {report.macro_f1:.4f}  ARI {report.ari:.4f}  purity {report.purity:.4f}")
    return EXIT_OK


def cmd_elbow(args) -> int:
    if args.ks is None:
        args.ks = args.m
    ts, _ = ingest_csv(args.input, args.value_column)
    ks_range = list(range(args.k_min, args.k_max + 1))
    cfg = KMeansConfig(1, max_iters=args.max_iters, n_restarts=args.restarts, seed=args.seed)
    curve = elbow_sweep(ts, args.m, args.ks, ks_range, cfg, method=args.method,
                        mem_cap=args.mem_cap, threads=args.threads)
    drops = np.concatenate([[np.nan], curve.drops()])
    rel = np.concatenate([[np.nan], curve.relative_drops()])
    fmt = lambda v: "" if not np.isfinite(v) else REAL_FMT.format(v)
    out = _outdir(args.out)
    _write_csv(out / "elbow.csv", ["k", "inertia", "drop", "relative_drop"],
               ((k, REAL_FMT.format(i), fmt(d), fmt(r))
                for k, i, d, r in zip(curve.ks_tested, curve.inertias, drops, rel)))
    print(f"elbow at K={curve.largest_relative_drop_k()} (largest relative inertia drop)")
    return EXIT_OK


def _parse_list(text, kind=float):
    try:
        return [kind(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InvalidArgumentError(f"cannot parse {text!r} as a comma-separated list") from None


def cmd_sensitivity(args) -> int:
    ts, truth = ingest_csv(args.input, args.value_column, args.label_column)
    if truth is None:
        raise InvalidArgumentError("sensitivity needs ground truth (--label-column)")
    if args.m_values:
        m_values = _parse_list(args.m_values, int)
    elif args.period:
        m_values = [int(round(f * args.period)) for f in np.linspace(0.5, 2.0, args.points)]
    else:
        raise InvalidArgumentError("give --m-values or --period")
    cfg = KMeansConfig(args.k, max_iters=args.max_iters, n_restarts=args.restarts, seed=args.seed)
    rows = sensitivity_sweep(ts, truth, m_values, args.k, seed=args.seed, cfg=cfg,
                             method=args.method, mem_cap=args.mem_cap, threads=args.threads)
    out = _outdir(args.out)
    _write_csv(out / "sensitivity.csv", ["m", "ks", "macro_f1", "ari"],
               ((r["m"], r["ks"], REAL_FMT.format(r["macro_f1"]), REAL_FMT.format(r["ari"]))
                for r in rows))
    f1 = [r["macro_f1"] for r in rows]
    print(f"macro-F1 range {max(f1) - min(f1):.4f} over m={m_values}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    if args.ks is None:
        args.ks = args.m
    ts, truth = ingest_csv(args.input, args.value_column, args.label_column)
    if truth is None:
        raise InvalidArgumentError("robustness needs ground truth (--label-column)")
    cfg = KMeansConfig(args.k, max_iters=args.max_iters, n_restarts=args.restarts, seed=args.seed)
    rows = robustness_sweep(ts, truth, args.m, args.ks, args.k, _parse_list(args.fractions),
                            repeats=args.repeats, seed=args.seed, magnitude=args.magnitude,
                            cfg=cfg, method=args.method, mem_cap=args.mem_cap, threads=args.threads)
    out = _outdir(args.out)
    _write_csv(out / "robustness.csv", ["fraction", "mean_macro_f1", "std_macro_f1", "repeats"],
               ((REAL_FMT.format(r["fraction"]), REAL_FMT.format(r["mean_macro_f1"]),
                 REAL_FMT.format(r["std_macro_f1"]), r["repeats"]) for r in rows))
    for r in rows:
        print(f"spikes {r['fraction']:.3f}: macro-F1 {r['mean_macro_f1']:.4f} +/- {r['std_macro_f1']:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--mem-cap", type=int, default=DEFAULT_MEM_CAP,
                        help="bytes allowed for the N x N matrices")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--method", choices=("naive", "fast"), default="fast",
                        help="correlation-matrix algorithm")

    inp = argparse.ArgumentParser(add_help=False)
    inp.add_argument("--input", required=True, help="CSV file with the series")
    inp.add_argument("--value-column", help="value column name or 0-based index")

    km = argparse.ArgumentParser(add_help=False)
    km.add_argument("--restarts", type=int, default=10, help="kmeans++ restarts")
    km.add_argument("--max-iters", type=int, default=300, help="Lloyd iterations per restart")

    p = argparse.ArgumentParser(prog="time2cluster",
                                description="Subsequence clustering and window-size estimation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic scenario to CSV")
    s.add_argument("name", choices=SCENARIO_NAMES)
    s.add_argument("--out", required=True, help="output CSV path")
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("cluster", parents=[common, inp, km], help="run the clustering pipeline")
    c.add_argument("-m", type=int, required=True, help="subsequence length")
    c.add_argument("--ks", type=int, help="BAG size (default m)")
    c.add_argument("-k", type=int, required=True, help="number of clusters")
    c.add_argument("--label-column", help="ignored by clustering; recorded in the report")
    c.add_argument("--confidence-radius", type=int)
    c.add_argument("--confidence-exclusion", type=int)
    c.add_argument("--pca", action="store_true", help="also write pca.csv")
    c.add_argument("--out", required=True, help="output directory")
    c.set_defaults(func=cmd_cluster)

    w = sub.add_parser("window", parents=[common, inp], help="estimate the window size")
    w.add_argument("--s", type=int, default=10, help="smallest window tested")
    w.add_argument("--e-init", type=int, help="initial sweep end (default min(1000, n/2))")
    w.add_argument("--variable", action="store_true", help="estimate per batch")
    w.add_argument("--batch", type=int, default=5000, help="batch length for --variable")
    w.add_argument("--out", required=True, help="output directory")
    w.set_defaults(func=cmd_window)

    e = sub.add_parser("eval", parents=[common], help="score labels against ground truth")
    e.add_argument("--labels", required=True, help="labels.csv from `cluster`")
    e.add_argument("--column", default="timepoint_label", help="predicted-label column")
    e.add_argument("--truth", required=True, help="CSV with ground-truth labels")
    e.add_argument("--truth-column", default="label", help="ground-truth column")
    e.add_argument("--value-column", help=argparse.SUPPRESS)
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_eval)

    el = sub.add_parser("elbow", parents=[common, inp, km], help="inertia for a range of K")
    el.add_argument("-m", type=int, required=True)
    el.add_argument("--ks", type=int)
    el.add_argument("--k-min", type=int, default=1)
    el.add_argument("--k-max", type=int, default=6)
    el.add_argument("--out", required=True)
    el.set_defaults(func=cmd_elbow)

    se = sub.add_parser("sensitivity", parents=[common, inp, km], help="F1/ARI across window lengths")
    se.add_argument("--label-column", default="label")
    se.add_argument("-k", type=int, required=True)
    se.add_argument("--m-values", help="comma-separated window lengths")
    se.add_argument("--period", type=float, help="grid over [0.5, 2] x period instead")
    se.add_argument("--points", type=int, default=7)
    se.add_argument("--out", required=True)
    se.set_defaults(func=cmd_sensitivity)

    r = sub.add_parser("robustness", parents=[common, inp, km], help="F1 under spike noise")
    r.add_argument("--label-column", default="label")
    r.add_argument("-m", type=int, required=True)
    r.add_argument("--ks", type=int)
    r.add_argument("-k", type=int, required=True)
    r.add_argument("--fractions", default="0,0.01,0.02,0.05,0.1")
    r.add_argument("--repeats", type=int, default=50)
    r.add_argument("--magnitude", type=float, default=5.0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_robustness)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise InvalidArgumentError("--threads must be >= 1")
        return args.func(args)
    except (ResourceError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
