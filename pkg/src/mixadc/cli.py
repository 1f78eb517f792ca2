"""Command-line front end: ``mixadc generate|train|evaluate|sweep``.

Output directory layout::

    <out>/config.yaml            effective configuration
    <out>/manifest.json          config hash, seeds, point status, timestamps
    <out>/report.csv             merged report, one row per method and point
    <out>/warnings.log           skipped rows and failures
    <out>/points/<key>/          one directory per (SNR, eta) point
        train.bin val.bin test.bin
        di.json, di.di.ckpt.json, di.trace.csv
        sip.json, sip.r.ckpt.json, sip.mp.ckpt.json, sip.r.trace.csv, sip.mp.trace.csv
        report.csv, point.json

Everything except ``manifest.json`` is a pure function of the configuration
and master seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone

from . import __version__
from .config import PRESETS, ExperimentConfig
from .eval import SPLITS, Experiment, OperatingPoint, score
from .neural import TrainingDiverged
from .pipelines import load_bundle, save_bundle
from .seeding import derive_seed
from .storage import (DatasetHeader, read_dataset, read_report, report_row, write_dataset,
                      write_report, write_trace)

log = logging.getLogger("mixadc")

TRAINED = ("di", "sip")
STAGES = ("generate", "train", "evaluate")
MANIFEST_FORMAT = "mixadc-run/1"


class PointFailed(RuntimeError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment file (defaults apply to missing keys)")
    common.add_argument("--seed", type=_u64, help="master seed, overrides the config")
    common.add_argument("--preset", choices=sorted(PRESETS), help="dataset sizes and epochs")
    common.add_argument("--out", help="output directory, overrides the config")
    common.add_argument("--workers", type=int, default=1, help="operating points run in parallel")
    common.add_argument("--dry-run", action="store_true", help="print the plan, write nothing")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mixadc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write train/val/test datasets")
    p = sub.add_parser("train", parents=[common], help="train DI and/or SIP estimators")
    p.add_argument("--method", choices=TRAINED + ("all",), default="all")
    sub.add_parser("evaluate", parents=[common], help="score every method, write report.csv")
    sub.add_parser("sweep", parents=[common], help="generate, train and evaluate every point")
    return parser


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def resolve_config(args) -> ExperimentConfig:
    """Config file, then ``--preset``, then ``--seed`` / ``--out``."""
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.preset:
        cfg = cfg.with_preset(args.preset)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out:
        cfg = replace(cfg, out=args.out)
    return cfg


def operating_points(cfg: ExperimentConfig) -> list[tuple[float, float]]:
    return [(snr, eta) for snr in cfg.snr_db for eta in cfg.eta]


def point_key(cfg: ExperimentConfig, snr: float, eta: float) -> str:
    return OperatingPoint(snr, eta, cfg.pattern, cfg.quantizer.bits_low).key


def point_dir(cfg: ExperimentConfig, snr: float, eta: float) -> str:
    return os.path.join(cfg.out, "points", point_key(cfg, snr, eta))


# one Experiment per process, so the channel draws are shared between points
_EXPERIMENTS: dict[str, Experiment] = {}


def _experiment(cfg: ExperimentConfig) -> Experiment:
    key = cfg.config_hash()
    if key not in _EXPERIMENTS:
        _EXPERIMENTS.clear()
        _EXPERIMENTS[key] = Experiment(cfg)
    return _EXPERIMENTS[key]


def generate_point(cfg: ExperimentConfig, snr: float, eta: float) -> None:
    exp = _experiment(cfg)
    pdir = point_dir(cfg, snr, eta)
    os.makedirs(pdir, exist_ok=True)
    part = exp.partition(eta)
    for split in SPLITS:
        samples = exp.data(split)
        header = DatasetHeader(samples.seed, len(samples), cfg.channel.M, snr, eta)
        write_dataset(os.path.join(pdir, f"{split}.bin"), samples.h,
                      exp.ls(split, snr, part), header)


def _load_split(pdir: str, split: str):
    path = os.path.join(pdir, f"{split}.bin")
    if not os.path.exists(path):
        raise PointFailed(f"dataset {path} is missing; run generate first")
    _, h, ls = read_dataset(path)
    return h, ls


def train_point(cfg: ExperimentConfig, snr: float, eta: float, methods) -> list[str]:
    """Train and save each requested estimator; returns warning lines."""
    exp = _experiment(cfg)
    pdir = point_dir(cfg, snr, eta)
    key = point_key(cfg, snr, eta)
    h, ls = _load_split(pdir, "train")
    val_h, val_ls = _load_split(pdir, "val")
    validation = (val_h, val_ls) if len(val_h) else None
    notes = []
    for method in methods:
        if method == "sip" and len(exp.partition(eta).set_a) == 0:
            notes.append(f"{key},sip,not applicable at eta=0")
            continue
        try:
            bundle, traces = exp.train_method(method, snr, eta, h, ls, validation)
        except TrainingDiverged as exc:
            write_trace(os.path.join(pdir, f"{method}.diverged.trace.csv"), exc.trace)
            raise PointFailed(f"{method} training diverged: {exc}") from None
        save_bundle(bundle, pdir, method)
        for name, trace in traces.items():
            suffix = "" if name == method else f".{name}"
            write_trace(os.path.join(pdir, f"{method}{suffix}.trace.csv"), trace)
    return notes


def evaluate_point(cfg: ExperimentConfig, snr: float, eta: float, methods):
    """Score every method on the stored test set; returns ``(rows, warning lines)``."""
    exp = _experiment(cfg)
    pdir = point_dir(cfg, snr, eta)
    key = point_key(cfg, snr, eta)
    h, ls = _load_split(pdir, "test")
    part = exp.partition(eta)
    rows, notes = [], []
    for method in methods:
        bundle, model_path = None, ""
        if method in TRAINED:
            path = os.path.join(pdir, f"{method}.json")
            if not os.path.exists(path):
                notes.append(f"{key},{method},checkpoint {path} missing; row skipped")
                continue
            bundle = load_bundle(path)
            model_path = os.path.relpath(path, cfg.out)
        est = exp.estimate(method, ls, snr, eta, bundle)
        rows.append(report_row(method, snr, eta, cfg.pattern, cfg.quantizer.bits_low,
                               score(method, h, est, part), len(h), cfg.seed, model_path))
    write_report(os.path.join(pdir, "report.csv"), rows)
    return rows, notes


def _point_record(cfg, snr, eta, methods, status) -> dict:
    return {"snr_db": snr, "eta": eta, "pattern": cfg.pattern,
            "point_hash": cfg.point_hash(snr, eta), "methods": list(methods), "status": status}


def _is_current(cfg, snr, eta, methods) -> bool:
    pdir = point_dir(cfg, snr, eta)
    try:
        with open(os.path.join(pdir, "point.json"), encoding="utf-8") as fh:
            rec = json.load(fh)
    except (OSError, ValueError):
        return False
    return (rec.get("status") == "ok" and rec.get("point_hash") == cfg.point_hash(snr, eta)
            and set(methods) <= set(rec.get("methods", ()))
            and os.path.exists(os.path.join(pdir, "report.csv")))


def run_job(config_text: str, snr: float, eta: float, stages, methods, resume: bool) -> dict:
    """One operating point through the requested stages; never raises."""
    cfg = ExperimentConfig.loads(config_text)
    key = point_key(cfg, snr, eta)
    result = {"key": key, "snr": snr, "eta": eta, "rows": [], "notes": [], "status": "ok"}
    if resume and _is_current(cfg, snr, eta, methods):
        result["status"] = "up to date"
        result["rows"] = read_report(os.path.join(point_dir(cfg, snr, eta), "report.csv"))
        return result
    try:
        if "generate" in stages:
            generate_point(cfg, snr, eta)
        if "train" in stages:
            result["notes"] += train_point(cfg, snr, eta, [m for m in methods if m in TRAINED])
        if "evaluate" in stages:
            rows, notes = evaluate_point(cfg, snr, eta, methods)
            result["rows"], result["notes"] = rows, result["notes"] + notes
    except Exception as exc:  # isolate the point; the summary reports it
        log.debug("point %s failed", key, exc_info=True)
        result["status"] = f"failed: {exc}"
        result["notes"].append(f"{key},-,{exc}")
    if "evaluate" in stages and stages == STAGES:
        status = "ok" if result["status"] == "ok" else "failed"
        with open(os.path.join(point_dir(cfg, snr, eta), "point.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(_point_record(cfg, snr, eta, methods, status), fh, indent=2)
            fh.write("\n")
    return result


def _print_plan(cfg, stages, methods, out=None) -> None:
    out = out or sys.stdout
    print(f"config hash {cfg.config_hash()}, seed {cfg.seed}, output {cfg.out}", file=out)
    print(f"datasets train={cfg.n_train} val={cfg.n_val} test={cfg.n_test}, "
          f"epochs {cfg.training.epochs}", file=out)
    for snr, eta in operating_points(cfg):
        print(f"  {point_key(cfg, snr, eta):28s} {'+'.join(stages)} [{','.join(methods)}] "
              f"-> {point_dir(cfg, snr, eta)}", file=out)


def _write_manifest(cfg: ExperimentConfig, command: str, results) -> None:
    path = os.path.join(cfg.out, "manifest.json")
    now = datetime.now(timezone.utc).isoformat(timespec="seconds")
    previous = {}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            previous = json.load(fh)
    points = dict(previous.get("points", {})) if previous.get("config_hash") == cfg.config_hash() else {}
    for r in results:
        points[r["key"]] = {"snr_db": r["snr"], "eta": r["eta"],
                            "point_hash": cfg.point_hash(r["snr"], r["eta"]),
                            "status": r["status"], "command": command}
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "data_seeds": {split: derive_seed(cfg.seed, "data", split) for split in SPLITS},
        "dataset_sizes": {"train": cfg.n_train, "val": cfg.n_val, "test": cfg.n_test},
        "created": previous.get("created", now),
        "updated": now,
        "points": dict(sorted(points.items())),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def run(args) -> int:
    cfg = resolve_config(args)
    stages = STAGES if args.command == "sweep" else (args.command,)
    methods = tuple(cfg.methods)
    if args.command == "train":
        methods = tuple(m for m in methods if m in TRAINED)
        if args.method != "all":
            methods = (args.method,)
    if args.dry_run:
        _print_plan(cfg, stages, methods)
        return 0
    if args.workers < 1:
        raise SystemExit("--workers must be >= 1")
    os.makedirs(cfg.out, exist_ok=True)
    text = cfg.dumps()
    with open(os.path.join(cfg.out, "config.yaml"), "w", encoding="utf-8") as fh:
        fh.write(text)

    jobs = [(text, snr, eta, stages, methods, args.command == "sweep")
            for snr, eta in operating_points(cfg)]
    if args.workers == 1 or len(jobs) == 1:
        results = [run_job(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(run_job, *zip(*jobs)))

    notes = [n for r in results for n in r["notes"]]
    if notes:
        with open(os.path.join(cfg.out, "warnings.log"), "a", encoding="utf-8") as fh:
            fh.write("".join(f"{args.command},{n}\n" for n in notes))
        for n in notes:
            log.warning(n)
    if "evaluate" in stages:
        write_report(os.path.join(cfg.out, "report.csv"),
                     [row for r in results for row in r["rows"]])
    _write_manifest(cfg, args.command, results)

    failed = 0
    for r in sorted(results, key=lambda r: (r["snr"], r["eta"])):
        print(f"{r['key']:28s} {r['status']}")
        failed += r["status"].startswith("failed")
    print(f"{len(results) - failed}/{len(results)} points succeeded")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (OSError, ValueError) as exc:
        print(f"mixadc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
