"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import adaptive, neuralq
from .. import scenario as sc
from ..errors import NavError, ValidationError
from . import experiments as ex
from .config import RunConfig

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

INVALID = (ValidationError, ValueError, FileNotFoundError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. scenario.duration=30")
    p.add_argument("--out", help="output directory (config: output_dir)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="hybridnav", description="INS/GNSS filter with adaptive process noise")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-dataset", help="synthesize baselines and the labeled window dataset")
    _common(p)
    p.add_argument("--window", type=int, help="window length N")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", action="store_true",
                   help="also write truth and ideal IMU CSV files per baseline")

    p = sub.add_parser("train", help="train the variance regressor")
    _common(p)
    p.add_argument("--dataset", help="directory written by gen-dataset (default: regenerate)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--model", help="weight file to write (default: OUT/model.json)")

    p = sub.add_parser("run", help="run the filter with one policy")
    _common(p)
    p.add_argument("--policy", help="cq1, cq2, cq3, aq1, aq3, aq5 or hb")
    p.add_argument("--seed", type=int)
    p.add_argument("--model", help="weight file for the hb policy")

    p = sub.add_parser("compare", help="rank several policies over the configured seeds")
    _common(p)
    p.add_argument("--policies", help="comma-separated policy names")
    p.add_argument("--model", help="weight file for the hb policy")

    p = sub.add_parser("sweep-n", help="test RMSE of the regressor versus window length")
    _common(p)
    p.add_argument("--grid", help="comma-separated window lengths, e.g. 100,200,400")
    p.add_argument("--epochs", type=int)
    return parser


def _load_config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg.override(key, value)
    if args.out:
        cfg.override("output_dir", args.out)
    for attr, key in (("epochs", "train.epochs"), ("window", "dataset.window"),
                      ("model", "hb.model")):
        value = getattr(args, attr, None)
        if value is not None:
            cfg.override(key, value)
    if getattr(args, "seed", None) is not None:
        if args.command == "gen-dataset":
            cfg.override("dataset.seed", args.seed)
        else:
            cfg.override("seeds", [args.seed])
    if getattr(args, "policy", None):
        cfg.override("policy", args.policy)
    if getattr(args, "policies", None):
        cfg.override("policies", [p.strip() for p in args.policies.split(",") if p.strip()])
    if getattr(args, "grid", None):
        try:
            grid = [int(v) for v in args.grid.split(",") if v.strip()]
        except ValueError as exc:
            raise ValidationError(f"--grid: {exc}") from exc
        cfg.override("sweep.grid", grid)
    return cfg


def _out(cfg):
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_dataset(cfg, args):
    out = _out(cfg)
    ds, train, test = ex.dataset_from_config(cfg)
    sc.write_dataset(out, ds, train, test)
    if args.trajectories:
        d = cfg["dataset"]
        for name in d["baselines"]:
            b = ex._baseline(name, float(d["duration"]), float(cfg["scenario"]["rate"]))
            sc.write_trajectory_csv(out / f"{name}_truth.csv", b.truth)
            sc.write_imu_csv(out / f"{name}_imu.csv", b.truth.time[:-1], b.accel, b.gyro)
    print(f"wrote {len(ds)} windows ({len(train)} train / {len(test)} test) to {out}")


def cmd_train(cfg, args):
    out = _out(cfg)
    if args.dataset:
        ds, manifest = sc.read_dataset(args.dataset)
        split = manifest.get("split")
        if split:
            train, test = ds.subset(split["train"]), ds.subset(split["test"])
        else:
            d = cfg["dataset"]
            train, test = sc.split(ds, float(d["ratio"]), int(d["seed"]))
    else:
        _, train, test = ex.dataset_from_config(cfg)
    params, history = neuralq.train(train, ex.train_config(cfg), test)
    model_path = Path(args.model) if args.model else out / "model.json"
    neuralq.save_params(params, model_path, meta={"train": cfg["train"],
                                                  "test_rmse": history[-1]["test_rmse"]})
    neuralq.training.write_history(out / "history.csv", history)
    print(f"test RMSE {history[-1]['test_rmse']:.5f}; weights in {model_path}")


def cmd_run(cfg, args):
    out = _out(cfg)
    seed = int(cfg["seeds"][0])
    result, report, truth = ex.run_once(cfg, cfg["policy"], seed)
    adaptive.write_diagnostics(out / "diagnostics.csv", result, truth)
    summary = {"policy": ex.policy_label(cfg["policy"]), "seed": seed,
               "regressions": result.regressions, "final_trace_p": float(result.p_trace[-1])}
    if report is not None:
        summary.update(report.to_dict())
    with open(out / "metrics.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary))


def cmd_compare(cfg, args):
    out = _out(cfg)
    rows = ex.compare(cfg)
    ex.write_comparison(out, rows)
    for r in rows:
        rank = "-" if r["rank"] is None else r["rank"]
        print(f"{r['policy']:>6}  PRMSE {r['prmse']:.4f}  PMAE {r['pmae']:.4f}  rank {rank}"
              + ("" if r["status"] == "ok" else f"  [{r['status']}]"))


def cmd_sweep(cfg, args):
    out = _out(cfg)
    rows = ex.sweep_n(cfg)
    ex.write_sweep(out / "sweep_n.csv", rows)
    for r in rows:
        print(f"N={r['N']:<5d} test RMSE {r['test_rmse']:.5f}")


COMMANDS = {"gen-dataset": cmd_gen_dataset, "train": cmd_train, "run": cmd_run,
            "compare": cmd_compare, "sweep-n": cmd_sweep}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_help(sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_INVALID
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        COMMANDS[args.command](cfg, args)
    except INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NavError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
