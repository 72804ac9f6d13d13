"""Runs, comparisons and the window-length sweep driven by a RunConfig."""
from __future__ import annotations

import csv
import json
import logging
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

from .. import adaptive, neuralq
from .. import scenario as sc
from ..errors import NavError, ValidationError
from .config import RunConfig
from .logs import imu_arrays, load_log
from .metrics import MetricsReport, cdf_table

log = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def _baseline(name, duration, rate):
    return sc.synthesize(sc.make_profile(name, duration, rate))


def filter_config(cfg):
    f = cfg["filter"]
    s = cfg["scenario"]
    return adaptive.FilterConfig(
        dt=cfg.dt, gnss_period=float(s["gnss_period"]), duration=float(s["duration"]),
        r_diag=tuple(s["r_diag"]), p0_sigma=tuple(f["p0_sigma"]),
        transition_order=int(f["transition_order"]), noise_model=f["noise_model"],
        joseph=bool(f["joseph"]), eps_bias=f["eps_bias"],
        max_correction=float(f["max_correction"]))


def make_policy(choice, cfg, model=None):
    """Policy from a preset name (``cq1``, ``aq3``, ``hb``...) or a dict.

    Dicts: ``{"type": "constant", "q_f": .., "q_w": ..}``,
    ``{"type": "innovation", "xi": 3}`` or ``{"type": "learned"}``.
    """
    if isinstance(choice, str):
        key = choice.lower()
        if key in adaptive.PRESETS:
            return adaptive.PRESETS[key]
        if key == "hb":
            choice = {"type": "learned"}
        else:
            raise ValidationError(f"unknown policy {choice!r}")
    kind = choice.get("type")
    eps = choice.get("eps_bias", 0.001)
    if kind == "constant":
        return adaptive.Constant(adaptive.ProcessNoiseDiag(choice["q_f"], choice["q_w"], eps))
    if kind == "innovation":
        return adaptive.InnovationWindow(int(choice["xi"]), floor=float(choice.get("floor", 0.0)))
    if kind == "learned":
        hb = cfg["hb"]
        if model is None:
            if not hb["model"]:
                raise ValidationError("the hb policy needs hb.model")
            model = neuralq.load_params(hb["model"])
        return adaptive.Learned(model, float(hb["tuning_rate"]), tuple(hb["clamp"]),
                                eps_bias=eps)
    raise ValidationError(f"unknown policy type {kind!r}")


def policy_label(choice):
    return choice if isinstance(choice, str) else json.dumps(choice, sort_keys=True)


def build_scenario(cfg, seed):
    s = cfg["scenario"]
    base = _baseline(s["baseline"], float(s["duration"]), float(s["rate"]))
    segments = [(float(t), q) for t, q in s["noise"]]
    return sc.make_filter_scenario(base, segments, seed=seed, gnss_period=float(s["gnss_period"]),
                                   r_diag=tuple(s["r_diag"]), bias_walk=float(s["bias_walk"]),
                                   truth=s["truth"])


def run_once(cfg, policy, seed, model=None):
    """One filter run; returns ``(FilterResult, MetricsReport or None, truth or None)``.

    With ``scenario.imu_log`` set the recorded streams are replayed and no
    truth (hence no metrics) is available.
    """
    pol = policy if isinstance(policy, (adaptive.Constant, adaptive.InnovationWindow,
                                        adaptive.Learned)) else make_policy(policy, cfg, model)
    fcfg = filter_config(cfg)
    s = cfg["scenario"]
    if s["imu_log"]:
        imu, gnss = load_log(s["imu_log"], s["gnss_log"])
        t, acc, gyr = imu_arrays(imu)
        if not gnss:
            raise ValidationError("replay needs at least one GNSS fix")
        base = _baseline(s["baseline"], float(s["duration"]), float(s["rate"]))
        initial = base.truth.state(0)
        initial.time = float(t[0])
        res = adaptive.run_filter(t, acc, gyr, gnss, pol, fcfg, initial)
        return res, None, None
    scen = build_scenario(cfg, seed)
    res = adaptive.run_filter(scen.time, scen.accel, scen.gyro, scen.gnss, pol, fcfg,
                              scen.initial, truth=scen.truth, truth_bias=scen.truth_bias)
    return res, MetricsReport.from_errors(res.pos_error), scen.truth


def compare(cfg, policies=None, model=None):
    """Mean PRMSE/PMAE per policy over ``cfg.seeds``.

    Rows keep the input order; ``rank`` orders them by PRMSE (1 is best). A
    failing policy gets ``status`` set to the error and no metrics.
    """
    policies = list(policies if policies is not None else cfg["policies"])
    rows = []
    for choice in policies:
        row = {"policy": policy_label(choice), "prmse": float("nan"), "pmae": float("nan"),
               "seed_prmse": [], "seed_pmae": [], "status": "ok"}
        try:
            for seed in cfg["seeds"]:
                _, rep, _ = run_once(cfg, choice, int(seed), model)
                if rep is None:
                    raise ValidationError("compare needs a simulated scenario")
                row["seed_prmse"].append(rep.prmse)
                row["seed_pmae"].append(rep.pmae)
            row["prmse"] = float(np.mean(row["seed_prmse"]))
            row["pmae"] = float(np.mean(row["seed_pmae"]))
        except (NavError, ValueError) as exc:
            row["status"] = f"{type(exc).__name__}: {exc}"
            log.warning("policy %s failed: %s", row["policy"], exc)
        rows.append(row)
    ok = [i for i, r in enumerate(rows) if r["status"] == "ok"]
    for rank, i in enumerate(sorted(ok, key=lambda i: rows[i]["prmse"]), start=1):
        rows[i]["rank"] = rank
    for r in rows:
        r.setdefault("rank", None)
    return rows


def write_comparison(directory, rows):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "prmse", "pmae", "rank", "status"])
        for r in rows:
            w.writerow([r["policy"], repr(r["prmse"]), repr(r["pmae"]),
                        "" if r["rank"] is None else r["rank"], r["status"]])
    for metric in ("prmse", "pmae"):
        with open(directory / f"cdf_{metric}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["policy", metric, "fraction"])
            for r in rows:
                if r[f"seed_{metric}"]:
                    for value, frac in cdf_table(r[f"seed_{metric}"]):
                        w.writerow([r["policy"], repr(value), repr(frac)])


def dataset_from_config(cfg, window=None):
    d = cfg["dataset"]
    lo, hi, count = d["grid"]
    names = tuple(d["baselines"])
    bases = [_baseline(n, float(d["duration"]), float(cfg["scenario"]["rate"])) for n in names]
    ds = sc.build_dataset(bases, sc.q_grid(lo, hi, int(count)), int(window or d["window"]),
                          int(d["seed"]))
    train, test = sc.split(ds, float(d["ratio"]), int(d["seed"]))
    return ds, train, test


def train_config(cfg):
    t = cfg["train"]
    return neuralq.TrainConfig(float(t["learning_rate"]), float(t["drop_factor"]),
                               int(t["drop_epoch"]), int(t["epochs"]), int(t["batch_size"]),
                               int(t["seed"]))


def sweep_n(cfg, grid=None, on_model=None):
    """Train one regressor per window length; rows ``(N, train_rmse, test_rmse, seconds)``.

    ``on_model(n, params, history)`` is called after each fit.
    """
    grid = [int(n) for n in (grid if grid is not None else cfg["sweep"]["grid"])]
    rows = []
    for n in grid:
        start = time.perf_counter()
        _, train, test = dataset_from_config(cfg, n)
        params, history = neuralq.train(train, train_config(cfg), test)
        if on_model is not None:
            on_model(n, params, history)
        rows.append({"N": n, "train_rmse": history[-1]["train_rmse"],
                     "test_rmse": history[-1]["test_rmse"], "examples": len(train) + len(test),
                     "seconds": time.perf_counter() - start})
        log.info("N=%d test RMSE %.5f", n, rows[-1]["test_rmse"])
    return rows


def write_sweep(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "train_rmse", "test_rmse", "examples", "seconds"])
        for r in rows:
            w.writerow([r["N"], repr(r["train_rmse"]), repr(r["test_rmse"]), r["examples"],
                        f"{r['seconds']:.2f}"])
