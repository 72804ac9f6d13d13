"""JSON run configuration.

A config file is one JSON object; every section is optional::

    {
      "scenario": {"baseline": "figure_eight", "duration": 60, "rate": 100,
                   "noise": [[0, 0.005], [30, 0.02]], "gnss_period": 0.2,
                   "r_diag": [0.01, 0.01, 0.02], "bias_walk": 0.0,
                   "truth": "mechanized", "imu_log": null, "gnss_log": null},
      "filter": {"transition_order": 2, "noise_model": "sample", "eps_bias": null,
                 "joseph": false, "max_correction": 0.1, "p0_sigma": [1, 0.1, 0.001, 0.01, 0.001]},
      "policy": "cq1",
      "policies": ["cq1", "cq2", "cq3", "aq1", "aq3", "aq5", "hb"],
      "hb": {"model": "model.json", "tuning_rate": 2.0, "clamp": [0.001, 0.025]},
      "seeds": [0, 1, 2],
      "dataset": {"baselines": ["straight", "figure_eight"], "duration": 400,
                  "window": 200, "grid": [0.001, 0.025, 15], "ratio": 0.8, "seed": 0},
      "train": {"epochs": 30, "batch_size": 500, "learning_rate": 0.001,
                "drop_epoch": 20, "drop_factor": 0.1, "seed": 0},
      "sweep": {"grid": [50, 100, 200, 400]},
      "output_dir": "out"
    }
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ValidationError
from ..scenario import BASELINE_NAMES

DEFAULTS = {
    "scenario": {
        "baseline": "figure_eight",
        "duration": 60.0,
        "rate": 100.0,
        "noise": [[0.0, 0.005], [30.0, 0.02]],
        "gnss_period": 0.2,
        "r_diag": [0.01, 0.01, 0.02],
        "bias_walk": 0.0,
        "truth": "mechanized",
        "imu_log": None,
        "gnss_log": None,
    },
    "filter": {
        "transition_order": 2,
        "noise_model": "sample",
        "eps_bias": None,
        "joseph": False,
        "max_correction": 0.1,
        "p0_sigma": [1.0, 0.1, 1e-3, 1e-2, 1e-3],
    },
    "policy": "cq1",
    "policies": ["cq1", "cq2", "cq3", "aq1", "aq3", "aq5"],
    "hb": {"model": None, "tuning_rate": 2.0, "clamp": [0.001, 0.025]},
    "seeds": [0],
    "dataset": {
        "baselines": ["straight", "figure_eight"],
        "duration": 400.0,
        "window": 200,
        "grid": [0.001, 0.025, 15],
        "ratio": 0.8,
        "seed": 0,
    },
    "train": {"epochs": 30, "batch_size": 500, "learning_rate": 1e-3, "drop_epoch": 20,
              "drop_factor": 0.1, "seed": 0},
    "sweep": {"grid": [50, 100, 200, 400]},
    "output_dir": "out",
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ValidationError(f"unknown config key {path}{key}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


def _parse_scalar(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass
class RunConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
        return cls(_merge(DEFAULTS, d))

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
        except OSError as exc:
            raise ValidationError(f"{path}: {exc.strerror}") from exc
        return cls.from_dict(d)

    def override(self, dotted, value):
        """Set ``a.b.c`` to ``value`` (a JSON literal or bare string)."""
        keys = dotted.split(".")
        node = self.data
        for k in keys[:-1]:
            if k not in node or not isinstance(node[k], dict):
                raise ValidationError(f"unknown config key {dotted}")
            node = node[k]
        if keys[-1] not in node:
            raise ValidationError(f"unknown config key {dotted}")
        node[keys[-1]] = _parse_scalar(value) if isinstance(value, str) else value
        self.validate()
        return self

    def __getitem__(self, key):
        return self.data[key]

    def to_json(self):
        return json.dumps(self.data, indent=2)

    @property
    def dt(self):
        return 1.0 / float(self.data["scenario"]["rate"])

    @property
    def output_dir(self):
        return Path(self.data["output_dir"])

    def validate(self):
        s = self.data["scenario"]
        if s["baseline"] not in BASELINE_NAMES:
            raise ValidationError(f"unknown baseline {s['baseline']!r}")
        for key in ("duration", "rate", "gnss_period"):
            if not float(s[key]) > 0:
                raise ValidationError(f"scenario.{key} must be positive")
        ratio = float(s["gnss_period"]) * float(s["rate"])
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValidationError("scenario.gnss_period must be a multiple of the IMU period")
        if len(s["r_diag"]) != 3 or min(s["r_diag"]) <= 0:
            raise ValidationError("scenario.r_diag must hold three positive values")
        if not s["noise"] or any(len(seg) != 2 for seg in s["noise"]):
            raise ValidationError("scenario.noise must be a list of [t_start, q] pairs")
        hb = self.data["hb"]
        steps = float(hb["tuning_rate"]) * float(s["rate"])
        if not steps > 0 or abs(steps - round(steps)) > 1e-6:
            raise ValidationError("hb.tuning_rate must be a positive multiple of the IMU period")
        lo, hi = hb["clamp"]
        if not 0 < lo <= hi:
            raise ValidationError("hb.clamp must satisfy 0 < min <= max")
        if not self.data["seeds"]:
            raise ValidationError("seeds must be non-empty")
        d = self.data["dataset"]
        unknown = set(d["baselines"]) - set(BASELINE_NAMES)
        if unknown:
            raise ValidationError(f"unknown baselines {sorted(unknown)}")
        if int(d["window"]) < 2:
            raise ValidationError("dataset.window must be at least 2")
        if any(int(n) < 2 for n in self.data["sweep"]["grid"]):
            raise ValidationError("sweep.grid entries must be at least 2")
