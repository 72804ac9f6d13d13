"""Position error metrics and empirical CDF tables."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyInput


def _errors(errors):
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise EmptyInput("no error samples")
    return e.reshape(-1, 3)


def prmse(errors):
    """Root of the mean (over epochs) squared 3-D position error."""
    e = _errors(errors)
    return float(np.sqrt(np.mean(np.sum(e * e, axis=1))))


def pmae(errors):
    """Mean (over epochs) of the axis-summed absolute position error."""
    e = _errors(errors)
    return float(np.mean(np.sum(np.abs(e), axis=1)))


def cdf_table(values):
    """Sorted distinct values with the fraction of samples at or below each.

    The last fraction is exactly 1.0.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("no values")
    uniq, counts = np.unique(v, return_counts=True)
    cum = np.cumsum(counts)
    return [(float(u), float(c) / v.size if c < v.size else 1.0) for u, c in zip(uniq, cum)]


def write_cdf(path, table, name="value"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([name, "fraction"])
        for value, frac in table:
            w.writerow([repr(value), repr(frac)])


@dataclass
class MetricsReport:
    prmse: float
    pmae: float
    errors: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, 3)))

    @classmethod
    def from_errors(cls, errors):
        e = _errors(errors)
        return cls(prmse(e), pmae(e), e)

    def to_dict(self):
        return {"prmse": self.prmse, "pmae": self.pmae, "epochs": int(len(self.errors))}
