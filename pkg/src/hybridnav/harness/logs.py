"""Ingestion of recorded IMU and GNSS logs.

IMU file columns: ``time, fx, fy, fz, wx, wy, wz`` (s, m/s^2, rad/s).
GNSS file columns: ``time, lat, lon, alt`` (s, rad, rad, m).
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..errors import NonMonotoneTime, ParseError
from ..geodesy import GeoPosition
from ..mechanization import ImuSample
from ..scenario import GnssFix

IMU_COLUMNS = ("time", "fx", "fy", "fz", "wx", "wy", "wz")
GNSS_COLUMNS = ("time", "lat", "lon", "alt")


def _read_table(path, columns):
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(path, 1, "empty file")
        if [h.strip() for h in header] != list(columns):
            raise ParseError(path, 1, f"expected header {','.join(columns)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(columns):
                raise ParseError(path, line_no, f"expected {len(columns)} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(path, line_no, "non-finite value")
            rows.append((line_no, vals))
    for (_, prev), (line_no, cur) in zip(rows, rows[1:]):
        if not cur[0] > prev[0]:
            raise NonMonotoneTime(f"{path}:{line_no}: time {cur[0]} after {prev[0]}")
    return [v for _, v in rows]


def load_imu(path):
    return [ImuSample(r[0], np.array(r[1:4]), np.array(r[4:7]))
            for r in _read_table(path, IMU_COLUMNS)]


def load_gnss(path, r_diag=(0.01, 0.01, 0.02)):
    return [GnssFix(r[0], GeoPosition(r[1], r[2], r[3]), tuple(r_diag))
            for r in _read_table(path, GNSS_COLUMNS)]


def load_log(imu_path, gnss_path):
    """Validated ``(imu samples, gnss fixes)`` from two CSV files."""
    return load_imu(imu_path), load_gnss(gnss_path)


def imu_arrays(samples):
    """``(time, accel, gyro)`` arrays from a list of samples."""
    t = np.array([s.time for s in samples])
    a = np.array([s.accel for s in samples]).reshape(-1, 3)
    g = np.array([s.gyro for s in samples]).reshape(-1, 3)
    return t, a, g
