"""Trajectory simulation, inverse-IMU synthesis and labeled-dataset building.

A :class:`MotionProfile` is defined by commanded Euler-angle rates and a
navigation-frame acceleration, both closed-form functions of time. Ground
truth is obtained by integrating those commands (Simpson for velocity and
attitude, RK4 for position); ideal IMU readings are then synthesized from the
truth by inverting the strapdown equations.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import EmptyStream, InsufficientExamples, NearGimbalLock, ValidationError
from .geodesy import (
    WGS84,
    Attitude,
    GeoPosition,
    dcm_to_euler,
    euler_to_dcm,
    ned_to_geodetic,
)
from .mechanization import NavState, Trajectory, integrate

CHANNELS = ("fx", "fy", "fz", "wx", "wy", "wz")
DEFAULT_Q_GRID = tuple(np.linspace(0.001, 0.025, 15))
DEFAULT_R_DIAG = (0.01, 0.01, 0.02)
DEFAULT_ORIGIN = (math.radians(32.1), math.radians(34.8), 100.0)


@dataclass
class MotionProfile:
    """Commanded motion: Euler-angle rates and NED acceleration versus time.

    ``euler_rates`` and ``accel_n`` must accept an array of times and return
    an array of shape ``(len(t), 3)``.
    """

    name: str
    duration: float
    rate: float
    euler_rates: Callable
    accel_n: Callable
    initial: NavState

    def __post_init__(self):
        if not self.duration > 0 or not self.rate > 0:
            raise ValidationError("duration and rate must be positive")

    @property
    def dt(self):
        return 1.0 / self.rate

    @property
    def n_samples(self):
        return int(round(self.duration * self.rate))


@dataclass
class Baseline:
    """Ground truth plus the ideal IMU stream that reproduces it."""

    name: str
    truth: Trajectory
    accel: np.ndarray
    gyro: np.ndarray
    dt: float

    @property
    def imu(self):
        """``(K, 6)`` stream in channel order fx, fy, fz, wx, wy, wz."""
        return np.hstack([self.accel, self.gyro])


@dataclass
class LabeledWindow:
    samples: np.ndarray
    label: float
    channel_id: str


@dataclass
class GnssFix:
    time: float
    pos: GeoPosition
    noise_var: tuple = DEFAULT_R_DIAG


@dataclass
class WindowDataset:
    """Column-oriented collection of labeled windows."""

    x: np.ndarray          # (M, N) raw samples
    y: np.ndarray          # (M,) injected variance
    channel: np.ndarray    # (M,) index into CHANNELS
    baseline: np.ndarray   # (M,) baseline index
    baseline_names: tuple = ()
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.y)

    @property
    def window_length(self):
        return self.x.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx)
        return WindowDataset(self.x[idx], self.y[idx], self.channel[idx], self.baseline[idx],
                             self.baseline_names, dict(self.meta))

    def windows(self):
        for i in range(len(self)):
            yield LabeledWindow(self.x[i], float(self.y[i]), CHANNELS[self.channel[i]])


# -- profiles -------------------------------------------------------------------

def _ramp(t, span):
    """Smooth 0->1 ramp over ``span`` seconds, with derivative and integral."""
    t = np.asarray(t, dtype=float)
    u = np.clip(t / span, 0.0, 1.0)
    val = 0.5 * (1.0 - np.cos(np.pi * u))
    der = np.where(t < span, 0.5 * np.pi / span * np.sin(np.pi * u), 0.0)
    integ = np.where(t < span, 0.5 * t - 0.5 * span / np.pi * np.sin(np.pi * u),
                     0.5 * span + (t - span))
    return val, der, integ


@dataclass
class _Kinematics:
    """Piecewise-analytic motion described by speed, heading and attitude.

    Each attribute is a function ``t -> (value, derivative)``.
    """

    speed: Callable
    heading: Callable
    vdown: Callable
    roll: Callable
    pitch: Callable

    def euler_rates(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([self.roll(t)[1], self.pitch(t)[1], self.heading(t)[1]], axis=1)

    def accel_n(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        v, dv = self.speed(t)
        chi, dchi = self.heading(t)
        _, ddown = self.vdown(t)
        c, s = np.cos(chi), np.sin(chi)
        return np.stack([dv * c - v * dchi * s, dv * s + v * dchi * c, ddown], axis=1)

    def initial(self, origin):
        t0 = np.zeros(1)
        v, chi, vd = self.speed(t0)[0][0], self.heading(t0)[0][0], self.vdown(t0)[0][0]
        vel = [v * math.cos(chi), v * math.sin(chi), vd]
        att = euler_to_dcm(self.roll(t0)[0][0], self.pitch(t0)[0][0], chi)
        return NavState(GeoPosition(*origin), vel, Attitude(att), 0.0)


def _const(c):
    return lambda t: (np.full_like(t, c), np.zeros_like(t))


def _sine(amp, period, phase=0.0, onset=20.0):
    """Sinusoid faded in by a smooth ramp so its derivative starts at zero."""
    w = 2.0 * np.pi / period

    def f(t):
        r, dr, _ = _ramp(t, onset)
        s, ds = amp * np.sin(w * t + phase), amp * w * np.cos(w * t + phase)
        return r * s, dr * s + r * ds
    return f


def _ramped_speed(cruise, span, wobble=0.0, period=1.0):
    w = 2.0 * np.pi / period

    def f(t):
        r, dr, _ = _ramp(t, span)
        base = cruise + wobble * np.sin(w * t)
        dbase = wobble * w * np.cos(w * t)
        return r * base, dr * base + r * dbase
    return f


def _turning_heading(chi0, rate_fn):
    """Heading from a turn-rate triple ``(rate, d rate, integral)``."""
    def f(t):
        rate, _, integ = rate_fn(t)
        return chi0 + integ, rate
    return f


def _bank_from_turn(speed, rate_fn, onset=20.0):
    """Small-angle coordinated-turn roll ``phi = V chi_dot / g``, faded in."""
    k = speed / 9.8

    def f(t):
        rate, drate, _ = rate_fn(t)
        r, dr, _ = _ramp(t, onset)
        return k * r * rate, k * (dr * rate + r * drate)
    return f


def _sine_rate(amp, period):
    w = 2.0 * np.pi / period

    def f(t):
        return (amp * np.sin(w * t), amp * w * np.cos(w * t),
                amp / w * (1.0 - np.cos(w * t)))
    return f


def _ramped_rate(amp, span):
    def f(t):
        r, dr, integ = _ramp(t, span)
        return amp * r, amp * dr, amp * integ
    return f


def _kinematics(name):
    if name == "straight":
        return _Kinematics(
            speed=_ramped_speed(12.0, 20.0),
            heading=_const(math.pi / 6),
            vdown=_const(0.0),
            roll=_sine(0.03, 23.0),
            pitch=_sine(0.02, 31.0),
        )
    if name == "figure_eight":
        # one full turn per half period -> amplitude 2*pi^2/P
        period = 160.0
        rate = _sine_rate(2.0 * np.pi ** 2 / period, period)
        return _Kinematics(
            speed=_ramped_speed(10.0, 20.0),
            heading=_turning_heading(0.0, rate),
            vdown=_const(0.0),
            roll=_bank_from_turn(10.0, rate),
            pitch=_sine(0.02, 37.0),
        )
    if name == "loiter":
        rate = _ramped_rate(2.0 * np.pi / 90.0, 30.0)
        return _Kinematics(
            speed=_ramped_speed(8.0, 20.0),
            heading=_turning_heading(-math.pi / 4, rate),
            vdown=_const(0.0),
            roll=_bank_from_turn(8.0, rate),
            pitch=_sine(0.015, 29.0),
        )
    if name == "climbing_spiral":
        rate = _ramped_rate(2.0 * np.pi / 120.0, 30.0)

        def vdown(t):
            r, dr, _ = _ramp(t, 30.0)
            return -1.5 * r, -1.5 * dr

        def pitch(t):
            r, dr, _ = _ramp(t, 30.0)
            return 0.05 * r, 0.05 * dr
        return _Kinematics(
            speed=_ramped_speed(9.0, 20.0),
            heading=_turning_heading(math.pi / 2, rate),
            vdown=vdown,
            roll=_bank_from_turn(9.0, rate),
            pitch=pitch,
        )
    if name == "s_weave":
        rate = _sine_rate(0.1, 40.0)
        return _Kinematics(
            speed=_ramped_speed(10.0, 15.0),
            heading=_turning_heading(math.pi, rate),
            vdown=_const(0.0),
            roll=_bank_from_turn(10.0, rate),
            pitch=_sine(0.02, 17.0),
        )
    if name == "accel_decel":
        return _Kinematics(
            speed=_ramped_speed(10.0, 20.0, wobble=6.0, period=80.0),
            heading=_const(-math.pi / 3),
            vdown=_sine(0.5, 50.0),
            roll=_sine(0.025, 19.0),
            pitch=_sine(0.04, 80.0, phase=math.pi / 2),
        )
    raise ValidationError(f"unknown profile {name!r}")


BASELINE_NAMES = ("straight", "figure_eight", "loiter", "climbing_spiral", "s_weave",
                  "accel_decel")


def make_profile(name, duration=400.0, rate=100.0, origin=DEFAULT_ORIGIN):
    """Build one of the named baseline profiles."""
    kin = _kinematics(name)
    return MotionProfile(name, duration, rate, kin.euler_rates, kin.accel_n,
                         kin.initial(origin))


# -- truth and inverse IMU ------------------------------------------------------

def _radii(lat, earth):
    a, e2 = earth.semi_major_axis, earth.eccentricity_sq
    den = 1.0 - e2 * np.sin(lat) ** 2
    return a * (1.0 - e2) / den ** 1.5, a / np.sqrt(den)


def _cumulative_simpson(fn, t0, dt, n, y0):
    """Integrate ``y' = fn(t)`` on ``t0 + k*dt``; Simpson per interval."""
    ts = t0 + 0.5 * dt * np.arange(2 * n + 1)
    vals = fn(ts)
    incr = dt / 6.0 * (vals[0:-1:2] + 4.0 * vals[1::2] + vals[2::2])
    out = np.empty((n + 1, vals.shape[1]))
    out[0] = y0
    out[1:] = y0 + np.cumsum(incr, axis=0)
    return out


def generate_truth(profile, earth=WGS84):
    """Integrate a profile's commands into a ground-truth :class:`Trajectory`."""
    dt, n = profile.dt, profile.n_samples
    init = profile.initial
    e0 = dcm_to_euler(init.dcm)
    half = 0.5 * dt
    euler = _cumulative_simpson(profile.euler_rates, init.time, dt, n, e0)
    # velocity on the half-step grid so RK4 can use midpoint values
    vel_half = _cumulative_simpson(profile.accel_n, init.time, half, 2 * n, init.vel)
    vel = vel_half[::2]

    pos = np.empty((n + 1, 3))
    lat, lon, alt = init.pos.lat, init.pos.lon, init.pos.alt
    pos[0] = (lat, lon, alt)
    a, e2 = earth.semi_major_axis, earth.eccentricity_sq

    def rate(lat, alt, v):
        den = 1.0 - e2 * math.sin(lat) ** 2
        r_n = a / math.sqrt(den)
        r_m = a * (1.0 - e2) / den ** 1.5
        return v[0] / (r_m + alt), v[1] / (math.cos(lat) * (r_n + alt)), -v[2]

    for k in range(n):
        v0, vm, v1 = vel_half[2 * k], vel_half[2 * k + 1], vel_half[2 * k + 2]
        k1 = rate(lat, alt, v0)
        k2 = rate(lat + half * k1[0], alt + half * k1[2], vm)
        k3 = rate(lat + half * k2[0], alt + half * k2[2], vm)
        k4 = rate(lat + dt * k3[0], alt + dt * k3[2], v1)
        lat += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        lon += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        alt += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        pos[k + 1] = (lat, lon, alt)
    pos[:, 1] = np.remainder(pos[:, 1] + np.pi, 2 * np.pi) - np.pi
    dcm = np.array([euler_to_dcm(*e) for e in euler])
    time = init.time + dt * np.arange(n + 1)
    return Trajectory(time, pos, vel, dcm)


def _earth_terms(lat, alt, vel, earth):
    """Vectorized ``w_ie``, ``w_en`` and gravity magnitude."""
    r_m, r_n = _radii(lat, earth)
    om = earth.earth_rate
    w_ie = np.stack([om * np.cos(lat), np.zeros_like(lat), -om * np.sin(lat)], axis=-1)
    w_en = np.stack([vel[..., 1] / (r_n + alt), -vel[..., 0] / (r_m + alt),
                     -vel[..., 1] * np.tan(lat) / (r_n + alt)], axis=-1)
    g_e, k, grad = earth.gravity_params
    s2 = np.sin(lat) ** 2
    g = g_e * (1.0 + k * s2) / np.sqrt(1.0 - earth.eccentricity_sq * s2) - grad * alt
    return w_ie, w_en, g


def _euler_rate_matrix(roll, pitch):
    """Body rates from Euler-angle rates (ZYX)."""
    sr, cr = np.sin(roll), np.cos(roll)
    sp, cp = np.sin(pitch), np.cos(pitch)
    m = np.zeros(roll.shape + (3, 3))
    m[..., 0, 0] = 1.0
    m[..., 0, 2] = -sp
    m[..., 1, 1] = cr
    m[..., 1, 2] = sr * cp
    m[..., 2, 1] = -sr
    m[..., 2, 2] = cr * cp
    return m


def synth_gyro_batch(pos, vel, dcm, euler_rates, earth=WGS84, earth_terms=True):
    """Vectorized ideal gyro output; arrays carry a leading sample axis."""
    euler = np.array([dcm_to_euler(c) for c in dcm])
    if np.any(np.abs(euler[:, 1]) > math.pi / 2 - 1e-6):
        raise NearGimbalLock("pitch too close to +-90 deg for the Euler-rate map")
    m = _euler_rate_matrix(euler[:, 0], euler[:, 1])
    body = np.einsum("kij,kj->ki", m, euler_rates)
    if not earth_terms:
        return body
    w_ie, w_en, _ = _earth_terms(pos[:, 0], pos[:, 2], vel, earth)
    return np.einsum("kji,kj->ki", dcm, w_ie + w_en) + body


def synth_accel_batch(pos, vel, dcm, accel_n, earth=WGS84):
    """Vectorized ideal specific force."""
    w_ie, w_en, g = _earth_terms(pos[:, 0], pos[:, 2], vel, earth)
    grav = np.zeros_like(vel)
    grav[:, 2] = g
    rhs = accel_n - grav + np.cross(w_en + 2.0 * w_ie, vel)
    return np.einsum("kji,kj->ki", dcm, rhs)


def synth_gyro(state, euler_rates, earth=WGS84, earth_terms=True):
    """Gyro reading that realizes commanded Euler-angle rates at ``state``.

    ``earth_terms=False`` drops the Earth and transport rate projection.
    """
    p = state.pos
    return synth_gyro_batch(np.array([[p.lat, p.lon, p.alt]]), state.vel[None],
                            state.dcm[None], np.asarray(euler_rates, float)[None],
                            earth, earth_terms)[0]


def synth_accel(state, accel_n, earth=WGS84):
    """Accelerometer reading that realizes NED acceleration ``accel_n`` at ``state``."""
    p = state.pos
    return synth_accel_batch(np.array([[p.lat, p.lon, p.alt]]), state.vel[None],
                             state.dcm[None], np.asarray(accel_n, float)[None], earth)[0]


def synthesize(profile, earth=WGS84):
    """Ground truth and ideal IMU for a profile; returns a :class:`Baseline`."""
    truth = generate_truth(profile, earth)
    n = profile.n_samples
    t = truth.time[:n]
    gyro = synth_gyro_batch(truth.pos[:n], truth.vel[:n], truth.dcm[:n],
                            profile.euler_rates(t), earth)
    accel = synth_accel_batch(truth.pos[:n], truth.vel[:n], truth.dcm[:n],
                              profile.accel_n(t), earth)
    return Baseline(profile.name, truth, accel, gyro, profile.dt)


@dataclass
class BaselineConfig:
    duration: float = 400.0
    rate: float = 100.0
    names: tuple = BASELINE_NAMES

    def __post_init__(self):
        if not self.duration > 0 or not self.rate > 0:
            raise ValidationError("duration and rate must be positive")
        unknown = set(self.names) - set(BASELINE_NAMES)
        if unknown:
            raise ValidationError(f"unknown baselines {sorted(unknown)}")


def gen_baselines(config=None, earth=WGS84):
    """Synthesize every baseline named in ``config`` (all six by default)."""
    config = config or BaselineConfig()
    return [synthesize(make_profile(n, config.duration, config.rate), earth)
            for n in config.names]


# -- noise, windows, split --------------------------------------------------------

def q_grid(lo=0.001, hi=0.025, n=15):
    return np.linspace(lo, hi, n)


def corrupt(stream, q, seed):
    """Add white Gaussian noise of variance ``q`` to every sample of every channel."""
    stream = np.asarray(stream, dtype=float)
    if q < 0:
        raise ValidationError("variance must be non-negative")
    if q == 0:
        return stream.copy()
    rng = np.random.default_rng(seed)
    return stream + rng.normal(0.0, math.sqrt(q), stream.shape)


def window(stream, n, label, channel_id="fx"):
    """Cut a single-channel stream into disjoint windows of length ``n``."""
    stream = np.asarray(stream, dtype=float).ravel()
    if n < 1:
        raise ValidationError("window length must be positive")
    count = len(stream) // n
    if count == 0:
        raise EmptyStream(f"stream of {len(stream)} samples shorter than N={n}")
    blocks = stream[:count * n].reshape(count, n)
    return [LabeledWindow(b.copy(), float(label), channel_id) for b in blocks]


def build_dataset(baselines, grid=DEFAULT_Q_GRID, n=200, seed=0):
    """Corrupt every baseline at every noise level and window all six channels.

    Noise for cell ``(baseline i, level j)`` is drawn from
    ``SeedSequence([seed, i, j])`` so cells are independent and reproducible.
    """
    xs, ys, chans, bases = [], [], [], []
    for i, b in enumerate(baselines):
        clean = b.imu
        count = clean.shape[0] // n
        if count == 0:
            raise EmptyStream(f"baseline {b.name} shorter than N={n}")
        for j, q in enumerate(grid):
            noisy = corrupt(clean, float(q), np.random.SeedSequence([seed, i, j]))
            for c in range(len(CHANNELS)):
                blocks = noisy[:count * n, c].reshape(count, n)
                xs.append(blocks)
                ys.append(np.full(count, float(q)))
                chans.append(np.full(count, c, dtype=np.int64))
                bases.append(np.full(count, i, dtype=np.int64))
    meta = {"seed": seed, "grid": [float(q) for q in grid], "window_length": n,
            "stride": n, "baselines": [b.name for b in baselines],
            "input_standardization": "per-window mean removal"}
    ds = WindowDataset(np.concatenate(xs), np.concatenate(ys), np.concatenate(chans),
                       np.concatenate(bases), tuple(b.name for b in baselines), meta)
    ds.meta["count"] = len(ds)
    return ds


def split(dataset, ratio=0.8, seed=0):
    """Stratified random split keeping every (baseline, level) cell in both parts.

    Returns ``(train, test)``; the total train size is ``round(ratio * M)``.
    """
    if not 0.0 < ratio < 1.0:
        raise ValidationError("ratio must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    labels = np.round(dataset.y, 12)
    cells = {}
    for idx, key in enumerate(zip(dataset.baseline.tolist(), labels.tolist())):
        cells.setdefault(key, []).append(idx)
    keys = sorted(cells)
    sizes = np.array([len(cells[k]) for k in keys])
    if np.any(sizes < 2):
        raise InsufficientExamples("every (baseline, level) cell needs at least 2 windows")
    ideal = ratio * sizes
    take = np.clip(np.floor(ideal).astype(int), 1, sizes - 1)
    target = int(round(ratio * len(dataset)))
    frac = ideal - np.floor(ideal)
    order = np.argsort(-frac, kind="stable")
    i = 0
    while take.sum() < target and i < 10 * len(keys):
        c = order[i % len(keys)]
        if take[c] < sizes[c] - 1:
            take[c] += 1
        i += 1
    train_idx, test_idx = [], []
    for k, t in zip(keys, take):
        members = np.array(cells[k])
        perm = rng.permutation(members)
        train_idx.extend(perm[:t].tolist())
        test_idx.extend(perm[t:].tolist())
    train_idx, test_idx = np.sort(train_idx), np.sort(test_idx)
    train, test = dataset.subset(train_idx), dataset.subset(test_idx)
    train.meta["split"] = {"ratio": ratio, "seed": seed, "indices": train_idx.tolist()}
    test.meta["split"] = {"ratio": ratio, "seed": seed, "indices": test_idx.tolist()}
    return train, test


# -- GNSS ------------------------------------------------------------------------

def simulate_gnss(truth, dtau, r_diag=DEFAULT_R_DIAG, seed=0, earth=WGS84):
    """Noisy position fixes every ``dtau`` seconds (first fix at ``t0 + dtau``)."""
    dt = float(truth.time[1] - truth.time[0])
    step = dtau / dt
    m = int(round(step))
    if m < 1 or abs(step - m) > 1e-6:
        raise ValidationError("dtau must be a multiple of the truth period")
    sd = np.sqrt(np.asarray(r_diag, dtype=float))
    rng = np.random.default_rng(seed)
    fixes = []
    for k in range(m, len(truth), m):
        p = truth.pos[k]
        ref = GeoPosition(p[0], p[1], p[2])
        noise = rng.normal(0.0, 1.0, 3) * sd
        d = ned_to_geodetic(noise, ref, earth)
        fixes.append(GnssFix(float(truth.time[k]),
                             GeoPosition(p[0] + d[0], p[1] + d[1], p[2] + d[2]),
                             tuple(float(r) for r in r_diag)))
    return fixes


# -- persistence -----------------------------------------------------------------

TRAJECTORY_COLUMNS = ("time", "lat", "lon", "alt", "vN", "vE", "vD", "roll", "pitch", "yaw")


def _savetxt(path, arr, header):
    np.savetxt(path, arr, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def write_trajectory_csv(path, traj):
    e = traj.euler()
    _savetxt(path, np.column_stack([traj.time, traj.pos, traj.vel, e]), TRAJECTORY_COLUMNS)


def read_trajectory_csv(path):
    a = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    dcm = np.array([euler_to_dcm(*r) for r in a[:, 7:10]])
    return Trajectory(a[:, 0], a[:, 1:4], a[:, 4:7], dcm)


def write_gnss_csv(path, fixes):
    rows = [(f.time, f.pos.lat, f.pos.lon, f.pos.alt) for f in fixes]
    _savetxt(path, np.array(rows).reshape(-1, 4), ("time", "lat", "lon", "alt"))


def write_imu_csv(path, time, accel, gyro):
    _savetxt(path, np.column_stack([time, accel, gyro]),
             ("time", "fx", "fy", "fz", "wx", "wy", "wz"))


def write_dataset(directory, dataset, train=None, test=None):
    """Persist windows as CSV plus a JSON manifest.

    The CSV has one row per window: ``baseline, channel_id, label, s0..s{N-1}``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = dataset.window_length
    header = ["baseline", "channel_id", "label"] + [f"s{i}" for i in range(n)]
    with open(directory / "dataset.csv", "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(dataset)):
            row = [dataset.baseline_names[dataset.baseline[i]], CHANNELS[dataset.channel[i]],
                   repr(float(dataset.y[i]))] + [repr(float(v)) for v in dataset.x[i]]
            fh.write(",".join(row) + "\n")
    manifest = dict(dataset.meta)
    if train is not None and test is not None:
        manifest["split"] = {"ratio": train.meta["split"]["ratio"],
                             "seed": train.meta["split"]["seed"],
                             "train": train.meta["split"]["indices"],
                             "test": test.meta["split"]["indices"],
                             "train_count": len(train), "test_count": len(test)}
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return directory


def read_dataset(directory):
    """Inverse of :func:`write_dataset`; returns ``(dataset, manifest)``."""
    directory = Path(directory)
    with open(directory / "manifest.json") as fh:
        manifest = json.load(fh)
    names = tuple(manifest.get("baselines", ()))
    xs, ys, chans, bases = [], [], [], []
    name_index = {n: i for i, n in enumerate(names)}
    with open(directory / "dataset.csv") as fh:
        next(fh)
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if parts[0] not in name_index:
                name_index[parts[0]] = len(name_index)
            bases.append(name_index[parts[0]])
            chans.append(CHANNELS.index(parts[1]))
            ys.append(float(parts[2]))
            xs.append([float(v) for v in parts[3:]])
    names = tuple(sorted(name_index, key=name_index.get))
    ds = WindowDataset(np.array(xs), np.array(ys), np.array(chans, dtype=np.int64),
                       np.array(bases, dtype=np.int64), names,
                       {k: v for k, v in manifest.items() if k != "split"})
    return ds, manifest


# -- filter scenarios --------------------------------------------------------------

@dataclass
class FilterScenario:
    """A noisy IMU stream, GNSS fixes and the truth they were derived from."""

    name: str
    truth: Trajectory
    time: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    gnss: list
    true_q: np.ndarray       # (K, 6) variance in force at each sample
    truth_bias: np.ndarray   # (K + 1, 6)
    dt: float

    @property
    def initial(self):
        return self.truth.state(0)


def noise_schedule(n, dt, segments):
    """Per-sample ``(n, 6)`` variances from ``[(t_start, q), ...]``.

    ``q`` is a scalar or a 6-vector; each segment lasts until the next one starts.
    """
    out = np.empty((n, 6))
    t = dt * np.arange(n)
    segs = sorted(segments, key=lambda s: s[0])
    if not segs or segs[0][0] > 0:
        raise ValidationError("schedule must start at t=0")
    for i, (start, q) in enumerate(segs):
        stop = segs[i + 1][0] if i + 1 < len(segs) else np.inf
        out[(t >= start) & (t < stop)] = np.broadcast_to(np.asarray(q, dtype=float), (6,))
    return out


def make_filter_scenario(baseline, segments, seed=0, duration=None, gnss_period=0.2,
                         r_diag=DEFAULT_R_DIAG, bias_walk=0.0, initial_bias=None,
                         truth="mechanized", earth=WGS84):
    """Corrupt a baseline for a filter run.

    Parameters
    ----------
    baseline : Baseline
    segments : float or list of (t_start, q)
        White-noise variance per sample, piecewise constant in time.
    bias_walk : float
        Per-sample variance of the bias random-walk increments (0 for none).
    initial_bias : array_like, shape (6,), optional
        True accelerometer and gyro bias at the first sample.
    truth : {"mechanized", "analytic"}
        ``"mechanized"`` re-integrates the clean IMU with the strapdown step so
        that truth and filter share one dynamics model; ``"analytic"`` keeps the
        high-order reference, which differs by the integrator's truncation
        error (about ``dt/2`` times the change in velocity).
    """
    dt = baseline.dt
    n = len(baseline.accel) if duration is None else int(round(duration / dt))
    if n > len(baseline.accel):
        raise ValidationError("duration exceeds the baseline")
    if np.isscalar(segments):
        segments = [(0.0, float(segments))]
    q = noise_schedule(n, dt, segments)
    ss = np.random.SeedSequence(seed)
    s_imu, s_bias, s_gnss = ss.spawn(3)
    clean = baseline.imu[:n]
    noisy = clean + np.random.default_rng(s_imu).normal(size=clean.shape) * np.sqrt(q)
    bias = np.zeros((n + 1, 6))
    if initial_bias is not None:
        bias += np.asarray(initial_bias, dtype=float)
    if bias_walk > 0:
        steps = np.random.default_rng(s_bias).normal(0.0, math.sqrt(bias_walk), (n, 6))
        bias[1:] += np.cumsum(steps, axis=0)
    # the bias at the start of sample k corrupts that sample
    noisy = noisy + bias[:n]
    if truth == "mechanized":
        ref = integrate(baseline.truth.state(0), clean[:, :3], clean[:, 3:], dt, earth)
    elif truth == "analytic":
        ref = baseline.truth.slice(slice(0, n + 1))
    else:
        raise ValidationError(f"unknown truth model {truth!r}")
    gnss = simulate_gnss(ref, gnss_period, r_diag, int(s_gnss.generate_state(1)[0]), earth)
    return FilterScenario(baseline.name, ref, ref.time[:n].copy(), noisy[:, :3].copy(),
                          noisy[:, 3:].copy(), gnss, q, bias, dt)
