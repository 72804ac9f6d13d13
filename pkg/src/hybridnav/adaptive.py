"""Process-noise policies and the closed-loop INS/GNSS filter driver.

Three interchangeable policies choose the discrete process noise each IMU
step:

* ``Constant``: a fixed diagonal.
* ``InnovationWindow``: ``K C K^T`` from the last ``xi`` GNSS innovations.
* ``Learned``: six channel variances regressed from raw IMU windows every
  ``tuning_rate`` seconds.

Noise units
-----------
The diagonal values handed to a policy are per-sample variances of the IMU
channels (the quantity the regressor is trained on). With
``noise_model="sample"`` they are converted to a continuous density by
multiplying with the IMU period before discretization; ``"psd"`` uses them
as densities unchanged.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import eskf
from .errors import StreamGap, ValidationError, WindowNotFull
from .eskf import MeasurementModel, ProcessNoiseDiag
from .geodesy import WGS84
from .mechanization import NavState, integrate_step

CQ1 = ProcessNoiseDiag(0.002, 0.02)
CQ2 = ProcessNoiseDiag(0.001, 0.01)
CQ3 = ProcessNoiseDiag(0.002, 0.01)


@dataclass(frozen=True)
class Constant:
    q: ProcessNoiseDiag = CQ1


@dataclass(frozen=True)
class InnovationWindow:
    xi: int = 1
    seed: ProcessNoiseDiag = CQ1
    floor: float = 0.0

    def __post_init__(self):
        if int(self.xi) != self.xi or self.xi < 1:
            raise ValidationError("window length must be a positive integer")
        if self.floor < 0:
            raise ValidationError("floor must be non-negative")


@dataclass(frozen=True)
class Learned:
    model: object
    tuning_rate: float = 2.0
    clamp: tuple = (0.001, 0.025)
    seed: ProcessNoiseDiag = CQ1
    eps_bias: float = 0.001

    def __post_init__(self):
        if not self.tuning_rate > 0:
            raise ValidationError("tuning rate must be positive")
        if not 0 < self.clamp[0] <= self.clamp[1]:
            raise ValidationError("clamp must satisfy 0 < min <= max")

    @property
    def window_length(self):
        return self.model.arch.window_length


QPolicy = Union[Constant, InnovationWindow, Learned]

PRESETS = {
    "cq1": Constant(CQ1),
    "cq2": Constant(CQ2),
    "cq3": Constant(CQ3),
    "aq1": InnovationWindow(1),
    "aq3": InnovationWindow(3),
    "aq5": InnovationWindow(5),
}


class InnovationWindowState:
    """Ring buffer of the most recent ``xi`` innovations."""

    def __init__(self, xi):
        self.xi = int(xi)
        self.buffer = deque(maxlen=self.xi)

    def push(self, nu):
        self.buffer.append(np.asarray(nu, dtype=float).copy())

    @property
    def full(self):
        return len(self.buffer) == self.xi

    def __len__(self):
        return len(self.buffer)


def innovation_matrix(window):
    """Average outer product of the buffered innovations."""
    if not window.full:
        raise WindowNotFull(f"{len(window)} of {window.xi} innovations available")
    v = np.array(window.buffer)
    return v.T @ v / window.xi


def adapt_q(K, C):
    """``K C K^T``, symmetrized."""
    q = K @ C @ K.T
    return 0.5 * (q + q.T)


@dataclass
class QContext:
    """What a policy may look at when choosing the next discrete noise."""

    G: np.ndarray
    dt: float
    noise_scale: float = 1.0
    window: InnovationWindowState | None = None
    gain: np.ndarray | None = None
    gnss_period: float | None = None
    learned_q: ProcessNoiseDiag | None = None
    eps_bias: float | None = None


def _eq_noise(q, ctx):
    diag = q.diag()
    if ctx.eps_bias is not None:
        diag[6:] = ctx.eps_bias
    return eskf.process_noise(ctx.G, diag * ctx.noise_scale, ctx.dt)


def next_qd(policy, ctx):
    """Discrete process noise for the coming prediction step.

    The innovation-window estimate is held unchanged between GNSS updates;
    if ``ctx.gnss_period`` is set it is instead spread over the IMU steps of
    one GNSS interval (scaled by ``dt / gnss_period``).
    """
    if isinstance(policy, Constant):
        return _eq_noise(policy.q, ctx)
    if isinstance(policy, InnovationWindow):
        if ctx.window is None or ctx.gain is None or not ctx.window.full:
            return _eq_noise(policy.seed, ctx)
        q = adapt_q(ctx.gain, innovation_matrix(ctx.window))
        if ctx.gnss_period:
            q = q * (ctx.dt / ctx.gnss_period)
        if policy.floor:
            q = q + policy.floor * np.eye(q.shape[0])
        return q
    if isinstance(policy, Learned):
        return _eq_noise(ctx.learned_q if ctx.learned_q is not None else policy.seed, ctx)
    raise ValidationError(f"unknown policy {policy!r}")


@dataclass
class FilterConfig:
    dt: float = 0.01
    gnss_period: float = 0.2
    duration: float | None = None
    r_diag: tuple = (0.01, 0.01, 0.02)
    p0_sigma: tuple = eskf.DEFAULT_P0_SIGMA
    transition_order: int = 2
    noise_model: str = "sample"
    joseph: bool = False
    trace_ceiling: float = 1e12
    eps_bias: float | None = None
    max_correction: float = 0.1
    spread_adaptive: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and self.gnss_period > 0):
            raise ValidationError("periods must be positive")
        ratio = self.gnss_period / self.dt
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValidationError("GNSS period must be a multiple of the IMU period")
        if self.eps_bias is not None and not self.eps_bias > 0:
            raise ValidationError("eps_bias must be positive")
        if self.noise_model not in ("sample", "psd"):
            raise ValidationError("noise_model must be 'sample' or 'psd'")

    @property
    def noise_scale(self):
        return self.dt if self.noise_model == "sample" else 1.0


@dataclass
class FilterResult:
    """Output of :func:`run_filter`.

    ``pos``/``vel``/``dcm`` hold the closed-loop navigation solution at every
    IMU epoch (including the initial one). ``innovations`` rows are
    ``(time, nu_N, nu_E, nu_D)``; ``q_history`` rows ``(time, q1..q6)``.
    """

    time: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    dcm: np.ndarray
    p_trace: np.ndarray
    innovations: np.ndarray
    q_history: np.ndarray
    bias: np.ndarray
    nees: np.ndarray = field(default_factory=lambda: np.empty(0))
    psd_ok: bool = True
    pos_error: np.ndarray | None = None

    @property
    def regressions(self):
        return len(self.q_history)


def _check_cadence(time, dt):
    if len(time) < 2:
        return
    d = np.diff(time)
    bad = np.flatnonzero(np.abs(d - dt) > 1e-6 * max(dt, 1.0))
    if bad.size:
        k = bad[0]
        raise StreamGap(f"IMU step {d[k]:.6g} s at t={time[k]:.6g} (expected {dt})")


def run_filter(imu_time, accel, gyro, gnss, policy, config, initial, truth=None,
               truth_bias=None, earth=WGS84):
    """Closed-loop error-state filter over a recorded or simulated stream.

    Parameters
    ----------
    imu_time : ndarray, shape (K,)
        Sample times; sample ``k`` drives the step from ``t_k`` to ``t_k + dt``.
    accel, gyro : ndarray, shape (K, 3)
        Raw IMU readings.
    gnss : sequence of GnssFix
        Fixes, each consumed at the IMU epoch closest to its time.
    policy : QPolicy
    config : FilterConfig
    initial : NavState
        Initial navigation estimate at ``imu_time[0]``.
    truth : Trajectory, optional
        ``K + 1`` true states; enables position errors and NEES.
    truth_bias : ndarray, shape (K + 1, 6), optional
        True accelerometer and gyro biases for NEES.

    Returns
    -------
    FilterResult
    """
    imu_time = np.asarray(imu_time, dtype=float)
    accel = np.asarray(accel, dtype=float)
    gyro = np.asarray(gyro, dtype=float)
    dt = config.dt
    _check_cadence(imu_time, dt)
    n = len(imu_time)
    if config.duration is not None:
        n = min(n, int(round(config.duration / dt)))
    meas = MeasurementModel.gnss(config.r_diag)

    t0 = imu_time[0] if n else initial.time
    nav = initial.copy()
    nav.time = float(t0)
    state = eskf.initial_state(config.p0_sigma, nav.time)

    fixes = sorted(gnss, key=lambda f: f.time)
    fix_steps = {}
    for fx in fixes:
        k = int(round((fx.time - t0) / dt))
        if 1 <= k <= n and abs(t0 + k * dt - fx.time) <= 0.5 * dt:
            fix_steps[k] = fx

    ctx = QContext(G=None, dt=dt, noise_scale=config.noise_scale,
                   gnss_period=config.gnss_period if config.spread_adaptive else None,
                   eps_bias=config.eps_bias)
    if isinstance(policy, InnovationWindow):
        ctx.window = InnovationWindowState(policy.xi)
    tune_steps = None
    raw = None
    if isinstance(policy, Learned):
        steps = policy.tuning_rate / dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValidationError("tuning rate must be a multiple of the IMU period")
        tune_steps = int(round(steps))
        raw = np.hstack([accel[:n], gyro[:n]])

    pos = np.empty((n + 1, 3))
    vel = np.empty((n + 1, 3))
    dcm = np.empty((n + 1, 3, 3))
    p_trace = np.empty(n + 1)
    bias = np.empty((n + 1, 6))
    innovations, q_hist, nees_log = [], [], []
    psd_ok = True

    def store(k):
        pos[k] = nav.pos.as_array()
        vel[k] = nav.vel
        dcm[k] = nav.dcm
        p_trace[k] = np.trace(state.P)
        bias[k, :3] = state.accel_bias
        bias[k, 3:] = state.gyro_bias

    store(0)
    for k in range(n):
        f_b, w_b = state.correct_imu(accel[k], gyro[k])
        F = eskf.build_F(nav, f_b, earth)
        ctx.G = eskf.build_G(nav)
        qd = next_qd(policy, ctx)
        phi = eskf.discretize(F, ctx.G, np.ones(12), dt, config.transition_order)[0]
        nav = integrate_step(nav, (f_b, w_b), dt, earth)
        state = eskf.predict(state, phi, qd, config.trace_ceiling)
        state.time = nav.time

        fx = fix_steps.get(k + 1)
        if fx is not None:
            # residual is truth-minus-estimate; the error state is estimate-minus-truth
            z = -eskf.gnss_residual(nav, fx, dt, earth)
            state, gain, nu = eskf.update(state, meas, z, config.joseph)
            innovations.append((nav.time, *nu))
            if ctx.window is not None:
                ctx.window.push(nu)
                ctx.gain = gain
            if truth is not None:
                nees_log.append(_nees(nav, state, truth.state(k + 1), truth_bias, k + 1, earth))
                psd_ok = psd_ok and eskf.is_symmetric_psd(state.P)
            nav, state = eskf.inject_and_reset(nav, state, earth, config.max_correction)

        if tune_steps is not None and (k + 1) % tune_steps == 0:
            width = policy.window_length
            if k + 1 >= width:
                ctx.learned_q = _regress(policy, raw[k + 1 - width:k + 1].T)
                q_hist.append((nav.time, *ctx.learned_q.q_f, *ctx.learned_q.q_w))
        store(k + 1)

    time = t0 + dt * np.arange(n + 1)
    result = FilterResult(time, pos, vel, dcm, p_trace,
                          np.array(innovations).reshape(-1, 4),
                          np.array(q_hist).reshape(-1, 7), bias,
                          np.array(nees_log), psd_ok)
    if truth is not None:
        result.pos_error = position_errors(result, truth, earth)
    return result


def _regress(policy, windows):
    from .neuralq import predict_qc
    return predict_qc(policy.model, windows, policy.clamp, policy.eps_bias)


def _nees(nav, state, true_nav, truth_bias, k, earth):
    err = np.zeros(15)
    err[:9] = eskf.navigation_error(nav, true_nav, earth)
    tb = np.zeros(6) if truth_bias is None else truth_bias[k]
    err[9:12] = state.accel_bias - tb[:3]
    err[12:15] = state.gyro_bias - tb[3:]
    return eskf.nees(err - state.dx, state.P)


def position_errors(result, truth, earth=WGS84):
    """NED position error (estimate minus truth) at every stored epoch."""
    m = min(len(result.time), len(truth.time))
    est = result.pos[:m]
    ref = truth.pos[:m]
    lat = ref[:, 0]
    a, e2 = earth.semi_major_axis, earth.eccentricity_sq
    den = 1.0 - e2 * np.sin(lat) ** 2
    r_n = a / np.sqrt(den)
    r_m = a * (1.0 - e2) / den ** 1.5
    dlon = np.remainder(est[:, 1] - ref[:, 1] + math.pi, 2 * math.pi) - math.pi
    return np.column_stack([
        (est[:, 0] - ref[:, 0]) * (r_m + ref[:, 2]),
        dlon * (r_n + ref[:, 2]) * np.cos(lat),
        -(est[:, 2] - ref[:, 2]),
    ])


def initial_from_truth(truth, k=0):
    return truth.state(k)


def write_diagnostics(path, result, truth=None):
    """CSV with estimate, truth, per-axis error, trace(P) and the latest q values."""
    import csv
    q = np.full((len(result.time), 6), np.nan)
    if len(result.q_history):
        idx = np.searchsorted(result.q_history[:, 0], result.time + 1e-9, side="right") - 1
        have = idx >= 0
        q[have] = result.q_history[idx[have], 1:]
    err = result.pos_error if result.pos_error is not None else np.full((len(result.time), 3),
                                                                        np.nan)
    tpos = truth.pos[:len(result.time)] if truth is not None else np.full_like(result.pos,
                                                                               np.nan)
    header = ["time", "lat", "lon", "alt", "true_lat", "true_lon", "true_alt",
              "err_n", "err_e", "err_d", "trace_p"] + [f"q{i}" for i in range(1, 7)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(result.time)):
            row = [result.time[i], *result.pos[i], *tpos[i], *err[i], result.p_trace[i], *q[i]]
            w.writerow([repr(float(v)) for v in row])
