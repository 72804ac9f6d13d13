"""15-state error-state Kalman filter for loosely coupled INS/GNSS.

Error state layout (all estimate-minus-truth)::

    0:3   dp    position error, local NED meters
    3:6   dv    velocity error, NED m/s
    6:9   eps   misalignment, nav frame rad; T_true ~= (I + [eps x]) T_est
    9:12  b_a   accelerometer bias estimate error, body m/s^2
    12:15 b_g   gyro bias estimate error, body rad/s

With this convention the continuous model reproduces the standard block
placements: ``-T_b^n`` on the accelerometer-bias column of the velocity
rows, ``+T_b^n`` on the gyro-bias column of the misalignment rows, and the
noise shaping matrix carries ``+T_b^n`` / ``-T_b^n`` for accelerometer and
gyro white noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CovarianceBlowup,
    LargeErrorState,
    SingularInnovation,
    TimeMisalignment,
    ValidationError,
)
from .geodesy import (
    WGS84,
    Attitude,
    GeoPosition,
    earth_rates,
    geodetic_to_ned,
    offset_position,
    orthonormalize,
    principal_radii,
    skew,
    vee,
)
from .mechanization import NavState

N_STATES = 15
N_NOISE = 12
POS, VEL, ATT, BA, BG = (slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12), slice(12, 15))
I3 = np.eye(3)


@dataclass
class ProcessNoiseDiag:
    """Diagonal of the continuous process noise.

    ``q_f`` and ``q_w`` are the accelerometer and gyro variances (one per
    axis), ``eps_bias`` the shared bias random-walk variance.
    """

    q_f: np.ndarray
    q_w: np.ndarray
    eps_bias: float = 0.001

    def __post_init__(self):
        self.q_f = np.broadcast_to(np.asarray(self.q_f, dtype=float), (3,)).copy()
        self.q_w = np.broadcast_to(np.asarray(self.q_w, dtype=float), (3,)).copy()
        self.eps_bias = float(self.eps_bias)
        if (self.q_f <= 0).any() or (self.q_w <= 0).any() or self.eps_bias <= 0:
            raise ValidationError("process noise entries must be positive")

    @classmethod
    def from_channels(cls, q6, eps_bias=0.001):
        q6 = np.asarray(q6, dtype=float)
        return cls(q6[:3], q6[3:6], eps_bias)

    def diag(self):
        """The 12 diagonal entries in ``[w_a, w_g, w_ab, w_gb]`` order."""
        return np.concatenate([self.q_f, self.q_w, np.full(6, self.eps_bias)])


@dataclass
class MeasurementModel:
    H: np.ndarray
    R: np.ndarray

    @classmethod
    def gnss(cls, r_diag=(0.01, 0.01, 0.02)):
        r = np.asarray(r_diag, dtype=float)
        if r.shape != (3,) or (r <= 0).any():
            raise ValidationError("R diagonal must be three positive values")
        h = np.zeros((3, N_STATES))
        h[:, POS] = I3
        return cls(h, np.diag(r))


@dataclass
class ErrorFilterState:
    """Error estimate, covariance and the accumulated IMU bias estimates."""

    dx: np.ndarray
    P: np.ndarray
    time: float = 0.0
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self):
        return ErrorFilterState(self.dx.copy(), self.P.copy(), self.time,
                                self.accel_bias.copy(), self.gyro_bias.copy())

    def correct_imu(self, accel, gyro):
        """Remove the current bias estimates from a raw IMU sample."""
        return np.asarray(accel) - self.accel_bias, np.asarray(gyro) - self.gyro_bias


DEFAULT_P0_SIGMA = (1.0, 0.1, 1e-3, 1e-2, 1e-3)


def initial_covariance(sigmas=DEFAULT_P0_SIGMA):
    """Block-diagonal covariance from per-block standard deviations.

    ``sigmas`` is ``(pos m, vel m/s, att rad, accel bias, gyro bias)``.
    """
    return np.diag(np.repeat(np.square(np.asarray(sigmas, dtype=float)), 3))


def initial_state(sigmas=DEFAULT_P0_SIGMA, time=0.0):
    return ErrorFilterState(np.zeros(N_STATES), initial_covariance(sigmas), time)


def build_F(nav, f_b, earth=WGS84):
    """Continuous error-dynamics matrix at the current navigation estimate.

    Parameters
    ----------
    nav : NavState
    f_b : array_like, shape (3,)
        Bias-corrected specific force in the body frame.
    """
    lat, h = nav.pos.lat, nav.pos.alt
    rates = earth_rates(nav.pos, nav.vel, earth)  # raises at the poles
    r_m, r_n = principal_radii(lat, earth)
    rmh, rnh = r_m + h, r_n + h
    vn, ve, vd = nav.vel
    tl = math.tan(lat)
    sl, cl = math.sin(lat), math.cos(lat)
    t = nav.dcm
    om = earth.earth_rate
    f_n = t @ np.asarray(f_b, dtype=float)

    # partials of the frame rates w.r.t. position (NED meters) and velocity
    dwie_dp = np.zeros((3, 3))
    dwie_dp[:, 0] = np.array([-om * sl, 0.0, -om * cl]) / rmh
    dwen_dp = np.zeros((3, 3))
    dwen_dp[2, 0] = -ve / (cl * cl * rnh * rmh)
    dwen_dp[:, 2] = [ve / rnh ** 2, -vn / rmh ** 2, -ve * tl / rnh ** 2]
    dwen_dv = np.array([[0.0, 1.0 / rnh, 0.0],
                        [-1.0 / rmh, 0.0, 0.0],
                        [0.0, -tl / rnh, 0.0]])
    v_x = skew(nav.vel)

    f = np.zeros((N_STATES, N_STATES))
    f[0, 0] = -vd / rmh
    f[0, 2] = vn / rmh
    f[1, 0] = ve * tl / rmh
    f[1, 1] = -(vd / rnh + vn * tl / rmh)
    f[1, 2] = ve / rnh
    f[POS, VEL] = I3

    f[VEL, POS] = v_x @ (2.0 * dwie_dp + dwen_dp)
    f[5, 2] += earth.gravity_params[2]
    f[VEL, VEL] = -skew(2.0 * rates.w_ie + rates.w_en) + v_x @ dwen_dv
    f[VEL, ATT] = skew(f_n)
    f[VEL, BA] = -t

    f[ATT, POS] = dwie_dp + dwen_dp
    f[ATT, VEL] = dwen_dv
    f[ATT, ATT] = -skew(rates.w_in)
    f[ATT, BG] = t
    return f


def build_G(nav):
    """Noise shaping matrix mapping ``[w_a, w_g, w_ab, w_gb]`` into the error state."""
    t = nav.dcm
    g = np.zeros((N_STATES, N_NOISE))
    g[VEL, 0:3] = t
    g[ATT, 3:6] = -t
    g[BA, 6:9] = I3
    g[BG, 9:12] = I3
    return g


def _as_diag(qc):
    if isinstance(qc, ProcessNoiseDiag):
        return qc.diag()
    q = np.asarray(qc, dtype=float)
    if q.ndim == 2:
        q = np.diag(q)
    if q.shape != (N_NOISE,):
        raise ValidationError("continuous noise must have 12 diagonal entries")
    return q


def discretize(F, G, qc, dt, order=2):
    """Transition matrix and discrete process noise.

    ``Phi`` is the truncated Taylor series of ``expm(F dt)`` to ``order``
    (``1`` gives ``I + F dt``); ``Qd = G diag(qc) G^T dt``, symmetrized.
    """
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if order not in (1, 2):
        raise ValidationError("transition order must be 1 or 2")
    fdt = F * dt
    phi = np.eye(F.shape[0]) + fdt
    if order == 2:
        phi += 0.5 * fdt @ fdt
    return phi, process_noise(G, qc, dt)


def process_noise(G, qc, dt):
    """``G diag(qc) G^T dt``, symmetrized."""
    qd = (G * _as_diag(qc)) @ G.T * dt
    return 0.5 * (qd + qd.T)


def predict(state, phi, qd, trace_ceiling=np.inf):
    """Propagate the covariance; the error estimate is reset to zero."""
    p = phi @ state.P @ phi.T + qd
    p = 0.5 * (p + p.T)
    tr = np.trace(p)
    if not tr <= trace_ceiling:
        raise CovarianceBlowup(f"trace(P)={tr:.3e} exceeds {trace_ceiling:.3e}")
    return ErrorFilterState(np.zeros(N_STATES), p, state.time,
                            state.accel_bias, state.gyro_bias)


def update(state, meas, residual, joseph=False):
    """Measurement update.

    Returns
    -------
    (ErrorFilterState, K, nu)
        Posterior state, the Kalman gain and the innovation.
    """
    h, r = meas.H, meas.R
    p = state.P
    residual = np.asarray(residual, dtype=float)
    nu = residual - h @ state.dx
    s = h @ p @ h.T + r
    s = 0.5 * (s + s.T)
    try:
        cond = np.linalg.cond(s)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularInnovation(f"innovation covariance condition number {cond:.3e}")
    k = np.linalg.solve(s, h @ p).T
    dx = state.dx + k @ nu
    ikh = np.eye(N_STATES) - k @ h
    if joseph:
        p_new = ikh @ p @ ikh.T + k @ r @ k.T
    else:
        p_new = ikh @ p
    p_new = 0.5 * (p_new + p_new.T)
    return (ErrorFilterState(dx, p_new, state.time, state.accel_bias, state.gyro_bias),
            k, nu)


def inject_and_reset(nav, state, earth=WGS84, max_angle=0.1):
    """Fold the error estimate into the navigation solution and zero it.

    Position and velocity errors are subtracted, the attitude is rotated by
    ``(I + [eps x])`` and re-orthonormalized, and bias errors are removed from
    the persistent bias estimates. ``P`` is left untouched.
    """
    dx = state.dx
    eps = dx[ATT]
    if np.linalg.norm(eps) >= max_angle:
        raise LargeErrorState(f"|eps| = {np.linalg.norm(eps):.3f} rad")
    p = nav.pos
    r_m, r_n = principal_radii(p.lat, earth)
    dp = dx[POS]
    pos = GeoPosition(p.lat - dp[0] / (r_m + p.alt),
                      p.lon - dp[1] / ((r_n + p.alt) * math.cos(p.lat)),
                      p.alt + dp[2])
    vel = nav.vel - dx[VEL]
    dcm = orthonormalize((I3 + skew(eps)) @ nav.dcm)
    new_nav = NavState(pos, vel, Attitude(dcm), nav.time)
    new_state = ErrorFilterState(np.zeros(N_STATES), state.P, state.time,
                                 state.accel_bias - dx[BA], state.gyro_bias - dx[BG])
    return new_nav, new_state


def gnss_residual(nav, fix, dt=None, earth=WGS84):
    """Fix minus navigation position in local NED meters.

    If ``dt`` is given, the fix must lie within ``dt/2`` of ``nav.time``.
    """
    if dt is not None and abs(fix.time - nav.time) > 0.5 * dt:
        raise TimeMisalignment(f"fix at {fix.time} vs navigation epoch {nav.time}")
    return geodetic_to_ned(fix.pos, nav.pos, earth)


def navigation_error(est, truth, earth=WGS84):
    """First nine error-state components of ``est`` relative to ``truth``."""
    dp = geodetic_to_ned(est.pos, truth.pos, earth)
    dv = est.vel - truth.vel
    eps = vee(truth.dcm @ est.dcm.T)
    return np.concatenate([dp, dv, eps])


def perturb(truth, err, earth=WGS84):
    """Navigation estimate whose first nine error components w.r.t. ``truth`` are ``err``."""
    err = np.asarray(err, dtype=float)
    pos = offset_position(truth.pos, err[POS], earth)
    dcm = orthonormalize((I3 - skew(err[ATT])) @ truth.dcm)
    return NavState(pos, truth.vel + err[VEL], Attitude(dcm), truth.time)


def nees(err, P):
    """Normalized estimation error squared ``err^T P^-1 err``."""
    err = np.asarray(err, dtype=float)
    return float(err @ np.linalg.solve(P, err))


def is_symmetric_psd(P, tol=1e-9):
    """Symmetry within ``tol`` relative and eigenvalues above ``-tol * trace``."""
    scale = max(np.abs(P).max(), 1e-300)
    if np.abs(P - P.T).max() > tol * scale:
        return False
    return np.linalg.eigvalsh(0.5 * (P + P.T)).min() >= -tol * np.trace(P)


def snapshot_row(state):
    """Flat row for CSV debugging: time, dx (15), diag(P) (15), biases (6)."""
    return np.concatenate([[state.time], state.dx, np.diag(state.P),
                           state.accel_bias, state.gyro_bias])
