"""Strapdown inertial navigation in the local-level NED frame.

The continuous equations of motion are exposed as ``*_rate`` functions; the
discrete integrator is a forward-Euler step followed by a symmetric
re-orthonormalization of the attitude matrix, delegated to the compiled
kernel when available.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import NonFinite, PoleSingularity, ValidationError
from .geodesy import (
    WGS84,
    Attitude,
    GeoPosition,
    POLE_TOL,
    earth_rates,
    gravity_n,
    principal_radii,
    skew,
)


@dataclass
class NavState:
    """Full navigation solution at one epoch."""

    pos: GeoPosition
    vel: np.ndarray
    att: Attitude = field(default_factory=Attitude)
    time: float = 0.0

    def __post_init__(self):
        self.vel = np.asarray(self.vel, dtype=float).reshape(3)
        if not isinstance(self.att, Attitude):
            self.att = Attitude(self.att)

    @property
    def dcm(self):
        return self.att.dcm

    def copy(self):
        return NavState(GeoPosition(self.pos.lat, self.pos.lon, self.pos.alt),
                        self.vel.copy(), Attitude(self.att.dcm.copy()), self.time)


@dataclass(frozen=True)
class ImuSample:
    time: float
    accel: np.ndarray
    gyro: np.ndarray


def _check_pole(lat):
    if abs(lat) > math.pi / 2 - POLE_TOL:
        raise PoleSingularity(f"latitude {lat} too close to a pole")


def position_rate(state, earth=WGS84):
    """Time derivative of ``(lat, lon, alt)``."""
    lat, h = state.pos.lat, state.pos.alt
    _check_pole(lat)
    r_m, r_n = principal_radii(lat, earth)
    vn, ve, vd = state.vel
    return np.array([vn / (r_m + h), ve / (math.cos(lat) * (r_n + h)), -vd])


def velocity_rate(state, f_b, earth=WGS84):
    """NED velocity derivative for specific force ``f_b`` (body frame)."""
    rates = earth_rates(state.pos, state.vel, earth)
    coriolis = skew(rates.w_en + 2.0 * rates.w_ie) @ state.vel
    return state.dcm @ np.asarray(f_b, dtype=float) + gravity_n(state.pos, earth) - coriolis


def attitude_rate(state, w_ib_b, earth=WGS84):
    """Derivative of the body-to-nav matrix for gyro rate ``w_ib_b``."""
    t = state.dcm
    w_in_b = t.T @ earth_rates(state.pos, state.vel, earth).w_in
    return t @ (skew(np.asarray(w_ib_b, dtype=float)) - skew(w_in_b))


def _earth_args(earth):
    g_e, k, grad = earth.gravity_params
    return (earth.semi_major_axis, earth.eccentricity_sq, earth.earth_rate, g_e, k, grad)


def integrate_step(state, imu, dt, earth=WGS84):
    """Advance ``state`` by ``dt`` using one IMU sample.

    Parameters
    ----------
    state : NavState
    imu : ImuSample or tuple of (accel, gyro)
    dt : float
        Step in seconds; must be positive.

    Returns
    -------
    NavState
        A new state; the input is not modified.
    """
    if not dt > 0:
        raise ValidationError("dt must be positive")
    accel, gyro = (imu.accel, imu.gyro) if isinstance(imu, ImuSample) else imu
    p = state.pos
    _check_pole(p.lat)
    lat, lon, alt, vel, dcm = kernels.strapdown_step(
        p.lat, p.lon, p.alt, state.vel, state.dcm, accel, gyro, dt, *_earth_args(earth))
    if not (math.isfinite(lat) and math.isfinite(lon) and math.isfinite(alt)
            and np.isfinite(vel).all() and np.isfinite(dcm).all()):
        raise NonFinite(f"state diverged at t={state.time + dt}")
    return NavState(GeoPosition(lat, lon, alt), vel, Attitude(dcm), state.time + dt)


@dataclass
class Trajectory:
    """Sampled navigation states stored column-wise.

    ``pos`` is ``(K, 3)`` geodetic ``(lat, lon, alt)``, ``vel`` ``(K, 3)`` NED,
    ``dcm`` ``(K, 3, 3)`` and ``time`` ``(K,)``.
    """

    time: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    dcm: np.ndarray

    def __len__(self):
        return len(self.time)

    def state(self, k):
        p = self.pos[k]
        return NavState(GeoPosition(p[0], p[1], p[2]), self.vel[k].copy(),
                        Attitude(self.dcm[k].copy()), float(self.time[k]))

    def euler(self):
        """``(K, 3)`` roll, pitch, yaw."""
        from .geodesy import dcm_to_euler
        return np.array([dcm_to_euler(c) for c in self.dcm])

    def slice(self, sl):
        return replace(self, time=self.time[sl], pos=self.pos[sl], vel=self.vel[sl],
                       dcm=self.dcm[sl])


def integrate(initial, accel, gyro, dt, earth=WGS84):
    """Mechanize a whole IMU stream.

    Parameters
    ----------
    initial : NavState
    accel, gyro : ndarray, shape (K, 3)
        Body-frame specific force and angular rate, one row per step.
    dt : float

    Returns
    -------
    Trajectory
        ``K + 1`` states including the initial one.
    """
    accel = np.asarray(accel, dtype=float)
    gyro = np.asarray(gyro, dtype=float)
    if accel.shape != gyro.shape or accel.ndim != 2 or accel.shape[1] != 3:
        raise ValidationError("accel and gyro must both be (K, 3)")
    p = initial.pos
    pos, vel, dcm = kernels.strapdown_run(p.lat, p.lon, p.alt, initial.vel, initial.dcm,
                                          accel, gyro, dt, *_earth_args(earth))
    if not np.isfinite(pos).all():
        raise NonFinite("trajectory diverged")
    if np.abs(pos[:, 0]).max() > math.pi / 2 - POLE_TOL:
        raise PoleSingularity("trajectory reached a pole")
    time = initial.time + dt * np.arange(len(pos))
    return Trajectory(time, pos, vel, dcm)
