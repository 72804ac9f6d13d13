"""Earth model, geodetic positions and attitude helpers.

All angles are radians, all frames are North-East-Down (NED) with the body
frame x-forward, y-right, z-down. Attitude matrices map body vectors into the
navigation frame (``T_b^n``); Euler angles follow the ZYX (yaw, pitch, roll)
sequence.

Notes
-----
The commonly quoted index pattern for extracting roll and yaw from the
nav-to-body matrix (``atan2(T31, T32)`` / ``atan2(T13, T23)``) does not match
the ZYX sequence used everywhere else here, so :func:`dcm_to_euler` uses the
standard ZYX extraction and is validated by a round-trip against
:func:`euler_to_dcm`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GimbalLock, PoleSingularity, ValidationError

POLE_TOL = 1e-9


@dataclass(frozen=True)
class EarthModel:
    """Reference ellipsoid plus normal-gravity coefficients.

    ``gravity_params`` holds ``(g_equator, k_somigliana, free_air_gradient)``;
    normal gravity at the ellipsoid is Somigliana's closed form and altitude
    enters through a linear free-air term.
    """

    semi_major_axis: float = 6_378_137.0
    eccentricity_sq: float = 6.69437999014e-3
    earth_rate: float = 7.292115e-5
    gravity_params: tuple = (9.7803253359, 1.931852652458e-3, 3.086e-6)

    def __post_init__(self):
        if not self.semi_major_axis > 0:
            raise ValidationError("semi_major_axis must be positive")
        if not 0.0 <= self.eccentricity_sq < 1.0:
            raise ValidationError("eccentricity_sq must lie in [0, 1)")
        if self.earth_rate < 0:
            raise ValidationError("earth_rate must be non-negative")


WGS84 = EarthModel()


def wrap_angle(a):
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass
class GeoPosition:
    lat: float
    lon: float
    alt: float

    def __post_init__(self):
        self.lat = float(self.lat)
        self.lon = wrap_angle(float(self.lon))
        self.alt = float(self.alt)
        if abs(self.lat) > math.pi / 2:
            raise ValidationError(f"latitude {self.lat} outside [-pi/2, pi/2]")

    def as_array(self):
        return np.array([self.lat, self.lon, self.alt])

    @classmethod
    def from_degrees(cls, lat_deg, lon_deg, alt):
        return cls(math.radians(lat_deg), math.radians(lon_deg), alt)


@dataclass
class Attitude:
    """Body-to-navigation rotation matrix with Euler-angle views."""

    dcm: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        self.dcm = np.array(self.dcm, dtype=float).reshape(3, 3)

    @property
    def euler(self):
        return dcm_to_euler(self.dcm)

    @classmethod
    def from_euler(cls, roll, pitch, yaw):
        return cls(euler_to_dcm(roll, pitch, yaw))

    def is_orthonormal(self, tol=1e-9):
        d = self.dcm
        return (np.abs(d @ d.T - np.eye(3)).max() < tol
                and abs(np.linalg.det(d) - 1.0) < tol)


class EarthRates(NamedTuple):
    w_ie: np.ndarray
    w_en: np.ndarray

    @property
    def w_in(self):
        return self.w_ie + self.w_en


def skew(v):
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m):
    """Inverse of :func:`skew` applied to the antisymmetric part of ``m``."""
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def principal_radii(lat, earth=WGS84):
    """Meridian (``R_M``) and normal (``R_N``) radii of curvature in meters."""
    a, e2 = earth.semi_major_axis, earth.eccentricity_sq
    s2 = math.sin(lat) ** 2
    den = 1.0 - e2 * s2
    r_n = a / math.sqrt(den)
    r_m = a * (1.0 - e2) / den ** 1.5
    return r_m, r_n


def normal_gravity(lat, alt, earth=WGS84):
    """Magnitude of normal gravity (m/s^2, positive down)."""
    g_e, k, grad = earth.gravity_params
    s2 = math.sin(lat) ** 2
    g0 = g_e * (1.0 + k * s2) / math.sqrt(1.0 - earth.eccentricity_sq * s2)
    return g0 - grad * alt


def gravity_n(pos, earth=WGS84):
    """Gravity vector in NED, ``[0, 0, g]``."""
    return np.array([0.0, 0.0, normal_gravity(pos.lat, pos.alt, earth)])


def earth_rates(pos, vel, earth=WGS84):
    """Earth rotation and transport rate expressed in the navigation frame.

    Parameters
    ----------
    pos : GeoPosition
    vel : array_like, shape (3,)
        NED velocity in m/s.

    Returns
    -------
    EarthRates
        ``w_ie`` and ``w_en``; ``w_in`` is available as a property.
    """
    lat, h = pos.lat, pos.alt
    if abs(abs(lat) - math.pi / 2) < POLE_TOL:
        raise PoleSingularity(f"latitude {lat} too close to a pole")
    r_m, r_n = principal_radii(lat, earth)
    vn, ve, _ = vel
    om = earth.earth_rate
    w_ie = np.array([om * math.cos(lat), 0.0, -om * math.sin(lat)])
    w_en = np.array([ve / (r_n + h), -vn / (r_m + h), -ve * math.tan(lat) / (r_n + h)])
    return EarthRates(w_ie, w_en)


def euler_to_dcm(roll, pitch, yaw):
    """Body-to-NED rotation for ZYX Euler angles."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cp * cy, sr * sp * cy - cr * sy, cr * sp * cy + sr * sy],
        [cp * sy, sr * sp * sy + cr * cy, cr * sp * sy - sr * cy],
        [-sp, sr * cp, cr * cp],
    ])


def dcm_to_euler(dcm):
    """ZYX Euler angles ``(roll, pitch, yaw)`` from a body-to-NED matrix."""
    c = np.asarray(dcm)
    cos_pitch = math.hypot(c[0, 0], c[1, 0])
    if cos_pitch < 1e-9:
        raise GimbalLock("pitch at +-90 deg; roll and yaw are not separable")
    roll = math.atan2(c[2, 1], c[2, 2])
    pitch = math.atan2(-c[2, 0], cos_pitch)
    yaw = math.atan2(c[1, 0], c[0, 0])
    return np.array([roll, pitch, yaw])


def orthonormalize(dcm):
    """One symmetric correction step ``T (3I - T^T T) / 2``."""
    return 0.5 * dcm @ (3.0 * np.eye(3) - dcm.T @ dcm)


def ned_to_geodetic(dp, pos, earth=WGS84):
    """Geodetic increment ``(dlat, dlon, dalt)`` for a small NED offset in meters."""
    r_m, r_n = principal_radii(pos.lat, earth)
    return np.array([
        dp[0] / (r_m + pos.alt),
        dp[1] / ((r_n + pos.alt) * math.cos(pos.lat)),
        -dp[2],
    ])


def geodetic_to_ned(target, ref, earth=WGS84):
    """Local NED offset in meters of ``target`` relative to ``ref``.

    Linearized with the principal radii at ``ref``; accurate for the short
    baselines between a GNSS fix and the navigation solution.
    """
    r_m, r_n = principal_radii(ref.lat, earth)
    dlon = wrap_angle(target.lon - ref.lon)
    return np.array([
        (target.lat - ref.lat) * (r_m + ref.alt),
        dlon * (r_n + ref.alt) * math.cos(ref.lat),
        -(target.alt - ref.alt),
    ])


def offset_position(pos, dp, earth=WGS84):
    """Apply a NED offset (meters) to a geodetic position."""
    d = ned_to_geodetic(dp, pos, earth)
    return GeoPosition(pos.lat + d[0], pos.lon + d[1], pos.alt + d[2])
