"""Pure-Python reference kernels.

Same signatures and arithmetic as the compiled ``_ckernels`` extension; used
when the extension is unavailable or ``HYBRIDNAV_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def strapdown_step(lat, lon, alt, vel, dcm, f, w, dt, a, e2, omega, g_e, k_som, grad):
    """One forward-Euler strapdown step in the local-level NED frame.

    Returns ``(lat, lon, alt, vel, dcm)`` with ``dcm`` re-orthonormalized.
    """
    vn, ve, vd = float(vel[0]), float(vel[1]), float(vel[2])
    slat, clat = math.sin(lat), math.cos(lat)
    den = 1.0 - e2 * slat * slat
    r_n = a / math.sqrt(den)
    r_m = a * (1.0 - e2) / (den * math.sqrt(den))
    rmh, rnh = r_m + alt, r_n + alt
    g = g_e * (1.0 + k_som * slat * slat) / math.sqrt(den) - grad * alt

    # w_ie, w_en, w_in in NED
    wie_n, wie_d = omega * clat, -omega * slat
    wen_n, wen_e, wen_d = ve / rnh, -vn / rmh, -ve * slat / clat / rnh
    win_n, win_e, win_d = wie_n + wen_n, wen_e, wie_d + wen_d
    # 2 w_ie + w_en
    cn, ce, cd = 2.0 * wie_n + wen_n, wen_e, 2.0 * wie_d + wen_d

    c = dcm
    c00, c01, c02 = float(c[0, 0]), float(c[0, 1]), float(c[0, 2])
    c10, c11, c12 = float(c[1, 0]), float(c[1, 1]), float(c[1, 2])
    c20, c21, c22 = float(c[2, 0]), float(c[2, 1]), float(c[2, 2])
    fx, fy, fz = float(f[0]), float(f[1]), float(f[2])
    wx, wy, wz = float(w[0]), float(w[1]), float(w[2])

    fn = c00 * fx + c01 * fy + c02 * fz
    fe = c10 * fx + c11 * fy + c12 * fz
    fd = c20 * fx + c21 * fy + c22 * fz
    # v_dot = T f + g - (2 w_ie + w_en) x v
    an = fn - (ce * vd - cd * ve)
    ae = fe - (cd * vn - cn * vd)
    ad = fd + g - (cn * ve - ce * vn)

    # T_dot = T [w_ib x] - [w_in x] T
    d = np.empty((3, 3))
    rows = ((c00, c01, c02), (c10, c11, c12), (c20, c21, c22))
    for i in range(3):
        r0, r1, r2 = rows[i]
        d[i, 0] = r1 * wz - r2 * wy
        d[i, 1] = r2 * wx - r0 * wz
        d[i, 2] = r0 * wy - r1 * wx
    for j in range(3):
        x0, x1, x2 = rows[0][j], rows[1][j], rows[2][j]
        d[0, j] -= win_e * x2 - win_d * x1
        d[1, j] -= win_d * x0 - win_n * x2
        d[2, j] -= win_n * x1 - win_e * x0

    new_lat = lat + dt * vn / rmh
    new_lon = lon + dt * ve / (clat * rnh)
    new_alt = alt - dt * vd
    new_vel = np.array([vn + dt * an, ve + dt * ae, vd + dt * ad])
    t = np.array(c, dtype=float) + dt * d
    # two symmetric passes: one leaves O(|w dt|^4) residue
    for _ in range(2):
        t = 0.5 * t @ (3.0 * np.eye(3) - t.T @ t)
    new_lon = math.remainder(new_lon, 2.0 * math.pi)
    if new_lon == -math.pi:
        new_lon = math.pi
    return new_lat, new_lon, new_alt, new_vel, t


def strapdown_run(lat, lon, alt, vel, dcm, accel, gyro, dt, a, e2, omega, g_e, k_som, grad):
    """Integrate a whole IMU stream; returns ``(pos[K+1,3], vel[K+1,3], dcm[K+1,3,3])``."""
    n = accel.shape[0]
    pos_out = np.empty((n + 1, 3))
    vel_out = np.empty((n + 1, 3))
    dcm_out = np.empty((n + 1, 3, 3))
    v = np.array(vel, dtype=float)
    c = np.array(dcm, dtype=float)
    pos_out[0] = (lat, lon, alt)
    vel_out[0] = v
    dcm_out[0] = c
    for i in range(n):
        lat, lon, alt, v, c = strapdown_step(lat, lon, alt, v, c, accel[i], gyro[i], dt,
                                             a, e2, omega, g_e, k_som, grad)
        pos_out[i + 1] = (lat, lon, alt)
        vel_out[i + 1] = v
        dcm_out[i + 1] = c
    return pos_out, vel_out, dcm_out


def conv1d_forward(x, w, b):
    """Valid, stride-1 cross-correlation.

    x: (B, Cin, L), w: (Cout, Cin, K), b: (Cout,) -> (B, Cout, L-K+1)
    """
    cout, cin, k = w.shape
    win = sliding_window_view(x, k, axis=2)  # B, Cin, Lo, K
    bsz, _, lo, _ = win.shape
    cols = win.transpose(0, 2, 1, 3).reshape(bsz, lo, cin * k)
    y = cols @ w.reshape(cout, cin * k).T  # B, Lo, Cout
    return np.ascontiguousarray(y.transpose(0, 2, 1)) + b[None, :, None]


def conv1d_backward(x, w, dy):
    """Gradients of :func:`conv1d_forward` w.r.t. input, weights and bias."""
    cout, cin, k = w.shape
    bsz, _, lo = dy.shape
    win = sliding_window_view(x, k, axis=2)
    cols = win.transpose(0, 2, 1, 3).reshape(bsz * lo, cin * k)
    dy_flat = dy.transpose(0, 2, 1).reshape(bsz * lo, cout)
    dw = (dy_flat.T @ cols).reshape(cout, cin, k)
    db = dy.sum(axis=(0, 2))
    dcols = (dy_flat @ w.reshape(cout, cin * k)).reshape(bsz, lo, cin, k)
    dx = np.zeros_like(x)
    for j in range(k):
        dx[:, :, j:j + lo] += dcols[:, :, :, j].transpose(0, 2, 1)
    return dx, dw, db
