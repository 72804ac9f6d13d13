# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; mirror ``_pykernels`` signature for signature."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, remainder, M_PI

cnp.import_array()


cdef inline void _step(double* lat, double* lon, double* alt, double* v, double* c,
                       const double* f, const double* w, double dt,
                       double a, double e2, double omega, double g_e, double k_som,
                       double grad) noexcept nogil:
    cdef double slat = sin(lat[0]), clat = cos(lat[0])
    cdef double den = 1.0 - e2 * slat * slat
    cdef double r_n = a / sqrt(den)
    cdef double r_m = a * (1.0 - e2) / (den * sqrt(den))
    cdef double rmh = r_m + alt[0], rnh = r_n + alt[0]
    cdef double g = g_e * (1.0 + k_som * slat * slat) / sqrt(den) - grad * alt[0]
    cdef double vn = v[0], ve = v[1], vd = v[2]
    cdef double wie_n = omega * clat, wie_d = -omega * slat
    cdef double wen_n = ve / rnh, wen_e = -vn / rmh, wen_d = -ve * slat / clat / rnh
    cdef double win_n = wie_n + wen_n, win_e = wen_e, win_d = wie_d + wen_d
    cdef double cn = 2.0 * wie_n + wen_n, ce = wen_e, cd = 2.0 * wie_d + wen_d
    cdef double fn = c[0] * f[0] + c[1] * f[1] + c[2] * f[2]
    cdef double fe = c[3] * f[0] + c[4] * f[1] + c[5] * f[2]
    cdef double fd = c[6] * f[0] + c[7] * f[1] + c[8] * f[2]
    cdef double an = fn - (ce * vd - cd * ve)
    cdef double ae = fe - (cd * vn - cn * vd)
    cdef double ad = fd + g - (cn * ve - ce * vn)
    cdef double d[9]
    cdef double t[9]
    cdef double m[9]
    cdef double r0, r1, r2, x0, x1, x2, s
    cdef int i, j, q, p
    for i in range(3):
        r0 = c[3 * i]; r1 = c[3 * i + 1]; r2 = c[3 * i + 2]
        d[3 * i] = r1 * w[2] - r2 * w[1]
        d[3 * i + 1] = r2 * w[0] - r0 * w[2]
        d[3 * i + 2] = r0 * w[1] - r1 * w[0]
    for j in range(3):
        x0 = c[j]; x1 = c[3 + j]; x2 = c[6 + j]
        d[j] -= win_e * x2 - win_d * x1
        d[3 + j] -= win_d * x0 - win_n * x2
        d[6 + j] -= win_n * x1 - win_e * x0
    lat[0] = lat[0] + dt * vn / rmh
    lon[0] = lon[0] + dt * ve / (clat * rnh)
    alt[0] = alt[0] - dt * vd
    v[0] = vn + dt * an
    v[1] = ve + dt * ae
    v[2] = vd + dt * ad
    for i in range(9):
        c[i] = c[i] + dt * d[i]
    # two symmetric passes c <- c (3I - c^T c) / 2
    for p in range(2):
        for i in range(9):
            t[i] = c[i]
        for i in range(3):
            for j in range(3):
                s = 0.0
                for q in range(3):
                    s += t[3 * q + i] * t[3 * q + j]
                m[3 * i + j] = (3.0 if i == j else 0.0) - s
        for i in range(3):
            for j in range(3):
                s = 0.0
                for q in range(3):
                    s += t[3 * i + q] * m[3 * q + j]
                c[3 * i + j] = 0.5 * s
    lon[0] = remainder(lon[0], 2.0 * M_PI)
    if lon[0] == -M_PI:
        lon[0] = M_PI


def strapdown_step(double lat, double lon, double alt, vel, dcm, f, w, double dt,
                   double a, double e2, double omega, double g_e, double k_som, double grad):
    cdef double[::1] v = np.array(vel, dtype=np.float64).ravel()
    cdef double[::1] c = np.array(dcm, dtype=np.float64).ravel()
    cdef double[::1] ff = np.ascontiguousarray(f, dtype=np.float64).ravel()
    cdef double[::1] ww = np.ascontiguousarray(w, dtype=np.float64).ravel()
    _step(&lat, &lon, &alt, &v[0], &c[0], &ff[0], &ww[0], dt, a, e2, omega, g_e, k_som, grad)
    return lat, lon, alt, np.asarray(v), np.asarray(c).reshape(3, 3)


def strapdown_run(double lat, double lon, double alt, vel, dcm, accel, gyro, double dt,
                  double a, double e2, double omega, double g_e, double k_som, double grad):
    cdef double[:, ::1] acc = np.ascontiguousarray(accel, dtype=np.float64)
    cdef double[:, ::1] gyr = np.ascontiguousarray(gyro, dtype=np.float64)
    cdef Py_ssize_t n = acc.shape[0], i, j
    pos_arr = np.empty((n + 1, 3))
    vel_arr = np.empty((n + 1, 3))
    dcm_arr = np.empty((n + 1, 9))
    cdef double[:, ::1] po = pos_arr
    cdef double[:, ::1] vo = vel_arr
    cdef double[:, ::1] co = dcm_arr
    cdef double v[3]
    cdef double c[9]
    cdef double[::1] v0 = np.array(vel, dtype=np.float64).ravel()
    cdef double[::1] c0 = np.array(dcm, dtype=np.float64).ravel()
    for j in range(3):
        v[j] = v0[j]
    for j in range(9):
        c[j] = c0[j]
    with nogil:
        po[0, 0] = lat; po[0, 1] = lon; po[0, 2] = alt
        for j in range(3):
            vo[0, j] = v[j]
        for j in range(9):
            co[0, j] = c[j]
        for i in range(n):
            _step(&lat, &lon, &alt, v, c, &acc[i, 0], &gyr[i, 0], dt,
                  a, e2, omega, g_e, k_som, grad)
            po[i + 1, 0] = lat; po[i + 1, 1] = lon; po[i + 1, 2] = alt
            for j in range(3):
                vo[i + 1, j] = v[j]
            for j in range(9):
                co[i + 1, j] = c[j]
    return pos_arr, vel_arr, dcm_arr.reshape(n + 1, 3, 3)


def conv1d_forward(x, w, b):
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t bsz = xv.shape[0], cin = xv.shape[1], length = xv.shape[2]
    cdef Py_ssize_t cout = wv.shape[0], k = wv.shape[2]
    cdef Py_ssize_t lo = length - k + 1
    out = np.empty((bsz, cout, lo))
    cdef double[:, :, ::1] y = out
    cdef Py_ssize_t n, o, i, t, j
    cdef double wij
    # innermost loop over the contiguous time axis
    with nogil:
        for n in range(bsz):
            for o in range(cout):
                for t in range(lo):
                    y[n, o, t] = bv[o]
                for i in range(cin):
                    for j in range(k):
                        wij = wv[o, i, j]
                        for t in range(lo):
                            y[n, o, t] += wij * xv[n, i, t + j]
    return out


def conv1d_backward(x, w, dy):
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :, ::1] g = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t bsz = xv.shape[0], cin = xv.shape[1], length = xv.shape[2]
    cdef Py_ssize_t cout = wv.shape[0], k = wv.shape[2]
    cdef Py_ssize_t lo = g.shape[2]
    dx_arr = np.zeros((bsz, cin, length))
    dw_arr = np.zeros((cout, cin, k))
    db_arr = np.zeros(cout)
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t n, o, i, t, j
    cdef double wij, s
    with nogil:
        for n in range(bsz):
            for o in range(cout):
                s = 0.0
                for t in range(lo):
                    s += g[n, o, t]
                db[o] += s
                for i in range(cin):
                    for j in range(k):
                        wij = wv[o, i, j]
                        s = 0.0
                        for t in range(lo):
                            s += g[n, o, t] * xv[n, i, t + j]
                            dx[n, i, t + j] += g[n, o, t] * wij
                        dw[o, i, j] += s
    return dx_arr, dw_arr, db_arr
