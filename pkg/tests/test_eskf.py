import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from hybridnav import eskf
from hybridnav.errors import (
    CovarianceBlowup,
    LargeErrorState,
    SingularInnovation,
    TimeMisalignment,
    ValidationError,
)
from hybridnav.geodesy import (
    Attitude,
    GeoPosition,
    normal_gravity,
    offset_position,
    orthonormalize,
    principal_radii,
    skew,
)
from hybridnav.mechanization import NavState, attitude_rate, position_rate, velocity_rate
from hybridnav.scenario import GnssFix

SCALES = np.array([50.0] * 3 + [1e-3] * 3 + [1e-5] * 3 + [1e-4] * 3 + [1e-5] * 3)


def random_nav(rng):
    pos = GeoPosition(rng.uniform(-1.2, 1.2), rng.uniform(-3, 3), rng.uniform(0, 3000))
    att = Attitude.from_euler(*(rng.uniform(-0.5, 0.5, 3) * [1, 1, 6]))
    return NavState(pos, rng.normal(0, 60, 3), att)


def random_spd(rng, n=15):
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


def _advance(s, f, w, h):
    pr, vr, ar = position_rate(s), velocity_rate(s, f), attitude_rate(s, w)
    p = s.pos
    return NavState(GeoPosition(p.lat + h * pr[0], p.lon + h * pr[1], p.alt + h * pr[2]),
                    s.vel + h * vr, Attitude(s.dcm + h * ar))


def _error_rate(est, tru, f, w, fe, we, h=1e-2):
    up = eskf.navigation_error(_advance(est, fe, we, h), _advance(tru, f, w, h))
    down = eskf.navigation_error(_advance(est, fe, we, -h), _advance(tru, f, w, -h))
    return (up - down) / (2 * h)


def test_F_columns_match_finite_differences_of_nonlinear_model(rng):
    for _ in range(5):
        tru = random_nav(rng)
        f = rng.normal(0, 2, 3) + [0, 0, -9.8]
        w = rng.normal(0, 0.2, 3)
        base = _error_rate(tru, tru, f, w, f, w)
        for i in range(15):
            dx = np.zeros(15)
            dx[i] = SCALES[i]
            est = NavState(offset_position(tru.pos, dx[:3]), tru.vel + dx[3:6],
                           Attitude(orthonormalize((np.eye(3) - skew(dx[6:9])) @ tru.dcm)))
            fe, we = f - dx[9:12], w - dx[12:15]
            col = (_error_rate(est, tru, f, w, fe, we) - base) / SCALES[i]
            F = eskf.build_F(est, fe)
            rel = np.abs(col - F[:9, i]).max() / (np.abs(F[:9, i]).max() + 1e-12)
            # position columns drop radius-latitude derivative terms
            assert rel < (2e-2 if i < 3 else 2e-3), (i, rel)


def test_F_structure(rng):
    nav = random_nav(rng)
    F = eskf.build_F(nav, np.array([0.3, -0.1, -9.8]))
    assert np.array_equal(F[9:], np.zeros((6, 15)))
    assert np.array_equal(F[3:6, 9:12], -nav.dcm)
    assert np.array_equal(F[6:9, 12:15], nav.dcm)


def test_F_misalignment_coupling_level_hover():
    g = normal_gravity(0.0, 0.0)
    nav = NavState(GeoPosition(0, 0, 0), np.zeros(3))
    F = eskf.build_F(nav, np.array([0, 0, -g]))
    d = 1e-4
    dv = F[3:6, 6:9] @ np.array([d, 0, 0])
    # magnitude g*d on the east axis; the sign follows estimate-minus-truth errors
    assert np.allclose(np.abs(dv), [0, g * d, 0], rtol=1e-12, atol=1e-18)


def test_G_structure(rng):
    nav = NavState(GeoPosition(0.3, 0, 0), np.zeros(3))
    G = eskf.build_G(nav)
    assert np.array_equal(G[3:6, 0:3], np.eye(3))
    assert np.flatnonzero(np.abs(G[:, 6:9]).sum(axis=1)).tolist() == [9, 10, 11]
    for _ in range(10):
        G = eskf.build_G(random_nav(rng))
        assert np.linalg.matrix_rank(G @ G.T) == 12


def test_discretize_zero_F_and_rank(rng):
    G = eskf.build_G(random_nav(rng))
    phi, qd = eskf.discretize(np.zeros((15, 15)), G, eskf.ProcessNoiseDiag(0.01, 0.02), 0.01)
    assert np.array_equal(phi, np.eye(15))
    assert np.linalg.matrix_rank(qd) <= 12
    assert np.array_equal(qd, qd.T)


def test_discretize_first_order_error_bound(rng):
    for _ in range(20):
        nav = random_nav(rng)
        F = eskf.build_F(nav, rng.normal(0, 2, 3) + [0, 0, -9.8])
        phi, _ = eskf.discretize(F, eskf.build_G(nav), np.ones(12), 0.01, order=1)
        nf = np.linalg.norm(F, 2) * 0.01
        assert np.linalg.norm(phi - expm(F * 0.01), 2) <= nf ** 2 * math.exp(nf) / 2


def test_discretize_rejects_bad_args():
    with pytest.raises(ValidationError):
        eskf.discretize(np.zeros((15, 15)), np.zeros((15, 12)), np.ones(12), 0.0)
    with pytest.raises(ValidationError):
        eskf.discretize(np.zeros((15, 15)), np.zeros((15, 12)), np.ones(5), 0.01)


def test_process_noise_diag_layout():
    q = eskf.ProcessNoiseDiag.from_channels([1, 2, 3, 4, 5, 6])
    assert q.diag().tolist() == [1, 2, 3, 4, 5, 6] + [0.001] * 6
    with pytest.raises(ValidationError):
        eskf.ProcessNoiseDiag(-1.0, 0.1)


def test_predict_identity_and_zero_dx(rng):
    s = eskf.initial_state()
    s.dx[:] = 1.0
    qd = np.diag(rng.uniform(0, 1, 15))
    out = eskf.predict(s, np.eye(15), qd)
    assert np.array_equal(out.dx, np.zeros(15))
    assert np.array_equal(out.P, s.P + qd)


def test_predict_stays_symmetric_over_10k_steps(rng):
    nav = random_nav(rng)
    F = eskf.build_F(nav, [0.1, 0.2, -9.8])
    phi, qd = eskf.discretize(F, eskf.build_G(nav), eskf.ProcessNoiseDiag(1e-4, 1e-6, 1e-9),
                              0.01, 2)
    s = eskf.initial_state()
    for _ in range(10_000):
        s = eskf.predict(s, phi, qd)
    assert np.abs(s.P - s.P.T).max() <= 1e-12 * np.abs(s.P).max()


def test_predict_blowup():
    s = eskf.initial_state()
    with pytest.raises(CovarianceBlowup):
        eskf.predict(s, 1e7 * np.eye(15), np.zeros((15, 15)), trace_ceiling=1e12)


def test_update_closed_form():
    s = eskf.ErrorFilterState(np.zeros(15), np.eye(15))
    meas = eskf.MeasurementModel(np.hstack([np.eye(3), np.zeros((3, 12))]), np.eye(3))
    post, K, nu = eskf.update(s, meas, np.array([1.0, 2.0, 3.0]))
    expected = np.zeros((15, 3))
    expected[:3] = 0.5 * np.eye(3)
    assert np.allclose(K, expected, atol=1e-15)
    assert np.allclose(np.diag(post.P)[:3], 0.5)
    assert np.allclose(post.dx[:3], [0.5, 1.0, 1.5])
    assert np.array_equal(nu, [1.0, 2.0, 3.0])


def test_update_gain_vanishes_for_useless_measurement():
    s = eskf.initial_state()
    _, k0, _ = eskf.update(s, eskf.MeasurementModel.gnss(), np.ones(3))
    _, k1, _ = eskf.update(s, eskf.MeasurementModel.gnss((1e4, 1e4, 2e4)), np.ones(3))
    assert np.linalg.norm(k1) < 1e-3 * np.linalg.norm(k0)


@given(st.integers(0, 2 ** 32 - 1), st.booleans())
def test_update_contracts_covariance(seed, joseph):
    rng = np.random.default_rng(seed)
    p = random_spd(rng)
    s = eskf.ErrorFilterState(np.zeros(15), p)
    post, _, _ = eskf.update(s, eskf.MeasurementModel.gnss(), rng.standard_normal(3), joseph)
    assert np.linalg.eigvalsh(p - post.P).min() >= -1e-9
    assert eskf.is_symmetric_psd(post.P)


@given(st.integers(0, 2 ** 32 - 1))
def test_update_sign_symmetry(seed):
    rng = np.random.default_rng(seed)
    p = random_spd(rng)
    dx = rng.standard_normal(15)
    r = rng.standard_normal(3)
    meas = eskf.MeasurementModel.gnss()
    a, _, _ = eskf.update(eskf.ErrorFilterState(dx, p), meas, r)
    b, _, _ = eskf.update(eskf.ErrorFilterState(-dx, p), meas, -r)
    assert np.allclose(a.dx, -b.dx, atol=1e-12)
    assert np.array_equal(a.P, b.P)


def test_update_singular_innovation():
    s = eskf.ErrorFilterState(np.zeros(15), np.zeros((15, 15)))
    meas = eskf.MeasurementModel(eskf.MeasurementModel.gnss().H, np.zeros((3, 3)))
    with pytest.raises(SingularInnovation):
        eskf.update(s, meas, np.zeros(3))


def test_inject_zero_is_identity():
    nav = NavState(GeoPosition(0.5, 0.2, 10.0), np.array([1.0, 2, 3]))
    s = eskf.initial_state()
    out, post = eskf.inject_and_reset(nav, s)
    assert out.pos.as_array().tolist() == nav.pos.as_array().tolist()
    assert np.array_equal(out.vel, nav.vel) and np.allclose(out.dcm, nav.dcm, atol=1e-15)
    assert post.P is s.P


def test_inject_north_position_error():
    nav = NavState(GeoPosition(0.0, 0.0, 0.0), np.zeros(3))
    s = eskf.initial_state()
    s.dx[0] = 1.0
    out, post = eskf.inject_and_reset(nav, s)
    r_m = principal_radii(0.0)[0]
    assert nav.pos.lat - out.pos.lat == pytest.approx(1 / r_m, rel=1e-12)
    assert np.array_equal(post.dx, np.zeros(15))
    assert np.array_equal(post.P, s.P)


def test_inject_removes_true_error(rng):
    tru = random_nav(rng)
    err = np.concatenate([rng.normal(0, 1, 3), rng.normal(0, 0.1, 3), rng.normal(0, 1e-3, 3)])
    est = eskf.perturb(tru, err)
    assert np.allclose(eskf.navigation_error(est, tru), err, atol=1e-6)
    s = eskf.initial_state()
    s.dx[:9] = err
    fixed, _ = eskf.inject_and_reset(est, s)
    assert np.abs(eskf.navigation_error(fixed, tru)).max() < 1e-5


def test_inject_large_error():
    s = eskf.initial_state()
    s.dx[6] = 0.2
    with pytest.raises(LargeErrorState):
        eskf.inject_and_reset(NavState(GeoPosition(0, 0, 0), np.zeros(3)), s)


def test_gnss_residual_examples():
    nav = NavState(GeoPosition(0.0, 0.0, 100.0), np.zeros(3), time=1.0)
    assert np.array_equal(eskf.gnss_residual(nav, GnssFix(1.0, GeoPosition(0, 0, 100))),
                          np.zeros(3))
    low = eskf.gnss_residual(nav, GnssFix(1.0, GeoPosition(0, 0, 98)))
    assert np.allclose(low, [0, 0, 2])
    east = eskf.gnss_residual(nav, GnssFix(1.0, GeoPosition(0, 1e-5, 100)))
    r_n = principal_radii(0.0)[1]
    assert np.allclose(east, [0, 1e-5 * (r_n + 100), 0], rtol=1e-9, atol=1e-9)
    with pytest.raises(TimeMisalignment):
        eskf.gnss_residual(nav, GnssFix(1.2, nav.pos), dt=0.01)


def test_nees_and_psd_helpers():
    assert eskf.nees(np.ones(15), np.eye(15)) == pytest.approx(15.0)
    p = np.eye(15)
    p[0, 0] = -1e-3
    assert not eskf.is_symmetric_psd(p)
    assert eskf.initial_covariance()[0, 0] == 1.0
    assert eskf.snapshot_row(eskf.initial_state()).shape == (37,)
