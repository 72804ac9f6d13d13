import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridnav import scenario as sc
from hybridnav.errors import EmptyStream, InsufficientExamples, ValidationError
from hybridnav.geodesy import GeoPosition, dcm_to_euler, geodetic_to_ned, normal_gravity
from hybridnav.mechanization import NavState, attitude_rate

OMEGA = 7.292115e-5


def rest(lat=0.0, dcm=None, vel=(0, 0, 0)):
    return NavState(GeoPosition(lat, 0.1, 0.0), np.array(vel, float),
                    np.eye(3) if dcm is None else dcm)


@pytest.fixture(scope="module")
def small_baselines():
    return [sc.synthesize(sc.make_profile(n, 20.0)) for n in ("straight", "loiter")]


def test_synth_gyro_examples():
    p = np.array([0.01, -0.02, 0.03])
    assert np.allclose(sc.synth_gyro(rest(), p, earth_terms=False), p, atol=1e-15)
    assert np.allclose(sc.synth_gyro(rest(), np.zeros(3)), [OMEGA, 0, 0], atol=1e-18)


@given(st.tuples(st.floats(-3, 3), st.floats(-1.3, 1.3), st.floats(-3, 3)),
       st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3))
def test_synth_gyro_inverts_attitude_rate(angles, rates):
    from hybridnav.geodesy import euler_to_dcm
    s = rest(lat=0.6, dcm=euler_to_dcm(*angles), vel=(40, -20, 1))
    w = sc.synth_gyro(s, np.array(rates))
    h = 1e-7
    e1 = np.array(dcm_to_euler(s.dcm + h * attitude_rate(s, w)))
    e0 = np.array(dcm_to_euler(s.dcm))
    d = np.remainder(e1 - e0 + math.pi, 2 * math.pi) - math.pi
    assert np.allclose(d / h, rates, atol=1e-6)


def test_synth_accel_examples():
    g = normal_gravity(0.0, 0.0)
    assert np.allclose(sc.synth_accel(rest(), np.zeros(3)), [0, 0, -g], atol=1e-14)
    assert np.allclose(sc.synth_accel(rest(), np.array([0, 0, g])), 0, atol=1e-14)
    assert np.allclose(sc.synth_accel(rest(), np.array([1.0, 0, 0])), [1, 0, -g], atol=1e-14)


def test_default_baselines_have_40000_samples():
    p = sc.make_profile("straight")
    assert p.n_samples == 40_000
    b = sc.synthesize(p)
    assert b.accel.shape == (40_000, 3) and b.gyro.shape == (40_000, 3)
    assert len(b.truth) == 40_001


def test_distinct_profiles_differ(small_baselines):
    a, b = small_baselines
    assert np.abs(a.imu - b.imu).max() > 0


def test_unknown_profile_rejected():
    with pytest.raises(ValidationError):
        sc.make_profile("barrel_roll")


def test_corrupt_zero_noise_is_identity(rng):
    x = rng.standard_normal((100, 6))
    assert np.array_equal(sc.corrupt(x, 0.0, 1), x)
    with pytest.raises(ValidationError):
        sc.corrupt(x, -1.0, 1)


@pytest.mark.parametrize("q", [0.001, 0.013, 0.025])
def test_corrupt_variance_within_chi2_interval(q):
    clean = np.zeros(40_000)
    d = sc.corrupt(clean, q, 7) - clean
    half = 3 * q * math.sqrt(2 / 39_999)
    assert abs(d.var(ddof=1) - q) < half
    assert abs(d.mean()) < 4 * math.sqrt(q / 40_000)


def test_default_grid():
    g = sc.q_grid()
    assert len(g) == 15 and g[0] == 0.001 and g[-1] == 0.025
    assert np.allclose(np.diff(g), (0.025 - 0.001) / 14)


@pytest.mark.parametrize("n, count", [(200, 200), (400, 100)])
def test_window_counts_and_labels(n, count):
    s = np.arange(40_000.0)
    w = sc.window(s, n, 0.007)
    assert len(w) == count
    assert all(x.label == 0.007 and len(x.samples) == n for x in w)
    assert np.array_equal(np.concatenate([x.samples for x in w]), s[:count * n])


def test_window_too_short():
    with pytest.raises(EmptyStream):
        sc.window(np.zeros(10), 20, 0.01)


def test_build_dataset_layout(small_baselines):
    ds = sc.build_dataset(small_baselines, sc.q_grid(n=3), 100, seed=0)
    assert len(ds) == 2 * 3 * 6 * 20
    assert ds.window_length == 100
    assert set(np.round(ds.y, 6)) == set(np.round(sc.q_grid(n=3), 6))
    again = sc.build_dataset(small_baselines, sc.q_grid(n=3), 100, seed=0)
    assert np.array_equal(ds.x, again.x)


def test_split_sizes_strata_and_determinism(small_baselines):
    ds = sc.build_dataset(small_baselines, sc.q_grid(n=5), 100, seed=0)
    ds = ds.subset(np.arange(1000))
    tr, te = sc.split(ds, 0.8, seed=3)
    assert (len(tr), len(te)) == (800, 200)
    for part in (tr, te):
        assert set(part.baseline.tolist()) == set(ds.baseline.tolist())
    tr2, _ = sc.split(ds, 0.8, seed=3)
    assert np.array_equal(tr.x, tr2.x)
    idx = tr.meta["split"]["indices"] + te.meta["split"]["indices"]
    assert sorted(idx) == list(range(1000))


def test_split_all_six_baselines_present():
    bs = [sc.synthesize(sc.make_profile(n, 4.0)) for n in sc.BASELINE_NAMES]
    ds = sc.build_dataset(bs, sc.q_grid(n=2), 100, seed=0)
    tr, te = sc.split(ds)
    assert set(tr.baseline.tolist()) == set(te.baseline.tolist()) == set(range(6))


def test_split_rejects_tiny_cells(small_baselines):
    ds = sc.build_dataset(small_baselines[:1], [0.01], 2000, seed=0)
    with pytest.raises(InsufficientExamples):
        sc.split(ds.subset([0]))


def test_gnss_count_and_defaults(fig8_60):
    fixes = sc.simulate_gnss(fig8_60.truth, 0.2)
    assert len(fixes) == 300
    assert fixes[0].noise_var == (0.01, 0.01, 0.02)
    assert fixes[0].time == pytest.approx(0.2)


def test_gnss_zero_noise_equals_truth(fig8_60):
    tr = fig8_60.truth
    for f in sc.simulate_gnss(tr, 0.2, (0.0, 0.0, 0.0))[:20]:
        k = int(round(f.time / 0.01))
        assert f.pos.as_array().tolist() == tr.pos[k].tolist()


def test_gnss_noise_is_white_and_scaled(fig8_60):
    tr = fig8_60.truth
    lag1, samples = [], []
    for seed in range(40):
        fixes = sc.simulate_gnss(tr, 0.2, seed=seed)
        e = np.array([geodetic_to_ned(f.pos, tr.state(int(round(f.time / 0.01))).pos)
                      for f in fixes])
        samples.append(e)
        for j in range(3):
            x = e[:, j] - e[:, j].mean()
            lag1.append(np.dot(x[1:], x[:-1]) / np.dot(x, x))
    lag1 = np.array(lag1).reshape(40, 3)
    assert np.all(np.abs(lag1.mean(axis=0)) < 0.05)
    var = np.concatenate(samples).var(axis=0)
    assert np.allclose(var, [0.01, 0.01, 0.02], rtol=0.05)


def test_gnss_period_must_divide(fig8_60):
    with pytest.raises(ValidationError):
        sc.simulate_gnss(fig8_60.truth, 0.015)


def test_dataset_csv_round_trip(tmp_path, small_baselines):
    ds = sc.build_dataset(small_baselines, sc.q_grid(n=2), 200, seed=0)
    tr, te = sc.split(ds)
    sc.write_dataset(tmp_path, ds, tr, te)
    back, manifest = sc.read_dataset(tmp_path)
    assert np.array_equal(back.x, ds.x) and np.array_equal(back.y, ds.y)
    assert back.baseline_names == ds.baseline_names
    assert manifest["split"]["train_count"] == len(tr)
    assert manifest["window_length"] == 200


def test_trajectory_csv_round_trip(tmp_path, fig8_60):
    tr = fig8_60.truth.slice(slice(0, 50))
    sc.write_trajectory_csv(tmp_path / "t.csv", tr)
    back = sc.read_trajectory_csv(tmp_path / "t.csv")
    assert np.array_equal(back.pos, tr.pos) and np.array_equal(back.vel, tr.vel)
    assert np.allclose(back.dcm, tr.dcm, atol=1e-14)


def test_noise_schedule_segments():
    q = sc.noise_schedule(10, 0.1, [(0.0, 0.005), (0.5, 0.02)])
    assert np.all(q[:5] == 0.005) and np.all(q[5:] == 0.02)
    with pytest.raises(ValidationError):
        sc.noise_schedule(10, 0.1, [(0.2, 0.01)])


def test_filter_scenario_noise_and_truth(fig8_60):
    s = sc.make_filter_scenario(fig8_60, 0.013, seed=1, duration=30.0)
    assert s.accel.shape == (3000, 3) and len(s.truth) == 3001
    assert len(s.gnss) == 150
    clean = fig8_60.imu[:3000]
    resid = np.hstack([s.accel, s.gyro]) - clean
    assert abs(resid.var() - 0.013) < 3 * 0.013 * math.sqrt(2 / resid.size)
    a = sc.make_filter_scenario(fig8_60, 0.013, seed=1, duration=30.0)
    assert np.array_equal(a.accel, s.accel)
