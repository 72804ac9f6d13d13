import json

import numpy as np
import pytest

from hybridnav import adaptive as ad, scenario as sc
from hybridnav.errors import NonMonotoneTime, ParseError, ValidationError
from hybridnav.harness import experiments as ex
from hybridnav.harness.config import DEFAULTS, RunConfig
from hybridnav.harness.logs import imu_arrays, load_gnss, load_imu, load_log

from helpers import constant_model


def write(path, text):
    path.write_text(text)
    return path


def test_load_two_row_file(tmp_path):
    p = write(tmp_path / "imu.csv", "time,fx,fy,fz,wx,wy,wz\n0,1,2,3,4,5,6\n0.01,1,2,3,4,5,6\n")
    s = load_imu(p)
    assert len(s) == 2 and s[1].time == 0.01 and s[0].gyro.tolist() == [4, 5, 6]


def test_shuffled_times_rejected(tmp_path):
    p = write(tmp_path / "g.csv", "time,lat,lon,alt\n0.4,0,0,0\n0.2,0,0,0\n")
    with pytest.raises(NonMonotoneTime):
        load_gnss(p)


@pytest.mark.parametrize("body, line", [("0,1,2\n", 2), ("0,1,2,3,4,5,6\n1,a,2,3,4,5,6\n", 3),
                                        ("0,1,2,3,4,5,nan\n", 2)])
def test_parse_errors_carry_line_numbers(tmp_path, body, line):
    p = write(tmp_path / "imu.csv", "time,fx,fy,fz,wx,wy,wz\n" + body)
    with pytest.raises(ParseError) as exc:
        load_imu(p)
    assert exc.value.line == line


def test_bad_header(tmp_path):
    with pytest.raises(ParseError):
        load_imu(write(tmp_path / "imu.csv", "t,a\n"))


def test_exported_simulation_round_trips(tmp_path, fig8_60):
    s = sc.make_filter_scenario(fig8_60, 0.005, seed=0, duration=4.0)
    sc.write_imu_csv(tmp_path / "imu.csv", s.time, s.accel, s.gyro)
    sc.write_gnss_csv(tmp_path / "gnss.csv", s.gnss)
    imu, gnss = load_log(tmp_path / "imu.csv", tmp_path / "gnss.csv")
    t, a, g = imu_arrays(imu)
    assert np.array_equal(t, s.time) and np.array_equal(a, s.accel)
    assert np.array_equal(g, s.gyro)
    assert [f.pos.as_array().tolist() for f in gnss] == \
        [f.pos.as_array().tolist() for f in s.gnss]


def test_config_defaults_and_overrides(tmp_path):
    cfg = RunConfig()
    assert cfg.dt == 0.01 and cfg["scenario"]["baseline"] == "figure_eight"
    cfg.override("scenario.duration", "30")
    assert cfg["scenario"]["duration"] == 30
    cfg.override("policy", "aq3")
    assert cfg["policy"] == "aq3"
    path = write(tmp_path / "c.json", json.dumps({"seeds": [4, 5], "hb": {"tuning_rate": 1.0}}))
    loaded = RunConfig.load(path)
    assert loaded["seeds"] == [4, 5] and loaded["hb"]["clamp"] == DEFAULTS["hb"]["clamp"]


@pytest.mark.parametrize("data", [
    {"scenario": {"gnss_period": 0.015}},
    {"scenario": {"rate": 0}},
    {"hb": {"tuning_rate": 0.005}},
    {"hb": {"clamp": [0.02, 0.01]}},
    {"seeds": []},
    {"scenario": {"bogus": 1}},
    {"dataset": {"baselines": ["nowhere"]}},
    [],
])
def test_config_validation(data):
    with pytest.raises(ValidationError):
        RunConfig.from_dict(data)


def test_config_bad_files(tmp_path):
    with pytest.raises(ValidationError):
        RunConfig.load(write(tmp_path / "c.json", "{nope"))
    with pytest.raises(ValidationError):
        RunConfig.load(tmp_path / "missing.json")
    with pytest.raises(ValidationError):
        RunConfig().override("filter.nothing", "1")


def quick_cfg(**extra):
    data = {"scenario": {"duration": 6.0}, "filter": {"eps_bias": 1e-6}, "seeds": [0, 1]}
    data.update(extra)
    return RunConfig.from_dict(data)


def test_make_policy_specs():
    cfg = quick_cfg()
    assert ex.make_policy("CQ2", cfg) == ad.PRESETS["cq2"]
    assert ex.make_policy({"type": "innovation", "xi": 4}, cfg).xi == 4
    c = ex.make_policy({"type": "constant", "q_f": 0.003, "q_w": 0.004}, cfg)
    assert list(c.q.q_f) == [0.003] * 3
    assert isinstance(ex.make_policy("hb", cfg, constant_model(0.01)), ad.Learned)
    with pytest.raises(ValidationError):
        ex.make_policy("hb", cfg)
    with pytest.raises(ValidationError):
        ex.make_policy("zz", cfg)


def test_run_once_is_reproducible():
    cfg = quick_cfg()
    a, ra, _ = ex.run_once(cfg, "cq1", 3)
    b, rb, _ = ex.run_once(cfg, "cq1", 3)
    assert np.array_equal(a.pos, b.pos) and ra.prmse == rb.prmse


def test_compare_keeps_order_duplicates_and_errors():
    cfg = quick_cfg()
    rows = ex.compare(cfg, ["cq3", "aq1", "nope", "cq3", "hb"], model=constant_model(0.01))
    assert [r["policy"] for r in rows] == ["cq3", "aq1", "nope", "cq3", "hb"]
    assert rows[0]["prmse"] == rows[3]["prmse"] and rows[0]["pmae"] == rows[3]["pmae"]
    assert rows[2]["status"].startswith("ValidationError") and rows[2]["rank"] is None
    ok = [r for r in rows if r["status"] == "ok"]
    assert sorted(r["rank"] for r in ok) == [1, 2, 3, 4]
    best = min(ok, key=lambda r: r["prmse"])
    assert best["rank"] == 1
    assert all(len(r["seed_prmse"]) == 2 for r in ok)


def test_write_comparison(tmp_path):
    rows = ex.compare(quick_cfg(seeds=[0]), ["cq1", "cq2"])
    ex.write_comparison(tmp_path, rows)
    lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert lines[0] == "policy,prmse,pmae,rank,status" and len(lines) == 3
    assert (tmp_path / "cdf_prmse.csv").read_text().splitlines()[1].startswith("cq1,")


def test_replay_from_log_files(tmp_path, fig8_60):
    s = sc.make_filter_scenario(fig8_60, 0.0, seed=0, duration=6.0, r_diag=(0, 0, 0))
    sc.write_imu_csv(tmp_path / "imu.csv", s.time, s.accel, s.gyro)
    sc.write_gnss_csv(tmp_path / "gnss.csv", s.gnss)
    cfg = quick_cfg(scenario={"duration": 6.0, "imu_log": str(tmp_path / "imu.csv"),
                              "gnss_log": str(tmp_path / "gnss.csv")})
    res, report, truth = ex.run_once(cfg, "cq1", 0)
    assert report is None and truth is None
    err = ad.position_errors(res, s.truth)
    assert np.abs(err).max() < 0.05
