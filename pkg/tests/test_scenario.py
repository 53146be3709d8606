import json

import pytest

from relpose.scenario import ConfigError, config_from_dict, load_config


def minimal_dict(**extra):
    d = {
        "version": 1,
        "duration": 5.0,
        "robots": [
            {"id": 0, "trajectory": {"kind": "static", "center": [0, 0, 1]}},
            {"id": 1, "trajectory": {"kind": "static", "center": [3, 0, 1]}},
        ],
    }
    d.update(extra)
    return d


def test_minimal_config():
    cfg = config_from_dict(minimal_dict())
    assert cfg.duration == 5.0
    assert cfg.ego == 0
    assert cfg.estimator == "eskf"
    assert [r[0] for r in cfg.robots] == [0, 1]
    assert cfg.robots[0][2] == 0  # led defaults to the robot id


def test_version_required():
    d = minimal_dict()
    d["version"] = 2
    with pytest.raises(ConfigError, match="version"):
        config_from_dict(d)
    del d["version"]
    with pytest.raises(ConfigError, match="version"):
        config_from_dict(d)


def test_missing_fields():
    with pytest.raises(ConfigError, match="duration"):
        config_from_dict({"version": 1, "robots": minimal_dict()["robots"]})
    with pytest.raises(ConfigError, match="robots"):
        config_from_dict({"version": 1, "duration": 5.0})


def test_robot_validation():
    d = minimal_dict()
    d["robots"] = d["robots"][:1]
    with pytest.raises(ConfigError, match="at least 2"):
        config_from_dict(d)
    d = minimal_dict()
    d["robots"][1]["id"] = 0
    with pytest.raises(ConfigError, match="unique"):
        config_from_dict(d)
    d = minimal_dict(ego=5)
    with pytest.raises(ConfigError, match="ego"):
        config_from_dict(d)


def test_enum_fields_validated():
    with pytest.raises(ConfigError, match="estimator"):
        config_from_dict(minimal_dict(estimator="magic"))
    with pytest.raises(ConfigError, match="pairs"):
        config_from_dict(minimal_dict(pairs="some"))
    with pytest.raises(ConfigError, match="id_mode"):
        config_from_dict(minimal_dict(id_mode="psychic"))


def test_bad_trajectory_kind():
    d = minimal_dict()
    d["robots"][0]["trajectory"]["kind"] = "zigzag"
    with pytest.raises(ConfigError, match="trajectory"):
        config_from_dict(d)


def test_trajectory_missing_kind():
    d = minimal_dict()
    del d["robots"][0]["trajectory"]["kind"]
    with pytest.raises(ConfigError, match="kind"):
        config_from_dict(d)


def test_attitude_unknown_field_rejected():
    d = minimal_dict()
    d["robots"][0]["trajectory"]["attitude"] = {"wobble": 3}
    with pytest.raises(ConfigError, match="attitude"):
        config_from_dict(d)


def test_camera_and_noise_override():
    d = minimal_dict(
        camera={"fx": 300, "fy": 300, "cx": 100, "cy": 100, "xi": 0.0, "alpha": 0.5},
        noise={"uwb_sigma": 0.1},
    )
    cfg = config_from_dict(d)
    assert cfg.camera.fx == 300
    assert cfg.noise.uwb_sigma == 0.1
    assert cfg.noise.pixel_sigma == 1.0  # untouched default


def test_seed_propagates_to_noise():
    cfg = config_from_dict(minimal_dict(seed=123))
    assert cfg.seed == 123
    assert cfg.noise.seed == 123


def test_obstacles_parsed():
    d = minimal_dict(obstacles=[{"shape": "box", "center": [1, 0, 1], "extents": [0.5, 0.5, 1]}])
    cfg = config_from_dict(d)
    assert len(cfg.obstacles) == 1
    assert cfg.obstacles[0].shape == "box"
    with pytest.raises(ConfigError, match="obstacles"):
        config_from_dict(minimal_dict(obstacles=[{"shape": "box"}]))


def test_rates_parsed():
    cfg = config_from_dict(minimal_dict(rates={"imu": 400.0, "cam": 100.0, "uwb": 20.0}))
    assert (cfg.imu_rate, cfg.cam_rate, cfg.uwb_rate) == (400.0, 100.0, 20.0)
    with pytest.raises(ConfigError, match="imu_rate"):
        config_from_dict(minimal_dict(rates={"imu": -1.0}))


def test_load_config_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(p)
    good = tmp_path / "ok.json"
    good.write_text(json.dumps(minimal_dict()))
    assert load_config(good).duration == 5.0


def test_bundled_scenarios_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "scenarios"
    found = sorted(root.glob("*.json"))
    assert len(found) >= 6
    for p in found:
        cfg = load_config(p)
        assert cfg.duration > 0
