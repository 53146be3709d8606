"""Scenario configuration: schema, validation, JSON loading.

Schema (JSON, ``version: 1``) — all fields with defaults may be omitted:

    {
      "version": 1,
      "seed": 42,
      "duration": 10.0,            // seconds
      "ego": 0,                    // observer whose frame PGO fixes
      "estimator": "eskf",         // "raw" | "eskf" | "pgo"
      "pairs": "ego",              // "ego" | "all" (which filters run)
      "id_mode": "codec",          // "codec" | "oracle"
      "pgo_rate": 10.0,            // Hz
      "rates": {"imu": 100.0, "cam": 200.0, "uwb": 50.0},
      "camera": {"fx":285,"fy":285,"cx":320,"cy":320,
                 "xi":-0.18,"alpha":0.59,"fov_deg":185},
      "noise": {"accel_density":183.3,"gyro_density":0.021,"uwb_sigma":0.05,
                "pixel_sigma":1.0,"attitude_rp_sigma":0.2},
      "obstacles": [{"shape":"box","center":[x,y,z],"extents":[ex,ey,ez]}],
      "robots": [{"id":0,"led":0,"trajectory":{...}}, ...]
    }

Trajectory objects mirror `relpose.trajectory.TrajectorySpec`; the nested
"attitude" object mirrors `AttitudeProfile` (angles in radians).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .camera import DEFAULT_INTRINSICS, DsIntrinsics
from .trajectory import AttitudeProfile, TrajectorySpec
from .world import NoiseParams, Obstacle


class ConfigError(ValueError):
    """Invalid scenario config; the message names the offending field."""


@dataclass
class ScenarioConfig:
    robots: list[tuple[int, TrajectorySpec, int]]  # (id, trajectory, led id)
    duration: float
    seed: int = 0
    ego: int = 0
    estimator: str = "eskf"  # raw | eskf | pgo
    pairs: str = "ego"  # ego | all
    id_mode: str = "codec"  # codec | oracle
    pgo_rate: float = 10.0
    imu_rate: float = 100.0
    cam_rate: float = 200.0
    uwb_rate: float = 50.0
    camera: DsIntrinsics = DEFAULT_INTRINSICS
    noise: NoiseParams = field(default_factory=NoiseParams)
    obstacles: list[Obstacle] = field(default_factory=list)

    def __post_init__(self):
        ids = [r[0] for r in self.robots]
        if len(ids) < 2:
            raise ConfigError("robots: at least 2 robots required")
        if len(set(ids)) != len(ids):
            raise ConfigError("robots: ids must be unique")
        if self.ego not in ids:
            raise ConfigError(f"ego: robot {self.ego} not in robots")
        if self.estimator not in ("raw", "eskf", "pgo"):
            raise ConfigError(f"estimator: unknown value {self.estimator!r}")
        if self.pairs not in ("ego", "all"):
            raise ConfigError(f"pairs: unknown value {self.pairs!r}")
        if self.id_mode not in ("codec", "oracle"):
            raise ConfigError(f"id_mode: unknown value {self.id_mode!r}")
        for name in ("duration", "pgo_rate", "imu_rate", "cam_rate", "uwb_rate"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name}: must be positive")


def _attitude_from_dict(d: dict) -> AttitudeProfile:
    keys = {"rpy0", "amp", "freq", "phase", "yaw_rate"}
    bad = set(d) - keys
    if bad:
        raise ConfigError(f"trajectory.attitude: unknown fields {sorted(bad)}")
    kwargs = {}
    for k in ("rpy0", "amp", "freq", "phase"):
        if k in d:
            kwargs[k] = tuple(float(x) for x in d[k])
    if "yaw_rate" in d:
        kwargs["yaw_rate"] = float(d["yaw_rate"])
    return AttitudeProfile(**kwargs)


def _trajectory_from_dict(d: dict, duration: float) -> TrajectorySpec:
    if "kind" not in d:
        raise ConfigError("trajectory.kind: missing")
    kwargs = dict(d)
    att = kwargs.pop("attitude", None)
    if "waypoints" in kwargs:
        kwargs["waypoints"] = [(float(t), tuple(map(float, p))) for t, p in kwargs["waypoints"]]
    for k in ("center", "amplitude", "freq", "phase3"):
        if k in kwargs:
            kwargs[k] = tuple(float(x) for x in kwargs[k])
    kwargs.setdefault("duration", duration)
    try:
        spec = TrajectorySpec(
            attitude=_attitude_from_dict(att) if att else AttitudeProfile(), **kwargs
        )
    except TypeError as e:
        raise ConfigError(f"trajectory: {e}") from e
    except ValueError as e:
        raise ConfigError(f"trajectory: {e}") from e
    return spec


def config_from_dict(d: dict) -> ScenarioConfig:
    if d.get("version") != 1:
        raise ConfigError(f"version: expected 1, got {d.get('version')!r}")
    if "robots" not in d or "duration" not in d:
        missing = [k for k in ("robots", "duration") if k not in d]
        raise ConfigError(f"{missing[0]}: missing")
    duration = float(d["duration"])
    robots = []
    for r in d["robots"]:
        if "id" not in r or "trajectory" not in r:
            raise ConfigError("robots[*]: each robot needs 'id' and 'trajectory'")
        robots.append(
            (int(r["id"]), _trajectory_from_dict(r["trajectory"], duration), int(r.get("led", r["id"])))
        )
    try:
        noise = NoiseParams(**d.get("noise", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"noise: {e}") from e
    if "seed" in d:
        noise.seed = int(d["seed"])
    try:
        camera = DsIntrinsics(**d["camera"]) if "camera" in d else DEFAULT_INTRINSICS
    except (TypeError, ValueError) as e:
        raise ConfigError(f"camera: {e}") from e
    obstacles = []
    for ob in d.get("obstacles", []):
        try:
            obstacles.append(
                Obstacle(ob["shape"], tuple(map(float, ob["center"])), tuple(map(float, ob["extents"])))
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"obstacles: {e}") from e
    rates = d.get("rates", {})
    return ScenarioConfig(
        robots=robots,
        duration=duration,
        seed=int(d.get("seed", 0)),
        ego=int(d.get("ego", robots[0][0])),
        estimator=d.get("estimator", "eskf"),
        pairs=d.get("pairs", "ego"),
        id_mode=d.get("id_mode", "codec"),
        pgo_rate=float(d.get("pgo_rate", 10.0)),
        imu_rate=float(rates.get("imu", 100.0)),
        cam_rate=float(rates.get("cam", 200.0)),
        uwb_rate=float(rates.get("uwb", 50.0)),
        camera=camera,
        noise=noise,
        obstacles=obstacles,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON: {e}") from e
    return config_from_dict(d)
