"""Analytic ground-truth trajectories with consistent derivatives.

Position kinds: static, circle, lissajous, waypoints (C2 cubic spline).
Attitude follows a sinusoid-per-axis Euler profile plus a linear yaw ramp,
which covers level flight, spinning, and aggressive roll/pitch sweeps. The
body angular rate comes from the exact Z-Y-X Euler-rate kinematics, so gyro
synthesis is consistent with the attitude to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .geom import quat_from_euler_zyx


class OutOfDomain(ValueError):
    pass


@dataclass
class AttitudeProfile:
    """Euler-angle profile: angle(t) = base + amp*sin(2*pi*freq*t + phase)."""

    rpy0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    amp: tuple[float, float, float] = (0.0, 0.0, 0.0)
    freq: tuple[float, float, float] = (0.0, 0.0, 0.0)
    phase: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw_rate: float = 0.0  # rad/s, added to the yaw channel

    def angles(self, t: float) -> np.ndarray:
        b = np.asarray(self.rpy0, dtype=float)
        a = np.asarray(self.amp, dtype=float)
        f = np.asarray(self.freq, dtype=float)
        ph = np.asarray(self.phase, dtype=float)
        out = b + a * np.sin(2 * np.pi * f * t + ph)
        out[2] += self.yaw_rate * t
        return out

    def rates(self, t: float) -> np.ndarray:
        a = np.asarray(self.amp, dtype=float)
        f = np.asarray(self.freq, dtype=float)
        ph = np.asarray(self.phase, dtype=float)
        out = a * 2 * np.pi * f * np.cos(2 * np.pi * f * t + ph)
        out[2] += self.yaw_rate
        return out


@dataclass
class TrajectorySpec:
    kind: str  # static | circle | lissajous | waypoints
    duration: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 1.0
    omega: float = 0.5  # rad/s, circle angular rate
    phase: float = 0.0  # circle start angle
    amplitude: tuple[float, float, float] = (1.0, 1.0, 0.0)
    freq: tuple[float, float, float] = (0.1, 0.2, 0.0)  # Hz per axis
    phase3: tuple[float, float, float] = (0.0, 0.0, 0.0)
    waypoints: list[tuple[float, tuple[float, float, float]]] = field(default_factory=list)
    attitude: AttitudeProfile = field(default_factory=AttitudeProfile)

    def __post_init__(self):
        if self.kind not in ("static", "circle", "lissajous", "waypoints"):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.kind == "waypoints":
            if len(self.waypoints) < 2:
                raise ValueError("waypoints kind needs at least 2 waypoints")
            ts = np.array([t for t, _ in self.waypoints])
            ps = np.array([p for _, p in self.waypoints])
            self._spline = CubicSpline(ts, ps, bc_type="clamped")


@dataclass
class TrajectoryState:
    p: np.ndarray  # world position, m
    v: np.ndarray  # world velocity, m/s
    a: np.ndarray  # world acceleration, m/s^2
    q: np.ndarray  # world->body attitude quaternion (body frame in world)
    w_body: np.ndarray  # body angular rate, rad/s


def _euler_rates_to_body(rpy: np.ndarray, rpy_dot: np.ndarray) -> np.ndarray:
    """Z-Y-X Euler-angle rates -> body angular velocity."""
    roll, pitch, _ = rpy
    dr, dp, dy = rpy_dot
    sr, cr = np.sin(roll), np.cos(roll)
    sp, cp = np.sin(pitch), np.cos(pitch)
    return np.array(
        [
            dr - dy * sp,
            dp * cr + dy * cp * sr,
            -dp * sr + dy * cp * cr,
        ]
    )


def eval_trajectory(spec: TrajectorySpec, t: float) -> TrajectoryState:
    """Position/velocity/acceleration + attitude/body-rate at time t."""
    if t < -1e-12 or t > spec.duration + 1e-12:
        raise OutOfDomain(f"t={t} outside [0, {spec.duration}]")
    c = np.asarray(spec.center, dtype=float)
    if spec.kind == "static":
        p, v, a = c.copy(), np.zeros(3), np.zeros(3)
    elif spec.kind == "circle":
        ang = spec.omega * t + spec.phase
        r, w = spec.radius, spec.omega
        p = c + r * np.array([np.cos(ang), np.sin(ang), 0.0])
        v = r * w * np.array([-np.sin(ang), np.cos(ang), 0.0])
        a = -r * w * w * np.array([np.cos(ang), np.sin(ang), 0.0])
    elif spec.kind == "lissajous":
        A = np.asarray(spec.amplitude, dtype=float)
        w = 2 * np.pi * np.asarray(spec.freq, dtype=float)
        ph = np.asarray(spec.phase3, dtype=float)
        p = c + A * np.sin(w * t + ph)
        v = A * w * np.cos(w * t + ph)
        a = -A * w * w * np.sin(w * t + ph)
    else:  # waypoints
        p = spec._spline(t)
        v = spec._spline(t, 1)
        a = spec._spline(t, 2)
    rpy = spec.attitude.angles(t)
    q = quat_from_euler_zyx(rpy[0], rpy[1], rpy[2])
    w_body = _euler_rates_to_body(rpy, spec.attitude.rates(t))
    return TrajectoryState(p, v, a, q, w_body)
