"""Closed-form 6-DOF relative pose from one frame of mutual observations.

Inputs per frame: the two mutual unit bearings (each robot sees the other's
beacon), the UWB range, and each robot's roll/pitch from its IMU. Gravity
alignment reduces the unknown relative rotation to a single yaw angle, which
the two projected bearing azimuths determine in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import quat_from_rotmat, rot_x, rot_y, rot_z, wrap_angle

VERTICAL_XY_THRESHOLD = 0.01  # reject sight lines within ~0.6 deg of vertical


class VerticalDegeneracy(ValueError):
    """Gravity-aligned bearing too close to +/-z: azimuth undefined."""


@dataclass
class MutualObservation:
    """One frame of mutual measurements, observer B tracking A."""

    bearing_b_to_a: np.ndarray  # unit, in B's body frame
    bearing_a_to_b: np.ndarray  # unit, in A's body frame
    range_m: float
    rp_a: tuple[float, float]  # (roll, pitch), radians
    rp_b: tuple[float, float]
    t: float = 0.0

    def __post_init__(self):
        self.bearing_b_to_a = np.asarray(self.bearing_b_to_a, dtype=float)
        self.bearing_a_to_b = np.asarray(self.bearing_a_to_b, dtype=float)
        for b in (self.bearing_b_to_a, self.bearing_a_to_b):
            if abs(np.linalg.norm(b) - 1.0) > 1e-9:
                raise ValueError("bearings must be unit-norm")
        if self.range_m < 0:
            raise ValueError("range must be non-negative")


@dataclass
class RawPoseMeasurement:
    """Measurement vector for the filter: positions both ways + rotation."""

    p_ba: np.ndarray  # position of A in B's frame, meters
    p_ab: np.ndarray  # position of B in A's frame, meters
    q_ba: np.ndarray  # unit quaternion of A's frame in B's frame
    t: float = 0.0


def relative_position(bearing, range_m: float) -> np.ndarray:
    """Bearing scaled by the UWB range."""
    return float(range_m) * np.asarray(bearing, dtype=float)


def gravity_align(bearing, rp: tuple[float, float]) -> np.ndarray:
    """Rotate a body-frame bearing into the gravity-aligned frame.

    The aligned frame shares the body yaw but has its z-axis opposite
    gravity: v_aligned = Ry(pitch) Rx(roll) v_body.
    """
    roll, pitch = rp
    v = rot_y(pitch) @ rot_x(roll) @ np.asarray(bearing, dtype=float)
    return v / np.linalg.norm(v)


def projected_azimuth(aligned_bearing) -> float:
    """Azimuth of the bearing projected onto the aligned x-o-y plane."""
    x, y = aligned_bearing[0], aligned_bearing[1]
    if np.hypot(x, y) < VERTICAL_XY_THRESHOLD:
        raise VerticalDegeneracy("sight line too close to vertical")
    return wrap_angle(float(np.arctan2(y, x)))


def relative_yaw(azimuth_in_b: float, azimuth_in_a: float) -> float:
    """Relative yaw from the two projected azimuths, wrapped to (-pi, pi]."""
    return wrap_angle(azimuth_in_b - azimuth_in_a + np.pi)


def relative_rotation(obs: MutualObservation) -> np.ndarray:
    """Rotation of A's body frame expressed in B's body frame."""
    aligned_b = gravity_align(obs.bearing_b_to_a, obs.rp_b)
    aligned_a = gravity_align(obs.bearing_a_to_b, obs.rp_a)
    psi = relative_yaw(projected_azimuth(aligned_b), projected_azimuth(aligned_a))
    roll_b, pitch_b = obs.rp_b
    roll_a, pitch_a = obs.rp_a
    return rot_x(roll_b).T @ rot_y(pitch_b).T @ rot_z(psi) @ rot_y(pitch_a) @ rot_x(roll_a)


def raw_estimate(obs: MutualObservation) -> RawPoseMeasurement:
    """Assemble the full raw measurement; raises on degenerate geometry."""
    R_ba = relative_rotation(obs)
    return RawPoseMeasurement(
        p_ba=relative_position(obs.bearing_b_to_a, obs.range_m),
        p_ab=relative_position(obs.bearing_a_to_b, obs.range_m),
        q_ba=quat_from_rotmat(R_ba),
        t=obs.t,
    )
