"""Double Sphere fisheye projection model.

Forward model (camera frame, z forward):

    d1  = ||p||
    d2  = ||(x, y, xi*d1 + z)||
    den = alpha*d2 + (1 - alpha)*(xi*d1 + z)
    u   = fx * x / den + cx,   v = fy * y / den + cy

valid iff z > -w2 * d1 with

    w1 = alpha/(1-alpha) if alpha <= 0.5 else (1-alpha)/alpha
    w2 = (w1 + xi) / sqrt(2*w1*xi + xi^2 + 1)

plus a field-of-view cone cut (angle from the optical axis <= fov/2).
Unprojection inverts the model back to a unit bearing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class OutOfImage(ValueError):
    """Point not representable: model validity or FOV cone violated."""


class InvalidPixel(ValueError):
    """Pixel outside the model's unprojectable region."""


@dataclass(frozen=True)
class DsIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    xi: float
    alpha: float
    fov_deg: float = 185.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal scales must be positive")
        if self.fov_deg > 185.0:
            raise ValueError(f"fov_deg must be <= 185, got {self.fov_deg}")


# plausible wide-FOV defaults for a 640x640 sensor; any set passing the
# round-trip tests over the FOV cone works
DEFAULT_INTRINSICS = DsIntrinsics(fx=285.0, fy=285.0, cx=320.0, cy=320.0, xi=-0.18, alpha=0.59)


def _w2(k: DsIntrinsics) -> float:
    if k.alpha <= 0.5:
        w1 = k.alpha / (1.0 - k.alpha)
    else:
        w1 = (1.0 - k.alpha) / k.alpha
    return (w1 + k.xi) / np.sqrt(2.0 * w1 * k.xi + k.xi**2 + 1.0)


def ds_project(p_cam, k: DsIntrinsics) -> tuple[float, float]:
    """Project a camera-frame point to pixels. Raises OutOfImage."""
    p = np.asarray(p_cam, dtype=float)
    x, y, z = p
    d1 = np.linalg.norm(p)
    if d1 == 0.0:
        raise ValueError("cannot project the camera center")
    if z <= -_w2(k) * d1:
        raise OutOfImage("point violates the Double Sphere validity condition")
    half_fov = 0.5 * np.deg2rad(k.fov_deg)
    if np.arccos(np.clip(z / d1, -1.0, 1.0)) > half_fov:
        raise OutOfImage("point outside the FOV cone")
    zeta = k.xi * d1 + z
    d2 = np.sqrt(x * x + y * y + zeta * zeta)
    den = k.alpha * d2 + (1.0 - k.alpha) * zeta
    return float(k.fx * x / den + k.cx), float(k.fy * y / den + k.cy)


def ds_unproject(uv, k: DsIntrinsics) -> np.ndarray:
    """Invert a pixel to a unit bearing. Raises InvalidPixel."""
    u, v = uv
    mx = (u - k.cx) / k.fx
    my = (v - k.cy) / k.fy
    r2 = mx * mx + my * my
    if k.alpha > 0.5 and r2 > 1.0 / (2.0 * k.alpha - 1.0):
        raise InvalidPixel("pixel outside the unprojectable disk")
    root = 1.0 - (2.0 * k.alpha - 1.0) * r2
    root = max(root, 0.0)
    mz = (1.0 - k.alpha * k.alpha * r2) / (k.alpha * np.sqrt(root) + 1.0 - k.alpha)
    coeff = (mz * k.xi + np.sqrt(mz * mz + (1.0 - k.xi * k.xi) * r2)) / (mz * mz + r2)
    ray = coeff * np.array([mx, my, mz]) - np.array([0.0, 0.0, k.xi])
    return ray / np.linalg.norm(ray)
