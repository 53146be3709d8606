"""Trajectory error metrics: ATE position/rotation and per-sample series.

Estimates and ground truth already share the observer's frame, so there is
deliberately no alignment transform: aligning would hide the very error
being measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import Pose, rotation_angle_deg


class InsufficientOverlap(ValueError):
    pass


@dataclass
class TrajectoryPair:
    """Timestamp-associated estimate/ground-truth pose series."""

    est_t: np.ndarray
    est: list[Pose]
    gt_t: np.ndarray
    gt: list[Pose]
    tolerance: float = 0.005  # seconds

    def matched(self) -> list[tuple[float, Pose, Pose]]:
        gt_t = np.asarray(self.gt_t, dtype=float)
        out = []
        for t, e in zip(self.est_t, self.est):
            k = int(np.argmin(np.abs(gt_t - t)))
            if abs(gt_t[k] - t) <= self.tolerance:
                out.append((float(t), e, self.gt[k]))
        if len(out) < 2:
            raise InsufficientOverlap(
                f"only {len(out)} matched samples within {self.tolerance}s"
            )
        return out


def error_series(pair: TrajectoryPair) -> np.ndarray:
    """Rows of (t, position error [m], rotation error [deg])."""
    rows = []
    for t, e, g in pair.matched():
        dp = float(np.linalg.norm(e.t - g.t))
        dr = rotation_angle_deg(g.R.T @ e.R)
        rows.append((t, dp, dr))
    return np.array(rows)


def ate_pos(pair: TrajectoryPair) -> float:
    """RMS of translational error norms, meters."""
    s = error_series(pair)
    return float(np.sqrt(np.mean(s[:, 1] ** 2)))


def ate_rot(pair: TrajectoryPair) -> float:
    """RMS of geodesic rotation angles, degrees."""
    s = error_series(pair)
    return float(np.sqrt(np.mean(s[:, 2] ** 2)))


def boxplot_stats(values) -> dict:
    """{min, q1, median, q3, max, outliers} with 1.5*IQR whiskers."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inliers = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "min": float(inliers[0]),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(inliers[-1]),
        "outliers": [float(x) for x in v[(v < lo_fence) | (v > hi_fence)]],
    }
