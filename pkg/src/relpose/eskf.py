"""Error-state Kalman filter in the observer's moving body frame.

State of robot A expressed in observer B's (rotating, accelerating) body
frame: position p, velocity v, orientation quaternion q. The 12-dim error
state is [dp, dv, dtheta_A, dtheta_B]; the two small-angle errors live on
the A- and B-side of the nominal quaternion respectively:

    p_t = R{dtheta_B}^T (p + dp)
    v_t = R{dtheta_B}^T (v + dv)
    q_t = dq_B^* ⊗ q ⊗ dq_A

Prediction consumes both robots' IMU samples; correction consumes a raw
relative-pose measurement (positions both ways + relative quaternion). The
orientation part of the measurement enters as a rotation-vector residual of
q_nominal^-1 ⊗ q_measured (the quaternion itself has no additive noise on
the manifold).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import (
    quat_conj,
    quat_from_rotvec,
    quat_mul,
    quat_normalize,
    rotmat_from_quat,
    rotmat_from_rotvec,
    rotvec_from_quat,
    skew,
)
from .rawpose import RawPoseMeasurement

# chi^2 inverse CDF at 0.999 with 9 dof, for innovation gating
CHI2_9_999 = 27.877164871256568


class SingularInnovation(np.linalg.LinAlgError):
    """HPH' + V not invertible; V must be positive definite."""


@dataclass
class NominalState:
    p: np.ndarray
    v: np.ndarray
    q: np.ndarray
    t: float = 0.0

    def copy(self) -> "NominalState":
        return NominalState(self.p.copy(), self.v.copy(), self.q.copy(), self.t)


@dataclass
class ErrorBelief:
    delta_mean: np.ndarray  # 12-vector, zero outside the update->reset window
    P: np.ndarray  # 12x12

    def copy(self) -> "ErrorBelief":
        return ErrorBelief(self.delta_mean.copy(), self.P.copy())


@dataclass
class ImuPairInput:
    a_ma: np.ndarray  # A's specific force, body frame, m/s^2
    w_ma: np.ndarray  # A's angular rate, rad/s
    a_mb: np.ndarray
    w_mb: np.ndarray
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        self.a_ma = np.asarray(self.a_ma, dtype=float)
        self.w_ma = np.asarray(self.w_ma, dtype=float)
        self.a_mb = np.asarray(self.a_mb, dtype=float)
        self.w_mb = np.asarray(self.w_mb, dtype=float)


def default_V(range_m: float = 1.0) -> np.ndarray:
    """Measurement covariance: UWB + range-scaled bearing noise, 1.5 deg rot."""
    sp = max(0.05, 0.02 * range_m)
    sr = np.deg2rad(1.5)
    return np.diag([sp**2] * 6 + [sr**2] * 3)


def default_Qi(
    accel_density: float = 183.3e-6 * 9.81,  # m/s^2/sqrt(Hz)
    gyro_density: float = np.deg2rad(0.021),  # rad/s/sqrt(Hz)
    dt: float = 0.01,
) -> np.ndarray:
    """Input-noise covariance of [a_nA, w_nA, a_nB, w_nB] (discrete sigmas)."""
    sa2 = accel_density**2 / dt
    sw2 = gyro_density**2 / dt
    return np.diag([sa2] * 3 + [sw2] * 3 + [sa2] * 3 + [sw2] * 3)


def default_init_P() -> np.ndarray:
    s_ang = np.deg2rad(5.0)
    return np.diag([0.25] * 3 + [0.1] * 3 + [s_ang**2] * 6)


@dataclass
class FilterConfig:
    Qi: np.ndarray = field(default_factory=default_Qi)
    V: np.ndarray = field(default_factory=default_V)
    init_P: np.ndarray = field(default_factory=default_init_P)
    gate_chi2: float | None = CHI2_9_999  # None disables gating
    range_scaled_V: bool = True  # rebuild position blocks of V from range


def init_from_raw(z: RawPoseMeasurement, cfg: FilterConfig) -> tuple[NominalState, ErrorBelief]:
    state = NominalState(p=z.p_ba.copy(), v=np.zeros(3), q=z.q_ba.copy(), t=z.t)
    return state, ErrorBelief(np.zeros(12), cfg.init_P.copy())


def predict(
    state: NominalState, belief: ErrorBelief, u: ImuPairInput, cfg: FilterConfig
) -> tuple[NominalState, ErrorBelief]:
    """Propagate nominal state and error covariance over one IMU interval."""
    dt = u.dt
    Rq = rotmat_from_quat(state.q)
    rel_acc = Rq @ u.a_ma - u.a_mb
    Rb_T = rotmat_from_rotvec(u.w_mb * dt).T

    p = Rb_T @ (state.p + state.v * dt + 0.5 * rel_acc * dt * dt)
    v = Rb_T @ (state.v + rel_acc * dt)
    q = quat_mul(
        quat_mul(quat_conj(quat_from_rotvec(u.w_mb * dt)), state.q),
        quat_from_rotvec(u.w_ma * dt),
    )

    Fx = compute_Fx(state, u, dt)
    Fi = compute_Fi(state, u, dt)
    delta = Fx @ belief.delta_mean  # zero in steady operation
    P = Fx @ belief.P @ Fx.T + Fi @ cfg.Qi @ Fi.T
    P = 0.5 * (P + P.T)
    return NominalState(p, v, quat_normalize(q), state.t + dt), ErrorBelief(delta, P)


def compute_Fx(state: NominalState, u: ImuPairInput, dt: float) -> np.ndarray:
    """Discrete error-state transition Jacobian."""
    Rq = rotmat_from_quat(state.q)
    Ra_T = rotmat_from_rotvec(u.w_ma * dt).T
    Rb_T = rotmat_from_rotvec(u.w_mb * dt).T
    F = np.zeros((12, 12))
    F[0:3, 0:3] = Rb_T
    F[0:3, 3:6] = Rb_T * dt
    F[3:6, 3:6] = Rb_T
    F[3:6, 6:9] = -Rb_T @ Rq @ skew(u.a_ma) * dt
    F[3:6, 9:12] = Rb_T @ skew(u.a_mb) * dt
    F[6:9, 6:9] = Ra_T
    F[9:12, 9:12] = Rb_T
    return F


def compute_Fi(state: NominalState, u: ImuPairInput, dt: float) -> np.ndarray:
    """Jacobian w.r.t. the input noise [a_nA, w_nA, a_nB, w_nB]."""
    Rq = rotmat_from_quat(state.q)
    Rb_T = rotmat_from_rotvec(u.w_mb * dt).T
    Fi = np.zeros((12, 12))
    Fi[3:6, 0:3] = -Rb_T @ Rq * dt  # accel noise of A
    Fi[6:9, 3:6] = -np.eye(3) * dt  # gyro noise of A
    Fi[3:6, 6:9] = Rb_T * dt  # accel noise of B
    Fi[9:12, 9:12] = -np.eye(3) * dt  # gyro noise of B
    return Fi


def measurement_fn(state: NominalState) -> np.ndarray:
    """h(x) for the 6 position components (rotation residual is zero at x)."""
    Rq = rotmat_from_quat(state.q)
    return np.concatenate([state.p, -Rq.T @ state.p])


def compute_H(state: NominalState) -> np.ndarray:
    """9x12 measurement Jacobian w.r.t. the error state at delta = 0."""
    Rq = rotmat_from_quat(state.q)
    H = np.zeros((9, 12))
    # p_BA block: p_t = R{dth_B}^T (p + dp) ~ p + dp + [p]x dth_B
    H[0:3, 0:3] = np.eye(3)
    H[0:3, 9:12] = skew(state.p)
    # p_AB block: -R{q_t}^T p_t ~ -R^T p - R^T dp - [R^T p]x dth_A
    H[3:6, 0:3] = -Rq.T
    H[3:6, 6:9] = -skew(Rq.T @ state.p)
    # rotation residual rotvec(q^-1 ⊗ q_t) ~ dth_A - R^T dth_B
    H[6:9, 6:9] = np.eye(3)
    H[6:9, 9:12] = -Rq.T
    return H


def innovation(state: NominalState, z: RawPoseMeasurement) -> np.ndarray:
    """9-vector residual z ⊖ h(x): positions subtract, rotations compose."""
    Rq = rotmat_from_quat(state.q)
    rot_res = rotvec_from_quat(quat_mul(quat_conj(state.q), z.q_ba))
    return np.concatenate([z.p_ba - state.p, z.p_ab - (-Rq.T @ state.p), rot_res])


def update(
    state: NominalState, belief: ErrorBelief, z: RawPoseMeasurement, cfg: FilterConfig
) -> ErrorBelief:
    """Kalman correction; returns belief with populated delta_mean.

    Raises SingularInnovation when HPH'+V is not invertible. Returns the
    input belief unchanged when the innovation fails the chi-square gate.
    """
    H = compute_H(state)
    V = cfg.V
    if cfg.range_scaled_V:
        V = V.copy()
        sp2 = max(0.05, 0.02 * float(np.linalg.norm(z.p_ba))) ** 2
        V[0:6, 0:6] = np.eye(6) * sp2
    S = H @ belief.P @ H.T + V
    y = innovation(state, z)
    try:
        Sinv_y = np.linalg.solve(S, y)
        Sinv_Ht = np.linalg.solve(S, H @ belief.P)
    except np.linalg.LinAlgError as e:
        raise SingularInnovation(str(e)) from e
    if cfg.gate_chi2 is not None and float(y @ Sinv_y) > cfg.gate_chi2:
        return belief
    K = Sinv_Ht.T  # = P H' S^-1
    delta = K @ y
    P = (np.eye(12) - K @ H) @ belief.P
    P = 0.5 * (P + P.T)
    return ErrorBelief(delta, P)


def inject_and_reset(state: NominalState, belief: ErrorBelief) -> tuple[NominalState, ErrorBelief]:
    """Fold delta_mean into the nominal state, then zero it and remap P."""
    new_state = true_state(state, belief)
    G = reset_jacobian(belief.delta_mean)
    P = G @ belief.P @ G.T
    return new_state, ErrorBelief(np.zeros(12), 0.5 * (P + P.T))


def reset_map(delta: np.ndarray, delta_hat: np.ndarray) -> np.ndarray:
    """Remap an error-state sample after injecting delta_hat."""
    dth_a_hat, dth_b_hat = delta_hat[6:9], delta_hat[9:12]
    out = np.empty(12)
    Rb_T = rotmat_from_rotvec(dth_b_hat).T
    out[0:3] = Rb_T @ (delta[0:3] - delta_hat[0:3])
    out[3:6] = Rb_T @ (delta[3:6] - delta_hat[3:6])
    out[6:9] = -dth_a_hat + (np.eye(3) - skew(0.5 * dth_a_hat)) @ delta[6:9]
    out[9:12] = -dth_b_hat + (np.eye(3) - skew(0.5 * dth_b_hat)) @ delta[9:12]
    return out


def reset_jacobian(delta_hat: np.ndarray) -> np.ndarray:
    """Jacobian of reset_map w.r.t. delta; identity at delta_hat = 0."""
    Rb_T = rotmat_from_rotvec(delta_hat[9:12]).T
    G = np.zeros((12, 12))
    G[0:3, 0:3] = Rb_T
    G[3:6, 3:6] = Rb_T
    G[6:9, 6:9] = np.eye(3) - skew(0.5 * delta_hat[6:9])
    G[9:12, 9:12] = np.eye(3) - skew(0.5 * delta_hat[9:12])
    return G


def true_state(state: NominalState, belief: ErrorBelief) -> NominalState:
    """x ⊕ delta_mean without mutating the filter."""
    d = belief.delta_mean
    Rb_T = rotmat_from_rotvec(d[9:12]).T
    p = Rb_T @ (state.p + d[0:3])
    v = Rb_T @ (state.v + d[3:6])
    q = quat_mul(
        quat_mul(quat_conj(quat_from_rotvec(d[9:12])), state.q), quat_from_rotvec(d[6:9])
    )
    return NominalState(p, v, quat_normalize(q), state.t)


class RelativePoseFilter:
    """Convenience wrapper serializing predict/update for one neighbor."""

    def __init__(self, cfg: FilterConfig | None = None):
        self.cfg = cfg if cfg is not None else FilterConfig()
        self.state: NominalState | None = None
        self.belief: ErrorBelief | None = None

    @property
    def initialized(self) -> bool:
        return self.state is not None

    def process_imu(self, u: ImuPairInput) -> None:
        if self.state is None:
            return
        self.state, self.belief = predict(self.state, self.belief, u, self.cfg)

    def process_measurement(self, z: RawPoseMeasurement) -> None:
        if self.state is None:
            self.state, self.belief = init_from_raw(z, self.cfg)
            return
        self.belief = update(self.state, self.belief, z, self.cfg)
        self.state, self.belief = inject_and_reset(self.state, self.belief)
