"""Single-frame pose-graph optimization over a robot team.

Nodes are robot poses in the ego robot's frame (ego fixed to identity);
edges are measured pairwise relative poses. The residual per edge is the
squared Frobenius norm of (T_hat_ij * X_j^-1 * X_i - I) over homogeneous
4x4 matrices; an edge is exactly consistent when T_hat_ij equals the pose
of robot j expressed in robot i's frame. Solved by Levenberg-Marquardt on
the SE(3) manifold with analytic Jacobians and Huber reweighting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import Pose, se3_exp

# SE(3) right-perturbation generators: d/deps Exp(eps e_k) at 0, 4x4
_GEN = np.zeros((6, 4, 4))
for _k in range(3):
    _GEN[_k, _k, 3] = 1.0  # translation
_GEN[3, 2, 1], _GEN[3, 1, 2] = 1.0, -1.0  # rot x
_GEN[4, 0, 2], _GEN[4, 2, 0] = 1.0, -1.0  # rot y
_GEN[5, 1, 0], _GEN[5, 0, 1] = 1.0, -1.0  # rot z


@dataclass
class Edge:
    i: int
    j: int
    T_hat: Pose
    weight: float = 1.0


@dataclass
class PoseGraph:
    ego: int
    nodes: dict[int, Pose]
    edges: list[Edge] = field(default_factory=list)
    huber_delta: float = 0.5

    def __post_init__(self):
        if self.ego not in self.nodes:
            self.nodes[self.ego] = Pose.identity()
        for e in self.edges:
            if e.i == e.j:
                raise ValueError("self-edges are not allowed")

    def connected_nodes(self) -> set[int]:
        """Nodes reachable from the ego through edges."""
        adj: dict[int, set[int]] = {}
        for e in self.edges:
            adj.setdefault(e.i, set()).add(e.j)
            adj.setdefault(e.j, set()).add(e.i)
        seen = {self.ego}
        stack = [self.ego]
        while stack:
            for n in adj.get(stack.pop(), ()):
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        return seen


@dataclass
class SolveReport:
    initial_cost: float
    final_cost: float
    iterations: int
    converged: bool
    excluded: list[int] = field(default_factory=list)


def residual(X_i: Pose, X_j: Pose, T_hat_ij: Pose) -> float:
    """Chordal residual ||T_hat_ij (X_j^-1 X_i) - I||_F^2."""
    E = T_hat_ij.matrix() @ X_j.inverse().matrix() @ X_i.matrix() - np.eye(4)
    return float(np.sum(E * E))


def _huber_weight(r2: float, delta: float) -> float:
    """IRLS weight for rho(r2) = r2 if sqrt(r2)<=delta else 2 d sqrt(r2)-d^2."""
    s = np.sqrt(max(r2, 1e-300))
    return 1.0 if s <= delta else delta / s


def solve(
    graph: PoseGraph,
    max_iters: int = 50,
    rel_tol: float = 1e-12,
) -> tuple[dict[int, Pose], SolveReport]:
    """LM over the free (non-ego) poses; ego stays pinned to identity.

    Returns optimized poses and a report. Nodes unreachable from the ego
    are excluded (listed in the report).
    """
    reachable = graph.connected_nodes()
    excluded = sorted(set(graph.nodes) - reachable)
    free = sorted(n for n in reachable if n != graph.ego)
    poses = {n: Pose(graph.nodes[n].R.copy(), graph.nodes[n].t.copy()) for n in reachable}
    poses[graph.ego] = Pose.identity()
    edges = [e for e in graph.edges if e.i in reachable and e.j in reachable]
    if not free or not edges:
        return poses, SolveReport(0.0, 0.0, 0, True, excluded)

    idx = {n: k for k, n in enumerate(free)}
    n_params = 6 * len(free)

    def robust_cost(ps: dict[int, Pose]) -> float:
        c = 0.0
        for e in edges:
            r2 = e.weight * residual(ps[e.i], ps[e.j], e.T_hat)
            s = np.sqrt(max(r2, 0.0))
            d = graph.huber_delta
            c += r2 if s <= d else 2.0 * d * s - d * d
        return c

    cost = robust_cost(poses)
    initial_cost = cost
    lam = 1e-6
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        # build normal equations with analytic Jacobians + IRLS Huber weights
        JtJ = np.zeros((n_params, n_params))
        Jtr = np.zeros(n_params)
        for e in edges:
            Ti = poses[e.i].matrix()
            Tj_inv = poses[e.j].inverse().matrix()
            Th = e.T_hat.matrix()
            M = Th @ Tj_inv @ Ti
            E = M - np.eye(4)
            r2 = e.weight * float(np.sum(E * E))
            w = e.weight * _huber_weight(r2, graph.huber_delta)
            r = E.reshape(-1)
            blocks: list[tuple[int, np.ndarray]] = []
            if e.i != graph.ego:
                # X_i <- X_i Exp(eps): dE = M G_k
                Ji = np.stack([(M @ _GEN[k]).reshape(-1) for k in range(6)], axis=1)
                blocks.append((idx[e.i], Ji))
            if e.j != graph.ego:
                # X_j <- X_j Exp(eps): dE = -Th G_k Tj_inv Ti
                Jj = np.stack(
                    [(-Th @ _GEN[k] @ Tj_inv @ Ti).reshape(-1) for k in range(6)], axis=1
                )
                blocks.append((idx[e.j], Jj))
            for bi, Jb in blocks:
                Jtr[6 * bi : 6 * bi + 6] += w * (Jb.T @ r)
                for bj, Jb2 in blocks:
                    JtJ[6 * bi : 6 * bi + 6, 6 * bj : 6 * bj + 6] += w * (Jb.T @ Jb2)

        accepted = False
        for _ in range(12):
            A = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-12))
            try:
                step = np.linalg.solve(A, -Jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = dict(poses)
            for n in free:
                k = idx[n]
                trial[n] = poses[n].compose(se3_exp(step[6 * k : 6 * k + 6])).orthonormalized()
            trial_cost = robust_cost(trial)
            if trial_cost < cost:
                poses = trial
                lam = max(lam * 0.3, 1e-12)
                accepted = True
                improvement = cost - trial_cost
                cost = trial_cost
                break
            lam *= 10.0
        if not accepted:
            converged = True  # no descent direction left
            break
        if improvement <= rel_tol * max(cost, 1e-300) or cost < 1e-24:
            converged = True
            break

    return poses, SolveReport(initial_cost, cost, it, converged, excluded)


def edges_from_filters(
    ego: int,
    estimates: dict[tuple[int, int], Pose],
    weights: dict[tuple[int, int], float] | None = None,
    huber_delta: float = 0.5,
) -> PoseGraph:
    """Build an ego-frame graph from pairwise estimates.

    estimates[(i, j)] is the pose of robot j in robot i's frame (the output
    frame of robot i's filter tracking j). Ego-observed robots initialize
    from the direct estimate; others are initialized by composing along any
    available edge path from the ego.
    """
    nodes: dict[int, Pose] = {ego: Pose.identity()}
    edges = [
        Edge(i, j, T, (weights or {}).get((i, j), 1.0)) for (i, j), T in estimates.items()
    ]
    # init by BFS composition from ego
    adj: dict[int, list[tuple[int, Pose]]] = {}
    for (i, j), T in estimates.items():
        adj.setdefault(i, []).append((j, T))
        adj.setdefault(j, []).append((i, T.inverse()))
    frontier = [ego]
    while frontier:
        cur = frontier.pop(0)
        for nb, T in adj.get(cur, ()):
            if nb not in nodes:
                nodes[nb] = nodes[cur].compose(T)
                frontier.append(nb)
    return PoseGraph(ego=ego, nodes=nodes, edges=edges, huber_delta=huber_delta)


def dump_graph(graph: PoseGraph) -> str:
    """Line-based text dump: NODE id tx ty tz qw qx qy qz / EDGE i j ... w."""
    from .geom import quat_from_rotmat

    lines = [f"EGO {graph.ego}"]
    for n in sorted(graph.nodes):
        p = graph.nodes[n]
        q = quat_from_rotmat(p.R)
        vals = " ".join(f"{x:.17g}" for x in (*p.t, *q))
        lines.append(f"NODE {n} {vals}")
    for e in graph.edges:
        q = quat_from_rotmat(e.T_hat.R)
        vals = " ".join(f"{x:.17g}" for x in (*e.T_hat.t, *q))
        lines.append(f"EDGE {e.i} {e.j} {vals} {e.weight:.17g}")
    return "\n".join(lines) + "\n"


def load_graph(text: str, huber_delta: float = 0.5) -> PoseGraph:
    from .geom import rotmat_from_quat

    ego = None
    nodes: dict[int, Pose] = {}
    edges: list[Edge] = []
    for line in text.strip().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "EGO":
            ego = int(parts[1])
        elif parts[0] == "NODE":
            n = int(parts[1])
            t = np.array([float(x) for x in parts[2:5]])
            q = np.array([float(x) for x in parts[5:9]])
            nodes[n] = Pose(rotmat_from_quat(q), t)
        elif parts[0] == "EDGE":
            i, j = int(parts[1]), int(parts[2])
            t = np.array([float(x) for x in parts[3:6]])
            q = np.array([float(x) for x in parts[6:10]])
            edges.append(Edge(i, j, Pose(rotmat_from_quat(q), t), float(parts[10])))
        else:
            raise ValueError(f"unrecognized graph line: {line!r}")
    if ego is None:
        raise ValueError("graph dump missing EGO line")
    return PoseGraph(ego=ego, nodes=nodes, edges=edges, huber_delta=huber_delta)
