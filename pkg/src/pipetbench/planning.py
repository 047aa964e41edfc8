"""Joint-space planning pipeline: RRT-Connect, shortcut pruning, and
time parameterization under joint velocity/acceleration limits.

Optimal planners are deliberately out: a feasible path found fast, pruned,
and time-parameterized covers the dispensing cycle at a fraction of the
planning cost.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .collision import collide, segment_collides


@dataclass
class PlannerParams:
    edge_step: float = 0.05        # max per-joint interpolation step (rad)
    extend_step: float = 0.3       # RRT extension step (euclidean, rad)
    max_iters: int = 10_000        # extension budget
    prune_attempts: int = 200
    topp_samples: int = 100
    max_goal_retries: int = 5
    seed: int = 0


@dataclass(frozen=True)
class Path:
    waypoints: np.ndarray  # (n, 6)

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[0] < 2 or wp.shape[1] != 6:
            raise ValueError("path needs at least two 6-dof waypoints")
        wp = wp.copy()
        wp.flags.writeable = False
        object.__setattr__(self, "waypoints", wp)

    def arc_length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))


@dataclass(frozen=True)
class Trajectory:
    """Sampled time law along a geometric path."""

    times: np.ndarray          # (n,) strictly increasing, starts at 0
    positions: np.ndarray      # (n, 6)
    velocities: np.ndarray     # (n, 6)
    accelerations: np.ndarray  # (n, 6)

    @property
    def duration(self):
        return float(self.times[-1]) if len(self.times) else 0.0

    def sample_uniform(self, dt):
        """Linear resampling onto a uniform grid (for validators/export)."""
        if self.duration == 0.0:
            return (
                np.array([0.0]),
                self.positions[:1].copy(),
                np.zeros((1, 6)),
                np.zeros((1, 6)),
            )
        ts = np.arange(0.0, self.duration + dt / 2, dt)
        ts[-1] = min(ts[-1], self.duration)
        pos = np.empty((len(ts), 6))
        vel = np.empty((len(ts), 6))
        acc = np.empty((len(ts), 6))
        for j in range(6):
            pos[:, j] = np.interp(ts, self.times, self.positions[:, j])
            vel[:, j] = np.interp(ts, self.times, self.velocities[:, j])
            acc[:, j] = np.interp(ts, self.times, self.accelerations[:, j])
        return ts, pos, vel, acc

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["t"]
                + [f"q{i}" for i in range(1, 7)]
                + [f"v{i}" for i in range(1, 7)]
                + [f"a{i}" for i in range(1, 7)]
            )
            for i, t in enumerate(self.times):
                row = [f"{t:.9g}"]
                row += [f"{v:.9g}" for v in self.positions[i]]
                row += [f"{v:.9g}" for v in self.velocities[i]]
                row += [f"{v:.9g}" for v in self.accelerations[i]]
                writer.writerow(row)


# ---------------------------------------------------------------------------
# RRT-Connect


class _Tree:
    def __init__(self, root):
        self.nodes = [np.asarray(root, dtype=float)]
        self.parents = [-1]

    def nearest(self, q):
        arr = np.asarray(self.nodes)
        return int(np.argmin(np.sum((arr - q) ** 2, axis=1)))

    def add(self, q, parent):
        self.nodes.append(q)
        self.parents.append(parent)
        return len(self.nodes) - 1

    def path_to_root(self, idx):
        out = []
        while idx >= 0:
            out.append(self.nodes[idx])
            idx = self.parents[idx]
        return out


def _steer(q_from, q_to, step):
    d = q_to - q_from
    n = np.linalg.norm(d)
    if n <= step:
        return q_to.copy(), True
    return q_from + d * (step / n), False


def rrt_connect(scene, arm, start, goal, params=None, rng=None):
    """Collision-free joint path between two configurations, or None.

    Deterministic for a fixed seed; every returned edge has been checked
    at ``params.edge_step`` resolution.
    """
    params = params or PlannerParams()
    rng = rng or np.random.default_rng(params.seed)
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if collide(scene, arm, start) or collide(scene, arm, goal):
        return None
    if np.allclose(start, goal):
        return Path(np.vstack([start, goal]))
    if not segment_collides(scene, arm, start, goal, params.edge_step):
        return Path(np.vstack([start, goal]))

    ta, tb = _Tree(start), _Tree(goal)
    a_is_start = True
    for _ in range(params.max_iters):
        q_rand = rng.uniform(arm.limits_lower, arm.limits_upper)
        # extend tree A toward the sample
        ni = ta.nearest(q_rand)
        q_new, _ = _steer(ta.nodes[ni], q_rand, params.extend_step)
        if segment_collides(scene, arm, ta.nodes[ni], q_new, params.edge_step):
            ta, tb = tb, ta
            a_is_start = not a_is_start
            continue
        ai = ta.add(q_new, ni)
        # greedily connect tree B to the new node
        bi = tb.nearest(q_new)
        while True:
            q_step, reached = _steer(tb.nodes[bi], q_new, params.extend_step)
            if segment_collides(scene, arm, tb.nodes[bi], q_step, params.edge_step):
                break
            bi = tb.add(q_step, bi)
            if reached:
                pa = ta.path_to_root(ai)[::-1]
                pb = tb.path_to_root(bi)
                if a_is_start:
                    waypoints = pa + pb[1:]
                else:
                    waypoints = pb[::-1] + pa[::-1][1:]
                return Path(np.asarray(waypoints))
        ta, tb = tb, ta
        a_is_start = not a_is_start
    return None


def prune(scene, arm, path, params=None, rng=None):
    """Shortcut pruning: repeatedly try to bridge two random waypoints with
    a straight collision-free segment.  Never lengthens the path."""
    params = params or PlannerParams()
    rng = rng or np.random.default_rng(params.seed)
    waypoints = [w for w in path.waypoints]
    for _ in range(params.prune_attempts):
        n = len(waypoints)
        if n <= 2:
            break
        i = int(rng.integers(0, n - 2))
        j = int(rng.integers(i + 2, n))
        if segment_collides(scene, arm, waypoints[i], waypoints[j], params.edge_step):
            continue
        waypoints = waypoints[: i + 1] + waypoints[j:]
    return Path(np.asarray(waypoints))


# ---------------------------------------------------------------------------
# time parameterization


def _path_samples(path, total_samples):
    """Discretize a piecewise-linear path: sample positions, directions,
    arc steps, and corner flags."""
    wp = path.waypoints
    seg_vec = np.diff(wp, axis=0)
    seg_len = np.linalg.norm(seg_vec, axis=1)
    keep = seg_len > 1e-12
    if not np.any(keep):
        return None
    seg_vec = seg_vec[keep]
    seg_len = seg_len[keep]
    starts = wp[:-1][keep]
    total = float(seg_len.sum())
    positions = [starts[0]]
    directions = []
    corner = [True]  # start at rest
    for k, (vec, ln) in enumerate(zip(seg_vec, seg_len)):
        n = max(2, int(round(total_samples * ln / total)) + 1)
        u = vec / ln
        ts = np.linspace(0.0, 1.0, n)[1:]
        for t in ts:
            positions.append(starts[k] + vec * t)
            directions.append(u)
        corner.extend([False] * (len(ts) - 1))
        corner.append(True)  # stop at each geometric corner / the end
    ds = np.array(
        [np.linalg.norm(positions[i + 1] - positions[i]) for i in range(len(positions) - 1)]
    )
    return (
        np.asarray(positions),
        np.asarray(directions),
        ds,
        np.asarray(corner, dtype=bool),
    )


def parameterize(path, arm, samples=None, params=None):
    """Time-optimal traversal of a piecewise-linear joint path.

    Per path sample the speed cap is min_j vmax_j/|u_j| and the path
    acceleration cap min_j amax_j/|u_j|; a forward/backward pass yields the
    fastest profile with rest at both ends and at geometric corners.
    """
    if samples is None:
        samples = (params or PlannerParams()).topp_samples
    sampled = _path_samples(path, samples)
    if sampled is None:
        q0 = path.waypoints[0]
        return Trajectory(
            times=np.array([0.0]),
            positions=q0[None, :].copy(),
            velocities=np.zeros((1, 6)),
            accelerations=np.zeros((1, 6)),
        )
    positions, directions, ds, corner = sampled
    n = len(positions)
    v_cap = np.empty(n)
    a_cap = np.empty(n - 1)
    for i in range(n - 1):
        u = np.abs(directions[i])
        nz = u > 1e-12
        v_cap[i + 1] = np.min(arm.max_velocity[nz] / u[nz])
        a_cap[i] = np.min(arm.max_acceleration[nz] / u[nz])
    v_cap[0] = v_cap[1]
    v = kernels.velocity_profile(ds, v_cap, a_cap, corner)
    times = np.empty(n)
    times[0] = 0.0
    for i in range(n - 1):
        if ds[i] < 1e-15:
            times[i + 1] = times[i]
        else:
            times[i + 1] = times[i] + 2.0 * ds[i] / max(v[i] + v[i + 1], 1e-12)
    velocities = np.zeros((n, 6))
    accelerations = np.zeros((n, 6))
    for i in range(n):
        u = directions[min(i, n - 2)]
        velocities[i] = u * v[i]
    for i in range(n - 1):
        sdd = (v[i + 1] ** 2 - v[i] ** 2) / (2.0 * ds[i]) if ds[i] > 1e-15 else 0.0
        accelerations[i] = directions[i] * sdd
    # strictly increasing time grid: drop duplicated samples at corners
    keep = np.concatenate([[True], np.diff(times) > 1e-12])
    return Trajectory(
        times=times[keep],
        positions=positions[keep],
        velocities=velocities[keep],
        accelerations=accelerations[keep],
    )


# ---------------------------------------------------------------------------
# dispense-cycle orchestration

SEGMENT_NAMES = ("i->ii", "ii->iii", "iii->iv", "iv->v")


@dataclass
class CycleResult:
    ok: bool
    trajectories: list = field(default_factory=list)
    failed_segment: str = ""
    goal_retries: dict = field(default_factory=dict)
    rejected_candidates: int = 0

    @property
    def total_duration(self):
        return sum(t.duration for t in self.trajectories)


def plan_dispense_cycle(scene, arm, goal_iterators, params=None, rng=None):
    """Plan the five-goal dispensing cycle (initial, attach, aspirate,
    dispense, dispose) as four trajectories.

    ``goal_iterators`` holds five iterators yielding goal candidates with
    ``q`` and ``rejected`` attributes; the first is typically a single
    fixed start configuration.  When a segment cannot be planned, the
    segment's far goal is invalidated and its iterator advanced, up to
    ``max_goal_retries`` new candidates per goal.
    """
    params = params or PlannerParams()
    rng = rng or np.random.default_rng(params.seed)
    if len(goal_iterators) != 5:
        raise ValueError("the dispense cycle needs exactly five goal iterators")
    iterators = [iter(it) for it in goal_iterators]
    goals = []
    rejected = 0
    retries = {name: 0 for name in SEGMENT_NAMES}
    for k, it in enumerate(iterators):
        g = next(it, None)
        if g is None:
            seg = SEGMENT_NAMES[max(k - 1, 0)]
            return CycleResult(False, [], seg, retries, rejected)
        rejected += getattr(g, "rejected", 0)
        goals.append(g)

    trajectories = []
    seg = 0
    while seg < 4:
        name = SEGMENT_NAMES[seg]
        path = rrt_connect(scene, arm, goals[seg].q, goals[seg + 1].q, params, rng)
        if path is None:
            nxt = next(iterators[seg + 1], None)
            retries[name] += 1
            if nxt is None or retries[name] > params.max_goal_retries:
                return CycleResult(False, trajectories, name, retries, rejected)
            rejected += getattr(nxt, "rejected", 0)
            goals[seg + 1] = nxt
            continue
        path = prune(scene, arm, path, params, rng)
        trajectories.append(parameterize(path, arm, params=params))
        seg += 1
    return CycleResult(True, trajectories, "", retries, rejected)
