"""6R serial-arm model with forward kinematics and damped least-squares IK.

The default arm is a generic desk-scale 6R chain with roughly 340 mm
reach, defined by a standard DH table.  Tests depend on the model's
self-consistency, not on matching any specific commercial arm.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import Pose


@dataclass(frozen=True)
class ArmModel:
    """Kinematic chain plus limits and collision capsules.

    dh: (6, 4) rows [a, alpha, d, theta_offset] (standard DH).
    tool: flange-to-shaft-tip transform.
    capsules: per-link collision capsules as (link_index, p0, p1, radius)
    with endpoints in that link's frame (link 0 = base).
    """

    dh: np.ndarray
    limits_lower: np.ndarray
    limits_upper: np.ndarray
    max_velocity: np.ndarray
    max_acceleration: np.ndarray
    tool: Pose
    capsules: tuple = ()

    def __post_init__(self):
        dh = np.asarray(self.dh, dtype=float).reshape(6, 4).copy()
        dh.flags.writeable = False
        object.__setattr__(self, "dh", dh)
        for name in ("limits_lower", "limits_upper", "max_velocity", "max_acceleration"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(6).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.any(self.limits_lower >= self.limits_upper):
            raise ValueError("joint limits must satisfy lower < upper")
        if np.any(self.max_velocity <= 0) or np.any(self.max_acceleration <= 0):
            raise ValueError("velocity/acceleration limits must be positive")
        object.__setattr__(self, "_tool_mat", self.tool.matrix())
        self._pack_capsules()

    def _pack_capsules(self):
        n = len(self.capsules)
        link = np.zeros(n, dtype=np.int64)
        p0 = np.zeros((n, 3))
        p1 = np.zeros((n, 3))
        rad = np.zeros(n)
        for i, (l, a, b, r) in enumerate(self.capsules):
            link[i] = l
            p0[i] = a
            p1[i] = b
            rad[i] = r
        pairs_i, pairs_j = [], []
        for i in range(n):
            for j in range(i + 1, n):
                if abs(link[i] - link[j]) >= 2:
                    pairs_i.append(i)
                    pairs_j.append(j)
        for arr in (link, p0, p1, rad):
            arr.flags.writeable = False
        object.__setattr__(self, "cap_link", link)
        object.__setattr__(self, "cap_p0", p0)
        object.__setattr__(self, "cap_p1", p1)
        object.__setattr__(self, "cap_r", rad)
        object.__setattr__(self, "self_i", np.array(pairs_i, dtype=np.int64))
        object.__setattr__(self, "self_j", np.array(pairs_j, dtype=np.int64))

    def within_limits(self, q):
        q = np.asarray(q, dtype=float)
        return bool(
            np.all(q >= self.limits_lower - 1e-9) and np.all(q <= self.limits_upper + 1e-9)
        )

    def clamp(self, q):
        return np.clip(q, self.limits_lower, self.limits_upper)

    def random_config(self, rng):
        return rng.uniform(self.limits_lower, self.limits_upper)


def fk(arm, q):
    """Forward kinematics: dict with 'flange' and 'tip' poses."""
    frames = kernels.fk_frames(arm.dh, np.asarray(q, dtype=float), arm._tool_mat)
    return {
        "flange": Pose.from_matrix(frames[6]),
        "tip": Pose.from_matrix(frames[7]),
    }


def fk_tip_matrix(arm, q):
    return kernels.fk_frames(arm.dh, np.asarray(q, dtype=float), arm._tool_mat)[7]


def ik(arm, target, seed, max_iters=200, damping=1e-3, pos_tol=1e-6, rot_tol=1e-5,
       restarts=5, rng=None):
    """Damped least-squares IK for a tip pose.

    Returns a joint vector or None.  Seeds beyond the first are drawn from
    ``rng`` (deterministic for a fixed generator) within joint limits.
    """
    target_mat = target.matrix() if isinstance(target, Pose) else np.asarray(target, float)
    seed = np.asarray(seed, dtype=float)
    attempts = [seed]
    if restarts > 1:
        gen = rng if rng is not None else np.random.default_rng(0)
        for _ in range(restarts - 1):
            attempts.append(gen.uniform(arm.limits_lower, arm.limits_upper))
    for q0 in attempts:
        q, status = kernels.ik_dls(
            arm.dh, arm._tool_mat, arm.limits_lower, arm.limits_upper,
            target_mat, q0, max_iters, damping, pos_tol, rot_tol,
        )
        if status == 0:
            return q
    return None


class SeedLibrary:
    """Nearest-seed IK strategy: a fixed library of configurations whose
    tip poses are matched against the target before random restarts.

    Matching blends position distance with an orientation term, since
    orientation mismatch is what traps the damped-least-squares iteration
    in local minima.
    """

    def __init__(self, arm, size=128, seed=12345, rot_weight=0.08):
        rng = np.random.default_rng(seed)
        self.arm = arm
        self.rot_weight = rot_weight
        self.configs = np.array([arm.random_config(rng) for _ in range(size)])
        mats = np.array([fk_tip_matrix(arm, q) for q in self.configs])
        self.tips = mats[:, :3, 3].copy()
        self.rots = mats[:, :3, :3].copy()

    def _ranked_seeds(self, target_mat, top_k):
        pos_d2 = np.sum((self.tips - target_mat[:3, 3]) ** 2, axis=1)
        # rotation angle via trace of R_seed^T R_target
        tr = np.einsum("nij,ij->n", self.rots, target_mat[:3, :3])
        ang = np.arccos(np.clip((tr - 1.0) * 0.5, -1.0, 1.0))
        score = np.sqrt(pos_d2) + self.rot_weight * ang
        return [self.configs[i] for i in np.argsort(score)[:top_k]]

    def solve(self, target, extra_seed=None, top_k=6, restarts=48, rng=None, **kw):
        target_mat = target.matrix() if isinstance(target, Pose) else np.asarray(target, float)
        seeds = self._ranked_seeds(target_mat, top_k)
        if extra_seed is not None:
            seeds.insert(0, np.asarray(extra_seed, dtype=float))
        for q0 in seeds:
            sol = ik(self.arm, target_mat, q0, restarts=1, **kw)
            if sol is not None:
                return sol
        return ik(
            self.arm, target_mat, seeds[0], restarts=restarts,
            rng=rng if rng is not None else np.random.default_rng(7), **kw,
        )


def default_arm():
    """Desk-scale 6R arm (~0.34 m reach) with a side-offset pipette tool."""
    dh = np.array(
        [
            # a,     alpha,      d,      theta_offset
            [0.000, np.pi / 2, 0.155, 0.0],
            [0.165, 0.0, 0.000, np.pi / 2],
            [0.012, np.pi / 2, 0.000, 0.0],
            [0.000, -np.pi / 2, 0.165, 0.0],
            [0.000, np.pi / 2, 0.000, 0.0],
            [0.000, 0.0, 0.070, 0.0],
        ]
    )
    deg = np.pi / 180.0
    limits_lower = np.array([-150, -60, -140, -170, -120, -170]) * deg
    limits_upper = np.array([150, 100, 140, 170, 120, 170]) * deg
    max_velocity = np.array([2.0, 1.6, 2.4, 3.0, 3.0, 4.0])
    max_acceleration = np.array([8.0, 6.0, 8.0, 10.0, 10.0, 12.0])
    # pipette shaft hangs 0.13 m below the flange, offset 0.03 m sideways
    tool = Pose(position=(0.03, 0.0, 0.13))
    capsules = (
        (0, (0.0, 0.0, 0.055), (0.0, 0.0, 0.145), 0.045),
        (2, (0.0, 0.0, 0.0), (-0.165, 0.0, 0.0), 0.040),
        (4, (0.0, 0.0, -0.12), (0.0, 0.0, 0.0), 0.035),
        (6, (0.0, 0.0, 0.0), (0.0, 0.0, 0.035), 0.030),
        # pipette body and shaft below the flange
        (6, (0.03, 0.0, 0.045), (0.03, 0.0, 0.10), 0.020),
        (6, (0.03, 0.0, 0.10), (0.03, 0.0, 0.128), 0.004),
    )
    return ArmModel(
        dh=dh,
        limits_lower=limits_lower,
        limits_upper=limits_upper,
        max_velocity=max_velocity,
        max_acceleration=max_acceleration,
        tool=tool,
        capsules=capsules,
    )
