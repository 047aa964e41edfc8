"""Reachable-goal searches.

Insertion/aspiration/dispensing poses leave the rotation about the pipette
shaft axis free, so infeasible nominal poses are retried with interleaved
clockwise/counter-clockwise yaw offsets.  Disposal poses are retried over a
spherical sector of an icosphere inside the tilting cone, nearest-vertical
first, with free yaw about the shaft at every tilt.
"""

from dataclasses import dataclass

import numpy as np

from .collision import collide
from .geometry import Pose, quat_from_axis_angle, sample_cone_sector

DOWNWARD = np.array(
    [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
)  # tip z-axis pointing at the table


@dataclass(frozen=True)
class GoalResult:
    pose: Pose
    q: np.ndarray
    offset: float  # yaw offset (rad) or tilt angle for disposal goals
    rejected: int  # infeasible candidates skipped before this one


def downward_tip_pose(position, yaw=0.0):
    """Vertical insertion pose: shaft pointing down, free yaw about it."""
    pose = Pose.from_matrix(
        np.block(
            [[DOWNWARD, np.asarray(position, float).reshape(3, 1)], [np.zeros((1, 3)), 1.0]]
        )
    )
    if yaw:
        pose = pose.compose(Pose(quaternion=quat_from_axis_angle((0, 0, 1), yaw)))
    return pose


def yaw_offsets(step, limit=np.pi):
    """0, +step, -step, +2 step, ... out to +/- limit."""
    if step <= 0:
        raise ValueError("step must be positive")
    offsets = [0.0]
    k = 1
    while k * step <= limit + 1e-12:
        offsets.append(k * step)
        if k * step < limit - 1e-12:  # -pi duplicates +pi
            offsets.append(-k * step)
        k += 1
    return offsets


def iter_yaw_goals(arm, scene, nominal_tip_pose, step, solver, rng=None):
    """Generator of feasible (pose, q) goals over interleaved yaw offsets.

    Each yielded GoalResult carries the cumulative count of candidates
    rejected (IK failure or collision) since the previous yield.
    """
    rejected = 0
    for offset in yaw_offsets(step):
        pose = nominal_tip_pose.compose(
            Pose(quaternion=quat_from_axis_angle((0.0, 0.0, 1.0), offset))
        )
        q = solver.solve(pose, rng=rng)
        if q is None or collide(scene, arm, q):
            rejected += 1
            continue
        yield GoalResult(pose=pose, q=q, offset=offset, rejected=rejected)
        rejected = 0


def search_reachable_yaw(arm, scene, nominal_tip_pose, step, solver, rng=None):
    """First feasible yaw variant of a nominal tip pose, or None."""
    return next(iter_yaw_goals(arm, scene, nominal_tip_pose, step, solver, rng), None)


def _pose_with_axis(position, direction, spin):
    """Tip pose whose local z-axis maps to ``direction``, spun about it."""
    z = np.array([0.0, 0.0, 1.0])
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    c = float(np.dot(z, d))
    if c > 1.0 - 1e-12:
        base = Pose(position)
    elif c < -1.0 + 1e-12:
        base = Pose(position, quat_from_axis_angle((1.0, 0.0, 0.0), np.pi))
    else:
        axis = np.cross(z, d)
        base = Pose(position, quat_from_axis_angle(axis, np.arccos(c)))
    if spin:
        return base.compose(Pose(quaternion=quat_from_axis_angle((0, 0, 1), spin)))
    return base


def iter_disposal_goals(arm, scene, cone, solver, subdivisions=2, spin_step=np.pi / 4,
                        rng=None):
    """Feasible disposal poses at the cone apex.

    The vertical seed comes first; on failure the icosphere-sector
    directions are tried nearest-vertical first, each with a sweep of spins
    about the shaft axis.
    """
    spins = yaw_offsets(spin_step)
    directions = [np.asarray(cone.axis, dtype=float)]
    for d in sample_cone_sector(cone, subdivisions):
        if np.dot(d, cone.axis) < 1.0 - 1e-9:  # skip duplicate of the seed
            directions.append(d)
    rejected = 0
    for direction in directions:
        tilt = float(np.arccos(np.clip(np.dot(direction, cone.axis), -1, 1)))
        for spin in spins:
            pose = _pose_with_axis(cone.apex, direction, spin)
            q = solver.solve(pose, rng=rng)
            if q is None or collide(scene, arm, q):
                rejected += 1
                continue
            yield GoalResult(pose=pose, q=q, offset=tilt, rejected=rejected)
            rejected = 0


def search_disposal_pose(arm, scene, cone, solver, **kw):
    """First feasible disposal pose inside the tilting cone, or None."""
    return next(iter_disposal_goals(arm, scene, cone, solver, **kw), None)
