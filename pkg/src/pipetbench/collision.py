"""Primitive-based collision checking for the tabletop scene.

Scenes hold oriented boxes and vertical cylinders; robot links carry
capsules.  Cylinders are checked as capsules with the same axis segment
and radius, which encloses the cylinder (conservative at the flat ends).
Pair tests are exact for box/box, box/capsule, and capsule/capsule.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import Pose


@dataclass(frozen=True)
class BoxPrimitive:
    pose: Pose
    size: np.ndarray  # full extents (x, y, z)

    def __post_init__(self):
        size = np.asarray(self.size, dtype=float).reshape(3).copy()
        if np.any(size <= 0):
            raise ValueError("box dimensions must be positive")
        size.flags.writeable = False
        object.__setattr__(self, "size", size)


@dataclass(frozen=True)
class CylinderPrimitive:
    """Vertical cylinder: axis along +z from base center."""

    base_center: np.ndarray
    radius: float
    height: float

    def __post_init__(self):
        c = np.asarray(self.base_center, dtype=float).reshape(3).copy()
        c.flags.writeable = False
        object.__setattr__(self, "base_center", c)
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("cylinder dimensions must be positive")


@dataclass
class Scene:
    """Static primitives; packed arrays are built lazily and cached."""

    boxes: list = field(default_factory=list)
    cylinders: list = field(default_factory=list)

    def __post_init__(self):
        self._packed = None

    def add_box(self, center, size, yaw=0.0, pose=None):
        if pose is None:
            pose = Pose.from_yaw(yaw, center)
        self.boxes.append(BoxPrimitive(pose, size))
        self._packed = None
        return self

    def add_cylinder(self, base_center, radius, height):
        self.cylinders.append(CylinderPrimitive(base_center, radius, height))
        self._packed = None
        return self

    def packed(self):
        if self._packed is None:
            nb = len(self.boxes)
            box_c = np.zeros((nb, 3))
            box_r = np.zeros((nb, 3, 3))
            box_h = np.zeros((nb, 3))
            for i, b in enumerate(self.boxes):
                box_c[i] = b.pose.position
                box_r[i] = b.pose.rotation_matrix()
                box_h[i] = b.size / 2.0
            nc = len(self.cylinders)
            cap_p0 = np.zeros((nc, 3))
            cap_p1 = np.zeros((nc, 3))
            cap_r = np.zeros(nc)
            for i, c in enumerate(self.cylinders):
                cap_p0[i] = c.base_center
                cap_p1[i] = c.base_center + np.array([0.0, 0.0, c.height])
                cap_r[i] = c.radius
            self._packed = (box_c, box_r, box_h, cap_p0, cap_p1, cap_r)
        return self._packed


def collide(scene, arm, q):
    """True when the arm at configuration q hits the scene or itself."""
    box_c, box_r, box_h, cap_p0, cap_p1, cap_r = scene.packed()
    return bool(
        kernels.config_collides(
            arm.dh, arm._tool_mat, np.asarray(q, dtype=float),
            arm.cap_link, arm.cap_p0, arm.cap_p1, arm.cap_r,
            arm.self_i, arm.self_j,
            box_c, box_r, box_h, cap_p0, cap_p1, cap_r,
        )
    )


def segment_collides(scene, arm, qa, qb, step=0.05):
    """Collision check of a straight joint-space segment at per-joint
    resolution ``step`` (radians)."""
    box_c, box_r, box_h, cap_p0, cap_p1, cap_r = scene.packed()
    return bool(
        kernels.edge_collides(
            arm.dh, arm._tool_mat,
            np.asarray(qa, dtype=float), np.asarray(qb, dtype=float), step,
            arm.cap_link, arm.cap_p0, arm.cap_p1, arm.cap_r,
            arm.self_i, arm.self_j,
            box_c, box_r, box_h, cap_p0, cap_p1, cap_r,
        )
    )


def capsule_hits_box(p0, p1, radius, box):
    """Standalone capsule-vs-box test (used directly by tests)."""
    return bool(
        kernels.capsule_box_overlap(
            np.asarray(p0, float), np.asarray(p1, float), radius,
            box.pose.position, box.pose.rotation_matrix(), box.size / 2.0,
        )
    )


def boxes_overlap(a, b):
    return bool(
        kernels.box_box_overlap(
            a.pose.position, a.pose.rotation_matrix(), a.size / 2.0,
            b.pose.position, b.pose.rotation_matrix(), b.size / 2.0,
        )
    )
