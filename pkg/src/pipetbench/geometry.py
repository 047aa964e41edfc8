"""Rigid-body math and direction sampling shared by the rest of the package.

Rotations are stored as unit quaternions (w, x, y, z); matrices are derived
on demand.  All values are immutable after construction.  Units are meters
and radians.
"""

from dataclasses import dataclass, field

import numpy as np


def _as_vec3(v):
    a = np.asarray(v, dtype=float).reshape(3).copy()
    a.flags.writeable = False
    return a


def quat_normalize(q):
    q = np.asarray(q, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise ValueError("zero-norm quaternion")
    return q / n


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_rotate(q, v):
    w, x, y, z = q
    # v' = v + 2 u x (u x v + w v), u = (x, y, z)
    u = np.array([x, y, z])
    t = 2.0 * np.cross(u, v)
    return np.asarray(v, dtype=float) + w * t + np.cross(u, t)


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(rot):
    rot = np.asarray(rot, dtype=float)
    tr = rot[0, 0] + rot[1, 1] + rot[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        w = 0.25 * s
        x = (rot[2, 1] - rot[1, 2]) / s
        y = (rot[0, 2] - rot[2, 0]) / s
        z = (rot[1, 0] - rot[0, 1]) / s
    elif rot[0, 0] > rot[1, 1] and rot[0, 0] > rot[2, 2]:
        s = np.sqrt(1.0 + rot[0, 0] - rot[1, 1] - rot[2, 2]) * 2
        w = (rot[2, 1] - rot[1, 2]) / s
        x = 0.25 * s
        y = (rot[0, 1] + rot[1, 0]) / s
        z = (rot[0, 2] + rot[2, 0]) / s
    elif rot[1, 1] > rot[2, 2]:
        s = np.sqrt(1.0 + rot[1, 1] - rot[0, 0] - rot[2, 2]) * 2
        w = (rot[0, 2] - rot[2, 0]) / s
        x = (rot[0, 1] + rot[1, 0]) / s
        y = 0.25 * s
        z = (rot[1, 2] + rot[2, 1]) / s
    else:
        s = np.sqrt(1.0 + rot[2, 2] - rot[0, 0] - rot[1, 1]) * 2
        w = (rot[1, 0] - rot[0, 1]) / s
        x = (rot[0, 2] + rot[2, 0]) / s
        y = (rot[1, 2] + rot[2, 1]) / s
        z = 0.25 * s
    return quat_normalize([w, x, y, z])


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise ValueError("zero-norm rotation axis")
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotate by ``quaternion`` then translate by ``position``."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position))
        q = quat_normalize(self.quaternion)
        q.flags.writeable = False
        object.__setattr__(self, "quaternion", q)

    @staticmethod
    def identity():
        return Pose()

    @staticmethod
    def from_matrix(mat):
        mat = np.asarray(mat, dtype=float)
        return Pose(mat[:3, 3], quat_from_matrix(mat[:3, :3]))

    @staticmethod
    def from_axis_angle(axis, angle, position=(0.0, 0.0, 0.0)):
        return Pose(position, quat_from_axis_angle(axis, angle))

    @staticmethod
    def from_yaw(yaw, position=(0.0, 0.0, 0.0)):
        return Pose.from_axis_angle((0.0, 0.0, 1.0), yaw, position)

    def matrix(self):
        mat = np.eye(4)
        mat[:3, :3] = quat_to_matrix(self.quaternion)
        mat[:3, 3] = self.position
        return mat

    def rotation_matrix(self):
        return quat_to_matrix(self.quaternion)

    def compose(self, other):
        """self applied after other's frame: (self ∘ other)(p) = self(other(p))."""
        pos = self.position + quat_rotate(self.quaternion, other.position)
        return Pose(pos, quat_mul(self.quaternion, other.quaternion))

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self):
        w, x, y, z = self.quaternion
        inv_q = np.array([w, -x, -y, -z])
        return Pose(-quat_rotate(inv_q, self.position), inv_q)

    def apply(self, point):
        return quat_rotate(self.quaternion, np.asarray(point, dtype=float)) + self.position

    def yaw(self):
        rot = self.rotation_matrix()
        return float(np.arctan2(rot[1, 0], rot[0, 0]))


def compose(a, b):
    return a.compose(b)


@dataclass(frozen=True)
class ConeSpec:
    """Tilting cone for disposal-pose sampling: directions within
    ``half_angle`` of ``axis``, measured from ``apex``."""

    apex: np.ndarray
    axis: np.ndarray
    half_angle: float

    def __post_init__(self):
        object.__setattr__(self, "apex", _as_vec3(self.apex))
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if abs(n - 1.0) > 1e-9:
            raise ValueError("cone axis must be a unit vector")
        axis = axis / n
        axis.flags.writeable = False
        object.__setattr__(self, "axis", axis)
        if not 0.0 < self.half_angle < np.pi / 2:
            raise ValueError("half_angle must lie in (0, pi/2)")

    def contains(self, direction):
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return float(np.dot(d, self.axis)) >= np.cos(self.half_angle) - 1e-12


def icosphere_vertices(subdivisions):
    """Unit-sphere vertices of a subdivided icosahedron: 10*4^k + 2 points."""
    if not 0 <= subdivisions <= 4:
        raise ValueError("subdivisions must be in [0, 4]")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        midpoint = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_faces = []
        for (a, b, c) in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts)


def sample_icosphere_sector(axis, half_angle, subdivisions=2):
    """Deterministic unit directions within ``half_angle`` of ``axis``.

    Vertices of the subdivided icosahedron filtered to the spherical
    sector, ordered by increasing tilt from the axis (azimuth breaks
    ties).  May be empty when the sector is too narrow for the chosen
    subdivision level.
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    if not 0.0 < half_angle <= np.pi:
        raise ValueError("half_angle must lie in (0, pi]")
    verts = icosphere_vertices(subdivisions)
    dots = verts @ axis
    keep = dots >= np.cos(half_angle) - 1e-12
    verts = verts[keep]
    dots = np.clip(dots[keep], -1.0, 1.0)
    # azimuth measured in a frame orthogonal to the axis
    ref = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(ref, axis)) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    az = np.arctan2(verts @ v, verts @ u)
    order = np.lexsort((az, np.arccos(dots)))
    return verts[order]


def sample_cone_sector(cone, subdivisions=2):
    return sample_icosphere_sector(cone.axis, cone.half_angle, subdivisions)
