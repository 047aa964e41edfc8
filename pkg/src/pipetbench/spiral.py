"""Hexagonal spiral lattice of deviation classes.

The lattice tiles the plane around the aligned position with equilateral
triangles of edge ``L``.  Node 0 is perfect alignment; rings of 6*r nodes
wrap outward counter-clockwise starting from the +x axis.  Classifying a
planar offset to its nearest node leaves a residual of at most L*sqrt(3)/3,
so choosing L = sqrt(3) * e keeps the residual within the acceptable
insertion error e.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

SQRT3 = np.sqrt(3.0)

# axial step directions for a counter-clockwise ring walk starting at (+r, 0)
_RING_STEPS = ((-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1))


class SpiralConfigError(ValueError):
    pass


def _axial_to_xy(a, b, edge):
    # basis: u = (1, 0), v = (1/2, sqrt(3)/2)
    return np.array([edge * (a + 0.5 * b), edge * (SQRT3 / 2.0) * b])


def _spiral_axial(rings):
    coords = [(0, 0)]
    for r in range(1, rings + 1):
        a, b = r, 0
        for da, db in _RING_STEPS:
            for _ in range(r):
                coords.append((a, b))
                a += da
                b += db
        # the walk ends back at (r, 0), already emitted as the ring start
    return coords


@dataclass(frozen=True)
class SpiralLattice:
    edge_length: float
    rings: int
    acceptable_residual: float
    tip_pitch: float
    nodes: np.ndarray = field(repr=False)
    axial: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nodes.flags.writeable = False
        self.axial.flags.writeable = False

    def __len__(self):
        return len(self.nodes)

    @property
    def node_count(self):
        return len(self.nodes)

    def in_coverage(self, offset):
        """True when ``offset`` lies inside the outer hexagon, i.e. within
        the triangulated region where the residual bound holds."""
        x, y = float(offset[0]), float(offset[1])
        inradius = self.rings * self.edge_length * (SQRT3 / 2.0)
        # edge normals of the hexagon with corners on the +x axis
        for ang in (np.pi / 6.0, np.pi / 2.0, 5.0 * np.pi / 6.0):
            if abs(x * np.cos(ang) + y * np.sin(ang)) > inradius + 1e-12:
                return False
        return True

    def nearest_class(self, offset):
        """Class ID of the nearest node; ties go to the lowest ID."""
        d2 = np.sum((self.nodes - np.asarray(offset, dtype=float)) ** 2, axis=1)
        return int(np.argmin(d2))

    def classify(self, offset):
        """(class_id, in_coverage) for a planar offset in meters."""
        return self.nearest_class(offset), self.in_coverage(offset)

    def classify_many(self, offsets):
        """Vectorized nearest-node classification for an (n, 2) array."""
        offsets = np.asarray(offsets, dtype=float)
        ids = np.empty(len(offsets), dtype=np.int64)
        chunk = 8192
        for lo in range(0, len(offsets), chunk):
            block = offsets[lo : lo + chunk]
            d2 = (
                np.sum(block ** 2, axis=1)[:, None]
                - 2.0 * block @ self.nodes.T
                + np.sum(self.nodes ** 2, axis=1)[None, :]
            )
            ids[lo : lo + len(block)] = np.argmin(d2, axis=1)
        return ids

    def correction_vector(self, class_id):
        """Planar move that brings a point classified as ``class_id`` back
        to within max_residual of the origin."""
        if not 0 <= class_id < len(self.nodes):
            raise ValueError(f"unknown class id {class_id}")
        return -self.nodes[class_id].copy()

    def max_residual(self):
        return self.edge_length * SQRT3 / 3.0

    def hop_distance(self, i, j):
        """Lattice hops between two classes (hex graph distance)."""
        da = self.axial[i, 0] - self.axial[j, 0]
        db = self.axial[i, 1] - self.axial[j, 1]
        return int((abs(da) + abs(db) + abs(da + db)) // 2)

    def neighbors_within(self, class_id, hops):
        """Class IDs within ``hops`` lattice steps of ``class_id`` (excluded)."""
        da = self.axial[:, 0] - self.axial[class_id, 0]
        db = self.axial[:, 1] - self.axial[class_id, 1]
        dist = (np.abs(da) + np.abs(db) + np.abs(da + db)) // 2
        ids = np.nonzero((dist > 0) & (dist <= hops))[0]
        return ids

    def to_csv(self, path):
        """Write (class_id, x_mm, y_mm) rows for plotting."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class_id", "x_mm", "y_mm"])
            for i, (x, y) in enumerate(self.nodes):
                writer.writerow([i, f"{x * 1e3:.9g}", f"{y * 1e3:.9g}"])


def expected_node_count(rings):
    return 3 * rings * (rings + 1) + 1


def build_lattice(acceptable_residual, tip_pitch, edge_length=None):
    """Build the deviation-class lattice for a given residual budget and
    tip pitch (both meters).

    The edge defaults to sqrt(3) * residual, the largest admissible value;
    the ring count is floor(pitch / (2 * sqrt(3) * residual)).
    """
    if acceptable_residual <= 0 or tip_pitch <= 0:
        raise SpiralConfigError("residual and pitch must be positive")
    if edge_length is None:
        edge_length = SQRT3 * acceptable_residual
    elif edge_length <= 0:
        raise SpiralConfigError("edge length must be positive")
    elif edge_length > SQRT3 * acceptable_residual + 1e-12:
        raise SpiralConfigError("edge length exceeds the residual guarantee")
    rings = int(tip_pitch // (2.0 * edge_length))
    if rings < 1:
        raise SpiralConfigError(
            "configuration yields zero rings; use single_node_lattice instead"
        )
    axial = np.array(_spiral_axial(rings), dtype=np.int64)
    nodes = np.array([_axial_to_xy(a, b, edge_length) for a, b in axial])
    return SpiralLattice(
        edge_length=edge_length,
        rings=rings,
        acceptable_residual=acceptable_residual,
        tip_pitch=tip_pitch,
        nodes=nodes,
        axial=axial,
    )


def single_node_lattice(acceptable_residual, tip_pitch):
    """Degenerate one-class lattice for callers that opt out of rings."""
    return SpiralLattice(
        edge_length=SQRT3 * acceptable_residual,
        rings=0,
        acceptable_residual=acceptable_residual,
        tip_pitch=tip_pitch,
        nodes=np.zeros((1, 2)),
        axial=np.zeros((1, 2), dtype=np.int64),
    )
