"""Racks, teach-point pose fitting, and tip-availability combinatorics.

A 96-tip rack is an 8x12 grid with 9 mm pitch.  Its pose is estimated from
hand-guided teach samples along the long edge (rack assumed flat on the
table, so the fit recovers x, y, z and yaw only).  The availability
enumeration reproduces the neighbor-pattern counts that size the
classifier's training set: 296 raw patterns, 110 after identifying
quarter-turn rotations, and 16 under the corner-start picking routine.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose

# neighbor directions in mask order, as (row, col) offsets
NEIGHBOR_ORDER = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
_OFFSETS = {
    "N": (-1, 0), "NE": (-1, 1), "E": (0, 1), "SE": (1, 1),
    "S": (1, 0), "SW": (1, -1), "W": (0, -1), "NW": (-1, -1),
}

OCCUPIED = "O"
EMPTY = "E"
ABSENT_BY_EDGE = "X"


@dataclass(frozen=True)
class NeighborMask:
    """Tri-state occupancy of the eight slots around a target."""

    states: tuple

    def __post_init__(self):
        if len(self.states) != 8 or any(
            s not in (OCCUPIED, EMPTY, ABSENT_BY_EDGE) for s in self.states
        ):
            raise ValueError("mask needs 8 states drawn from O/E/X")

    def __str__(self):
        return "".join(self.states)

    def occupied_bits(self):
        """Availability as 8 bits in mask order; absent-by-edge counts as
        unavailable."""
        return tuple(1 if s == OCCUPIED else 0 for s in self.states)

    def count(self, state):
        return self.states.count(state)


@dataclass(frozen=True)
class TeachSample:
    """A tip position recorded by hand-guiding the robot to a slot."""

    recorded_position: np.ndarray
    slot_index: tuple
    noise_std: float = 0.0

    def __post_init__(self):
        pos = np.asarray(self.recorded_position, dtype=float).reshape(3).copy()
        pos.flags.writeable = False
        object.__setattr__(self, "recorded_position", pos)
        r, c = self.slot_index
        if not (0 <= r < 8 and 0 <= c < 12):
            raise ValueError(f"slot index {self.slot_index} outside the 8x12 grid")


@dataclass
class RackModel:
    """96-tip rack: pose, pitch, and a mutable occupancy grid.

    The occupancy grid has a single-writer contract: the simulation loop
    removes tips, everyone else reads snapshots.
    """

    pose: Pose = field(default_factory=Pose.identity)
    rows: int = 8
    cols: int = 12
    pitch: float = 0.009
    slot_height: float = 0.060
    occupancy: np.ndarray = None

    def __post_init__(self):
        if self.pitch <= 0:
            raise ValueError("pitch must be positive")
        if self.occupancy is None:
            self.occupancy = np.ones((self.rows, self.cols), dtype=bool)
        else:
            self.occupancy = np.asarray(self.occupancy, dtype=bool)
            if self.occupancy.shape != (self.rows, self.cols):
                raise ValueError("occupancy grid does not match rows x cols")

    def slot_local(self, row, col):
        return np.array([col * self.pitch, row * self.pitch, self.slot_height])

    def tip_position(self, row, col):
        """World position of an occupied tip."""
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"slot ({row}, {col}) outside the grid")
        if not self.occupancy[row, col]:
            raise ValueError(f"slot ({row}, {col}) is empty")
        return self.pose.apply(self.slot_local(row, col))

    def remove_tip(self, row, col):
        self.occupancy[row, col] = False

    def neighbor_mask(self, slot):
        row, col = slot
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"slot ({row}, {col}) outside the grid")
        states = []
        for d in NEIGHBOR_ORDER:
            dr, dc = _OFFSETS[d]
            r, c = row + dr, col + dc
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                states.append(ABSENT_BY_EDGE)
            else:
                states.append(OCCUPIED if self.occupancy[r, c] else EMPTY)
        return NeighborMask(tuple(states))

    def picking_sequence(self):
        """Occupied slots in corner-start order, running along the long
        edge (column-fastest), skipping empty slots."""
        return [
            (r, c)
            for r in range(self.rows)
            for c in range(self.cols)
            if self.occupancy[r, c]
        ]

    def occupancy_bitstring(self):
        return "".join("1" if v else "0" for v in self.occupancy.ravel())


def fit_rack_pose(samples):
    """Least-squares rack pose from teach samples (yaw-only Procrustes fit).

    Returns (pose, rms_residual).  The pose origin sits at slot (0, 0)'s
    reference point; z is averaged assuming a horizontal rack.
    """
    if len(samples) < 2:
        raise ValueError("need at least two teach samples")
    slots = {s.slot_index for s in samples}
    if len(slots) < 2:
        raise ValueError("teach samples must cover at least two distinct slots")
    # local slot coordinates on the tip plane; z handled separately
    rack = RackModel()
    local = np.array([rack.slot_local(*s.slot_index)[:2] for s in samples])
    world = np.array([s.recorded_position for s in samples])
    lc = local.mean(axis=0)
    wc = world[:, :2].mean(axis=0)
    a = local - lc
    b = world[:, :2] - wc
    # yaw-only orthogonal Procrustes
    num = np.sum(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    den = np.sum(a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1])
    yaw = float(np.arctan2(num, den))
    cy, sy = np.cos(yaw), np.sin(yaw)
    rot = np.array([[cy, -sy], [sy, cy]])
    origin_xy = wc - rot @ lc
    origin_z = float(world[:, 2].mean()) - rack.slot_height
    pose = Pose.from_yaw(yaw, (origin_xy[0], origin_xy[1], origin_z))
    fitted = (rot @ local.T).T + origin_xy
    rms = float(np.sqrt(np.mean(np.sum((fitted - world[:, :2]) ** 2, axis=1))))
    return pose, rms


def synth_teach_samples(true_pose, slot_indices, noise_std=0.0, rng=None,
                        slot_height=0.060, pitch=0.009, bias_fn=None):
    """Generate teach samples from a known rack pose, optionally noisy.

    ``bias_fn(position) -> 3-vector`` models systematic teaching error
    (e.g. growing with the base rotation needed to reach the point).
    """
    rack = RackModel(pose=true_pose, slot_height=slot_height, pitch=pitch)
    samples = []
    for slot in slot_indices:
        pos = rack.tip_position(*slot)
        if bias_fn is not None:
            pos = pos + np.asarray(bias_fn(pos), dtype=float)
        if noise_std > 0:
            if rng is None:
                raise ValueError("rng required when noise_std > 0")
            pos = pos + rng.normal(0.0, noise_std, size=3)
        samples.append(TeachSample(pos, slot, noise_std))
    return samples


# ---------------------------------------------------------------------------
# availability pattern combinatorics


def _interior_patterns():
    return [tuple(bits) for bits in itertools.product((OCCUPIED, EMPTY), repeat=8)]


def _edge_patterns():
    # canonical orientation: edge runs along the top (N side absent)
    pats = []
    for bits in itertools.product((OCCUPIED, EMPTY), repeat=5):
        state = dict(zip(("E", "SE", "S", "SW", "W"), bits))
        state.update({"N": ABSENT_BY_EDGE, "NE": ABSENT_BY_EDGE, "NW": ABSENT_BY_EDGE})
        pats.append(tuple(state[d] for d in NEIGHBOR_ORDER))
    return pats


def _corner_patterns():
    # canonical orientation: target in the top-left corner
    pats = []
    for bits in itertools.product((OCCUPIED, EMPTY), repeat=3):
        state = dict(zip(("E", "SE", "S"), bits))
        for d in ("N", "NE", "NW", "W", "SW"):
            state[d] = ABSENT_BY_EDGE
        pats.append(tuple(state[d] for d in NEIGHBOR_ORDER))
    return pats


def _rotate_quarter(states):
    # one quarter turn shifts the eight-neighbor ring by two positions
    return tuple(states[(i - 2) % 8] for i in range(8))


def reduce_by_rotation(patterns):
    """Orbit representatives under quarter-turn rotations.

    Mirrors are deliberately not identified: the cameras never see a
    mirrored rack, only rotated ones.
    """
    seen = set()
    reps = []
    for p in patterns:
        if p in seen:
            continue
        reps.append(p)
        rot = p
        for _ in range(4):
            seen.add(rot)
            rot = _rotate_quarter(rot)
    return reps


AHEAD_DIRECTIONS = ("E", "SE", "S", "SW")
BEHIND_DIRECTIONS = ("N", "NE", "NW", "W")


def picking_routine_patterns():
    """The 16 availability patterns reachable under the picking routine.

    Picking corner-first along the long edge consumes the four "behind"
    neighbors (N, NE, NW, W) before any target is visited, so tips can
    only remain among the four "ahead" neighbors (E, SE, S, SW): 2^4 = 16
    combinations, which is what the classifier's training set enumerates.
    Returned as NeighborMask availability bit-tuples in mask order.
    """
    pats = []
    for bits in itertools.product((1, 0), repeat=4):
        ahead = dict(zip(AHEAD_DIRECTIONS, bits))
        pats.append(
            tuple(ahead.get(d, 0) for d in NEIGHBOR_ORDER)
        )
    return pats


def routine_pattern_of(mask):
    """Map a mask observed during a pass onto its routine pattern
    (availability bits; absent-by-edge folds into unavailable)."""
    return mask.occupied_bits()


def count_availability_patterns():
    """Pattern counts driving the training-set size.

    total: interior 2^8 + edge 2^5 + corner 2^3 patterns in canonical
    orientation.  symmetry_reduced: orbits under quarter-turn rotations.
    picking_routine: combinations possible under the corner-start,
    long-edge-major picking order.
    """
    all_patterns = _interior_patterns() + _edge_patterns() + _corner_patterns()
    reduced = reduce_by_rotation(all_patterns)
    return {
        "total": len(all_patterns),
        "symmetry_reduced": len(reduced),
        "picking_routine": len(picking_routine_patterns()),
    }


def all_canonical_patterns():
    return _interior_patterns() + _edge_patterns() + _corner_patterns()


def canonical_patterns_for(target):
    """Patterns for a given target location type: interior, edge, corner."""
    return {
        "interior": _interior_patterns,
        "edge": _edge_patterns,
        "corner": _corner_patterns,
    }[target]()
