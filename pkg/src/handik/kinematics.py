"""21-joint hand skeleton: topology, forward kinematics, normalization.

Joint order is wrist first, then chain-major (thumb, index, middle, ring,
pinky), proximal to distal, fingertip last in each chain:

    0        wrist
    1-4      thumb   mcp, pip, dip, tip
    5-8      index   mcp, pip, dip, tip
    9-12     middle  mcp, pip, dip, tip
    13-16    ring    mcp, pip, dip, tip
    17-20    pinky   mcp, pip, dip, tip

Bone b (b = 0..19) connects parent(b+1) -> joint b+1, so bones are also
chain-major, proximal to distal. The 16 articulated joints are the wrist
plus mcp/pip/dip of each finger; fingertips carry no rotation. Pose
vectors hold one quaternion per articulated joint, ordered by joint index.

The root-relative, scale-invariant normalization divides by the length of
the wrist -> middle-mcp bone (reference bone). Chain direction vectors
are per-joint unit vectors from parent to joint; the root entry, which
has no parent bone, is zero-filled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import backend

NUM_JOINTS = 21
NUM_BONES = 20
NUM_ARTICULATED = 16

PARENTS = np.array(
    [0, 0, 1, 2, 3, 0, 5, 6, 7, 0, 9, 10, 11, 0, 13, 14, 15, 0, 17, 18, 19],
    dtype=np.int64,
)
FINGERTIPS = (4, 8, 12, 16, 20)
ARTICULATED = np.array(
    [j for j in range(NUM_JOINTS) if j not in FINGERTIPS], dtype=np.int64
)
# joint index -> pose slot (fingertips -> -1)
ARTIC_SLOT = np.full(NUM_JOINTS, -1, dtype=np.int64)
ARTIC_SLOT[ARTICULATED] = np.arange(NUM_ARTICULATED)

REF_BONE_JOINT = 9  # middle-finger mcp; reference bone is wrist -> this joint

JOINT_NAMES = ["wrist"] + [
    f"{finger}_{part}"
    for finger in ("thumb", "index", "middle", "ring", "pinky")
    for part in ("mcp", "pip", "dip", "tip")
]


@dataclass(frozen=True)
class KinematicTree:
    """Hand skeleton topology plus rest offsets (joint minus parent)."""

    parents: np.ndarray
    rest_offsets: np.ndarray
    articulated_mask: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.parents)
        if p.shape != (NUM_JOINTS,):
            raise ValueError("parents must have 21 entries")
        roots = np.flatnonzero(p == np.arange(NUM_JOINTS))
        if len(roots) != 1:
            raise ValueError("tree must have exactly one self-parented root")
        nonroot = np.delete(np.arange(NUM_JOINTS), roots[0])
        if np.any(p[nonroot] >= nonroot):
            raise ValueError("parents must be topologically ordered")
        if int(self.articulated_mask.sum()) != NUM_ARTICULATED:
            raise ValueError("expected 16 articulated joints")
        if not np.all(np.isfinite(self.rest_offsets)):
            raise ValueError("rest offsets must be finite")

    @property
    def root(self) -> int:
        return 0

    def rest_joints(self) -> np.ndarray:
        """Cumulative offsets along each chain (identity-pose positions)."""
        pos = np.empty((NUM_JOINTS, 3))
        for j in range(NUM_JOINTS):
            if self.parents[j] == j:
                pos[j] = self.rest_offsets[j]
            else:
                pos[j] = pos[self.parents[j]] + self.rest_offsets[j]
        return pos


@dataclass(frozen=True)
class NormalizedPose:
    """Root-relative, scale-invariant joints and unit chain directions."""

    xbar: np.ndarray  # (21, 3), root at origin, reference bone length 1
    kbar: np.ndarray  # (21, 3), unit parent->joint directions, root row zero


def make_tree(rest_offsets: np.ndarray) -> KinematicTree:
    """KinematicTree with the standard topology and given rest offsets."""
    mask = np.ones(NUM_JOINTS, dtype=bool)
    mask[list(FINGERTIPS)] = False
    return KinematicTree(PARENTS.copy(), np.asarray(rest_offsets, dtype=float), mask)


def forward_kinematics(
    tree: KinematicTree,
    pose: np.ndarray,
    offsets: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Global joint positions and rotations for a 16-quaternion pose.

    Each joint's global rotation is its parent's composed with its local
    quaternion (identity for fingertips); its position is the parent's
    plus the parent rotation applied to the joint's rest offset. Returns
    (positions (21, 3), global rotation matrices (21, 3, 3)); together
    with the rest joints these define the per-bone rigid transforms
    consumed by skinning.
    """
    pose = np.asarray(pose, dtype=float)
    if pose.shape != (NUM_ARTICULATED, 4):
        raise ValueError(f"pose must be (16, 4), got {pose.shape}")
    if offsets is None:
        offsets = tree.rest_offsets
    return backend.fk_chain(tree.parents, ARTICULATED, pose, offsets)


def forward_kinematics_batch(
    tree: KinematicTree, pose: np.ndarray, offsets: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Batched forward_kinematics: pose (B, 16, 4), offsets (B, 21, 3) or (21, 3)."""
    if offsets is None:
        offsets = tree.rest_offsets
    return backend.fk_chain_batch(tree.parents, ARTICULATED, pose, offsets)


def normalize_joints(joints: np.ndarray, tree: KinematicTree) -> NormalizedPose:
    """Root-relative, scale-invariant normalization plus chain directions."""
    joints = np.asarray(joints, dtype=float)
    rel = joints - joints[tree.root]
    ref = np.linalg.norm(rel[REF_BONE_JOINT])
    if ref < 1e-9:
        raise ValueError("degenerate pose: reference bone has zero length")
    xbar = rel / ref
    kbar = np.zeros_like(xbar)
    diffs = xbar[1:] - xbar[tree.parents[1:]]
    norms = np.linalg.norm(diffs, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ValueError("degenerate pose: zero-length bone")
    kbar[1:] = diffs / norms
    return NormalizedPose(xbar=xbar, kbar=kbar)


def bone_lengths(joints: np.ndarray, tree: KinematicTree) -> np.ndarray:
    """The 20 bone lengths |joint - parent|, chain-major order."""
    joints = np.asarray(joints, dtype=float)
    return np.linalg.norm(joints[1:] - joints[tree.parents[1:]], axis=1)


def tree_to_json(tree: KinematicTree) -> str:
    """Canonical JSON document for the skeleton (stable byte-for-byte)."""
    doc = {
        "joint_names": JOINT_NAMES,
        "parents": [int(p) for p in tree.parents],
        "articulated": [int(j) for j in np.flatnonzero(tree.articulated_mask)],
        "rest_offsets": [[float(c) for c in row] for row in tree.rest_offsets],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def tree_from_json(text: str) -> KinematicTree:
    doc = json.loads(text)
    offsets = np.array(doc["rest_offsets"], dtype=float)
    tree = make_tree(offsets)
    if list(tree.parents) != doc["parents"]:
        raise ValueError("skeleton JSON has unexpected topology")
    return tree
