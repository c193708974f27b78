"""Procedural parametric hand: template mesh, shape modes, skinning.

The model plays the role of a learned statistical hand model but is built
analytically so every quantity is exactly computable in tests: five
capsule-like finger tubes plus a palm slab, a sparse joint regressor whose
rows average vertex rings centered exactly on the joints, per-vertex skin
weights with at most two influences, and ten interpretable shape modes
(displacement fields, linear in the coefficients).

Shape mode order: 0 global scale; 1-5 per-finger length (thumb, index,
middle, ring, pinky); 6 palm width; 7 palm thickness; 8 finger thickness
(radial, leaves joints fixed); 9 thumb splay (linearized rotation about
the palm normal).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .kinematics import (
    ARTIC_SLOT,
    ARTICULATED,
    NUM_ARTICULATED,
    NUM_JOINTS,
    PARENTS,
    KinematicTree,
    make_tree,
)

DEFAULT_VERTEX_COUNT = 778
NUM_SHAPE_MODES = 10

# finger layout: mcp position, direction, segment lengths (prox/mid/dist), tube radius
_FINGERS = [
    ((0.040, 0.022, -0.004), (0.80, 0.55, -0.12), (0.034, 0.030, 0.025), 0.0095),
    ((0.028, 0.088, 0.000), (0.10, 0.99, 0.00), (0.040, 0.025, 0.021), 0.0082),
    ((0.009, 0.092, 0.000), (0.00, 1.00, 0.00), (0.044, 0.028, 0.022), 0.0086),
    ((-0.012, 0.088, 0.000), (-0.07, 0.99, 0.00), (0.040, 0.026, 0.021), 0.0080),
    ((-0.031, 0.080, 0.000), (-0.14, 0.98, 0.00), (0.031, 0.020, 0.018), 0.0070),
]
_PALM_HALF_WIDTH = 0.042
_PALM_LENGTH = 0.088
_PALM_HALF_THICK = 0.008

# scale of each analytic shape mode at coefficient 1.0
_C_SCALE = 0.10
_C_LENGTH = 0.30
_C_WIDTH = 0.25
_C_THICK = 0.50
_C_FAT = 0.35
_C_SPLAY = 0.50

_HFM_MAGIC = b"HFM1"
_HFM_VERSION = 1


@dataclass(frozen=True)
class HandShape:
    """Ten unitless shape coefficients."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float)
        if b.shape != (NUM_SHAPE_MODES,) or not np.all(np.isfinite(b)):
            raise ValueError("beta must be 10 finite scalars")
        object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class HandMesh:
    vertices: np.ndarray
    faces: np.ndarray


@dataclass(frozen=True)
class HandModel:
    """Template, shape basis, skin weights, joint regressor, skeleton."""

    template: np.ndarray  # (N, 3)
    faces: np.ndarray  # (F, 3) int64
    shape_basis: np.ndarray  # (10, N, 3)
    skin_weights: np.ndarray  # (N, 16), rows sum to 1, <= 2 nonzeros
    joint_regressor: np.ndarray  # (21, N), rows sum to 1
    tree: KinematicTree = field(repr=False)
    rest_joints: np.ndarray = field(repr=False)  # (21, 3) at beta = 0
    skin_idx: np.ndarray = field(repr=False)  # (N, 2) influence slots
    skin_val: np.ndarray = field(repr=False)  # (N, 2) influence weights

    @property
    def vertex_count(self) -> int:
        return self.template.shape[0]


def _ring(center, axis, radius, count, phase=0.0):
    """`count` points on a circle of `radius` about `axis` at `center`."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    helper = np.array([0.0, 0.0, 1.0])
    if abs(axis @ helper) > 0.9:
        helper = np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    ang = phase + 2.0 * np.pi * np.arange(count) / count
    return center + radius * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)


def _stitch_loops(a, b, faces):
    """Triangulate the band between two vertex loops (may differ in size)."""
    m, n = len(a), len(b)
    if n == 1:  # apex: fan
        faces.extend((a[i], a[(i + 1) % m], b[0]) for i in range(m))
        return
    if m == 1:
        faces.extend((b[(j + 1) % n], b[j], a[0]) for j in range(n))
        return
    i = j = 0
    while i < m or j < n:
        if j >= n or (i < m and (i + 1) * n <= (j + 1) * m):
            faces.append((a[i % m], a[(i + 1) % m], b[j % n]))
            i += 1
        else:
            faces.append((a[i % m], b[(j + 1) % n], b[j % n]))
            j += 1


def _tessellation_plan(vertex_count):
    """Ring segments, stations per finger, palm grid, and cap sizes."""
    if vertex_count < 100:
        raise ValueError("vertex_count must be >= 100 to tessellate the hand")
    if vertex_count >= 600:
        segs, stations = 7, [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    elif vertex_count >= 320:
        segs, stations = 6, [0.0, 0.5, 1.0, 2.0, 3.0]
    elif vertex_count >= 160:
        segs, stations = 5, [0.0, 1.0, 2.0, 3.0]
    else:
        segs, stations = 4, [0.0, 1.0, 2.0, 3.0]
    budget = vertex_count - 5 * segs * len(stations) - 5
    if budget < 8:
        raise ValueError("vertex_count too small to tessellate the palm")
    nx = max(2, int(round(np.sqrt(budget / 2.0 * 0.95))))
    ny = max(2, budget // (2 * nx))
    while 2 * nx * ny > budget:  # guard tiny budgets
        ny -= 1
    rem = budget - 2 * nx * ny
    caps = [1 + rem // 5 + (1 if f < rem % 5 else 0) for f in range(5)]
    return segs, stations, nx, ny, caps


def _station_point(joints, x):
    """Point at fractional station x in [0, 3] along a finger's chain."""
    k = min(2, int(np.floor(x)))
    frac = x - k
    return joints[k] + frac * (joints[k + 1] - joints[k])


def _finger_skin(slots, x):
    """Influences for a finger vertex at chain station x.

    Single owner mid-segment; 50/50 at articulated joints with a linear
    blend of half-width 0.25 around each of the three boundaries.
    `slots` = (wrist, mcp, pip, dip) articulation slots.
    """
    for b in range(3):
        if abs(x - b) <= 0.25:
            hi = 0.5 + 2.0 * (x - b)
            return [(slots[b], 1.0 - hi), (slots[b + 1], hi)]
    k = min(2, int(np.floor(x + 0.25)))
    return [(slots[k + 1], 1.0)]


def build_default_model(vertex_count: int = DEFAULT_VERTEX_COUNT) -> HandModel:
    """Deterministic procedural hand model with exactly `vertex_count` vertices."""
    segs, stations, nx, ny, caps = _tessellation_plan(vertex_count)

    # rest skeleton from the layout table
    joints = np.zeros((NUM_JOINTS, 3))
    finger_dirs = []
    for f, (mcp, direction, lengths, _radius) in enumerate(_FINGERS):
        d = np.asarray(direction, dtype=float)
        d /= np.linalg.norm(d)
        finger_dirs.append(d)
        base = 1 + 4 * f
        joints[base] = mcp
        for k in range(3):
            joints[base + 1 + k] = joints[base + k] + lengths[k] * d

    verts: list[np.ndarray] = []
    faces: list[tuple[int, int, int]] = []
    regress_rows: list[list[int]] = [[] for _ in range(NUM_JOINTS)]
    influences: list[list[tuple[int, float]]] = []
    finger_of: list[int] = []
    ring_center: list[np.ndarray] = []

    def add(points, finger, center, infl):
        start = len(verts)
        for p in points:
            verts.append(np.asarray(p, dtype=float))
            finger_of.append(finger)
            ring_center.append(np.asarray(center, dtype=float))
            influences.append(infl)
        return list(range(start, start + len(points)))

    wrist_slot = int(ARTIC_SLOT[0])
    for f, (_mcp, _direction, _lengths, radius) in enumerate(_FINGERS):
        d = finger_dirs[f]
        chain = joints[1 + 4 * f:5 + 4 * f]
        slots = (wrist_slot,) + tuple(int(ARTIC_SLOT[1 + 4 * f + k]) for k in range(3))
        prev = None
        for x in stations:
            center = _station_point(chain, x)
            r = radius * (1.0 - 0.10 * x)
            ids = add(_ring(center, d, r, segs), f, center, _finger_skin(slots, x))
            if x in (0.0, 1.0, 2.0, 3.0):
                regress_rows[1 + 4 * f + int(x)] = ids
            if prev is not None:
                _stitch_loops(prev, ids, faces)
            prev = ids
        # fingertip cap
        tip = chain[3]
        tip_r = radius * (1.0 - 0.10 * 3.0)
        c = caps[f]
        infl = [(slots[3], 1.0)]
        if c == 1:
            ids = add([tip + 0.9 * tip_r * d], f, tip + 0.9 * tip_r * d, infl)
            _stitch_loops(prev, ids, faces)
        else:
            center = tip + 0.55 * tip_r * d
            ids = add(_ring(center, d, 0.45 * tip_r, c), f, center, infl)
            _stitch_loops(prev, ids, faces)
            for k in range(1, c - 1):  # close the tip with a fan
                faces.append((ids[0], ids[k], ids[k + 1]))

    # palm slab: two nx-by-ny grids plus a stitched side wall
    xs = np.linspace(-_PALM_HALF_WIDTH, _PALM_HALF_WIDTH, nx)
    ys = np.linspace(0.0, _PALM_LENGTH, ny)
    grid_ids = {}
    palm_infl = [(wrist_slot, 1.0)]
    for side, z in ((0, _PALM_HALF_THICK), (1, -_PALM_HALF_THICK)):
        for iy, y in enumerate(ys):
            row = add([np.array([x, y, z]) for x in xs], -1, np.zeros(3), palm_infl)
            grid_ids[(side, iy)] = row
    regress_rows[0] = grid_ids[(0, 0)] + grid_ids[(1, 0)]  # wrist = y=0 edge rows
    for side in (0, 1):
        for iy in range(ny - 1):
            for ix in range(nx - 1):
                a = grid_ids[(side, iy)][ix]
                b = grid_ids[(side, iy)][ix + 1]
                c2 = grid_ids[(side, iy + 1)][ix + 1]
                d2 = grid_ids[(side, iy + 1)][ix]
                if side == 0:
                    faces.extend([(a, b, c2), (a, c2, d2)])
                else:
                    faces.extend([(a, c2, b), (a, d2, c2)])

    def perimeter(side):
        loop = list(grid_ids[(side, 0)])
        loop += [grid_ids[(side, iy)][nx - 1] for iy in range(1, ny)]
        loop += list(reversed(grid_ids[(side, ny - 1)]))[1:]
        loop += [grid_ids[(side, iy)][0] for iy in range(ny - 2, 0, -1)]
        return loop

    _stitch_loops(perimeter(0), perimeter(1), faces)

    template = np.array(verts)
    if template.shape[0] != vertex_count:
        raise AssertionError("tessellation plan missed the vertex budget")
    faces_arr = np.array(faces, dtype=np.int64)
    finger_of_arr = np.array(finger_of, dtype=np.int64)
    centers = np.array(ring_center)

    # joint regressor: uniform average of the ring centered on each joint
    regressor = np.zeros((NUM_JOINTS, vertex_count))
    for j, ids in enumerate(regress_rows):
        regressor[j, ids] = 1.0 / len(ids)

    # skin weights: dense matrix plus the (index, value) pairs the kernel uses
    weights = np.zeros((vertex_count, NUM_ARTICULATED))
    skin_idx = np.zeros((vertex_count, 2), dtype=np.int64)
    skin_val = np.zeros((vertex_count, 2))
    for v, infl in enumerate(influences):
        for k, (slot, w) in enumerate(infl):
            weights[v, slot] += w
            skin_idx[v, k] = slot
            skin_val[v, k] = w

    # analytic shape modes
    basis = np.zeros((NUM_SHAPE_MODES, vertex_count, 3))
    basis[0] = _C_SCALE * template
    for f in range(5):
        sel = finger_of_arr == f
        rel = template[sel] - joints[1 + 4 * f]
        along = rel @ finger_dirs[f]
        basis[1 + f, sel] = _C_LENGTH * along[:, None] * finger_dirs[f]
    palm_sel = finger_of_arr == -1
    basis[6, palm_sel, 0] = _C_WIDTH * template[palm_sel, 0]
    for f in range(5):
        sel = finger_of_arr == f
        basis[6, sel, 0] = _C_WIDTH * joints[1 + 4 * f, 0]
    basis[7, palm_sel, 2] = _C_THICK * template[palm_sel, 2]
    fing_sel = finger_of_arr >= 0
    basis[8, fing_sel] = _C_FAT * (template[fing_sel] - centers[fing_sel])
    thumb_sel = finger_of_arr == 0
    zhat = np.array([0.0, 0.0, 1.0])
    basis[9, thumb_sel] = _C_SPLAY * np.cross(zhat, template[thumb_sel])

    rest = regressor @ template
    offsets = rest.copy()
    offsets[1:] -= rest[PARENTS[1:]]
    tree = make_tree(offsets)
    return HandModel(
        template=template,
        faces=faces_arr,
        shape_basis=basis,
        skin_weights=weights,
        joint_regressor=regressor,
        tree=tree,
        rest_joints=rest,
        skin_idx=skin_idx,
        skin_val=skin_val,
    )


def shape_template(model: HandModel, beta) -> np.ndarray:
    """Template deformed by the shape modes: T + sum_i beta_i * basis_i."""
    b = beta.beta if isinstance(beta, HandShape) else np.asarray(beta, dtype=float)
    return model.template + np.einsum("m,mvc->vc", b, model.shape_basis)


def regress_joints(model: HandModel, shaped: np.ndarray) -> np.ndarray:
    """Joint positions of a shaped (unposed) template."""
    return model.joint_regressor @ shaped


def joint_offsets(model: HandModel, joints: np.ndarray) -> np.ndarray:
    """Parent-relative offsets for FK from absolute joint positions."""
    offsets = np.asarray(joints, dtype=float).copy()
    offsets[1:] -= joints[model.tree.parents[1:]]
    return offsets


def skin(model: HandModel, shaped: np.ndarray, pose: np.ndarray) -> HandMesh:
    """Linear blend skinning of a shaped template under a 16-quaternion pose.

    Rest-to-posed rigid maps come from FK over the joints regressed from
    `shaped`, so mesh and skeleton always articulate together.
    """
    shaped = np.asarray(shaped, dtype=float)
    if shaped.shape != model.template.shape:
        raise ValueError("shaped vertices do not match the model's vertex count")
    rest = regress_joints(model, shaped)
    pos, rot = backend.fk_chain(
        model.tree.parents, ARTICULATED, np.asarray(pose, dtype=float),
        joint_offsets(model, rest),
    )
    rot_a = rot[ARTICULATED]
    pos_a = pos[ARTICULATED]
    rest_a = rest[ARTICULATED]
    trans = pos_a - np.einsum("bij,bj->bi", rot_a, rest_a)
    out = backend.lbs_skin(shaped, model.skin_idx, model.skin_val, rot_a, trans)
    return HandMesh(vertices=out, faces=model.faces)


def mesh_to_joints(model: HandModel, mesh: HandMesh) -> np.ndarray:
    """Joint locations interpolated from mesh vertices."""
    if mesh.vertices.shape[0] != model.vertex_count:
        raise ValueError("mesh vertex count does not match model")
    return model.joint_regressor @ mesh.vertices


def export_obj(mesh: HandMesh, path) -> None:
    """Wavefront OBJ: `v` lines (6 decimals) then 1-based `f` lines, LF endings."""
    with open(path, "w", newline="\n") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def import_obj(path) -> HandMesh:
    """Minimal OBJ reader for round-trip tests (v and f lines only)."""
    vs, fs = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vs.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                fs.append([int(t.split("/")[0]) - 1 for t in parts[1:4]])
    return HandMesh(np.array(vs), np.array(fs, dtype=np.int64))


_DTYPE_CODES = {0: np.float64, 1: np.int64}


def _write_array(fh, arr):
    code = 0 if arr.dtype == np.float64 else 1
    fh.write(struct.pack("<BB", code, arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    fh.write(np.ascontiguousarray(arr).astype("<f8" if code == 0 else "<i8").tobytes())


def _read_array(fh):
    head = fh.read(2)
    if len(head) < 2:
        raise ValueError("truncated model container")
    code, ndim = struct.unpack("<BB", head)
    if code not in _DTYPE_CODES:
        raise ValueError(f"unknown dtype code {code}")
    shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
    count = int(np.prod(shape))
    raw = fh.read(8 * count)
    if len(raw) != 8 * count:
        raise ValueError("truncated model container")
    dt = "<f8" if code == 0 else "<i8"
    return np.frombuffer(raw, dtype=dt).astype(_DTYPE_CODES[code]).reshape(shape)


def save_model(model: HandModel, path) -> None:
    """Versioned binary container (magic HFM1, little-endian)."""
    with open(path, "wb") as fh:
        fh.write(_HFM_MAGIC)
        fh.write(struct.pack("<I", _HFM_VERSION))
        for arr in (model.template, model.faces, model.shape_basis,
                    model.skin_weights, model.joint_regressor):
            _write_array(fh, arr)


def load_model(path) -> HandModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _HFM_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_HFM_MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _HFM_VERSION:
            raise ValueError(f"unsupported model container version {version}")
        template = _read_array(fh)
        faces = _read_array(fh)
        basis = _read_array(fh)
        weights = _read_array(fh)
        regressor = _read_array(fh)
    # rebuild the sparse influence pairs and skeleton from the dense arrays
    n = template.shape[0]
    skin_idx = np.zeros((n, 2), dtype=np.int64)
    skin_val = np.zeros((n, 2))
    for v in range(n):
        nz = np.flatnonzero(weights[v])
        for k, slot in enumerate(nz[:2]):
            skin_idx[v, k] = slot
            skin_val[v, k] = weights[v, slot]
    rest = regressor @ template
    offsets = rest.copy()
    offsets[1:] -= rest[PARENTS[1:]]
    tree = make_tree(offsets)
    return HandModel(
        template=template, faces=faces, shape_basis=basis, skin_weights=weights,
        joint_regressor=regressor, tree=tree, rest_joints=rest,
        skin_idx=skin_idx, skin_val=skin_val,
    )
