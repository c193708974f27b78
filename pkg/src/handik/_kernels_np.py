"""Pure-numpy implementations of the hot kernels.

Mirrors the signatures of the compiled extension ``handik._core``; the
active implementation is chosen in :mod:`handik.backend`. Everything here
is float64 and deterministic, so both backends produce identical results.

Kernel contracts:

fk_chain(parents, artic, quats, offsets)
    Single-pose forward kinematics over a topologically ordered tree.
    ``quats`` holds one unit quaternion per articulated joint (in the order
    given by ``artic``); non-articulated joints keep an identity local
    rotation. Joint j's global rotation is parent_rot * local_rot and its
    position is parent_pos + parent_rot @ offsets[j] (root: offsets[0]).
    Returns (positions (J,3), global rotation matrices (J,3,3)).

fk_chain_batch(...)
    Same over a batch: quats (B,A,4), offsets (B,J,3) -> (B,J,3), (B,J,3,3).

lbs_skin(verts, w_idx, w_val, rot, trans)
    Linear blend skinning with at most two influences per vertex:
    out[v] = sum_k w_val[v,k] * (rot[w_idx[v,k]] @ verts[v] + trans[w_idx[v,k]]).

rasterize(px, z, faces, h, w)
    Edge-function triangle rasterization with a z-buffer over projected
    vertices px (N,2) at camera depths z (N,). Depth is interpolated
    barycentrically in screen space; degenerate triangles are skipped.
    Returns (coverage mask uint8 (h,w), raw depth (h,w) with +inf where
    uncovered). Pixels sample at integer centers (x=col, y=row).
"""
from __future__ import annotations

import numpy as np


def quat_to_matrix_batch(q: np.ndarray) -> np.ndarray:
    """(..., 4) unit quaternions -> (..., 3, 3) rotation matrices."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[..., 0, 1] = 2.0 * (x * y - w * z)
    m[..., 0, 2] = 2.0 * (x * z + w * y)
    m[..., 1, 0] = 2.0 * (x * y + w * z)
    m[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[..., 1, 2] = 2.0 * (y * z - w * x)
    m[..., 2, 0] = 2.0 * (x * z - w * y)
    m[..., 2, 1] = 2.0 * (y * z + w * x)
    m[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


def fk_chain(parents, artic, quats, offsets):
    parents = np.asarray(parents)
    nj = parents.shape[0]
    artic_slot = np.full(nj, -1, dtype=np.int64)
    for slot, j in enumerate(artic):
        artic_slot[j] = slot
    local = quat_to_matrix_batch(np.asarray(quats, dtype=float))
    pos = np.empty((nj, 3))
    rot = np.empty((nj, 3, 3))
    for j in range(nj):
        s = artic_slot[j]
        lr = local[s] if s >= 0 else np.eye(3)
        if parents[j] == j:
            rot[j] = lr
            pos[j] = offsets[j]
        else:
            p = parents[j]
            rot[j] = rot[p] @ lr
            pos[j] = pos[p] + rot[p] @ offsets[j]
    return pos, rot


def fk_chain_batch(parents, artic, quats, offsets):
    parents = np.asarray(parents)
    quats = np.asarray(quats, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    b = quats.shape[0]
    nj = parents.shape[0]
    if offsets.ndim == 2:
        offsets = np.broadcast_to(offsets, (b, nj, 3))
    artic_slot = np.full(nj, -1, dtype=np.int64)
    for slot, j in enumerate(artic):
        artic_slot[j] = slot
    local = quat_to_matrix_batch(quats)  # (B, A, 3, 3)
    pos = np.empty((b, nj, 3))
    rot = np.empty((b, nj, 3, 3))
    eye = np.broadcast_to(np.eye(3), (b, 3, 3))
    for j in range(nj):
        s = artic_slot[j]
        lr = local[:, s] if s >= 0 else eye
        if parents[j] == j:
            rot[:, j] = lr
            pos[:, j] = offsets[:, j]
        else:
            p = parents[j]
            rot[:, j] = rot[:, p] @ lr
            pos[:, j] = pos[:, p] + np.einsum("bij,bj->bi", rot[:, p], offsets[:, j])
    return pos, rot


def lbs_skin(verts, w_idx, w_val, rot, trans):
    verts = np.asarray(verts, dtype=float)
    out = np.zeros_like(verts)
    for k in range(w_idx.shape[1]):
        idx = w_idx[:, k]
        r = rot[idx]  # (N, 3, 3)
        t = trans[idx]  # (N, 3)
        out += w_val[:, k:k + 1] * (np.einsum("nij,nj->ni", r, verts) + t)
    return out


def rasterize(px, z, faces, h, w):
    px = np.asarray(px, dtype=float)
    z = np.asarray(z, dtype=float)
    mask = np.zeros((h, w), dtype=np.uint8)
    depth = np.full((h, w), np.inf)
    for f in faces:
        x0, y0 = px[f[0]]
        x1, y1 = px[f[1]]
        x2, y2 = px[f[2]]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area == 0.0:
            continue
        xmin = max(0, int(np.ceil(min(x0, x1, x2))))
        xmax = min(w - 1, int(np.floor(max(x0, x1, x2))))
        ymin = max(0, int(np.ceil(min(y0, y1, y2))))
        ymax = min(h - 1, int(np.floor(max(y0, y1, y2))))
        if xmin > xmax or ymin > ymax:
            continue
        xs = np.arange(xmin, xmax + 1)
        ys = np.arange(ymin, ymax + 1)
        gx, gy = np.meshgrid(xs, ys)
        # barycentric coordinates via edge functions
        w0 = (x1 - x0) * (gy - y0) - (y1 - y0) * (gx - x0)
        w1 = (x2 - x1) * (gy - y1) - (y2 - y1) * (gx - x1)
        w2 = (x0 - x2) * (gy - y2) - (y0 - y2) * (gx - x2)
        if area > 0:
            inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        else:
            inside = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
        if not inside.any():
            continue
        b0 = w1 / area
        b1 = w2 / area
        b2 = w0 / area
        zi = b0 * z[f[0]] + b1 * z[f[1]] + b2 * z[f[2]]
        sub_d = depth[ymin:ymax + 1, xmin:xmax + 1]
        upd = inside & (zi < sub_d)
        sub_d[upd] = zi[upd]
        sub_m = mask[ymin:ymax + 1, xmin:xmax + 1]
        sub_m[inside] = 1
    return mask, depth
