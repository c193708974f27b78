# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: forward kinematics, skinning, rasterization.

Semantics match handik._kernels_np exactly (see its docstring for the
kernel contracts); tests assert both backends agree.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, floor

cnp.import_array()


cdef inline void _quat_to_mat(const double* q, double* m) noexcept nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    m[0] = 1.0 - 2.0 * (y * y + z * z)
    m[1] = 2.0 * (x * y - w * z)
    m[2] = 2.0 * (x * z + w * y)
    m[3] = 2.0 * (x * y + w * z)
    m[4] = 1.0 - 2.0 * (x * x + z * z)
    m[5] = 2.0 * (y * z - w * x)
    m[6] = 2.0 * (x * z - w * y)
    m[7] = 2.0 * (y * z + w * x)
    m[8] = 1.0 - 2.0 * (x * x + y * y)


cdef void _fk_one(const long long* parents, const long long* slot, int nj,
                  const double* quats, const double* offsets,
                  double* pos, double* rot) noexcept nogil:
    cdef int j, p, a, b
    cdef long long s
    cdef double local[9]
    cdef double* rj
    cdef const double* rp
    cdef const double* o
    for j in range(nj):
        s = slot[j]
        if s >= 0:
            _quat_to_mat(quats + 4 * s, local)
        else:
            local[0] = 1.0; local[1] = 0.0; local[2] = 0.0
            local[3] = 0.0; local[4] = 1.0; local[5] = 0.0
            local[6] = 0.0; local[7] = 0.0; local[8] = 1.0
        rj = rot + 9 * j
        o = offsets + 3 * j
        if parents[j] == j:
            for a in range(9):
                rj[a] = local[a]
            pos[3 * j] = o[0]
            pos[3 * j + 1] = o[1]
            pos[3 * j + 2] = o[2]
        else:
            p = <int>parents[j]
            rp = rot + 9 * p
            for a in range(3):
                for b in range(3):
                    rj[3 * a + b] = (rp[3 * a] * local[b]
                                     + rp[3 * a + 1] * local[3 + b]
                                     + rp[3 * a + 2] * local[6 + b])
            for a in range(3):
                pos[3 * j + a] = (pos[3 * p + a] + rp[3 * a] * o[0]
                                  + rp[3 * a + 1] * o[1] + rp[3 * a + 2] * o[2])


cdef cnp.ndarray[cnp.int64_t, ndim=1] _slots(cnp.ndarray parents, artic):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] slot = np.full(parents.shape[0], -1, dtype=np.int64)
    cdef int k
    for k in range(len(artic)):
        slot[artic[k]] = k
    return slot


def fk_chain(parents, artic, quats, offsets):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] par = np.ascontiguousarray(parents, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] slot = _slots(par, artic)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.ascontiguousarray(quats, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] off = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef int nj = par.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pos = np.empty((nj, 3))
    cdef cnp.ndarray[cnp.float64_t, ndim=3] rot = np.empty((nj, 3, 3))
    _fk_one(<const long long*>&par[0], <const long long*>&slot[0], nj,
            &q[0, 0], &off[0, 0], &pos[0, 0], &rot[0, 0, 0])
    return pos, rot


def fk_chain_batch(parents, artic, quats, offsets):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] par = np.ascontiguousarray(parents, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] slot = _slots(par, artic)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] q = np.ascontiguousarray(quats, dtype=np.float64)
    cdef int nb = q.shape[0]
    cdef int nj = par.shape[0]
    off_arr = np.ascontiguousarray(offsets, dtype=np.float64)
    if off_arr.ndim == 2:
        off_arr = np.ascontiguousarray(np.broadcast_to(off_arr, (nb, nj, 3)))
    cdef cnp.ndarray[cnp.float64_t, ndim=3] off = off_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=3] pos = np.empty((nb, nj, 3))
    cdef cnp.ndarray[cnp.float64_t, ndim=4] rot = np.empty((nb, nj, 3, 3))
    cdef int i
    with nogil:
        for i in range(nb):
            _fk_one(<const long long*>&par[0], <const long long*>&slot[0], nj,
                    &q[i, 0, 0], &off[i, 0, 0], &pos[i, 0, 0], &rot[i, 0, 0, 0])
    return pos, rot


def lbs_skin(verts, w_idx, w_val, rot, trans):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v = np.ascontiguousarray(verts, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] wi = np.ascontiguousarray(w_idx, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] wv = np.ascontiguousarray(w_val, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] r = np.ascontiguousarray(rot, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] t = np.ascontiguousarray(trans, dtype=np.float64)
    cdef int n = v.shape[0]
    cdef int ninf = wi.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, 3))
    cdef int i, k, a
    cdef long long b
    cdef double wgt
    with nogil:
        # accumulate influence-by-influence to mirror the numpy fallback's
        # summation order (bitwise-identical results)
        for k in range(ninf):
            for i in range(n):
                b = wi[i, k]
                wgt = wv[i, k]
                for a in range(3):
                    out[i, a] = out[i, a] + wgt * (
                        r[b, a, 0] * v[i, 0] + r[b, a, 1] * v[i, 1]
                        + r[b, a, 2] * v[i, 2] + t[b, a])
    return out


def rasterize(px, z, faces, int h, int w):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] p = np.ascontiguousarray(px, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] f = np.ascontiguousarray(faces, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] mask = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] depth = np.full((h, w), np.inf)
    cdef int nf = f.shape[0]
    cdef int t, xmin, xmax, ymin, ymax, gx, gy
    cdef long long i0, i1, i2
    cdef double x0, y0, x1, y1, x2, y2, area, w0, w1, w2, zi, lo, hi
    cdef bint inside
    with nogil:
        for t in range(nf):
            i0 = f[t, 0]; i1 = f[t, 1]; i2 = f[t, 2]
            x0 = p[i0, 0]; y0 = p[i0, 1]
            x1 = p[i1, 0]; y1 = p[i1, 1]
            x2 = p[i2, 0]; y2 = p[i2, 1]
            area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
            if area == 0.0:
                continue
            lo = x0
            if x1 < lo: lo = x1
            if x2 < lo: lo = x2
            hi = x0
            if x1 > hi: hi = x1
            if x2 > hi: hi = x2
            xmin = <int>ceil(lo)
            xmax = <int>floor(hi)
            if xmin < 0: xmin = 0
            if xmax > w - 1: xmax = w - 1
            lo = y0
            if y1 < lo: lo = y1
            if y2 < lo: lo = y2
            hi = y0
            if y1 > hi: hi = y1
            if y2 > hi: hi = y2
            ymin = <int>ceil(lo)
            ymax = <int>floor(hi)
            if ymin < 0: ymin = 0
            if ymax > h - 1: ymax = h - 1
            for gy in range(ymin, ymax + 1):
                for gx in range(xmin, xmax + 1):
                    w0 = (x1 - x0) * (gy - y0) - (y1 - y0) * (gx - x0)
                    w1 = (x2 - x1) * (gy - y1) - (y2 - y1) * (gx - x1)
                    w2 = (x0 - x2) * (gy - y2) - (y0 - y2) * (gx - x2)
                    if area > 0:
                        inside = (w0 >= 0) and (w1 >= 0) and (w2 >= 0)
                    else:
                        inside = (w0 <= 0) and (w1 <= 0) and (w2 <= 0)
                    if not inside:
                        continue
                    zi = (w1 / area) * zv[i0] + (w2 / area) * zv[i1] + (w0 / area) * zv[i2]
                    mask[gy, gx] = 1
                    if zi < depth[gy, gx]:
                        depth[gy, gx] = zi
    return mask, depth
