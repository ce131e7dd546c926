# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: breadth-first orbit expansion and minimum-width strips.

Signatures mirror :mod:`kleindim._fallback` exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport acosh, sqrt, fabs

cnp.import_array()

ctypedef double complex cplx


cdef inline double _rho(cplx a, cplx b, cplx c, cplx d) nogil:
    cdef double s = (a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag
                     + c.real * c.real + c.imag * c.imag + d.real * d.real + d.imag * d.imag)
    s = 0.5 * s
    if s < 1.0:
        s = 1.0
    return acosh(s)


def enumerate_free(cplx[:, ::1] gens, long[::1] inverse, long max_depth,
                   double rho_cut, long max_points):
    """Breadth-first enumeration of freely reduced words ``w * g``.

    Returns ``(mats, rho, depth, parent, gen, budget_hit, depth_reached)``.
    Row 0 is the identity (parent -1, gen -1).  A child whose displacement
    exceeds ``rho_cut`` is dropped with its whole subtree.
    """
    cdef Py_ssize_t k = gens.shape[0]
    cdef Py_ssize_t cap = 1024
    if max_points < cap:
        cap = max_points if max_points > 0 else 1
    mats_np = np.zeros((cap, 4), dtype=np.complex128)
    rho_np = np.zeros(cap, dtype=np.float64)
    depth_np = np.zeros(cap, dtype=np.int64)
    parent_np = np.full(cap, -1, dtype=np.int64)
    gen_np = np.full(cap, -1, dtype=np.int64)
    cdef cplx[:, ::1] mats = mats_np
    cdef double[::1] rho = rho_np
    cdef long[::1] depth = depth_np
    cdef long[::1] parent = parent_np
    cdef long[::1] gen = gen_np

    mats[0, 0] = 1.0
    mats[0, 3] = 1.0
    cdef Py_ssize_t n = 1
    cdef Py_ssize_t lo = 0, hi = 1, i, j
    cdef long level = 0, last
    cdef bint budget_hit = False
    cdef cplx a, b, c, d, ga, gb, gc, gd, na, nb, nc, nd
    cdef double r

    if max_points <= 1:
        return (mats_np[:1].copy(), rho_np[:1].copy(), depth_np[:1].copy(),
                parent_np[:1].copy(), gen_np[:1].copy(), max_points <= 0, 0)

    while level < max_depth and lo < hi and not budget_hit:
        level += 1
        for i in range(lo, hi):
            a = mats[i, 0]; b = mats[i, 1]; c = mats[i, 2]; d = mats[i, 3]
            last = gen[i]
            for j in range(k):
                if last >= 0 and j == inverse[last]:
                    continue
                ga = gens[j, 0]; gb = gens[j, 1]; gc = gens[j, 2]; gd = gens[j, 3]
                na = a * ga + b * gc
                nb = a * gb + b * gd
                nc = c * ga + d * gc
                nd = c * gb + d * gd
                r = _rho(na, nb, nc, nd)
                if r > rho_cut:
                    continue
                if n >= cap:
                    cap = 2 * cap
                    if cap > max_points:
                        cap = max_points
                    mats_np = np.resize(mats_np, (cap, 4))
                    rho_np = np.resize(rho_np, cap)
                    depth_np = np.resize(depth_np, cap)
                    parent_np = np.resize(parent_np, cap)
                    gen_np = np.resize(gen_np, cap)
                    mats = mats_np; rho = rho_np; depth = depth_np
                    parent = parent_np; gen = gen_np
                mats[n, 0] = na; mats[n, 1] = nb; mats[n, 2] = nc; mats[n, 3] = nd
                rho[n] = r
                depth[n] = level
                parent[n] = i
                gen[n] = j
                n += 1
                if n >= max_points:
                    budget_hit = True
                    break
            if budget_hit:
                break
        lo = hi
        hi = n
    if lo == hi and level > 0:
        level -= 1
    return (mats_np[:n].copy(), rho_np[:n].copy(), depth_np[:n].copy(),
            parent_np[:n].copy(), gen_np[:n].copy(), bool(budget_hit), int(level))


def expand_level(cplx[:, ::1] mats, long[::1] last, cplx[:, ::1] gens,
                 long[::1] inverse, double rho_cut):
    """One breadth-first step: all reduced children ``w * g`` with rho <= cut.

    Returns ``(child_mats, child_rho, parent_index, gen_index)``.
    """
    cdef Py_ssize_t n = mats.shape[0], k = gens.shape[0]
    cdef Py_ssize_t cap = n * k if n * k > 0 else 1
    out_np = np.empty((cap, 4), dtype=np.complex128)
    rho_np = np.empty(cap, dtype=np.float64)
    par_np = np.empty(cap, dtype=np.int64)
    gen_np = np.empty(cap, dtype=np.int64)
    cdef cplx[:, ::1] out = out_np
    cdef double[::1] rho = rho_np
    cdef long[::1] par = par_np
    cdef long[::1] gg = gen_np
    cdef Py_ssize_t i, j, m = 0
    cdef cplx a, b, c, d, na, nb, nc, nd
    cdef double r
    for i in range(n):
        a = mats[i, 0]; b = mats[i, 1]; c = mats[i, 2]; d = mats[i, 3]
        for j in range(k):
            if last[i] >= 0 and j == inverse[last[i]]:
                continue
            na = a * gens[j, 0] + b * gens[j, 2]
            nb = a * gens[j, 1] + b * gens[j, 3]
            nc = c * gens[j, 0] + d * gens[j, 2]
            nd = c * gens[j, 1] + d * gens[j, 3]
            r = _rho(na, nb, nc, nd)
            if r > rho_cut:
                continue
            out[m, 0] = na; out[m, 1] = nb; out[m, 2] = nc; out[m, 3] = nd
            rho[m] = r
            par[m] = i
            gg[m] = j
            m += 1
    return out_np[:m].copy(), rho_np[:m].copy(), par_np[:m].copy(), gen_np[:m].copy()


cdef inline double _cross(double ox, double oy, double ax, double ay,
                          double bx, double by) nogil:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


cdef Py_ssize_t _chain(const double[:, ::1] pts, long[::1] idx, double[:, ::1] hull):
    """Andrew's monotone chain into ``hull``; returns the vertex count (no repeat)."""
    cdef Py_ssize_t n = pts.shape[0], h = 0, t, i
    cdef double x, y
    for i in range(n):
        x = pts[idx[i], 0]; y = pts[idx[i], 1]
        while h >= 2 and _cross(hull[h - 2, 0], hull[h - 2, 1], hull[h - 1, 0],
                                hull[h - 1, 1], x, y) <= 0:
            h -= 1
        hull[h, 0] = x; hull[h, 1] = y
        h += 1
    t = h + 1
    for i in range(n - 2, -1, -1):
        x = pts[idx[i], 0]; y = pts[idx[i], 1]
        while h >= t and _cross(hull[h - 2, 0], hull[h - 2, 1], hull[h - 1, 0],
                                hull[h - 1, 1], x, y) <= 0:
            h -= 1
        hull[h, 0] = x; hull[h, 1] = y
        h += 1
    if h > 1:
        h -= 1
    if h == 2 and hull[0, 0] == hull[1, 0] and hull[0, 1] == hull[1, 1]:
        h = 1
    return h


cdef _hull_array(const double[:, ::1] pts):
    order = np.lexsort((np.asarray(pts[:, 1]), np.asarray(pts[:, 0])))
    cdef long[::1] idx = order.astype(np.int64)
    hull_np = np.empty((2 * pts.shape[0] + 1, 2), dtype=np.float64)
    cdef Py_ssize_t h = _chain(pts, idx, hull_np)
    return hull_np[:h].copy()


def convex_hull(const double[:, ::1] pts):
    """Hull vertices in counter-clockwise order, starting at the lowest-leftmost point."""
    if pts.shape[0] == 0:
        return np.empty((0, 2), dtype=np.float64)
    return _hull_array(pts)


def min_width(const double[:, ::1] pts):
    """Thinnest strip containing ``pts`` by rotating calipers over the hull.

    Returns ``(half_width, (px, py), (ux, uy))`` with the strip's midline
    through ``p`` in unit direction ``u``.
    """
    cdef Py_ssize_t n = pts.shape[0]
    if n == 0:
        raise ValueError("empty point set")
    hull_np = _hull_array(pts)
    cdef double[:, ::1] hull = hull_np
    cdef Py_ssize_t h = hull_np.shape[0]
    cdef double x, y, r
    if h == 1:
        return 0.0, (hull[0, 0], hull[0, 1]), (1.0, 0.0)
    if h == 2:
        x = hull[1, 0] - hull[0, 0]; y = hull[1, 1] - hull[0, 1]
        r = sqrt(x * x + y * y)
        return 0.0, (hull[0, 0], hull[0, 1]), (x / r, y / r)

    cdef double best = 1e300, ex, ey, el, dist, bx = 0, by = 0, bpx = 0, bpy = 0, nx, ny
    cdef Py_ssize_t e, far = 0, nxt, i, steps
    # seed the antipodal pointer by a full scan against the first edge so ties
    # between collinear neighbours cannot strand it at distance zero
    for i in range(h):
        if (fabs(_cross(hull[0, 0], hull[0, 1], hull[1, 0], hull[1, 1], hull[i, 0], hull[i, 1]))
                > fabs(_cross(hull[0, 0], hull[0, 1], hull[1, 0], hull[1, 1],
                              hull[far, 0], hull[far, 1]))):
            far = i
    for e in range(h):
        nxt = (e + 1) % h
        ex = hull[nxt, 0] - hull[e, 0]
        ey = hull[nxt, 1] - hull[e, 1]
        el = sqrt(ex * ex + ey * ey)
        if el == 0:
            continue
        steps = 0
        while steps < h:
            dist = fabs(_cross(hull[e, 0], hull[e, 1], hull[nxt, 0], hull[nxt, 1],
                               hull[(far + 1) % h, 0], hull[(far + 1) % h, 1]))
            if dist >= fabs(_cross(hull[e, 0], hull[e, 1], hull[nxt, 0], hull[nxt, 1],
                                   hull[far, 0], hull[far, 1])) and (far + 1) % h != e:
                far = (far + 1) % h
                steps += 1
            else:
                break
        dist = fabs(_cross(hull[e, 0], hull[e, 1], hull[nxt, 0], hull[nxt, 1],
                           hull[far, 0], hull[far, 1])) / el
        if dist < best:
            best = dist
            bx = ex / el; by = ey / el
            # unit normal pointing at the antipodal vertex; midline is halfway
            nx = -by; ny = bx
            if (hull[far, 0] - hull[e, 0]) * nx + (hull[far, 1] - hull[e, 1]) * ny < 0:
                nx = -nx; ny = -ny
            bpx = hull[e, 0] + 0.5 * dist * nx
            bpy = hull[e, 1] + 0.5 * dist * ny
    return 0.5 * best, (bpx, bpy), (bx, by)


def diameter(const double[:, ::1] pts):
    """Largest pairwise distance, by rotating calipers over the convex hull."""
    cdef Py_ssize_t n = pts.shape[0]
    if n < 2:
        return 0.0
    hull_np = _hull_array(pts)
    cdef double[:, ::1] hull = hull_np
    cdef Py_ssize_t h = hull_np.shape[0], i, j, nxt
    cdef double x, y, best = 0.0, d
    if h <= 2:
        x = hull[h - 1, 0] - hull[0, 0]; y = hull[h - 1, 1] - hull[0, 1]
        return sqrt(x * x + y * y)
    j = 1
    for i in range(h):
        nxt = (i + 1) % h
        while (fabs(_cross(hull[i, 0], hull[i, 1], hull[nxt, 0], hull[nxt, 1],
                           hull[(j + 1) % h, 0], hull[(j + 1) % h, 1]))
               > fabs(_cross(hull[i, 0], hull[i, 1], hull[nxt, 0], hull[nxt, 1],
                             hull[j, 0], hull[j, 1]))):
            j = (j + 1) % h
        x = hull[i, 0] - hull[j, 0]; y = hull[i, 1] - hull[j, 1]
        d = x * x + y * y
        if d > best:
            best = d
        x = hull[nxt, 0] - hull[j, 0]; y = hull[nxt, 1] - hull[j, 1]
        d = x * x + y * y
        if d > best:
            best = d
    return sqrt(best)


def greedy_select(const long[::1] order, const long[::1] indptr, const long[::1] indices):
    """Walk ``order``; keep a node unless a kept node listed it as a neighbour."""
    cdef Py_ssize_t n = indptr.shape[0] - 1, k, i, e
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] keep_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] blocked_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] keep = keep_arr
    cdef unsigned char[::1] blocked = blocked_arr
    for k in range(order.shape[0]):
        i = order[k]
        if blocked[i]:
            continue
        keep[i] = 1
        for e in range(indptr[i], indptr[i + 1]):
            blocked[indices[e]] = 1
    return keep_arr.astype(bool)
