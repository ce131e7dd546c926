"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def _rho(rows):
    s = 0.5 * (np.abs(rows) ** 2).sum(axis=1)
    return np.arccosh(np.maximum(s, 1.0))


def expand_level(mats, last, gens, inverse, rho_cut):
    mats = np.asarray(mats, dtype=complex)
    gens = np.asarray(gens, dtype=complex)
    last = np.asarray(last, dtype=np.int64)
    inverse = np.asarray(inverse, dtype=np.int64)
    n, k = len(mats), len(gens)
    if n == 0:
        return (np.empty((0, 4), complex), np.empty(0), np.empty(0, np.int64),
                np.empty(0, np.int64))
    a, b, c, d = (mats[:, i, None] for i in range(4))
    ga, gb, gc, gd = (gens[None, :, i] for i in range(4))
    prod = np.stack([a * ga + b * gc, a * gb + b * gd, c * ga + d * gc, c * gb + d * gd],
                    axis=-1).reshape(n * k, 4)
    par = np.repeat(np.arange(n, dtype=np.int64), k)
    gen = np.tile(np.arange(k, dtype=np.int64), n)
    forbidden = np.where(last >= 0, inverse[np.maximum(last, 0)], -1)
    keep = gen != np.repeat(forbidden, k)
    rho = _rho(prod)
    keep &= rho <= rho_cut
    return prod[keep], rho[keep], par[keep], gen[keep]


def enumerate_free(gens, inverse, max_depth, rho_cut, max_points):
    gens = np.ascontiguousarray(gens, dtype=complex)
    inverse = np.asarray(inverse, dtype=np.int64)
    mats = [np.array([[1, 0, 0, 1]], dtype=complex)]
    rho = [np.zeros(1)]
    depth = [np.zeros(1, np.int64)]
    parent = [np.full(1, -1, np.int64)]
    gen = [np.full(1, -1, np.int64)]
    if max_points <= 1:
        return mats[0], rho[0], depth[0], parent[0], gen[0], max_points <= 0, 0
    n = 1
    offset = 0
    level = 0
    budget_hit = False
    while level < max_depth:
        m, r, p, g = expand_level(mats[-1], gen[-1], gens, inverse, rho_cut)
        if len(m) == 0:
            break
        level += 1
        room = max_points - n
        if len(m) >= room:
            m, r, p, g = m[:room], r[:room], p[:room], g[:room]
            budget_hit = True
        mats.append(m)
        rho.append(r)
        depth.append(np.full(len(m), level, np.int64))
        parent.append(p + offset)
        gen.append(g)
        offset = n
        n += len(m)
        if budget_hit:
            break
    return (np.concatenate(mats), np.concatenate(rho), np.concatenate(depth),
            np.concatenate(parent), np.concatenate(gen), budget_hit, level)


def _hull(pts):
    pts = np.unique(pts, axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def min_width(pts):
    pts = np.asarray(pts, dtype=float)
    if len(pts) == 0:
        raise ValueError("empty point set")
    hull = _hull(pts)
    if len(hull) == 1:
        return 0.0, (float(hull[0, 0]), float(hull[0, 1])), (1.0, 0.0)
    if len(hull) == 2:
        v = hull[1] - hull[0]
        v = v / np.hypot(*v)
        return 0.0, (float(hull[0, 0]), float(hull[0, 1])), (float(v[0]), float(v[1]))
    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    ok = lengths > 0
    hull_e, edges, lengths = hull[ok], edges[ok], lengths[ok]
    u = edges / lengths[:, None]
    normal = np.stack([-u[:, 1], u[:, 0]], axis=1)
    # hull is counter-clockwise, so every vertex lies on the +normal side
    heights = np.einsum("ejk,ek->ej", hull[None, :, :] - hull_e[:, None, :], normal)
    width = heights.max(axis=1)
    e = int(np.argmin(width))
    w = float(width[e])
    p = hull_e[e] + 0.5 * w * normal[e]
    return 0.5 * w, (float(p[0]), float(p[1])), (float(u[e, 0]), float(u[e, 1]))


def diameter(pts, directions=2048):
    """Widest projection over a fan of directions, refined among its extreme points."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    hull = _hull(pts)
    if len(hull) > 64:
        t = np.pi * np.arange(directions) / directions
        hi = np.empty(directions, np.int64)
        lo = np.empty(directions, np.int64)
        width = np.empty(directions)
        step = max(1, (1 << 24) // len(hull))
        for k in range(0, directions, step):
            tk = t[k:k + step]
            proj = np.stack([np.cos(tk), np.sin(tk)], axis=1) @ hull.T
            j = np.arange(len(tk))
            hi[k:k + step], lo[k:k + step] = proj.argmax(axis=1), proj.argmin(axis=1)
            width[k:k + step] = proj[j, hi[k:k + step]] - proj[j, lo[k:k + step]]
        best = np.argsort(width)[-16:]
        hull = hull[np.unique(np.concatenate([hi[best], lo[best]]))]
    diff = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def greedy_select(order, indptr, indices):
    n = len(indptr) - 1
    keep = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    for i in order:
        if blocked[i]:
            continue
        keep[i] = True
        blocked[indices[indptr[i]:indptr[i + 1]]] = True
    return keep


def convex_hull(pts):
    pts = np.asarray(pts, dtype=float)
    if len(pts) == 0:
        return np.empty((0, 2))
    return np.asarray(_hull(pts), dtype=float).reshape(-1, 2)
