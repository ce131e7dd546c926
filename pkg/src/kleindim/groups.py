"""Group presentations and breadth-first orbit enumeration.

Words are enumerated as right products ``w * g`` over freely reduced words
in the generators and their inverses.  Generator ``i`` (0-based) has signed
index ``i + 1``; its inverse has ``-(i + 1)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .moebius import (EQUAL_TOL, HASH_GRID, INF, Moebius, canonicalize_rows, disk_image,
                      displacement, format_moebius, parse_moebius)


class RelationMode(enum.Enum):
    FREE = "free"
    DEDUPE = "dedupe"


@dataclass(frozen=True)
class GroupPresentation:
    """Generators in the user's order; inverses are derived.

    ``pairing_disks`` optionally records closed disks ``(center, radius)``
    whose union is the complement of a fundamental domain on the sphere
    (for circle-pairing groups); it is used by combination checks.
    """

    generators: tuple
    labels: tuple = ()
    relation_mode: RelationMode = RelationMode.FREE
    pairing_disks: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("a presentation needs at least one generator")
        for g in gens:
            if g.is_identity():
                raise ValueError("generators must not be the identity")
        object.__setattr__(self, "generators", gens)
        labels = tuple(self.labels) or tuple(_default_label(i) for i in range(len(gens)))
        if len(labels) != len(gens):
            raise ValueError("one label per generator")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "relation_mode", RelationMode(self.relation_mode))

    @property
    def rank(self) -> int:
        return len(self.generators)

    def symmetric_generators(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows for ``g_0..g_{m-1}, g_0^-1..g_{m-1}^-1`` and the inverse map."""
        m = self.rank
        ms = list(self.generators) + [g.inverse() for g in self.generators]
        rows = np.array([[g.a, g.b, g.c, g.d] for g in ms], dtype=complex)
        inverse = np.concatenate([np.arange(m, 2 * m), np.arange(0, m)]).astype(np.int64)
        return np.ascontiguousarray(rows), inverse

    def prune_slack(self) -> float:
        return max(displacement(g) for g in self.generators)

    def conjugate(self, h: Moebius) -> "GroupPresentation":
        """Presentation of ``h G h^-1`` (disks are carried along when possible)."""
        hinv = h.inverse()
        gens = tuple(h @ g @ hinv for g in self.generators)
        disks = None
        if self.pairing_disks is not None:
            try:
                disks = tuple(disk_image(h, c, r) for c, r in self.pairing_disks)
            except ValueError:
                disks = None
        return GroupPresentation(gens, self.labels, self.relation_mode, disks, self.name)


def _default_label(i: int) -> str:
    return "abcdefghijklmnopqrstuvwxyz"[i] if i < 26 else f"g{i}"


@dataclass(frozen=True)
class OrbitPoint:
    word: tuple
    matrix: Moebius
    rho: float
    depth: int


@dataclass
class Orbit:
    """Enumerated group elements, stored column-wise.

    Row ``i`` has matrix ``mats[i]`` (entries a, b, c, d), displacement
    ``rho[i]``, word length ``depth[i]`` and is ``parent[i] * g[gen[i]]``.
    """

    presentation: GroupPresentation
    mats: np.ndarray
    rho: np.ndarray
    depth: np.ndarray
    parent: np.ndarray
    gen: np.ndarray
    max_depth_reached: int
    budget_hit: bool
    max_rho: float
    prune_slack: float
    depth_limited: bool = False

    def __len__(self):
        return len(self.rho)

    def __getitem__(self, i: int) -> OrbitPoint:
        row = self.mats[i]
        m = Moebius.from_matrix(row[0], row[1], row[2], row[3])
        return OrbitPoint(self.word(i), m, float(self.rho[i]), int(self.depth[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def truncated(self) -> bool:
        return self.budget_hit

    def word(self, i: int) -> tuple:
        m = self.presentation.rank
        out = []
        while self.parent[i] >= 0:
            g = int(self.gen[i])
            out.append(g + 1 if g < m else -(g - m + 1))
            i = int(self.parent[i])
        return tuple(reversed(out))

    def canonical_rows(self) -> np.ndarray:
        return canonicalize_rows(self.mats)


def enumerate_orbit(g: GroupPresentation, max_depth: int, max_rho: float = math.inf,
                    max_points: int = 1_000_000, prune_slack: Optional[float] = None,
                    mode: Optional[RelationMode] = None) -> Orbit:
    """Breadth-first orbit enumeration over freely reduced words.

    Branches are cut once their displacement exceeds ``max_rho + prune_slack``
    (slack defaults to the largest generator displacement), so every element
    with ``rho <= max_rho`` whose prefixes stay within the slack band is found.
    Hitting ``max_points`` sets ``budget_hit`` instead of failing.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    if max_points <= 0:
        raise ValueError("max_points must be positive")
    mode = RelationMode(mode) if mode is not None else g.relation_mode
    slack = g.prune_slack() if prune_slack is None else float(prune_slack)
    cut = max_rho + slack if math.isfinite(max_rho) else np.inf
    rows, inverse = g.symmetric_generators()
    if mode is RelationMode.FREE:
        mats, rho, depth, parent, gen, hit, reached = _backend.enumerate_free(
            rows, inverse, int(max_depth), float(cut), int(max_points))
    else:
        mats, rho, depth, parent, gen, hit, reached = _enumerate_dedupe(
            rows, inverse, int(max_depth), float(cut), int(max_points))
    return Orbit(g, mats, rho, depth, parent, gen, int(reached), bool(hit), float(max_rho),
                 slack, depth_limited=int(reached) >= max_depth)


def _quantize(rows: np.ndarray) -> np.ndarray:
    v = np.empty((len(rows), 8))
    v[:, 0::2] = rows.real
    v[:, 1::2] = rows.imag
    return np.round(v / HASH_GRID).astype(np.int64)


def _enumerate_dedupe(gens, inverse, max_depth, cut, max_points):
    """Free enumeration with PSL(2,C) duplicates merged (first writer wins)."""
    mats = [np.array([[1, 0, 0, 1]], dtype=complex)]
    rho = [np.zeros(1)]
    depth = [np.zeros(1, np.int64)]
    parent = [np.full(1, -1, np.int64)]
    gen = [np.full(1, -1, np.int64)]
    canon_store = [canonicalize_rows(mats[0])]
    seen: dict[bytes, list[int]] = {_quantize(canon_store[0])[0].tobytes(): [0]}
    n, offset, level, hit = 1, 0, 0, False
    all_canon = canon_store[0]
    while level < max_depth and n < max_points:
        m, r, p, gg = _backend.expand_level(mats[-1], gen[-1], gens, inverse, cut)
        if len(m) == 0:
            break
        canon = canonicalize_rows(m)
        keys = _quantize(canon)
        keep = []
        new_rows = []
        for i in range(len(m)):
            key = keys[i].tobytes()
            bucket = seen.get(key)
            dup = False
            if bucket is not None:
                for j in bucket:
                    other = all_canon[j] if j < len(all_canon) else new_rows[j - len(all_canon)]
                    if np.abs(other - canon[i]).max() <= EQUAL_TOL:
                        dup = True
                        break
            if dup:
                continue
            idx = n + len(keep)
            seen.setdefault(key, []).append(idx)
            keep.append(i)
            new_rows.append(canon[i])
            if n + len(keep) >= max_points:
                hit = True
                break
        if not keep:
            break
        level += 1
        keep = np.array(keep, dtype=np.int64)
        mats.append(m[keep])
        rho.append(r[keep])
        depth.append(np.full(len(keep), level, np.int64))
        parent.append(p[keep] + offset)
        gen.append(gg[keep])
        all_canon = np.concatenate([all_canon, canon[keep]])
        offset = n
        n += len(keep)
        if hit:
            break
    return (np.concatenate(mats), np.concatenate(rho), np.concatenate(depth),
            np.concatenate(parent), np.concatenate(gen), hit, level)


@dataclass(frozen=True)
class OrbitCountTable:
    radii: np.ndarray
    counts: np.ndarray
    truncated: bool = False
    max_rho: float = math.inf
    prune_slack: float = 0.0

    def __post_init__(self):
        if np.any(np.diff(self.counts) < 0):
            raise ValueError("counts must be non-decreasing")


def orbit_counts(points, radii: Sequence[float]) -> OrbitCountTable:
    """N(R) = #{orbit points with rho <= R} for each radius."""
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    if isinstance(points, Orbit):
        rho = points.rho
        meta = dict(truncated=points.budget_hit, max_rho=points.max_rho,
                    prune_slack=points.prune_slack)
    else:
        rho = np.array([p.rho for p in points], dtype=float)
        meta = {}
    counts = np.searchsorted(np.sort(rho), radii, side="right")
    return OrbitCountTable(radii, counts.astype(np.int64), **meta)


def apply_rows(rows: np.ndarray, z) -> np.ndarray:
    """Images of one sphere point under many matrices; infinity is ``inf+0j``."""
    a, b, c, d = rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]
    with np.errstate(all="ignore"):
        if z is INF:
            out = a / c
            out[c == 0] = np.inf
        else:
            den = c * z + d
            out = (a * z + b) / den
            out[den == 0] = np.inf
    return out


def sphere_orbit(g: GroupPresentation, basepoint, max_depth: int,
                 max_points: int = 1_000_000) -> list:
    """Images of ``basepoint`` under the enumerated orbit, with word depth."""
    orbit = enumerate_orbit(g, max_depth, max_points=max_points)
    img = apply_rows(orbit.mats, basepoint)
    return [(INF if not np.isfinite(z) else complex(z), int(k)) for z, k in zip(img, orbit.depth)]


# -- text formats -------------------------------------------------------------

def format_group(g: GroupPresentation) -> str:
    lines = [f"generators {g.rank} {g.relation_mode.value}"]
    lines += [format_moebius(m) for m in g.generators]
    return "\n".join(lines) + "\n"


def parse_group(text: str) -> GroupPresentation:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty group description")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "generators":
        raise ValueError(f"bad header {lines[0]!r}; expected 'generators m mode'")
    m = int(head[1])
    if len(lines) - 1 != m:
        raise ValueError(f"header declares {m} generators, found {len(lines) - 1}")
    gens = [parse_moebius(ln) for ln in lines[1:]]
    return GroupPresentation(tuple(gens), relation_mode=RelationMode(head[2].lower()))


def write_orbit_csv(orbit: Orbit, path) -> None:
    m = orbit.mats
    cols = np.column_stack([orbit.depth, orbit.rho, m[:, 0].real, m[:, 0].imag, m[:, 1].real,
                            m[:, 1].imag, m[:, 2].real, m[:, 2].imag, m[:, 3].real,
                            m[:, 3].imag])
    header = "depth,rho,a_re,a_im,b_re,b_im,c_re,c_im,d_re,d_im"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in cols:
            fh.write(f"{int(row[0])}," + ",".join(repr(float(x)) for x in row[1:]) + "\n")


def read_orbit_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(depth, rho, mats)`` from an orbit dump."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    mats = data[:, 2::2] + 1j * data[:, 3::2]
    return data[:, 0].astype(np.int64), data[:, 1], mats
