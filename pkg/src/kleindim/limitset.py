"""Explicit Kleinian groups, limit-set sampling and geometric classifiers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from .groups import GroupPresentation, RelationMode, apply_rows, enumerate_orbit
from .moebius import (INF, Moebius, TransformClass, attracting_fixed_points,
                      classify, disk_image, is_inf, moebius)

# exact samples (elementary sets, synthetic clouds) get this covering radius
EXACT_RESOLUTION = 1e-9
RESOLUTION_PERCENTILE = 99.0
TANGENCY_TOL = 1e-9
# matrix entries grow like exp(rho / 2); beyond this fixed points lose all precision
SAMPLING_RHO_CAP = 80.0


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"disk radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def scaled(self, factor: float) -> "Disk":
        return Disk(self.center, self.radius * factor)

    def contains(self, z, tol: float = 0.0):
        return np.abs(np.asarray(z) - self.center) <= self.radius + tol

    def distance(self, other: "Disk") -> float:
        """Gap between the closed disks (negative when they overlap)."""
        return abs(self.center - other.center) - self.radius - other.radius

    def boundary(self, n: int) -> np.ndarray:
        t = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * t)

    def image(self, m: Moebius) -> "Disk":
        return Disk(*disk_image(m, self.center, self.radius))


@dataclass
class Horoball:
    """A disk in the ordinary set tangent at a parabolic fixed point."""

    ball: Disk
    tangency: complex
    parabolic: Moebius
    eta: Optional[float] = None

    def __post_init__(self):
        self.tangency = complex(self.tangency)
        r = self.ball.radius
        if abs(abs(self.tangency - self.ball.center) - r) > TANGENCY_TOL * max(1.0, r):
            raise ValueError("tangency point is not on the boundary circle")
        if classify(self.parabolic) is not TransformClass.PARABOLIC:
            raise ValueError("horoball stabilizer must be parabolic")
        w = self.parabolic(self.tangency)
        if is_inf(w) or abs(w - self.tangency) > 1e-7 * max(1.0, abs(self.tangency)):
            raise ValueError("parabolic does not fix the tangency point")


@dataclass(frozen=True)
class Frame:
    """Map from raw sphere coordinates to cloud coordinates.

    ``z -> (N(z) - shift) * scale`` with ``N(z) = 1 / (z - pole)`` when a
    pole was used to push the limit set off infinity, else ``N = id``.
    """

    shift: complex = 0j
    scale: float = 1.0
    pole: Optional[complex] = None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.pole is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                z = 1.0 / (z - self.pole)
        return (z - self.shift) * self.scale


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    resolution: float
    bbox: tuple
    normalized: bool = False
    elementary: bool = False
    provenance: str = ""
    frame: Frame = field(default_factory=Frame)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 2))
        if len(pts) == 0:
            raise ValueError("point cloud is empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud has non-finite coordinates")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        x0, y0, x1, y1 = (float(v) for v in self.bbox)
        span = max(x1 - x0, y1 - y0, 1.0)
        slop = 1e-12 * span
        if (pts[:, 0].min() < x0 - slop or pts[:, 0].max() > x1 + slop
                or pts[:, 1].min() < y0 - slop or pts[:, 1].max() > y1 + slop):
            raise ValueError("points outside the bounding box")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bbox", (x0, y0, x1, y1))
        object.__setattr__(self, "resolution", float(self.resolution))

    def __len__(self):
        return len(self.points)

    @property
    def complex(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def diameter(self) -> float:
        return diameter(self.points)

    @classmethod
    def from_points(cls, points, resolution: Optional[float] = None, normalize: bool = False,
                    provenance: str = "", exact: bool = False) -> "PointCloud":
        """Build a cloud, optionally rescaling it into ``[0, 1]^2`` with diameter 1.

        ``exact`` marks samples that are the whole set (resolution defaults
        to a numerical floor instead of a nearest-neighbour estimate).
        """
        pts = _as_xy(points)
        pts = _unique_rows(pts)
        diam = diameter(pts)
        frame = Frame()
        normalized = False
        if normalize and diam > 0:
            lo = pts.min(axis=0)
            frame = Frame(shift=complex(lo[0], lo[1]), scale=1.0 / diam)
            pts = (pts - lo) / diam
            normalized = True
        elementary = len(pts) <= 2
        if resolution is None:
            resolution = EXACT_RESOLUTION if (exact or elementary) else estimate_resolution(pts)
        elif normalized:
            resolution = resolution / diam
        return cls(pts, resolution, _bbox(pts), normalized, elementary, provenance, frame)

    def scaled(self, factor: float, offset=(0.0, 0.0)) -> "PointCloud":
        """Similarity image ``factor * p + offset`` (the normalized flag is dropped)."""
        pts = self.points * factor + np.asarray(offset, dtype=float)
        return PointCloud(pts, self.resolution * factor, _bbox(pts), False, self.elementary,
                          self.provenance)


@dataclass(frozen=True)
class PerfectnessReport:
    scales: np.ndarray
    eps_grid: np.ndarray
    worst: np.ndarray  # worst annulus ratio found at each scale
    eps_hat: float
    n_centers: int

    def rows(self):
        return [(float(r), float(e)) for r, e in zip(self.scales, self.worst)]


class SamplingMethod(enum.Enum):
    WORD_FIXED_POINTS = "word-fixed-points"
    ORBIT_ACCUMULATION = "orbit-accumulation"


# --------------------------------------------------------------------- geometry

def _as_xy(points) -> np.ndarray:
    a = np.asarray(points)
    if np.iscomplexobj(a):
        a = a.reshape(-1)
        return np.column_stack([a.real, a.imag]).astype(float)
    return np.asarray(a, dtype=float).reshape(-1, 2)


def _unique_rows(pts: np.ndarray, grid: float = 1e-13) -> np.ndarray:
    if len(pts) < 2:
        return pts
    scale = max(float(np.abs(pts).max()), 1.0)
    key = np.round(pts / (grid * scale))
    _, idx = np.unique(key, axis=0, return_index=True)
    return pts[np.sort(idx)]


def _bbox(pts: np.ndarray) -> tuple:
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def diameter(points) -> float:
    """Diameter of a planar set."""
    pts = _as_xy(points)
    if len(pts) < 2:
        return 0.0
    return float(_backend.diameter(np.ascontiguousarray(pts)))


def estimate_resolution(points, percentile: float = RESOLUTION_PERCENTILE) -> float:
    """Statistical covering radius: a high percentile of nearest-neighbour gaps."""
    pts = _as_xy(points)
    if len(pts) < 2:
        return EXACT_RESOLUTION
    d, _ = cKDTree(pts).query(pts, k=2)
    h = float(np.percentile(d[:, 1], percentile))
    return h if h > 0 else EXACT_RESOLUTION


# ----------------------------------------------------------------- constructors

def pairing_map(c1: Disk, c2: Disk) -> Moebius:
    """The map ``z -> c2 + r1 r2 / (z - c1)``: exterior of ``c1`` onto interior of ``c2``."""
    a, b = c2.center, c1.radius * c2.radius - c1.center * c2.center
    return moebius(a, b, 1.0, -c1.center)


def schottky_from_circles(pairs: Sequence[tuple], samples: int = 100,
                          name: str = "schottky") -> GroupPresentation:
    """Schottky group pairing each ``(C1, C2)``; ping-pong is checked by sampling."""
    pairs = [(Disk(*p) if not isinstance(p, Disk) else p,
              Disk(*q) if not isinstance(q, Disk) else q) for p, q in pairs]
    if not pairs:
        raise ValueError("need at least one pair of disks")
    disks = [d for pq in pairs for d in pq]
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            if disks[i].distance(disks[j]) <= 0:
                raise ValueError(f"disks {i} and {j} are not disjoint")
    gens = [pairing_map(c1, c2) for c1, c2 in pairs]
    for k, (g, (c1, c2)) in enumerate(zip(gens, pairs)):
        ginv = g.inverse()
        for d in disks:
            z = d.boundary(samples)
            if d is not c1 and not np.all(c2.contains(apply_rows(g.as_array().reshape(1, 4), z))):
                raise ValueError(f"ping-pong fails for generator {k}")
            if d is not c2 and not np.all(c1.contains(apply_rows(ginv.as_array().reshape(1, 4), z))):
                raise ValueError(f"ping-pong fails for the inverse of generator {k}")
    return GroupPresentation(tuple(gens), pairing_disks=tuple((d.center, d.radius) for d in disks),
                             name=name)


def schottky4() -> GroupPresentation:
    """Built-in rank-2 Schottky group: radius-1/2 circles at 1, -1, i, -i."""
    return schottky_from_circles([(Disk(1, 0.5), Disk(-1, 0.5)), (Disk(1j, 0.5), Disk(-1j, 0.5))],
                                 name="schottky4")


def cyclic_parabolic() -> GroupPresentation:
    return GroupPresentation((moebius(1, 1, 0, 1),), name="cyclic-parabolic")


def cyclic_loxodromic(multiplier: float = 2.0) -> GroupPresentation:
    return GroupPresentation((moebius(multiplier, 0, 0, 1 / multiplier),), name="cyclic-loxodromic")


CAYLEY = moebius(1, -1j, 1, 1j)  # upper half-plane onto the unit disk


def modular_group() -> GroupPresentation:
    """PSL(2,Z) generated by ``z -> -1/z`` and ``z -> z+1``, moved to the unit disk."""
    s, t = moebius(0, -1, 1, 0), moebius(1, 1, 0, 1)
    g = GroupPresentation((s, t), labels=("s", "t"), relation_mode=RelationMode.DEDUPE,
                          name="modular")
    return g.conjugate(CAYLEY)


def gamma2() -> GroupPresentation:
    """The level-2 congruence subgroup in the unit disk.

    Free on two parabolics; the fundamental domain is the complement of four
    mutually tangent disks of radius 1 centred at the points ``+-1 +- i``.
    """
    a, b = moebius(1, 2, 0, 1), moebius(1, 0, 2, 1)
    hinv = CAYLEY.inverse()
    petals = tuple((complex(x, y), 1.0) for x in (1, -1) for y in (1, -1))
    return GroupPresentation((CAYLEY @ a @ hinv, CAYLEY @ b @ hinv), labels=("a", "b"),
                             pairing_disks=petals, name="gamma2")


def _preserves_unit_disk(g: GroupPresentation, tol: float = 1e-9) -> bool:
    z = np.exp(2j * np.pi * np.arange(8) / 8)
    for m in g.generators:
        w = apply_rows(m.as_array().reshape(1, 4), z)
        if not np.all(np.abs(np.abs(w) - 1) <= tol):
            return False
        if is_inf(m(0)) or abs(m(0)) >= 1:
            return False
    return True


def _affine_into(d: Disk) -> Moebius:
    return moebius(d.radius, d.center, 0, 1)


def free_product_packing(seed1: GroupPresentation, disk1: Disk, seed2: GroupPresentation,
                         disk2: Disk, separation: float = 1000.0) -> GroupPresentation:
    """Free product of two Fuchsian seeds placed in ``disk1`` and ``disk2``.

    When both seeds record pairing disks the combination is accepted iff
    the two families of (conjugated) pairing disks are disjoint, which
    puts each factor's fundamental-domain complement inside the other's
    fundamental domain.  Otherwise the disks must be far apart relative to
    their size: ``dist >= separation * min(diam)``.
    """
    disk1, disk2 = Disk(disk1.center, disk1.radius), Disk(disk2.center, disk2.radius)
    for k, s in enumerate((seed1, seed2), 1):
        if not _preserves_unit_disk(s):
            raise ValueError(f"seed {k} does not preserve the unit disk")
    if disk1.distance(disk2) <= 0:
        raise ValueError("packing disks overlap")
    g1 = seed1.conjugate(_affine_into(disk1))
    g2 = seed2.conjugate(_affine_into(disk2))
    if g1.pairing_disks is not None and g2.pairing_disks is not None:
        for c1, r1 in g1.pairing_disks:
            for c2, r2 in g2.pairing_disks:
                if abs(c1 - c2) <= r1 + r2:
                    raise ValueError("pairing disks of the two factors intersect")
        disks = g1.pairing_disks + g2.pairing_disks
    else:
        gap = disk1.distance(disk2)
        if gap < separation * min(disk1.diameter, disk2.diameter):
            raise ValueError(f"disks too close: gap {gap:.3g} for diameters "
                             f"{disk1.diameter:.3g}, {disk2.diameter:.3g}")
        disks = None
    labels = tuple(f"{x}1" for x in seed1.labels) + tuple(f"{x}2" for x in seed2.labels)
    return GroupPresentation(g1.generators + g2.generators, labels, RelationMode.FREE, disks,
                             name="packing")


@dataclass(frozen=True)
class PackingConfiguration:
    seed1: GroupPresentation
    disk1: Disk
    seed2: GroupPresentation
    disk2: Disk

    def group(self) -> GroupPresentation:
        return free_product_packing(self.seed1, self.disk1, self.seed2, self.disk2)

    def factors(self) -> tuple[GroupPresentation, GroupPresentation]:
        """The two seeds moved onto their disks, pairing disks included."""
        return (self.seed1.conjugate(_affine_into(self.disk1)),
                self.seed2.conjugate(_affine_into(self.disk2)))


def _fuchsian_frame(m: Moebius) -> tuple[Disk, Moebius]:
    """Split ``m`` (unit disk onto a bounded disk) as affine after a disk automorphism."""
    d = Disk(*disk_image(m, 0, 1.0))
    auto = _affine_into(d).inverse() @ m
    return d, auto


def packing_configuration(ratio: float = 4.65) -> PackingConfiguration:
    """Two copies of the level-2 group whose limit circles interlock.

    The second copy is the image of the first under ``z -> ratio * w / z``
    (``w`` an eighth root of unity, so its petals point into the notches of
    the first); ``ratio`` must exceed about 4.612 for the petals to clear.
    A point between the two necklaces is then sent to infinity so both
    invariant disks become bounded and congruent.
    """
    w = np.exp(0.25j * np.pi)
    flip = moebius(0, ratio * w, 1, 0)
    pole = math.sqrt(ratio) * np.exp(0.125j * np.pi)
    push = moebius(0, 1, 1, -pole)
    base = gamma2()
    d1, a1 = _fuchsian_frame(push)
    d2, a2 = _fuchsian_frame(push @ flip)
    s1 = base.conjugate(a1)
    s2 = base.conjugate(a2)
    return PackingConfiguration(
        GroupPresentation(s1.generators, s1.labels, pairing_disks=s1.pairing_disks,
                          name="gamma2"), d1,
        GroupPresentation(s2.generators, s2.labels, pairing_disks=s2.pairing_disks,
                          name="gamma2"), d2)


def packing() -> GroupPresentation:
    return packing_configuration().group()


BUILTIN_GROUPS = {
    "cyclic-parabolic": cyclic_parabolic,
    "cyclic-loxodromic": cyclic_loxodromic,
    "modular": modular_group,
    "schottky4": schottky4,
    "gamma2": gamma2,
    "packing": packing,
}


# -------------------------------------------------------------------- sampling

def _sphere_xyz(z: np.ndarray) -> np.ndarray:
    d = 1 + np.abs(z) ** 2
    return np.column_stack([2 * z.real / d, 2 * z.imag / d, (np.abs(z) ** 2 - 1) / d])


def _ordinary_pole(z: np.ndarray, n_candidates: int = 200) -> complex:
    """A point of the sphere far (chordally) from the finite sample ``z``."""
    k = np.arange(n_candidates) + 0.5
    phi = np.arccos(1 - 2 * k / n_candidates)
    theta = np.pi * (1 + 5 ** 0.5) * k
    # skip the north pole region: candidates must be finite points
    cand = np.tan(phi / 2) * np.exp(1j * theta)
    cand = cand[np.abs(cand) < 1e3]
    tree = cKDTree(_sphere_xyz(z))
    dist, _ = tree.query(_sphere_xyz(cand))
    return complex(cand[int(np.argmax(dist))])


def ball_enumeration(g: GroupPresentation, budget: int, steps: int = 8, fill: float = 0.8):
    """Complete enumeration of a displacement ball holding at most ``budget`` elements.

    The radius is bracketed by doubling, then refined by extrapolating the
    orbit growth rate measured on the last complete run (bisection when the
    prediction leaves the bracket).  Stops once ``fill * budget`` is reached.
    """
    def run(r):
        return enumerate_orbit(g, 10 ** 9, max_rho=r, max_points=budget)

    lo = 0.0
    best = run(lo)
    hi = max(1.0, 2 * g.prune_slack())
    while True:
        if hi >= SAMPLING_RHO_CAP:
            trial = run(SAMPLING_RHO_CAP)
            if not trial.budget_hit:
                return trial
            hi = SAMPLING_RHO_CAP
            break
        trial = run(hi)
        if trial.budget_hit:
            break
        lo, best = hi, trial
        hi *= 2
    for _ in range(steps):
        n = len(best)
        if n >= fill * budget:
            break
        inner = int(np.sum(best.rho <= lo - 1.0))
        guess = 0.5 * (lo + hi)
        if lo > 1.0 and 0 < inner < n:
            growth = math.log(n / inner)
            guess = lo + math.log(0.9 * budget / n) / growth
            if not lo < guess < hi:
                guess = 0.5 * (lo + hi)
        trial = run(guess)
        if trial.budget_hit:
            hi = guess
        else:
            lo, best = guess, trial
    return best


def sample_limit_set(g: GroupPresentation, budget: int = 100_000,
                     method: SamplingMethod | str = SamplingMethod.WORD_FIXED_POINTS,
                     basepoint=INF, max_rho: Optional[float] = None,
                     normalize: bool = True) -> PointCloud:
    """Sample the limit set of ``g`` from an orbit enumeration of ``budget`` elements.

    Word fixed points: attracting fixed points of every enumerated
    non-elliptic element.  Orbit accumulation: images of ``basepoint`` under
    the deepest complete word-length level.  If the sample reaches infinity
    the cloud is pushed through ``z -> 1/(z - p)`` for a far ordinary point
    ``p`` before normalizing.
    """
    method = SamplingMethod(method)
    if budget < 100:
        raise ValueError("budget must be at least 100")
    if max_rho is None:
        orbit = ball_enumeration(g, int(budget))
        rho_cap = orbit.max_rho
    else:
        rho_cap = min(float(max_rho), SAMPLING_RHO_CAP)
        orbit = enumerate_orbit(g, 10 ** 9, max_rho=rho_cap, max_points=int(budget))
    rows = orbit.mats
    if method is SamplingMethod.WORD_FIXED_POINTS:
        z, ok = attracting_fixed_points(rows[1:])
        # rows whose attracting point is infinity show up as nan with ok set
        at_inf = int(np.sum(ok & np.isnan(z)))
        z = z[ok & ~np.isnan(z)]
    else:
        level = orbit.max_depth_reached
        if orbit.budget_hit and level > 1:
            level -= 1
        sel = rows[orbit.depth == level]
        if is_inf(basepoint):
            a, c = sel[:, 0], sel[:, 2]
            with np.errstate(all="ignore"):
                z = a / c
        else:
            z = apply_rows(sel, complex(basepoint))
        at_inf = int(np.sum(~np.isfinite(z)))
        z = z[np.isfinite(z)]
    frame_pole = None
    if at_inf or (z.size and np.abs(z).max() > 1e6):
        frame_pole = _ordinary_pole(z) if z.size else 0j
        with np.errstate(divide="ignore", invalid="ignore"):
            z = 1.0 / (z - frame_pole)
        if at_inf:
            z = np.concatenate([z, [0j]])  # image of infinity
    if z.size == 0:
        raise ValueError("enumeration produced no limit points")
    provenance = (f"group={g.name or 'custom'} method={method.value} budget={budget} "
                  f"elements={len(orbit)} depth={orbit.max_depth_reached} "
                  f"budget_hit={int(orbit.budget_hit)}"
                  + f" max_rho={rho_cap:.6g}")
    cloud = PointCloud.from_points(z, normalize=normalize, provenance=provenance)
    if frame_pole is not None:
        f = cloud.frame
        cloud = PointCloud(cloud.points, cloud.resolution, cloud.bbox, cloud.normalized,
                           cloud.elementary, cloud.provenance,
                           Frame(f.shift, f.scale, frame_pole))
    return cloud


# ----------------------------------------------------------------- classifiers

DEFAULT_EPS_GRID = 2.0 ** (-np.arange(0, 41) / 4.0)


def uniformly_perfect(cloud: PointCloud, scales: Sequence[float],
                      eps_grid: Optional[Sequence[float]] = None, max_centers: int = 2000,
                      seed: int = 0) -> PerfectnessReport:
    """Worst annulus ratio ``eps`` such that every annulus ``eps r <= |x - y| <= r`` is hit.

    Centres are a seeded subsample of at most ``max_centers`` cloud points.
    For each scale the cloud is thinned to one representative per grid cell
    of side ``min(eps_grid) * r / 8`` (a subset, so results can only err low).
    """
    grid = np.sort(np.asarray(DEFAULT_EPS_GRID if eps_grid is None else eps_grid, float))[::-1]
    if grid.size == 0 or grid.min() <= 0 or grid.max() > 1:
        raise ValueError("eps_grid must lie in (0, 1]")
    scales = np.asarray(scales, dtype=float)
    if scales.size == 0:
        raise ValueError("no scales given")
    floor = 10 * cloud.resolution
    if np.any(scales < floor * (1 - 1e-12)):
        raise ValueError(f"scales below the resolution floor 10h = {floor:.3g}")
    pts = cloud.points
    rng = np.random.default_rng(seed)
    n = len(pts)
    idx = np.sort(rng.choice(n, size=max_centers, replace=False)) if n > max_centers else np.arange(n)
    centers = pts[idx]
    lo = pts.min(axis=0)
    worst = np.empty(len(scales))
    for k, r in enumerate(scales):
        cell = grid.min() * r / 8
        key = np.floor((pts - lo) / cell).astype(np.int64)
        _, rep = np.unique(key, axis=0, return_index=True)
        sub = pts[np.sort(rep)]
        tree = cKDTree(sub)
        hits = tree.query_ball_point(centers, r * (1 + 1e-12))
        best = 1.0
        for c, h in zip(centers, hits):
            if len(h) == 0:
                dmax = 0.0
            else:
                dmax = float(np.sqrt(((sub[h] - c) ** 2).sum(axis=1)).max())
            ratio = dmax / r
            ok = grid[grid <= ratio * (1 + 1e-12)]
            e = float(ok[0]) if ok.size else 0.0
            best = min(best, e)
            if best == 0.0:
                break
        worst[k] = best
    return PerfectnessReport(scales, grid, worst, float(worst.min()), len(centers))


def classify_horoball(b: Horoball, cloud: PointCloud, threshold: float = 0.0,
                      min_samples: int = 64) -> tuple[float, bool]:
    """Goodness ``eta``: farthest boundary point's distance to the cloud over ``diam(B)``.

    ``good`` is ``eta > threshold``; the threshold is a free parameter.
    The ball is sampled at ``4 diam(B) / h`` boundary points.
    """
    diam = b.ball.diameter
    if diam < cloud.resolution:
        raise ValueError("horoball is smaller than the cloud resolution")
    n = max(min_samples, int(math.ceil(4 * diam / cloud.resolution)))
    z = b.ball.boundary(n)
    dist, _ = cKDTree(cloud.points).query(np.column_stack([z.real, z.imag]))
    eta = float(dist.max() / diam)
    b.eta = eta
    return eta, eta > threshold


# ------------------------------------------------------------------------ I/O

def write_cloud_csv(cloud: PointCloud, path, extra_header: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cloud_csv_text(cloud, extra_header))


def cloud_csv_text(cloud: PointCloud, extra_header: Sequence[str] = ()) -> str:
    x0, y0, x1, y1 = cloud.bbox
    lines = [f"# {h}" for h in extra_header]
    lines += [f"# resolution={cloud.resolution!r}",
              f"# bbox={x0!r} {y0!r} {x1!r} {y1!r}",
              f"# normalized={int(cloud.normalized)}",
              f"# elementary={int(cloud.elementary)}",
              f"# provenance={cloud.provenance}",
              "x,y"]
    lines += [f"{x!r},{y!r}" for x, y in cloud.points.tolist()]
    return "\n".join(lines) + "\n"


def read_cloud_csv(path) -> PointCloud:
    meta = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line == "x,y":
                continue
            else:
                x, y = line.split(",")
                rows.append((float(x), float(y)))
    pts = np.array(rows, dtype=float).reshape(-1, 2)
    if "resolution" not in meta:
        return PointCloud.from_points(pts)
    bbox = tuple(float(v) for v in meta["bbox"].split()) if "bbox" in meta else _bbox(pts)
    return PointCloud(pts, float(meta["resolution"]), bbox, meta.get("normalized") == "1",
                      meta.get("elementary") == "1", meta.get("provenance", ""))


def render_svg(cloud: Optional[PointCloud] = None, disks: Sequence[Disk] = (),
               lines: Sequence[tuple] = (), size: int = 512, max_points: int = 200_000,
               dot: float = 0.6) -> str:
    """Deterministic SVG of a cloud, optional disks and line segments ``(z0, z1)``."""
    items = []
    if cloud is not None:
        items.append(cloud.points)
    for d in disks:
        items.append(np.array([[d.center.real - d.radius, d.center.imag - d.radius],
                               [d.center.real + d.radius, d.center.imag + d.radius]]))
    for z0, z1 in lines:
        items.append(np.array([[z0.real, z0.imag], [z1.real, z1.imag]]))
    if not items:
        raise ValueError("nothing to render")
    allp = np.vstack(items)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.02 * span
    s = size / (span + 2 * pad)

    def tx(x, y):
        return (x - lo[0] + pad) * s, size - (y - lo[1] + pad) * s

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    for d in disks:
        cx, cy = tx(d.center.real, d.center.imag)
        out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{d.radius * s:.3f}" '
                   'fill="none" stroke="#3366cc" stroke-width="0.8"/>')
    for z0, z1 in lines:
        x0, y0 = tx(z0.real, z0.imag)
        x1, y1 = tx(z1.real, z1.imag)
        out.append(f'<line x1="{x0:.3f}" y1="{y0:.3f}" x2="{x1:.3f}" y2="{y1:.3f}" '
                   'stroke="#cc3333" stroke-width="0.5"/>')
    if cloud is not None:
        pts = cloud.points
        if len(pts) > max_points:
            pts = pts[:: int(math.ceil(len(pts) / max_points))]
        out.append('<g fill="black">')
        out.extend(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{dot}"/>'
                   for x, y in (tx(px, py) for px, py in pts))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
