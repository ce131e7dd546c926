"""Moebius transformations as normalized 2x2 complex matrices.

A :class:`Moebius` acts on the Riemann sphere by linear fractional maps and
on upper half-space by the Poincare extension.  Matrices are kept with
determinant one and a canonical global sign so that elements of PSL(2, C)
hash and compare consistently.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

# configuration constants
CLASSIFY_TOL = 1e-9
NORMALIZE_TOL = 1e-12
EQUAL_TOL = 1e-8
HASH_GRID = 1e-6


class _Infinity:
    """The point at infinity on the Riemann sphere (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

#: A sphere point is either a finite complex number or ``INF``.
SpherePoint = Union[complex, _Infinity]


def is_inf(p) -> bool:
    return p is INF


def chordal_distance(z: SpherePoint, w: SpherePoint) -> float:
    """Chordal distance on the Riemann sphere, with values in [0, 2]."""
    if z is INF and w is INF:
        return 0.0
    if z is INF:
        z, w = w, z
    if w is INF:
        return 2.0 / math.sqrt(1.0 + abs(z) ** 2)
    return 2.0 * abs(z - w) / math.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


class TransformClass(enum.Enum):
    IDENTITY = "identity"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"
    LOXODROMIC = "loxodromic"


def _canonical_sign(a, b, c, d, tol=NORMALIZE_TOL):
    for z in (a, b, c, d):
        if abs(z) > tol:
            if z.real < -tol or (abs(z.real) <= tol and z.imag < 0):
                return -a, -b, -c, -d
            return a, b, c, d
    return a, b, c, d


@dataclass(frozen=True, eq=False)
class Moebius:
    """Determinant-one matrix ``[[a, b], [c, d]]`` up to global sign.

    Construct through :meth:`from_matrix` (or :func:`moebius`) to get the
    normalization; the raw constructor trusts its arguments.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def from_matrix(cls, a, b=None, c=None, d=None) -> "Moebius":
        if b is None:
            m = np.asarray(a, dtype=complex).reshape(2, 2)
            a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        a, b, c, d = complex(a), complex(b), complex(c), complex(d)
        for z in (a, b, c, d):
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise ValueError("matrix entries must be finite")
        det = a * d - b * c
        if abs(det) < 1e-300:
            raise ValueError("singular matrix does not define a Moebius map")
        s = cmath.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        return cls(*_canonical_sign(a, b, c, d))

    @classmethod
    def identity(cls) -> "Moebius":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    # -- algebra ---------------------------------------------------------
    def __matmul__(self, other: "Moebius") -> "Moebius":
        return compose(self, other)

    def inverse(self) -> "Moebius":
        return Moebius(*_canonical_sign(self.d, -self.b, -self.c, self.a))

    def __call__(self, p: SpherePoint) -> SpherePoint:
        return apply(self, p)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    # -- comparison ------------------------------------------------------
    def distance(self, other: "Moebius") -> float:
        """Max-entry distance between the two matrices, minimized over sign."""
        x = np.array([self.a, self.b, self.c, self.d])
        y = np.array([other.a, other.b, other.c, other.d])
        return float(min(np.abs(x - y).max(), np.abs(x + y).max()))

    def isclose(self, other: "Moebius", tol: float = EQUAL_TOL) -> bool:
        return self.distance(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, Moebius):
            return NotImplemented
        return self.isclose(other)

    def __hash__(self):
        return hash(hash_key(self))

    def is_identity(self, tol: float = CLASSIFY_TOL) -> bool:
        return self.isclose(Moebius.identity(), tol)

    def __repr__(self):
        f = lambda z: f"{z.real:.6g}{z.imag:+.6g}j"
        return f"Moebius([[{f(self.a)}, {f(self.b)}], [{f(self.c)}, {f(self.d)}]])"


def moebius(a, b, c, d) -> Moebius:
    """Shorthand for :meth:`Moebius.from_matrix`."""
    return Moebius.from_matrix(a, b, c, d)


def hash_key(m: Moebius, grid: float = HASH_GRID) -> tuple:
    """Quantized canonical entries; equal keys are candidates for equality only."""
    vals = []
    for z in (m.a, m.b, m.c, m.d):
        vals.append(int(round(z.real / grid)))
        vals.append(int(round(z.imag / grid)))
    return tuple(vals)


def compose(m1: Moebius, m2: Moebius) -> Moebius:
    """Matrix product ``m1 @ m2`` (apply ``m2`` first), renormalized."""
    a = m1.a * m2.a + m1.b * m2.c
    b = m1.a * m2.b + m1.b * m2.d
    c = m1.c * m2.a + m1.d * m2.c
    d = m1.c * m2.b + m1.d * m2.d
    return Moebius.from_matrix(a, b, c, d)


def apply(m: Moebius, p: SpherePoint) -> SpherePoint:
    a, b, c, d = m.a, m.b, m.c, m.d
    if p is INF:
        if c == 0:
            return INF
        return a / c
    num = a * p + b
    den = c * p + d
    if den == 0:
        return INF
    return num / den


def displacement(m: Moebius) -> float:
    """Hyperbolic distance moved by the basepoint (0, 0, 1) of upper half-space.

    cosh(rho) = (|a|^2 + |b|^2 + |c|^2 + |d|^2) / 2 for determinant one.
    """
    s = abs(m.a) ** 2 + abs(m.b) ** 2 + abs(m.c) ** 2 + abs(m.d) ** 2
    return math.acosh(max(1.0, 0.5 * s))


def classify(m: Moebius, tol: float = CLASSIFY_TOL) -> TransformClass:
    if m.is_identity(tol):
        return TransformClass.IDENTITY
    t2 = m.trace ** 2
    if abs(t2 - 4) <= tol:
        return TransformClass.PARABOLIC
    if abs(t2.imag) <= tol and -tol <= t2.real < 4:
        return TransformClass.ELLIPTIC
    return TransformClass.LOXODROMIC


def fixed_points(m: Moebius, tol: float = CLASSIFY_TOL) -> list:
    """Fixed points on the sphere: one for parabolics, otherwise two.

    For non-parabolic maps the first returned point is the attracting one
    when there is one (loxodromic case).
    """
    cls = classify(m, tol)
    if cls is TransformClass.IDENTITY:
        raise ValueError("the identity fixes every point")
    a, b, c, d = m.a, m.b, m.c, m.d
    if cls is TransformClass.PARABOLIC:
        if abs(c) <= tol:
            return [INF]
        return [(a - d) / (2 * c)]
    if abs(c) <= tol:
        # upper triangular: infinity and b/(d - a)
        finite = b / (d - a)
        # z -> (a/d) z + b/d attracts toward the finite point iff |a| < |d|
        return [finite, INF] if abs(a) < abs(d) else [INF, finite]
    disc = cmath.sqrt((a - d) ** 2 + 4 * b * c)
    z1 = (a - d + disc) / (2 * c)
    z2 = (a - d - disc) / (2 * c)
    # derivative at a fixed point z is 1/(cz + d)^2; attracting iff |cz+d| > 1
    if abs(c * z2 + d) > abs(c * z1 + d):
        z1, z2 = z2, z1
    return [z1, z2]


def translation_length(m: Moebius) -> float:
    """Complex-length real part: 2 * log|lambda| for the larger eigenvalue."""
    t = m.trace
    lam = (t + cmath.sqrt(t * t - 4)) / 2
    return 2.0 * abs(math.log(abs(lam))) if lam != 0 else 0.0


# -- vectorized helpers used by the enumeration core ------------------------

def stack(ms: Iterable[Moebius]) -> np.ndarray:
    """Pack Moebius values as rows ``(a, b, c, d)`` of a complex array."""
    return np.array([[m.a, m.b, m.c, m.d] for m in ms], dtype=complex).reshape(-1, 4)


def canonicalize_rows(rows: np.ndarray, tol: float = NORMALIZE_TOL) -> np.ndarray:
    """Apply the canonical sign rule row-wise to an ``(n, 4)`` complex array."""
    rows = np.array(rows, dtype=complex, copy=True)
    mag = np.abs(rows) > tol
    first = np.argmax(mag, axis=1)
    z = rows[np.arange(len(rows)), first]
    flip = (z.real < -tol) | ((np.abs(z.real) <= tol) & (z.imag < 0))
    rows[flip] *= -1
    return rows


def displacement_rows(rows: np.ndarray) -> np.ndarray:
    s = (np.abs(rows) ** 2).sum(axis=1)
    return np.arccosh(np.maximum(1.0, 0.5 * s))


def attracting_fixed_points(rows: np.ndarray, tol: float = CLASSIFY_TOL):
    """Attracting (or unique parabolic) fixed points of non-elliptic rows.

    Returns ``(points, mask)``: ``points`` is complex with ``nan`` where no
    finite point was produced; ``mask`` marks rows that are neither identity
    nor elliptic.
    """
    a, b, c, d = rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]
    t2 = (a + d) ** 2
    elliptic = (np.abs(t2.imag) <= tol) & (t2.real < 4 - tol) & (t2.real >= -tol)
    ident = (np.abs(b) <= tol) & (np.abs(c) <= tol) & (np.abs(a - d) <= tol)
    parabolic = (np.abs(t2 - 4) <= tol) & ~ident
    out = np.full(len(rows), np.nan + 0j)
    with np.errstate(all="ignore"):
        disc = np.sqrt((a - d) ** 2 + 4 * b * c)
        z1 = (a - d + disc) / (2 * c)
        z2 = (a - d - disc) / (2 * c)
        pick2 = np.abs(c * z2 + d) > np.abs(c * z1 + d)
        z = np.where(pick2, z2, z1)
        zp = (a - d) / (2 * c)
        z = np.where(parabolic, zp, z)
        small_c = np.abs(c) <= tol
        # upper-triangular: attracting finite point iff |a| < |d|
        zt = b / (d - a)
        z = np.where(small_c, np.where(np.abs(a) < np.abs(d), zt, np.nan), z)
    ok = ~elliptic & ~ident
    out[ok] = z[ok]
    out[~np.isfinite(out)] = np.nan
    return out, ok


def compose_rows(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Row-wise products ``left[i] @ right[i]``; either side may be a single row."""
    a, b, c, d = (np.asarray(left)[..., k] for k in range(4))
    e, f, g, h = (np.asarray(right)[..., k] for k in range(4))
    return np.stack([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], axis=-1)


def disk_image_rows(rows: np.ndarray, center: complex, radius: float):
    """Images of the closed disk ``D(center, radius)`` under each row.

    Returns ``(centers, radii)``; rows whose pole lies in the closed disk
    (image not a bounded disk) get ``nan``.
    """
    a, b, c, d = rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]
    with np.errstate(all="ignore"):
        pole = -d / c
        # reflect the pole in the circle; it maps to the image centre
        off = np.where(np.abs(c) > 0, pole - center, np.inf)
        sym = center + radius * radius / np.conj(off)
        cen = (a * sym + b) / (c * sym + d)
        edge = center + radius
        rad = np.abs((a * edge + b) / (c * edge + d) - cen)
    bad = np.abs(off) <= radius
    cen = np.where(bad, np.nan, cen)
    rad = np.where(bad, np.nan, rad)
    return cen, rad


def disk_image(m: Moebius, center: complex, radius: float) -> tuple[complex, float]:
    """Image of a closed disk under ``m``; raises if ``m`` sends a point of it to infinity."""
    cen, rad = disk_image_rows(m.as_array().reshape(1, 4), complex(center), float(radius))
    if not np.isfinite(rad[0]):
        raise ValueError("the pole of the map lies in the disk")
    return complex(cen[0]), float(rad[0])


def format_moebius(m: Moebius) -> str:
    """Text serialization: eight floats ``a.re a.im b.re b.im c.re c.im d.re d.im``."""
    return " ".join(repr(float(x)) for z in (m.a, m.b, m.c, m.d) for x in (z.real, z.imag))


def parse_moebius(line: str) -> Moebius:
    parts = line.split()
    if len(parts) != 8:
        raise ValueError(f"expected 8 floats, got {len(parts)}: {line!r}")
    v = [float(p) for p in parts]
    return Moebius.from_matrix(complex(v[0], v[1]), complex(v[2], v[3]),
                               complex(v[4], v[5]), complex(v[6], v[7]))
