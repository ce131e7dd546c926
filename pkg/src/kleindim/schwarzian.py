"""Schwarzian derivatives of analytic maps, numerically and in exact rational arithmetic.

``S(F) = F'''/F' - 3/2 (F''/F')^2``.  Numeric maps read their Taylor
coefficients off a small Cauchy contour; exact maps are rational functions
with Gaussian-rational coefficients and never round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .moebius import Moebius

CONTOUR_NODES = 64
DEFAULT_STEP = 0.25  # contour radius, as a fraction of the domain radius
MARGIN_STEPS = 4
UNIVALENCE_TOL = 1e-10


# ------------------------------------------------------- Gaussian rationals

class GaussRational:
    """``re + i im`` with ``Fraction`` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def of(cls, x) -> "GaussRational":
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x)
        z = complex(x)
        # Fraction(float) is exact, so a float input keeps its binary value
        return cls(Fraction(z.real), Fraction(z.imag))

    def __add__(self, o):
        o = GaussRational.of(o)
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-GaussRational.of(o))

    def __rsub__(self, o):
        return GaussRational.of(o) - self

    def __mul__(self, o):
        o = GaussRational.of(o)
        return GaussRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = GaussRational.of(o)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by exact zero")
        return GaussRational((self.re * o.re + self.im * o.im) / n,
                             (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, o):
        return GaussRational.of(o) / self

    def __eq__(self, o):
        try:
            o = GaussRational.of(o)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __repr__(self):
        return f"GaussRational({self.re}, {self.im})"


Poly = list  # low-to-high GaussRational coefficients


def _poly(coeffs) -> Poly:
    p = [GaussRational.of(c) for c in coeffs]
    while len(p) > 1 and p[-1].is_zero():
        p.pop()
    return p or [GaussRational()]


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out = [GaussRational() for _ in range(len(p) + len(q) - 1)]
    for i, a in enumerate(p):
        if a.is_zero():
            continue
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return out


def _poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    zero = GaussRational()
    return [(p[i] if i < len(p) else zero) + (q[i] if i < len(q) else zero) for i in range(n)]


def _taylor_shift(p: Poly, z: GaussRational, order: int) -> list:
    """First ``order + 1`` Taylor coefficients of ``p`` at ``z`` (repeated synthetic division)."""
    work = list(p)
    out = []
    for _ in range(order + 1):
        if not work:
            out.append(GaussRational())
            continue
        acc = GaussRational()
        quotient = []
        for c in reversed(work):
            acc = acc * z + c
            quotient.append(acc)
        out.append(quotient.pop())
        work = quotient[::-1]
    return out


def _series_div(num: list, den: list) -> list:
    if den[0].is_zero():
        raise ZeroDivisionError("pole at the evaluation point")
    out = []
    for k in range(len(num)):
        acc = num[k]
        for j in range(1, k + 1):
            if j < len(den):
                acc = acc - den[j] * out[k - j]
        out.append(acc / den[0])
    return out


# ------------------------------------------------------------ map objects

@dataclass(frozen=True)
class Numeric:
    """Contour radius relative to the domain radius."""

    step: float = DEFAULT_STEP


@dataclass(frozen=True)
class ExactRational:
    numerator: tuple
    denominator: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "numerator", tuple(_poly(self.numerator)))
        object.__setattr__(self, "denominator", tuple(_poly(self.denominator)))
        if all(c.is_zero() for c in self.denominator):
            raise ValueError("zero denominator")

    def taylor(self, z, order: int = 3) -> list:
        z = GaussRational.of(z)
        return _series_div(_taylor_shift(list(self.numerator), z, order),
                           _taylor_shift(list(self.denominator), z, order))

    def __call__(self, z: complex) -> complex:
        return complex(self.taylor(z, 0)[0])


@dataclass(frozen=True)
class AnalyticMap:
    evaluator: Callable[[complex], complex]
    center: complex = 0j
    radius: float = 1.0
    mode: Union[Numeric, ExactRational] = Numeric()

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("domain radius must be positive")

    @classmethod
    def exact(cls, numerator, denominator=(1,), center: complex = 0j,
              radius: float = 1.0) -> "AnalyticMap":
        mode = ExactRational(tuple(numerator), tuple(denominator))
        return cls(mode, complex(center), float(radius), mode)

    @classmethod
    def from_moebius(cls, m: Moebius, center: complex = 0j, radius: Optional[float] = None,
                     exact: bool = False) -> "AnalyticMap":
        a, b, c, d = (complex(x) for x in m.as_array().ravel())
        pole_gap = math.inf if c == 0 else abs(center + d / c)
        if radius is None:
            radius = 1.0 if math.isinf(pole_gap) else 0.5 * pole_gap
        if radius >= pole_gap:
            raise ValueError("domain disk contains the pole")
        if exact:
            return cls.exact((b, a), (d, c), center, radius)
        return cls(lambda z: (a * z + b) / (c * z + d), complex(center), float(radius))

    def __call__(self, z):
        return self.evaluator(z)

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return abs(complex(z) - self.center) + margin < self.radius


def compose(f: AnalyticMap, g: AnalyticMap) -> AnalyticMap:
    """``f ∘ g`` on ``g``'s domain; exact when both factors are."""
    if isinstance(f.mode, ExactRational) and isinstance(g.mode, ExactRational):
        num_f, den_f = list(f.mode.numerator), list(f.mode.denominator)
        p, q = list(g.mode.numerator), list(g.mode.denominator)
        n = max(len(num_f), len(den_f)) - 1
        powers_p = [[GaussRational(1)]]
        powers_q = [[GaussRational(1)]]
        for _ in range(n):
            powers_p.append(_poly_mul(powers_p[-1], p))
            powers_q.append(_poly_mul(powers_q[-1], q))

        def homog(coeffs):
            out = [GaussRational()]
            for k, c in enumerate(coeffs):
                out = _poly_add(out, [c * t for t in _poly_mul(powers_p[k], powers_q[n - k])])
            return out

        return AnalyticMap.exact(homog(num_f), homog(den_f), g.center, g.radius)
    step = min(_mode_step(f), _mode_step(g))
    return AnalyticMap(lambda z: f(g(z)), g.center, g.radius, Numeric(step))


def _mode_step(f: AnalyticMap) -> float:
    return f.mode.step if isinstance(f.mode, Numeric) else DEFAULT_STEP


# ---------------------------------------------------------- differentiation

def taylor_coefficients(f: AnalyticMap, z: complex, order: int = 3) -> np.ndarray:
    """``f^(k)(z) / k!`` for ``k = 0..order``."""
    z = complex(z)
    if isinstance(f.mode, ExactRational):
        return np.array([complex(c) for c in f.mode.taylor(z, order)])
    gap = f.radius - abs(z - f.center)
    if gap <= 0:
        raise ValueError(f"z = {z} lies outside the domain disk")
    # the contour stays MARGIN_STEPS radii inside the domain
    rho = min(f.mode.step * f.radius, gap / MARGIN_STEPS)
    w = np.exp(2j * np.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES)
    vals = np.array([f(z + rho * t) for t in w], dtype=complex)
    coeffs = np.fft.fft(vals) / CONTOUR_NODES
    return coeffs[:order + 1] / rho ** np.arange(order + 1)


@dataclass(frozen=True)
class SchwarzianSample:
    z: complex
    value: complex
    invariant_s: Optional[float]

    def csv_row(self) -> str:
        s = "" if self.invariant_s is None else repr(self.invariant_s)
        return f"{self.z.real!r},{self.z.imag!r},{self.value.real!r},{self.value.imag!r},{s}"


def _from_taylor(c1, c2, c3):
    r = c2 / c1
    return 6 * c3 / c1 - 6 * r * r


def schwarzian_value(f: AnalyticMap, z: complex) -> complex:
    if isinstance(f.mode, ExactRational):
        t = f.mode.taylor(z, 3)
        if abs(complex(t[1])) < UNIVALENCE_TOL:
            raise ValueError(f"|f'(z)| below {UNIVALENCE_TOL:g} at z = {z}")
        return complex(_from_taylor(t[1], t[2], t[3]))
    _, c1, c2, c3 = taylor_coefficients(f, z, 3)
    if abs(c1) < UNIVALENCE_TOL:
        raise ValueError(f"|f'(z)| below {UNIVALENCE_TOL:g} at z = {z}")
    return complex(_from_taylor(c1, c2, c3))


def schwarzian_at(f: AnalyticMap, z: complex) -> SchwarzianSample:
    z = complex(z)
    value = schwarzian_value(f, z)
    s = abs(value) * (1 - abs(z) ** 2) ** 2 if abs(z) < 1 else None
    return SchwarzianSample(z, value, s)


def schwarzian_exact(f: AnalyticMap, z) -> GaussRational:
    """Unrounded ``S(f)(z)`` for an exact map at a rational point."""
    if not isinstance(f.mode, ExactRational):
        raise TypeError("exact Schwarzian needs an ExactRational map")
    t = f.mode.taylor(z, 3)
    if t[1].is_zero():
        raise ValueError("f' vanishes at z")
    return _from_taylor(t[1], t[2], t[3])


def composition_residual(f: AnalyticMap, g: AnalyticMap, z: complex) -> float:
    """``|S(f∘g)(z) - S(f)(g(z)) g'(z)^2 - S(g)(z)|``."""
    fg = compose(f, g)
    if isinstance(fg.mode, ExactRational):
        zq = GaussRational.of(z)
        tg = g.mode.taylor(zq, 3)
        lhs = schwarzian_exact(fg, zq)
        rhs = schwarzian_exact(f, tg[0]) * tg[1] * tg[1] + schwarzian_exact(g, zq)
        return abs(complex(lhs - rhs))
    gz = taylor_coefficients(g, z, 1)
    lhs = schwarzian_value(fg, z)
    rhs = schwarzian_value(f, gz[0]) * gz[1] ** 2 + schwarzian_value(g, z)
    return abs(lhs - rhs)


@dataclass(frozen=True)
class InvariantField:
    samples: tuple
    threshold: float

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def values(self) -> np.ndarray:
        return np.array([s.invariant_s for s in self.samples])

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def fraction_above(self) -> float:
        return float((self.values >= self.threshold).mean())

    def csv_text(self) -> str:
        return schwarzian_csv(self.samples)


def invariant_field(f: AnalyticMap, samples: Sequence[complex],
                    threshold: float = 1e-3) -> InvariantField:
    """``s(z) = |S(f)(z)| (1 - |z|^2)^2`` over points of the open unit disk."""
    out = []
    for z in samples:
        if not abs(z) < 1:
            raise ValueError(f"sample {z} is not in the open unit disk")
        out.append(schwarzian_at(f, z))
    return InvariantField(tuple(out), float(threshold))


def schwarzian_norm(f: AnalyticMap, samples: Sequence[complex]) -> float:
    """``sup |Im z|^2 |S(f)(z)|`` over upper half-plane samples; no bound is implied."""
    best = 0.0
    for z in samples:
        if not complex(z).imag > 0:
            raise ValueError(f"sample {z} is not in the upper half-plane")
        best = max(best, complex(z).imag ** 2 * abs(schwarzian_value(f, z)))
    return best


def koebe_schwarzian(z: complex) -> complex:
    """Closed form for ``z / (1 - z)^2``."""
    return -6.0 / (1.0 - z * z) ** 2


def schwarzian_csv(samples: Sequence[SchwarzianSample]) -> str:
    return "z_re,z_im,S_re,S_im,s\n" + "".join(s.csv_row() + "\n" for s in samples)
