import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from kleindim.moebius import apply, moebius
from kleindim.schwarzian import (AnalyticMap, GaussRational, Numeric, compose,
                                 composition_residual, invariant_field, koebe_schwarzian,
                                 schwarzian_at, schwarzian_csv, schwarzian_exact,
                                 schwarzian_norm, schwarzian_value, taylor_coefficients)
from kleindim.verify import random_moebius

KOEBE = AnalyticMap(lambda z: z / (1 - z) ** 2, 0, 1.0)


def test_gauss_rational_arithmetic():
    a = GaussRational(Fraction(1, 2), 3)
    b = GaussRational.of(2 - 1j)
    assert (a * b) / b == a
    assert a - a == GaussRational() and (a - a).is_zero()
    assert complex(1 / GaussRational(0, 1)) == -1j
    assert GaussRational.of(0.25) == GaussRational(Fraction(1, 4))


def test_taylor_coefficients_of_exponential():
    f = AnalyticMap(cmath.exp, 0, 2.0)
    c = taylor_coefficients(f, 0.3, 4)
    expect = [math.exp(0.3) / math.factorial(k) for k in range(5)]
    assert np.allclose(c, expect, atol=1e-12)


def test_moebius_has_zero_schwarzian():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        m = random_moebius(rng)
        z = complex(*rng.uniform(-1, 1, 2))
        a, b, c, d = m.as_array().ravel()
        if c != 0 and abs(z + d / c) < 0.05:
            continue
        worst = max(worst, abs(schwarzian_at(AnalyticMap.from_moebius(m, center=z), z).value))
    assert worst < 1e-9


def test_exact_moebius_is_exactly_zero():
    f = AnalyticMap.from_moebius(moebius(2, 1 + 1j, 1, 3), exact=True)
    assert schwarzian_exact(f, Fraction(1, 3)).is_zero()


def test_square_map():
    f = AnalyticMap(lambda z: z * z, 1.0, 0.5)
    assert schwarzian_at(f, 1.0).value == pytest.approx(-1.5, abs=1e-10)
    exact = AnalyticMap.exact([0, 0, 1], center=1, radius=0.5)
    assert schwarzian_exact(exact, 1) == GaussRational(Fraction(-3, 2))


@pytest.mark.parametrize("z", [0, 1 + 1j, -2.5, 3j])
def test_exponential_map(z):
    f = AnalyticMap(cmath.exp, z, 1.0)
    assert schwarzian_at(f, z).value == pytest.approx(-0.5, abs=1e-10)


def test_koebe_closed_form():
    for z in (0, 0.3, -0.2 + 0.4j, 0.5j):
        assert schwarzian_value(KOEBE, z) == pytest.approx(koebe_schwarzian(z), abs=1e-9)
    exact = AnalyticMap.exact([0, 1], [1, -2, 1])
    assert complex(schwarzian_exact(exact, Fraction(1, 5))) == \
        pytest.approx(koebe_schwarzian(0.2), abs=1e-15)


def test_univalence_guard():
    with pytest.raises(ValueError):
        schwarzian_at(AnalyticMap(lambda z: z * z, 0, 1.0), 0)
    with pytest.raises(ValueError):
        schwarzian_at(AnalyticMap.exact([0, 0, 1]), 0)


def test_point_outside_domain_rejected():
    with pytest.raises(ValueError):
        schwarzian_at(AnalyticMap(cmath.exp, 0, 1.0), 2.0)


def test_invariant_only_inside_disk():
    f = AnalyticMap(cmath.exp, 0, 5.0)
    assert schwarzian_at(f, 2.0).invariant_s is None
    s = schwarzian_at(f, 0.5).invariant_s
    assert s == pytest.approx(0.5 * 0.75 ** 2, abs=1e-10)


def test_square_composed_with_shift():
    f = AnalyticMap(lambda z: z * z, 0, 10.0)
    g = AnalyticMap(lambda z: z + 2, 0, 5.0)
    assert composition_residual(f, g, 1.0) < 1e-6


def test_identity_composition_is_exact_zero():
    ident = AnalyticMap.exact([0, 1])
    assert composition_residual(ident, ident, 0.25) == 0.0


def test_moebius_post_composition_leaves_schwarzian():
    g = AnalyticMap(cmath.exp, 0, 1.0)
    m = AnalyticMap.from_moebius(moebius(1, 2, 1, 4), center=1.0, radius=2.0)
    fg = compose(m, g)
    assert schwarzian_value(fg, 0.1) == pytest.approx(schwarzian_value(g, 0.1), abs=1e-8)
    assert composition_residual(m, g, 0.1) < 1e-6


def test_numeric_composition_law_random():
    rng = np.random.default_rng(8)
    for _ in range(50):
        p = rng.normal(size=4) * (0.0, 1.0, 0.2, 0.05) + (0, 1, 0, 0)
        g = AnalyticMap(lambda w, p=p: p[0] + w * (p[1] + w * (p[2] + w * p[3])), 0, 0.5)
        q = rng.normal(size=5) * (1.0, 1.0, 0.3, 0.1, 0.05) + (0, 2, 0, 0, 0)
        f = AnalyticMap(lambda w, q=q: np.polyval(q[::-1], w), 0, 10.0)
        z = 0.25 * complex(*rng.uniform(-0.7, 0.7, 2))
        assert composition_residual(f, g, z) < 1e-6


def test_exact_composition_law_random():
    rng = np.random.default_rng(9)
    for _ in range(20):
        c0, c1, c2 = (Fraction(int(k), 4) for k in rng.integers(-5, 6, 3))
        g = AnalyticMap.exact([c0, 2 + c1, c2], radius=0.5)
        f = AnalyticMap.exact([int(k) for k in rng.integers(-4, 5, 4)] + [1], radius=10.0)
        z = Fraction(int(rng.integers(-3, 4)), 16)
        try:
            assert composition_residual(f, g, z) < 1e-12
        except ValueError:
            continue  # a critical point landed on z


@pytest.mark.parametrize("degree", range(2, 7))
def test_numeric_matches_exact_polynomials(degree):
    rng = np.random.default_rng(degree)
    coeffs = [int(k) for k in rng.integers(-3, 4, degree + 1)]
    coeffs[1] = 10  # keeps f' away from zero near the origin
    exact = AnalyticMap.exact(coeffs, radius=1.0)
    numeric = AnalyticMap(lambda z: np.polyval(coeffs[::-1], z), 0, 1.0)
    for z in (0, 0.1, -0.15 + 0.1j, 0.2j):
        assert abs(schwarzian_value(numeric, z) - schwarzian_value(exact, z)) < 1e-7


def test_exact_composition_is_exact():
    f = AnalyticMap.exact([0, 0, 1])
    g = AnalyticMap.exact([2, 1])
    fg = compose(f, g)
    assert fg.mode.numerator == tuple(GaussRational(c) for c in (4, 4, 1))
    assert not isinstance(compose(f, AnalyticMap(cmath.exp)).mode, type(f.mode))
    assert isinstance(compose(f, AnalyticMap(cmath.exp)).mode, Numeric)


def test_moebius_invariant_field_vanishes():
    m = AnalyticMap.from_moebius(moebius(1, 0.2, 0.1, 1), center=0, radius=0.95)
    field = invariant_field(m, [0.1, -0.3j, 0.2 + 0.2j])
    assert field.max < 1e-9


def test_koebe_invariant_field_positive():
    rng = np.random.default_rng(2)
    pts = 0.6 * np.sqrt(rng.random(200)) * np.exp(2j * np.pi * rng.random(200))
    field = invariant_field(KOEBE, pts, threshold=0.5)
    assert field.min > 0 and field.fraction_above > 0.5
    expect = np.abs([koebe_schwarzian(z) for z in pts]) * (1 - np.abs(pts) ** 2) ** 2
    assert np.allclose(field.values, expect, atol=1e-8)
    assert field.csv_text().startswith("z_re,z_im,S_re,S_im,s\n")
    assert len(field.csv_text().splitlines()) == 201


def test_invariant_field_rejects_points_outside_disk():
    with pytest.raises(ValueError):
        invariant_field(KOEBE, [1.0])


@pytest.mark.parametrize("a", [0.3, -0.2 + 0.25j])
def test_invariant_under_disk_automorphisms(a):
    rot = cmath.exp(0.7j)
    aut = moebius(rot, rot * a, complex(a).conjugate(), 1)
    for z in (0.1, -0.3 + 0.2j, 0.4j):
        w = apply(aut.inverse(), z)
        g = AnalyticMap.from_moebius(aut, center=w, radius=0.05)
        fm = compose(KOEBE, g)
        left = schwarzian_at(fm, w).invariant_s
        right = schwarzian_at(KOEBE, z).invariant_s
        assert left == pytest.approx(right, abs=1e-6)


def test_schwarzian_norm_of_exponential():
    f = AnalyticMap(cmath.exp, 1j, 0.9)
    assert schwarzian_norm(f, [1j, 1.5j]) == pytest.approx(0.5 * 1.5 ** 2, abs=1e-9)
    with pytest.raises(ValueError):
        schwarzian_norm(f, [-1j])


def test_csv_rows():
    samples = [schwarzian_at(AnalyticMap(cmath.exp, 0, 5.0), z) for z in (0.5, 2.0)]
    lines = schwarzian_csv(samples).splitlines()
    assert lines[0] == "z_re,z_im,S_re,S_im,s"
    assert lines[2].endswith(",")
