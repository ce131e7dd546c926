import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleindim.moebius import (INF, Moebius, TransformClass, apply, attracting_fixed_points,
                              canonicalize_rows, chordal_distance, classify, compose,
                              compose_rows, disk_image, disk_image_rows, displacement,
                              displacement_rows, fixed_points, format_moebius, hash_key, moebius,
                              parse_moebius, stack)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
entries = st.tuples(*[st.complex_numbers(max_magnitude=3, allow_nan=False,
                                         allow_infinity=False)] * 4)


def _m(e):
    a, b, c, d = e
    if abs(a * d - b * c) < 1e-3:
        a += 1
        if abs(a * d - b * c) < 1e-3:
            return moebius(1, 1, 0, 1)
    return moebius(a, b, c, d)


def test_normalization_gives_unit_determinant_and_canonical_sign():
    m = moebius(-2, 0, 0, -0.5)
    assert abs(m.det - 1) < 1e-15
    assert m.a.real > 0
    assert moebius(2, 1, 3, 2) == moebius(-2, -1, -3, -2)
    assert hash(moebius(2, 1, 3, 2)) == hash(moebius(-2, -1, -3, -2))


def test_singular_and_nonfinite_rejected():
    with pytest.raises(ValueError):
        moebius(1, 2, 2, 4)
    with pytest.raises(ValueError):
        moebius(float("nan"), 0, 0, 1)


def test_displacement_closed_forms():
    assert displacement(Moebius.identity()) == 0
    assert displacement(moebius(1, 1, 0, 1)) == pytest.approx(math.acosh(1.5), abs=1e-12)
    assert displacement(moebius(2, 0, 0, 0.5)) == pytest.approx(2 * math.log(2), abs=1e-12)


def test_classify_examples():
    assert classify(moebius(1, 1, 0, 1)) is TransformClass.PARABOLIC
    assert classify(moebius(2, 0, 0, 0.5)) is TransformClass.LOXODROMIC
    t = math.pi / 3
    assert classify(moebius(math.cos(t), -math.sin(t), math.sin(t), math.cos(t))) \
        is TransformClass.ELLIPTIC
    assert classify(Moebius.identity()) is TransformClass.IDENTITY
    assert classify(moebius(1j, 0, 0, -1j)) is TransformClass.ELLIPTIC  # trace 0


def test_fixed_point_examples():
    assert fixed_points(moebius(1, 1, 0, 1)) == [INF]
    fp = fixed_points(moebius(2, 0, 0, 0.5))
    assert INF in fp and 0 in fp
    assert fp[0] is INF  # z -> 4z pushes toward infinity
    pts = fixed_points(moebius(0, 1, -1, 0))
    assert sorted((p.imag for p in pts)) == pytest.approx([-1, 1])
    with pytest.raises(ValueError):
        fixed_points(Moebius.identity())


def test_apply_handles_infinity():
    m = moebius(1, 2, 3, 4)
    assert apply(m, INF) == pytest.approx(1 / 3)
    assert apply(m, -4 / 3) is INF
    assert apply(moebius(1, 1, 0, 1), INF) is INF


def test_chordal_distance_limits():
    assert chordal_distance(INF, INF) == 0
    assert chordal_distance(0, INF) == pytest.approx(2)
    assert chordal_distance(1, -1) == pytest.approx(2)
    assert chordal_distance(1e9, INF) < 1e-8


def test_text_round_trip(rng):
    for _ in range(20):
        m = moebius(*(rng.normal(size=4) + 1j * rng.normal(size=4)))
        line = format_moebius(m)
        assert len(line.split()) == 8
        assert parse_moebius(line).isclose(m, 1e-14)


@settings(max_examples=200, deadline=None)
@given(entries, entries)
def test_triangle_inequality(e1, e2):
    g, h = _m(e1), _m(e2)
    assert displacement(compose(g, h)) <= displacement(g) + displacement(h) + 1e-9


@settings(max_examples=200, deadline=None)
@given(entries)
def test_inverse_preserves_displacement(e):
    g = _m(e)
    assert abs(displacement(g.inverse()) - displacement(g)) <= 1e-12 * max(1, displacement(g))


@settings(max_examples=200, deadline=None)
@given(entries, entries)
def test_classify_conjugation_invariant(e, w):
    g, w = _m(e), _m(w)
    t2 = g.trace ** 2
    # roundoff may legitimately flip the class right at a boundary
    near_boundary = abs(t2 - 4) < 1e-3 or abs(t2) < 1e-3 or 0 < abs(t2.imag) < 1e-3
    if near_boundary:
        return
    assert classify(w @ g @ w.inverse()) is classify(g)


@settings(max_examples=200, deadline=None)
@given(entries, entries, st.complex_numbers(max_magnitude=5, allow_nan=False,
                                             allow_infinity=False))
def test_action_is_a_homomorphism(e1, e2, z):
    g, h = _m(e1), _m(e2)
    hz = apply(h, z)
    if hz is INF or abs(h.c * z + h.d) < 1e-3:
        return
    if abs(g.c * hz + g.d) < 1e-3:
        return
    assert chordal_distance(apply(compose(g, h), z), apply(g, hz)) < 1e-9


def test_row_helpers_match_scalar_versions(rng):
    ms = [moebius(*(rng.normal(size=4) + 1j * rng.normal(size=4))) for _ in range(50)]
    rows = stack(ms)
    assert np.allclose(displacement_rows(rows), [displacement(m) for m in ms])
    prod = compose_rows(rows, rows[::-1])
    for k, (a, b) in enumerate(zip(ms, ms[::-1])):
        assert Moebius.from_matrix(*prod[k]).isclose(compose(a, b), 1e-9)
    canon = canonicalize_rows(-rows)
    assert np.allclose(canon, rows)
    z, ok = attracting_fixed_points(rows)
    for m, zz, flag in zip(ms, z, ok):
        if flag and classify(m) is TransformClass.LOXODROMIC:
            assert abs(apply(m, complex(zz)) - zz) < 1e-6 * max(1, abs(zz))


def test_disk_images_agree_with_boundary_samples(rng):
    for _ in range(20):
        m = moebius(*(rng.normal(size=4) + 1j * rng.normal(size=4)))
        c, r = complex(*rng.normal(size=2)), 0.3
        pole = -m.d / m.c
        if abs(pole - c) < 0.5:
            continue
        cc, rr = disk_image(m, c, r)
        edge = [apply(m, c + r * cmath.exp(1j * t)) for t in np.linspace(0, 6, 12)]
        assert np.allclose(np.abs(np.array(edge) - cc), rr, rtol=1e-9)
        c2, r2 = disk_image_rows(stack([m]), c, r)
        assert c2[0] == pytest.approx(cc) and r2[0] == pytest.approx(rr)


def test_hash_key_buckets_equal_maps_together():
    m = moebius(1 + 1e-10, 1, 0, 1)
    assert hash_key(m) == hash_key(moebius(1, 1, 0, 1))
