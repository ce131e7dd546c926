import math

import numpy as np
import pytest

from kleindim.groups import (GroupPresentation, RelationMode, enumerate_orbit, format_group,
                             orbit_counts, parse_group, read_orbit_csv, sphere_orbit,
                             write_orbit_csv)
from kleindim.limitset import Disk, cyclic_loxodromic, cyclic_parabolic, schottky_from_circles
from kleindim.moebius import Moebius, canonicalize_rows, displacement, moebius


def far_schottky():
    return schottky_from_circles([(Disk(3, 0.5), Disk(-3, 0.5)), (Disk(3j, 0.5), Disk(-3j, 0.5))])


def test_identity_generator_rejected():
    with pytest.raises(ValueError):
        GroupPresentation((Moebius.identity(),))
    with pytest.raises(ValueError):
        GroupPresentation(())


def test_cyclic_count():
    orbit = enumerate_orbit(cyclic_loxodromic(), 5)
    assert len(orbit) == 11
    words = {orbit.word(i) for i in range(len(orbit))}
    assert words == {()} | {(1,) * k for k in range(1, 6)} | {(-1,) * k for k in range(1, 6)}


@pytest.mark.parametrize("depth", [0, 1, 2, 3, 5])
def test_free_group_word_count(depth):
    assert len(enumerate_orbit(far_schottky(), depth)) == 2 * 3 ** depth - 1


def test_words_are_reduced_and_rho_matches():
    orbit = enumerate_orbit(far_schottky(), 4)
    for p in orbit:
        assert all(a != -b for a, b in zip(p.word, p.word[1:]))
        assert len(p.word) == p.depth
        assert abs(p.rho - displacement(p.matrix)) < 1e-9


def test_modular_dedupe_is_a_strict_subset():
    s, t = moebius(0, -1, 1, 0), moebius(1, 1, 0, 1)
    free = GroupPresentation((s, t))
    ded = GroupPresentation((s, t), relation_mode=RelationMode.DEDUPE)
    a = enumerate_orbit(free, 6)
    b = enumerate_orbit(ded, 6)
    assert len(b) < len(a)
    key = lambda rows: {tuple(np.round(r, 6)) for r in canonicalize_rows(rows)}
    assert key(b.mats) <= key(a.mats)
    # no two dedupe rows are the same element
    assert len(key(b.mats)) == len(b)


def test_budget_sets_truncation_flag():
    orbit = enumerate_orbit(far_schottky(), 20, max_points=1000)
    assert len(orbit) == 1000 and orbit.truncated
    orbit = enumerate_orbit(far_schottky(), 2)
    assert not orbit.truncated and orbit.depth_limited


def test_pruning_keeps_every_element_under_the_cap():
    g = far_schottky()
    full = enumerate_orbit(g, 6)
    cut = enumerate_orbit(g, 6, max_rho=8.0)
    want = np.sort(full.rho[full.rho <= 8.0])
    got = np.sort(cut.rho[cut.rho <= 8.0])
    assert np.allclose(want, got)


def test_orbit_counts_examples():
    only = enumerate_orbit(cyclic_loxodromic(), 0)
    assert list(orbit_counts(only, [1, 2]).counts) == [1, 1]
    g = cyclic_loxodromic(2.0)
    ell = 2 * math.log(4.0) / 2  # translation length of z -> 4z
    orbit = enumerate_orbit(g, 100, max_rho=30)
    radii = np.array([5.0, 10.0, 20.0])
    assert list(orbit_counts(orbit, radii).counts) == [2 * math.floor(r / ell) + 1 for r in radii]
    par = enumerate_orbit(cyclic_parabolic(), 10 ** 6, max_rho=30)
    n = orbit_counts(par, [26.0]).counts[0]
    assert n / math.exp(13.0) == pytest.approx(2.0, rel=0.01)


def test_orbit_counts_rejects_unsorted_radii():
    with pytest.raises(ValueError):
        orbit_counts(enumerate_orbit(cyclic_parabolic(), 2), [2, 1])


def test_sphere_orbit_examples():
    assert sphere_orbit(cyclic_parabolic(), 1j, 0) == [(1j, 0)]
    pts = {z for z, _ in sphere_orbit(cyclic_parabolic(), 1j, 3)}
    assert pts == {1j + n for n in range(-3, 4)}
    g = far_schottky()
    disks = [Disk(c, r) for c, r in g.pairing_disks]
    for z, depth in sphere_orbit(g, 0j, 4):
        if depth >= 1:
            assert any(abs(z - d.center) <= d.radius + 1e-12 for d in disks)


def test_group_text_and_orbit_csv_round_trip(tmp_path):
    g = far_schottky()
    back = parse_group(format_group(g))
    assert all(a.isclose(b, 1e-14) for a, b in zip(g.generators, back.generators))
    with pytest.raises(ValueError):
        parse_group("generators 3 free\n" + format_group(g).split("\n", 1)[1])
    orbit = enumerate_orbit(g, 3)
    path = tmp_path / "orbit.csv"
    write_orbit_csv(orbit, path)
    depth, rho, mats = read_orbit_csv(path)
    assert np.array_equal(depth, orbit.depth)
    assert np.allclose(rho, orbit.rho) and np.allclose(mats, orbit.mats)


def test_enumeration_is_deterministic():
    a = enumerate_orbit(far_schottky(), 6, max_rho=12)
    b = enumerate_orbit(far_schottky(), 6, max_rho=12)
    assert np.array_equal(a.mats, b.mats) and np.array_equal(a.depth, b.depth)
