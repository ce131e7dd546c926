import math

import numpy as np
import pytest

from kleindim import synthetic
from kleindim.dimension import (BoxCountTable, ConstructionError, CountModel, DyadicSquare,
                                MassNode, MassTree, Method, WhitneyLevels, binary_tree,
                                box_count, delta_fit, estimate_delta, frostman_verify, kappa_fit,
                                mdim_fit, orbit_count_csv, packing_tree, whitney_decompose,
                                whitney_levels)
from kleindim.dimension.frostman import Brood, check_brood, frostman_exponent
from kleindim.groups import OrbitCountTable
from kleindim.limitset import PointCloud, cyclic_loxodromic, cyclic_parabolic

LOG2_3 = math.log(2) / math.log(3)


def _table(exponent, levels=range(0, 12)):
    lv = np.array(list(levels))
    return BoxCountTable(lv, np.round(2.0 ** (exponent * lv)).astype(np.int64), 2.0 ** -20)


# ------------------------------------------------------------------ squares

def test_dyadic_square_geometry():
    q = DyadicSquare(3, 2, 5)
    assert q.side == 0.125
    assert q.bounds == (0.25, 0.625, 0.375, 0.75)
    assert q.tripled() == (0.125, 0.5, 0.5, 0.875)
    kids = list(q.children())
    assert len(kids) == 4 and all(k.level == 4 for k in kids)
    with pytest.raises(ValueError):
        DyadicSquare(-1, 0, 0)


# ------------------------------------------------------------------ box counting

def test_mdim_exact_tables():
    one = mdim_fit(_table(1.0), levels=range(2, 10))
    assert one.value == pytest.approx(1.0) and one.stderr == pytest.approx(0.0, abs=1e-12)
    half = mdim_fit(BoxCountTable(np.arange(0, 20, 2), 2 ** np.arange(10), 1e-9),
                    levels=range(0, 20, 2))
    assert half.value == pytest.approx(0.5) and half.stderr == pytest.approx(0.0, abs=1e-12)


def test_mdim_rejects_short_window():
    with pytest.raises(ValueError):
        mdim_fit(_table(1.0), levels=[1, 2, 3])


def test_box_count_table_invariants():
    with pytest.raises(ValueError):
        BoxCountTable(np.array([0, 1, 2]), np.array([4, 2, 8]), 0.01)
    with pytest.raises(ValueError):
        BoxCountTable(np.array([0, 2, 1]), np.array([1, 2, 3]), 0.01)


def test_segment_box_dimension():
    table = box_count(synthetic.segment())
    est = mdim_fit(table)
    assert abs(est.value - 1.0) <= 0.02
    assert est.method is Method.BOX_COUNT


def test_one_over_n_box_dimension():
    table = box_count(synthetic.one_over_n())
    assert abs(mdim_fit(table, window=(2.0 ** -16, 2.0 ** -6)).value - 0.5) <= 0.05


def test_cantor_box_dimension():
    est = mdim_fit(box_count(synthetic.cantor_set(12)))
    assert abs(est.value - LOG2_3) <= 0.02


def test_box_counts_bounded_and_monotone():
    cloud = synthetic.cantor_set(8)
    t = box_count(cloud)
    assert np.all(np.diff(t.counts) >= 0)
    assert np.all(t.counts <= (np.ceil(cloud.diameter / t.scales) + 1) ** 2)


def test_box_count_drops_fine_levels():
    cloud = synthetic.cantor_set(4)
    t = box_count(cloud, range(0, 40))
    assert t.dropped and max(t.levels) < 40
    assert "levels_dropped" in mdim_fit(t, levels=range(0, 6)).flags


def test_mdim_scale_invariant_under_powers_of_two():
    cloud = synthetic.cantor_set(10)
    a = mdim_fit(box_count(cloud), levels=range(3, 12))
    small = cloud.scaled(0.25, (0, 0))
    b = mdim_fit(box_count(small), levels=range(5, 14))
    assert b.value == pytest.approx(a.value, abs=max(a.stderr, 1e-9))


def test_box_count_csv():
    text = box_count(synthetic.cantor_set(4)).csv_text()
    assert text.splitlines()[0] == "epsilon,count"


# ------------------------------------------------------------------ Whitney

def test_whitney_kappa_exact_counts():
    n = np.arange(12)
    assert kappa_fit(WhitneyLevels(n, 2 ** n, 11), (2, 11)).value == pytest.approx(1.0)
    assert kappa_fit(WhitneyLevels(n, np.full(12, 7), 11), (2, 11)).value == pytest.approx(0.0)


def test_whitney_interpolates_empty_levels():
    n = np.arange(10)
    counts = 2 ** n
    counts[5] = 0
    est = kappa_fit(WhitneyLevels(n, counts, 9), (2, 9))
    assert "interpolated_empty_levels" in est.flags
    assert est.value == pytest.approx(1.0)


def test_whitney_point_has_kappa_zero():
    cloud = PointCloud.from_points([[0.5, 0.5]], resolution=2.0 ** -22)
    wl = whitney_levels(cloud)
    nz = wl.counts[wl.counts > 0]
    assert nz[-5:].max() - nz[-5:].min() <= 4
    assert kappa_fit(wl).value <= 0.05


def test_whitney_segment_kappa_one():
    est = kappa_fit(whitney_levels(synthetic.segment()))
    assert abs(est.value - 1.0) <= 0.05


def test_whitney_cantor_kappa():
    est = kappa_fit(whitney_levels(synthetic.cantor_set(12)))
    assert abs(est.value - LOG2_3) <= 0.05


def test_whitney_bracket_and_disjointness():
    cloud = synthetic.cantor_set(6)
    cells = whitney_decompose(cloud, 8)
    assert cells and all(c.bracket_ok() for c in cells)
    # disjoint interiors: no accepted cell is an ancestor of another
    seen = {(c.square.level, c.square.ix, c.square.iy) for c in cells}
    for c in cells:
        lv, ix, iy = c.square.level, c.square.ix, c.square.iy
        while lv > 0:
            lv, ix, iy = lv - 1, ix // 2, iy // 2
            assert (lv, ix, iy) not in seen


def test_whitney_cells_match_levels():
    cloud = synthetic.cantor_set(6)
    cells = whitney_decompose(cloud, 8)
    wl = whitney_levels(cloud, 8)
    assert np.array_equal(np.bincount([c.square.level for c in cells], minlength=9), wl.counts)
    assert wl.csv_text().startswith("level,W_n\n")


# ------------------------------------------------------------------ orbit growth

def test_delta_parabolic():
    est, table = estimate_delta(cyclic_parabolic())
    assert abs(est.value - 0.5) <= 0.03
    assert orbit_count_csv(table).startswith("R,N\n")


def test_delta_loxodromic():
    est, _ = estimate_delta(cyclic_loxodromic())
    assert est.value <= 0.05


def test_delta_fit_cumulative_exact():
    radii = np.arange(0, 30, 0.25)
    counts = np.floor(np.exp(0.8 * radii))
    t = OrbitCountTable(radii, counts, max_rho=30.0, prune_slack=0.0)
    est = delta_fit(t, (10, 25), model=CountModel.CUMULATIVE)
    assert est.value == pytest.approx(0.8, abs=1e-3)


def test_delta_fit_rejects_truncation_band_and_short_windows():
    radii = np.arange(0, 10, 0.25)
    t = OrbitCountTable(radii, np.arange(len(radii)), max_rho=10.0, prune_slack=2.0)
    with pytest.raises(ValueError):
        delta_fit(t, (2, 9))
    with pytest.raises(ValueError):
        delta_fit(t, (5, 5.5))


def test_delta_truncated_flag():
    radii = np.arange(0, 30, 0.25)
    t = OrbitCountTable(radii, np.floor(np.exp(0.5 * radii)), truncated=True, max_rho=30.0)
    est = delta_fit(t, (10, 25))
    assert est.truncated and "lower_bound_biased" in est.flags


# ------------------------------------------------------------------ Frostman

def test_binary_tree_half_dimensional():
    tree = binary_tree(10)
    c, ok = frostman_verify(tree, 400, 0.5)
    assert ok and c <= 4
    assert not frostman_verify(binary_tree(10), 400, 0.7)[1]


def test_single_node_tree():
    tree = binary_tree(0)
    for alpha in (0.3, 1.0, 1.7):
        c, ok = frostman_verify(tree, 20, alpha)
        assert ok and math.isfinite(c)


def test_binary_tree_mass_conservation():
    tree = binary_tree(8)
    for k in range(9):
        assert sum(n.mass for n in tree.generation(k)) == pytest.approx(1.0, abs=1e-12)


def test_tree_text_round_trip():
    tree = binary_tree(4)
    tree.generation(4)
    text = tree.to_text()
    back = MassTree.from_text(text)
    assert sum(n.mass for n in back.generation(4)) == pytest.approx(1.0, abs=1e-12)
    assert back.to_text() == text


def test_brood_rules_enforced():
    parent = MassNode(0, 0, 1.0, 1.0)
    good = Brood(np.array([-0.6, 0.6]), np.array([0.25, 0.25]), np.array([0.5, 0.5]))
    check_brood(parent, good)
    for bad in (
        Brood(np.array([-1.9, 0.6]), np.array([0.25, 0.25]), np.array([0.5, 0.5])),
        Brood(np.array([0.0, 0.3]), np.array([0.25, 0.25]), np.array([0.5, 0.5])),
        Brood(np.array([-0.6, 0.6]), np.array([0.25, 0.25]), np.array([0.5, 0.4])),
        Brood(np.array([-0.6, 0.6]), np.array([0.25, -0.25]), np.array([0.5, 0.5])),
    ):
        with pytest.raises(ConstructionError):
            check_brood(parent, bad)


def test_tree_rejects_oversized_children():
    def rule(node):
        return np.array([node.center]), np.array([0.9 * node.radius]), None, None

    tree = MassTree(MassNode(0, 0, 1.0, 1.0), 2, rule, max_ratio=0.5)
    with pytest.raises(ConstructionError):
        tree.children(tree.root)


def test_packing_tree_depth_zero():
    tree = packing_tree(depth=0)
    assert tree.generation(0) == [tree.root] and tree.generation(1) == []


def test_packing_generation_one_conditions():
    tree = packing_tree(depth=1)
    b = tree.brood(tree.root)
    assert 2 * b.radii.sum() >= 2 * (2 * tree.root.radius)
    assert b.radii.max() <= tree.root.radius / 100 * (1 + 1e-12)
    assert b.masses.sum() == pytest.approx(1.0, abs=1e-12)


def test_frostman_exponent_on_binary_tree():
    est = frostman_exponent(binary_tree(10), trials=400)
    assert est.method is Method.FROSTMAN_LOWER
    assert 0.45 <= est.value <= 0.6
