import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biflab.errors import (AnomalyNoIntersection, AxiomViolation, BudgetExceeded,
                           InsufficientPairs, NotProper)
from biflab.fractal import PointCloud, box_count, holder_fit
from biflab.ifs import (ContractionSystem, Hypersurface, check_proper, compose_word,
                        graph_hypersurface_intersection, graph_point, holonomy_pairs,
                        moving_ratio_system, projected_intersection_set, slice_cantor,
                        ternary_system)


def still_ternary():
    lin = np.full((2, 1, 1), 1 / 3)
    return ContractionSystem(lin, [[0], [2 / 3]], [0.5], 0.7)


def test_empty_word_is_identity():
    s = ternary_system()
    assert compose_word(s, [], 0.3j, [0.2 + 0.1j])[0] == 0.2 + 0.1j


def test_composition_order():
    s = still_ternary()
    # G_0 applied first, then G_1
    assert compose_word(s, [1, 0], 0, [0])[0] == pytest.approx(2 / 3)
    assert compose_word(s, [0, 1], 0, [0])[0] == pytest.approx(2 / 9)
    assert compose_word(s, [0, 0], 0, [0])[0] == 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=12),
       st.complex_numbers(max_magnitude=1), st.complex_numbers(max_magnitude=0.6),
       st.complex_numbers(max_magnitude=0.6))
def test_words_contract(word, lam, z, w):
    s = ternary_system()
    d = abs(compose_word(s, word, lam, [0.5 + z]) - compose_word(s, word, lam, [0.5 + w]))[0]
    assert d <= np.exp(-len(word) * s.a) * abs(z - w) + 1e-12


def test_constant_word_graph_points():
    s = still_ternary()
    assert abs(graph_point(s, [0] * 40, 0.5).value[0]) < 1e-15
    assert graph_point(s, [1] * 40, -0.2j).value[0] == pytest.approx(1, abs=1e-15)


@pytest.mark.parametrize("lam", [0, 0.5, -0.7j, 0.6 + 0.6j])
def test_coupled_graph_is_affine(lam):
    g = graph_point(ternary_system(0.1), [1] * 40, lam)
    assert g.value[0] == pytest.approx(1 + 0.15 * lam, abs=1e-14)
    assert g.error_bound < 1e-18


def test_tail_bound_holds():
    s = ternary_system()
    rng = np.random.default_rng(1)
    word = rng.integers(0, 2, 60)
    exact = graph_point(s, word, 0.4j).value
    for p in range(1, 30):
        g = graph_point(s, word, 0.4j, p)
        assert np.max(np.abs(g.value - exact)) <= g.error_bound


def test_contraction_exponents():
    s = ternary_system()
    assert s.a == pytest.approx(np.log(3)) and s.A == pytest.approx(np.log(3))
    r = moving_ratio_system(1 / 9)
    assert r.a == pytest.approx(np.log(3), rel=1e-6)
    assert r.A == pytest.approx(np.log(9), rel=1e-3)


def test_expanding_map_violates_contraction():
    with pytest.raises(AxiomViolation) as exc:
        ContractionSystem(np.full((2, 1, 1), 1.1), [[0], [0.5]], [0.5], 0.7)
    assert exc.value.axiom == 3


def test_escaping_image_violates_containment():
    with pytest.raises(AxiomViolation) as exc:
        ContractionSystem(np.full((2, 1, 1), 1 / 3), [[0], [1.5]], [0.5], 0.7)
    assert exc.value.axiom == 1


def test_overlapping_images_violate_disjointness():
    with pytest.raises(AxiomViolation) as exc:
        ContractionSystem(np.full((2, 1, 1), 1 / 3), [[0], [0.1]], [0.5], 0.7)
    assert exc.value.axiom == 2
    assert exc.value.witness["maps"] == [0, 1]


def test_coupling_can_break_the_axioms():
    with pytest.raises(AxiomViolation):
        ternary_system(0.4)


def test_json_round_trip():
    s = ternary_system()
    t = ContractionSystem.from_json(json.loads(json.dumps(s.to_json())))
    assert np.array_equal(t.lin, s.lin) and np.array_equal(t.trans, s.trans)
    assert t.a == s.a and t.delta == s.delta


def test_slice_at_depth_one():
    sl = slice_cantor(still_ternary(), 0, 1)
    assert np.allclose(np.sort(sl.points[:, 0].real), [0.5 / 3, 0.5 / 3 + 2 / 3])
    assert np.allclose(np.sort(sl.points[:, 0].real), [0, 1], atol=sl.tail_bound)


def test_slice_dimension():
    sl = slice_cantor(ternary_system(), 0.3, 12)
    assert sl.separation > 0
    r = box_count(PointCloud(sl.points[:, 0]))
    assert r.slope == pytest.approx(np.log(2) / np.log(3), abs=0.05)


def test_slice_budget():
    with pytest.raises(BudgetExceeded):
        slice_cantor(ternary_system(), 0, 24)


def test_nested_slices():
    # depth p+1 points lie within the depth p tail bound of their prefix point
    s = ternary_system()
    a, b = slice_cantor(s, 0.2, 6), slice_cantor(s, 0.2, 7)
    parent = a.points[np.arange(len(b.points)) // 2]
    assert np.max(np.abs(b.points - parent)) <= a.tail_bound


def test_holonomy_of_still_system_is_isometric():
    pairs = holonomy_pairs(still_ternary(), 0, 0.5, 12)
    assert np.allclose(pairs[:, 0], pairs[:, 1], rtol=1e-9)
    assert holder_fit(pairs).exponent == pytest.approx(1, abs=1e-6)


def test_holonomy_exponents():
    assert holder_fit(holonomy_pairs(ternary_system(), 0, 0.5, 12)).exponent >= 0.9
    assert holder_fit(holonomy_pairs(moving_ratio_system(1 / 9), 0, 0.5, 12)).exponent >= 0.4


def test_holonomy_needs_depth():
    with pytest.raises(InsufficientPairs):
        holonomy_pairs(ternary_system(), 0, 0.5, 1)


def test_intersection_with_constant_graph():
    s = still_ternary()
    roots = graph_hypersurface_intersection(s, [1] * 40, Hypersurface([1, 1], 0.9))
    assert roots == pytest.approx([0], abs=1e-12)


def test_intersection_root_of_coupled_graph():
    s = ternary_system(0.1)
    roots = graph_hypersurface_intersection(s, [1] * 40, Hypersurface([0.95], 0.9))
    assert roots == pytest.approx([-1 / 3], abs=1e-12)


def test_intersection_outside_disc_is_an_anomaly():
    with pytest.raises(AnomalyNoIntersection):
        graph_hypersurface_intersection(ternary_system(0.1), [1] * 40, Hypersurface([0.5], 0.9))


def test_root_moves_with_the_hypersurface():
    s = ternary_system(0.1)
    r0 = graph_hypersurface_intersection(s, [1] * 40, Hypersurface([0.95], 0.9))[0]
    r1 = graph_hypersurface_intersection(s, [1] * 40, Hypersurface([0.951], 0.9))[0]
    assert abs(r1 - r0) == pytest.approx(1e-3 / 0.15, rel=1e-6)


def test_improper_hypersurface_is_refused():
    with pytest.raises(NotProper):
        check_proper(ternary_system(), Hypersurface([0.5, 0.2], 0.75))


def test_projected_set():
    Z = Hypersurface([0.5, 1], 0.75)
    proj = projected_intersection_set(ternary_system(), Z, 8)
    assert proj.anomalies == 0
    assert len(np.unique(proj.words)) == 2 ** 8
    # every root is a root of its own word
    for lam, w in zip(proj.lams[:20], proj.words[:20]):
        word = [(w >> (7 - q)) & 1 for q in range(8)]
        assert abs(graph_point(ternary_system(), word, lam).value[0] - 0.5 - lam) < 1e-9
