"""Tests for src/coloring.py: exact, cover-program, LP and greedy local coloring."""
from fractions import Fraction

import numpy as np
import pytest

from src.caching import RequestMatrix
from src.coloring import (
    best_available_coloring,
    clique_lower_bound,
    exact_local_chromatic,
    fractional_local_chromatic,
    greedy_local_coloring,
    independent_sets,
    is_packet_consistent,
    is_proper,
    local_chromatic_ilp,
    local_chromatic_value,
    normalize_colors,
)
from src.conflict_graph import ConflictGraph, build_conflict_graph, closed_out_neighborhood
from src.utils.errors import InfeasibleProgramError, InstanceTooLargeError
from src.utils.exact_lp import LinearProgramResult


def _random_digraph(rng, size, density=0.4):
    edges = [(u, v) for u in range(size) for v in range(size)
             if u != v and rng.random() < density]
    return ConflictGraph.from_edges(size, edges)


class TestHelpers:
    def test_normalize_colors(self):
        assert normalize_colors((5, 5, 2, 7)) == (1, 1, 2, 3)

    def test_is_proper(self, path_graph):
        assert is_proper(path_graph, (1, 2, 1))
        assert not is_proper(path_graph, (1, 1, 2))
        assert not is_proper(path_graph, (1, 2))

    def test_local_chromatic_value(self, path_graph):
        assert local_chromatic_value(path_graph, (1, 2, 1)) == 2
        assert local_chromatic_value(ConflictGraph.from_edges(0, []), ()) == 0

    def test_local_value_length_mismatch(self, path_graph):
        with pytest.raises(ValueError):
            local_chromatic_value(path_graph, (1,))

    def test_clique_lower_bound(self, k3_graph, c5_graph, path_graph):
        assert clique_lower_bound(k3_graph) == 3
        assert clique_lower_bound(c5_graph) == 2
        assert clique_lower_bound(path_graph) == 2
        assert clique_lower_bound(ConflictGraph.from_edges(2, [])) == 1


class TestExactLocalChromatic:
    def test_empty(self):
        result = exact_local_chromatic(ConflictGraph.from_edges(0, []))
        assert result.chi_l == 0
        assert result.palette_size == 0

    def test_single_vertex(self):
        assert exact_local_chromatic(ConflictGraph.from_edges(1, [])).chi_l == 1

    def test_complete(self, k3_graph):
        result = exact_local_chromatic(k3_graph, packet_consistent=False)
        assert result.chi_l == 3
        assert result.optimal

    def test_odd_cycle(self, c5_graph):
        result = exact_local_chromatic(c5_graph, packet_consistent=False)
        assert result.chi_l == 3
        assert is_proper(c5_graph, result.coloring.colors)

    def test_directed_path(self, path_graph):
        assert exact_local_chromatic(path_graph, packet_consistent=False).chi_l == 2

    def test_result_is_consistent(self, c5_graph):
        result = exact_local_chromatic(c5_graph, packet_consistent=False)
        assert local_chromatic_value(c5_graph, result.coloring.colors) == result.chi_l

    def test_local_below_chromatic(self):
        # Out-star: the center sees every leaf, leaves see only themselves
        g = ConflictGraph.from_edges(4, [(1, 0), (2, 0), (3, 0), (1, 2), (2, 1)])
        result = exact_local_chromatic(g, packet_consistent=False)
        assert result.chi_l == local_chromatic_value(g, result.coloring.colors)
        assert result.chi_l <= greedy_local_coloring(g, False).chi_l

    def test_packet_consistent_coloring(self, base_placement):
        F = RequestMatrix(m=3, requests=((1, 2),) * 3)
        g = build_conflict_graph(base_placement, F)
        result = exact_local_chromatic(g, packet_consistent=True)
        assert result.packet_consistent
        assert is_packet_consistent(g, result.coloring.colors)
        assert is_proper(g, result.coloring.colors)

    def test_vertex_level_never_worse(self, base_placement):
        F = RequestMatrix(m=3, requests=((1, 2), (2, 3), (1, 3)))
        g = build_conflict_graph(base_placement, F)
        vertex = exact_local_chromatic(g, packet_consistent=False)
        packet = exact_local_chromatic(g, packet_consistent=True)
        assert vertex.chi_l <= packet.chi_l

    def test_guard_raises_when_search_needed(self, c5_graph):
        with pytest.raises(InstanceTooLargeError, match="guard"):
            exact_local_chromatic(c5_graph, packet_consistent=False, max_vertices=2)

    def test_guard_skipped_when_bounds_meet(self, k3_graph):
        assert exact_local_chromatic(k3_graph, packet_consistent=False, max_vertices=1).chi_l == 3

    def test_matches_cover_program_on_random_digraphs(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            g = _random_digraph(rng, int(rng.integers(1, 7)))
            assert exact_local_chromatic(g, packet_consistent=False).chi_l == local_chromatic_ilp(g)


class TestInvariance:
    def test_vertex_relabeling(self):
        rng = np.random.default_rng(17)
        for _ in range(12):
            size = int(rng.integers(2, 8))
            g = _random_digraph(rng, size)
            perm = [int(p) for p in rng.permutation(size)]
            edges = [(perm[v], perm[w]) for v in range(size) for w in g.out_edges[v]]
            relabeled = ConflictGraph.from_edges(size, edges)
            assert (exact_local_chromatic(relabeled, packet_consistent=False).chi_l
                    == exact_local_chromatic(g, packet_consistent=False).chi_l)

    def test_color_relabeling(self, c5_graph):
        result = exact_local_chromatic(c5_graph, packet_consistent=False)
        colors = result.coloring.colors
        k = result.palette_size
        rotated = [(c % k) + 1 for c in colors]
        spread = [10 * c for c in colors]
        assert local_chromatic_value(c5_graph, rotated) == result.chi_l
        assert local_chromatic_value(c5_graph, spread) == result.chi_l

    def test_adding_an_edge_never_lowers_chi_l(self):
        rng = np.random.default_rng(23)
        for _ in range(12):
            size = int(rng.integers(2, 7))
            g = _random_digraph(rng, size, density=0.3)
            missing = [(v, w) for v in range(size) for w in range(size)
                       if v != w and w not in g.out_edges[v]]
            if not missing:
                continue
            v, w = missing[int(rng.integers(len(missing)))]
            edges = [(a, b) for a in range(size) for b in g.out_edges[a]] + [(v, w)]
            bigger = ConflictGraph.from_edges(size, edges)
            assert (exact_local_chromatic(bigger, packet_consistent=False).chi_l
                    >= exact_local_chromatic(g, packet_consistent=False).chi_l)


class TestBestAvailableColoring:
    def test_exact_within_guard(self, c5_graph):
        result = best_available_coloring(c5_graph, packet_consistent=False)
        assert result.optimal
        assert result.chi_l == 3

    def test_greedy_beyond_guard(self, c5_graph, caplog):
        result = best_available_coloring(c5_graph, packet_consistent=False, max_vertices=2)
        assert not result.optimal
        assert is_proper(c5_graph, result.coloring.colors)
        assert "greedy" in caplog.text


class TestGreedy:
    def test_vertex_mode_proper(self, c5_graph):
        result = greedy_local_coloring(c5_graph, packet_consistent=False)
        assert is_proper(c5_graph, result.coloring.colors)
        assert result.chi_l >= 3

    def test_packet_mode_consistent(self, base_placement):
        F = RequestMatrix(m=3, requests=((1, 2), (2, 3), (1, 2)))
        g = build_conflict_graph(base_placement, F)
        result = greedy_local_coloring(g, packet_consistent=True)
        assert is_packet_consistent(g, result.coloring.colors)
        assert is_proper(g, result.coloring.colors)
        assert result.chi_l >= exact_local_chromatic(g, packet_consistent=True).chi_l


class TestIndependentSets:
    def test_complete_graph(self, k3_graph):
        assert independent_sets(k3_graph) == [frozenset({0}), frozenset({1}), frozenset({2})]

    def test_edgeless(self):
        sets = independent_sets(ConflictGraph.from_edges(3, []))
        assert len(sets) == 7
        assert sets[-1] == frozenset({0, 1, 2})

    def test_cap(self):
        with pytest.raises(InstanceTooLargeError):
            independent_sets(ConflictGraph.from_edges(5, []), max_sets=10)


class TestCoverProgram:
    def test_known_values(self, k3_graph, c5_graph, path_graph):
        assert local_chromatic_ilp(k3_graph) == 3
        assert local_chromatic_ilp(c5_graph) == 3
        assert local_chromatic_ilp(path_graph) == 2

    def test_empty(self):
        assert local_chromatic_ilp(ConflictGraph.from_edges(0, [])) == 0

    def test_guard(self, c5_graph):
        with pytest.raises(InstanceTooLargeError):
            local_chromatic_ilp(c5_graph, max_vertices=4)


class TestFractionalLocalChromatic:
    def test_odd_cycle_is_five_halves(self, c5_graph):
        assert fractional_local_chromatic(c5_graph).value == Fraction(5, 2)

    def test_complete(self, k3_graph):
        assert fractional_local_chromatic(k3_graph).value == 3

    def test_directed_path(self, path_graph):
        assert fractional_local_chromatic(path_graph).value == 2

    def test_empty(self):
        assert fractional_local_chromatic(ConflictGraph.from_edges(0, [])).value == 0

    def test_weights_cover_every_vertex(self, c5_graph):
        result = fractional_local_chromatic(c5_graph)
        for v in range(5):
            assert sum(w for s, w in result.weights.items() if v in s) >= 1
        assert all(0 < w <= 1 for w in result.weights.values())

    def test_weights_reproduce_value(self):
        rng = np.random.default_rng(31)
        for _ in range(8):
            g = _random_digraph(rng, int(rng.integers(1, 7)))
            result = fractional_local_chromatic(g)
            loads = [sum(w for s, w in result.weights.items() if s & closed_out_neighborhood(g, v))
                     for v in range(len(g))]
            assert max(loads) == result.value
            assert all(0 < w <= 1 for w in result.weights.values())

    def test_inconsistent_solution_rejected(self, monkeypatch, k3_graph):
        sets = independent_sets(k3_graph)
        fake = LinearProgramResult(value=Fraction(3),
                                   solution=(Fraction(1, 2),) * len(sets) + (Fraction(3),),
                                   pivots=0)
        monkeypatch.setattr("src.coloring.minimize", lambda *args, **kwargs: fake)
        with pytest.raises(InfeasibleProgramError, match="neighborhood load"):
            fractional_local_chromatic(k3_graph)

    def test_never_above_integral(self):
        rng = np.random.default_rng(11)
        for _ in range(8):
            g = _random_digraph(rng, int(rng.integers(1, 6)))
            assert fractional_local_chromatic(g).value <= local_chromatic_ilp(g)

    def test_guard(self, c5_graph):
        with pytest.raises(InstanceTooLargeError):
            fractional_local_chromatic(c5_graph, max_vertices=3)
