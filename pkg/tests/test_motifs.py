import itertools

import pytest

from motifenergy.errors import DisconnectedSetError, NumericError, OracleCapError
from motifenergy.graph import build_graph, nodes_connected
from motifenergy.motifs import (
    count_cises,
    enumerate_cises,
    exact_energy_sum,
    hon_neighbors,
)

from conftest import random_graph


def brute_cises(g, k):
    return sorted(
        tuple(sorted(c))
        for c in itertools.combinations(range(g.n), k)
        if nodes_connected(g, c)
    )


def star(leaves):
    return build_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def cycle(n):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


class TestEnumerateCises:
    def test_star_k3(self):
        got = list(enumerate_cises(star(4), 3))
        # center plus each leaf pair: C(4,2) = 6
        assert got == brute_cises(star(4), 3)
        assert len(got) == 6

    def test_triangle_k2_is_edges(self):
        assert list(enumerate_cises(cycle(3), 2)) == [(0, 1), (0, 2), (1, 2)]

    def test_five_cycle_k3(self):
        got = list(enumerate_cises(cycle(5), 3))
        assert len(got) == 5
        assert got == brute_cises(cycle(5), 3)

    def test_k1_yields_all_nodes(self):
        assert list(enumerate_cises(star(3), 1)) == [(v,) for v in range(4)]

    def test_matches_naive_filter(self):
        for seed in range(30):
            g = random_graph(12, 0.3, seed)
            for k in (2, 3, 4, 5):
                assert list(enumerate_cises(g, k)) == brute_cises(g, k)

    def test_lexicographic_order_and_uniqueness(self):
        g = random_graph(14, 0.4, 99)
        got = list(enumerate_cises(g, 4))
        assert got == sorted(set(got))

    def test_cap_refusal(self):
        g = random_graph(30, 0.5, 0)
        with pytest.raises(OracleCapError, match="cap 10"):
            list(enumerate_cises(g, 6, cap=10))

    def test_k_out_of_range(self):
        with pytest.raises(DisconnectedSetError):
            list(enumerate_cises(star(2), 5))


class TestHonNeighbors:
    def test_path_triple(self):
        g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        hood = hon_neighbors(g, (0, 1, 2))
        assert hood.neighbors == ((1, 2, 3),)
        assert hood.degree == 1

    def test_five_cycle_consecutive_triple(self):
        g = cycle(5)
        hood = hon_neighbors(g, (0, 1, 2))
        assert hood.degree == 2
        assert set(hood.neighbors) == {(1, 2, 3), (0, 1, 4)}

    def test_triangle_k2(self):
        hood = hon_neighbors(cycle(3), (0, 1))
        assert hood.degree == 2
        assert set(hood.neighbors) == {(0, 2), (1, 2)}

    def test_disconnected_center_rejected(self):
        g = build_graph(4, [(0, 1), (2, 3)])
        with pytest.raises(DisconnectedSetError):
            hon_neighbors(g, (0, 2))

    def test_neighbors_are_connected_and_share_k_minus_1(self):
        g = random_graph(12, 0.35, 7)
        for C in brute_cises(g, 3):
            hood = hon_neighbors(g, C)
            for D in hood.neighbors:
                assert nodes_connected(g, D)
                assert len(set(C) & set(D)) == 2

    def test_symmetry(self):
        for seed in range(10):
            g = random_graph(15, 0.25, seed)
            cises = brute_cises(g, 3)
            hoods = {C: set(hon_neighbors(g, C).neighbors) for C in cises}
            for C in cises:
                for D in hoods[C]:
                    assert C in hoods[D]

    def test_degree_sum_equals_twice_edge_count(self):
        for seed in range(10):
            g = random_graph(12, 0.3, seed)
            cises = brute_cises(g, 3)
            pairwise = sum(
                1
                for A, B in itertools.combinations(cises, 2)
                if len(set(A) & set(B)) == 2
            )
            degsum = sum(hon_neighbors(g, C).degree for C in cises)
            assert degsum == 2 * pairwise


class TestExactEnergySum:
    def test_triangle_counts_edges(self):
        assert exact_energy_sum(cycle(3), 2, lambda m: 1.0) == 3.0

    def test_five_cycle_constant_two(self):
        assert exact_energy_sum(cycle(5), 3, lambda m: 2.0) == 10.0

    def test_zero_phi(self):
        assert exact_energy_sum(random_graph(10, 0.4, 1), 3, lambda m: 0.0) == 0.0

    def test_non_finite_phi_named(self):
        with pytest.raises(NumericError, match=r"\(0, 1\)"):
            exact_energy_sum(cycle(3), 2, lambda m: float("nan"))

    def test_karate_cis_count_regression(self, karate):
        # cross-checked against the naive subset filter when first pinned
        assert count_cises(karate, 3) == 438
        assert count_cises(karate, 2) == 78
