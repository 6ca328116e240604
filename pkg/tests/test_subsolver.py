import math

import numpy as np
import pytest

from conftest import brute_force_tour, cycle_length, tour_edge_set
from dttgf import rng
from dttgf.errors import ConfigError, SizeError
from dttgf.instance import TspInstance, gen_uniform, tour_length
from dttgf.sampling import SubGraph
from dttgf.subsolver import (
    HELD_KARP_MAX,
    SolverSpec,
    SubHeatmap,
    SubTour,
    ensemble_heatmap_solve,
    held_karp_exact,
    nn_2opt_solve,
    solve_subgraph,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def whole_graph(inst):
    return SubGraph(np.arange(inst.n), inst.n)


class TestHeldKarp:
    def test_square_perimeter(self):
        tour = held_karp_exact(TspInstance(SQUARE))
        assert tour_length(tour, TspInstance(SQUARE)) == pytest.approx(4.0)

    def test_two_nodes(self):
        inst = TspInstance(np.array([[0.1, 0.1], [0.4, 0.5]]))
        tour = held_karp_exact(inst)
        assert tour_length(tour, inst) == pytest.approx(2.0 * inst.distance(0, 1))

    def test_three_nodes(self):
        inst = gen_uniform(3, 0)
        tour = held_karp_exact(inst)
        tour.validate_for(3)

    @pytest.mark.parametrize("n,seed", [(5, 0), (6, 1), (7, 2), (8, 3), (9, 1)])
    def test_matches_brute_force(self, n, seed):
        """The DP optimum equals exhaustive permutation search."""
        inst = gen_uniform(n, seed)
        tour = held_karp_exact(inst)
        tour.validate_for(n)
        oracle_len, _ = brute_force_tour(inst.points)
        assert tour_length(tour, inst) == pytest.approx(oracle_len, rel=1e-12)

    def test_rejects_large_instances(self):
        inst = gen_uniform(HELD_KARP_MAX + 1, 0)
        with pytest.raises(SizeError):
            held_karp_exact(inst)

    def test_at_size_limit(self):
        inst = gen_uniform(HELD_KARP_MAX, 4)
        held_karp_exact(inst).validate_for(HELD_KARP_MAX)


class TestNn2opt:
    def test_square_is_solved_exactly(self):
        inst = TspInstance(SQUARE)
        result = nn_2opt_solve(whole_graph(inst), inst, 1, rng.stream(0, rng.SUBSOLVER))
        assert cycle_length(SQUARE, result.order) == pytest.approx(4.0)

    def test_output_is_local_permutation(self):
        inst = gen_uniform(40, 0)
        sub = SubGraph(np.arange(10, 35), 40)
        result = nn_2opt_solve(sub, inst, 2, rng.stream(0, rng.SUBSOLVER))
        assert sorted(result.order) == list(range(25))

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_never_beats_exact_optimum(self, seed):
        inst = gen_uniform(9, 10 + seed)
        result = nn_2opt_solve(whole_graph(inst), inst, 3, rng.stream(seed, rng.SUBSOLVER))
        opt_len, _ = brute_force_tour(inst.points)
        assert cycle_length(inst.points, result.order) >= opt_len - 1e-9

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_two_opt_optimal_at_quiescence(self, seed):
        """No single 2-exchange can improve the returned tour."""
        inst = gen_uniform(40, 20 + seed)
        result = nn_2opt_solve(whole_graph(inst), inst, 1, rng.stream(seed, rng.SUBSOLVER))
        order = list(result.order)
        pts = inst.points
        n = len(order)
        base = cycle_length(pts, order)
        for i in range(n - 1):
            for j in range(i + 1, n):
                trial = order[: i] + order[i: j + 1][::-1] + order[j + 1:]
                assert cycle_length(pts, trial) >= base - 1e-9

    def test_deterministic_given_stream(self):
        inst = gen_uniform(60, 3)
        a = nn_2opt_solve(whole_graph(inst), inst, 3, rng.stream(7, rng.SUBSOLVER, 0))
        b = nn_2opt_solve(whole_graph(inst), inst, 3, rng.stream(7, rng.SUBSOLVER, 0))
        assert np.array_equal(a.order, b.order)

    def test_more_restarts_never_hurt(self):
        inst = gen_uniform(50, 6)
        sub = whole_graph(inst)
        # restart loop keeps the best; compare via a shared stream prefix
        few = nn_2opt_solve(sub, inst, 1, rng.stream(9, rng.SUBSOLVER))
        many = nn_2opt_solve(sub, inst, 8, rng.stream(9, rng.SUBSOLVER))
        assert cycle_length(inst.points, many.order) <= cycle_length(inst.points, few.order) + 1e-12

    def test_bad_restarts(self):
        inst = gen_uniform(10, 0)
        with pytest.raises(ConfigError):
            nn_2opt_solve(whole_graph(inst), inst, 0, rng.stream(0, rng.SUBSOLVER))

    def test_sparse_path_matches_contract(self, monkeypatch):
        """Above the dense-matrix cutoff the k-NN candidate path kicks in."""
        import dttgf.subsolver as subsolver_mod

        monkeypatch.setattr(subsolver_mod, "DENSE_MATRIX_MAX", 40)
        inst = gen_uniform(70, 8)
        result = nn_2opt_solve(whole_graph(inst), inst, 2, rng.stream(1, rng.SUBSOLVER))
        assert sorted(result.order) == list(range(70))
        # quality sanity: no worse than 1.5x a dense solve of the same instance
        monkeypatch.setattr(subsolver_mod, "DENSE_MATRIX_MAX", 2000)
        dense = nn_2opt_solve(whole_graph(inst), inst, 2, rng.stream(1, rng.SUBSOLVER))
        assert cycle_length(inst.points, result.order) <= 1.5 * cycle_length(
            inst.points, dense.order
        )


class TestEnsemble:
    def test_single_run_is_indicator(self):
        """R = 1 gives a 0/1 heatmap tracing one tour."""
        inst = gen_uniform(20, 0)
        hm = ensemble_heatmap_solve(whole_graph(inst), inst, 1, rng.stream(0, rng.SUBSOLVER))
        assert set(hm.entries.values()) == {1.0}
        assert len(hm.entries) == 20  # a cycle has n edges

    def test_square_sides_only(self):
        inst = TspInstance(SQUARE)
        hm = ensemble_heatmap_solve(whole_graph(inst), inst, 4, rng.stream(0, rng.SUBSOLVER))
        assert hm.entries.get((0, 2)) is None and hm.entries.get((1, 3)) is None
        for side in [(0, 1), (1, 2), (2, 3), (0, 3)]:
            assert hm.entries[side] == 1.0

    @pytest.mark.parametrize("runs", [1, 2, 4, 16])
    def test_incident_mass_exactly_two(self, runs):
        """Each node touches exactly 2 edges per run, so mass is exactly 2.

        With power-of-two run counts every frequency is a dyadic rational,
        so even the float sum is exact.
        """
        inst = gen_uniform(30, 5)
        hm = ensemble_heatmap_solve(whole_graph(inst), inst, runs, rng.stream(2, rng.SUBSOLVER))
        mass = [0.0] * 30
        for (i, j), p in hm.entries.items():
            mass[i] += p
            mass[j] += p
        assert all(m == 2.0 for m in mass)

    def test_incident_counts_any_run_count(self):
        """For non-dyadic R, check the integer identity before division."""
        inst = gen_uniform(25, 6)
        runs = 3
        hm = ensemble_heatmap_solve(whole_graph(inst), inst, runs, rng.stream(3, rng.SUBSOLVER))
        counts = [0] * 25
        for (i, j), p in hm.entries.items():
            c = p * runs
            assert c == round(c)  # frequency is count/runs exactly
            counts[i] += round(c)
            counts[j] += round(c)
        assert all(c == 2 * runs for c in counts)

    def test_values_in_range(self):
        inst = gen_uniform(40, 7)
        hm = ensemble_heatmap_solve(whole_graph(inst), inst, 8, rng.stream(4, rng.SUBSOLVER))
        assert all(0.0 < p <= 1.0 for p in hm.entries.values())

    def test_bad_runs(self):
        inst = gen_uniform(10, 0)
        with pytest.raises(ConfigError):
            ensemble_heatmap_solve(whole_graph(inst), inst, 0, rng.stream(0, rng.SUBSOLVER))


class TestSolveSubgraph:
    def test_exact_dispatch(self):
        inst = gen_uniform(30, 0)
        sub = SubGraph(np.arange(12), 30)
        result = solve_subgraph(SolverSpec(kind="exact"), sub, inst, rng.stream(0, rng.SUBSOLVER))
        assert isinstance(result, SubTour)
        assert sorted(result.order) == list(range(12))

    def test_exact_rejects_oversized_subgraph(self):
        inst = gen_uniform(30, 0)
        sub = SubGraph(np.arange(17), 30)
        with pytest.raises(SizeError):
            solve_subgraph(SolverSpec(kind="exact"), sub, inst, rng.stream(0, rng.SUBSOLVER))

    def test_nn2opt_dispatch(self):
        inst = gen_uniform(30, 1)
        result = solve_subgraph(
            SolverSpec(kind="nn2opt"), whole_graph(inst), inst, rng.stream(0, rng.SUBSOLVER)
        )
        assert isinstance(result, SubTour)

    def test_ensemble_dispatch(self):
        inst = gen_uniform(30, 2)
        result = solve_subgraph(
            SolverSpec(kind="ensemble", ensemble_runs=4),
            whole_graph(inst),
            inst,
            rng.stream(0, rng.SUBSOLVER),
        )
        assert isinstance(result, SubHeatmap)
        assert result.size == 30

    def test_unknown_kind(self):
        inst = gen_uniform(10, 0)
        with pytest.raises(ConfigError):
            solve_subgraph(
                SolverSpec(kind="concorde"), whole_graph(inst), inst, rng.stream(0, rng.SUBSOLVER)
            )

    def test_exact_solution_on_subgraph_is_optimal(self):
        """Exact dispatch through a subgraph matches brute force on its points."""
        inst = gen_uniform(50, 9)
        sub = SubGraph([3, 11, 19, 25, 31, 40, 44, 48], 50)
        result = solve_subgraph(SolverSpec(kind="exact"), sub, inst, rng.stream(0, rng.SUBSOLVER))
        local_pts = inst.points[sub.nodes]
        opt_len, opt_order = brute_force_tour(local_pts)
        assert cycle_length(local_pts, result.order) == pytest.approx(opt_len, rel=1e-12)
        assert tour_edge_set(list(result.order)) == tour_edge_set(opt_order)
