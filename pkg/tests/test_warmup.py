import math

import numpy as np
import pytest

from conftest import indicator_heatmap, nn_tour_from, tour_edge_set
from dttgf import rng
from dttgf.errors import ConfigError, DomainError
from dttgf.instance import Tour, TspInstance, gen_uniform, tour_length
from dttgf.merge import Heatmap
from dttgf.warmup import (
    WarmupParams,
    _improvement_delta,
    backprop_update,
    fitness_argmax,
    warm_up,
)


def two_tours_instance():
    """Five-point instance with two hand-picked tours that share edges.

    The baseline crosses itself, so it is strictly longer than the trial
    and the update delta comes out positive.
    """
    pts = np.array([[0.0, 0.0], [0.3, 0.05], [0.6, 0.0], [0.7, 0.4], [0.1, 0.5]])
    inst = TspInstance(pts)
    baseline = Tour([0, 2, 1, 3, 4])
    trial = Tour([0, 1, 2, 3, 4])
    return inst, baseline, trial


class TestParams:
    def test_defaults_valid(self):
        WarmupParams().validate()

    def test_budget_default_scales_with_n(self):
        assert WarmupParams().resolve_budget(80) == 80
        assert WarmupParams().resolve_budget(5000) == 200
        assert WarmupParams(budget=7).resolve_budget(5000) == 7

    def test_bad_beta(self):
        with pytest.raises(ConfigError):
            WarmupParams(beta=0.0).validate()

    def test_bad_denominator(self):
        with pytest.raises(ConfigError):
            WarmupParams(denominator="trial").validate()

    def test_bad_budget(self):
        with pytest.raises(ConfigError):
            WarmupParams(budget=-1).validate()


class TestFitnessArgmax:
    def test_picks_length_weighted_maximum(self):
        """Probability 0.4 on a 0.3-long edge beats 0.5 on a 0.2-long one."""
        pts = np.array([[0.0, 0.0], [0.2, 0.0], [0.5, 0.0]])
        inst = TspInstance(pts)
        hm = Heatmap(3, {(0, 1): 0.5, (1, 2): 0.4})
        assert fitness_argmax(hm, inst, set()) == (1, 2)

    def test_tried_edges_are_skipped(self):
        pts = np.array([[0.0, 0.0], [0.2, 0.0], [0.5, 0.0]])
        inst = TspInstance(pts)
        hm = Heatmap(3, {(0, 1): 0.5, (1, 2): 0.4})
        assert fitness_argmax(hm, inst, {(1, 2)}) == (0, 1)

    def test_exhausted_support_returns_none(self):
        pts = np.array([[0.0, 0.0], [0.2, 0.0], [0.5, 0.0]])
        inst = TspInstance(pts)
        hm = Heatmap(3, {(0, 1): 0.5})
        assert fitness_argmax(hm, inst, {(0, 1)}) is None
        assert fitness_argmax(Heatmap(3), inst, set()) is None

    def test_tie_breaks_lexicographically(self):
        """Equal fitness resolves to the smaller (i, j) pair."""
        pts = np.array([[0.0, 0.0], [0.2, 0.0], [0.5, 0.0], [0.7, 0.0]])
        inst = TspInstance(pts)
        hm = Heatmap(4, {(0, 1): 0.5, (2, 3): 0.5})  # both edges 0.2 long
        assert fitness_argmax(hm, inst, set()) == (0, 1)


class TestImprovementDelta:
    def test_frozen_example(self):
        """Baseline 10.5 against trial 10.0 with beta 0.1 shifts by
        0.1 * (e^0.05 - 1)."""
        delta = _improvement_delta(0.1, 10.5, 10.0, 10.0)
        assert delta == pytest.approx(0.1 * (math.exp(0.05) - 1.0), rel=1e-15)
        assert delta == pytest.approx(0.00512710963760241, rel=1e-12)

    def test_sign_follows_improvement(self):
        assert _improvement_delta(0.1, 10.0, 9.0, 9.0) > 0
        assert _improvement_delta(0.1, 9.0, 10.0, 10.0) < 0
        assert _improvement_delta(0.1, 7.0, 7.0, 7.0) == 0.0

    def test_rejects_bad_denominator_length(self):
        with pytest.raises(DomainError):
            _improvement_delta(0.1, 1.0, 1.0, 0.0)


class TestBackpropUpdate:
    def test_shifts_disagreement_edges_only(self):
        inst, baseline, trial = two_tours_instance()
        base_edges = tour_edge_set(list(baseline.order))
        trial_edges = tour_edge_set(list(trial.order))
        hm = Heatmap(5, {e: 0.5 for e in base_edges | trial_edges})
        hm.set(3, 4, 0.25)  # shared edge, must stay exactly as set
        before = dict(hm.entries)

        out = backprop_update(hm, baseline, trial, 0.1, inst)
        assert out is hm

        base_len = tour_length(baseline, inst)
        trial_len = tour_length(trial, inst)
        delta = 0.1 * (math.exp((base_len - trial_len) / trial_len) - 1.0)
        for e in base_edges & trial_edges:
            assert hm.entries[e] == before[e]  # untouched, bit-identical
        for e in base_edges - trial_edges:
            assert hm.get(*e) == pytest.approx(before[e] + delta, abs=1e-15)
        for e in trial_edges - base_edges:
            assert hm.get(*e) == pytest.approx(before[e] - delta, abs=1e-15)

    def test_off_tour_entries_untouched(self):
        inst, baseline, trial = two_tours_instance()
        hm = Heatmap(5, {(0, 3): 0.7})  # in neither tour
        backprop_update(hm, baseline, trial, 0.1, inst)
        assert hm.entries[(0, 3)] == 0.7

    def test_equal_lengths_change_nothing(self):
        """Zero delta short-circuits before touching any entry."""
        inst = TspInstance(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
        a = Tour([0, 1, 2, 3])
        b = Tour([1, 2, 3, 0])  # same cycle, same length
        hm = Heatmap(4, {(0, 1): 0.5, (0, 2): 0.3})
        before = dict(hm.entries)
        backprop_update(hm, a, b, 0.1, inst)
        assert hm.entries == before

    def test_clamps_to_unit_interval(self):
        inst, baseline, trial = two_tours_instance()
        base_only = next(iter(tour_edge_set(list(baseline.order)) - tour_edge_set(list(trial.order))))
        trial_only = next(iter(tour_edge_set(list(trial.order)) - tour_edge_set(list(baseline.order))))
        hm = Heatmap(5, {base_only: 0.9999999, trial_only: 1e-9})
        # the baseline is longer, so base-only edges move up, trial-only down
        assert tour_length(baseline, inst) > tour_length(trial, inst)
        backprop_update(hm, baseline, trial, 5.0, inst)
        assert hm.get(*base_only) == 1.0
        assert hm.get(*trial_only) == 0.0

    def test_flip_alpha_reverses_direction(self):
        inst, baseline, trial = two_tours_instance()
        base_only = next(iter(tour_edge_set(list(baseline.order)) - tour_edge_set(list(trial.order))))
        hm1 = Heatmap(5, {base_only: 0.5})
        hm2 = Heatmap(5, {base_only: 0.5})
        backprop_update(hm1, baseline, trial, 0.1, inst)
        backprop_update(hm2, baseline, trial, 0.1, inst, flip_alpha=True)
        up = hm1.get(*base_only) - 0.5
        down = hm2.get(*base_only) - 0.5
        assert up == pytest.approx(-down, rel=1e-12)
        assert up > 0

    def test_denominator_choice_changes_magnitude(self):
        inst, baseline, trial = two_tours_instance()
        base_only = next(iter(tour_edge_set(list(baseline.order)) - tour_edge_set(list(trial.order))))
        hm_del = Heatmap(5, {base_only: 0.5})
        hm_base = Heatmap(5, {base_only: 0.5})
        backprop_update(hm_del, baseline, trial, 0.1, inst, denominator="del")
        backprop_update(hm_base, baseline, trial, 0.1, inst, denominator="baseline")
        base_len = tour_length(baseline, inst)
        trial_len = tour_length(trial, inst)
        expected_del = 0.1 * (math.exp((base_len - trial_len) / trial_len) - 1.0)
        expected_base = 0.1 * (math.exp((base_len - trial_len) / base_len) - 1.0)
        assert hm_del.get(*base_only) == pytest.approx(0.5 + expected_del, abs=1e-15)
        assert hm_base.get(*base_only) == pytest.approx(0.5 + expected_base, abs=1e-15)

    def test_validates_inputs(self):
        inst, baseline, trial = two_tours_instance()
        with pytest.raises(DomainError):
            backprop_update(Heatmap(5), baseline, trial, 0.0, inst)
        with pytest.raises(ConfigError):
            backprop_update(Heatmap(5), baseline, trial, 0.1, inst, denominator="x")


class TestWarmUp:
    def run_warmup(self, n=50, seed=0, check=True, **kw):
        inst = gen_uniform(n, seed)
        hm = indicator_heatmap(nn_tour_from(inst.points, 0), n)
        params = WarmupParams(**kw)
        state = warm_up(hm, inst, params, rng.stream(seed, rng.WARMUP), check_invariants=check)
        return inst, hm, state

    def test_budget_zero_is_identity(self):
        inst, hm, state = self.run_warmup(budget=0)
        assert state.heatmap.entries == hm.entries
        assert state.baseline is None and state.history == []

    def test_disabled_is_identity(self):
        inst, hm, state = self.run_warmup(enabled=False)
        assert state.heatmap.entries == hm.entries

    def test_input_heatmap_not_mutated(self):
        inst, hm, state = self.run_warmup(budget=10, samples=4)
        assert set(hm.entries.values()) == {1.0}  # still the indicator

    def test_budget_and_history_agree(self):
        inst, hm, state = self.run_warmup(budget=12, samples=4)
        assert state.iteration <= 12
        assert len(state.history) == state.iteration
        assert len(state.tried) == state.iteration

    def test_baseline_never_degrades(self):
        """Recorded baseline lengths are non-increasing over iterations."""
        inst, hm, state = self.run_warmup(n=80, budget=25, samples=4)
        lengths = [rec["baseline_length"] for rec in state.history]
        assert all(b <= a + 1e-12 for a, b in zip(lengths, lengths[1:]))
        assert state.baseline is not None
        assert tour_length(state.baseline, inst) == pytest.approx(lengths[-1])

    def test_start_at_least_as_long_as_final_baseline(self):
        inst, hm, state = self.run_warmup(n=80, seed=3, budget=25, samples=4)
        assert tour_length(state.baseline, inst) <= tour_length(state.start, inst) + 1e-12

    def test_kept_deletion_ends_at_zero(self):
        """When the single trial improves, the deleted edge stays at zero."""
        for seed in (1, 2):
            inst, hm, state = self.run_warmup(n=40, seed=seed, budget=1, samples=4)
            rec = state.history[0]
            assert rec["kept"]
            assert state.heatmap.get(*rec["edge"]) == 0.0
            assert rec["trial_length"] == rec["baseline_length"]

    def test_rejected_deletion_is_restored(self):
        """When the single trial does not improve, the edge value returns."""
        inst, hm, state = self.run_warmup(n=40, seed=0, budget=1, samples=4)
        rec = state.history[0]
        assert not rec["kept"]
        assert state.heatmap.get(*rec["edge"]) == hm.get(*rec["edge"])
        assert rec["trial_length"] >= rec["baseline_length"] - 1e-12

    def test_values_stay_probabilities(self):
        inst, hm, state = self.run_warmup(n=60, seed=2, budget=20, samples=4)
        assert all(0.0 <= p <= 1.0 for p in state.heatmap.entries.values())

    def test_empty_support_short_circuits(self):
        inst = gen_uniform(20, 4)
        state = warm_up(Heatmap(20), inst, WarmupParams(), rng.stream(0, rng.WARMUP))
        assert state.iteration == 0 and state.baseline is None

    def test_strict_mode_skips_update_on_failed_trial(self):
        """Seed 13's first trial is strictly worse: strict mode leaves the
        heatmap bit-identical, the default mode still back-propagates."""
        _, hm, strict = self.run_warmup(n=40, seed=13, budget=1, samples=4, strict_improving=True)
        rec = strict.history[0]
        assert not rec["kept"] and rec["trial_length"] > rec["baseline_length"]
        assert strict.heatmap.entries == hm.entries
        _, _, loose = self.run_warmup(n=40, seed=13, budget=1, samples=4, strict_improving=False)
        assert loose.heatmap.entries != hm.entries

    def test_time_budget_zero_stops_before_first_trial(self):
        inst, hm, state = self.run_warmup(budget=10, time_budget_ms=0.0)
        assert state.iteration == 0 and state.history == []
        assert state.baseline is not None  # the initial decode still happens

    def test_deterministic(self):
        _, _, s1 = self.run_warmup(n=40, seed=6, budget=10, samples=4)
        _, _, s2 = self.run_warmup(n=40, seed=6, budget=10, samples=4)
        assert s1.heatmap.entries == s2.heatmap.entries
        assert s1.baseline == s2.baseline
        assert s1.history == s2.history
