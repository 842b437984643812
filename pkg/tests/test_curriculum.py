"""Progressive unlocking: smoothing, gates, warmup, monotonicity."""

from __future__ import annotations

import pytest

from skillnet import (
    CurriculumState,
    EdgeKind,
    SkillGraph,
    level_mean,
    maybe_unlock,
    smoothed_success,
)

from conftest import make_node


def post_warmup_state(threshold: float = 0.6) -> CurriculumState:
    return CurriculumState(warmup_steps_remaining=0, unlock_threshold=threshold)


def leveled_graph() -> SkillGraph:
    """Three prereq-chained levels with two skills each."""
    graph = SkillGraph()
    for lvl in range(3):
        for i in range(2):
            graph.add_skill(make_node(f"l{lvl}_{i}", category="clean"))
    for lvl in range(1, 3):
        for i in range(2):
            graph.add_edge(f"l{lvl - 1}_{i}", f"l{lvl}_{i}", EdgeKind.PREREQ, 0.5)
    graph.compute_levels()
    return graph


def set_counts(graph: SkillGraph, skill_id: str, use: int, succ: int) -> None:
    graph.nodes[skill_id].n_use = use
    graph.nodes[skill_id].n_succ = succ


class TestSmoothedSuccess:
    def test_prior_mean_for_unused(self):
        assert smoothed_success(make_node("a")) == 0.5

    def test_posterior_mean(self):
        assert smoothed_success(make_node("a", n_use=10, n_succ=7)) == \
            pytest.approx(8 / 12)

    def test_shrinks_toward_half(self):
        node = make_node("a", n_use=100, n_succ=60)
        assert smoothed_success(node) == pytest.approx(61 / 102)
        assert smoothed_success(node) < 0.6  # raw 0.60 shrinks below the gate


class TestMaybeUnlock:
    def test_gate_passes_and_unlocks_one_level(self):
        graph = leveled_graph()
        for i in range(2):
            set_counts(graph, f"l0_{i}", 10, 7)  # smoothed 8/12 = 0.667
        unlocked = maybe_unlock(graph, post_warmup_state())
        assert unlocked == [1]
        assert graph.highest_active_level == 1

    def test_gate_blocks_below_threshold(self):
        graph = leveled_graph()
        for i in range(2):
            set_counts(graph, f"l0_{i}", 10, 5)  # smoothed 0.5
        assert maybe_unlock(graph, post_warmup_state()) == []
        assert graph.highest_active_level == 0

    def test_no_unlock_during_warmup(self):
        graph = leveled_graph()
        for i in range(2):
            set_counts(graph, f"l0_{i}", 100, 100)
        state = CurriculumState()  # warmup 5
        for tick in range(5):
            assert maybe_unlock(graph, state) == []
        assert maybe_unlock(graph, state) == [1]

    def test_cascade_stops_on_fresh_level(self):
        graph = leveled_graph()
        for i in range(2):
            set_counts(graph, f"l0_{i}", 10, 9)
        # level-1 skills unused: smoothed 0.5 < 0.6 stops the cascade
        assert maybe_unlock(graph, post_warmup_state()) == [1]

    def test_multi_level_cascade(self):
        graph = leveled_graph()
        for lvl in range(2):
            for i in range(2):
                set_counts(graph, f"l{lvl}_{i}", 10, 9)
        assert maybe_unlock(graph, post_warmup_state()) == [1, 2]
        assert graph.highest_active_level == 2

    def test_stops_at_top_level(self):
        graph = leveled_graph()
        for lvl in range(3):
            for i in range(2):
                set_counts(graph, f"l{lvl}_{i}", 10, 9)
        assert maybe_unlock(graph, post_warmup_state()) == [1, 2]

    def test_empty_level_passes_vacuously(self):
        graph = leveled_graph()
        for i in range(2):
            graph.nodes[f"l0_{i}"].deprecated = True
            set_counts(graph, f"l1_{i}", 10, 9)
        # level 0 has no live nodes -> vacuous pass; level 1 passes on merit
        assert maybe_unlock(graph, post_warmup_state()) == [1, 2]

    def test_deprecated_excluded_from_mean(self):
        graph = leveled_graph()
        set_counts(graph, "l0_0", 10, 9)          # smoothed ~0.83
        set_counts(graph, "l0_1", 100, 0)          # would drag the mean
        graph.nodes["l0_1"].deprecated = True
        assert level_mean(graph, 0) == pytest.approx(10 / 12)
        assert maybe_unlock(graph, post_warmup_state()) == [1]

    def test_monotone_over_noisy_run(self, rng):
        graph = leveled_graph()
        state = CurriculumState()
        history = [0]
        for step in range(200):
            batch = []
            for skill_id in graph.active_ids():
                used = rng.random() < 0.8
                batch.append((skill_id, used, used and rng.random() < 0.7))
            graph.update_stats(batch)
            maybe_unlock(graph, state)
            history.append(state.highest_active_level)
        assert all(b >= a for a, b in zip(history, history[1:]))

    def test_gate_soundness_on_unlock(self, rng):
        # whenever an unlock fires, the just-passed level's mean was >= gate
        for trial in range(50):
            graph = leveled_graph()
            for lvl in range(3):
                for i in range(2):
                    use = rng.randint(0, 40)
                    set_counts(graph, f"l{lvl}_{i}", use, rng.randint(0, use))
            state = post_warmup_state()
            means_before = {lvl: level_mean(graph, lvl) for lvl in range(3)}
            unlocked = maybe_unlock(graph, state)
            for new_level in unlocked:
                mean = means_before[new_level - 1]
                assert mean is None or mean >= state.unlock_threshold
