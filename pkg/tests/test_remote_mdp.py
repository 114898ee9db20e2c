"""Tests for the guided grid world and joint Q-learning of guide and agent."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from goalcomm.channels import DiscreteChannel
from goalcomm.remote import (
    GridWorld,
    MessagePolicy,
    QLearningParams,
    evaluate_guidance,
    greedy_policy,
    q_learn_joint,
    random_walk_stats,
)
from goalcomm.sim.rng import RngStream


@pytest.fixture
def grid() -> GridWorld:
    return GridWorld(width=5, height=5, target=(4, 4))


class TestGridWorld:
    def test_wall_bump_stays_in_place(self, grid: GridWorld) -> None:
        state, reward, done = grid.step(grid.index((0, 0)), 0)  # N
        assert state == grid.index((0, 0))
        assert reward == -1
        assert not done

    def test_entering_target_pays_out(self, grid: GridWorld) -> None:
        state, reward, done = grid.step(grid.index((3, 4)), 2)  # E
        assert state == grid.target_state
        assert reward == 99
        assert done

    def test_obstacle_blocks_move(self) -> None:
        env = GridWorld(width=3, height=2, target=(2, 0), obstacles=frozenset({(1, 0)}))
        corner = env.index((0, 0))
        assert env.step(corner, 2)[0] == corner  # E
        assert env.distance(corner) == 4

    def test_unreachable_target_rejected(self) -> None:
        with pytest.raises(ValueError):
            GridWorld(width=3, height=3, target=(2, 2), obstacles=frozenset({(1, 2), (2, 1)}))

    def test_step_from_target_rejected(self, grid: GridWorld) -> None:
        with pytest.raises(ValueError):
            grid.step(grid.target_state, 0)

    def test_manhattan_distances(self, grid: GridWorld) -> None:
        assert grid.distance(grid.index((0, 0))) == 8
        assert grid.distance(grid.index((4, 3))) == 1


class TestGreedyGuidance:
    def test_noiseless_channel_gives_shortest_paths(self, grid: GridWorld, rng: RngStream) -> None:
        stats = evaluate_guidance(grid, greedy_policy(grid), DiscreteChannel(), 200, rng)
        assert stats.success_rate == 1.0
        assert stats.steps == [grid.distance(s) for s in stats.starts]
        assert stats.returns == [100 - n for n in stats.steps]

    def test_noise_lengthens_episodes(self, grid: GridWorld, rng: RngStream) -> None:
        policy = greedy_policy(grid)
        clean = evaluate_guidance(grid, policy, DiscreteChannel(epsilon=0.0), 300, rng)
        noisy = evaluate_guidance(grid, policy, DiscreteChannel(epsilon=0.2), 300, rng)
        assert noisy.starts == clean.starts
        assert noisy.mean_steps > clean.mean_steps
        assert noisy.mean_return < clean.mean_return

    def test_random_walk_is_slower(self, grid: GridWorld, rng: RngStream) -> None:
        greedy = evaluate_guidance(grid, greedy_policy(grid), DiscreteChannel(), 200, rng)
        walk = random_walk_stats(grid, 200, rng)
        assert walk.starts == greedy.starts
        assert walk.mean_steps > greedy.mean_steps

    def test_literal_guide_needs_four_messages(self, grid: GridWorld) -> None:
        with pytest.raises(ValueError):
            greedy_policy(grid, messages=2)

    def test_messages_must_fit_channel(self, grid: GridWorld, rng: RngStream) -> None:
        policy = MessagePolicy(guide=(0,) * grid.n_states, agent=tuple(range(4)) * 2)
        with pytest.raises(ValueError):
            evaluate_guidance(grid, policy, DiscreteChannel(q=2, uses=2), 1, rng)

    def test_episode_csv(self, grid: GridWorld, rng: RngStream, tmp_path: Path) -> None:
        stats = evaluate_guidance(grid, greedy_policy(grid), DiscreteChannel(), 3, rng)
        path = stats.write_csv(tmp_path / "episodes.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "episode,start,steps,return,success"
        assert len(lines) == 4


class TestMessagePolicy:
    def test_dump_and_load(self, grid: GridWorld, tmp_path: Path) -> None:
        policy = greedy_policy(grid)
        loaded = MessagePolicy.load(policy.dump(tmp_path / "policy.toml"))
        assert loaded == policy

    def test_out_of_range_message_rejected(self) -> None:
        with pytest.raises(ValueError):
            MessagePolicy(guide=(0, 5), agent=(0, 1))


class TestJointLearning:
    PARAMS = QLearningParams(rounds=2, episodes=200, eval_episodes=50, step_cap=30)

    def test_learns_to_beat_random_walk(self, rng: RngStream) -> None:
        env = GridWorld(width=3, height=3, target=(2, 2))
        result = q_learn_joint(env, DiscreteChannel(), self.PARAMS, rng)
        walk = random_walk_stats(env, 50, rng.spawn("eval"), step_cap=30)
        assert result.best.mean_return > walk.mean_return
        assert len(result.curve) == 4
        assert [p.phase for p in result.curve] == ["guide", "agent", "guide", "agent"]

    def test_deterministic_for_fixed_seed(self) -> None:
        env = GridWorld(width=3, height=3, target=(2, 2))
        channel = DiscreteChannel(epsilon=0.1)
        a = q_learn_joint(env, channel, self.PARAMS, RngStream(5, "learn"))
        b = q_learn_joint(env, channel, self.PARAMS, RngStream(5, "learn"))
        assert a.policy == b.policy
        assert np.array_equal(a.best.returns, b.best.returns)

    def test_single_message_agent_walks_blind(self, rng: RngStream) -> None:
        env = GridWorld(width=3, height=3, target=(2, 2))
        params = QLearningParams(rounds=1, episodes=50, eval_episodes=20, step_cap=30, messages=1)
        result = q_learn_joint(env, DiscreteChannel(), params, rng)
        assert result.policy.messages == 1
        assert set(result.policy.guide) == {0}

    def test_curve_csv(self, rng: RngStream, tmp_path: Path) -> None:
        env = GridWorld(width=3, height=3, target=(2, 2))
        params = QLearningParams(rounds=1, episodes=20, eval_episodes=5, step_cap=20)
        path = q_learn_joint(env, DiscreteChannel(), params, rng).write_curve(tmp_path / "c.csv")
        assert path.read_text().splitlines()[0] == (
            "round,phase,mean_return,mean_steps,success_rate"
        )

    def test_invalid_params_rejected(self) -> None:
        with pytest.raises(ValueError):
            QLearningParams(alpha=0.0)
