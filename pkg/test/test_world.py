#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
test_world: particle physics, observations and the shared reward
"""

from math import sqrt
import unittest

from numpy import array, zeros
from numpy.random import default_rng

from coopnav._rollout import run_episode
from coopnav._util import DimensionError, EpisodeFinishedError
from coopnav._world import (ACTION_DIM, HORIZON, NUM_AGENTS, NUM_LANDMARKS,
                            OBS_LANDMARKS, OBS_OTHERS, OBS_POSITION,
                            OBS_VELOCITY, OBSERVATION_DIM, WorldState,
                            action_to_force, count_collisions,
                            coverage_distance, observe, outcome, reset,
                            step)

from test_coopnav import CoopnavTesterBase


def oracle_outcome(positions, landmarks):
    """Reward, collisions and coverage distances with plain loops."""
    coverage = []
    for lx, ly in landmarks:
        best = None
        for px, py in positions:
            dx = lx - px
            dy = ly - py
            distance = sqrt(dx * dx + dy * dy)
            if best is None or distance < best:
                best = distance
        coverage.append(best)

    collisions = 0
    for first in range(len(positions)):
        for second in range(first + 1, len(positions)):
            dx = positions[first][0] - positions[second][0]
            dy = positions[first][1] - positions[second][1]
            if sqrt(dx * dx + dy * dy) < 0.3:
                collisions += 1

    total = 0.0
    for distance in coverage:
        total += distance

    return -total - collisions, collisions, coverage


def oracle_step(positions, velocities, actions):
    res_positions = []
    res_velocities = []
    for (px, py), (vx, vy), action in zip(positions, velocities, actions):
        force_x = 5.0 * (action[1] - action[2])
        force_y = 5.0 * (action[3] - action[4])
        vx = vx * 0.75 + force_x / 1.0 * 0.1
        vy = vy * 0.75 + force_y / 1.0 * 0.1
        res_velocities.append((vx, vy))
        res_positions.append((px + vx * 0.1, py + vy * 0.1))

    return res_positions, res_velocities


def world_at(positions, landmarks, velocities=None, timestep=0):
    if velocities is None:
        velocities = zeros((NUM_AGENTS, 2))
    return WorldState(positions, velocities, landmarks, timestep)


class TestReset(CoopnavTesterBase):
    def test_ranges(self):
        rng = default_rng(1)
        for _ in range(100):
            world = reset(rng)
            self.assertEqual(world.timestep, 0)
            self.assertTrue((abs(world.positions) <= 1).all())
            self.assertTrue((abs(world.landmarks) <= 1).all())
            self.assertArraysEqual(world.velocities, zeros((NUM_AGENTS, 2)))

    def test_deterministic(self):
        self.assertEqual(reset(default_rng(5)), reset(default_rng(5)))
        self.assertNotEqual(reset(default_rng(5)), reset(default_rng(6)))

    def test_uniform_mean(self):
        rng = default_rng(3)
        worlds = [reset(rng) for _ in range(10000)]
        positions = array([world.positions for world in worlds])
        landmarks = array([world.landmarks for world in worlds])

        for coordinates in [positions, landmarks]:
            means = coordinates.mean(axis=0)
            self.assertTrue((abs(means) < 0.05).all(), means)


class TestObserve(CoopnavTesterBase):
    def test_layout(self):
        positions = [[0.1, 0.2], [-0.5, 0.5], [0.9, -0.3]]
        velocities = [[0.01, 0.02], [0.03, 0.04], [0.05, 0.06]]
        landmarks = [[1.0, 1.0], [0.0, 0.0], [-1.0, 0.5]]
        world = world_at(positions, landmarks, velocities)

        observation = observe(world, 1)
        self.assertEqual(observation.shape, (OBSERVATION_DIM,))
        self.assertArraysAlmostEqual(observation[OBS_VELOCITY], [0.03, 0.04])
        self.assertArraysAlmostEqual(observation[OBS_POSITION], [-0.5, 0.5])
        self.assertArraysAlmostEqual(observation[OBS_LANDMARKS],
                                     [1.5, 0.5, 0.5, -0.5, -0.5, 0.0])
        # others in ascending index: agent 0 then agent 2
        self.assertArraysAlmostEqual(observation[OBS_OTHERS],
                                     [0.6, -0.3, 1.4, -0.8])

    def test_bad_index(self):
        world = reset(default_rng(0))
        with self.assertRaises(DimensionError):
            observe(world, NUM_AGENTS)
        with self.assertRaises(DimensionError):
            observe(world, -1)


class TestOutcome(CoopnavTesterBase):
    def test_oracle(self):
        rng = default_rng(2024)
        for _ in range(1000):
            # tight spawns so that collisions actually happen
            positions = rng.uniform(-0.4, 0.4, (NUM_AGENTS, 2))
            landmarks = rng.uniform(-1, 1, (NUM_LANDMARKS, 2))
            world = world_at(positions, landmarks)

            reward, collisions, coverage = oracle_outcome(positions.tolist(),
                                                          landmarks.tolist())
            observed = outcome(world)

            self.assertEqual(observed.collisions, collisions)
            self.assertEqual(coverage_distance(world).tolist(), coverage)
            self.assertAlmostEqual(observed.reward, reward, places=12)

    def test_piled_at_origin(self):
        world = world_at(zeros((NUM_AGENTS, 2)),
                         [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        res = outcome(world)
        self.assertEqual(res.collisions, 3)
        self.assertEqual(res.reward, -6.0)

    def test_all_covered(self):
        landmarks = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        world = world_at(landmarks, landmarks)
        res = outcome(world)
        self.assertEqual(res.reward, 0.0)
        self.assertEqual(res.collisions, 0)

    def test_collisions_counted_per_pair(self):
        landmarks = [[0.0, 0.0]] * NUM_LANDMARKS
        self.assertEqual(count_collisions(world_at(landmarks, landmarks)), 3)

        positions = [[0.0, 0.0], [0.2, 0.0], [1.0, 1.0]]
        world = world_at(positions, landmarks)
        self.assertEqual(count_collisions(world), 1)

        # contact exactly at the sum of radii does not count
        positions = [[0.0, 0.0], [0.3, 0.0], [1.0, 0.0]]
        self.assertEqual(count_collisions(world_at(positions, landmarks)), 0)


class TestActionToForce(CoopnavTesterBase):
    def test_examples(self):
        self.assertArraysEqual(action_to_force([1, 0, 0, 0, 0]), [0, 0])
        self.assertArraysEqual(action_to_force([0, 1, 0, 0, 0]), [5, 0])
        self.assertArraysEqual(action_to_force([0, 0.5, 0.5, 0.5, 0]),
                               [0, 2.5])
        self.assertArraysEqual(action_to_force([0, 0, 1, 0, 1]), [-5, -5])


class TestStep(CoopnavTesterBase):
    def test_oracle(self):
        rng = default_rng(7)
        for _ in range(200):
            world = reset(rng)
            world = WorldState(world.positions,
                               rng.uniform(-1, 1, (NUM_AGENTS, 2)),
                               world.landmarks)
            actions = rng.uniform(0, 1, (NUM_AGENTS, ACTION_DIM))

            new_world, _ = step(world, actions)
            positions, velocities = oracle_step(world.positions.tolist(),
                                                world.velocities.tolist(),
                                                actions.tolist())

            self.assertArraysAlmostEqual(new_world.positions, positions,
                                         rtol=1e-12, atol=1e-15)
            self.assertArraysAlmostEqual(new_world.velocities, velocities,
                                         rtol=1e-12, atol=1e-15)
            self.assertEqual(new_world.timestep, 1)

    def test_noop_action_is_ignored(self):
        world = reset(default_rng(3))
        actions = zeros((NUM_AGENTS, ACTION_DIM))
        actions[:, 0] = 1.0

        new_world, _ = step(world, actions)
        self.assertArraysEqual(new_world.positions, world.positions)

    def test_input_unchanged(self):
        world = reset(default_rng(3))
        before = world.positions.copy()
        step(world, default_rng(4).uniform(0, 1, (NUM_AGENTS, ACTION_DIM)))
        self.assertArraysEqual(world.positions, before)
        self.assertEqual(world.timestep, 0)

    def test_horizon(self):
        world = reset(default_rng(0))
        actions = zeros((NUM_AGENTS, ACTION_DIM))
        for _ in range(HORIZON):
            world, _ = step(world, actions)

        self.assertTrue(world.finished)
        with self.assertRaises(EpisodeFinishedError):
            step(world, actions)

    def test_bad_actions(self):
        world = reset(default_rng(0))
        with self.assertRaises(DimensionError):
            step(world, zeros((NUM_AGENTS, ACTION_DIM - 1)))

    def test_permuted(self):
        world = reset(default_rng(0))
        permuted = world.permuted([2, 0, 1])
        self.assertArraysEqual(permuted.positions[0], world.positions[2])
        self.assertArraysEqual(permuted.landmarks, world.landmarks)
        self.assertEqual(outcome(permuted).reward, outcome(world).reward)


class TestRunEpisode(CoopnavTesterBase):
    def test_hook_follows_step(self):
        acted = []
        seen = []

        def policy(observation):
            acted.append(observation)
            return zeros(ACTION_DIM)

        def on_step(timestep, observations, actions, result):
            seen.append((timestep, len(acted), result.reward))
            self.assertArraysEqual(observations, acted[-NUM_AGENTS:])

        start = reset(default_rng(4))
        final, total = run_episode(start, [policy] * NUM_AGENTS,
                                   on_step=on_step)

        self.assertEqual([timestep for timestep, _, _ in seen],
                         list(range(HORIZON)))
        # every agent acted for a timestep before its hook call
        self.assertEqual([count for _, count, _ in seen],
                         [NUM_AGENTS * (timestep + 1)
                          for timestep in range(HORIZON)])
        self.assertAlmostEqual(seen[-1][2], outcome(final).reward)
        self.assertAlmostEqual(sum(reward for _, _, reward in seen), total)
        self.assertEqual(final.timestep, HORIZON)


if __name__ == "__main__":
    unittest.main()
