#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
test_maddpg: schemes, centralized critics, updates and the training loop
"""

from collections import Counter
import unittest

from numpy import (arange, array, bincount, concatenate, full, isfinite, ones,
                   zeros)
from numpy.random import default_rng

from coopnav._maddpg import (ACTOR_SPEC, CRITIC_INPUT_DIM, ENSEMBLE,
                             IDENTITY_SLOTS, SELF_ACTION, SHARED, SHUFFLE,
                             VANILLA, Scheme, TrainConfig, TrainedAgents, act,
                             assign_slots, critic_input, critic_target,
                             select_ensemble_members, update_member,
                             update_step)
from coopnav._mlp import ParamSet, forward
from coopnav._replay import ReplayBuffer, ReplayPool, Transition
from coopnav._train import (load_agents, read_checkpoint_metadata,
                            save_agents, train, write_learning_curve)
from coopnav._util import (ConfigError, InsufficientReplayError, SchemeError,
                           read_table)
from coopnav._world import ACTION_DIM, NUM_AGENTS, OBSERVATION_DIM

from test_coopnav import CoopnavTesterBase, tiny_config


def random_transition(rng, terminal=False, members=(0, 0, 0)):
    return Transition(rng.normal(0, 1, (NUM_AGENTS, OBSERVATION_DIM)),
                      rng.uniform(0, 1, (NUM_AGENTS, ACTION_DIM)),
                      ones(NUM_AGENTS) * rng.normal(),
                      rng.normal(0, 1, (NUM_AGENTS, OBSERVATION_DIM)),
                      terminal, members)


def filled_buffer(rng, size=32):
    buffer = ReplayBuffer(100)
    for _ in range(size):
        buffer.add(random_transition(rng))

    return buffer


class TestScheme(CoopnavTesterBase):
    def test_variants(self):
        self.assertEqual(Scheme().variant, VANILLA)
        self.assertEqual(Scheme(SHARED).num_members, 1)
        self.assertEqual(Scheme(ENSEMBLE, 4).num_members, 4)
        self.assertEqual(str(Scheme(SHUFFLE)), SHUFFLE)

        with self.assertRaises(SchemeError):
            Scheme("random")
        with self.assertRaises(SchemeError):
            Scheme(ENSEMBLE, 1)

    def test_config(self):
        config = TrainConfig()
        self.assertEqual(config.warmup, config.batch_size * 25)
        self.assertEqual(TrainConfig(scheme="shuffle").scheme, Scheme(SHUFFLE))

        with self.assertRaises(ConfigError):
            TrainConfig(gamma=1.0)
        with self.assertRaises(ConfigError):
            TrainConfig(tau=0.0)
        with self.assertRaises(ConfigError):
            TrainConfig(horizon=30)
        with self.assertRaises(ConfigError):
            TrainConfig(learning_rate=0.1)


class TestSlots(CoopnavTesterBase):
    def test_vanilla_identity(self):
        rng = default_rng(0)
        for episode in range(10):
            self.assertEqual(assign_slots(Scheme(), episode, rng),
                             IDENTITY_SLOTS)

    def test_shuffle_covers_bodies(self):
        rng = default_rng(0)
        seen = set()
        for episode in range(200):
            slots = assign_slots(Scheme(SHUFFLE), episode, rng)
            self.assertEqual(sorted(slots), [0, 1, 2])
            seen.add(slots)

        # all six permutations turn up
        self.assertEqual(len(seen), 6)

    def test_ensemble_members(self):
        rng = default_rng(0)
        scheme = Scheme(ENSEMBLE, 3)
        drawn = set()
        for episode in range(100):
            members = select_ensemble_members(scheme, episode, rng)
            self.assertEqual(len(members), NUM_AGENTS)
            drawn.update(members)
        self.assertEqual(drawn, set([0, 1, 2]))

        with self.assertRaises(SchemeError):
            select_ensemble_members(Scheme(), 0, rng)

    def test_shuffle_uniform(self):
        rng = default_rng(1)
        counts = Counter(assign_slots(Scheme(SHUFFLE), episode, rng)
                         for episode in range(6000))

        self.assertEqual(len(counts), 6)
        for frequency in counts.values():
            self.assertLess(abs(frequency / 6000 - 1 / 6), 0.02)

    def test_ensemble_members_uniform(self):
        rng = default_rng(2)
        scheme = Scheme(ENSEMBLE, 3)
        draws = array([select_ensemble_members(scheme, episode, rng)
                       for episode in range(6000)])

        for slot in range(NUM_AGENTS):
            frequencies = bincount(draws[:, slot], minlength=3) / 6000
            for frequency in frequencies:
                self.assertLess(abs(frequency - 1 / 3), 0.02)


class TestAgents(CoopnavTesterBase):
    def test_shared_aliasing(self):
        agents = TrainedAgents.initialize(Scheme(SHARED), default_rng(0))
        self.assertTrue(agents.member(0) is agents.member(2))
        self.assertEqual(len(list(agents.distinct_members())), 1)

    def test_vanilla_distinct(self):
        agents = TrainedAgents.initialize(Scheme(), default_rng(0))
        self.assertEqual(len(list(agents.distinct_members())), 3)

        agents = TrainedAgents.initialize(Scheme(ENSEMBLE, 2),
                                          default_rng(0))
        self.assertEqual(len(list(agents.distinct_members())), 6)

    def test_act(self):
        agents = TrainedAgents.initialize(Scheme(), default_rng(0))
        observation = default_rng(1).normal(0, 1, OBSERVATION_DIM)

        clean = act(agents.actor(0), observation)
        self.assertArraysAlmostEqual(clean, forward(agents.actor(0),
                                                    observation).output)

        noisy = act(agents.actor(0), observation, 5.0, default_rng(2))
        self.assertTrue(((noisy >= 0) & (noisy <= 1)).all())

    def test_exploration_noise(self):
        actor = ParamSet.initialize(ACTOR_SPEC, default_rng(0))
        # output layer zeroed: every component sits at 0.5, far from a clamp
        actor.arrays[4][:] = 0.0
        actor.arrays[5][:] = 0.0
        observation = default_rng(1).normal(0, 1, OBSERVATION_DIM)

        rng = default_rng(2)
        actions = array([act(actor, observation, 0.1, rng)
                         for _ in range(10000)])

        self.assertArraysEqual(act(actor, observation), full(ACTION_DIM, 0.5))
        for deviation in actions.std(axis=0):
            self.assertLess(abs(deviation - 0.1), 0.02)
        for mean in actions.mean(axis=0):
            self.assertLess(abs(mean - 0.5), 0.01)


class TestCritic(CoopnavTesterBase):
    def test_input_order(self):
        observations = arange(NUM_AGENTS * OBSERVATION_DIM, dtype=float)
        observations = observations.reshape(1, NUM_AGENTS, OBSERVATION_DIM)
        actions = -arange(NUM_AGENTS * ACTION_DIM, dtype=float)
        actions = actions.reshape(1, NUM_AGENTS, ACTION_DIM)

        res = critic_input(observations, actions, 1)
        self.assertEqual(res.shape, (1, CRITIC_INPUT_DIM))

        expected = concatenate([observations[0, 1], observations[0, 0],
                                observations[0, 2], actions[0, 1],
                                actions[0, 0], actions[0, 2]])
        self.assertArraysEqual(res[0], expected)
        self.assertArraysEqual(res[0, SELF_ACTION], actions[0, 1])

    def test_target(self):
        rng = default_rng(4)
        agents = TrainedAgents.initialize(Scheme(), rng)
        actors = [agents.actor(slot) for slot in range(NUM_AGENTS)]
        critic = agents.critic(1)
        transition = random_transition(rng)

        next_actions = [forward(actor, observation, target=True).output
                        for actor, observation
                        in zip(actors, transition.next_observations)]
        inputs = critic_input(transition.next_observations[None],
                              ones((1, 1, 1)) * next_actions, 1)
        next_value = forward(critic, inputs, target=True).output[0, 0]

        self.assertAlmostEqual(critic_target(transition, actors, critic, 0.9,
                                             slot=1),
                               transition.rewards[1] + 0.9 * next_value)

        terminal = transition._replace(terminal=True)
        self.assertAlmostEqual(critic_target(terminal, actors, critic, 0.9,
                                             slot=1),
                               transition.rewards[1])


class TestUpdate(CoopnavTesterBase):
    def test_insufficient_replay(self):
        rng = default_rng(0)
        config = tiny_config()
        agents = TrainedAgents.initialize(config.scheme, rng, config)

        with self.assertRaises(InsufficientReplayError):
            update_step(agents, filled_buffer(rng, 4), config, rng)

    def test_zero_tau_freezes_targets(self):
        rng = default_rng(1)
        config = tiny_config()._replace(tau=0.0)
        agents = TrainedAgents.initialize(config.scheme, rng, config)
        before = [array.copy() for array in agents.actor(0).target]
        live_before = [array.copy() for array in agents.actor(0).arrays]

        losses = update_step(agents, filled_buffer(rng), config, rng)

        self.assertEqual(sorted(losses), [(0, 0), (1, 0), (2, 0)])
        for observed, expected in zip(agents.actor(0).target, before):
            self.assertArraysEqual(observed, expected)
        self.assertTrue(any((live != old).any() for live, old
                            in zip(agents.actor(0).arrays, live_before)))

    def test_shared_soft_update_once(self):
        rng = default_rng(2)
        config = tiny_config(scheme=Scheme(SHARED))._replace(tau=0.1)
        agents = TrainedAgents.initialize(config.scheme, rng, config)
        actor = agents.actor(0)
        old_target = [array.copy() for array in actor.target]

        update_step(agents, filled_buffer(rng), config, rng)

        for target, old, live in zip(actor.target, old_target, actor.arrays):
            self.assertArraysAlmostEqual(target, 0.9 * old + 0.1 * live,
                                         rtol=1e-10, atol=1e-12)
        self.assertEqual(actor.adam_step, NUM_AGENTS)

    def test_ensemble_updates_ready_members(self):
        rng = default_rng(3)
        config = tiny_config(scheme=Scheme(ENSEMBLE, 2))
        agents = TrainedAgents.initialize(config.scheme, rng, config)
        pool = ReplayPool(100, ensemble_size=2)
        for _ in range(10):
            pool.add(random_transition(rng, members=(1, 1, 0)))

        losses = update_step(agents, pool, config, rng)
        self.assertEqual(sorted(losses), [(0, 1), (1, 1), (2, 0)])
        self.assertEqual(agents.actor(0, 0).adam_step, 0)

    def test_critic_fits_fixed_batch(self):
        rng = default_rng(5)
        config = tiny_config(critic_lr=0.01)._replace(tau=0.0)
        agents = TrainedAgents.initialize(config.scheme, rng, config)
        batch = filled_buffer(rng, 16).gather(arange(16))

        first, _ = update_member(agents, 0, 0, batch, config)
        for _ in range(100):
            last, _ = update_member(agents, 0, 0, batch, config)

        self.assertLess(last, first)


class TestTrain(CoopnavTesterBase):
    def test_smoke(self):
        config = tiny_config()
        result = train(config)

        self.assertEqual(len(result.episode_rewards), config.episodes)
        self.assertTrue(all(isfinite(reward) and reward < 0
                            for reward in result.episode_rewards))
        self.assertGreater(result.agents.actor(0).adam_step, 0)

    def test_deterministic(self):
        config = tiny_config(episodes=3)
        first = train(config)
        second = train(config)

        self.assertEqual(first.episode_rewards, second.episode_rewards)
        for observed, expected in zip(first.agents.actor(2).arrays,
                                      second.agents.actor(2).arrays):
            self.assertArraysEqual(observed, expected)

        other = train(config.replace(seed=1))
        self.assertNotEqual(first.episode_rewards, other.episode_rewards)

    def test_schemes_run(self):
        for scheme in [Scheme(SHUFFLE), Scheme(SHUFFLE, per_step=True),
                       Scheme(SHARED), Scheme(ENSEMBLE, 2)]:
            result = train(tiny_config(episodes=2, scheme=scheme))
            self.assertEqual(len(result.episode_rewards), 2)

    def test_checkpoints(self):
        config = tiny_config(episodes=4, scheme=Scheme(SHARED))
        checkpoint_dir = self.workdir / "checkpoints"
        result = train(config, checkpoint_dir,
                       provenance=dict(manifest_hash="0123456789ab", seed=0,
                                       scheme=SHARED))

        self.assertEqual(sorted(item.name for item in checkpoint_dir.files()),
                         ["metadata.yaml", "slot0-member0-actor.h5",
                          "slot0-member0-critic.h5"])

        metadata = read_checkpoint_metadata(checkpoint_dir)
        self.assertEqual(metadata["episodes_completed"], 4)
        self.assertEqual(metadata["manifest_hash"], "0123456789ab")
        self.assertEqual(metadata["aliases"]["slot2-member0"],
                         "slot0-member0")

        loaded = load_agents(checkpoint_dir)
        self.assertTrue(loaded.member(0) is loaded.member(1))
        self.assertEqual(loaded.config, config)
        observation = default_rng(0).normal(0, 1, OBSERVATION_DIM)
        self.assertArraysEqual(act(loaded.actor(1), observation),
                               act(result.agents.actor(1), observation))

    def test_save_ensemble(self):
        rng = default_rng(0)
        agents = TrainedAgents.initialize(Scheme(ENSEMBLE, 2), rng)
        save_agents(self.workdir, agents, 0)

        loaded = load_agents(self.workdir)
        self.assertEqual(loaded.scheme, Scheme(ENSEMBLE, 2))
        self.assertTrue(loaded.config is None)
        for slot in range(NUM_AGENTS):
            for index in range(2):
                for observed, expected in zip(
                        loaded.actor(slot, index).arrays,
                        agents.actor(slot, index).arrays):
                    self.assertArraysEqual(observed, expected)

    def test_learning_curve(self):
        filename = write_learning_curve(self.workdir / "curve.tsv",
                                        [-10.0, -8.5, -7.25],
                                        dict(seed=0, scheme=VANILLA))
        provenance, rows = read_table(filename)

        self.assertEqual(provenance["scheme"], VANILLA)
        self.assertEqual([int(row["episode"]) for row in rows], [0, 1, 2])
        self.assertEqual([float(row["episode_reward"]) for row in rows],
                         [-10.0, -8.5, -7.25])


class TestActorSpec(CoopnavTesterBase):
    def test_dimensions(self):
        self.assertEqual(ACTOR_SPEC.input_dim, OBSERVATION_DIM)
        self.assertEqual(ACTOR_SPEC.output_dim, ACTION_DIM)
        self.assertEqual(CRITIC_INPUT_DIM, 57)
        self.assertEqual(zeros(CRITIC_INPUT_DIM)[SELF_ACTION].shape,
                         (ACTION_DIM,))


if __name__ == "__main__":
    unittest.main()
