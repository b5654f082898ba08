#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_train: the MADDPG training loop and checkpoint directories
"""

from collections import namedtuple

from numpy import asarray, full, mean
from numpy.random import SeedSequence, default_rng
from path import Path
import yaml

from ._hdf5 import save_params, load_params
from ._maddpg import (ENSEMBLE, Member, Scheme, TrainConfig, TrainedAgents,
                      act, assign_slots, select_ensemble_members,
                      update_step)
from ._replay import ReplayPool, Transition
from ._rollout import body_actions, slot_observations
from ._util import CheckpointError, print_timestamp, progress, write_table
from ._world import NUM_AGENTS, reset, step

CHECKPOINT_FORMAT_VERSION = 1
CHECKPOINT_METADATA = "metadata.yaml"
CHECKPOINT_STEM_FMT = "slot%d-member%d"
ACTOR_SUFFIX = "-actor.h5"
CRITIC_SUFFIX = "-critic.h5"

LEARNING_CURVE_FIELDNAMES = ["episode", "episode_reward"]

STREAM_NAMES = ["init", "world", "noise", "slots", "replay"]
Streams = namedtuple("Streams", STREAM_NAMES)

TrainingResult = namedtuple("TrainingResult", ["agents", "episode_rewards"])


def make_streams(seed):
    """Independent generators for each source of randomness in training."""
    children = SeedSequence(seed).spawn(len(STREAM_NAMES))
    return Streams(*[default_rng(child) for child in children])


def train(config, checkpoint_dir=None, provenance=None, verbose=False):
    """Train a team under config.scheme; return a TrainingResult.

    Updates run every update_interval_steps environment steps once every
    replay buffer holds config.warmup transitions. When checkpoint_dir is
    given, agents are saved every checkpoint_interval episodes and at the
    end.
    """
    scheme = config.scheme
    streams = make_streams(config.seed)

    agents = TrainedAgents.initialize(scheme, streams.init, config)
    ensemble_size = scheme.ensemble_size if scheme.variant == ENSEMBLE \
        else None
    pool = ReplayPool(config.buffer_capacity, ensemble_size)

    if verbose:
        print_timestamp("training %s, seed %d, %d episodes"
                        % (scheme, config.seed, config.episodes))

    episode_rewards = []
    total_steps = 0
    losses = {}
    default_members = (0,) * NUM_AGENTS

    for episode in range(config.episodes):
        slots_to_bodies = assign_slots(scheme, episode, streams.slots)
        if scheme.variant == ENSEMBLE:
            members = select_ensemble_members(scheme, episode, streams.slots)
        else:
            members = default_members
        actors = agents.actors_for(members)

        world = reset(streams.world)
        episode_reward = 0.0

        while not world.finished:
            if scheme.per_step and world.timestep > 0:
                slots_to_bodies = assign_slots(scheme, episode, streams.slots)

            observations = slot_observations(world, slots_to_bodies)
            actions = asarray([act(actor, observation,
                                   config.exploration_noise_std,
                                   streams.noise)
                               for actor, observation
                               in zip(actors, observations)])

            world, outcome = step(world, body_actions(actions,
                                                      slots_to_bodies))
            next_observations = slot_observations(world, slots_to_bodies)

            pool.add(Transition(observations, actions,
                                full(NUM_AGENTS, outcome.reward),
                                next_observations, world.finished, members))

            episode_reward += outcome.reward
            total_steps += 1

            if (total_steps % config.update_interval_steps == 0 and
                    pool.size >= config.warmup):
                losses = update_step(agents, pool, config, streams.replay)

        episode_rewards.append(episode_reward)
        num_episodes = episode + 1

        if verbose and num_episodes % config.log_interval == 0:
            window = episode_rewards[-config.log_interval:]
            msg = "episode %d: mean reward %.3f" % (num_episodes,
                                                    mean(window))
            if losses:
                critic_loss = mean([loss[0] for loss in losses.values()])
                actor_loss = mean([loss[1] for loss in losses.values()])
                msg += ", critic loss %.4f, actor loss %.4f" % (critic_loss,
                                                                actor_loss)
            progress(verbose, msg)

        if (checkpoint_dir is not None and
                num_episodes % config.checkpoint_interval == 0 and
                num_episodes < config.episodes):
            save_agents(checkpoint_dir, agents, num_episodes, provenance)

    if checkpoint_dir is not None:
        save_agents(checkpoint_dir, agents, config.episodes, provenance)

    return TrainingResult(agents, episode_rewards)


def _checkpoint_paths(dirpath, stem):
    return dirpath / (stem + ACTOR_SUFFIX), dirpath / (stem + CRITIC_SUFFIX)


def save_agents(directory, agents, episodes_completed, provenance=None):
    """Write one actor and one critic file per distinct member.

    Slots that share a Member object (shared scheme) are written once and
    listed under aliases in the metadata file.
    """
    provenance = dict(provenance or {})
    dirpath = Path(directory).expand()
    dirpath.makedirs_p()

    stems = {}
    aliases = {}
    for slot, members in enumerate(agents.slots):
        for index, member in enumerate(members):
            stem = CHECKPOINT_STEM_FMT % (slot, index)
            if id(member) in stems:
                aliases[stem] = stems[id(member)]
                continue

            stems[id(member)] = stem
            actor_path, critic_path = _checkpoint_paths(dirpath, stem)
            save_params(actor_path, member.actor, role="actor", slot=slot,
                        member=index, **provenance)
            save_params(critic_path, member.critic, role="critic", slot=slot,
                        member=index, **provenance)

    metadata = dict(format_version=CHECKPOINT_FORMAT_VERSION,
                    scheme=agents.scheme.as_dict(),
                    episodes_completed=int(episodes_completed),
                    aliases=aliases)
    if agents.config is not None:
        metadata["config"] = agents.config.as_dict()
    for key, value in provenance.items():
        metadata.setdefault(key, value)

    (dirpath / CHECKPOINT_METADATA).write_text(
        yaml.safe_dump(metadata, default_flow_style=False))

    return dirpath


def read_checkpoint_metadata(directory):
    filepath = Path(directory).expand() / CHECKPOINT_METADATA
    if not filepath.isfile():
        raise CheckpointError("no checkpoint metadata in %s" % directory)

    return yaml.safe_load(filepath.read_text())


def load_agents(directory):
    """Rebuild TrainedAgents from a save_agents directory."""
    dirpath = Path(directory).expand()
    metadata = read_checkpoint_metadata(dirpath)

    if metadata.get("format_version", 0) > CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError("%s has checkpoint format version %s"
                              % (dirpath, metadata["format_version"]))

    scheme = Scheme(**metadata["scheme"])
    config = None
    if "config" in metadata:
        config = TrainConfig(**metadata["config"])

    aliases = metadata.get("aliases") or {}
    loaded = {}
    slots = []
    for slot in range(NUM_AGENTS):
        members = []
        for index in range(scheme.num_members):
            stem = aliases.get(CHECKPOINT_STEM_FMT % (slot, index),
                               CHECKPOINT_STEM_FMT % (slot, index))
            if stem not in loaded:
                actor_path, critic_path = _checkpoint_paths(dirpath, stem)
                loaded[stem] = Member(load_params(actor_path),
                                      load_params(critic_path))
            members.append(loaded[stem])
        slots.append(members)

    return TrainedAgents(scheme, slots, config)


def write_learning_curve(filename, episode_rewards, provenance=None):
    rows = ((index, float(reward))
            for index, reward in enumerate(episode_rewards))
    return write_table(filename, LEARNING_CURVE_FIELDNAMES, rows, provenance)


def smoke_config(episodes=200, **kwargs):
    """A TrainConfig small enough for pipeline checks."""
    values = dict(episodes=episodes, batch_size=64,
                  buffer_capacity=10000, warmup_transitions=256,
                  update_interval_steps=25, checkpoint_interval=episodes,
                  log_interval=max(episodes // 4, 1))
    values.update(kwargs)
    return TrainConfig(**values)


def _demo(argv=None):
    config = smoke_config()
    result = train(config, verbose=True)
    print(len(result.episode_rewards), mean(result.episode_rewards))


if __name__ == "__main__":
    _demo()
