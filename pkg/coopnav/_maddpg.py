"""
_maddpg: centralized-critic, decentralized-actor updates and the four
training schemes (vanilla, shuffle, shared, ensemble)
"""

from collections import namedtuple

from numpy import (asarray, clip, concatenate, empty, float64, full, mean,
                   unique, where)

from ._mlp import (LOGISTIC, MLPSpec, ParamSet, adam_step, backward,
                   clip_by_global_norm, forward)
from ._util import ConfigError, InsufficientReplayError, SchemeError
from ._world import ACTION_DIM, HORIZON, NUM_AGENTS, OBSERVATION_DIM

VANILLA = "vanilla"
SHUFFLE = "shuffle"
SHARED = "shared"
ENSEMBLE = "ensemble"
SCHEME_VARIANTS = (VANILLA, SHUFFLE, SHARED, ENSEMBLE)

DEFAULT_ENSEMBLE_SIZE = 3

IDENTITY_SLOTS = tuple(range(NUM_AGENTS))

# critics see their own slot first, then the other slots in ascending order
SLOT_ORDERS = tuple((slot,) + tuple(other for other in range(NUM_AGENTS)
                                    if other != slot)
                    for slot in range(NUM_AGENTS))

CRITIC_INPUT_DIM = NUM_AGENTS * (OBSERVATION_DIM + ACTION_DIM)
SELF_ACTION = slice(NUM_AGENTS * OBSERVATION_DIM,
                    NUM_AGENTS * OBSERVATION_DIM + ACTION_DIM)

ACTOR_SPEC = MLPSpec(OBSERVATION_DIM, output_dim=ACTION_DIM,
                     output_activation=LOGISTIC)
CRITIC_SPEC = MLPSpec(CRITIC_INPUT_DIM, output_dim=1)


class Scheme(namedtuple("Scheme", ["variant", "ensemble_size", "per_step"])):
    """Training protocol variant.

    ensemble_size only matters for the ensemble variant; per_step only for
    shuffle, where it redraws the slot permutation every timestep instead of
    every episode.
    """
    __slots__ = ()

    def __new__(cls, variant=VANILLA, ensemble_size=DEFAULT_ENSEMBLE_SIZE,
                per_step=False):
        if variant not in SCHEME_VARIANTS:
            raise SchemeError("unknown scheme: %r (choose from %s)"
                              % (variant, ", ".join(SCHEME_VARIANTS)))
        if variant == ENSEMBLE and int(ensemble_size) < 2:
            raise SchemeError("an ensemble needs at least 2 members per slot,"
                              " got %r" % ensemble_size)

        return super(Scheme, cls).__new__(cls, variant, int(ensemble_size),
                                          bool(per_step))

    def __str__(self):
        return self.variant

    @property
    def num_members(self):
        if self.variant == ENSEMBLE:
            return self.ensemble_size

        return 1

    def as_dict(self):
        return dict(variant=self.variant, ensemble_size=self.ensemble_size,
                    per_step=self.per_step)


TRAIN_CONFIG_DEFAULTS = [("episodes", 100000),
                         ("horizon", HORIZON),
                         ("gamma", 0.95),
                         ("tau", 0.01),
                         ("actor_lr", 0.01),
                         ("critic_lr", 0.01),
                         ("batch_size", 1024),
                         ("buffer_capacity", 1000000),
                         ("update_interval_steps", 100),
                         ("exploration_noise_std", 0.1),
                         ("seed", 0),
                         ("scheme", Scheme()),
                         ("grad_clip", 0.5),
                         ("warmup_transitions", None),
                         ("checkpoint_interval", 10000),
                         ("log_interval", 1000)]


class TrainConfig(namedtuple("TrainConfig",
                             [name for name, _ in TRAIN_CONFIG_DEFAULTS])):
    """Hyperparameters of one training run, defaulting to standard MADDPG."""
    __slots__ = ()

    def __new__(cls, **kwargs):
        unknown = set(kwargs) - set(cls._fields)
        if unknown:
            raise ConfigError("unknown training settings: %s"
                              % ", ".join(sorted(unknown)))

        values = dict(TRAIN_CONFIG_DEFAULTS)
        values.update(kwargs)
        if isinstance(values["scheme"], str):
            values["scheme"] = Scheme(values["scheme"])
        elif isinstance(values["scheme"], dict):
            values["scheme"] = Scheme(**values["scheme"])

        res = super(TrainConfig, cls).__new__(cls, **values)
        res.validate()

        return res

    def validate(self):
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must be in (0, 1): %r" % self.gamma)
        if not 0 < self.tau <= 1:
            raise ConfigError("tau must be in (0, 1]: %r" % self.tau)
        if self.horizon != HORIZON:
            raise ConfigError("episodes always last %d steps" % HORIZON)
        if self.episodes < 1 or self.batch_size < 1:
            raise ConfigError("episodes and batch_size must be positive")
        if self.buffer_capacity < self.batch_size:
            raise ConfigError("buffer_capacity is smaller than batch_size")

    @property
    def warmup(self):
        """Transitions a buffer must hold before updates start."""
        if self.warmup_transitions is None:
            return self.batch_size * self.horizon

        return max(self.warmup_transitions, self.batch_size)

    def replace(self, **kwargs):
        values = self._asdict()
        values.update(kwargs)
        return TrainConfig(**values)

    def as_dict(self):
        res = self._asdict()
        res["scheme"] = self.scheme.as_dict()
        return res


class Member(object):
    """One trainable policy: an actor and its centralized critic."""
    __slots__ = ["actor", "critic"]

    def __init__(self, actor, critic):
        self.actor = actor
        self.critic = critic

    def __repr__(self):
        return "<Member actor=%r critic=%r>" % (self.actor, self.critic)

    @classmethod
    def initialize(cls, rng):
        return cls(ParamSet.initialize(ACTOR_SPEC, rng),
                   ParamSet.initialize(CRITIC_SPEC, rng))


class TrainedAgents(object):
    """Per-slot policies of a run.

    slots[k] lists the members available to slot k: one member normally,
    K under an ensemble. Under the shared scheme every slot holds the very
    same Member object, so an update through one slot is seen by all.
    """
    def __init__(self, scheme, slots, config=None):
        if len(slots) != NUM_AGENTS:
            raise ValueError("need %d slots, got %d" % (NUM_AGENTS,
                                                        len(slots)))
        if any(len(members) != scheme.num_members for members in slots):
            raise SchemeError("scheme %s needs %d members per slot"
                              % (scheme, scheme.num_members))

        self.scheme = scheme
        self.slots = [list(members) for members in slots]
        self.config = config

    def __repr__(self):
        return "<TrainedAgents scheme=%s members=%d>" % (self.scheme,
                                                         self.num_members)

    @classmethod
    def initialize(cls, scheme, rng, config=None):
        if scheme.variant == SHARED:
            member = Member.initialize(rng)
            slots = [[member] for _ in range(NUM_AGENTS)]
        else:
            slots = [[Member.initialize(rng)
                      for _ in range(scheme.num_members)]
                     for _ in range(NUM_AGENTS)]

        return cls(scheme, slots, config)

    @property
    def num_members(self):
        return self.scheme.num_members

    def member(self, slot, index=0):
        return self.slots[slot][index]

    def actor(self, slot, index=0):
        return self.slots[slot][index].actor

    def critic(self, slot, index=0):
        return self.slots[slot][index].critic

    def distinct_members(self):
        """Yield (slot, index, member), each Member object once."""
        seen = set()
        for slot, members in enumerate(self.slots):
            for index, member in enumerate(members):
                if id(member) not in seen:
                    seen.add(id(member))
                    yield slot, index, member

    def actors_for(self, members=(0,) * NUM_AGENTS):
        """The actor of the chosen member in each slot, in slot order."""
        return [self.actor(slot, index) for slot, index in enumerate(members)]


def act(actor, observation, noise_std=0.0, rng=None):
    """Actor output plus Gaussian exploration noise, clamped to [0, 1]."""
    action = forward(actor, observation).output
    if noise_std > 0:
        action = action + rng.normal(0.0, noise_std, action.shape)

    return clip(action, 0.0, 1.0)


def assign_slots(scheme, episode_index, rng):
    """Map policy slot k to the world body it controls for an episode.

    Only the shuffle scheme permutes, and only it consumes rng.
    """
    if scheme.variant == SHUFFLE:
        return tuple(int(body) for body in rng.permutation(NUM_AGENTS))

    return IDENTITY_SLOTS


def select_ensemble_members(scheme, episode_index, rng):
    """Pick one ensemble member per slot, uniformly and independently."""
    if scheme.variant != ENSEMBLE:
        raise SchemeError("member selection needs the ensemble scheme, not %s"
                          % scheme)

    return tuple(int(member) for member in
                 rng.integers(0, scheme.ensemble_size, NUM_AGENTS))


def critic_input(observations, actions, slot):
    """Joint critic input for slot: observations then actions, self first."""
    observations = asarray(observations, dtype=float64)
    actions = asarray(actions, dtype=float64)
    order = list(SLOT_ORDERS[slot])
    num_rows = observations.shape[0]

    return concatenate([observations[:, order].reshape(num_rows, -1),
                        actions[:, order].reshape(num_rows, -1)], axis=1)


def critic_targets(batch, slot, next_actions, critic, gamma):
    """Temporal-difference targets for a batch, using critic's target copy.

    Terminal rows keep only the reward.
    """
    inputs = critic_input(batch.next_observations, next_actions, slot)
    next_values = forward(critic, inputs, target=True).output[:, 0]
    rewards = batch.rewards[:, slot]

    return where(batch.terminal.astype(bool), rewards,
                 rewards + gamma * next_values)


def critic_target(transition, target_actors, target_critic, gamma, slot=0):
    """Target y = r + gamma * Q'(o', a'_1..a'_3) for one transition.

    target_actors are the ParamSets of the three slots; their target
    copies choose the next actions.
    """
    next_observations = asarray(transition.next_observations, dtype=float64)
    next_actions = [forward(actor, next_observations[index],
                            target=True).output
                    for index, actor in enumerate(target_actors)]

    batch = _single_batch(transition)
    res = critic_targets(batch, slot, asarray(next_actions)[None],
                         target_critic, gamma)

    return float(res[0])


_SingleBatch = namedtuple("_SingleBatch", ["next_observations", "rewards",
                                           "terminal"])


def _single_batch(transition):
    return _SingleBatch(asarray(transition.next_observations,
                                dtype=float64)[None],
                        asarray(transition.rewards, dtype=float64)[None],
                        asarray([transition.terminal]))


def target_next_actions(agents, batch):
    """Next actions from the target actors that produced each transition."""
    res = empty((len(batch), NUM_AGENTS, ACTION_DIM))
    for slot in range(NUM_AGENTS):
        next_observations = batch.next_observations[:, slot]
        if agents.num_members == 1:
            res[:, slot] = forward(agents.actor(slot), next_observations,
                                   target=True).output
            continue

        members = batch.members[:, slot]
        for index in unique(members):
            rows = members == index
            res[rows, slot] = forward(agents.actor(slot, index),
                                      next_observations[rows],
                                      target=True).output

    return res


def update_member(agents, slot, index, batch, config):
    """One critic regression step and one actor ascent step.

    Returns (critic loss, actor loss), both before the step.
    """
    member = agents.member(slot, index)
    num_rows = len(batch)

    # critic: mean squared error toward the TD target
    targets = critic_targets(batch, slot, target_next_actions(agents, batch),
                             member.critic, config.gamma)
    critic_trace = forward(member.critic,
                           critic_input(batch.observations, batch.actions,
                                        slot))
    errors = critic_trace.output[:, 0] - targets
    critic_loss = float(mean(errors ** 2))

    grads, _ = backward(critic_trace, member.critic,
                        (2.0 * errors / num_rows)[:, None])
    adam_step(member.critic, clip_by_global_norm(grads, config.grad_clip),
              config.critic_lr)

    # actor: maximize Q with the other slots' actions taken from the batch
    actor_trace = forward(member.actor, batch.observations[:, slot])
    actions = batch.actions.copy()
    actions[:, slot] = actor_trace.output

    value_trace = forward(member.critic,
                          critic_input(batch.observations, actions, slot))
    actor_loss = -float(mean(value_trace.output))

    _, input_grad = backward(value_trace, member.critic,
                             full((num_rows, 1), -1.0 / num_rows))
    grads, _ = backward(actor_trace, member.actor, input_grad[:, SELF_ACTION])
    adam_step(member.actor, clip_by_global_norm(grads, config.grad_clip),
              config.actor_lr)

    return critic_loss, actor_loss


def update_step(agents, pool, config, rng):
    """Update every member whose replay buffer is ready, then track targets.

    pool is a ReplayPool (or a single ReplayBuffer shared by all slots).
    Returns {(slot, member index): (critic loss, actor loss)}.
    """
    buffer_for = getattr(pool, "buffer_for", lambda slot, index: pool)

    ready = [(slot, index) for slot in range(NUM_AGENTS)
             for index in range(agents.num_members)
             if len(buffer_for(slot, index)) >= config.batch_size]
    if not ready or (agents.num_members == 1 and
                     len(ready) < NUM_AGENTS):
        raise InsufficientReplayError("replay holds fewer than %d"
                                      " transitions" % config.batch_size)

    res = {}
    updated = []
    for slot, index in ready:
        batch = buffer_for(slot, index).sample(config.batch_size, rng)
        res[slot, index] = update_member(agents, slot, index, batch, config)

        member = agents.member(slot, index)
        if not any(member is other for other in updated):
            updated.append(member)

    for member in updated:
        member.actor.update_target(config.tau)
        member.critic.update_target(config.tau)

    return res
