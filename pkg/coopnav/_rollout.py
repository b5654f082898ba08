"""
_rollout: drive one episode of the world with a team of policies

A team is listed in policy-slot order; slots_to_bodies[k] names the body
that slot k controls.
"""

from numpy import asarray, clip, empty, float64

from ._maddpg import IDENTITY_SLOTS, act
from ._mlp import forward
from ._world import ACTION_DIM, HORIZON, NUM_AGENTS, observe, reset, step


class ActorPolicy(object):
    """Callable wrapper around an actor ParamSet."""
    def __init__(self, actor, noise_std=0.0, rng=None):
        self.actor = actor
        self.noise_std = noise_std
        self.rng = rng

    def __repr__(self):
        return "ActorPolicy(%r, noise_std=%r)" % (self.actor, self.noise_std)

    def __call__(self, observation):
        return act(self.actor, observation, self.noise_std, self.rng)

    def trace(self, observation):
        """Noise-free action together with its ForwardTrace."""
        trace = forward(self.actor, observation)
        return clip(trace.output, 0.0, 1.0), trace


def slot_observations(world, slots_to_bodies=IDENTITY_SLOTS):
    return asarray([observe(world, body) for body in slots_to_bodies])


def body_actions(slot_actions, slots_to_bodies=IDENTITY_SLOTS):
    """Reorder per-slot actions into per-body actions."""
    res = empty((NUM_AGENTS, ACTION_DIM), dtype=float64)
    for slot, body in enumerate(slots_to_bodies):
        res[body] = slot_actions[slot]

    return res


def run_episode(world, team, slots_to_bodies=IDENTITY_SLOTS, on_step=None):
    """Play world to the horizon; return (final world, episode return).

    on_step(timestep, observations, actions, outcome) is called after each
    world step, with the timestep the step started from, the slot-ordered
    observations and actions that drove it and its outcome.
    """
    total = 0.0
    while world.timestep < HORIZON:
        observations = slot_observations(world, slots_to_bodies)
        actions = asarray([policy(observation) for policy, observation
                           in zip(team, observations)])

        timestep = world.timestep
        world, outcome = step(world, body_actions(actions, slots_to_bodies))
        total += outcome.reward

        if on_step is not None:
            on_step(timestep, observations, actions, outcome)

    return world, total


def play(rng, team, slots_to_bodies=IDENTITY_SLOTS, on_step=None):
    """Reset a fresh world from rng and run it."""
    return run_episode(reset(rng), team, slots_to_bodies, on_step)
