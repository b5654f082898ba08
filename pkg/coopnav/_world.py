#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_world: two-dimensional point-mass world for the cooperative navigation
task: three agents, three landmarks, a shared coverage reward and
egocentric observations
"""

from collections import namedtuple
from itertools import combinations

from numpy import (array, asarray, float64, isfinite, sqrt, zeros)

from ._util import DimensionError, EpisodeFinishedError

NUM_AGENTS = 3
NUM_LANDMARKS = 3
HORIZON = 25

OBSERVATION_DIM = 14
ACTION_DIM = 5

# unstated by the task description; these are the particle-world defaults
DT = 0.1
DAMPING = 0.25
MASS = 1.0
SENSITIVITY = 5.0
AGENT_RADIUS = 0.15
LANDMARK_RADIUS = 0.05
SPAWN_RANGE = 1.0

# observation layout
OBS_VELOCITY = slice(0, 2)
OBS_POSITION = slice(2, 4)
OBS_LANDMARKS = slice(4, 10)
OBS_OTHERS = slice(10, 14)

# action layout: no-op, then +x, -x, +y, -y
ACTION_NOOP = 0
ACTION_POS_X = 1
ACTION_NEG_X = 2
ACTION_POS_Y = 3
ACTION_NEG_Y = 4

AGENT_PAIRS = tuple(combinations(range(NUM_AGENTS), 2))

Body = namedtuple("Body", ["position", "velocity", "radius", "mass"])

StepOutcome = namedtuple("StepOutcome", ["reward", "collisions", "distances"])


class WorldState(object):
    """Positions and velocities of the agents plus landmark positions.

    Treated as a value: step() never modifies its argument.

    positions, velocities: NUM_AGENTS x 2 float64 arrays
    landmarks: NUM_LANDMARKS x 2 float64 array
    """
    __slots__ = ["positions", "velocities", "landmarks", "timestep"]

    def __init__(self, positions, velocities, landmarks, timestep=0):
        self.positions = array(positions, dtype=float64)
        self.velocities = array(velocities, dtype=float64)
        self.landmarks = array(landmarks, dtype=float64)
        self.timestep = int(timestep)

        if (self.positions.shape != (NUM_AGENTS, 2) or
                self.velocities.shape != (NUM_AGENTS, 2) or
                self.landmarks.shape != (NUM_LANDMARKS, 2)):
            raise DimensionError("world needs %d agents and %d landmarks"
                                 % (NUM_AGENTS, NUM_LANDMARKS))

        if not 0 <= self.timestep <= HORIZON:
            raise DimensionError("timestep out of range: %d" % self.timestep)

    def __repr__(self):
        return "<WorldState t=%d>" % self.timestep

    def __eq__(self, other):
        return (isinstance(other, WorldState) and
                self.timestep == other.timestep and
                (self.positions == other.positions).all() and
                (self.velocities == other.velocities).all() and
                (self.landmarks == other.landmarks).all())

    @property
    def agents(self):
        return tuple(Body(self.positions[index], self.velocities[index],
                          AGENT_RADIUS, MASS)
                     for index in range(NUM_AGENTS))

    @property
    def finished(self):
        return self.timestep >= HORIZON

    def permuted(self, body_order):
        """Return a copy with agent bodies reordered by body_order."""
        body_order = list(body_order)
        return WorldState(self.positions[body_order],
                          self.velocities[body_order], self.landmarks,
                          self.timestep)

    def is_finite(self):
        return bool(isfinite(self.positions).all() and
                    isfinite(self.velocities).all())


def reset(rng):
    """Start an episode: uniform positions in [-1, 1]^2, agents at rest.

    Agents are drawn before landmarks, so a given generator state always
    produces the same world.
    """
    positions = rng.uniform(-SPAWN_RANGE, SPAWN_RANGE, (NUM_AGENTS, 2))
    landmarks = rng.uniform(-SPAWN_RANGE, SPAWN_RANGE, (NUM_LANDMARKS, 2))

    return WorldState(positions, zeros((NUM_AGENTS, 2)), landmarks)


def observe(world, agent_index):
    """14-value egocentric observation of one agent.

    Other agents are listed in ascending body index, skipping the observer.
    """
    if not 0 <= agent_index < NUM_AGENTS:
        raise DimensionError("agent index out of range: %r" % agent_index)

    position = world.positions[agent_index]
    others = [index for index in range(NUM_AGENTS) if index != agent_index]

    res = zeros(OBSERVATION_DIM)
    res[OBS_VELOCITY] = world.velocities[agent_index]
    res[OBS_POSITION] = position
    res[OBS_LANDMARKS] = (world.landmarks - position).ravel()
    res[OBS_OTHERS] = (world.positions[others] - position).ravel()

    return res


def observe_all(world, body_order=range(NUM_AGENTS)):
    """Observations for each body in body_order, stacked row-wise."""
    return array([observe(world, index) for index in body_order])


def action_to_force(action, sensitivity=SENSITIVITY):
    action = asarray(action, dtype=float64)
    if action.shape[-1] != ACTION_DIM:
        raise DimensionError("action must have %d components" % ACTION_DIM)

    force_x = action[..., ACTION_POS_X] - action[..., ACTION_NEG_X]
    force_y = action[..., ACTION_POS_Y] - action[..., ACTION_NEG_Y]

    res = zeros(action.shape[:-1] + (2,))
    res[..., 0] = force_x
    res[..., 1] = force_y

    return sensitivity * res


def distance_matrix(world):
    """Distance from landmark i (rows) to agent j (columns)."""
    deltas = world.landmarks[:, None, :] - world.positions[None, :, :]
    return sqrt((deltas ** 2).sum(-1))


def coverage_distance(world):
    """For each landmark, the distance to its closest agent."""
    return distance_matrix(world).min(1)


def count_collisions(world, radius=AGENT_RADIUS):
    """Number of unordered agent pairs whose bodies overlap."""
    res = 0
    for first, second in AGENT_PAIRS:
        delta = world.positions[first] - world.positions[second]
        if sqrt((delta ** 2).sum()) < 2 * radius:
            res += 1

    return res


def outcome(world):
    distances = distance_matrix(world)
    collisions = count_collisions(world)
    reward = -float(distances.min(1).sum()) - collisions

    return StepOutcome(reward, collisions, distances)


def step(world, actions):
    """Advance one timestep; actions are indexed by body.

    Returns the new WorldState and the StepOutcome evaluated on it. The
    reward is shared by all agents.
    """
    if world.finished:
        raise EpisodeFinishedError("episode already ran %d steps" % HORIZON)

    actions = asarray(actions, dtype=float64)
    if actions.shape != (NUM_AGENTS, ACTION_DIM):
        raise DimensionError("need one %d-value action per agent"
                             % ACTION_DIM)

    forces = action_to_force(actions)
    velocities = world.velocities * (1 - DAMPING) + (forces / MASS) * DT
    positions = world.positions + velocities * DT

    res = WorldState(positions, velocities, world.landmarks,
                     world.timestep + 1)

    return res, outcome(res)
