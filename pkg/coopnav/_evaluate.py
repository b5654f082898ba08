#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_evaluate: behavioural metrics of a trained team: landmark preferences,
all-landmarks-covered success and the Sheldon generalization grid
"""

from collections import namedtuple
from itertools import permutations, product

from numpy import arange, array, asarray, float64, inf, where, zeros
from numpy.random import default_rng

from ._maddpg import ENSEMBLE, TrainedAgents, select_ensemble_members
from ._rollout import ActorPolicy, play
from ._sheldon import SheldonPolicy
from ._util import EmptyResultError, print_timestamp, progress, write_table
from ._world import NUM_AGENTS, NUM_LANDMARKS

DEFAULT_RADIUS = 0.3
DEFAULT_EVAL_EPISODES = 4000

PREFERENCE_FIELDNAMES = ["agent", "landmark", "count", "percentage"]
TRIO_FIELDNAMES = ["episodes", "successes", "success_rate"]
SHELDON_FIELDNAMES = ["slot", "free_landmark", "success_rate"]


class CoverageCriterion(namedtuple("CoverageCriterion", ["radius"])):
    __slots__ = ()

    def __new__(cls, radius=DEFAULT_RADIUS):
        if not radius > 0:
            raise ValueError("coverage radius must be positive: %r" % radius)

        return super(CoverageCriterion, cls).__new__(cls, float(radius))


# every landmark -> agent bijection, one row per assignment
ASSIGNMENTS = array(list(permutations(range(NUM_AGENTS))))


def coverage_assignment(landmarks, positions, criterion=CoverageCriterion()):
    """Landmark -> covering agent, or None when the episode failed.

    An episode succeeds when some bijection puts every landmark's agent
    within the radius. Among those, the one with the least total distance
    is returned (first in permutation order on ties), which is the
    nearest-agent map whenever that map is itself such a bijection.
    """
    landmarks = asarray(landmarks, dtype=float64)
    positions = asarray(positions, dtype=float64)

    deltas = landmarks[:, None, :] - positions[None, :, :]
    distances = (deltas ** 2).sum(-1) ** 0.5

    covered = distances[arange(NUM_LANDMARKS), ASSIGNMENTS]
    feasible = (covered <= criterion.radius).all(1)
    if not feasible.any():
        return None

    totals = where(feasible, covered.sum(1), inf)
    return tuple(int(agent) for agent in ASSIGNMENTS[totals.argmin()])


def episode_success(final_state, criterion=CoverageCriterion()):
    return coverage_assignment(final_state.landmarks, final_state.positions,
                               criterion) is not None


class PreferenceMatrix(object):
    """Agent x landmark coverage counts over successful episodes."""
    def __init__(self, counts, episodes):
        self.counts = asarray(counts)
        self.episodes = int(episodes)

    def __repr__(self):
        return "<PreferenceMatrix %d/%d qualifying>" % (self.qualifying,
                                                        self.episodes)

    @property
    def qualifying(self):
        # every qualifying episode adds one to each agent row
        return int(self.counts[0].sum())

    @property
    def qualifying_fraction(self):
        if not self.episodes:
            return 0.0

        return self.qualifying / self.episodes

    @property
    def percentages(self):
        if not self.qualifying:
            raise EmptyResultError("no episode covered all landmarks")

        return 100.0 * self.counts / self.qualifying

    def rows(self):
        percentages = self.percentages if self.qualifying \
            else zeros(self.counts.shape)
        for agent, landmark in product(range(NUM_AGENTS),
                                       range(NUM_LANDMARKS)):
            yield (agent, landmark, int(self.counts[agent, landmark]),
                   float(percentages[agent, landmark]))


def actor_policy(agents, slot, episode, rng):
    """Noise-free policy for slot; ensembles draw a random member."""
    if agents.scheme.variant == ENSEMBLE:
        index = select_ensemble_members(agents.scheme, episode, rng)[slot]
    else:
        index = 0

    return ActorPolicy(agents.actor(slot, index))


def trained_team(agents, episode, rng):
    if agents.scheme.variant == ENSEMBLE:
        members = select_ensemble_members(agents.scheme, episode, rng)
    else:
        members = (0,) * NUM_AGENTS

    return [ActorPolicy(actor) for actor in agents.actors_for(members)]


def _team_maker(agents):
    if isinstance(agents, TrainedAgents):
        return lambda episode, rng: trained_team(agents, episode, rng)

    team = list(agents)
    return lambda episode, rng: team


def tally_preferences(agents, episodes=DEFAULT_EVAL_EPISODES,
                      criterion=CoverageCriterion(), rng=None):
    """PreferenceMatrix of noise-free episodes, possibly with no qualifying
    episode. agents is a TrainedAgents or a fixed sequence of policies.
    """
    if rng is None:
        rng = default_rng()
    make_team = _team_maker(agents)

    counts = zeros((NUM_AGENTS, NUM_LANDMARKS), dtype=int)
    for episode in range(episodes):
        final_world, _ = play(rng, make_team(episode, rng))
        assignment = coverage_assignment(final_world.landmarks,
                                         final_world.positions, criterion)
        if assignment is None:
            continue

        for landmark, agent in enumerate(assignment):
            counts[agent, landmark] += 1

    return PreferenceMatrix(counts, episodes)


def preference_matrix(agents, episodes=DEFAULT_EVAL_EPISODES,
                      criterion=CoverageCriterion(), rng=None):
    """As tally_preferences(), but raise EmptyResultError when no episode
    covered every landmark.
    """
    res = tally_preferences(agents, episodes, criterion, rng)
    if not res.qualifying:
        raise EmptyResultError("none of %d episodes covered all landmarks"
                               % episodes)

    return res


def sheldon_team(policy, slot, free_landmark):
    """Team with policy in slot; Sheldons in the other slots claim the
    non-free landmarks in ascending order.
    """
    other_slots = [item for item in range(NUM_AGENTS) if item != slot]
    claimed = [item for item in range(NUM_LANDMARKS) if item != free_landmark]

    team = [None] * NUM_AGENTS
    team[slot] = policy
    for other_slot, landmark in zip(other_slots, claimed):
        team[other_slot] = SheldonPolicy(landmark)

    return team


def success_rate(make_team, episodes, criterion=CoverageCriterion(),
                 rng=None):
    """Fraction of episodes ending with every landmark covered.

    make_team(episode, rng) returns the team for one episode.
    """
    if rng is None:
        rng = default_rng()

    successes = 0
    for episode in range(episodes):
        final_world, _ = play(rng, make_team(episode, rng))
        successes += episode_success(final_world, criterion)

    return successes / episodes if episodes else 0.0


class SheldonGrid(object):
    """Success rate indexed [trained slot, free landmark]."""
    def __init__(self, success=None):
        self.success = zeros((NUM_AGENTS, NUM_LANDMARKS)) if success is None \
            else asarray(success, dtype=float64)

    def __repr__(self):
        return "<SheldonGrid min=%.3f max=%.3f>" % (self.success.min(),
                                                    self.success.max())

    @property
    def gap(self):
        return float(self.success.max() - self.success.min())

    def rows(self):
        for slot, landmark in product(range(NUM_AGENTS),
                                      range(NUM_LANDMARKS)):
            yield slot, landmark, float(self.success[slot, landmark])


def sheldon_grid(agents, criterion=CoverageCriterion(),
                 episodes=DEFAULT_EVAL_EPISODES, rng=None, verbose=False):
    """Success of each trained slot alongside two Sheldons, for every
    choice of the landmark left free for it.
    """
    if rng is None:
        rng = default_rng()

    if verbose:
        print_timestamp("Sheldon grid, %d episodes per cell" % episodes)

    res = SheldonGrid()
    for slot, free_landmark in product(range(NUM_AGENTS),
                                       range(NUM_LANDMARKS)):
        def make_team(episode, rng, slot=slot, free_landmark=free_landmark):
            return sheldon_team(actor_policy(agents, slot, episode, rng),
                                slot, free_landmark)

        res.success[slot, free_landmark] = success_rate(make_team, episodes,
                                                        criterion, rng)
        progress(verbose, "slot %d, free landmark %d: %.3f"
                 % (slot, free_landmark, res.success[slot, free_landmark]))

    return res


def write_preference_table(filename, matrix, provenance=None):
    provenance = dict(provenance or {})
    provenance["qualifying_fraction"] = "%.6f" % matrix.qualifying_fraction

    return write_table(filename, PREFERENCE_FIELDNAMES, matrix.rows(),
                       provenance)


def write_trio_table(filename, matrix, provenance=None):
    rows = [(matrix.episodes, matrix.qualifying, matrix.qualifying_fraction)]
    return write_table(filename, TRIO_FIELDNAMES, rows, provenance)


def write_sheldon_table(filename, grid, provenance=None):
    return write_table(filename, SHELDON_FIELDNAMES, grid.rows(), provenance)
