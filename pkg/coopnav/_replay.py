"""
_replay: experience replay for the centralized critics

Transitions are stored in policy-slot order: row k of observations and
actions belongs to the policy in slot k, whichever body it controlled.
"""

from collections import namedtuple

from numpy import asarray, empty, float64, int64, uint8, zeros

from ._util import DimensionError, InsufficientReplayError
from ._world import ACTION_DIM, NUM_AGENTS, OBSERVATION_DIM

INITIAL_ROWS = 4096

Transition = namedtuple("Transition", ["observations", "actions", "rewards",
                                       "next_observations", "terminal",
                                       "members"])
Transition.__new__.__defaults__ = ((0,) * NUM_AGENTS,)

FIELD_SHAPES = [("observations", (NUM_AGENTS, OBSERVATION_DIM), float64),
                ("actions", (NUM_AGENTS, ACTION_DIM), float64),
                ("rewards", (NUM_AGENTS,), float64),
                ("next_observations", (NUM_AGENTS, OBSERVATION_DIM), float64),
                ("terminal", (), uint8),
                ("members", (NUM_AGENTS,), int64)]


class Batch(namedtuple("Batch", [name for name, _, _ in FIELD_SHAPES])):
    """Stacked transitions; every field gains a leading batch axis."""
    __slots__ = ()

    def __len__(self):
        return self.rewards.shape[0]


class ReplayBuffer(object):
    """Fixed-capacity ring of transitions.

    Storage grows by doubling up to capacity, so a large capacity costs
    nothing until it is used. Once full, the oldest transition is
    overwritten.
    """
    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be positive: %r" % capacity)

        self.capacity = int(capacity)
        self.size = 0
        self._next = 0
        self._fields = dict((name, zeros((min(INITIAL_ROWS, self.capacity),)
                                         + shape, dtype))
                            for name, shape, dtype in FIELD_SHAPES)

    def __len__(self):
        return self.size

    def __repr__(self):
        return "<ReplayBuffer %d/%d>" % (self.size, self.capacity)

    @property
    def _allocated(self):
        return self._fields["rewards"].shape[0]

    def _grow(self):
        allocated = self._allocated
        rows = min(allocated * 2, self.capacity)
        for name, shape, dtype in FIELD_SHAPES:
            grown = empty((rows,) + shape, dtype)
            grown[:allocated] = self._fields[name]
            self._fields[name] = grown

    def add(self, transition):
        if self._next >= self._allocated:
            self._grow()

        for name, shape, _ in FIELD_SHAPES:
            value = asarray(getattr(transition, name))
            if value.shape != shape:
                raise DimensionError("transition %s has shape %s, expected %s"
                                     % (name, value.shape, shape))
            self._fields[name][self._next] = value

        self._next = (self._next + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indexes(self, batch_size, rng):
        """Distinct indexes drawn uniformly from the stored transitions."""
        if self.size < batch_size:
            raise InsufficientReplayError("buffer holds %d transitions, need"
                                          " %d" % (self.size, batch_size))

        return rng.choice(self.size, batch_size, replace=False)

    def gather(self, indexes):
        return Batch(*[self._fields[name][indexes]
                       for name, _, _ in FIELD_SHAPES])

    def sample(self, batch_size, rng):
        return self.gather(self.sample_indexes(batch_size, rng))


class ReplayPool(object):
    """The buffers a training run writes to.

    Without an ensemble every slot shares one buffer of joint transitions.
    With an ensemble each (slot, member) pair owns a buffer, and a
    transition goes only to the buffers of the members that produced it.
    """
    def __init__(self, capacity, ensemble_size=None):
        self.ensemble_size = ensemble_size
        if ensemble_size is None:
            self._buffers = {None: ReplayBuffer(capacity)}
        else:
            self._buffers = dict(((slot, member), ReplayBuffer(capacity))
                                 for slot in range(NUM_AGENTS)
                                 for member in range(ensemble_size))

    def __iter__(self):
        return iter(self._buffers.values())

    def buffer_for(self, slot, member=0):
        if self.ensemble_size is None:
            return self._buffers[None]

        return self._buffers[slot, member]

    def add(self, transition):
        if self.ensemble_size is None:
            self._buffers[None].add(transition)
            return

        for slot, member in enumerate(transition.members):
            self._buffers[slot, member].add(transition)

    @property
    def size(self):
        """Transitions held by the least-filled buffer."""
        return min(len(buffer) for buffer in self)
