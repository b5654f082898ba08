#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_record: noise-free evaluation episodes saved with every actor's
observations, hidden activations and actions

File layout: the 8-byte magic, a uint32 little-endian header length, a
UTF-8 YAML header, then one fixed-size little-endian float32 block per
episode (landmarks, final positions, then timestep x agent x field).
"""

from collections import OrderedDict, namedtuple
from collections.abc import Sequence
import struct

from numpy import (all as np_all, asarray, dtype, empty, float32,
                   frombuffer, isfinite)
from path import Path
import yaml

from ._maddpg import ENSEMBLE, select_ensemble_members
from ._rollout import ActorPolicy, play
from ._util import (RecordCorruptError, RecordDimensionError,
                    RecordFormatError, RecordTruncatedError,
                    RecordVersionError, print_timestamp, progress)
from ._world import ACTION_DIM, HORIZON, NUM_AGENTS, NUM_LANDMARKS, \
    OBSERVATION_DIM

RECORD_MAGIC = b"COOPNAV\0"
RECORD_FORMAT_VERSION = 1
HEADER_LENGTH_FMT = "<I"
HEADER_ENCODING = "utf-8"

DEFAULT_RECORD_EPISODES = 4000

HIDDEN_DIM = 128
FIELD_DIMS = OrderedDict([("observation", OBSERVATION_DIM),
                          ("hidden1", HIDDEN_DIM),
                          ("hidden2", HIDDEN_DIM),
                          ("action", ACTION_DIM)])
HIDDEN_FIELDS = ("hidden1", "hidden2")


def _field_slices():
    res = {}
    start = 0
    for name, dim in FIELD_DIMS.items():
        res[name] = slice(start, start + dim)
        start += dim

    return res, start

FIELD_SLICES, STEP_WIDTH = _field_slices()

PAYLOAD_FLOAT = dtype("<f4")
EPISODE_DTYPE = dtype([("landmarks", PAYLOAD_FLOAT, (NUM_LANDMARKS, 2)),
                       ("final_positions", PAYLOAD_FLOAT, (NUM_AGENTS, 2)),
                       ("steps", PAYLOAD_FLOAT,
                        (HORIZON, NUM_AGENTS, STEP_WIDTH))])


class EpisodeRecord(namedtuple("EpisodeRecord",
                               ["episode_index", "landmarks",
                                "final_positions", "steps"])):
    """One recorded episode.

    steps is HORIZON x NUM_AGENTS x STEP_WIDTH float32, agents in policy
    slot order; each row is observation, hidden1, hidden2, action.
    """
    __slots__ = ()

    def field(self, name):
        return self.steps[..., FIELD_SLICES[name]]

    @property
    def observation(self):
        return self.field("observation")

    @property
    def hidden1(self):
        return self.field("hidden1")

    @property
    def hidden2(self):
        return self.field("hidden2")

    @property
    def action(self):
        return self.field("action")

    def __eq__(self, other):
        if not isinstance(other, EpisodeRecord):
            return NotImplemented

        return (self.episode_index == other.episode_index and
                all((asarray(mine) == asarray(theirs)).all()
                    for mine, theirs in zip(self[1:], other[1:])))

    def __ne__(self, other):
        res = self.__eq__(other)
        if res is NotImplemented:
            return res
        return not res

    __hash__ = None


class Recording(Sequence):
    """Episodes of a record file, backed by one structured array.

    header is the YAML header as a dict.
    """
    def __init__(self, header, payload):
        self.header = header
        self.payload = payload

    def __repr__(self):
        return "<Recording %d episodes scheme=%r seed=%r>" % (
            len(self), self.header.get("scheme"), self.header.get("seed"))

    def __len__(self):
        return len(self.payload)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[item] for item in range(*index.indices(len(self)))]

        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError("episode index out of range")

        row = self.payload[index]
        return EpisodeRecord(index, row["landmarks"], row["final_positions"],
                             row["steps"])

    def field(self, name):
        """episodes x HORIZON x NUM_AGENTS x dim array for one field."""
        return self.payload["steps"][..., FIELD_SLICES[name]]

    @property
    def landmarks(self):
        return self.payload["landmarks"]

    @property
    def final_positions(self):
        return self.payload["final_positions"]


class RecordingPolicy(ActorPolicy):
    """Noise-free actor that keeps the ForwardTrace of its last action."""
    def __init__(self, actor):
        ActorPolicy.__init__(self, actor)
        self.last_trace = None

    def __call__(self, observation):
        action, self.last_trace = self.trace(observation)
        return action


def make_header(num_episodes, **provenance):
    res = dict(format_version=RECORD_FORMAT_VERSION,
               num_agents=NUM_AGENTS,
               num_landmarks=NUM_LANDMARKS,
               horizon=HORIZON,
               dims=dict(FIELD_DIMS),
               episodes=int(num_episodes))
    res.update(provenance)

    return res


def _write_header(outfile, header):
    text = yaml.safe_dump(header, default_flow_style=False)
    data = text.encode(HEADER_ENCODING)

    outfile.write(RECORD_MAGIC)
    outfile.write(struct.pack(HEADER_LENGTH_FMT, len(data)))
    outfile.write(data)


def _episode_block(landmarks, final_positions, steps):
    block = empty((), dtype=EPISODE_DTYPE)
    block["landmarks"] = landmarks
    block["final_positions"] = final_positions
    block["steps"] = steps

    return block.tobytes()


def write_records(filename, records, **provenance):
    """Write an iterable of EpisodeRecord with a header.

    The episode count is taken from len(records).
    """
    filepath = Path(filename).expand()
    header = make_header(len(records), **provenance)

    with open(filepath, "wb") as outfile:
        _write_header(outfile, header)
        for record in records:
            outfile.write(_episode_block(record.landmarks,
                                         record.final_positions,
                                         record.steps))

    return filepath


def record_episode(rng, actors):
    """Play one noise-free episode with identity slot assignment.

    Returns (landmarks, final positions, steps array).
    """
    team = [RecordingPolicy(actor) for actor in actors]
    steps = empty((HORIZON, NUM_AGENTS, STEP_WIDTH), dtype=float32)

    def on_step(timestep, observations, actions, outcome):
        for slot, policy in enumerate(team):
            trace = policy.last_trace
            row = steps[timestep, slot]
            row[FIELD_SLICES["observation"]] = observations[slot]
            row[FIELD_SLICES["hidden1"]] = trace.h1
            row[FIELD_SLICES["hidden2"]] = trace.h2
            row[FIELD_SLICES["action"]] = actions[slot]

    final_world, _ = play(rng, team, on_step=on_step)

    return final_world.landmarks, final_world.positions, steps


def record(agents, filename, rng, episodes=DEFAULT_RECORD_EPISODES,
           verbose=False, **provenance):
    """Record noise-free episodes of agents to filename.

    Ensemble runs draw one member per slot per episode from rng; every
    other scheme uses member 0.
    """
    filepath = Path(filename).expand()
    fields = dict(scheme=str(agents.scheme))
    fields.update(provenance)
    header = make_header(episodes, **fields)

    if verbose:
        print_timestamp("recording %d episodes to %s" % (episodes, filepath))

    with open(filepath, "wb") as outfile:
        _write_header(outfile, header)

        for episode in range(episodes):
            if agents.scheme.variant == ENSEMBLE:
                members = select_ensemble_members(agents.scheme, episode, rng)
            else:
                members = (0,) * NUM_AGENTS

            landmarks, final_positions, steps = \
                record_episode(rng, agents.actors_for(members))
            outfile.write(_episode_block(landmarks, final_positions, steps))

            if (episode + 1) % 1000 == 0:
                progress(verbose, "recorded %d episodes" % (episode + 1))

    return filepath


def _read_header(infile, filepath):
    prefix = infile.read(len(RECORD_MAGIC) +
                         struct.calcsize(HEADER_LENGTH_FMT))
    if len(prefix) < len(RECORD_MAGIC):
        raise RecordTruncatedError("%s: file ends before the header"
                                   % filepath)
    if not prefix.startswith(RECORD_MAGIC):
        raise RecordFormatError("%s is not a coopnav record file" % filepath)
    if len(prefix) < len(RECORD_MAGIC) + struct.calcsize(HEADER_LENGTH_FMT):
        raise RecordTruncatedError("%s: file ends before the header"
                                   % filepath)

    header_length, = struct.unpack(HEADER_LENGTH_FMT,
                                   prefix[len(RECORD_MAGIC):])
    data = infile.read(header_length)
    if len(data) < header_length:
        raise RecordTruncatedError("%s: header is truncated" % filepath)

    try:
        header = yaml.safe_load(data.decode(HEADER_ENCODING))
    except (UnicodeDecodeError, yaml.YAMLError) as err:
        raise RecordFormatError("%s: unreadable header: %s" % (filepath, err))

    if not isinstance(header, dict):
        raise RecordFormatError("%s: header is not a mapping" % filepath)

    return header, len(prefix) + header_length


def check_header(header, filepath=""):
    try:
        format_version = int(header["format_version"])
    except (KeyError, TypeError, ValueError):
        raise RecordVersionError("%s: header has no format version"
                                 % filepath)

    if format_version != RECORD_FORMAT_VERSION:
        raise RecordVersionError("%s has format version %d, but this"
                                 " software only reads %d"
                                 % (filepath, format_version,
                                    RECORD_FORMAT_VERSION))

    expected = dict(num_agents=NUM_AGENTS, num_landmarks=NUM_LANDMARKS,
                    horizon=HORIZON, dims=dict(FIELD_DIMS))
    for key, value in expected.items():
        if header.get(key) != value:
            raise RecordDimensionError("%s: header %s is %r, expected %r"
                                       % (filepath, key, header.get(key),
                                          value))

    episodes = header.get("episodes")
    if not isinstance(episodes, int) or episodes < 0:
        raise RecordDimensionError("%s: bad episode count %r"
                                   % (filepath, episodes))


def check_payload(payload, filepath=""):
    """Hidden activations are rectifier outputs; anything else is damage."""
    for name in ("landmarks", "final_positions", "steps"):
        if not np_all(isfinite(payload[name])):
            raise RecordCorruptError("%s: non-finite values in %s"
                                     % (filepath, name))

    for name in HIDDEN_FIELDS:
        if (payload["steps"][..., FIELD_SLICES[name]] < 0).any():
            raise RecordCorruptError("%s: negative %s activations"
                                     % (filepath, name))


def load(filename):
    """Read a record file into a Recording.

    Raises RecordVersionError, RecordDimensionError, RecordTruncatedError
    or RecordCorruptError as appropriate.
    """
    filepath = Path(filename).expand()

    with open(filepath, "rb") as infile:
        header, _ = _read_header(infile, filepath)
        check_header(header, filepath)

        num_episodes = header["episodes"]
        expected_size = num_episodes * EPISODE_DTYPE.itemsize
        data = infile.read(expected_size + 1)

    if len(data) < expected_size:
        raise RecordTruncatedError("%s: payload holds %d bytes, header"
                                   " declares %d episodes (%d bytes)"
                                   % (filepath, len(data), num_episodes,
                                      expected_size))
    if len(data) > expected_size:
        raise RecordCorruptError("%s: trailing bytes after %d episodes"
                                 % (filepath, num_episodes))

    payload = frombuffer(data, dtype=EPISODE_DTYPE, count=num_episodes)
    check_payload(payload, filepath)

    return Recording(header, payload)
