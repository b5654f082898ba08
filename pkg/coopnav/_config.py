#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_config: run manifests, the YAML description of a seed sweep for one
training scheme
"""

from copy import deepcopy
from hashlib import sha1
import os

from path import Path
import yaml

from . import PREREQUISITES, STAGE_SECTIONS
from ._maddpg import (DEFAULT_ENSEMBLE_SIZE, SCHEME_VARIANTS, VANILLA, Scheme,
                      TrainConfig)
from ._util import CoopnavError, ConfigError

OUTPUT_ROOT_ENV = "COOPNAV_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "coopnav-runs"
DEFAULT_SEEDS = [0, 1, 2, 3, 4]

MANIFEST_HASH_LENGTH = 12
RUN_DIRNAME_FMT = "seed-%d"

# keys of TrainConfig a manifest may not set: they come from scheme/seeds
MANAGED_TRAIN_KEYS = frozenset(["seed", "scheme"])

MANIFEST_DEFAULTS = {
    "scheme": VANILLA,
    "ensemble_size": DEFAULT_ENSEMBLE_SIZE,
    "shuffle_per_step": False,
    "seeds": DEFAULT_SEEDS,
    "out": None,
    "train": {},
    "record": {"episodes": 4000},
    "probe": {"test_fraction": 0.25,
              "l2": 1e-3,
              "max_iterations": 2000,
              "tolerance": 1e-5,
              "noise_baseline": False,
              "split_seed": 0},
    "evaluate": {"episodes": 4000,
                 "radius": 0.3},
}

STAGE_SECTION_NAMES = frozenset(name for names in STAGE_SECTIONS.values()
                                for name in names)

# sections whose keys are fixed by MANIFEST_DEFAULTS
CLOSED_SECTIONS = ("record", "probe", "evaluate")


def _digest(settings):
    text = yaml.safe_dump(settings, default_flow_style=False, sort_keys=True)
    return sha1(text.encode("utf-8")).hexdigest()[:MANIFEST_HASH_LENGTH]


def _merge(base, update, where=""):
    res = deepcopy(base)
    for key, value in update.items():
        if key not in res:
            raise ConfigError("unknown configuration key: %s%s"
                              % (where, key))
        if key in CLOSED_SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError("%s must be a mapping" % key)
            res[key] = _merge(res[key], value, "%s." % key)
        else:
            res[key] = deepcopy(value)

    return res


def parse_assignment(text):
    """KEY=VALUE with a dotted KEY; VALUE is read as a YAML scalar."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError("expected KEY=VALUE, got %r" % text)

    try:
        parsed = yaml.safe_load(value)
    except yaml.YAMLError as err:
        raise ConfigError("cannot parse value of %s: %s" % (key, err))

    return key.strip().split("."), parsed


class RunManifest(object):
    """Resolved settings for every (scheme, seed) run of a sweep.

    values holds the defaults overlaid with the manifest file and then the
    command-line overrides.
    """
    def __init__(self, values=None):
        self.values = _merge(MANIFEST_DEFAULTS, values or {})
        self.validate()

    def __repr__(self):
        return "RunManifest(scheme=%r, seeds=%r)" % (self.values["scheme"],
                                                     self.seeds)

    @classmethod
    def load(cls, filename=None, overrides=()):
        """Manifest from a YAML file (or defaults) plus overrides, a
        sequence of (dotted key path, value).
        """
        values = {}
        if filename is not None:
            filepath = Path(filename).expand()
            if not filepath.isfile():
                raise ConfigError("Could not find configuration: %s"
                                  % filepath)
            try:
                values = yaml.safe_load(filepath.read_text()) or {}
            except yaml.YAMLError as err:
                raise ConfigError("%s: %s" % (filepath, err))
            if not isinstance(values, dict):
                raise ConfigError("%s: configuration must be a mapping"
                                  % filepath)

        for path, value in overrides:
            target = values
            for key in path[:-1]:
                target = target.setdefault(key, {})
                if not isinstance(target, dict):
                    raise ConfigError("%s is not a section"
                                      % ".".join(path[:-1]))
            target[path[-1]] = value

        return cls(values)

    def validate(self):
        values = self.values

        if values["scheme"] not in SCHEME_VARIANTS:
            raise ConfigError("unknown scheme: %r (choose from %s)"
                              % (values["scheme"], ", ".join(SCHEME_VARIANTS)))

        seeds = values["seeds"]
        if isinstance(seeds, int):
            seeds = values["seeds"] = [seeds]
        if not seeds or not all(isinstance(seed, int) for seed in seeds):
            raise ConfigError("seeds must be a non-empty list of integers")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("seeds must be distinct: %r" % seeds)

        train = values["train"]
        if not isinstance(train, dict):
            raise ConfigError("train must be a mapping")
        managed = MANAGED_TRAIN_KEYS.intersection(train)
        if managed:
            raise ConfigError("set %s at the top level, not under train"
                              % ", ".join(sorted(managed)))

        if values["record"]["episodes"] < 1:
            raise ConfigError("record.episodes must be positive")
        if values["evaluate"]["episodes"] < 1:
            raise ConfigError("evaluate.episodes must be positive")
        if not values["evaluate"]["radius"] > 0:
            raise ConfigError("evaluate.radius must be positive")
        if not 0 < values["probe"]["test_fraction"] < 1:
            raise ConfigError("probe.test_fraction must be in (0, 1)")

        # scheme and TrainConfig checks raise their own errors
        try:
            self.train_config(seeds[0])
        except CoopnavError as err:
            raise ConfigError(str(err))

    @property
    def seeds(self):
        return list(self.values["seeds"])

    @property
    def scheme(self):
        return Scheme(self.values["scheme"], self.values["ensemble_size"],
                      self.values["shuffle_per_step"])

    @property
    def out_root(self):
        res = self.values["out"] or os.environ.get(OUTPUT_ROOT_ENV) or \
            DEFAULT_OUTPUT_ROOT

        return Path(res).expand()

    def section(self, name):
        return dict(self.values[name])

    def train_config(self, seed):
        return TrainConfig(seed=seed, scheme=self.scheme,
                           **self.values["train"])

    def resolved(self, seed):
        """Everything that determines the outputs of one run."""
        res = dict((key, deepcopy(value))
                   for key, value in self.values.items()
                   if key not in ("seeds", "out"))
        res["seed"] = seed
        res["train"] = self.train_config(seed).as_dict()

        return res

    def manifest_hash(self, seed):
        return _digest(self.resolved(seed))

    def stage_settings(self, stage, seed):
        """The part of resolved(seed) that stage and the stages it
        depends on read.
        """
        if stage not in STAGE_SECTIONS:
            raise ValueError("unknown stage: %r" % stage)

        sections = set()
        pending = [stage]
        while pending:
            current = pending.pop()
            sections.update(STAGE_SECTIONS[current])
            pending.extend(PREREQUISITES[current])

        return dict((key, value) for key, value in self.resolved(seed).items()
                    if key in sections or key not in STAGE_SECTION_NAMES)

    def stage_hash(self, stage, seed):
        return _digest(self.stage_settings(stage, seed))

    def stage_hashes(self, seed):
        return dict((stage, self.stage_hash(stage, seed))
                    for stage in STAGE_SECTIONS)

    def provenance(self, seed):
        return dict(manifest_hash=self.manifest_hash(seed), seed=seed,
                    scheme=self.values["scheme"])

    def run_directory(self, seed):
        return self.out_root / self.values["scheme"] / (RUN_DIRNAME_FMT % seed)

    def dump(self):
        return yaml.safe_dump(self.values, default_flow_style=False)
