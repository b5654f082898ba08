#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
coopnav trains teams of MADDPG agents on the three-agent cooperative
navigation task under several training schemes, records what the agents
see, compute and do, and measures whether their intentions can be read
out linearly and whether their behaviour survives unfamiliar partners.

Every (scheme, seed) run lives in its own directory, accessed through
:class:`Run`.
"""

from importlib.metadata import PackageNotFoundError, version

from path import Path
import yaml

from ._util import PartialOutputError, PrerequisiteError

try:
    __version__ = version(__name__.split(".")[0])
except PackageNotFoundError:
    __version__ = "0.1.0"

FORMAT_VERSION = 1

METADATA_FILENAME = "metadata.yaml"
MARKER_FMT = ".%s.done"

TRAIN = "train"
RECORD = "record"
PROBE = "probe"
EVAL_SHELDON = "eval-sheldon"
STAGES = (TRAIN, RECORD, PROBE, EVAL_SHELDON)

PREREQUISITES = {TRAIN: (),
                 RECORD: (TRAIN,),
                 PROBE: (RECORD,),
                 EVAL_SHELDON: (TRAIN,)}

# manifest sections each stage reads; run-wide keys (scheme, seed) go to all
STAGE_SECTIONS = {TRAIN: ("train",),
                  RECORD: ("record",),
                  PROBE: ("probe",),
                  EVAL_SHELDON: ("evaluate",)}

STAGE_OUTPUTS = {TRAIN: ("checkpoints", "learning_curve.tsv"),
                 RECORD: ("episodes.rec",),
                 PROBE: ("probe_accuracy.tsv",),
                 EVAL_SHELDON: ("preference.tsv", "trio.tsv",
                                "sheldon_grid.tsv")}


class Run(object):
    """One (scheme, seed) run directory.

    Use as a context manager::

      with Run("coopnav-runs/shuffle/seed-0") as run:
          agents = load_agents(run.checkpoint_dir)
          [...]

    A finished stage leaves a hidden marker file holding its stage hash,
    which covers only the settings that stage and its prerequisites read.
    Outputs without a marker are partial.
    """
    def __init__(self, dirname):
        # so that Run.__del__() won't fail if __init__() raises
        self._isopen = False
        self.dirname = dirname

        dirpath = Path(dirname).expand()
        if not dirpath.isdir():
            raise IOError("Could not find run directory: %s" % dirpath)
        self.dirpath = dirpath

        self._context_count = 0
        self._isopen = True

        format_version = self.format_version
        if format_version is not None and format_version > FORMAT_VERSION:
            raise NotImplementedError("This run has format version %s, but"
                                      " the installed coopnav software only"
                                      " supports format version %d"
                                      % (format_version, FORMAT_VERSION))

    @classmethod
    def create(cls, dirname, manifest, seed):
        """Open dirname for seed of manifest, creating it if needed.

        metadata.yaml is (re)written with the resolved settings.
        """
        dirpath = Path(dirname).expand()
        dirpath.makedirs_p()

        metadata = dict(format_version=FORMAT_VERSION,
                        coopnav_version=__version__,
                        settings=manifest.resolved(seed))
        metadata.update(manifest.provenance(seed))
        metadata["stage_hashes"] = manifest.stage_hashes(seed)

        (dirpath / METADATA_FILENAME).write_text(
            yaml.safe_dump(metadata, default_flow_style=False))

        return cls(dirpath)

    def __enter__(self):
        assert self.isopen
        self._context_count += 1
        return self

    def __exit__(self, exc_type, exc_value, exc_tb):
        self._context_count -= 1
        if self._context_count == 0:
            self.close()

    def __del__(self):
        if self.isopen:
            self.close()

    def __repr__(self):
        return "Run('%s')" % self.dirname

    def close(self):
        assert self.isopen
        self._isopen = False

    @property
    def isopen(self):
        return self._isopen

    @property
    def metadata(self):
        """Contents of metadata.yaml, or {} for a run never created."""
        assert self.isopen
        filepath = self.dirpath / METADATA_FILENAME
        if not filepath.isfile():
            return {}

        return yaml.safe_load(filepath.read_text()) or {}

    @property
    def format_version(self):
        return self.metadata.get("format_version")

    @property
    def manifest_hash(self):
        return self.metadata.get("manifest_hash")

    @property
    def scheme(self):
        return self.metadata.get("scheme")

    @property
    def seed(self):
        return self.metadata.get("seed")

    def stage_hash(self, stage):
        """Hash of the settings stage depends on under the current
        manifest.
        """
        if stage not in STAGES:
            raise ValueError("unknown stage: %r" % stage)

        return self.metadata.get("stage_hashes", {}).get(stage)

    @property
    def provenance(self):
        metadata = self.metadata
        return dict((key, metadata.get(key))
                    for key in ("manifest_hash", "seed", "scheme"))

    def path(self, name):
        return self.dirpath / name

    @property
    def checkpoint_dir(self):
        return self.path("checkpoints")

    @property
    def learning_curve(self):
        return self.path("learning_curve.tsv")

    @property
    def record_file(self):
        return self.path("episodes.rec")

    @property
    def probe_table(self):
        return self.path("probe_accuracy.tsv")

    @property
    def preference_table(self):
        return self.path("preference.tsv")

    @property
    def trio_table(self):
        return self.path("trio.tsv")

    @property
    def sheldon_table(self):
        return self.path("sheldon_grid.tsv")

    def marker(self, stage):
        if stage not in STAGES:
            raise ValueError("unknown stage: %r" % stage)

        return self.path(MARKER_FMT % stage)

    def marker_hash(self, stage):
        """Stage hash recorded by the stage marker, None if not done."""
        filepath = self.marker(stage)
        if not filepath.isfile():
            return None

        return (yaml.safe_load(filepath.read_text()) or {}).get("stage_hash")

    def is_done(self, stage, expected=None):
        recorded = self.marker_hash(stage)
        if recorded is None:
            return False

        return expected is None or recorded == expected

    def mark_done(self, stage):
        content = dict(stage=stage, stage_hash=self.stage_hash(stage),
                       **self.provenance)
        self.marker(stage).write_text(
            yaml.safe_dump(content, default_flow_style=False))

    def outputs(self, stage):
        return [self.path(name) for name in STAGE_OUTPUTS[stage]]

    def check_prerequisite(self, stage):
        for prerequisite in PREREQUISITES[stage]:
            if not self.is_done(prerequisite,
                                self.stage_hash(prerequisite)):
                raise PrerequisiteError("%s: stage %s needs %s to finish"
                                        " first" % (self.dirpath, stage,
                                                    prerequisite))

    def check_partial(self, stage):
        """Raise PartialOutputError if stage outputs exist but were not
        completed under the current manifest.
        """
        if self.is_done(stage, self.stage_hash(stage)):
            return

        existing = [item for item in self.outputs(stage) if item.exists()]
        if existing or self.marker(stage).exists():
            raise PartialOutputError("%s: stage %s has outputs from an"
                                     " unfinished or different run (%s);"
                                     " rerun with --force"
                                     % (self.dirpath, stage,
                                        ", ".join(item.name
                                                  for item in existing)))

    def clear(self, stage):
        """Remove the outputs and marker of stage."""
        for item in self.outputs(stage) + [self.marker(stage)]:
            if item.isdir():
                item.rmtree_p()
            else:
                item.remove_p()

    def stage_status(self):
        """stage -> "done", "stale", "partial" or "missing"."""
        res = {}
        for stage in STAGES:
            recorded = self.marker_hash(stage)
            if recorded is not None:
                res[stage] = "done" if recorded == self.stage_hash(stage) \
                    else "stale"
            elif any(item.exists() for item in self.outputs(stage)):
                res[stage] = "partial"
            else:
                res[stage] = "missing"

        return res


from ._world import (ACTION_DIM, HORIZON, NUM_AGENTS, NUM_LANDMARKS,  # noqa
                     OBSERVATION_DIM, WorldState, observe, reset, step)
from ._mlp import MLPSpec, ParamSet, backward, forward  # noqa
from ._hdf5 import load_params, save_params  # noqa
from ._maddpg import (Scheme, TrainConfig, TrainedAgents, act,  # noqa
                      critic_target, update_step)
from ._rollout import run_episode  # noqa
from ._sheldon import SheldonPolicy  # noqa
from ._train import (load_agents, save_agents, train,  # noqa
                     write_learning_curve)
from ._record import EpisodeRecord, Recording, load, record  # noqa
from ._probe import (FeatureSource, accuracy_curves, build_dataset,  # noqa
                     final_landmark_label, train_probe,
                     write_accuracy_table)
from ._evaluate import (CoverageCriterion, episode_success,  # noqa
                        preference_matrix, sheldon_grid,
                        write_preference_table, write_sheldon_table)
from ._config import RunManifest  # noqa
from ._util import read_table  # noqa
