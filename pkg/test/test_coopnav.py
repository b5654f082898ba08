#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
test_coopnav: shared fixtures, and tests of the Run directory handle
"""

from tempfile import mkdtemp
import unittest

from numpy import array, isnan, logical_and, logical_not
from numpy.testing import assert_allclose
from path import Path
import yaml

from coopnav import (EVAL_SHELDON, PROBE, RECORD, TRAIN, Run, RunManifest)
from coopnav._train import smoke_config
from coopnav._util import PartialOutputError, PrerequisiteError


def make_temp_dir():
    return Path(mkdtemp(prefix="coopnav.test."))


def tiny_config(**kwargs):
    """A training run that finishes in a fraction of a second."""
    values = dict(batch_size=8, buffer_capacity=1000, warmup_transitions=16,
                  update_interval_steps=5, checkpoint_interval=2,
                  log_interval=2)
    values.update(kwargs)
    return smoke_config(episodes=values.pop("episodes", 4), **values)


class CoopnavTesterBase(unittest.TestCase):
    def setUp(self):
        self.verbose = False
        self.workdir = make_temp_dir()

        # Potentially override defaults
        self.init()

    def init(self):
        pass

    def tearDown(self):
        self.workdir.rmtree_p()

    def assertArraysEqual(self, observed, expected):
        observed = array(observed)
        expected = array(expected, dtype=observed.dtype)
        not_equal = (observed != expected)
        both_nan = logical_and(isnan(observed), isnan(expected)) \
            if observed.dtype.kind == "f" else False
        if logical_and(not_equal, logical_not(both_nan)).any():
            self.fail("%r != %r" % (observed, expected))

    def assertArraysAlmostEqual(self, observed, expected, rtol=1e-7,
                                atol=0.0):
        assert_allclose(observed, expected, rtol=rtol, atol=atol)


class TestRun(CoopnavTesterBase):
    def init(self):
        self.manifest = RunManifest({"out": str(self.workdir),
                                     "seeds": [3]})
        self.rundir = self.manifest.run_directory(3)

    def test_layout(self):
        self.assertEqual(self.rundir, self.workdir / "vanilla" / "seed-3")

    def test_missing_directory(self):
        with self.assertRaises(IOError):
            Run(self.workdir / "nowhere")

    def test_create_writes_metadata(self):
        with Run.create(self.rundir, self.manifest, 3) as run:
            self.assertEqual(run.seed, 3)
            self.assertEqual(run.scheme, "vanilla")
            self.assertEqual(run.manifest_hash,
                             self.manifest.manifest_hash(3))
            self.assertEqual(len(run.manifest_hash), 12)

        self.assertFalse(run.isopen)

    def test_newer_format_refused(self):
        self.rundir.makedirs_p()
        (self.rundir / "metadata.yaml").write_text(
            yaml.safe_dump(dict(format_version=99)))

        with self.assertRaises(NotImplementedError):
            Run(self.rundir)

    def test_markers(self):
        with Run.create(self.rundir, self.manifest, 3) as run:
            self.assertFalse(run.is_done(TRAIN))
            self.assertEqual(run.stage_status()[TRAIN], "missing")

            with self.assertRaises(PrerequisiteError):
                run.check_prerequisite(RECORD)
            run.check_prerequisite(TRAIN)

            run.mark_done(TRAIN)
            self.assertTrue(run.is_done(TRAIN, run.stage_hash(TRAIN)))
            self.assertFalse(run.is_done(TRAIN, "0" * 12))
            self.assertEqual(run.stage_status()[TRAIN], "done")

            run.check_prerequisite(RECORD)
            run.check_prerequisite(EVAL_SHELDON)
            with self.assertRaises(PrerequisiteError):
                run.check_prerequisite(PROBE)

    def test_partial_output(self):
        with Run.create(self.rundir, self.manifest, 3) as run:
            run.check_partial(RECORD)

            run.record_file.write_bytes(b"COOPNAV")
            self.assertEqual(run.stage_status()[RECORD], "partial")
            with self.assertRaises(PartialOutputError):
                run.check_partial(RECORD)

            run.clear(RECORD)
            self.assertFalse(run.record_file.exists())
            run.check_partial(RECORD)

    def test_stale_marker(self):
        with Run.create(self.rundir, self.manifest, 3) as run:
            run.mark_done(TRAIN)

        changed = RunManifest({"out": str(self.workdir), "seeds": [3],
                               "train": {"gamma": 0.9}})
        self.assertNotEqual(changed.manifest_hash(3),
                            self.manifest.manifest_hash(3))

        with Run.create(self.rundir, changed, 3) as run:
            self.assertEqual(run.stage_status()[TRAIN], "stale")
            with self.assertRaises(PrerequisiteError):
                run.check_prerequisite(RECORD)
            with self.assertRaises(PartialOutputError):
                run.check_partial(TRAIN)

    def test_downstream_setting(self):
        with Run.create(self.rundir, self.manifest, 3) as run:
            run.mark_done(TRAIN)
            run.mark_done(RECORD)
            run.mark_done(PROBE)

        changed = RunManifest({"out": str(self.workdir), "seeds": [3],
                               "probe": {"l2": 0.01}})
        with Run.create(self.rundir, changed, 3) as run:
            status = run.stage_status()
            self.assertEqual(status[TRAIN], "done")
            self.assertEqual(status[RECORD], "done")
            self.assertEqual(status[PROBE], "stale")
            run.check_prerequisite(PROBE)
            run.check_prerequisite(EVAL_SHELDON)
            with self.assertRaises(PartialOutputError):
                run.check_partial(PROBE)

    def test_unknown_stage(self):
        with Run.create(self.rundir, self.manifest, 3) as run:
            with self.assertRaises(ValueError):
                run.marker("deploy")
            with self.assertRaises(ValueError):
                run.stage_hash("deploy")


def main():
    unittest.main()


if __name__ == "__main__":
    main()
