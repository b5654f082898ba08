#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_info: print what a run directory holds and which stages are finished
"""

from . import STAGES, Run
from ._train import read_checkpoint_metadata
from ._util import CheckpointError


def print_metadata(run):
    for key in ("scheme", "seed", "manifest_hash", "format_version",
                "coopnav_version"):
        print(key, run.metadata.get(key), sep="\t")


def print_checkpoint(run):
    try:
        metadata = read_checkpoint_metadata(run.checkpoint_dir)
    except CheckpointError:
        print("episodes_completed", None, sep="\t")
        return

    print("episodes_completed", metadata.get("episodes_completed"), sep="\t")


def print_stages(run):
    status = run.stage_status()
    for stage in STAGES:
        print(stage, status[stage], sep="\t")


def info(dirname):
    with Run(dirname) as run:
        print_metadata(run)
        print_checkpoint(run)
        print_stages(run)
