#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_report: cross-seed summary of trained-trio and Sheldon success per
training scheme
"""

from collections import OrderedDict, namedtuple
from hashlib import sha1
from warnings import warn

from numpy import asarray, float64
from path import Path

from . import Run
from ._config import MANIFEST_HASH_LENGTH
from ._util import MissingRunWarning, read_table, write_table

TRAINED = "trained"
SHELDON = "sheldon"
SHELDON_GAP = "sheldon_gap"
POPULATIONS = (TRAINED, SHELDON, SHELDON_GAP)

SUMMARY_FIELDNAMES = ["scheme", "population", "mean", "std", "runs",
                      "values"]

Summary = namedtuple("Summary", ["mean", "std", "runs", "values"])


def summarize(values, runs):
    """Population mean and standard deviation (ddof=0)."""
    values = asarray(values, dtype=float64)
    if not len(values):
        return Summary(float("nan"), float("nan"), runs, 0)

    return Summary(float(values.mean()), float(values.std()), runs,
                   len(values))


class SchemeReport(object):
    """scheme -> population -> Summary, plus the runs that had no results.

    sources holds (scheme, seed, manifest_hash) of every run aggregated.
    """
    def __init__(self):
        self.summaries = OrderedDict()
        self.missing = []
        self.sources = []

    def __repr__(self):
        return "<SchemeReport %s>" % ", ".join(self.summaries)

    def __getitem__(self, scheme):
        return self.summaries[scheme]

    def __contains__(self, scheme):
        return scheme in self.summaries

    @property
    def provenance(self):
        """One hash over the hashes of every aggregated run, with the
        seeds and schemes they cover.
        """
        sources = sorted(self.sources, key=str)
        text = "\n".join("%s %s %s" % source for source in sources)
        combined = sha1(text.encode("utf-8")).hexdigest()

        return dict(manifest_hash=combined[:MANIFEST_HASH_LENGTH],
                    seed=",".join(sorted(set(str(seed)
                                             for _, seed, _ in sources))),
                    scheme=",".join(sorted(set(scheme
                                               for scheme, _, _ in sources))),
                    run_hashes=",".join("%s/%s:%s" % source
                                        for source in sources),
                    missing=len(self.missing))

    def rows(self):
        for scheme, populations in self.summaries.items():
            for population in POPULATIONS:
                summary = populations[population]
                yield (scheme, population, summary.mean, summary.std,
                       summary.runs, summary.values)


def read_run_results(run):
    """Return (trio success, 3 x 3 Sheldon success, trio table provenance)
    of a run.
    """
    provenance, trio_rows = read_table(run.trio_table)
    trio = float(trio_rows[0]["success_rate"])

    _, sheldon_rows = read_table(run.sheldon_table)
    sheldon = [float(row["success_rate"]) for row in sheldon_rows]

    return trio, sheldon, provenance


def _scheme_of(dirpath):
    # <out>/<scheme>/seed-<seed>
    return Path(dirpath).expand().parent.name


def scheme_report(run_directories):
    """Aggregate evaluated runs by scheme.

    Runs without evaluation results are listed in report.missing with a
    MissingRunWarning.
    """
    collected = OrderedDict()
    report = SchemeReport()

    for dirname in run_directories:
        dirpath = Path(dirname).expand()
        scheme = _scheme_of(dirpath)
        results = collected.setdefault(scheme, [])

        try:
            with Run(dirpath) as run:
                if not (run.trio_table.isfile() and
                        run.sheldon_table.isfile()):
                    raise IOError("no evaluation results")
                trio, sheldon, provenance = read_run_results(run)
        except (IOError, KeyError, IndexError, ValueError) as err:
            warn("%s: skipping run: %s" % (dirpath, err), MissingRunWarning)
            report.missing.append((scheme, dirpath))
            continue

        results.append((trio, sheldon))
        report.sources.append((scheme, provenance.get("seed"),
                               provenance.get("manifest_hash")))

    for scheme, results in collected.items():
        # runs counts every directory of the scheme, evaluated or not
        runs = len(results) + sum(1 for item, _ in report.missing
                                  if item == scheme)
        trio = [trio for trio, _ in results]
        sheldon = [value for _, grid in results for value in grid]
        gaps = [max(grid) - min(grid) for _, grid in results if grid]

        report.summaries[scheme] = OrderedDict([
            (TRAINED, summarize(trio, runs)),
            (SHELDON, summarize(sheldon, runs)),
            (SHELDON_GAP, summarize(gaps, runs))])

    return report


def find_run_directories(out_root):
    """Every <scheme>/seed-<seed> directory under out_root, sorted."""
    out_root = Path(out_root).expand()
    if not out_root.isdir():
        return []

    return sorted(rundir for schemedir in out_root.dirs()
                  for rundir in schemedir.dirs("seed-*"))


def write_scheme_table(filename, report, provenance=None):
    return write_table(filename, SUMMARY_FIELDNAMES, report.rows(),
                       provenance)
