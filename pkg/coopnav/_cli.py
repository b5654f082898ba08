#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_cli: the coopnav command: train, record, probe, eval-sheldon, report
and info
"""

from argparse import ArgumentParser, RawDescriptionHelpFormatter
from concurrent.futures import ProcessPoolExecutor
import sys
from warnings import warn

from numpy.random import default_rng
from tabdelim import ListWriter

from . import (EVAL_SHELDON, PROBE, RECORD, STAGES, TRAIN, Run,
               __version__)
from ._config import RunManifest, parse_assignment
from ._evaluate import (CoverageCriterion, sheldon_grid, tally_preferences,
                        write_preference_table, write_sheldon_table,
                        write_trio_table)
from ._info import info
from ._probe import ProbeOptions, accuracy_curves, write_accuracy_table
from ._record import load, record
from ._report import find_run_directories, scheme_report, write_scheme_table
from ._train import load_agents, train, write_learning_curve
from ._util import (EXIT_CONFIG, EXIT_FAILURE, EXIT_FORMAT,
                    EXIT_PARTIAL_OUTPUT, EXIT_PREREQUISITE, EXIT_SUCCESS,
                    EXIT_USAGE, CoopnavError, EmptyEvaluationWarning, die,
                    print_timestamp, progress)

REPORT = "report"
INFO = "info"

SUMMARY_FILENAME = "scheme_summary.tsv"

# offsets that give each stage its own random stream for a seed
RECORD_STREAM = 1
PREFERENCE_STREAM = 2
SHELDON_STREAM = 3

EXIT_STATUS_EPILOG = """\
exit statuses:
  %d  success
  %d  other failure
  %d  command-line usage error
  %d  malformed configuration
  %d  missing prerequisite stage
  %d  partial output found (rerun with --force)
  %d  record or checkpoint file format error
""" % (EXIT_SUCCESS, EXIT_FAILURE, EXIT_USAGE, EXIT_CONFIG,
       EXIT_PREREQUISITE, EXIT_PARTIAL_OUTPUT, EXIT_FORMAT)


def begin_stage(run, stage, force=False, verbose=False):
    """Check that stage may run in run; return False to skip it."""
    run.check_prerequisite(stage)

    if run.is_done(stage, run.stage_hash(stage)) and not force:
        progress(verbose, "%s: %s already done" % (run.dirpath, stage))
        return False

    if force:
        run.clear(stage)
    else:
        run.check_partial(stage)

    return True


def cmd_train(manifest, seed, force=False, verbose=False, jobs=1):
    with Run.create(manifest.run_directory(seed), manifest, seed) as run:
        if not begin_stage(run, TRAIN, force, verbose):
            return run.dirpath

        result = train(manifest.train_config(seed), run.checkpoint_dir,
                       run.provenance, verbose)
        write_learning_curve(run.learning_curve, result.episode_rewards,
                             run.provenance)

        run.mark_done(TRAIN)
        return run.dirpath


def cmd_record(manifest, seed, force=False, verbose=False, jobs=1):
    with Run.create(manifest.run_directory(seed), manifest, seed) as run:
        if not begin_stage(run, RECORD, force, verbose):
            return run.dirpath

        agents = load_agents(run.checkpoint_dir)
        rng = default_rng((seed, RECORD_STREAM))
        record(agents, run.record_file, rng,
               manifest.section("record")["episodes"], verbose,
               **run.provenance)

        run.mark_done(RECORD)
        return run.dirpath


def cmd_probe(manifest, seed, force=False, verbose=False, jobs=1):
    with Run.create(manifest.run_directory(seed), manifest, seed) as run:
        if not begin_stage(run, PROBE, force, verbose):
            return run.dirpath

        settings = manifest.section("probe")
        options = ProbeOptions(settings["test_fraction"], settings["l2"],
                               settings["max_iterations"],
                               settings["tolerance"])

        recording = load(run.record_file)
        grid = accuracy_curves(recording, settings["split_seed"],
                               settings["noise_baseline"], seed, options,
                               jobs, verbose)
        write_accuracy_table(run.probe_table, grid, run.provenance)

        run.mark_done(PROBE)
        return run.dirpath


def cmd_eval_sheldon(manifest, seed, force=False, verbose=False, jobs=1):
    with Run.create(manifest.run_directory(seed), manifest, seed) as run:
        if not begin_stage(run, EVAL_SHELDON, force, verbose):
            return run.dirpath

        settings = manifest.section("evaluate")
        criterion = CoverageCriterion(settings["radius"])
        episodes = settings["episodes"]
        agents = load_agents(run.checkpoint_dir)

        matrix = tally_preferences(agents, episodes, criterion,
                                   default_rng((seed, PREFERENCE_STREAM)))
        if not matrix.qualifying:
            warn("%s: no episode covered all landmarks" % run.dirpath,
                 EmptyEvaluationWarning)
        write_preference_table(run.preference_table, matrix, run.provenance)
        write_trio_table(run.trio_table, matrix, run.provenance)

        grid = sheldon_grid(agents, criterion, episodes,
                            default_rng((seed, SHELDON_STREAM)), verbose)
        write_sheldon_table(run.sheldon_table, grid, run.provenance)

        run.mark_done(EVAL_SHELDON)
        return run.dirpath


STAGE_COMMANDS = {TRAIN: cmd_train,
                  RECORD: cmd_record,
                  PROBE: cmd_probe,
                  EVAL_SHELDON: cmd_eval_sheldon}


def _run_seed(task):
    stage, manifest, seed, force, verbose = task
    return STAGE_COMMANDS[stage](manifest, seed, force, verbose)


def run_stage(stage, manifest, force=False, verbose=False, jobs=1):
    """Run stage for every seed of manifest.

    With jobs > 1 and several seeds, each seed is a worker process; with a
    single seed the jobs go to the stage itself (probe fits).
    """
    command = STAGE_COMMANDS[stage]
    seeds = manifest.seeds

    if verbose:
        print_timestamp("%s: scheme %s, seeds %s"
                        % (stage, manifest.scheme, seeds))

    if jobs > 1 and len(seeds) > 1:
        tasks = [(stage, manifest, seed, force, verbose) for seed in seeds]
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(_run_seed, tasks))

    return [command(manifest, seed, force, verbose, jobs) for seed in seeds]


def cmd_report(manifest, verbose=False):
    out_root = manifest.out_root
    run_directories = find_run_directories(out_root)
    progress(verbose, "report: %d run directories under %s"
             % (len(run_directories), out_root))

    report = scheme_report(run_directories)
    out_root.makedirs_p()
    provenance = report.provenance
    provenance["runs"] = len(run_directories)
    filename = write_scheme_table(out_root / SUMMARY_FILENAME, report,
                                  provenance)

    writer = ListWriter(sys.stdout)
    writer.writerow(["scheme", "population", "mean", "std"])
    for scheme, population, mean, std, _, _ in report.rows():
        writer.writerow([scheme, population, "%.3f" % mean, "%.3f" % std])

    return filename


def make_manifest(args):
    overrides = []
    if args.scheme is not None:
        overrides.append((["scheme"], args.scheme))
    if args.seeds:
        overrides.append((["seeds"], args.seeds))
    if getattr(args, "episodes", None) is not None:
        overrides.append((["train", "episodes"], args.episodes))
    if args.out is not None:
        overrides.append((["out"], args.out))
    for assignment in args.assignments:
        overrides.append(parse_assignment(assignment))

    return RunManifest.load(args.config, overrides)


def _add_manifest_options(parser):
    parser.add_argument("--config", metavar="FILE",
                        help="YAML run manifest")
    parser.add_argument("--scheme",
                        choices=["vanilla", "shuffle", "shared", "ensemble"],
                        help="training scheme")
    parser.add_argument("--seed", action="append", type=int, dest="seeds",
                        metavar="SEED", help="run this seed (repeatable;"
                        " replaces the manifest seed list)")
    parser.add_argument("--out", metavar="DIR",
                        help="output root (default $COOPNAV_OUTPUT_ROOT or"
                        " ./coopnav-runs)")
    parser.add_argument("--set", action="append", default=[],
                        dest="assignments", metavar="KEY=VALUE",
                        help="override a manifest value, e.g."
                        " train.gamma=0.9")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="print status updates")


def parse_options(args):
    description = ("Train MADDPG teams on cooperative navigation, record"
                   " their episodes, probe their intentions and test them"
                   " with scripted partners.")

    parser = ArgumentParser(description=description, prog="coopnav",
                            epilog=EXIT_STATUS_EPILOG,
                            formatter_class=RawDescriptionHelpFormatter)

    parser.add_argument("--version", action="version", version=__version__)

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True

    for stage in STAGES:
        subparser = subparsers.add_parser(stage, help="run the %s stage"
                                          % stage)
        _add_manifest_options(subparser)
        if stage == TRAIN:
            subparser.add_argument("--episodes", type=int,
                                   help="training episodes")
        subparser.add_argument("--force", action="store_true",
                               help="recompute even if already done")
        subparser.add_argument("--jobs", type=int, default=1, metavar="N",
                               help="worker processes (default 1)")

    subparser = subparsers.add_parser(REPORT, help="summarize every run"
                                      " under the output root")
    _add_manifest_options(subparser)

    subparser = subparsers.add_parser(INFO, help="show a run directory")
    subparser.add_argument("rundir", help="run directory")

    args = parser.parse_args(args)

    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")

    return args


def main(argv=sys.argv[1:]):
    args = parse_options(argv)

    try:
        if args.command == INFO:
            info(args.rundir)
            return EXIT_SUCCESS

        manifest = make_manifest(args)
        if args.command == REPORT:
            cmd_report(manifest, args.verbose)
        else:
            run_stage(args.command, manifest, args.force, args.verbose,
                      args.jobs)
    except CoopnavError as err:
        die("coopnav %s: %s" % (args.command, err), err.exit_status)
    except IOError as err:
        die("coopnav %s: %s" % (args.command, err), EXIT_FAILURE)

    return EXIT_SUCCESS


if __name__ == "__main__":
    sys.exit(main())
