#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_util: errors, warning categories, progress output and tab-delimited
table helpers shared by every coopnav stage
"""

from datetime import datetime
import sys

from path import Path
from tabdelim import DictReader, ListWriter

TABLE_ENCODING = "utf-8"
TABLE_COMMENT = "#"

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_PREREQUISITE = 4
EXIT_PARTIAL_OUTPUT = 5
EXIT_FORMAT = 6


class CoopnavError(Exception):
    exit_status = EXIT_FAILURE


class EpisodeFinishedError(CoopnavError, RuntimeError):
    pass


class DimensionError(CoopnavError, ValueError):
    pass


class InsufficientReplayError(CoopnavError, RuntimeError):
    pass


class SchemeError(CoopnavError, ValueError):
    pass


class EmptyResultError(CoopnavError, ValueError):
    pass


class RecordFormatError(CoopnavError, IOError):
    exit_status = EXIT_FORMAT


class RecordVersionError(RecordFormatError):
    pass


class RecordTruncatedError(RecordFormatError):
    pass


class RecordDimensionError(RecordFormatError):
    pass


class RecordCorruptError(RecordFormatError):
    pass


class CheckpointError(CoopnavError, IOError):
    exit_status = EXIT_FORMAT


class ConfigError(CoopnavError, ValueError):
    exit_status = EXIT_CONFIG


class PrerequisiteError(CoopnavError, RuntimeError):
    exit_status = EXIT_PREREQUISITE


class PartialOutputError(CoopnavError, RuntimeError):
    exit_status = EXIT_PARTIAL_OUTPUT


class DegenerateProbeWarning(UserWarning):
    pass


class MissingRunWarning(UserWarning):
    pass


class EmptyEvaluationWarning(UserWarning):
    pass


def die(msg="Unexpected error.", exit_status=EXIT_FAILURE):
    print(msg, file=sys.stderr)
    sys.exit(exit_status)


def print_timestamp(msg=""):
    print(">> %s: %s" % (datetime.now().isoformat(), msg), file=sys.stderr)


def progress(verbose, msg):
    if verbose:
        print(">> %s" % msg, file=sys.stderr)


def ignore_comments(iterable):
    return (item for item in iterable if not item.startswith(TABLE_COMMENT))


def format_value(value):
    """Render a table cell; floats get a fixed, platform-stable format."""
    if isinstance(value, float):
        return "%.6f" % value
    return str(value)


def write_table(filename, fieldnames, rows, provenance=None):
    """Write a tab-delimited table with `# key=value` provenance lines.

    rows is an iterable of sequences ordered like fieldnames.
    """
    filepath = Path(filename)
    with open(filepath, "w", encoding=TABLE_ENCODING, newline="") as outfile:
        if provenance:
            for key in sorted(provenance):
                print("%s %s=%s" % (TABLE_COMMENT, key, provenance[key]),
                      file=outfile)

        writer = ListWriter(outfile)
        writer.writerow(list(fieldnames))
        for row in rows:
            writer.writerow([format_value(value) for value in row])

    return filepath


def read_table(filename):
    """Return (provenance dict, list of row dicts) from write_table output."""
    provenance = {}
    with open(filename, encoding=TABLE_ENCODING, newline="") as infile:
        lines = infile.read().splitlines()

    for line in lines:
        if line.startswith(TABLE_COMMENT):
            key, _, value = line[len(TABLE_COMMENT):].strip().partition("=")
            provenance[key] = value

    rows = [dict(row) for row in DictReader(ignore_comments(lines))]

    return provenance, rows
