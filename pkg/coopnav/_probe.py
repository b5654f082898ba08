#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_probe: linear softmax read-outs that predict each agent's final
landmark from another agent's recorded features
"""

from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from warnings import warn

from numpy import (argmax, argmin, asarray, bincount, column_stack, exp, eye,
                   float64, full, int64, ones, sqrt, zeros)
from numpy.linalg import norm
from numpy.random import default_rng

from ._record import FIELD_DIMS, HIDDEN_DIM
from ._util import (DegenerateProbeWarning, DimensionError, EmptyResultError,
                    print_timestamp, progress, write_table)
from ._world import HORIZON, NUM_AGENTS, NUM_LANDMARKS

NUM_CLASSES = NUM_LANDMARKS

DEFAULT_TEST_FRACTION = 0.25
DEFAULT_L2 = 1e-3
DEFAULT_MAX_ITERATIONS = 2000
DEFAULT_TOLERANCE = 1e-5

NOISE = "noise"

ACCURACY_FIELDNAMES = ["predictor", "target", "source", "timestep",
                       "test_accuracy", "majority_accuracy"]


class FeatureSource(namedtuple("FeatureSource", ["variant", "dim"])):
    __slots__ = ()

    def __new__(cls, variant):
        if variant in FIELD_DIMS:
            dim = FIELD_DIMS[variant]
        elif variant == NOISE:
            dim = HIDDEN_DIM
        else:
            raise ValueError("unknown feature source: %r" % variant)

        return super(FeatureSource, cls).__new__(cls, variant, dim)

    def __str__(self):
        return self.variant

RECORDED_SOURCES = tuple(FeatureSource(name) for name in FIELD_DIMS)
NOISE_SOURCE = FeatureSource(NOISE)

ProbeOptions = namedtuple("ProbeOptions", ["test_fraction", "l2",
                                           "max_iterations", "tolerance"])
ProbeOptions.__new__.__defaults__ = (DEFAULT_TEST_FRACTION, DEFAULT_L2,
                                     DEFAULT_MAX_ITERATIONS,
                                     DEFAULT_TOLERANCE)


class ProbeDataset(namedtuple("ProbeDataset", ["features", "labels",
                                               "train_index",
                                               "test_index"])):
    __slots__ = ()

    @property
    def train(self):
        return self.features[self.train_index], self.labels[self.train_index]

    @property
    def test(self):
        return self.features[self.test_index], self.labels[self.test_index]


class ProbeModel(object):
    """Softmax classifier over standardized features.

    weights: NUM_CLASSES x d; bias: NUM_CLASSES. center and scale are the
    training-split column means and standard deviations.
    """
    def __init__(self, weights, bias, center, scale, degenerate=False):
        self.weights = asarray(weights, dtype=float64)
        self.bias = asarray(bias, dtype=float64)
        self.center = asarray(center, dtype=float64)
        self.scale = asarray(scale, dtype=float64)
        self.degenerate = degenerate

    def __repr__(self):
        return "<ProbeModel d=%d%s>" % (self.weights.shape[1],
                                        " degenerate" if self.degenerate
                                        else "")

    def standardize(self, features):
        return (asarray(features, dtype=float64) - self.center) / self.scale

    def scores(self, features):
        return self.standardize(features) @ self.weights.T + self.bias

    def predict_proba(self, features):
        return softmax(self.scores(features))

    def predict(self, features):
        # argmax takes the lowest class on ties
        return argmax(self.scores(features), axis=1)

    def accuracy(self, features, labels):
        labels = asarray(labels)
        if not len(labels):
            return 0.0

        return float((self.predict(features) == labels).mean())


def softmax(scores):
    shifted = scores - scores.max(axis=-1, keepdims=True)
    res = exp(shifted)
    return res / res.sum(axis=-1, keepdims=True)


def final_landmark_label(episode, agent):
    """Index of the landmark nearest the agent's final position."""
    if not 0 <= agent < NUM_AGENTS:
        raise DimensionError("no such agent: %r" % agent)

    landmarks = asarray(episode.landmarks, dtype=float64)
    position = asarray(episode.final_positions, dtype=float64)[agent]

    return int(argmin(norm(landmarks - position, axis=1)))


def final_landmark_labels(records):
    """episodes x NUM_AGENTS array of final landmark labels."""
    if hasattr(records, "final_positions"):
        landmarks = asarray(records.landmarks, dtype=float64)
        positions = asarray(records.final_positions, dtype=float64)
    else:
        landmarks = asarray([episode.landmarks for episode in records],
                            dtype=float64)
        positions = asarray([episode.final_positions for episode in records],
                            dtype=float64)

    # episodes x agents x landmarks
    distances = norm(positions[:, :, None, :] - landmarks[:, None, :, :],
                     axis=3)

    return argmin(distances, axis=2)


def split_episodes(num_episodes, rng, test_fraction=DEFAULT_TEST_FRACTION):
    """Return (train, test) episode indexes, each sorted."""
    if not 0 < test_fraction < 1:
        raise ValueError("test fraction must be in (0, 1): %r"
                         % test_fraction)

    num_test = int(round(num_episodes * test_fraction))
    order = rng.permutation(num_episodes)

    return sorted(order[num_test:]), sorted(order[:num_test])


def _field_array(records, name):
    if hasattr(records, "field"):
        return records.field(name)

    return asarray([episode.field(name) for episode in records])


def source_features(records, predictor, source, timestep, noise_rng=None):
    """Rows of the predictor's source vector at timestep, one per episode."""
    if not 0 <= predictor < NUM_AGENTS:
        raise DimensionError("no such agent: %r" % predictor)
    if not 0 <= timestep < HORIZON:
        raise DimensionError("timestep out of range: %r" % timestep)

    if source.variant == NOISE:
        if noise_rng is None:
            noise_rng = default_rng((predictor, timestep))
        return noise_rng.standard_normal((len(records), source.dim))

    features = _field_array(records, source.variant)[:, timestep, predictor]
    return asarray(features, dtype=float64)


def build_dataset(records, predictor, target, source, timestep, split_rng,
                  test_fraction=DEFAULT_TEST_FRACTION, noise_rng=None,
                  labels=None):
    """One row per episode, split 75/25 by episode.

    labels may be a precomputed final_landmark_labels() array.
    """
    if not len(records):
        raise EmptyResultError("no episodes to build a probe dataset from")
    if not 0 <= target < NUM_AGENTS:
        raise DimensionError("no such agent: %r" % target)

    features = source_features(records, predictor, source, timestep,
                               noise_rng)
    if labels is None:
        labels = final_landmark_labels(records)
    labels = asarray(labels, dtype=int64)[:, target]

    train_index, test_index = split_episodes(len(records), split_rng,
                                             test_fraction)

    return ProbeDataset(features, labels, asarray(train_index, dtype=int64),
                        asarray(test_index, dtype=int64))


def majority_class(labels):
    return int(argmax(bincount(labels, minlength=NUM_CLASSES)))


def majority_accuracy(dataset):
    """Test accuracy of always predicting the training majority class."""
    _, train_labels = dataset.train
    _, test_labels = dataset.test
    if not len(test_labels) or not len(train_labels):
        return 0.0

    return float((test_labels == majority_class(train_labels)).mean())


def _standardization(features):
    center = features.mean(axis=0)
    scale = features.std(axis=0)
    scale[scale == 0] = 1.0

    return center, scale


def fit_softmax(features, labels, l2=DEFAULT_L2,
                max_iterations=DEFAULT_MAX_ITERATIONS,
                tolerance=DEFAULT_TOLERANCE):
    """Full-batch gradient descent on mean cross-entropy plus an L2 penalty
    on the weights (not the bias), from zero.

    features must already be standardized. Returns (weights, bias,
    iterations used).
    """
    num_rows, dim = features.shape
    targets = eye(NUM_CLASSES)[labels]

    # step 1/L with L bounding the Hessian of the objective
    design = column_stack([features, ones(num_rows)])
    largest = norm(design, 2) if num_rows else 0.0
    lipschitz = 0.5 * largest ** 2 / max(num_rows, 1) + l2
    step = 1.0 / lipschitz

    weights = zeros((NUM_CLASSES, dim))
    bias = zeros(NUM_CLASSES)

    for iteration in range(max_iterations):
        residual = softmax(features @ weights.T + bias) - targets
        grad_weights = residual.T @ features / num_rows + l2 * weights
        grad_bias = residual.mean(axis=0)

        grad_norm = sqrt((grad_weights ** 2).sum() + (grad_bias ** 2).sum())
        if grad_norm < tolerance:
            return weights, bias, iteration

        weights -= step * grad_weights
        bias -= step * grad_bias

    return weights, bias, max_iterations


def train_probe(dataset, l2=DEFAULT_L2, max_iterations=DEFAULT_MAX_ITERATIONS,
                tolerance=DEFAULT_TOLERANCE):
    """Fit a ProbeModel on the training split; return (model, accuracy).

    Training data with a single class gives a majority-class model flagged
    degenerate, with a DegenerateProbeWarning.
    """
    train_features, train_labels = dataset.train
    test_features, test_labels = dataset.test
    if not len(train_labels):
        raise EmptyResultError("probe dataset has no training rows")

    center, scale = _standardization(train_features)
    dim = train_features.shape[1]

    if len(set(train_labels.tolist())) < 2:
        warn("probe training data holds a single class; using the"
             " majority-class model", DegenerateProbeWarning)
        bias = full(NUM_CLASSES, -1.0)
        bias[majority_class(train_labels)] = 1.0
        model = ProbeModel(zeros((NUM_CLASSES, dim)), bias, center, scale,
                           degenerate=True)
    else:
        weights, bias, _ = fit_softmax((train_features - center) / scale,
                                       train_labels, l2, max_iterations,
                                       tolerance)
        model = ProbeModel(weights, bias, center, scale)

    return model, model.accuracy(test_features, test_labels)


class AccuracyGrid(object):
    """Probe accuracies indexed [predictor, target, source, timestep]."""
    def __init__(self, sources, accuracy=None, majority=None):
        self.sources = tuple(sources)
        shape = (NUM_AGENTS, NUM_AGENTS, len(self.sources), HORIZON)
        self.accuracy = zeros(shape) if accuracy is None \
            else asarray(accuracy, dtype=float64)
        self.majority = zeros(shape) if majority is None \
            else asarray(majority, dtype=float64)

    def __repr__(self):
        return "<AccuracyGrid sources=%s>" % ",".join(map(str, self.sources))

    def source_index(self, source):
        return [str(item) for item in self.sources].index(str(source))

    def curve(self, predictor, target, source):
        return self.accuracy[predictor, target, self.source_index(source)]

    def cells(self):
        return product(range(NUM_AGENTS), range(NUM_AGENTS),
                       range(len(self.sources)), range(HORIZON))

    def rows(self):
        for predictor, target, source, timestep in self.cells():
            index = predictor, target, source, timestep
            yield (predictor, target, str(self.sources[source]), timestep,
                   float(self.accuracy[index]), float(self.majority[index]))


def _cell_dataset(records, labels, cell, sources, split_seed, noise_seed,
                  options):
    predictor, target, source_index, timestep = cell
    source = sources[source_index]
    noise_rng = None
    if source.variant == NOISE:
        noise_rng = default_rng((noise_seed, predictor, target, timestep))

    return build_dataset(records, predictor, target, source, timestep,
                         default_rng(split_seed), options.test_fraction,
                         noise_rng, labels)


def _fit_cell(records, labels, cell, sources, split_seed, noise_seed,
              options):
    dataset = _cell_dataset(records, labels, cell, sources, split_seed,
                            noise_seed, options)
    _, accuracy = train_probe(dataset, options.l2, options.max_iterations,
                              options.tolerance)

    return accuracy, majority_accuracy(dataset)


# records and labels of the current worker process, set once per worker
_worker_inputs = {}


def _init_worker(records, labels):
    _worker_inputs["records"] = records
    _worker_inputs["labels"] = labels


def _fit_worker_cell(task):
    return _fit_cell(_worker_inputs["records"], _worker_inputs["labels"],
                     *task)


def accuracy_curves(records, split_seed=0, noise_baseline=False,
                    noise_seed=0, options=ProbeOptions(), jobs=1,
                    verbose=False):
    """Fit one probe per (predictor, target, source, timestep) cell.

    Every cell uses the same episode split, drawn from split_seed. With
    jobs > 1 the cells are fit in a process pool; each worker receives the
    episodes once and builds its datasets one cell at a time. Results do
    not depend on jobs.
    """
    if not len(records):
        raise EmptyResultError("no episodes to probe")

    sources = RECORDED_SOURCES
    if noise_baseline:
        sources += (NOISE_SOURCE,)

    grid = AccuracyGrid(sources)
    labels = final_landmark_labels(records)
    cells = list(grid.cells())

    if verbose:
        print_timestamp("fitting %d probes on %d episodes"
                        % (len(cells), len(records)))

    if jobs > 1:
        tasks = [(cell, sources, split_seed, noise_seed, options)
                 for cell in cells]
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(records, labels)) as executor:
            results = list(executor.map(_fit_worker_cell, tasks,
                                        chunksize=HORIZON))
    else:
        results = []
        for cell in cells:
            results.append(_fit_cell(records, labels, cell, sources,
                                     split_seed, noise_seed, options))
            if cell[3] == HORIZON - 1:
                progress(verbose, "predictor %d target %d source %s done"
                         % (cell[0], cell[1], sources[cell[2]]))

    for cell, (accuracy, majority) in zip(cells, results):
        grid.accuracy[cell] = accuracy
        grid.majority[cell] = majority

    return grid


def write_accuracy_table(filename, grid, provenance=None):
    return write_table(filename, ACCURACY_FIELDNAMES, grid.rows(), provenance)
