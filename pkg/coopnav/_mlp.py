#!/usr/bin/env python

from __future__ import absolute_import, division, print_function

"""
_mlp: two-hidden-layer perceptrons with hand-written reverse-mode
gradients, Adam and target-network tracking

Parameters are kept as a flat list of arrays in layer-major order,
weights (out x in) before bias: [W1, b1, W2, b2, W3, b3]. The same order
is used by checkpoint files.
"""

from collections import namedtuple

from numpy import (asarray, atleast_2d, concatenate, float64, maximum, sqrt,
                   tanh, zeros, zeros_like)

from ._util import DimensionError

HIDDEN_DIMS = (128, 128)

IDENTITY = "identity"
LOGISTIC = "logistic"
OUTPUT_ACTIVATIONS = frozenset([IDENTITY, LOGISTIC])

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

ForwardTrace = namedtuple("ForwardTrace", ["input", "pre1", "h1", "pre2",
                                           "h2", "pre_output", "output"])


class MLPSpec(namedtuple("MLPSpec", ["input_dim", "hidden_dims",
                                     "output_dim", "output_activation"])):
    """Shape and output squashing of one network.

    Hidden layers always use rectifiers.
    """
    __slots__ = ()

    def __new__(cls, input_dim, hidden_dims=HIDDEN_DIMS, output_dim=1,
                output_activation=IDENTITY):
        hidden_dims = tuple(int(dim) for dim in hidden_dims)
        if len(hidden_dims) != 2:
            raise DimensionError("exactly two hidden layers are supported")
        if output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError("unknown output activation: %r"
                             % output_activation)

        return super(MLPSpec, cls).__new__(cls, int(input_dim), hidden_dims,
                                           int(output_dim), output_activation)

    @property
    def layer_dims(self):
        dims = (self.input_dim,) + self.hidden_dims + (self.output_dim,)
        return list(zip(dims[:-1], dims[1:]))

    @property
    def num_layers(self):
        return len(self.layer_dims)

    @property
    def shapes(self):
        res = []
        for fan_in, fan_out in self.layer_dims:
            res.append((fan_out, fan_in))
            res.append((fan_out,))

        return res

    @property
    def num_params(self):
        return sum(_size(shape) for shape in self.shapes)


def _size(shape):
    res = 1
    for dim in shape:
        res *= dim

    return res


def flatten(arrays):
    return concatenate([asarray(item, dtype=float64).ravel()
                        for item in arrays])


def unflatten(spec, flat):
    flat = asarray(flat, dtype=float64)
    if flat.shape != (spec.num_params,):
        raise DimensionError("expected %d parameters, got %s"
                             % (spec.num_params, flat.shape))

    res = []
    start = 0
    for shape in spec.shapes:
        end = start + _size(shape)
        res.append(flat[start:end].reshape(shape).copy())
        start = end

    return res


class ParamSet(object):
    """Live parameters of one network, its target copy and Adam moments."""

    def __init__(self, spec, arrays, target=None, adam_m=None, adam_v=None,
                 adam_step=0):
        self.spec = spec
        self.arrays = [asarray(item, dtype=float64).copy() for item in arrays]
        _check_shapes(spec, self.arrays)

        if target is None:
            target = self.arrays
        self.target = [asarray(item, dtype=float64).copy() for item in target]
        _check_shapes(spec, self.target)

        if adam_m is None:
            adam_m = [zeros_like(item) for item in self.arrays]
        if adam_v is None:
            adam_v = [zeros_like(item) for item in self.arrays]
        self.adam_m = [asarray(item, dtype=float64).copy() for item in adam_m]
        self.adam_v = [asarray(item, dtype=float64).copy() for item in adam_v]
        _check_shapes(spec, self.adam_m)
        _check_shapes(spec, self.adam_v)

        self.adam_step = int(adam_step)

    def __repr__(self):
        return "<ParamSet %d->%s->%d %s>" % (self.spec.input_dim,
                                             self.spec.hidden_dims,
                                             self.spec.output_dim,
                                             self.spec.output_activation)

    @classmethod
    def initialize(cls, spec, rng):
        """Weights uniform in +-1/sqrt(fan_in), biases zero."""
        arrays = []
        for fan_in, fan_out in spec.layer_dims:
            bound = 1.0 / sqrt(fan_in)
            arrays.append(rng.uniform(-bound, bound, (fan_out, fan_in)))
            arrays.append(zeros(fan_out))

        return cls(spec, arrays)

    def copy(self):
        return ParamSet(self.spec, self.arrays, self.target, self.adam_m,
                        self.adam_v, self.adam_step)

    def layers(self, target=False):
        """Return [(weight, bias), ...] from the live or target copy."""
        arrays = self.target if target else self.arrays
        return list(zip(arrays[0::2], arrays[1::2]))

    def update_target(self, tau):
        soft_update(self.target, self.arrays, tau)


def _check_shapes(spec, arrays):
    shapes = [item.shape for item in arrays]
    if shapes != spec.shapes:
        raise DimensionError("parameter shapes %s do not match %s"
                             % (shapes, spec.shapes))


def relu(values):
    return maximum(values, 0.0)


def logistic(values):
    # tanh form does not overflow for large |values|
    return 0.5 * (1.0 + tanh(0.5 * values))


def forward(params, inputs, target=False):
    """Run the network on one input vector or a batch of row vectors.

    Returns a ForwardTrace holding every intermediate value needed by
    backward(). Hidden activations are rectifier outputs, so >= 0.
    """
    spec = params.spec
    inputs = asarray(inputs, dtype=float64)
    if inputs.shape[-1] != spec.input_dim:
        raise DimensionError("input has %d values, network expects %d"
                             % (inputs.shape[-1], spec.input_dim))

    (weight1, bias1), (weight2, bias2), (weight3, bias3) = \
        params.layers(target)

    pre1 = inputs @ weight1.T + bias1
    h1 = relu(pre1)
    pre2 = h1 @ weight2.T + bias2
    h2 = relu(pre2)
    pre_output = h2 @ weight3.T + bias3

    if spec.output_activation == LOGISTIC:
        output = logistic(pre_output)
    else:
        output = pre_output

    return ForwardTrace(inputs, pre1, h1, pre2, h2, pre_output, output)


def backward(trace, params, output_grad, target=False):
    """Gradients of sum(output * output_grad) by reverse accumulation.

    Batched traces sum over rows. Returns (parameter gradients in
    ParamSet order, gradient with respect to the input).
    """
    spec = params.spec
    output_grad = asarray(output_grad, dtype=float64)
    if output_grad.shape != trace.output.shape:
        raise DimensionError("output gradient shape %s does not match"
                             " output %s" % (output_grad.shape,
                                             trace.output.shape))

    batched = trace.input.ndim == 2
    inputs, pre1, h1, pre2, h2 = [atleast_2d(item) for item in trace[:5]]
    output = atleast_2d(trace.output)
    output_grad = atleast_2d(output_grad)

    (weight1, _), (weight2, _), (weight3, _) = params.layers(target)

    if spec.output_activation == LOGISTIC:
        delta3 = output_grad * output * (1.0 - output)
    else:
        delta3 = output_grad

    grad_weight3 = delta3.T @ h2
    grad_bias3 = delta3.sum(0)

    delta2 = (delta3 @ weight3) * (pre2 > 0)
    grad_weight2 = delta2.T @ h1
    grad_bias2 = delta2.sum(0)

    delta1 = (delta2 @ weight2) * (pre1 > 0)
    grad_weight1 = delta1.T @ inputs
    grad_bias1 = delta1.sum(0)

    input_grad = delta1 @ weight1
    if not batched:
        input_grad = input_grad[0]

    grads = [grad_weight1, grad_bias1, grad_weight2, grad_bias2,
             grad_weight3, grad_bias3]

    return grads, input_grad


def global_norm(grads):
    return sqrt(sum(float((grad ** 2).sum()) for grad in grads))


def clip_by_global_norm(grads, max_norm):
    """Scale grads down so their joint L2 norm is at most max_norm."""
    if max_norm is None:
        return grads

    norm = global_norm(grads)
    if norm <= max_norm:
        return grads

    scale = max_norm / norm
    return [grad * scale for grad in grads]


def adam_step(params, grads, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2,
              epsilon=ADAM_EPSILON):
    """One bias-corrected Adam descent step, in place; returns params."""
    if len(grads) != len(params.arrays):
        raise DimensionError("got %d gradients for %d parameter arrays"
                             % (len(grads), len(params.arrays)))

    params.adam_step += 1
    correction1 = 1.0 - beta1 ** params.adam_step
    correction2 = 1.0 - beta2 ** params.adam_step

    zipper = zip(params.arrays, grads, params.adam_m, params.adam_v)
    for array, grad, moment1, moment2 in zipper:
        if grad.shape != array.shape:
            raise DimensionError("gradient shape %s does not match"
                                 " parameter %s" % (grad.shape, array.shape))

        moment1 *= beta1
        moment1 += (1.0 - beta1) * grad
        moment2 *= beta2
        moment2 += (1.0 - beta2) * grad * grad

        array -= lr * (moment1 / correction1) / (sqrt(moment2 / correction2) +
                                                 epsilon)

    return params


def soft_update(target, source, tau):
    """target <- (1 - tau) * target + tau * source, in place, elementwise."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]: %r" % tau)
    if len(target) != len(source):
        raise DimensionError("target and source differ in array count")

    for target_array, source_array in zip(target, source):
        if target_array.shape != source_array.shape:
            raise DimensionError("target shape %s does not match source %s"
                                 % (target_array.shape, source_array.shape))

        target_array *= 1.0 - tau
        target_array += tau * source_array

    return target
