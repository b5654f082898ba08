"""
_hdf5: parameter checkpoint files

One file per ParamSet. The root node attributes are the self-describing
header; the arrays params, target, adam_m and adam_v each hold a flat
little-endian float64 vector in ParamSet order (layer-major, weights then
bias).
"""

from numpy import array, dtype, inf
from path import Path
import tables

from ._mlp import MLPSpec, ParamSet, flatten, unflatten
from ._util import CheckpointError

CHECKPOINT_FORMAT_VERSION = 1

PAYLOAD_DTYPE = dtype("<f8")
PAYLOAD_NAMES = ["params", "target", "adam_m", "adam_v"]

HEADER_ATTRS = ["coopnav_format_version", "input_dim", "hidden_dims",
                "output_dim", "output_activation", "num_layers", "adam_step"]


def _open_file(filename, *args, **kwargs):
    if "buffer_times" not in kwargs:
        # eliminate spurious PerformanceWarning
        kwargs["buffer_times"] = inf

    return tables.open_file(str(filename), *args, **kwargs)


def save_params(filename, params, **extra_attrs):
    """Write params to filename, overwriting it.

    extra_attrs (manifest hash, seed, scheme, ...) are stored next to the
    header attributes.
    """
    filepath = Path(filename).expand()
    spec = params.spec

    with _open_file(filepath, mode="w") as h5file:
        attrs = h5file.root._v_attrs
        attrs.coopnav_format_version = CHECKPOINT_FORMAT_VERSION
        attrs.input_dim = spec.input_dim
        attrs.hidden_dims = array(spec.hidden_dims)
        attrs.output_dim = spec.output_dim
        attrs.output_activation = spec.output_activation
        attrs.num_layers = spec.num_layers
        attrs.adam_step = params.adam_step

        for key, value in sorted(extra_attrs.items()):
            setattr(attrs, key, value)

        payloads = [params.arrays, params.target, params.adam_m,
                    params.adam_v]
        for name, arrays in zip(PAYLOAD_NAMES, payloads):
            h5file.create_array("/", name,
                                obj=flatten(arrays).astype(PAYLOAD_DTYPE))

    return filepath


def read_attrs(filename):
    """Return the header and extra attributes of a checkpoint as a dict."""
    with _open_file(Path(filename).expand(), mode="r") as h5file:
        attrs = h5file.root._v_attrs
        return dict((name, attrs[name]) for name in attrs._v_attrnamesuser)


def load_params(filename):
    filepath = Path(filename).expand()
    if not filepath.isfile():
        raise CheckpointError("Could not find checkpoint: %s" % filepath)

    with _open_file(filepath, mode="r") as h5file:
        attrs = h5file.root._v_attrs
        try:
            header = dict((name, attrs[name]) for name in HEADER_ATTRS)
        except KeyError as err:
            raise CheckpointError("%s: missing header attribute %s"
                                  % (filepath, err))

        format_version = int(header["coopnav_format_version"])
        if format_version > CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError("%s has format version %d, but this"
                                  " software only supports %d"
                                  % (filepath, format_version,
                                     CHECKPOINT_FORMAT_VERSION))

        spec = MLPSpec(int(header["input_dim"]),
                       tuple(int(dim) for dim in header["hidden_dims"]),
                       int(header["output_dim"]),
                       str(header["output_activation"]))

        if int(header["num_layers"]) != spec.num_layers:
            raise CheckpointError("%s: layer count %s does not match"
                                  " its dimensions" % (filepath,
                                                       header["num_layers"]))

        try:
            payloads = [unflatten(spec, h5file.get_node("/", name).read())
                        for name in PAYLOAD_NAMES]
        except (tables.NoSuchNodeError, ValueError) as err:
            raise CheckpointError("%s: bad payload: %s" % (filepath, err))

    params, target, adam_m, adam_v = payloads

    return ParamSet(spec, params, target, adam_m, adam_v,
                    int(header["adam_step"]))
