# This code is part of optotherm and is licensed under the MIT license.
# custom_codecs.py: A place to keep various custom JSONCodec instances

import functools
import importlib
import pathlib

import numpy as np

from optotherm.custom_json import JSONCodec
from optotherm.settings.models import SettingsBaseModel


def _import_class(module: str, qualname: str):
    obj = importlib.import_module(module)
    for name in qualname.split('.'):
        obj = getattr(obj, name)
    return obj


def default_from_dict(dct):
    dct = dict(dct)  # make a copy
    module = dct.pop("__module__")
    qualname = dct.pop("__class__")
    del dct[":is_custom:"]

    cls = _import_class(module, qualname)
    return cls(**dct)


def inherited_is_my_dict(dct, cls):
    if not (dct.get(":is_custom:") and "__module__" in dct
            and "__class__" in dct):
        return False
    stored = _import_class(dct["__module__"], dct["__class__"])
    return isinstance(stored, type) and issubclass(stored, cls)


def is_npy_scalar_dict(dct):
    return (dct.get(":is_custom:") and "dtype" in dct
            and "value" in dct and "shape" not in dct)


PATH_CODEC = JSONCodec(
    cls=pathlib.PurePath,
    to_dict=lambda p: {"path": str(p)},
    from_dict=lambda dct: pathlib.Path(dct["path"]),
    is_my_dict=lambda dct: (dct.get(":is_custom:") is True
                            and set(dct) == {"__class__", "__module__",
                                             ":is_custom:", "path"}),
)


# np.float64 subclasses float and never reaches this codec; the json module
# writes it as a plain number.
NPY_SCALAR_CODEC = JSONCodec(
    cls=None,
    to_dict=lambda obj: {
        ":is_custom:": True,
        "dtype": str(obj.dtype),
        "value": obj.item(),
    },
    from_dict=lambda dct: np.dtype(dct["dtype"]).type(dct["value"]),
    is_my_obj=lambda obj: isinstance(obj, np.generic),
    is_my_dict=is_npy_scalar_dict,
)


# Values are stored as nested lists of Python numbers so that the JSON text
# stays readable; repr of a float64 round-trips exactly.
NUMPY_CODEC = JSONCodec(
    cls=np.ndarray,
    to_dict=lambda obj: {
        "dtype": str(obj.dtype),
        "shape": list(obj.shape),
        "values": obj.tolist(),
    },
    from_dict=lambda dct: np.asarray(
        dct["values"], dtype=np.dtype(dct["dtype"])
    ).reshape(dct["shape"]),
)


SETTINGS_CODEC = JSONCodec(
    cls=SettingsBaseModel,
    to_dict=lambda obj: {field: getattr(obj, field) for field in obj.__fields__},
    from_dict=default_from_dict,
    is_my_dict=functools.partial(inherited_is_my_dict, cls=SettingsBaseModel),
)
