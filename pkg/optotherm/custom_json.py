# This code is part of optotherm and is licensed under the MIT license.
"""
JSON encoding and decoding for types the standard library does not know.

Each special type gets a :class:`JSONCodec`; a
:class:`JSONSerializerDeserializer` bundles codecs into an encoder/decoder
pair that can be handed to :func:`json.dumps` / :func:`json.loads`.
"""
import json
from typing import Any, Callable, Iterable, Optional


class JSONCodec:
    """Encode and decode one family of objects through plain dicts.

    Parameters
    ----------
    cls : type or None
        Class handled by this codec (subclasses included). May be ``None``
        when both ``is_my_obj`` and ``is_my_dict`` are given.
    to_dict : Callable
        converts an object to a JSON-compatible dict
    from_dict : Callable
        rebuilds the object from the dict made by ``to_dict``
    is_my_obj : Callable, optional
        predicate selecting objects to encode; defaults to ``isinstance``
    is_my_dict : Callable, optional
        predicate selecting dicts to decode; defaults to matching the class
        marker written by :meth:`default`
    """
    def __init__(
        self,
        cls: Optional[type],
        to_dict: Callable[[Any], dict],
        from_dict: Callable[[dict], Any],
        is_my_obj: Optional[Callable[[Any], bool]] = None,
        is_my_dict: Optional[Callable[[dict], bool]] = None,
    ):
        self.cls = cls
        self.to_dict = to_dict
        self.from_dict = from_dict
        self.is_my_obj = is_my_obj or self._is_my_obj
        self.is_my_dict = is_my_dict or self._is_my_dict

    def _is_my_obj(self, obj: Any) -> bool:
        return isinstance(obj, self.cls)  # type: ignore[arg-type]

    def _is_my_dict(self, dct: dict) -> bool:
        if not dct.get(":is_custom:", False):
            return False
        return (dct.get("__class__") == self.cls.__name__  # type: ignore[union-attr]
                and dct.get("__module__") == self.cls.__module__)

    def default(self, obj: Any) -> Any:
        if not self.is_my_obj(obj):
            return obj
        dct: dict = {}
        if self.cls is not None:
            dct = {
                "__class__": obj.__class__.__qualname__,
                "__module__": obj.__class__.__module__,
                ":is_custom:": True,
            }
        dct.update(self.to_dict(obj))
        return dct

    def object_hook(self, dct: dict) -> Any:
        if self.is_my_dict(dct):
            return self.from_dict(dct)
        return dct


def custom_json_factory(
    codecs: Iterable[JSONCodec],
) -> tuple[type[json.JSONEncoder], type[json.JSONDecoder]]:
    """Create JSONEncoder/JSONDecoder classes that know ``codecs``.

    Classes rather than instances are returned, because that is what the
    ``cls`` argument of :func:`json.dumps` and :func:`json.loads` expects.
    """
    codecs = list(codecs)

    class CustomJSONEncoder(json.JSONEncoder):
        def default(self, obj):
            for codec in codecs:
                encoded = codec.default(obj)
                if encoded is not obj:
                    return encoded
            return super().default(obj)

    class CustomJSONDecoder(json.JSONDecoder):
        def __init__(self, *args, **kwargs):
            kwargs["object_hook"] = self.object_hook
            super().__init__(*args, **kwargs)

        def object_hook(self, dct):
            for codec in codecs:
                decoded = codec.object_hook(dct)
                if decoded is not dct:
                    return decoded
            return dct

    return CustomJSONEncoder, CustomJSONDecoder


class JSONSerializerDeserializer:
    """Serialize and deserialize objects as JSON using a set of codecs.

    Codecs may be registered after construction with :meth:`add_codec`.

    Attributes
    ----------
    encoder:
        subclass of ``JSONEncoder``; use as ``json.dumps(obj, cls=encoder)``
    decoder:
        subclass of ``JSONDecoder``; use as ``json.loads(text, cls=decoder)``
    """
    def __init__(self, codecs: Iterable[JSONCodec]):
        self.codecs: list[JSONCodec] = []
        for codec in codecs:
            self.add_codec(codec)
        self.encoder, self.decoder = custom_json_factory(self.codecs)

    def add_codec(self, codec: JSONCodec):
        """Register ``codec``; registering the same codec twice is a no-op"""
        if codec is None or codec in self.codecs:
            return
        self.codecs.append(codec)
        self.encoder, self.decoder = custom_json_factory(self.codecs)

    def serializer(self, obj: Any, *, indent: Optional[int] = None) -> str:
        """Dump ``obj`` to JSON text with sorted keys.

        Sorted keys and a fixed float representation make the output
        byte-identical for equal inputs.
        """
        return json.dumps(obj, cls=self.encoder, sort_keys=True,
                          indent=indent)

    def deserializer(self, text: str) -> Any:
        """Load JSON text, decoding any registered custom types"""
        return json.loads(text, cls=self.decoder)
