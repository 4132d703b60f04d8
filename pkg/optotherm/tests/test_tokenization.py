# This code is part of optotherm and is licensed under the MIT license.
import abc
import json
from typing import Optional

import numpy as np
import pytest

from optotherm.tokenization import (
    JSON_HANDLER,
    TOKENIZABLE_CLASS_REGISTRY,
    Tokenizable,
    TokenizableKey,
    get_class,
    import_qualname,
    tokenize,
)


class Leaf(Tokenizable):
    def __init__(self, a, b=2):
        self.a = a
        self.b = b

    def _to_dict(self):
        return {"a": self.a, "b": self.b}

    @classmethod
    def _from_dict(cls, dct):
        return cls(**dct)

    def __repr__(self):
        return f"Leaf({self.a}, {self.b})"

    @classmethod
    def _defaults(cls):
        return super()._defaults()


class Container(Tokenizable):
    def __init__(self, obj, lst, dct):
        self.obj = obj
        self.lst = lst
        self.dct = dct

    def _to_dict(self):
        return {'obj': self.obj, 'lst': self.lst, 'dct': self.dct}

    @classmethod
    def _from_dict(cls, dct):
        return cls(**dct)

    def __repr__(self):
        return f"Container({self.obj}, {self.lst}, {self.dct})"

    @classmethod
    def _defaults(cls):
        return super()._defaults()


class TokenizableTestsMixin(abc.ABC):

    # set this to the `Tokenizable` subclass you are testing
    cls: type[Tokenizable]
    repr: Optional[str] = None

    @pytest.fixture
    def instance(self):
        """Define instance to test with here.

        """
        ...

    def test_to_dict_roundtrip(self, instance):
        ser = instance.to_dict()
        deser = self.cls.from_dict(ser)

        assert instance == deser
        assert instance.key == deser.key

    def test_to_keyed_dict_refers_by_key(self, instance):
        keyed = instance.to_keyed_dict()
        assert keyed['__qualname__'] == self.cls.__qualname__
        assert keyed['__module__'] == self.cls.__module__

    def test_to_shallow_dict(self, instance):
        shallow = instance.to_shallow_dict()
        assert set(instance._to_dict()) <= set(shallow)

    def test_json_roundtrip(self, instance):
        text = instance.to_json()
        assert self.cls.from_json(text) == instance
        # sorted keys and shortest floats make the text itself stable
        assert self.cls.from_json(text).to_json() == text

    def test_key_stable(self, instance):
        rebuilt = self.cls.from_dict(instance.to_dict())
        assert isinstance(instance.key, TokenizableKey)
        assert instance.key.prefix == self.cls.__qualname__
        assert str(rebuilt.key) == str(instance.key)

    def test_repr(self, instance):
        if self.repr is None:
            assert isinstance(repr(instance), str)
        else:
            assert repr(instance) == self.repr


class TestTokenizable(TokenizableTestsMixin):

    cls = Container
    repr = "Container(Leaf(Leaf(foo, 2), 2), [Leaf(foo, 2), 0], {'leaf': Leaf(foo, 2), 'a': 'b'})"

    @pytest.fixture
    def instance(self):
        leaf = Leaf("foo")
        bar = Leaf(leaf)
        return Container(bar, [leaf, 0], {"leaf": leaf, "a": "b"})

    def test_to_dict_deep(self, instance):
        def leaf_dict(a):
            return {'__module__': __name__, '__qualname__': "Leaf", "a": a,
                    "b": 2, ':version:': 1}

        assert instance.to_dict() == {
            '__qualname__': "Container",
            '__module__': __name__,
            'obj': leaf_dict(leaf_dict("foo")),
            'lst': [leaf_dict("foo"), 0],
            'dct': {"leaf": leaf_dict("foo"), "a": "b"},
            ':version:': 1,
        }

    def test_to_keyed_dict(self, instance):
        leaf = Leaf("foo")
        bar = Leaf(leaf)
        keyed = instance.to_keyed_dict()
        assert keyed['obj'] == {":opto-key:": str(bar.key)}
        assert keyed['lst'] == [{":opto-key:": str(leaf.key)}, 0]
        assert keyed['dct'] == {'leaf': {":opto-key:": str(leaf.key)},
                                'a': 'b'}

    def test_defaults_stripped(self):
        leaf = Leaf("foo")
        assert 'b' in leaf.to_dict()
        assert 'b' not in leaf.to_dict(include_defaults=False)
        assert Leaf.defaults() == {'b': 2, ':version:': 1}

    def test_copy_with_replacements(self):
        leaf = Leaf("foo")
        other = leaf.copy_with_replacements(b=3)
        assert other.b == 3
        assert other != leaf
        with pytest.raises(TypeError, match="Invalid replacement keys"):
            leaf.copy_with_replacements(c=1)


def test_equal_content_equal_key():
    assert Leaf("foo") == Leaf("foo")
    assert Leaf("foo").key == Leaf("foo").key
    assert Leaf("foo") != Leaf("bar")
    assert hash(Leaf("foo")) == hash(Leaf("foo"))


def test_key_token_is_md5_of_content():
    key = Leaf("foo").key
    assert key.token == tokenize(Leaf("foo"))
    assert len(key.token) == 32


def test_array_content_changes_key():
    a = Leaf(np.arange(4.0))
    b = Leaf(np.arange(4.0))
    c = Leaf(np.arange(4.0) + 1e-12)
    assert a.key == b.key
    assert a.key != c.key


def test_registry():
    assert TOKENIZABLE_CLASS_REGISTRY[(__name__, "Leaf")] is Leaf
    assert get_class(__name__, "Container") is Container


def test_import_qualname():
    assert import_qualname("optotherm.tokenization", "Tokenizable") is Tokenizable
    with pytest.raises(ValueError, match="cannot be None"):
        import_qualname(None, "Leaf")


def test_json_handler_numpy_roundtrip():
    arr = np.array([[1.0, 2.5], [3.0, 1e-30]])
    text = JSON_HANDLER.serializer({'arr': arr, 'x': np.float32(1.5)})
    out = JSON_HANDLER.deserializer(text)
    np.testing.assert_array_equal(out['arr'], arr)
    assert out['x'] == np.float32(1.5)
    assert isinstance(out['x'], np.float32)
    # sorted keys
    assert list(json.loads(text)) == ['arr', 'x']


def test_logger_carries_key(caplog):
    leaf = Leaf("foo")
    with caplog.at_level("INFO"):
        leaf.logger.info("hello")
    record = caplog.records[-1]
    assert record.optokey == leaf.key.token
    assert record.name.endswith("test_tokenization.Leaf")
