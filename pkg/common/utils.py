"""Common utility functions"""

import hashlib
import json
from types import NoneType
from typing import Any, Dict, Optional, TypeVar, Union, get_args, get_origin

T = TypeVar("T")


def unwrap(wrapped: Optional[T], default: T = None) -> T:
    """Unwrap function for Optionals."""

    return default if wrapped is None else wrapped


def filter_none_values(collection: Any) -> Any:
    """Drops unset (None) entries from nested dicts and lists."""

    if isinstance(collection, dict):
        return {
            key: filter_none_values(value)
            for key, value in collection.items()
            if value is not None
        }

    if isinstance(collection, list):
        return [filter_none_values(item) for item in collection if item is not None]

    return collection


def _merge_into(target: Dict, source: Dict) -> Dict:
    for key, value in source.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            _merge_into(target[key], value)
        else:
            target[key] = value

    return target


def deep_merge_dicts(*dicts: Dict) -> Dict:
    """
    Merges config layers left to right, later layers winning per leaf.

    Nested sections are merged key by key instead of replaced.
    """

    result = {}
    for layer in dicts:
        _merge_into(result, layer)

    return result


def is_list_type(type_hint) -> bool:
    """Checks if a type hint is, or wraps, a list."""

    if get_origin(type_hint) is list:
        return True

    return any(is_list_type(arg) for arg in get_args(type_hint))


def unwrap_optional_type(type_hint):
    """
    Gets the inner type of Optional[X], or the hint itself otherwise.

    This is not the same as unwrap.
    """

    if get_origin(type_hint) is Union:
        inner = [arg for arg in get_args(type_hint) if arg is not NoneType]
        if len(inner) == 1:
            return inner[0]

    return type_hint


def stable_hash(payload: dict) -> str:
    """
    Short digest of a JSON-serializable dict.

    Keys are sorted so the digest only depends on content.
    """

    encoded = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf8")).hexdigest()[:16]
