"""Shipped geometry definitions."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..geometry import GeometryDefinition, GeometryError

__all__ = ["names", "load", "resolve", "raw"]

_ORDER = ("minkowski", "minkowski-spherical", "schwarzschild", "flrw",
          "rindler", "de-sitter-static")


def names() -> list[str]:
    return list(_ORDER)


def raw(name: str) -> dict:
    if name not in _ORDER:
        raise GeometryError(f"unknown geometry '{name}' (catalog: {', '.join(_ORDER)})")
    text = resources.files(__package__).joinpath(f"{name}.json").read_text()
    return json.loads(text)


def load(name: str, **params: float) -> GeometryDefinition:
    geo = GeometryDefinition.from_dict(raw(name))
    return geo.with_params(**params) if params else geo


def resolve(spec: str, **params: float) -> GeometryDefinition:
    """A catalog name or a path to a geometry JSON file."""
    if spec in _ORDER:
        return load(spec, **params)
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise GeometryError(f"geometry file '{spec}' does not exist")
        geo = GeometryDefinition.from_json(path)
        return geo.with_params(**params) if params else geo
    raise GeometryError(f"unknown geometry '{spec}' (catalog: {', '.join(_ORDER)})")
