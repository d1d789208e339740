"""Python bindings for the ruledmin library."""

import json

from ._core import (
    ConfigError,
    GeometryError,
    catalog_names,
    cone_point,
    curvature_ellipse,
    family_member,
    is_singular,
    norm_sq,
    shape_operators,
    surface_point,
)
from . import _core

__all__ = [
    "ConfigError",
    "GeometryError",
    "catalog",
    "catalog_names",
    "cone_point",
    "curvature_ellipse",
    "family_member",
    "family_sweep",
    "is_singular",
    "norm_sq",
    "ruled_verify",
    "shape_operators",
    "surface_point",
    "surface_verify",
]


def _settings(settings):
    return {str(k): str(v) for k, v in (settings or {}).items()}


def catalog(seed=1):
    """Catalog manifest as a dict."""
    return json.loads(_core.catalog_manifest(seed))


def surface_verify(surface, seed=1, samples=100, settings=None):
    return json.loads(_core.surface_verify(surface, seed, samples, _settings(settings)))


def ruled_verify(surface, seed=1, samples=100, settings=None):
    return json.loads(_core.ruled_verify(surface, seed, samples, _settings(settings)))


def family_sweep(surface, seed=1, samples=100, settings=None):
    return json.loads(_core.family_sweep(surface, seed, samples, _settings(settings)))
