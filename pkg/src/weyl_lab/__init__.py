"""Numerical laboratory for Weyl structures, conformal products and reducible holonomy.

Taylor jets supply exact derivatives; the :mod:`weyl_lab.verify` suites compare
both sides of curvature and divergence identities on explicit example
geometries built in :mod:`weyl_lab.structures`.
"""

from . import connection, curvature, geometry, jets, structures, verify
from .connection import Connection, levi_civita
from .curvature import Lambda2Map, cdot, riemann
from .geometry import Chart, GeometryError, TensorField
from .jets import Jet
from .structures import (
    StructurePack,
    build_flat_cone,
    build_rescaled_product,
    build_triple_product,
)

__version__ = "0.1.0"

__all__ = [
    "Chart",
    "Connection",
    "GeometryError",
    "Jet",
    "Lambda2Map",
    "StructurePack",
    "TensorField",
    "build_flat_cone",
    "build_rescaled_product",
    "build_triple_product",
    "cdot",
    "connection",
    "curvature",
    "geometry",
    "jets",
    "levi_civita",
    "riemann",
    "structures",
    "verify",
]
