"""Polyhedral circle packings: configurations, orbits, root systems, Z(s) and the area invariant."""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DescentError,
    InvalidGraphError,
    NotInRowSpaceError,
    PolypackError,
    RegionError,
)
from .packing import (
    PackingConfiguration,
    build_configuration,
    configuration_from_circles,
    enumerate_by_curvature,
    enumerate_orbit,
    normalize_bounded,
    render_svg,
)
from .polyhedron import BUILTINS, PolyhedronGraph, canonical_realization, solve_midsphere, validate_graph
from .rootsys import RootSystem, build_root_system, classify_multiplicity, descend_to_base
from .titscone import Verdict, export_cone_mesh, membership, z_partial

__version__ = "0.1.0"


def builtin_packing(name: str) -> PackingConfiguration:
    """Bounded-normalized configuration of a built-in polyhedron."""
    return normalize_bounded(build_configuration(canonical_realization(name)))[0]
