"""Staggered semi-implicit hybrid FV/FE solver for the 2D shallow water equations."""

from hybridswe.mesh import (
    PrimalMesh,
    DualMesh,
    MeshError,
    build_primal,
    build_dual,
    generate_structured,
    load_mesh,
    read_mesh_file,
    write_mesh_file,
)
from hybridswe.state import NumericsConfig, PhysicalParams, State
from hybridswe.solver import Simulation, RunResult, compute_dt
from hybridswe.cases import CaseSpec, builtin_cases, prepare

__all__ = [
    "PrimalMesh",
    "DualMesh",
    "MeshError",
    "build_primal",
    "build_dual",
    "generate_structured",
    "load_mesh",
    "read_mesh_file",
    "write_mesh_file",
    "NumericsConfig",
    "PhysicalParams",
    "State",
    "Simulation",
    "RunResult",
    "compute_dt",
    "CaseSpec",
    "builtin_cases",
    "prepare",
]

__version__ = "0.1.0"
