"""Quasi-static frictional contact + fracture flow on hexahedral meshes.

Lagrange-multiplier contact on explicit planar fractures in a linear-elastic
Q1 hex mesh, coupled with single-phase lubrication (cubic-law TPFA) flow in
the fracture, with algebraic traction/pressure-jump stabilization of the
face-wise-constant multiplier space.
"""

__version__ = "0.1.0"

from .mesh import Mesh, MeshError, FractureTopology, DofMap, build_fracture_topology

__all__ = [
    "Mesh",
    "MeshError",
    "FractureTopology",
    "DofMap",
    "build_fracture_topology",
]
