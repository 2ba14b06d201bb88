"""Finite element solvers for the time-dependent Ginzburg-Landau equations
on L-shaped domains: a Hodge-decomposition scheme, a direct FEM baseline,
and a manufactured-solution verification harness."""

from .mesh import Mesh, build_l_shape_mesh, build_square_mesh, classify_boundary

__all__ = [
    "Mesh",
    "build_l_shape_mesh",
    "build_square_mesh",
    "classify_boundary",
]
