"""Legacy ASCII VTK unstructured-grid output (cell type 5 = triangle)."""

import os

import numpy as np


def write_vtk(path, mesh, point_data=None, cell_data=None, title="tdglfem output"):
    """Write a mesh with optional nodal and per-triangle scalar fields.

    point_data / cell_data map field names to real arrays of length
    num_vertices / num_triangles.
    """
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    nv = mesh.num_vertices
    nt = mesh.num_triangles
    with open(path, "w") as fp:
        fp.write("# vtk DataFile Version 2.0\n")
        fp.write(f"{title}\n")
        fp.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fp.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fp.write(f"{x:.17g} {y:.17g} 0\n")
        fp.write(f"CELLS {nt} {4 * nt}\n")
        for a, b, c in mesh.triangles:
            fp.write(f"3 {a} {b} {c}\n")
        fp.write(f"CELL_TYPES {nt}\n")
        fp.write("5\n" * nt)
        if point_data:
            fp.write(f"POINT_DATA {nv}\n")
            for name, vals in point_data.items():
                _write_scalars(fp, name, vals, nv)
        if cell_data:
            fp.write(f"CELL_DATA {nt}\n")
            for name, vals in cell_data.items():
                _write_scalars(fp, name, vals, nt)


def _write_scalars(fp, name, vals, expected):
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (expected,):
        raise ValueError(f"field {name!r}: expected {expected} values, got {vals.shape}")
    fp.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
    for v in vals:
        fp.write(f"{v:.17g}\n")
