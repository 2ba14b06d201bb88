"""Structured triangulations of the L-shaped domain and boundary classification.

The L-shape is fixed once and for all as

    Omega = (-1/2, 1/2)^2 \\ [0, 1/2] x [-1/2, 0]

(three half-unit squares, reentrant corner at the origin, longest side of
unit length).  The polar angle used by exact-solution evaluators is
theta = atan2(x2, x1) mapped into [0, 3*pi/2], so theta = 0 lies on the
boundary arm along the positive x1-axis and theta = 3*pi/2 on the arm along
the negative x2-axis.

Grid cells are split along the diagonal pointing away from the reentrant
corner within each quadrant block: positive slope in the NE and SW blocks,
negative slope in the NW block.  This makes the triangulation deterministic
and symmetric under the reflection (x1, x2) -> (-x2, -x1).
"""

from dataclasses import dataclass, field

import numpy as np

# vertex flag values
INTERIOR = 0
BOUNDARY_EDGE = 1
CONVEX_CORNER = 2
REENTRANT_CORNER = 3


@dataclass
class Mesh:
    """Immutable triangulation with boundary data.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise vertex triples
    boundary_edges : (ne, 2) int array, oriented as in the owning triangle
    boundary_normals : (ne, 2) float array, outward unit normals
    vertex_flags : (nv,) int array with INTERIOR/BOUNDARY_EDGE/
        CONVEX_CORNER/REENTRANT_CORNER values
    h : nominal mesh size (1/M for the structured builders)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_normals: np.ndarray
    vertex_flags: np.ndarray
    h: float

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def boundary_vertices(self) -> np.ndarray:
        """Indices of all vertices lying on the boundary."""
        return np.flatnonzero(self.vertex_flags != INTERIOR)

    def num_edges(self) -> int:
        """Number of undirected edges (for the Euler relation V - E + T = 1)."""
        t = self.triangles
        pairs = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0).shape[0]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass
class BoundaryTables:
    """Boundary constraint data derived from a mesh.

    dirichlet_nodes lists every boundary vertex (used for the p- and
    u-systems).  normal_components[v] is the set of vector components
    constrained by A.n = 0 at boundary vertex v: one component on
    edge-interior vertices of axis-aligned edges, both at corners.
    """

    dirichlet_nodes: np.ndarray
    normal_components: dict = field(default_factory=dict)


def _triangulate_cells(nx_nodes, keep_cell, diagonal, node_id):
    """Split kept grid cells into triangle index triples (CCW)."""
    tris = []
    for ix in range(nx_nodes - 1):
        for iy in range(nx_nodes - 1):
            if not keep_cell(ix, iy):
                continue
            bl = node_id[ix, iy]
            br = node_id[ix + 1, iy]
            tr = node_id[ix + 1, iy + 1]
            tl = node_id[ix, iy + 1]
            if diagonal(ix, iy) > 0:  # positive slope: BL-TR
                tris.append((bl, br, tr))
                tris.append((bl, tr, tl))
            else:  # negative slope: BR-TL
                tris.append((bl, br, tl))
                tris.append((br, tr, tl))
    return np.array(tris, dtype=np.int64)


def _boundary_edges_and_normals(vertices, triangles):
    """Extract edges owned by exactly one triangle, oriented CCW.

    For a CCW triangle the outward normal of a boundary edge (a, b) is the
    direction (dy, -dx)/|d| obtained by rotating the travel direction
    clockwise.
    """
    t = triangles
    directed = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    _, first_idx, counts = np.unique(
        und, axis=0, return_index=True, return_counts=True
    )
    bnd = directed[first_idx[counts == 1]]
    d = vertices[bnd[:, 1]] - vertices[bnd[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    return bnd, normals


def build_l_shape_mesh(M: int) -> Mesh:
    """Build the structured L-shape triangulation with spacing 1/M.

    Parameters
    ----------
    M : positive even integer; M/2 cells span each half-unit square so
        the grid aligns with the reentrant corner at the origin.

    Returns
    -------
    Mesh with 3(m+1)^2 - 2(m+1) vertices and 6 m^2 triangles, m = M/2.
    """
    if not isinstance(M, (int, np.integer)):
        raise ValueError(f"M must be an integer, got {M!r}")
    if M < 2 or M % 2 != 0:
        raise ValueError(
            f"M must be an even integer >= 2 so the grid aligns with the "
            f"reentrant corner at the origin, got M={M}"
        )
    m = M // 2
    n = M + 1  # lattice nodes per side of the bounding square

    # keep lattice nodes outside the open interior of the removed quadrant
    node_id = -np.ones((n, n), dtype=np.int64)
    coords = []
    k = 0
    for ix in range(n):
        for iy in range(n):
            if ix > m and iy < m:
                continue  # interior of the removed quadrant
            node_id[ix, iy] = k
            coords.append(((ix - m) / M, (iy - m) / M))
            k += 1
    vertices = np.array(coords)

    def keep_cell(ix, iy):
        return not (ix >= m and iy < m)

    def diagonal(ix, iy):
        if ix >= m and iy >= m:
            return +1  # NE block
        if ix < m and iy >= m:
            return -1  # NW block
        return +1  # SW block

    triangles = _triangulate_cells(n, keep_cell, diagonal, node_id)
    bedges, bnormals = _boundary_edges_and_normals(vertices, triangles)

    flags = np.full(vertices.shape[0], INTERIOR, dtype=np.int8)
    on_bnd = np.unique(bedges)
    flags[on_bnd] = BOUNDARY_EDGE
    convex = [(0, 0), (0, M), (M, M), (M, m), (m, 0)]
    for ix, iy in convex:
        flags[node_id[ix, iy]] = CONVEX_CORNER
    flags[node_id[m, m]] = REENTRANT_CORNER

    return Mesh(vertices, triangles, bedges, bnormals, flags, 1.0 / M)


def build_square_mesh(M: int) -> Mesh:
    """Uniform triangulation of the unit square [0,1]^2 with spacing 1/M.

    Used by the smooth Poisson verification problem; all four corners are
    flagged convex.
    """
    if M < 1:
        raise ValueError(f"M must be a positive integer, got M={M}")
    n = M + 1
    node_id = np.arange(n * n).reshape(n, n)
    xs = np.arange(n) / M
    vertices = np.column_stack(
        [np.repeat(xs, n), np.tile(xs, n)]
    )
    triangles = _triangulate_cells(
        n, lambda ix, iy: True, lambda ix, iy: +1, node_id
    )
    bedges, bnormals = _boundary_edges_and_normals(vertices, triangles)
    flags = np.full(n * n, INTERIOR, dtype=np.int8)
    flags[np.unique(bedges)] = BOUNDARY_EDGE
    for ix, iy in [(0, 0), (0, M), (M, 0), (M, M)]:
        flags[node_id[ix, iy]] = CONVEX_CORNER
    return Mesh(vertices, triangles, bedges, bnormals, flags, 1.0 / M)


def classify_boundary(mesh: Mesh) -> BoundaryTables:
    """Derive Dirichlet node set and per-vertex normal constraints.

    The normal-constraint table serves the direct scheme's A.n = 0
    condition: each boundary edge's (axis-aligned) normal constrains one
    vector component at the edge's endpoints; vertices on two edges with
    orthogonal normals (corners, including the reentrant one) get both.
    """
    comp = {}
    for (a, b), nrm in zip(mesh.boundary_edges, mesh.boundary_normals):
        c = int(np.argmax(np.abs(nrm)))
        comp.setdefault(int(a), set()).add(c)
        comp.setdefault(int(b), set()).add(c)
    dirichlet = np.array(sorted(comp.keys()), dtype=np.int64)
    return BoundaryTables(dirichlet_nodes=dirichlet, normal_components=comp)
