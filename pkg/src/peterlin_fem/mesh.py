"""Structured triangulations of the unit square with point location.

The mesh splits each cell of a uniform N x N grid into two triangles
along the chosen diagonal.  Node (i, j) sits at (i/N, j/N) with global
index j*(N+1) + i; cell (i, j) has index c = j*N + i and owns elements
2c and 2c + 1.  This indexing makes point location an O(1) lookup.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, OutOfDomainError

# Rejection tolerance for points outside the unit square.  Upwind points are
# guaranteed to stay inside under the Courant-type step restriction, so larger
# excursions indicate misuse.
TOL_LOC = 1e-12


@dataclass(frozen=True)
class PointLocation:
    """An element index plus barycentric coordinates of a query point."""

    element: int
    bary: np.ndarray  # (3,), entries in [0, 1], sums to 1


@dataclass(frozen=True)
class Mesh:
    N: int
    diagonal: str
    nodes: np.ndarray          # (nn, 2) vertex coordinates
    elements: np.ndarray       # (ne, 3) counterclockwise vertex indices
    neighbors: np.ndarray      # (ne, 3) element across edge opposite vertex i, -1 on boundary
    boundary_node: np.ndarray  # (nn,) bool
    areas: np.ndarray          # (ne,)
    grads: np.ndarray          # (ne, 3, 2) gradients of the three hat functions
    diameters: np.ndarray      # (ne,) element diameters (longest edge)
    sizes: np.ndarray          # (ne,) stabilization lengths h_K = sqrt(2 * area)

    @property
    def node_count(self):
        return self.nodes.shape[0]

    @property
    def element_count(self):
        return self.elements.shape[0]

    @property
    def h(self):
        return float(self.diameters.max())


def build_unit_square_mesh(N, diagonal="right"):
    """Triangulate (0,1)^2 with 2*N^2 elements, split along `diagonal`."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise InvalidParameterError(f"division number must be a positive integer, got {N!r}")
    if diagonal not in ("right", "left"):
        raise InvalidParameterError(f"diagonal must be 'right' or 'left', got {diagonal!r}")

    n1 = N + 1
    jj, ii = np.meshgrid(np.arange(n1), np.arange(n1), indexing="ij")
    nodes = np.column_stack([ii.ravel() / N, jj.ravel() / N])
    boundary = (ii.ravel() == 0) | (ii.ravel() == N) | (jj.ravel() == 0) | (jj.ravel() == N)

    cj, ci = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    ci = ci.ravel()
    cj = cj.ravel()
    v00 = cj * n1 + ci
    v10 = v00 + 1
    v01 = v00 + n1
    v11 = v01 + 1

    elements = np.empty((2 * N * N, 3), dtype=np.int64)
    if diagonal == "right":
        # diagonal from (i, j) to (i+1, j+1)
        elements[0::2] = np.column_stack([v00, v10, v11])
        elements[1::2] = np.column_stack([v00, v11, v01])
    else:
        # diagonal from (i+1, j) to (i, j+1)
        elements[0::2] = np.column_stack([v00, v10, v01])
        elements[1::2] = np.column_stack([v10, v11, v01])

    xy = nodes[elements]  # (ne, 3, 2)
    e1 = xy[:, 1] - xy[:, 0]
    e2 = xy[:, 2] - xy[:, 0]
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(areas <= 0):
        raise InvalidParameterError("element orientation produced non-positive areas")

    # grad(lambda_i) = rot90(P_{i+2} - P_{i+1}) / (2 A)
    grads = np.empty((elements.shape[0], 3, 2))
    for i in range(3):
        d = xy[:, (i + 2) % 3] - xy[:, (i + 1) % 3]
        grads[:, i, 0] = -d[:, 1]
        grads[:, i, 1] = d[:, 0]
    grads /= 2.0 * areas[:, None, None]

    edges = np.linalg.norm(np.stack([xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 1], xy[:, 0] - xy[:, 2]]), axis=-1)
    diameters = edges.max(axis=0)
    # h_K entering the pressure stabilization and the |.|_h seminorm: the grid
    # spacing 1/N (equal to sqrt(2 * area) for these right isoceles triangles),
    # matching the mesh-size column of the convergence tables.
    sizes = np.sqrt(2.0 * areas)

    neighbors = _build_neighbors(elements)

    return Mesh(N=int(N), diagonal=diagonal, nodes=nodes, elements=elements,
                neighbors=neighbors, boundary_node=boundary, areas=areas,
                grads=grads, diameters=diameters, sizes=sizes)


def _build_neighbors(elements):
    """Neighbor across the edge opposite each local vertex, -1 on the boundary."""
    ne = elements.shape[0]
    neighbors = np.full((ne, 3), -1, dtype=np.int64)
    edge_map = {}
    for e in range(ne):
        tri = elements[e]
        for i in range(3):
            key = (min(tri[(i + 1) % 3], tri[(i + 2) % 3]), max(tri[(i + 1) % 3], tri[(i + 2) % 3]))
            other = edge_map.pop(key, None)
            if other is None:
                edge_map[key] = (e, i)
            else:
                oe, oi = other
                neighbors[e, i] = oe
                neighbors[oe, oi] = e
    return neighbors


def element_geometry(mesh, k):
    """Area and the constant hat-function gradients of element k."""
    if not 0 <= k < mesh.element_count:
        raise InvalidParameterError(f"element index {k} out of range")
    return mesh.areas[k], mesh.grads[k]


def barycentric(mesh, element, x):
    """Barycentric coordinates of x in the given element (unclamped)."""
    p0 = mesh.nodes[mesh.elements[element, 0]]
    lam = mesh.grads[element] @ (np.asarray(x, dtype=float) - p0)
    lam[0] += 1.0
    return lam


def locate_point(mesh, x, tol=TOL_LOC):
    """Find an element containing x and its barycentric coordinates.

    Points on shared edges resolve to the lowest containing element index.
    Raises OutOfDomainError for points outside the unit square beyond `tol`.
    """
    x = np.asarray(x, dtype=float)
    if x[0] < -tol or x[0] > 1.0 + tol or x[1] < -tol or x[1] > 1.0 + tol:
        raise OutOfDomainError(f"point {tuple(x)} lies outside the unit square")

    N = mesh.N
    gx, gy = x[0] * N, x[1] * N
    scaled_tol = max(tol * N, 1e-14)
    ix_lo = int(np.clip(np.floor(gx - scaled_tol), 0, N - 1))
    ix_hi = int(np.clip(np.floor(gx + scaled_tol), 0, N - 1))
    iy_lo = int(np.clip(np.floor(gy - scaled_tol), 0, N - 1))
    iy_hi = int(np.clip(np.floor(gy + scaled_tol), 0, N - 1))

    # Candidate elements in increasing index order: cell index j*N + i grows
    # with j then i, and the two triangles of a cell are consecutive.
    for iy in range(iy_lo, iy_hi + 1):
        for ix in range(ix_lo, ix_hi + 1):
            for e in (2 * (iy * N + ix), 2 * (iy * N + ix) + 1):
                lam = barycentric(mesh, e, x)
                if lam.min() >= -scaled_tol:
                    lam = np.clip(lam, 0.0, 1.0)
                    lam /= lam.sum()
                    return PointLocation(element=e, bary=lam)
    raise OutOfDomainError(f"point {tuple(x)} not located in any candidate element")


def locate_points(mesh, pts):
    """Vectorized point location for an array of points inside [0,1]^2.

    Points are assumed pre-clamped to the closed unit square; ties on edges
    are resolved by a fixed deterministic rule (not necessarily the lowest
    element index, unlike `locate_point`).  Returns (elements, bary).
    """
    pts = np.asarray(pts, dtype=float)
    N = mesh.N
    g = pts * N
    idx = np.clip(np.floor(g).astype(np.int64), 0, N - 1)
    frac = g - idx
    fx, fy = frac[..., 0], frac[..., 1]
    cell = idx[..., 1] * N + idx[..., 0]

    lam = np.empty(pts.shape[:-1] + (3,))
    if mesh.diagonal == "right":
        lower = fy <= fx  # triangle (v00, v10, v11)
        elem = np.where(lower, 2 * cell, 2 * cell + 1)
        lam[..., 0] = np.where(lower, 1.0 - fx, 1.0 - fy)
        lam[..., 1] = np.where(lower, fx - fy, fx)
        lam[..., 2] = np.where(lower, fy, fy - fx)
    else:
        lower = fx + fy <= 1.0  # triangle (v00, v10, v01)
        elem = np.where(lower, 2 * cell, 2 * cell + 1)
        lam[..., 0] = np.where(lower, 1.0 - fx - fy, 1.0 - fy)
        lam[..., 1] = np.where(lower, fx, fx + fy - 1.0)
        lam[..., 2] = np.where(lower, fy, 1.0 - fx)
    np.clip(lam, 0.0, 1.0, out=lam)
    lam /= lam.sum(axis=-1, keepdims=True)
    return elem, lam
