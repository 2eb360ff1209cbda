"""Uniform triangulations of the square D = (-0.5, 0.5)^2.

Each of the n x n unit cells is split along its lower-left to upper-right
diagonal, giving 2n^2 congruent isosceles right triangles with legs of
length h = 1/n.  The mesh carries oriented edges (interior normals point
out of the adjacent element with the smaller global label), per-element
affine maps, and cached physical quadrature geometry for volumes and
edges.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TriMesh", "build_uniform_mesh", "reference_quadrature"]


# Symmetric quadrature rules on the reference triangle with vertices
# (0,0), (1,0), (0,1).  Weights sum to the reference area 1/2.
_TRI_D2_PTS = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
_TRI_D2_WTS = np.full(3, 1.0 / 6.0)

_a1, _a2 = 0.445948490915965, 0.091576213509771
_w1, _w2 = 0.223381589678011, 0.109951743655322
_TRI_D4_PTS = np.array(
    [
        [_a1, _a1], [1.0 - 2.0 * _a1, _a1], [_a1, 1.0 - 2.0 * _a1],
        [_a2, _a2], [1.0 - 2.0 * _a2, _a2], [_a2, 1.0 - 2.0 * _a2],
    ]
)
_TRI_D4_WTS = 0.5 * np.array([_w1, _w1, _w1, _w2, _w2, _w2])


def reference_quadrature(kind: str, degree: int):
    """Return (points, weights) of a reference quadrature rule.

    kind='triangle': symmetric rule on the unit reference triangle,
    degree in {2, 4}.  kind='edge': Gauss-Legendre rule with `degree`
    points (2..4) on the unit interval [0, 1].
    """
    if kind == "triangle":
        if degree == 2:
            return _TRI_D2_PTS.copy(), _TRI_D2_WTS.copy()
        if degree == 4:
            return _TRI_D4_PTS.copy(), _TRI_D4_WTS.copy()
        raise ValueError(f"unsupported triangle quadrature degree {degree}")
    if kind == "edge":
        if degree not in (2, 3, 4):
            raise ValueError(f"unsupported edge Gauss point count {degree}")
        x, w = np.polynomial.legendre.leggauss(degree)
        return 0.5 * (x + 1.0), 0.5 * w
    raise ValueError(f"unknown quadrature kind {kind!r}")


@dataclass
class TriMesh:
    """Uniform triangulation T_{1/n} of the centered unit square.

    All arrays are read-only after construction; the mesh is safe to
    share across threads.
    """

    n: int
    vertices: np.ndarray          # (nv, 2)
    elements: np.ndarray          # (nel, 3) vertex indices, CCW
    areas: np.ndarray             # (nel,) signed areas (positive)
    jac: np.ndarray               # (nel, 2, 2) columns (v1-v0, v2-v0)
    jac_inv: np.ndarray           # (nel, 2, 2)
    # Edge arrays.  Interior edges store (K, K') with label(K) < label(K')
    # and the unit normal pointing out of K; boundary edges store (K, -1)
    # with the outward normal.
    edge_vertices: np.ndarray     # (ne, 2)
    edge_elems: np.ndarray        # (ne, 2)
    edge_length: np.ndarray       # (ne,)
    edge_normal: np.ndarray       # (ne, 2)
    edge_tangent: np.ndarray      # (ne, 2)
    interior_edges: np.ndarray    # indices into the edge arrays
    boundary_edges: np.ndarray
    # Quadrature geometry (physical points and weights).
    ref_volume_points: np.ndarray   # (nq, 2)
    ref_volume_weights: np.ndarray  # (nq,)
    volume_points: np.ndarray       # (nel, nq, 2)
    volume_weights: np.ndarray      # (nel, nq)
    ref_edge_points: np.ndarray     # (nqe,)
    ref_edge_weights: np.ndarray    # (nqe,)
    edge_points: np.ndarray         # (ne, nqe, 2)
    edge_weights: np.ndarray        # (ne, nqe)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_vertices.shape[0]

    def element_vertices(self, label: int) -> np.ndarray:
        """Physical coordinates of the three vertices of one element."""
        return self.vertices[self.elements[label]]

    def to_reference(self, label, points) -> np.ndarray:
        """Map physical points into the reference coordinates of `label`."""
        v0 = self.vertices[self.elements[label, 0]]
        return (np.asarray(points, dtype=float) - v0) @ self.jac_inv[label].T


def build_uniform_mesh(n: int, volume_degree: int = 4, edge_points: int = 3) -> TriMesh:
    """Build the uniform triangulation T_{1/n} of (-0.5, 0.5)^2.

    Element labels run row-major over the n x n cells, lower triangle
    before upper.  Output is deterministic: the same n yields a
    bit-identical mesh.
    """
    if n < 1:
        raise ValueError("subdivision count n must be >= 1")

    h = 1.0 / n
    ix, iy = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    vertices = np.column_stack([(-0.5 + h * ix).ravel(), (-0.5 + h * iy).ravel()])

    def vid(cx, cy):
        return cy * (n + 1) + cx

    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    for cy in range(n):
        for cx in range(n):
            v00, v10 = vid(cx, cy), vid(cx + 1, cy)
            v01, v11 = vid(cx, cy + 1), vid(cx + 1, cy + 1)
            e = 2 * (cy * n + cx)
            elements[e] = (v00, v10, v11)      # lower triangle
            elements[e + 1] = (v00, v11, v01)  # upper triangle

    p0 = vertices[elements[:, 0]]
    d1 = vertices[elements[:, 1]] - p0
    d2 = vertices[elements[:, 2]] - p0
    jac = np.stack([d1, d2], axis=-1)          # columns are edge vectors
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    areas = 0.5 * det
    jac_inv = np.empty_like(jac)
    jac_inv[:, 0, 0] = jac[:, 1, 1] / det
    jac_inv[:, 0, 1] = -jac[:, 0, 1] / det
    jac_inv[:, 1, 0] = -jac[:, 1, 0] / det
    jac_inv[:, 1, 1] = jac[:, 0, 0] / det

    # Collect edges in order of first appearance over the element loop.
    edge_index: dict[tuple[int, int], int] = {}
    edge_verts: list[tuple[int, int]] = []
    edge_adj: list[list[int]] = []
    for e in range(elements.shape[0]):
        a, b, c = elements[e]
        for va, vb in ((a, b), (b, c), (c, a)):
            key = (min(va, vb), max(va, vb))
            idx = edge_index.get(key)
            if idx is None:
                edge_index[key] = len(edge_verts)
                edge_verts.append(key)
                edge_adj.append([e])
            else:
                edge_adj[idx].append(e)

    ne = len(edge_verts)
    edge_vertices = np.array(edge_verts, dtype=np.int64)
    edge_elems = np.full((ne, 2), -1, dtype=np.int64)
    for i, adj in enumerate(edge_adj):
        adj.sort()
        edge_elems[i, : len(adj)] = adj

    pa = vertices[edge_vertices[:, 0]]
    pb = vertices[edge_vertices[:, 1]]
    tang = pb - pa
    edge_length = np.linalg.norm(tang, axis=1)
    edge_tangent = tang / edge_length[:, None]
    normal = np.column_stack([edge_tangent[:, 1], -edge_tangent[:, 0]])
    # Orient the normal out of the first adjacent element (the smaller
    # label for interior edges, the only element for boundary edges).
    centroid = vertices[elements].mean(axis=1)
    mid = 0.5 * (pa + pb)
    flip = np.einsum("ij,ij->i", normal, mid - centroid[edge_elems[:, 0]]) < 0.0
    normal[flip] *= -1.0
    edge_normal = normal

    interior = np.flatnonzero(edge_elems[:, 1] >= 0)
    boundary = np.flatnonzero(edge_elems[:, 1] < 0)

    ref_vp, ref_vw = reference_quadrature("triangle", volume_degree)
    volume_points = p0[:, None, :] + np.einsum("eij,qj->eqi", jac, ref_vp)
    volume_weights = ref_vw[None, :] * det[:, None]

    ref_ep, ref_ew = reference_quadrature("edge", edge_points)
    edge_pts = pa[:, None, :] + ref_ep[None, :, None] * tang[:, None, :]
    edge_weights = ref_ew[None, :] * edge_length[:, None]

    mesh = TriMesh(
        n=n,
        vertices=vertices,
        elements=elements,
        areas=areas,
        jac=jac,
        jac_inv=jac_inv,
        edge_vertices=edge_vertices,
        edge_elems=edge_elems,
        edge_length=edge_length,
        edge_normal=edge_normal,
        edge_tangent=edge_tangent,
        interior_edges=interior,
        boundary_edges=boundary,
        ref_volume_points=ref_vp,
        ref_volume_weights=ref_vw,
        volume_points=volume_points,
        volume_weights=volume_weights,
        ref_edge_points=ref_ep,
        ref_edge_weights=ref_ew,
        edge_points=edge_pts,
        edge_weights=edge_weights,
    )
    for arr in vars(mesh).values():
        if isinstance(arr, np.ndarray):
            arr.setflags(write=False)
    return mesh
