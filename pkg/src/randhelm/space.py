"""Broken polynomial spaces on a triangulation.

DGSpace represents the discontinuous space of piecewise P_r polynomials
with a nodal Lagrange basis on the barycentric lattice of each element.
Basis functions are stored as bivariate monomial coefficient grids on the
reference triangle, which makes values, gradients, and arbitrary-order
directional derivatives (needed for the normal-derivative jump penalties)
cheap to evaluate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import polynomial as npoly

from .mesh import TriMesh

__all__ = ["DGSpace", "DGFunction", "broken_norms"]


def _poly_dx(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    if c.shape[0] > 1:
        out[:-1, :] = c[1:, :] * np.arange(1, c.shape[0])[:, None]
    return out


def _poly_dy(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    if c.shape[1] > 1:
        out[:, :-1] = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
    return out


class DGSpace:
    """Broken space V_h^r of discontinuous piecewise P_r polynomials.

    Global DOF numbering is contiguous per element:
    global = element_label * local_dim + local_index.
    Immutable after construction.
    """

    def __init__(self, mesh: TriMesh, degree: int = 1):
        if degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        self.mesh = mesh
        self.degree = degree
        r = degree
        self.local_dim = (r + 1) * (r + 2) // 2
        self.ndof = mesh.n_elements * self.local_dim

        # Barycentric lattice nodes and matching monomial exponents.
        nodes, exps = [], []
        for a in range(r + 1):
            for b in range(r + 1 - a):
                nodes.append((a / r, b / r))
                exps.append((a, b))
        self.nodes = np.array(nodes)
        self._exps = exps

        vander = np.empty((self.local_dim, self.local_dim))
        for m, (a, b) in enumerate(exps):
            vander[:, m] = self.nodes[:, 0] ** a * self.nodes[:, 1] ** b
        coef = np.linalg.inv(vander)  # column i: monomial coeffs of basis i

        # Dense (r+1, r+1) coefficient grid per basis function.
        self._coef_grids = []
        for i in range(self.local_dim):
            grid = np.zeros((r + 1, r + 1))
            for m, (a, b) in enumerate(exps):
                grid[a, b] = coef[m, i]
            self._coef_grids.append(grid)
        self._partials: dict[tuple[int, int], list[np.ndarray]] = {
            (0, 0): self._coef_grids
        }

        self.dofs = np.arange(self.ndof, dtype=np.int64).reshape(
            mesh.n_elements, self.local_dim
        )
        self._tables = None
        self._norm_forms: dict[tuple, tuple] = {}

    # -- reference-element evaluation ------------------------------------

    def _partial_grids(self, a: int, b: int) -> list[np.ndarray]:
        key = (a, b)
        if key not in self._partials:
            if a > 0:
                prev = self._partial_grids(a - 1, b)
                self._partials[key] = [_poly_dx(c) for c in prev]
            else:
                prev = self._partial_grids(a, b - 1)
                self._partials[key] = [_poly_dy(c) for c in prev]
        return self._partials[key]

    def basis_values(self, points) -> np.ndarray:
        """Values of all local basis functions at reference points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((pts.shape[0], self.local_dim))
        for i, c in enumerate(self._coef_grids):
            out[:, i] = npoly.polyval2d(pts[:, 0], pts[:, 1], c)
        return out

    def basis_gradients(self, points) -> np.ndarray:
        """Reference gradients, shape (npts, local_dim, 2)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((pts.shape[0], self.local_dim, 2))
        for i in range(self.local_dim):
            out[:, i, 0] = npoly.polyval2d(
                pts[:, 0], pts[:, 1], self._partial_grids(1, 0)[i]
            )
            out[:, i, 1] = npoly.polyval2d(
                pts[:, 0], pts[:, 1], self._partial_grids(0, 1)[i]
            )
        return out

    def basis_directional(self, points, dirs, order: int) -> np.ndarray:
        """(d . grad)^order of every basis function, per-point direction d.

        `dirs` holds the (reference-coordinate) direction for each point.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        out = np.zeros((pts.shape[0], self.local_dim))
        for a in range(order + 1):
            b = order - a
            factor = comb(order, a) * dirs[:, 0] ** a * dirs[:, 1] ** b
            grids = self._partial_grids(a, b)
            for i in range(self.local_dim):
                out[:, i] += factor * npoly.polyval2d(pts[:, 0], pts[:, 1], grids[i])
        return out

    # -- cached evaluation tables ----------------------------------------

    @property
    def tables(self) -> "_Tables":
        if self._tables is None:
            self._tables = _Tables(self)
        return self._tables


class _Tables:
    """Precomputed basis evaluations on the mesh quadrature layout."""

    def __init__(self, space: DGSpace):
        mesh = space.mesh
        r = space.degree
        self.B = space.basis_values(mesh.ref_volume_points)          # (nq, ld)
        gref = space.basis_gradients(mesh.ref_volume_points)         # (nq, ld, 2)
        # Physical gradient: grad_x = J^{-T} grad_ref.
        self.Gphys = np.einsum("qid,edc->eqic", gref, mesh.jac_inv)

        ne, nqe = mesh.n_edges, mesh.ref_edge_points.shape[0]
        ld = space.local_dim
        self.trace = np.zeros((ne, 2, nqe, ld))
        self.trace_dn = {j: np.zeros((ne, 2, nqe, ld)) for j in range(1, r + 1)}
        self.trace_dt = np.zeros((ne, 2, nqe, ld))

        for side in (0, 1):
            elems = mesh.edge_elems[:, side]
            valid = elems >= 0
            el = np.where(valid, elems, 0)
            v0 = mesh.vertices[mesh.elements[el, 0]]
            d = mesh.edge_points - v0[:, None, :]
            ref = np.einsum("eij,eqj->eqi", mesh.jac_inv[el], d)
            flat = ref.reshape(-1, 2)
            vals = space.basis_values(flat).reshape(ne, nqe, ld)
            vals[~valid] = 0.0
            self.trace[:, side] = vals
            # Direction of physical differentiation pulled back to the
            # reference element: c = J^{-1} d.
            cn = np.einsum("eij,ej->ei", mesh.jac_inv[el], mesh.edge_normal)
            ct = np.einsum("eij,ej->ei", mesh.jac_inv[el], mesh.edge_tangent)
            cn_flat = np.repeat(cn, nqe, axis=0)
            ct_flat = np.repeat(ct, nqe, axis=0)
            for j in range(1, r + 1):
                dn = space.basis_directional(flat, cn_flat, j).reshape(ne, nqe, ld)
                dn[~valid] = 0.0
                self.trace_dn[j][:, side] = dn
            dt = space.basis_directional(flat, ct_flat, 1).reshape(ne, nqe, ld)
            dt[~valid] = 0.0
            self.trace_dt[:, side] = dt


@dataclass
class DGFunction:
    """A member of V_h^r: a complex coefficient vector over the space."""

    space: DGSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.space.ndof,):
            raise ValueError(
                f"coefficient vector has shape {c.shape}, expected ({self.space.ndof},)"
            )
        self.coefficients = c

    @classmethod
    def zero(cls, space: DGSpace) -> "DGFunction":
        return cls(space, np.zeros(space.ndof, dtype=complex))

    def evaluate(self, element: int, points, gradient: bool = False):
        """Evaluate at reference points of one element.

        Returns values, or (values, gradients) with physical gradients
        when `gradient` is set.
        """
        if not 0 <= element < self.space.mesh.n_elements:
            raise IndexError(f"element label {element} out of range")
        local = self.coefficients[self.space.dofs[element]]
        vals = self.space.basis_values(points) @ local
        if not gradient:
            return vals
        gref = self.space.basis_gradients(points)
        gphys = np.einsum("qid,dc->qic", gref, self.space.mesh.jac_inv[element])
        return vals, np.einsum("qic,i->qc", gphys, local)

    def evaluate_physical(self, points) -> np.ndarray:
        """Evaluate at physical points; ties on edges go to the smaller label."""
        mesh = self.space.mesh
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(pts.shape[0], dtype=complex)
        n = mesh.n
        for p, (x, y) in enumerate(pts):
            cx = min(max(int(np.floor((x + 0.5) * n)), 0), n - 1)
            cy = min(max(int(np.floor((y + 0.5) * n)), 0), n - 1)
            lower = 2 * (cy * n + cx)
            xi, eta = mesh.to_reference(lower, (x, y))
            # Points on the cell diagonal belong to the lower triangle
            # (the smaller of the two labels).
            label = lower if eta <= xi + 1e-12 else lower + 1
            ref = mesh.to_reference(label, (x, y))
            out[p] = self.evaluate(label, ref[None, :])[0]
        return out


def _norm_forms(space: DGSpace, penalties) -> tuple:
    """Real quadratic-form matrices (mass, stiffness, jump, boundary mass)."""
    import scipy.sparse as sp

    key = penalties.key()
    cached = space._norm_forms.get(key)
    if cached is not None:
        return cached

    mesh, t = space.mesh, space.tables
    ld, r = space.local_dim, space.degree
    mass_blocks = np.einsum("eq,qi,qj->eij", mesh.volume_weights, t.B, t.B)
    stiff_blocks = np.einsum("eq,eqic,eqjc->eij", mesh.volume_weights, t.Gphys, t.Gphys)
    rows = np.broadcast_to(space.dofs[:, :, None], mass_blocks.shape)
    cols = np.broadcast_to(space.dofs[:, None, :], mass_blocks.shape)

    def build(rr, cc, vv):
        return sp.csr_matrix(
            (vv.ravel(), (rr.ravel(), cc.ravel())), shape=(space.ndof, space.ndof)
        )

    mass = build(rows, cols, mass_blocks)
    stiff = build(rows, cols, stiff_blocks)

    ie = mesh.interior_edges
    w = mesh.edge_weights[ie]
    h_e = mesh.edge_length[ie]
    sign = np.array([1.0, -1.0])
    jump_v = np.concatenate(
        [sign[s] * t.trace[ie, s] for s in (0, 1)], axis=2
    )  # (nie, nqe, 2ld)
    jump_t = np.concatenate([sign[s] * t.trace_dt[ie, s] for s in (0, 1)], axis=2)
    blocks = np.einsum(
        "e,eq,eqi,eqj->eij", penalties.gamma0 * r / h_e, w, jump_v, jump_v
    )
    blocks += np.einsum(
        "e,eq,eqi,eqj->eij", penalties.beta1 * r / h_e, w, jump_t, jump_t
    )
    for j in range(1, r + 1):
        jump_n = np.concatenate(
            [sign[s] * t.trace_dn[j][ie, s] for s in (0, 1)], axis=2
        )
        blocks += np.einsum(
            "e,eq,eqi,eqj->eij",
            penalties.gamma_j(j) * (h_e / r) ** (2 * j - 1),
            w,
            jump_n,
            jump_n,
        )
    dpair = np.concatenate(
        [space.dofs[mesh.edge_elems[ie, 0]], space.dofs[mesh.edge_elems[ie, 1]]],
        axis=1,
    )
    jrows = np.broadcast_to(dpair[:, :, None], blocks.shape)
    jcols = np.broadcast_to(dpair[:, None, :], blocks.shape)
    jump = build(jrows, jcols, blocks)

    be = mesh.boundary_edges
    btr = t.trace[be, 0]
    bblocks = np.einsum("eq,eqi,eqj->eij", mesh.edge_weights[be], btr, btr)
    bdofs = space.dofs[mesh.edge_elems[be, 0]]
    brows = np.broadcast_to(bdofs[:, :, None], bblocks.shape)
    bcols = np.broadcast_to(bdofs[:, None, :], bblocks.shape)
    bmass = build(brows, bcols, bblocks)

    forms = (mass, stiff, jump, bmass)
    space._norm_forms[key] = forms
    return forms


def broken_norms(f: DGFunction, penalties) -> dict:
    """L2, broken-H1 seminorm/norm, and boundary L2 norm of a DG function.

    The full broken norm adds penalty-weighted jump terms across interior
    edges: value jumps at gamma0*r/h_e, tangential-derivative jumps at
    beta1*r/h_e, and j-th normal-derivative jumps at gamma_j*(h_e/r)^(2j-1).
    """
    penalties.validate(strict=True)
    mass, stiff, jump, bmass = _norm_forms(f.space, penalties)
    c = f.coefficients

    def quad(mat):
        return max(float(np.real(np.vdot(c, mat @ c))), 0.0)

    l2 = np.sqrt(quad(mass))
    semi_sq = quad(stiff)
    return {
        "l2": l2,
        "seminorm_1h": np.sqrt(semi_sq),
        "norm_1h": np.sqrt(semi_sq + quad(jump)),
        "boundary_l2": np.sqrt(quad(bmass)),
    }
