"""Assembly of the IP-DG sesquilinear form and load vectors.

The discrete operator combines the broken stiffness form, interior-edge
consistency fluxes, a (possibly variable-coefficient) mass term, an
impedance boundary term, and purely imaginary interior penalties on value
jumps, tangential-derivative jumps, and normal-derivative jumps up to the
polynomial degree:

    a_h(u, v) = (grad u, grad v) - <{dn u},[v]> - <[u],{dn v}>
                - k^2 (c u, v) + i k <c_b u, v>_bnd
                + i ( L1(u, v) + sum_j J_j(u, v) )

with c = alpha^2 at volume quadrature points and c_b = alpha on boundary
edges (both identically 1 for the constant-coefficient operator).
All basis functions are real, so every term yields a symmetric matrix and
the assembled operator is complex-symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np
import scipy.sparse as sp

from .mesh import TriMesh
from .space import DGSpace

__all__ = [
    "PenaltySet",
    "SystemMatrix",
    "Assembler",
    "get_assembler",
    "assemble_constant",
    "assemble_variable",
    "assemble_rhs",
]


@dataclass(frozen=True)
class PenaltySet:
    """Penalty magnitudes for the imaginary interior-penalty terms.

    gamma0 weights the value-jump term, beta1 the tangential-derivative
    jumps, and gamma_higher[j-1] the j-th normal-derivative jumps.  The
    imaginary unit is applied by the assembler, not stored here.
    """

    gamma0: float = 10.0
    gamma_higher: tuple[float, ...] = (0.1,)
    beta1: float = 0.1

    def gamma_j(self, j: int) -> float:
        if j == 0:
            return self.gamma0
        if j - 1 < len(self.gamma_higher):
            return self.gamma_higher[j - 1]
        return 0.1

    def key(self) -> tuple:
        return (self.gamma0, self.gamma_higher, self.beta1)

    def validate(self, strict: bool = False) -> None:
        vals = (self.gamma0, self.beta1, *self.gamma_higher)
        if not all(isfinite(v) for v in vals):
            raise ValueError("penalty parameters must be finite")
        if self.gamma0 <= 0.0:
            raise ValueError("gamma0 must be strictly positive")
        if self.beta1 < 0.0 or any(g < 0.0 for g in self.gamma_higher):
            raise ValueError("penalty parameters must be nonnegative")


@dataclass
class SystemMatrix:
    """Assembled sparse complex-symmetric IP-DG operator."""

    matrix: sp.csc_matrix
    k: float
    penalties: PenaltySet
    coefficient_kind: tuple

    @property
    def ndof(self) -> int:
        return self.matrix.shape[0]

    def export_coordinate(self, path) -> None:
        """Write the matrix in `row col re im` coordinate text format."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {self.ndof} {self.ndof} {coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


class Assembler:
    """Precomputed assembly kernel for one (space, penalties) pair.

    The sparsity pattern and all coefficient-independent blocks are built
    once; constant and variable operators, and per-sample load vectors,
    are then produced by filling values only.  This keeps the classical
    baseline's repeated assembly cheap so its cost difference from the
    multi-modes method is the numeric factorization alone.
    """

    def __init__(self, space: DGSpace, penalties: PenaltySet = PenaltySet()):
        penalties.validate()
        self.space = space
        self.mesh = space.mesh
        self.penalties = penalties
        mesh, t = self.mesh, space.tables
        ld, r = space.local_dim, space.degree
        dofs = space.dofs

        # Element blocks (stiffness and mass share indices).
        self._stiff = np.einsum(
            "eq,eqic,eqjc->eij", mesh.volume_weights, t.Gphys, t.Gphys
        )
        shape_el = self._stiff.shape
        rows_el = np.broadcast_to(dofs[:, :, None], shape_el).ravel()
        cols_el = np.broadcast_to(dofs[:, None, :], shape_el).ravel()

        # Interior-edge blocks on the stacked (K, K') DOF pair.
        ie = mesh.interior_edges
        self._ie = ie
        w = mesh.edge_weights[ie]
        h_e = mesh.edge_length[ie]
        sign = (1.0, -1.0)
        jump_v = np.concatenate(
            [sign[s] * t.trace[ie, s] for s in (0, 1)], axis=2
        )
        jump_t = np.concatenate(
            [sign[s] * t.trace_dt[ie, s] for s in (0, 1)], axis=2
        )
        avg_dn = 0.5 * np.concatenate(
            [t.trace_dn[1][ie, s] for s in (0, 1)], axis=2
        )
        cross = np.einsum("eq,eqi,eqj->eij", w, avg_dn, jump_v)
        cons = -(cross + cross.transpose(0, 2, 1))

        pen = np.einsum(
            "e,eq,eqi,eqj->eij", penalties.gamma0 / h_e, w, jump_v, jump_v
        )
        pen += np.einsum(
            "e,eq,eqi,eqj->eij", penalties.beta1 / h_e, w, jump_t, jump_t
        )
        for j in range(1, r + 1):
            jump_n = np.concatenate(
                [sign[s] * t.trace_dn[j][ie, s] for s in (0, 1)], axis=2
            )
            pen += np.einsum(
                "e,eq,eqi,eqj->eij",
                penalties.gamma_j(j) * h_e ** (2 * j - 1),
                w,
                jump_n,
                jump_n,
            )
        self._cons = cons
        self._pen = pen
        dpair = np.concatenate(
            [dofs[mesh.edge_elems[ie, 0]], dofs[mesh.edge_elems[ie, 1]]], axis=1
        )
        rows_ie = np.broadcast_to(dpair[:, :, None], cons.shape).ravel()
        cols_ie = np.broadcast_to(dpair[:, None, :], cons.shape).ravel()

        # Boundary-edge mass blocks.
        be = mesh.boundary_edges
        self._be = be
        self._btrace = t.trace[be, 0]                      # (nbe, nqe, ld)
        self._bweights = mesh.edge_weights[be]
        self._bdofs = dofs[mesh.edge_elems[be, 0]]
        shape_b = (be.size, ld, ld)
        rows_b = np.broadcast_to(self._bdofs[:, :, None], shape_b).ravel()
        cols_b = np.broadcast_to(self._bdofs[:, None, :], shape_b).ravel()

        self._rows = np.concatenate([rows_el, rows_el, rows_ie, rows_ie, rows_b])
        self._cols = np.concatenate([cols_el, cols_el, cols_ie, cols_ie, cols_b])
        n_el = rows_el.size
        n_ie = rows_ie.size
        self._sl_stiff = slice(0, n_el)
        self._sl_mass = slice(n_el, 2 * n_el)
        self._sl_cons = slice(2 * n_el, 2 * n_el + n_ie)
        self._sl_pen = slice(2 * n_el + n_ie, 2 * n_el + 2 * n_ie)
        self._sl_bnd = slice(2 * n_el + 2 * n_ie, self._rows.size)

        self._vals = np.empty(self._rows.size, dtype=complex)
        self._vals[self._sl_stiff] = self._stiff.ravel()
        self._vals[self._sl_cons] = cons.ravel()
        self._vals[self._sl_pen] = 1j * pen.ravel()

        self._B = t.B
        self._Wv = mesh.volume_weights

    # -- operators -------------------------------------------------------

    def _mass_blocks(self, cvol) -> np.ndarray:
        wc = self._Wv if cvol is None else self._Wv * cvol
        return np.einsum("eq,qi,qj->eij", wc, self._B, self._B)

    def _boundary_blocks(self, cbnd) -> np.ndarray:
        wc = self._bweights if cbnd is None else self._bweights * cbnd
        return np.einsum("eq,eqi,eqj->eij", wc, self._btrace, self._btrace)

    def _build(self, k, cvol, cbnd, kind) -> SystemMatrix:
        if k <= 0.0:
            raise ValueError("wavenumber k must be positive")
        vals = self._vals.copy()
        vals[self._sl_mass] = (-k * k) * self._mass_blocks(cvol).ravel()
        vals[self._sl_bnd] = 1j * k * self._boundary_blocks(cbnd).ravel()
        mat = sp.csc_matrix(
            (vals, (self._rows, self._cols)),
            shape=(self.space.ndof, self.space.ndof),
        )
        return SystemMatrix(mat, k, self.penalties, kind)

    def constant(self, k: float) -> SystemMatrix:
        return self._build(k, None, None, ("constant",))

    def variable(self, k: float, media, epsilon: float) -> SystemMatrix:
        if not 0.0 <= epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        self._check_media(media)
        alpha_v = 1.0 + epsilon * media.eta_volume
        alpha_b = 1.0 + epsilon * media.eta_boundary
        return self._build(
            k, alpha_v * alpha_v, alpha_b, ("sampled", media.index, epsilon)
        )

    def _check_media(self, media) -> None:
        if media.eta_volume.shape != self._Wv.shape or media.eta_boundary.shape != (
            self._be.size,
            self.mesh.ref_edge_points.size,
        ):
            raise ValueError("media sample layout does not match this mesh")

    # -- load vectors and point evaluation -------------------------------

    def rhs(self, S, Q=None) -> np.ndarray:
        """Load vector for volume data S and boundary data Q.

        S has one value per (element, volume quadrature point); Q, when
        given, one per (boundary edge, edge quadrature point).
        """
        S = np.asarray(S)
        if S.shape != self._Wv.shape:
            raise ValueError(f"volume integrand has shape {S.shape}, expected {self._Wv.shape}")
        b = np.zeros(self.space.ndof, dtype=complex)
        b[self.space.dofs] = np.einsum("eq,qi->ei", self._Wv * S, self._B)
        if Q is not None:
            Q = np.asarray(Q)
            if Q.shape != self._bweights.shape:
                raise ValueError(
                    f"boundary integrand has shape {Q.shape}, expected {self._bweights.shape}"
                )
            np.add.at(
                b, self._bdofs, np.einsum("eq,eqi->ei", self._bweights * Q, self._btrace)
            )
        return b

    def eval_volume(self, coefficients) -> np.ndarray:
        """Values of a DG coefficient vector at all volume quadrature points."""
        local = coefficients[self.space.dofs]
        return np.einsum("qi,ei->eq", self._B, local)

    def eval_boundary(self, coefficients) -> np.ndarray:
        """Trace values at all boundary-edge quadrature points."""
        local = coefficients[self._bdofs]
        return np.einsum("eqi,ei->eq", self._btrace, local)


def get_assembler(space: DGSpace, penalties: PenaltySet = PenaltySet()) -> Assembler:
    """Return a cached Assembler for (space, penalties)."""
    cache = getattr(space, "_assembler_cache", None)
    if cache is None:
        cache = {}
        space._assembler_cache = cache
    key = penalties.key()
    if key not in cache:
        cache[key] = Assembler(space, penalties)
    return cache[key]


def _check_pair(mesh: TriMesh, space: DGSpace) -> None:
    if space.mesh is not mesh:
        raise ValueError("mesh and space do not belong together")


def assemble_constant(
    mesh: TriMesh, space: DGSpace, k: float, penalties: PenaltySet = PenaltySet()
) -> SystemMatrix:
    """Constant-coefficient IP-DG operator (background medium alpha = 1)."""
    _check_pair(mesh, space)
    return get_assembler(space, penalties).constant(k)


def assemble_variable(
    mesh: TriMesh,
    space: DGSpace,
    k: float,
    penalties: PenaltySet,
    media,
    epsilon: float,
) -> SystemMatrix:
    """Variable-coefficient operator with alpha = 1 + epsilon*eta sampled
    at quadrature points; differs from the constant operator only in the
    mass and boundary blocks."""
    _check_pair(mesh, space)
    return get_assembler(space, penalties).variable(k, media, epsilon)


def assemble_rhs(mesh: TriMesh, space: DGSpace, S, Q=None) -> np.ndarray:
    """Load vector from volume data S and optional boundary data Q."""
    _check_pair(mesh, space)
    return get_assembler(space).rhs(S, Q)
