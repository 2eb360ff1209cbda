import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randhelm import DGFunction, DGSpace, PenaltySet, broken_norms, build_uniform_mesh


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_partition_of_unity(mesh4, degree, rng):
    space = DGSpace(mesh4, degree)
    pts = rng.random((20, 2))
    pts = pts[pts.sum(axis=1) <= 1.0]
    vals = space.basis_values(pts)
    assert np.allclose(vals.sum(axis=1), 1.0, atol=1e-12)
    # Gradients of the constant sum vanish.
    grads = space.basis_gradients(pts)
    assert np.allclose(grads.sum(axis=1), 0.0, atol=1e-11)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_nodal_basis_is_interpolatory(mesh4, degree):
    space = DGSpace(mesh4, degree)
    vals = space.basis_values(space.nodes)
    assert np.allclose(vals, np.eye(space.local_dim), atol=1e-11)


def test_degree_one_reference_gradients(mesh4):
    space = DGSpace(mesh4, 1)
    # Nodes are (0,0), (0,1), (1,0) on the barycentric lattice; the
    # gradient of each hat function is constant.
    g = space.basis_gradients(np.array([[0.3, 0.2]]))[0]
    node_order = [tuple(n) for n in space.nodes]
    expected = {(0.0, 0.0): [-1.0, -1.0], (1.0, 0.0): [1.0, 0.0], (0.0, 1.0): [0.0, 1.0]}
    for i, key in enumerate(node_order):
        assert np.allclose(g[i], expected[key], atol=1e-12)


def test_directional_derivative_orders(mesh4):
    space = DGSpace(mesh4, 2)
    pts = np.array([[0.25, 0.25], [0.1, 0.6]])
    dirs = np.array([[1.0, 0.0], [1.0, 0.0]])
    # Interpolate u(x, y) = x^2 on the reference element.
    coeff = space.nodes[:, 0] ** 2
    d1 = space.basis_directional(pts, dirs, 1) @ coeff
    d2 = space.basis_directional(pts, dirs, 2) @ coeff
    assert np.allclose(d1, 2.0 * pts[:, 0], atol=1e-11)
    assert np.allclose(d2, 2.0, atol=1e-11)
    # Second directional derivatives annihilate linears.
    lin = DGSpace(mesh4, 1)
    d2lin = lin.basis_directional(pts, dirs, 2)
    assert np.allclose(d2lin, 0.0, atol=1e-12)


def test_linear_reproduction_on_element(space4):
    mesh = space4.mesh

    def u(p):
        return 2.0 * p[..., 0] - 3.0 * p[..., 1] + 1.0

    e = 5
    verts = mesh.element_vertices(e)
    coeffs = np.zeros(space4.ndof, dtype=complex)
    # Nodes of the P1 space coincide with the element vertices, in the
    # order given by the barycentric lattice.
    phys_nodes = verts[0] + space4.nodes @ mesh.jac[e].T
    coeffs[space4.dofs[e]] = u(phys_nodes)
    f = DGFunction(space4, coeffs)
    ref = np.array([[0.2, 0.3], [0.5, 0.1]])
    phys = verts[0] + ref @ mesh.jac[e].T
    vals, grads = f.evaluate(e, ref, gradient=True)
    assert np.allclose(vals, u(phys), atol=1e-12)
    assert np.allclose(grads, [[2.0, -3.0]] * 2, atol=1e-12)


def test_dgfunction_shape_validation(space4):
    with pytest.raises(ValueError):
        DGFunction(space4, np.zeros(space4.ndof + 1))
    z = DGFunction.zero(space4)
    assert z.coefficients.shape == (space4.ndof,)
    assert z.coefficients.dtype == complex


def test_evaluate_rejects_bad_element(space4):
    f = DGFunction.zero(space4)
    with pytest.raises(IndexError):
        f.evaluate(space4.mesh.n_elements, np.array([[0.1, 0.1]]))


def test_evaluate_physical_constant_everywhere(space4, rng):
    f = DGFunction(space4, np.full(space4.ndof, 2.5 + 0.5j))
    pts = rng.uniform(-0.5, 0.5, size=(40, 2))
    # Include points on cell edges and the diagonal.
    pts = np.vstack([pts, [[0.0, 0.0], [0.1, 0.1], [-0.25, -0.25], [0.5, 0.5], [-0.5, -0.5]]])
    vals = f.evaluate_physical(pts)
    assert np.allclose(vals, 2.5 + 0.5j, atol=1e-12)


def test_broken_norms_of_constant_one(space4, penalties):
    f = DGFunction(space4, np.ones(space4.ndof))
    norms = broken_norms(f, penalties)
    assert abs(norms["l2"] - 1.0) < 1e-12
    assert norms["seminorm_1h"] < 1e-12
    # A globally constant function has no jumps.
    assert norms["norm_1h"] < 1e-12
    assert abs(norms["boundary_l2"] - 2.0) < 1e-12


def test_broken_norms_of_element_indicator(space4, penalties):
    # f = 1 on element 0 and 0 elsewhere.  Element 0 (lower-left corner,
    # lower triangle) touches 2 interior edges; each contributes
    # gamma0 * r / h_e * h_e = gamma0 to the squared jump term.
    coeffs = np.zeros(space4.ndof)
    coeffs[space4.dofs[0]] = 1.0
    f = DGFunction(space4, coeffs)
    norms = broken_norms(f, penalties)
    area = space4.mesh.areas[0]
    assert abs(norms["l2"] - np.sqrt(area)) < 1e-12
    assert norms["seminorm_1h"] < 1e-12
    assert abs(norms["norm_1h"] - np.sqrt(2.0 * penalties.gamma0)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-50.0, max_value=50.0, allow_nan=False))
def test_broken_norms_absolute_homogeneity(c):
    mesh = build_uniform_mesh(3)
    space = DGSpace(mesh, 1)
    pen = PenaltySet()
    gen = np.random.default_rng(7)
    base = gen.standard_normal(space.ndof) + 1j * gen.standard_normal(space.ndof)
    n1 = broken_norms(DGFunction(space, base), pen)
    n2 = broken_norms(DGFunction(space, c * base), pen)
    for key in n1:
        assert n2[key] == pytest.approx(abs(c) * n1[key], abs=1e-9, rel=1e-9)


def test_norms_reject_invalid_penalties(space4):
    f = DGFunction.zero(space4)
    with pytest.raises(ValueError):
        broken_norms(f, PenaltySet(gamma0=0.0))
