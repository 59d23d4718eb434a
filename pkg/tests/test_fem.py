"""Tests for the plane-strain Q1 kernel.

Expected values are closed-form: energies of linear displacement fields,
the uniaxial-stretch solution of a bar on rollers (exactly representable in
the Q1 space, so the discrete solution matches it to solver precision), total
mass, traction resultants, and rigid-body nullspaces.
"""

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from consdyn.errors import InvalidArgumentError, UnknownTagError
from consdyn.fem import (
    AssembledOperators,
    ElasticityParams,
    assemble_operators,
    build_bar_mesh,
    contact_normal_fixed_mask,
    contact_trace,
    element_gauss_data,
    traction_load,
)

LENGTH, HEIGHT = 0.25, 0.0125


def _default() -> ElasticityParams:
    return ElasticityParams()


# ---------------------------------------------------------------------------
# material constants
# ---------------------------------------------------------------------------

def test_lame_constants_round_to_reference_values():
    # E = 70 GPa, nu = 0.35 give lambda ~ 60.49 GPa, mu ~ 25.93 GPa
    p = _default()
    assert round(p.lame_lambda / 1e9) == 60
    assert round(p.lame_mu / 1e9) == 26
    np.testing.assert_allclose(
        p.lame_lambda, 70e9 * 0.35 / (1.35 * 0.30), rtol=1e-14)
    np.testing.assert_allclose(p.lame_mu, 70e9 / 2.7, rtol=1e-14)


def test_elasticity_params_validation():
    with pytest.raises(InvalidArgumentError):
        ElasticityParams(poisson=0.5)
    with pytest.raises(InvalidArgumentError):
        ElasticityParams(young=-1.0)
    with pytest.raises(InvalidArgumentError):
        ElasticityParams(chi=-1e-9)


# ---------------------------------------------------------------------------
# meshing
# ---------------------------------------------------------------------------

def test_mesh_levels_element_and_node_counts():
    for level, n_el in ((1, 80), (2, 320), (3, 720)):
        mesh = build_bar_mesh(level, length=LENGTH, height=HEIGHT)
        assert mesh.n_elements == n_el
        nx, ny = 40 * level, 2 * level
        assert mesh.n_nodes == (nx + 1) * (ny + 1)
        assert mesh.nodes[:, 0].max() == LENGTH
        assert mesh.nodes[:, 1].max() == HEIGHT


def test_mesh_contact_segments_friction_and_delamination():
    # 90% of the bottom, left-anchored: 36/72/108 segments
    for level, n_seg in ((1, 36), (2, 72), (3, 108)):
        mesh = build_bar_mesh(level, contact_fraction=0.9)
        segs = mesh.segments_of("contact")
        assert segs.shape == (n_seg, 2)
        np.testing.assert_allclose(mesh.segment_lengths("contact").sum(),
                                   0.9 * LENGTH, rtol=1e-14)
        assert mesh.nodes[segs[0, 0], 0] == 0.0          # anchored left
    # 10% of the bottom: 4/8/12 segments
    for level, n_seg in ((1, 4), (2, 8), (3, 12)):
        mesh = build_bar_mesh(level, contact_fraction=0.1)
        assert mesh.segments_of("contact").shape == (n_seg, 2)


def test_mesh_validation():
    with pytest.raises(InvalidArgumentError):
        build_bar_mesh(4)
    with pytest.raises(InvalidArgumentError):
        build_bar_mesh(1, contact_fraction=0.113)   # not a whole segment count
    mesh = build_bar_mesh(1)
    with pytest.raises(UnknownTagError):
        mesh.segments_of("lid")


def test_gauss_weights_integrate_area():
    mesh = build_bar_mesh(1)
    weights, B, N = element_gauss_data(mesh)
    np.testing.assert_allclose(weights.sum(), LENGTH * HEIGHT, rtol=1e-14)
    np.testing.assert_allclose(N.sum(axis=1), 1.0, rtol=1e-14)   # partition of unity
    assert B.shape == (mesh.n_elements, 4, 3, 8)


# ---------------------------------------------------------------------------
# assembled operators
# ---------------------------------------------------------------------------

def test_total_mass_is_exact():
    mesh = build_bar_mesh(2)
    ops = assemble_operators(mesh, _default())
    ones_x = np.zeros(mesh.n_dofs)
    ones_x[0::2] = 1.0
    total = ones_x @ (ops.M @ ones_x)
    np.testing.assert_allclose(total, 2700.0 * LENGTH * HEIGHT, rtol=1e-13)


def test_stiffness_annihilates_rigid_modes():
    mesh = build_bar_mesh(1)
    ops = assemble_operators(mesh, _default())
    scale = abs(ops.K).max()
    tx = np.zeros(mesh.n_dofs)
    tx[0::2] = 1.0
    ty = np.zeros(mesh.n_dofs)
    ty[1::2] = 1.0
    rot = np.zeros(mesh.n_dofs)
    rot[0::2] = -mesh.nodes[:, 1]
    rot[1::2] = mesh.nodes[:, 0]
    for mode in (tx, ty, rot):
        assert np.max(np.abs(ops.K @ mode)) <= 1e-9 * scale * np.max(np.abs(mode) + 1)


def test_stiffness_nullspace_is_exactly_three_dimensional():
    # small mesh so a dense eigendecomposition is cheap
    mesh = build_bar_mesh(1)
    ops = assemble_operators(mesh, _default())
    w = np.linalg.eigvalsh(ops.K.toarray())
    scale = w[-1]
    assert np.all(w >= -1e-10 * scale)
    assert np.count_nonzero(w < 1e-10 * scale) == 3


def test_mass_is_positive_definite():
    mesh = build_bar_mesh(1)
    ops = assemble_operators(mesh, _default())
    w = np.linalg.eigvalsh(ops.M.toarray())
    assert w[0] > 0.0


def test_damping_is_chi_times_stiffness():
    mesh = build_bar_mesh(1)
    p = _default()
    ops = assemble_operators(mesh, p)
    diff = (ops.D - p.chi * ops.K)
    assert abs(diff).max() == 0.0


def test_assembly_is_deterministic():
    mesh = build_bar_mesh(2)
    a = assemble_operators(mesh, _default())
    b = assemble_operators(mesh, _default())
    assert np.array_equal(a.K.data, b.K.data)
    assert np.array_equal(a.M.data, b.M.data)


# ---------------------------------------------------------------------------
# patch test: linear fields carry exactly the continuum energy
# ---------------------------------------------------------------------------

def test_patch_linear_fields_energy():
    mesh = build_bar_mesh(1)
    p = _default()
    ops = assemble_operators(mesh, p)
    C = p.plane_strain_matrix()
    vol = LENGTH * HEIGHT
    rng = np.random.default_rng(7)
    for _ in range(5):
        a = rng.normal(size=(2, 3))   # u_i = a[i,0] + a[i,1] x + a[i,2] y
        u = np.zeros(mesh.n_dofs)
        u[0::2] = a[0, 0] + a[0, 1] * mesh.nodes[:, 0] + a[0, 2] * mesh.nodes[:, 1]
        u[1::2] = a[1, 0] + a[1, 1] * mesh.nodes[:, 0] + a[1, 2] * mesh.nodes[:, 1]
        eps = np.array([a[0, 1], a[1, 2], a[0, 2] + a[1, 1]])
        exact = 0.5 * vol * eps @ C @ eps
        fem = 0.5 * u @ (ops.K @ u)
        # quadrature is exact for linear fields; only assembly roundoff remains
        np.testing.assert_allclose(fem, exact, rtol=1e-11)


# ---------------------------------------------------------------------------
# uniaxial stretch of a bar on rollers (exact in the Q1 space)
# ---------------------------------------------------------------------------

def test_bar_stretch_matches_plane_strain_solution():
    mesh = build_bar_mesh(2)
    p = _default()
    ops = assemble_operators(mesh, p)
    q = 1e6   # 1 MPa end traction
    load = q * traction_load(mesh, "load", direction=(1.0, 0.0))

    fixed = np.zeros(mesh.n_dofs, dtype=bool)
    left = np.flatnonzero(mesh.nodes[:, 0] == 0.0)
    fixed[2 * left] = True                      # rollers: u_x = 0 on x = 0
    fixed[2 * mesh.left_bottom_node + 1] = True  # pin one u_y
    free = np.flatnonzero(~fixed)

    K_ff = ops.K[free][:, free].tocsc()
    u = np.zeros(mesh.n_dofs)
    u[free] = spla.spsolve(K_ff, load[free])

    eps_xx = q * (1.0 - p.poisson**2) / p.young
    tip = mesh.tip_node
    np.testing.assert_allclose(u[2 * tip], eps_xx * LENGTH, rtol=1e-9)
    # the whole field is the affine exact solution
    eps_yy = -q * p.poisson * (1.0 + p.poisson) / p.young
    u_exact = np.zeros(mesh.n_dofs)
    u_exact[0::2] = eps_xx * mesh.nodes[:, 0]
    u_exact[1::2] = eps_yy * (mesh.nodes[:, 1] - mesh.nodes[mesh.left_bottom_node, 1])
    np.testing.assert_allclose(u, u_exact, atol=1e-9 * abs(u_exact).max())


# ---------------------------------------------------------------------------
# boundary loads and traces
# ---------------------------------------------------------------------------

def test_traction_resultant_equals_pressure_times_edge():
    mesh = build_bar_mesh(3)
    load = traction_load(mesh, "load", direction=(1.0, 0.0))
    np.testing.assert_allclose(load[0::2].sum(), HEIGHT, rtol=1e-14)
    assert load[1::2].sum() == 0.0
    # only right-edge nodes are loaded
    right = mesh.nodes[:, 0] == LENGTH
    assert np.all(load[0::2][~right] == 0.0)


def test_contact_trace_midpoint_average():
    mesh = build_bar_mesh(1, contact_fraction=0.9)
    T, lengths, mids = contact_trace(mesh)
    assert T.shape == (36, mesh.n_dofs)
    np.testing.assert_allclose(lengths, LENGTH / 40, rtol=1e-12)
    u = np.zeros(mesh.n_dofs)
    u[0::2] = 3.0 + 2.0 * mesh.nodes[:, 0]      # linear in x
    np.testing.assert_allclose(T @ u, 3.0 + 2.0 * mids, rtol=1e-13)


def test_contact_normal_mask_pins_vertical_dofs():
    mesh = build_bar_mesh(1, contact_fraction=0.1)
    mask = contact_normal_fixed_mask(mesh)
    segs = mesh.segments_of("contact")
    contact_nodes = np.unique(segs)
    assert mask.sum() == contact_nodes.size == 5
    assert np.all(mask[2 * contact_nodes + 1])
    assert not np.any(mask[2 * contact_nodes])
