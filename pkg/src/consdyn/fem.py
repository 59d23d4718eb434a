"""Structured 2-D plane-strain Q1 finite elements for bar geometries.

A deliberately small FEM kernel: rectangular bars meshed with square Q1
elements, 2x2 Gauss quadrature, consistent mass, stiffness-proportional
viscosity. Displacement dofs are interleaved (ux_0, uy_0, ux_1, uy_1, ...).
The bottom edge can carry a bonded/frictional interface towards a rigid flat
obstacle: those segments get a piecewise-constant internal variable whose
trace pairing and vertical-dof elimination are provided here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError, SingularElementError, UnknownTagError

__all__ = [
    "ElasticityParams",
    "Mesh2D",
    "AssembledOperators",
    "build_bar_mesh",
    "assemble_operators",
    "traction_load",
    "contact_trace",
    "contact_normal_fixed_mask",
]

#: 2x2 Gauss points on [-1, 1]^2 (all weights 1)
_GP = 1.0 / np.sqrt(3.0)
GAUSS_POINTS = ((-_GP, -_GP), (_GP, -_GP), (_GP, _GP), (-_GP, _GP))


@dataclass(frozen=True)
class ElasticityParams:
    """Isotropic material constants (SI units).

    ``chi`` is the relaxation time of the stiffness-proportional viscosity:
    the viscous stress is ``chi`` times the elastic stress rate, i.e. the
    damping matrix is ``chi * K``.
    """

    young: float = 70e9          # [Pa]
    poisson: float = 0.35        # [-]
    density: float = 2700.0      # [kg/m^3]
    chi: float = 2e-9            # [s]

    def __post_init__(self):
        if self.young <= 0 or self.density <= 0 or self.chi < 0:
            raise InvalidArgumentError("young, density must be > 0 and chi >= 0")
        if not (0.0 <= self.poisson < 0.5):
            raise InvalidArgumentError(f"poisson must be in [0, 0.5), got {self.poisson}")

    @property
    def lame_lambda(self) -> float:
        e, nu = self.young, self.poisson
        return e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    @property
    def lame_mu(self) -> float:
        return self.young / (2.0 * (1.0 + self.poisson))

    def plane_strain_matrix(self) -> np.ndarray:
        """Constitutive matrix for (eps_xx, eps_yy, gamma_xy)."""
        lam, mu = self.lame_lambda, self.lame_mu
        return np.array([[lam + 2 * mu, lam, 0.0],
                         [lam, lam + 2 * mu, 0.0],
                         [0.0, 0.0, mu]])


@dataclass
class Mesh2D:
    """Structured quadrilateral mesh of a rectangular bar.

    ``segments`` maps a boundary tag to an (n, 2) array of node pairs ordered
    along the boundary. The ``contact`` tag (if present) lists the bottom
    segments bonded to the rigid obstacle.
    """

    nodes: np.ndarray                 # (n_nodes, 2)
    quads: np.ndarray                 # (n_el, 4), counterclockwise
    nx: int
    ny: int
    length: float
    height: float
    segments: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    @property
    def n_elements(self) -> int:
        return self.quads.shape[0]

    def node_index(self, ix: int, iy: int) -> int:
        return iy * (self.nx + 1) + ix

    @property
    def tip_node(self) -> int:
        """Right-edge node at mid-height (ny is even for the bar meshes)."""
        return self.node_index(self.nx, self.ny // 2)

    @property
    def left_bottom_node(self) -> int:
        return self.node_index(0, 0)

    def segment_lengths(self, tag: str) -> np.ndarray:
        segs = self.segments_of(tag)
        d = self.nodes[segs[:, 1]] - self.nodes[segs[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def segments_of(self, tag: str) -> np.ndarray:
        try:
            return self.segments[tag]
        except KeyError:
            raise UnknownTagError(f"mesh has no boundary tag {tag!r}; "
                                  f"known: {sorted(self.segments)}") from None


def build_bar_mesh(level: int = 1, *, length: float = 0.25, height: float = 0.0125,
                   contact_fraction: float = 0.9,
                   contact_anchor: str = "left") -> Mesh2D:
    """Mesh the bar with square elements; refinement level 1, 2 or 3.

    Level 1 is 40 x 2 elements (80 squares); each level multiplies both
    directions, giving 320 and 720 elements. The bottom edge carries a
    ``contact`` region covering ``contact_fraction`` of the length, anchored
    at the left or right end and snapped to whole segments (the default
    geometries make it exact). The right edge is tagged ``load``.
    """
    if level not in (1, 2, 3):
        raise InvalidArgumentError(f"mesh level must be 1, 2 or 3, got {level}")
    if contact_anchor not in ("left", "right"):
        raise InvalidArgumentError(f"contact_anchor must be left/right, got {contact_anchor}")
    nx, ny = 40 * level, 2 * level
    xs = np.linspace(0.0, length, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    quads = np.empty((nx * ny, 4), dtype=int)
    e = 0
    for j in range(ny):
        for i in range(nx):
            n0 = j * (nx + 1) + i
            quads[e] = (n0, n0 + 1, n0 + nx + 2, n0 + nx + 1)
            e += 1

    n_c_exact = contact_fraction * nx
    n_c = int(round(n_c_exact))
    if abs(n_c - n_c_exact) > 1e-9 or not (0 < n_c <= nx):
        raise InvalidArgumentError(
            f"contact_fraction {contact_fraction} does not align with {nx} "
            f"bottom segments")
    bottom = np.array([(i, i + 1) for i in range(nx)])
    if contact_anchor == "left":
        contact, bottom_free = bottom[:n_c], bottom[n_c:]
    else:
        contact, bottom_free = bottom[nx - n_c:], bottom[:nx - n_c]
    right0 = nx
    load = np.array([(j * (nx + 1) + right0, (j + 1) * (nx + 1) + right0)
                     for j in range(ny)])
    mesh = Mesh2D(nodes=nodes, quads=quads, nx=nx, ny=ny,
                  length=length, height=height,
                  segments={"contact": contact, "bottom_free": bottom_free,
                            "load": load})
    _validate_jacobians(mesh)
    return mesh


def _shape_q1(xi: float, eta: float):
    n = 0.25 * np.array([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                         (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)])
    dn = 0.25 * np.array([[-(1 - eta), -(1 - xi)],
                          [(1 - eta), -(1 + xi)],
                          [(1 + eta), (1 + xi)],
                          [-(1 + eta), (1 - xi)]])
    return n, dn


def element_gauss_data(mesh: Mesh2D):
    """Per-element quadrature tables.

    Returns ``(weights, B, N)`` with shapes (n_el, 4), (n_el, 4, 3, 8) and
    (4, 4): integration weight (including the Jacobian), strain-displacement
    matrix in Voigt order (eps_xx, eps_yy, gamma_xy) per Gauss point, and the
    shape-function values at the Gauss points (identical for all elements).
    """
    n_el = mesh.n_elements
    weights = np.empty((n_el, 4))
    B = np.zeros((n_el, 4, 3, 8))
    N = np.empty((4, 4))
    shape_cache = [_shape_q1(xi, eta) for xi, eta in GAUSS_POINTS]
    for g, (n, _dn) in enumerate(shape_cache):
        N[g] = n
    for e in range(n_el):
        xy = mesh.nodes[mesh.quads[e]]
        for g, (xi, eta) in enumerate(GAUSS_POINTS):
            _n, dn = shape_cache[g]
            J = dn.T @ xy                       # (2, 2)
            detJ = np.linalg.det(J)
            if detJ <= 0.0:
                raise SingularElementError(
                    f"element {e} has non-positive Jacobian {detJ:.3e}")
            dndx = dn @ np.linalg.inv(J).T      # (4, 2)
            weights[e, g] = detJ                # Gauss weights are all 1
            for a in range(4):
                B[e, g, 0, 2 * a] = dndx[a, 0]
                B[e, g, 1, 2 * a + 1] = dndx[a, 1]
                B[e, g, 2, 2 * a] = dndx[a, 1]
                B[e, g, 2, 2 * a + 1] = dndx[a, 0]
    return weights, B, N


def _validate_jacobians(mesh: Mesh2D) -> None:
    element_gauss_data(mesh)   # raises SingularElementError on bad elements


@dataclass
class AssembledOperators:
    """Global matrices of the elastic bar: stiffness, consistent mass, viscosity.

    ``D = chi * K`` (stiffness-proportional damping). ``K`` is symmetric
    positive semi-definite with the three rigid-body motions as nullspace;
    ``M`` is symmetric positive definite.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    D: sp.csr_matrix
    mesh: Mesh2D
    elast: ElasticityParams


def _element_dofs(quad: np.ndarray) -> np.ndarray:
    dofs = np.empty(8, dtype=int)
    dofs[0::2] = 2 * quad
    dofs[1::2] = 2 * quad + 1
    return dofs


def assemble_operators(mesh: Mesh2D, elast: ElasticityParams) -> AssembledOperators:
    """Assemble K, M and D = chi*K on the full (unconstrained) dof set."""
    C = elast.plane_strain_matrix()
    weights, B, N = element_gauss_data(mesh)
    n_el = mesh.n_elements
    rows, cols, k_vals, m_vals = [], [], [], []
    for e in range(n_el):
        dofs = _element_dofs(mesh.quads[e])
        Ke = np.zeros((8, 8))
        Me = np.zeros((8, 8))
        for g in range(4):
            Bg = B[e, g]
            Ke += weights[e, g] * (Bg.T @ C @ Bg)
            Ng = np.zeros((2, 8))
            Ng[0, 0::2] = N[g]
            Ng[1, 1::2] = N[g]
            Me += elast.density * weights[e, g] * (Ng.T @ Ng)
        Ke = 0.5 * (Ke + Ke.T)
        Me = 0.5 * (Me + Me.T)
        grid = np.meshgrid(dofs, dofs, indexing="ij")
        rows.append(grid[0].ravel())
        cols.append(grid[1].ravel())
        k_vals.append(Ke.ravel())
        m_vals.append(Me.ravel())
    n = mesh.n_dofs
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    K = sp.coo_matrix((np.concatenate(k_vals), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((np.concatenate(m_vals), (rows, cols)), shape=(n, n)).tocsr()
    K = (0.5 * (K + K.T)).tocsr()
    M = (0.5 * (M + M.T)).tocsr()
    D = (elast.chi * K).tocsr()
    return AssembledOperators(K=K, M=M, D=D, mesh=mesh, elast=elast)


def traction_load(mesh: Mesh2D, tag: str, direction=(1.0, 0.0)) -> np.ndarray:
    """Consistent nodal load of a unit traction [Pa] on a tagged edge.

    Returns the load vector for traction magnitude 1 in the given direction;
    scale by q(t) for time-dependent loading. Each segment contributes half
    its length to either end node.
    """
    segs = mesh.segments_of(tag)
    direction = np.asarray(direction, dtype=float)
    load = np.zeros(mesh.n_dofs)
    lengths = mesh.segment_lengths(tag)
    for (n1, n2), ell in zip(segs, lengths):
        for nn in (n1, n2):
            load[2 * nn: 2 * nn + 2] += 0.5 * ell * direction
    return load


def contact_trace(mesh: Mesh2D):
    """Tangential midpoint trace of the contact segments.

    Returns ``(T, lengths, midpoints)``: a sparse (n_seg, n_dofs) matrix with
    ``(T u)_e`` the horizontal displacement at the midpoint of segment ``e``,
    the segment lengths, and the midpoint x-coordinates.
    """
    segs = mesh.segments_of("contact")
    n_seg = segs.shape[0]
    rows = np.repeat(np.arange(n_seg), 2)
    cols = (2 * segs).ravel()          # x-dofs of both end nodes
    vals = np.full(2 * n_seg, 0.5)
    T = sp.coo_matrix((vals, (rows, cols)), shape=(n_seg, mesh.n_dofs)).tocsr()
    lengths = mesh.segment_lengths("contact")
    mids = 0.5 * (mesh.nodes[segs[:, 0], 0] + mesh.nodes[segs[:, 1], 0])
    return T, lengths, mids


def contact_normal_fixed_mask(mesh: Mesh2D) -> np.ndarray:
    """Boolean dof mask eliminating the normal displacement on the contact.

    The obstacle is rigid and flat and the bond is bilateral in the normal
    direction, so the vertical dofs of every contact node are constrained to
    zero.
    """
    mask = np.zeros(mesh.n_dofs, dtype=bool)
    segs = mesh.segments_of("contact")
    for nn in np.unique(segs):
        mask[2 * nn + 1] = True
    return mask
