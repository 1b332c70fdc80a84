"""P1 finite element assembly on a :class:`~obsctl.mesh.Mesh`.

All assembled objects live on the full vertex set (interior nodes first);
use :func:`interior_block` to extract the Dirichlet-constrained part.
"""

import numpy as np
import scipy.sparse as sp

from .linalg import as_csr

# (barycentric points, weights) on the reference triangle, weights summing to 1
QUADRATURE_RULES = {
    # edge midpoints, exact for quadratics
    "midpoint": (np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
                 np.full(3, 1.0 / 3.0)),
    # one-point centroid rule: f(centroid) * area / 3 on every vertex
    "centroid": (np.array([[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]]), np.ones(1)),
}


def _gradients(mesh):
    """Areas (nt,) and gradients of the three barycentric functions (nt, 3, 2)."""
    v = mesh.vertices[mesh.triangles]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
    grads = np.stack([-g1 - g2, g1, g2], axis=1)
    return 0.5 * det, grads


def _scatter(mesh, local):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return as_csr(sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)))


def assemble_stiffness(mesh):
    area, grads = _gradients(mesh)
    local = area[:, None, None] * np.einsum("tad,tbd->tab", grads, grads)
    return _scatter(mesh, local)


def assemble_mass(mesh):
    area = mesh.areas()
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return _scatter(mesh, area[:, None, None] * ref[None])


def lumped_masses(mesh):
    """m_j = integral of the hat function phi_j = (1/3) * area of its patch."""
    m = np.zeros(mesh.n_vertices)
    area = mesh.areas()
    for a in range(3):
        np.add.at(m, mesh.triangles[:, a], area / 3.0)
    return m


def interior_block(A, mesh):
    n = mesh.n_interior
    return as_csr(A[:n, :n])


def interpolate(g, mesh):
    """Nodal values g(x_j) on every vertex."""
    x = mesh.vertices
    vals = np.asarray(g(x[:, 0], x[:, 1]), dtype=float)
    return np.broadcast_to(vals, (mesh.n_vertices,)).copy()


def load_vector(g, mesh, rule="midpoint"):
    """Vector of integrals of g * phi_i over the domain, for every vertex i."""
    bary, weights = QUADRATURE_RULES[rule]
    v = mesh.vertices[mesh.triangles]
    area = mesh.areas()
    out = np.zeros(mesh.n_vertices)
    for lam, w in zip(bary, weights):
        pts = lam[0] * v[:, 0] + lam[1] * v[:, 1] + lam[2] * v[:, 2]
        gq = np.broadcast_to(np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float), area.shape)
        for a in range(3):
            np.add.at(out, mesh.triangles[:, a], w * lam[a] * area * gq)
    return out


def quadrature_integral(g, mesh, rule="midpoint"):
    """Integral of g over the domain with the given triangle rule."""
    bary, weights = QUADRATURE_RULES[rule]
    v = mesh.vertices[mesh.triangles]
    area = mesh.areas()
    total = 0.0
    for lam, w in zip(bary, weights):
        pts = lam[0] * v[:, 0] + lam[1] * v[:, 1] + lam[2] * v[:, 2]
        total += w * np.sum(area * np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float))
    return float(total)
