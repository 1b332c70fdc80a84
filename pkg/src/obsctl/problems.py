"""Problem data for the penalized control problem and the built-in presets.

A :class:`ProblemData` bundles the mesh, the regularization weight alpha and
the data functions f, y0, psi, u_d together with every assembled quantity the
solvers need.  Vectors named ``*_int`` or documented as interior live on the
n interior nodes; everything else is indexed by all vertices.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import fem
from .mesh import Domain, build_uniform_mesh

# Dirichlet eigenvalue of -Laplace used for certification when none is supplied
REFERENCE_LAMBDA1 = {
    Domain.UNIT_SQUARE: 2.0 * np.pi ** 2,
    Domain.L_SHAPE: 9.63977851,
}


def zero(x1, x2):
    return np.zeros_like(np.asarray(x1, dtype=float))


def constant(c):
    def g(x1, x2):
        return np.full(np.shape(x1), float(c))
    return g


@dataclass(frozen=True, eq=False)
class ProblemData:
    mesh: object
    alpha: float
    f: object
    y0: object
    psi: object
    u_d: object = zero
    quadrature: str = "midpoint"
    name: str = "custom"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.quadrature not in fem.QUADRATURE_RULES:
            raise ValueError(f"unknown quadrature rule {self.quadrature!r}")

    @property
    def n(self):
        return self.mesh.n_interior

    @cached_property
    def A_full(self):
        return fem.assemble_stiffness(self.mesh)

    @cached_property
    def M_full(self):
        return fem.assemble_mass(self.mesh)

    @cached_property
    def A(self):
        return fem.interior_block(self.A_full, self.mesh)

    @cached_property
    def M(self):
        return fem.interior_block(self.M_full, self.mesh)

    @cached_property
    def m(self):
        """Lumped masses of the interior nodes."""
        return fem.lumped_masses(self.mesh)[:self.n]

    @cached_property
    def psi_nodal(self):
        return fem.interpolate(self.psi, self.mesh)

    @cached_property
    def psi_int(self):
        return self.psi_nodal[:self.n]

    @cached_property
    def y0_nodal(self):
        return fem.interpolate(self.y0, self.mesh)

    @cached_property
    def ud_nodal(self):
        return fem.interpolate(self.u_d, self.mesh)

    @cached_property
    def load_f(self):
        return fem.load_vector(self.f, self.mesh, self.quadrature)[:self.n]

    @cached_property
    def load_y0_full(self):
        return fem.load_vector(self.y0, self.mesh, self.quadrature)

    @cached_property
    def load_y0(self):
        return self.load_y0_full[:self.n]

    @cached_property
    def load_ud(self):
        return self.control_load(self.ud_nodal)

    @cached_property
    def y0_energy(self):
        """Constant term 0.5 * ||I_h y0||^2 of the tracking functional."""
        return 0.5 * float(self.y0_nodal @ (self.M_full @ self.y0_nodal))

    def control_load(self, u):
        """Interior rows of M * u for a nodal control given on all vertices."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.mesh.n_vertices,):
            raise ValueError(f"control must have {self.mesh.n_vertices} nodal values")
        return (self.M_full @ u)[:self.n]

    def full(self, v):
        return self.mesh.extend(v)


def from_functions(domain, N, alpha, f, y0, psi, u_d=zero, quadrature="midpoint", name="custom"):
    mesh = build_uniform_mesh(Domain.parse(domain) if isinstance(domain, str) else domain, N)
    return ProblemData(mesh=mesh, alpha=float(alpha), f=f, y0=y0, psi=psi, u_d=u_d,
                       quadrature=quadrature, name=name)


# ---- preset data -----------------------------------------------------------

def _y0_linear(x1, x2):
    return -(5.0 * x1 + x2 - 1.0)


def _psi_bump(x1, x2):
    return -4.0 * (x1 * (x1 - 1.0) + x2 * (x2 - 1.0)) - 1.5


def _f_shift(x1, x2):
    return -(x1 - 0.5)


# example 3: manufactured solution with a biactive strip

_C3 = np.array([0.8, 0.9])
_TH = np.pi / 6.0
ROTATION = np.array([[np.cos(_TH), -np.sin(_TH)], [np.sin(_TH), np.cos(_TH)]])


def _y1(t):
    return -4096.0 * t**6 + 6144.0 * t**5 - 3072.0 * t**4 + 512.0 * t**3


def _y1pp(t):
    return -122880.0 * t**4 + 122880.0 * t**3 - 36864.0 * t**2 + 3072.0 * t


def _y2(t):
    return -244.140625 * t**6 + 585.9375 * t**5 - 468.75 * t**4 + 125.0 * t**3


def _y2pp(t):
    return -7324.21875 * t**4 + 11718.75 * t**3 - 5625.0 * t**2 + 750.0 * t


def _local(x1, x2):
    """Coordinates Q^t (x - c) relative to the rotated square."""
    d1 = np.asarray(x1, dtype=float) - _C3[0]
    d2 = np.asarray(x2, dtype=float) - _C3[1]
    z1 = ROTATION[0, 0] * d1 + ROTATION[1, 0] * d2
    z2 = ROTATION[0, 1] * d1 + ROTATION[1, 1] * d2
    return z1, z2


def _in_square(x1, x2):
    z1, z2 = _local(x1, x2)
    return np.maximum(np.abs(z1), np.abs(z2)) <= 0.05


def _p1_factors(x1, x2):
    z1, z2 = _local(x1, x2)
    return 0.5 - 200.0 * z1**2, 0.5 - 200.0 * z2**2


def mt_state(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    inside = (x1 < 0.5) & (x2 < 0.8)
    return np.where(inside, _y1(x1) * _y2(x2), 0.0)


def mt_minus_laplace_state(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    inside = (x1 < 0.5) & (x2 < 0.8)
    return np.where(inside, -(_y1pp(x1) * _y2(x2) + _y1(x1) * _y2pp(x2)), 0.0)


def mt_slack(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    inside = (x1 > 0.5) & (x2 < 0.8)
    return np.where(inside, _y1(x1 - 0.5) * _y2(x2), 0.0)


def mt_adjoint(x1, x2):
    a, b = _p1_factors(x1, x2)
    return np.where(_in_square(x1, x2), a * b, 0.0)


def mt_laplace_adjoint(x1, x2):
    a, b = _p1_factors(x1, x2)
    return np.where(_in_square(x1, x2), -400.0 * (a + b), 0.0)


def _mt_f(x1, x2, alpha=1.0):
    return mt_minus_laplace_state(x1, x2) - mt_slack(x1, x2) + mt_adjoint(x1, x2) / alpha


def _mt_y0(x1, x2):
    return mt_state(x1, x2) + mt_laplace_adjoint(x1, x2)


def _mrw_f(x1, x2):
    return 0.5 + 0.5 * (x1 - x2)


def _mrw_y0(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return np.where(np.hypot(x1, x2) >= 0.1, -1.0, 1.0 - 100.0 * x1**2 - 50.0 * x2**2)


PRESETS = {
    1: dict(domain=Domain.UNIT_SQUARE, alpha=0.1, f=constant(-0.1), y0=_y0_linear, psi=_psi_bump),
    2: dict(domain=Domain.UNIT_SQUARE, alpha=0.1, f=_f_shift, y0=_y0_linear, psi=zero),
    # the tracking shift u_d = u + p/alpha is folded into f, so u_d = 0 here
    3: dict(domain=Domain.UNIT_SQUARE, alpha=1.0, f=_mt_f, y0=_mt_y0, psi=zero),
    4: dict(domain=Domain.L_SHAPE, alpha=1.0, f=_mrw_f, y0=_mrw_y0, psi=zero),
}

# loads of the presets use the one-point centroid rule; see README
PRESET_QUADRATURE = "centroid"


def example(k, N=64, quadrature=PRESET_QUADRATURE):
    """Problem data of built-in example ``k`` (1..4) on the uniform mesh with N cells per unit."""
    try:
        spec = PRESETS[int(k)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown example {k!r}; choose 1, 2, 3 or 4") from None
    return from_functions(spec["domain"], N, spec["alpha"], spec["f"], spec["y0"], spec["psi"],
                          quadrature=quadrature, name=f"example{int(k)}")


def reference_lambda1(domain):
    return REFERENCE_LAMBDA1[domain]
