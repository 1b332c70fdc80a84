"""Discrete obstacle problem at fixed control and strong-stationarity checks.

In algebraic form the state satisfies

    A y = b + xi,   y >= psi,   xi >= 0,   xi . (y - psi) = 0

on interior nodes, with b the load vector of f + u.  :func:`solve_vi_pdas`
solves this complementarity system with a primal-dual active set method.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .linalg import Factorization, NoConvergenceError, as_csr

log = logging.getLogger(__name__)

PDAS_MAX_ITERS = 500


@dataclass(frozen=True, eq=False)
class ViSolution:
    y: np.ndarray          # all vertices, zero on the boundary
    xi: np.ndarray         # interior slack
    active_set: np.ndarray
    pdas_iters: int


def _interior_control(u, data):
    u = np.asarray(u, dtype=float)
    if u.shape == (data.n,):
        u = data.full(u)
    return u


def pdas(A, b, psi, c=1.0, max_iters=PDAS_MAX_ITERS):
    """Solve A y = b + xi with complementarity y >= psi, xi >= 0.  Returns (y, xi, active, iters)."""
    A = as_csr(A)
    n = b.shape[0]
    y = Factorization(A).solve(b)
    xi = np.zeros(n)
    previous = None
    for it in range(1, max_iters + 1):
        active = xi + c * (psi - y) > 0
        if previous is not None and np.array_equal(active, previous):
            return y, xi, np.flatnonzero(active), it - 1
        inactive = ~active
        y = np.where(active, psi, 0.0)
        if inactive.any():
            rhs = b[inactive] - A[inactive][:, active] @ psi[active]
            y[inactive] = Factorization(A[inactive][:, inactive]).solve(rhs)
        xi = np.zeros(n)
        xi[active] = (A @ y - b)[active]
        previous = active
    raise NoConvergenceError(f"active set did not settle in {max_iters} iterations", max_iters)


def solve_vi_pdas(u, data, c=1.0, max_iters=PDAS_MAX_ITERS):
    """State of the unpenalized obstacle problem for the nodal control ``u``."""
    b = data.load_f + data.control_load(_interior_control(u, data))
    y, xi, active, iters = pdas(data.A, b, data.psi_int, c=c, max_iters=max_iters)
    log.debug("pdas converged in %d iterations, %d active nodes", iters, active.size)
    return ViSolution(y=data.full(y), xi=xi, active_set=active, pdas_iters=iters)


def complementarity_residual(y, xi, psi):
    d = np.asarray(y, dtype=float) - np.asarray(psi, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return float(max(np.max(-d, initial=0.0), np.max(-xi, initial=0.0),
                     np.max(np.abs(xi * d), initial=0.0)))


@dataclass(frozen=True)
class StationarityReport:
    state: float            # A y - b(f+u) - xi
    complementarity: float  # y >= psi, xi >= 0, xi (y - psi) = 0
    adjoint: float          # A p - (M y - b(y0) - mu)
    switching: float        # (y - psi) mu = 0 and xi p = 0
    gradient: float         # alpha (u - u_d) + p = 0
    biactive_sign: float    # mu >= 0, p >= 0 where y = psi and xi = 0

    @property
    def worst(self):
        return max(self.state, self.complementarity, self.adjoint, self.switching,
                   self.gradient, self.biactive_sign)

    def as_dict(self):
        return {"state": self.state, "complementarity": self.complementarity,
                "adjoint": self.adjoint, "switching": self.switching,
                "gradient": self.gradient, "biactive_sign": self.biactive_sign}


def check_strong_stationarity(u, y, p, xi, mu, data, tau=0.0):
    """Max-norm violations of the strong stationarity system.

    ``y``, ``p``, ``xi`` and ``mu`` are interior vectors (full-length nodal
    ``y``/``p`` are truncated); ``u`` is a nodal control on all vertices or
    on the interior nodes.  Nodes with |y - psi| <= tau and |xi| <= tau are
    treated as biactive.
    """
    n = data.n
    y = np.asarray(y, dtype=float)[:n]
    p = np.asarray(p, dtype=float)[:n]
    xi = np.asarray(xi, dtype=float)[:n]
    mu = np.asarray(mu, dtype=float)[:n]
    u = _interior_control(u, data)
    d = y - data.psi_int

    state = data.A @ y - data.load_f - data.control_load(u) - xi
    adjoint = data.A @ p - (data.M @ y - data.load_y0 - mu)
    switching = max(np.max(np.abs(d * mu), initial=0.0), np.max(np.abs(xi * p), initial=0.0))
    p_nodal = data.full(p)
    grad = data.alpha * (u - data.ud_nodal) + p_nodal
    bi = (np.abs(d) <= tau) & (np.abs(xi) <= tau)
    sign = max(np.max(-mu[bi], initial=0.0), np.max(-p[bi], initial=0.0))
    return StationarityReport(state=float(np.abs(state).max(initial=0.0)),
                              complementarity=complementarity_residual(y, xi, data.psi_int),
                              adjoint=float(np.abs(adjoint).max(initial=0.0)),
                              switching=float(switching),
                              gradient=float(np.abs(grad).max(initial=0.0)),
                              biactive_sign=float(sign))


def eta_unpenalized(y, p, xi, mu, psi):
    """min( min_{y>psi} p/(y-psi), min_{xi>0} mu/xi, 0 )."""
    d = np.asarray(y, dtype=float) - np.asarray(psi, dtype=float)
    p = np.asarray(p, dtype=float)
    xi = np.asarray(xi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    pos = d > 0
    act = xi > 0
    r1 = float(np.min(p[pos] / d[pos])) if pos.any() else math.inf
    r2 = float(np.min(mu[act] / xi[act])) if act.any() else math.inf
    return min(r1, r2, 0.0)


def penalized_slacks(y, p, gamma, data):
    """Slack and multiplier vectors of a penalized solution in algebraic form.

    ``xi = -g^3 m w^3`` and ``mu = 3 g^3 m w^2 p`` (w = min(y - psi, 0)) make
    the state and adjoint equations of the unpenalized system hold exactly.
    Relative to the nodal multiplier fields of
    :func:`obsctl.certificate.multiplier_fields` this is ``m * xi_field``
    and ``-m * mu_field``.
    """
    n = data.n
    w = np.minimum(np.asarray(y, dtype=float)[:n] - data.psi_int, 0.0)
    g3 = gamma ** 3
    xi = -g3 * data.m * w ** 3
    mu = 3.0 * g3 * data.m * w ** 2 * np.asarray(p, dtype=float)[:n]
    return xi + 0.0, mu + 0.0
