"""Newton solvers for the penalized state equation and the coupled optimality system.

Unknowns are interior nodal vectors (length n); returned fields are
zero-extended to all vertices.  With ``w = min(y - psi, 0)`` the discrete
state equation reads ``A y + g^3 m w^3 = load(f + u)`` where ``g`` is the
penalty parameter gamma and ``m`` the lumped masses.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import Factorization, IllConditionedError, NoConvergenceError

log = logging.getLogger(__name__)

MAX_NEWTON = 200
KKT_TOL = 1e-15
FULL_STEP_ITERS = 50
DEFAULT_SCHEDULE = tuple(10.0 ** k for k in range(16))


def negative_part(v):
    """(v)^- as a nonpositive number: min(v, 0)."""
    return np.minimum(v, 0.0)


def penalty_term(y, gamma, data):
    """Components gamma^3 m_j [(y_j - psi_j)^-]^3 for interior ``y``."""
    w = negative_part(y - data.psi_int)
    return gamma ** 3 * data.m * w ** 3


def penalty_energy(y, gamma, data):
    """gamma^3 * sum m_j [(y_j - psi_j)^-]^4, which vanishes as gamma grows."""
    w = negative_part(y - data.psi_int)
    return float(gamma ** 3 * np.sum(data.m * w ** 4))


def state_energy(z, gamma, data, load):
    """Convex functional whose unique minimizer solves the state equation."""
    w = negative_part(z - data.psi_int)
    return float(0.5 * z @ (data.A @ z) + 0.25 * gamma ** 3 * np.sum(data.m * w ** 4) - z @ load)


def solve_state(u, gamma, data, y_init=None, max_iters=MAX_NEWTON):
    """Penalized state for the nodal control ``u`` (all vertices).

    Newton's method with Armijo backtracking on :func:`state_energy`; a step
    that halves the residual norm is accepted as well.
    Returns ``(y, iterations)`` with ``y`` zero-extended.
    """
    load = data.load_f + data.control_load(u)
    tol = 1e-12 * (1.0 + np.abs(load).max())
    y = np.zeros(data.n) if y_init is None else np.array(y_init[:data.n], dtype=float)
    g3 = gamma ** 3
    q = state_energy(y, gamma, data, load)
    for it in range(max_iters + 1):
        w = negative_part(y - data.psi_int)
        r = data.A @ y + g3 * data.m * w ** 3 - load
        if np.abs(r).max() <= tol:
            return data.full(y), it
        if it == max_iters:
            break
        H = data.A + sp.diags(3.0 * g3 * data.m * w ** 2)
        d = -Factorization(H).solve(r)
        slope = r @ d
        rnorm = np.linalg.norm(r)
        t = 1.0
        while True:
            trial = y + t * d
            q_trial = state_energy(trial, gamma, data, load)
            if q_trial <= q + 1e-4 * t * slope:
                break
            # near the solution energy differences drown in roundoff; a
            # clear residual decrease is then the better acceptance test
            w_t = negative_part(trial - data.psi_int)
            r_t = data.A @ trial + g3 * data.m * w_t ** 3 - load
            if np.linalg.norm(r_t) <= 0.5 * rnorm:
                break
            t *= 0.5
            if t < 1e-12:
                # no representable decrease left; accept if nearly converged
                if np.abs(r).max() <= 1e3 * tol:
                    return data.full(y), it
                raise NoConvergenceError("line search failed in state solve", it)
        y, q = trial, q_trial
    raise NoConvergenceError(f"state solve did not converge in {max_iters} iterations", max_iters)


@dataclass(frozen=True, eq=False)
class KktSolution:
    gamma: float
    y: np.ndarray
    p: np.ndarray
    u: np.ndarray
    newton_iters: int
    converged: bool
    min_violation: float
    damped: bool = False


def min_violation(y, psi):
    d = y - psi
    neg = d < 0
    return float(d[neg].min()) if neg.any() else 0.0


def kkt_residual(y, p, gamma, data):
    """Stacked residual (F1, F2) of the penalized optimality system, interior vectors."""
    g3 = gamma ** 3
    w = negative_part(y - data.psi_int)
    F1 = data.A @ y + g3 * data.m * w ** 3 - data.load_f - data.load_ud + (data.M @ p) / data.alpha
    F2 = data.A @ p + 3.0 * g3 * data.m * w ** 2 * p - data.M @ y + data.load_y0
    return np.concatenate([F1, F2])


def kkt_jacobian(y, p, gamma, data):
    g3 = gamma ** 3
    w = negative_part(y - data.psi_int)
    K = data.A + sp.diags(3.0 * g3 * data.m * w ** 2)
    C = -data.M + sp.diags(6.0 * g3 * data.m * w * p)
    return sp.bmat([[K, data.M / data.alpha], [C, K]], format="csr")


def _newton(gamma, data, y, p, tol, max_iters, damped):
    n = data.n
    for k in range(1, max_iters + 1):
        F = kkt_residual(y, p, gamma, data)
        d = Factorization(kkt_jacobian(y, p, gamma, data)).solve(-F)
        t = 1.0
        if damped:
            fnorm = np.linalg.norm(F)
            while t > 1e-10:
                F_trial = kkt_residual(y + t * d[:n], p + t * d[n:], gamma, data)
                if np.linalg.norm(F_trial) <= (1.0 - 1e-4 * t) * fnorm:
                    break
                t *= 0.5
        y = y + t * d[:n]
        p = p + t * d[n:]
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(p))):
            raise NoConvergenceError(f"Newton iterates diverged at gamma={gamma:g}", k)
        dp = d[n:]
        if t == 1.0 and np.sqrt(max(dp @ (data.M @ dp), 0.0)) / data.alpha <= tol:
            return y, p, k
    raise NoConvergenceError(
        f"Newton did not converge in {max_iters} iterations at gamma={gamma:g}", max_iters)


def solve_kkt(gamma, data, init=None, tol=KKT_TOL, max_iters=MAX_NEWTON,
              full_step_iters=FULL_STEP_ITERS):
    """Newton's method on the optimality system at penalty ``gamma``.

    ``init`` is an optional pair (y, p) of nodal vectors.  Iteration stops
    once ``sqrt(dp' M dp) / alpha <= tol`` for a full adjoint update ``dp``;
    the reported count includes that final step.  Plain full steps are tried
    first; if they have not converged after ``full_step_iters`` iterations the
    solve restarts from ``init`` with backtracking on the residual norm, with
    ``max_iters`` as its budget.
    """
    n = data.n
    if init is None:
        y0 = np.zeros(n)
        p0 = np.zeros(n)
    else:
        y0 = np.array(init[0][:n], dtype=float)
        p0 = np.array(init[1][:n], dtype=float)

    damped = False
    try:
        y, p, k = _newton(gamma, data, y0, p0, tol, min(full_step_iters, max_iters), False)
    except NoConvergenceError as exc:
        if full_step_iters >= max_iters:
            raise
        log.info("full-step Newton failed at gamma=%.1e (%s); retrying with damping", gamma, exc)
        y, p, k = _newton(gamma, data, y0, p0, tol, max_iters, True)
        damped = True

    y_full = data.full(y)
    p_full = data.full(p)
    u = data.ud_nodal - p_full / data.alpha
    return KktSolution(gamma=float(gamma), y=y_full, p=p_full, u=u, newton_iters=k,
                       converged=True, min_violation=min_violation(y, data.psi_int),
                       damped=damped)


def gamma_homotopy(data, schedule=DEFAULT_SCHEDULE, init=None, max_iters=MAX_NEWTON):
    """Solve along increasing penalties, warm-starting each stage from the previous one.

    A failure at the first stage propagates.  Later failures (ill-conditioned
    Newton systems or non-convergence) end the homotopy; the stages solved so
    far are returned.
    """
    schedule = [float(g) for g in schedule]
    if not schedule:
        raise ValueError("empty schedule")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")

    out = []
    start = init
    for gamma in schedule:
        try:
            sol = solve_kkt(gamma, data, init=start, max_iters=max_iters)
        except (IllConditionedError, NoConvergenceError) as exc:
            if not out:
                raise
            log.warning("stopping homotopy at gamma=%.1e: %s", gamma, exc)
            break
        log.info("gamma=%.1e newton=%d min_violation=%.3e", gamma, sol.newton_iters,
                 sol.min_violation)
        out.append(sol)
        start = (sol.y, sol.p)
    return out


def objective(u, y, data):
    """Tracking plus control cost with mass-matrix norms; ``u`` and ``y`` on all vertices.

    The tracking part is expanded as 0.5 y'My - y'b + 0.5 |I_h y0|^2 with the
    load vector b of y0, the same vector that drives the adjoint equation.
    """
    y = np.asarray(y, dtype=float)
    e = np.asarray(u, dtype=float) - data.ud_nodal
    track = 0.5 * y @ (data.M_full @ y) - y @ data.load_y0_full + data.y0_energy
    return float(track + 0.5 * data.alpha * e @ (data.M_full @ e))


def adjoint_state(y, gamma, data):
    """Adjoint p solving (A + 3 g^3 diag(m w^2)) p = M y - load_y0."""
    yi = np.asarray(y, dtype=float)[:data.n]
    w = negative_part(yi - data.psi_int)
    K = data.A + sp.diags(3.0 * gamma ** 3 * data.m * w ** 2)
    return data.full(Factorization(K).solve(data.M @ yi - data.load_y0))


def reduced_gradient(u, gamma, data, y_init=None):
    """Nodal representative g = alpha (u - u_d) + p of the reduced gradient.

    The derivative of u -> J(u, y(u)) in direction v is g' M v.
    """
    y, _ = solve_state(u, gamma, data, y_init=y_init)
    p = adjoint_state(y, gamma, data)
    return data.alpha * (np.asarray(u, dtype=float) - data.ud_nodal) + p


def reduced_objective(u, gamma, data, y_init=None):
    y, _ = solve_state(u, gamma, data, y_init=y_init)
    return objective(u, y, data)
