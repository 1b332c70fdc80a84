"""Global-optimality certificate for stationary points of the penalized problem.

With d = y - psi on interior nodes, the certificate value is

    eta = min( min_{d>0} p/d , min_{d<0} 3p/(-d) , 0 )

and a stationary point is a global minimum whenever |eta| does not exceed
mu* = alpha*lambda1 + sqrt(alpha^2*lambda1^2 + alpha), uniquely so when the
inequality is strict.  Nodes with d = 0 additionally need p >= 0.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

EQUALITY_TOL = 1e-14


class Verdict(enum.Enum):
    CERTIFIED_UNIQUE = "CertifiedUnique"
    CERTIFIED_GLOBAL = "CertifiedGlobal"
    NOT_CERTIFIED = "NotCertified"

    @property
    def certified(self):
        return self is not Verdict.NOT_CERTIFIED

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NodeClassification:
    plus: np.ndarray
    zero: np.ndarray
    minus: np.ndarray
    tau: float = 0.0


def classify_nodes(y, psi, tau=0.0):
    """Split node indices by the sign of y - psi; |y - psi| <= tau counts as zero."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    d = np.asarray(y, dtype=float) - np.asarray(psi, dtype=float)
    zero = np.abs(d) <= tau
    return NodeClassification(plus=np.flatnonzero(~zero & (d > 0)),
                              zero=np.flatnonzero(zero),
                              minus=np.flatnonzero(~zero & (d < 0)), tau=float(tau))


def threshold(alpha, lambda1):
    """Positive root of x^2 - 2 alpha lambda1 x - alpha = 0."""
    if alpha <= 0 or lambda1 <= 0:
        raise ValueError("alpha and lambda1 must be positive")
    return alpha * lambda1 + math.sqrt(alpha * alpha * lambda1 * lambda1 + alpha)


@dataclass(frozen=True)
class Certificate:
    eta: float
    min_ratio_pos: float
    min_ratio_neg: float
    threshold: float
    biactive_ok: bool
    verdict: Verdict
    kappa: float
    offending_nodes: tuple = field(default=())

    @property
    def certified(self):
        return self.verdict.certified


def compute_eta(y, p, psi, classification):
    """Return (eta, min_ratio_pos, min_ratio_neg, biactive_ok, offending biactive nodes)."""
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    d = y - np.asarray(psi, dtype=float)
    c = classification
    pos = float(np.min(p[c.plus] / d[c.plus])) if c.plus.size else math.inf
    neg = float(np.min(3.0 * p[c.minus] / -d[c.minus])) if c.minus.size else math.inf
    eta = min(pos, neg, 0.0)
    bad = c.zero[p[c.zero] < 0]
    return eta, pos, neg, bad.size == 0, tuple(int(k) for k in bad)


def verdict_for(eta, mu_star, biactive_ok=True):
    if not biactive_ok:
        return Verdict.NOT_CERTIFIED
    gap = abs(eta) - mu_star
    if abs(gap) <= EQUALITY_TOL * max(1.0, mu_star):
        return Verdict.CERTIFIED_GLOBAL
    return Verdict.CERTIFIED_UNIQUE if gap < 0 else Verdict.NOT_CERTIFIED


def certify_fields(y, p, psi, alpha, lambda1, tau=0.0):
    """Certificate for interior nodal vectors y, p, psi."""
    cls = classify_nodes(y, psi, tau)
    eta, pos, neg, ok, bad = compute_eta(y, p, psi, cls)
    mu = threshold(alpha, lambda1)
    return Certificate(eta=eta, min_ratio_pos=pos, min_ratio_neg=neg, threshold=mu,
                       biactive_ok=ok, verdict=verdict_for(eta, mu, ok), kappa=abs(eta) / mu,
                       offending_nodes=bad)


def certify(solution, data, lambda1, tau=0.0):
    n = data.n
    return certify_fields(solution.y[:n], solution.p[:n], data.psi_int, data.alpha, lambda1, tau)


def track_kappa(certificates):
    """Largest |eta|/mu* along a homotopy and whether it stays below one."""
    kappas = [c.kappa for c in certificates]
    kmax = max(kappas) if kappas else 0.0
    return kmax, kmax < 1.0


def multiplier_fields(y, p, psi, gamma):
    """Nodal multipliers xi = -g^3 [(y-psi)^-]^3 and mu = -3 g^3 [(y-psi)^-]^2 p."""
    w = np.minimum(np.asarray(y, dtype=float) - np.asarray(psi, dtype=float), 0.0)
    g3 = gamma ** 3
    xi = -g3 * w ** 3
    mu = -3.0 * g3 * w ** 2 * np.asarray(p, dtype=float)
    return xi + 0.0, mu + 0.0
