"""The IRLS surrogate functional, used to instrument solver runs.

``G(x, a, w, eps)`` majorizes the objective; alternately minimizing it over
``w`` and ``x`` gives the IRLS weights and update. The solvers never call
it; it exists so the monotone-descent properties can be audited.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class SurrogateInputs:
    op: object
    b: np.ndarray
    p: object
    x: np.ndarray
    a: np.ndarray
    w: np.ndarray
    eps: float

    def __post_init__(self):
        n = self.op.ncols
        for name in ("x", "a", "w"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (n,):
                raise ValueError(f"{name}: expected length {n}, got {v.shape}")
            setattr(self, name, v)
        if self.p.n != n:
            raise ValueError(f"penalty: expected length {n}, got {self.p.n}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


def evaluate_G(inputs):
    op, b, p = inputs.op, np.asarray(inputs.b, dtype=np.float64), inputs.p
    x, a, w, eps = inputs.x, inputs.a, inputs.w, inputs.eps
    q1 = p.q1_mask
    if np.any(w[q1] <= 0):
        raise ValueError("weights must be positive on coordinates with q < 2")
    r = op.apply(x) - b
    d = x - a
    ad = op.apply(d)
    s = x * x + eps * eps
    lam, q = p.lam, p.q
    pen1 = lam[q1] * (q[q1] * w[q1] * s[q1] + (2.0 - q[q1]) * w[q1] ** (q[q1] / (q[q1] - 2.0)))
    q2 = ~q1
    pen2 = 2.0 * lam[q2] * s[q2] * (w[q2] ** 2 - 2.0 * w[q2] + 2.0)
    return float(r @ r - ad @ ad + d @ d + pen1.sum() + pen2.sum())


def evaluate_G_diagonal(op, b, x, eps, p):
    """``G(x, x, w(x, eps), eps) = ||Ax - b||^2 + 2 sum lam_k (x_k^2 + eps^2)^(q_k/2)``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=np.float64)
    r = op.apply(x) - np.asarray(b, dtype=np.float64)
    return float(r @ r) + 2.0 * float(np.sum(p.lam * (x * x + eps * eps) ** (p.q / 2.0)))


@dataclass
class ChainViolation:
    step: int
    link: str
    lhs: float
    rhs: float


def audit_monotone_chain(op, b, snapshots, p, rel_slack=1e-10):
    """Check the four-link descent chain between consecutive IRLS iterates.

    ``snapshots`` is a sequence of ``(x, w, eps)`` with ``w`` the weights at
    ``(x, eps)``. For each step n the chain

        G(x1, x1, w1, e1) <= G(x1, x1, w0, e1)   [A]
                          <= G(x1, x0, w0, e1)   [B]
                          <= G(x1, x0, w0, e0)   [C]
                          <= G(x0, x0, w0, e0)   [D]

    is checked, where index 0 is step n and 1 is step n+1. Returns the list
    of violated links (empty when the chain holds).
    """
    snaps = [(np.asarray(x, dtype=np.float64), np.asarray(w, dtype=np.float64), float(e))
             for x, w, e in snapshots]
    n = op.ncols
    for i, (x, w, _) in enumerate(snaps):
        if x.shape != (n,) or w.shape != (n,):
            raise ValueError(f"snapshot {i}: expected vectors of length {n}")

    def G(x, a, w, e):
        return evaluate_G(SurrogateInputs(op, b, p, x, a, w, e))

    violations = []
    for k in range(len(snaps) - 1):
        x0, w0, e0 = snaps[k]
        x1, w1, e1 = snaps[k + 1]
        vals = [
            G(x1, x1, w1, e1),
            G(x1, x1, w0, e1),
            G(x1, x0, w0, e1),
            G(x1, x0, w0, e0),
            G(x0, x0, w0, e0),
        ]
        for link, lhs, rhs in zip("ABCD", vals[:-1], vals[1:]):
            if lhs > rhs + rel_slack * max(abs(lhs), abs(rhs), 1e-300):
                violations.append(ChainViolation(k, link, lhs, rhs))
    return violations


def snapshot(x, eps, p):
    """``(x, w, eps)`` with IRLS weights evaluated at ``x``."""
    return (x, kernels.irls_weights(x, eps, p.q), eps)
