"""The generalized penalty ``2 * sum_k lam_k |x_k|^q_k`` and its optimality check."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

# |q - 2| below this is treated as exactly 2
Q2_SNAP = 1e-12


@dataclass(frozen=True)
class PenaltySpec:
    """Per-coordinate regularization weights ``lam`` and exponents ``q``.

    Exponents must lie in ``[1, 2]``. With ``experimental_subunit_q`` set,
    ``(0, 2]`` is accepted; such penalties are nonconvex and carry no
    convergence guarantee.
    """

    lam: np.ndarray
    q: np.ndarray
    experimental_subunit_q: bool = False
    q1_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=np.float64).ravel()
        q = np.array(self.q, dtype=np.float64).ravel()
        if lam.shape != q.shape:
            raise ValueError(f"lam and q lengths differ: {lam.size} vs {q.size}")
        if lam.size == 0:
            raise ValueError("empty penalty")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(q))):
            raise ValueError("penalty entries must be finite")
        if np.any(lam < 0):
            raise ValueError("lam entries must be nonnegative")
        q = np.where(np.abs(q - 2.0) < Q2_SNAP, 2.0, q)
        lo_ok = q > 0 if self.experimental_subunit_q else q >= 1.0
        if not np.all(lo_ok & (q <= 2.0)):
            allowed = "(0, 2]" if self.experimental_subunit_q else "[1, 2]"
            raise ValueError(f"q entries must lie in {allowed}")
        lam.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "q1_mask", q < 2.0)

    @classmethod
    def uniform(cls, n, lam, q=1.0, **kw):
        return cls(np.full(n, float(lam)), np.full(n, float(q)), **kw)

    @property
    def n(self):
        return self.lam.size

    @property
    def q2_mask(self):
        return ~self.q1_mask

    @property
    def is_uniform_l1(self):
        return bool(np.all(self.q == 1.0) and np.all(self.lam == self.lam[0]))

    def with_lam(self, lam):
        """Same exponents, new weights (scalar or per-coordinate)."""
        lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), self.q.shape)
        return PenaltySpec(lam, self.q, self.experimental_subunit_q)

    def value(self, x):
        return 2.0 * float(np.sum(self.lam * np.abs(x) ** self.q))


def load_penalty(path, experimental_subunit_q=False):
    """Read a two-column ``lam q`` text file."""
    data = np.loadtxt(path, dtype=np.float64, ndmin=2, comments="#")
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (lam q), got {data.shape[1]}")
    return PenaltySpec(data[:, 0], data[:, 1], experimental_subunit_q)


def save_penalty(p, path):
    with open(path, "w") as fh:
        for lam, q in zip(p.lam, p.q):
            fh.write(f"{float(lam)!r} {float(q)!r}\n")


def _check_dims(op, b, x, p=None):
    if len(b) != op.nrows:
        raise ValueError(f"b: expected length {op.nrows}, got {len(b)}")
    if x is not None and len(x) != op.ncols:
        raise ValueError(f"x: expected length {op.ncols}, got {len(x)}")
    if p is not None and p.n != op.ncols:
        raise ValueError(f"penalty: expected length {op.ncols}, got {p.n}")


def evaluate_objective(op, b, x, p):
    """``||Ax - b||^2 + 2 sum_k lam_k |x_k|^q_k``."""
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check_dims(op, b, x, p)
    r = op.apply(x) - b
    return float(r @ r) + p.value(x)


def soft_threshold(v, tau):
    """Componentwise shrinkage ``sign(v) * max(|v| - tau, 0)``."""
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    return kernels.soft_threshold(np.atleast_1d(np.asarray(v, dtype=np.float64)), tau)


def lambda_max(op, b):
    """``||A^T b||_inf``: for uniform q=1 and any larger lam, zero is optimal."""
    b = np.asarray(b, dtype=np.float64)
    _check_dims(op, b, None)
    return float(np.max(np.abs(op.apply_adjoint(b))))


@dataclass
class KktReport:
    per_coordinate_residual: np.ndarray
    max_residual: float
    zero_tol: float

    def ok(self, tol):
        return self.max_residual <= tol


def kkt_residual(op, b, x, p, zero_tol=1e-10):
    """Normalized violation of the first-order optimality conditions.

    With ``g = A^T (b - Ax)``, each coordinate is scored by

    * ``|g_k - lam_k q_k sign(x_k) |x_k|^(q_k-1)|`` if ``|x_k| > zero_tol``,
    * ``max(0, |g_k| - lam_k)`` if ``x_k`` is zero and ``q_k = 1``,
    * ``|g_k|`` if ``x_k`` is zero and ``q_k > 1``,

    divided by ``max(lam_k, 1)``. Penalties with ``q_k < 1`` are rejected
    because the conditions assume convexity.
    """
    if zero_tol <= 0:
        raise ValueError("zero_tol must be positive")
    if np.any(p.q < 1.0) or np.any(p.q > 2.0):
        raise ValueError("optimality conditions are only defined for q in [1, 2]")
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check_dims(op, b, x, p)
    g = op.apply_adjoint(b - op.apply(x))
    lam, q = p.lam, p.q
    ax = np.abs(x)
    nonzero = ax > zero_tol
    res = np.empty_like(g)
    grad_pen = lam * q * np.sign(x) * np.where(nonzero, ax, 1.0) ** (q - 1.0)
    res[nonzero] = np.abs(g - grad_pen)[nonzero]
    z1 = ~nonzero & (q == 1.0)
    res[z1] = np.maximum(0.0, np.abs(g[z1]) - lam[z1])
    zq = ~nonzero & (q > 1.0)
    res[zq] = np.abs(g[zq])
    res /= np.maximum(lam, 1.0)
    return KktReport(res, float(np.max(res)), float(zero_tol))
