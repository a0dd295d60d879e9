"""IRLS, FIRLS, ISTA and FISTA for ``min ||Ax - b||^2 + 2 sum_k lam_k |x_k|^q_k``.

All four schemes assume ``||A||_2 < 1``; use :func:`irlsreg.linops.rescale_problem`
first. Each iteration costs one forward and one adjoint application.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .penalty import soft_threshold

VARIANTS = ("IRLS", "FIRLS", "ISTA", "FISTA")
DIVERGENCE_L1 = 1e12
TRACE_HEADER = ("iter", "F", "G", "eps", "step_norm", "residual_norm")


class SolverError(RuntimeError):
    """Raised for refused configurations and diverging runs."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


@dataclass
class SolverConfig:
    variant: str = "IRLS"
    max_iters: int = 300
    alpha: float = 0.9
    eps_init: float = 1.0
    step_tol: float | None = None  # None -> 1e-8 * sqrt(N)
    x0: np.ndarray | None = None
    trace_surrogate: bool = True
    keep_iterates: bool = False

    def __post_init__(self):
        self.variant = str(self.variant).upper()
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        self.max_iters = int(self.max_iters)
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if not self.eps_init > 0:
            raise ValueError(f"eps_init must be positive, got {self.eps_init}")
        if self.step_tol is not None and self.step_tol < 0:
            raise ValueError("step_tol must be nonnegative")

    def resolved_step_tol(self, n):
        return 1e-8 * math.sqrt(n) if self.step_tol is None else float(self.step_tol)


@dataclass
class IterateTrace:
    """Per-iteration diagnostics; entry ``i`` describes iterate ``x^(i+1)``.

    ``G`` holds ``G(x^n, x^n, w^n, eps_n)`` for IRLS/FIRLS (NaN otherwise).
    When iterates are kept, ``iterates[0]`` is the starting point and
    ``eps0`` its smoothing parameter.
    """

    F: list = field(default_factory=list)
    G: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    step_norm: list = field(default_factory=list)
    residual_norm: list = field(default_factory=list)
    iterates: list | None = None
    eps0: float | None = None

    def __len__(self):
        return len(self.F)

    def to_csv(self, fh=None):
        """Write ``iter,F,G,eps,step_norm,residual_norm`` rows; G left blank when absent."""
        out = io.StringIO() if fh is None else fh
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow(TRACE_HEADER)
        for i in range(len(self.F)):
            g = self.G[i]
            e = self.eps[i]
            wr.writerow([
                i + 1,
                repr(self.F[i]),
                "" if g is None or math.isnan(g) else repr(g),
                "" if e is None or math.isnan(e) else repr(e),
                repr(self.step_norm[i]),
                repr(self.residual_norm[i]),
            ])
        return out.getvalue() if fh is None else None

    def snapshots(self, p):
        """``(x^n, w^n, eps_n)`` for n = 0, 1, ... (requires kept iterates)."""
        if self.iterates is None:
            raise ValueError("trace was recorded without iterates")
        eps = [self.eps0] + list(self.eps)
        return [(x, kernels.irls_weights(x, e, p.q), e) for x, e in zip(self.iterates, eps)]


@dataclass
class SolverResult:
    x_final: np.ndarray
    iterations_run: int
    termination: str
    trace: IterateTrace


def irls_weights(x, eps, q):
    """``w_k = (x_k^2 + eps^2)^((q_k - 2)/2)``; identically 1 where ``q_k = 2``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    q = np.broadcast_to(np.asarray(q, dtype=np.float64), x.shape)
    return kernels.irls_weights(x, eps, q)


def epsilon_update(eps_prev, step_norm, alpha, n):
    """``min(eps_prev, sqrt(step_norm + alpha**n))``."""
    if not eps_prev > 0:
        raise ValueError("eps_prev must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    cand = math.sqrt(step_norm + alpha ** n)
    # alpha**n underflows to 0 for huge n; keep eps strictly positive
    if cand == 0.0:
        cand = eps_prev * 0.5
    return min(eps_prev, cand)


def fista_momentum_coefficient(t_n):
    """Return ``(t_next, (t_n - 1) / t_next)``."""
    if t_n < 1:
        raise ValueError("t_n must be >= 1")
    t_next = (1.0 + math.sqrt(1.0 + 4.0 * t_n * t_n)) / 2.0
    return t_next, (t_n - 1.0) / t_next


def _landweber(op, b, x):
    x = np.asarray(x, dtype=np.float64)
    return x + op.apply_adjoint(np.asarray(b, dtype=np.float64) - op.apply(x))


def irls_step(op, b, x, w, p):
    """``(x_k + (A^T b)_k - (A^T A x)_k) / (1 + lam_k q_k w_k)``."""
    return kernels.reweighted_scale(_landweber(op, b, x), p.lam, p.q, w)


def firls_step(op, b, y, w, p):
    """The IRLS update taken from the extrapolated point ``y``."""
    return irls_step(op, b, y, w, p)


def ista_step(op, b, x, tau):
    return soft_threshold(_landweber(op, b, x), tau)


def solve(op, b, p, cfg=None, callback=None):
    """Run the configured scheme from ``cfg.x0`` (zero by default).

    Stops once ``||x^n - x^(n-1)||_2 <= step_tol`` or after ``max_iters``.
    ISTA and FISTA accept only a uniform penalty with ``q = 1``.
    ``callback(n, x)`` is invoked after every iteration if given.
    """
    cfg = SolverConfig() if cfg is None else cfg
    b = np.ascontiguousarray(b, dtype=np.float64)
    n = op.ncols
    if b.shape != (op.nrows,):
        raise ValueError(f"b: expected length {op.nrows}, got {b.shape}")
    if p.n != n:
        raise ValueError(f"penalty: expected length {n}, got {p.n}")
    variant = cfg.variant
    thresholding = variant in ("ISTA", "FISTA")
    if thresholding and not p.is_uniform_l1:
        raise SolverError(f"{variant} supports only a uniform penalty with q = 1")
    accelerated = variant in ("FIRLS", "FISTA")

    x = np.zeros(n) if cfg.x0 is None else np.array(cfg.x0, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"x0: expected length {n}, got {x.shape}")
    step_tol = cfg.resolved_step_tol(n)
    tau = float(p.lam[0])
    lam, q = p.lam, p.q

    eps = None if thresholding else float(cfg.eps_init)
    trace = IterateTrace(eps0=eps)
    if cfg.keep_iterates:
        trace.iterates = [x.copy()]

    ax = op.apply(x)
    y, ay = x, ax
    t = 1.0
    termination = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        v = y - op.apply_adjoint(ay - b)
        if thresholding:
            x_new = kernels.soft_threshold(v, tau)
        else:
            w = kernels.irls_weights(y, eps, q)
            x_new = kernels.reweighted_scale(v, lam, q, w)
        ax_new = op.apply(x_new)
        step = float(np.linalg.norm(x_new - x))
        l1 = float(np.sum(np.abs(x_new)))
        if not (math.isfinite(l1) and l1 <= DIVERGENCE_L1):
            raise SolverError(f"{variant} diverged at iteration {it}", iteration=it)
        if not thresholding:
            eps = epsilon_update(eps, step, cfg.alpha, it)

        if accelerated:
            t, coeff = fista_momentum_coefficient(t)
            y = x_new + coeff * (x_new - x)
            ay = ax_new + coeff * (ax_new - ax)
        else:
            y, ay = x_new, ax_new
        x, ax = x_new, ax_new

        r = ax - b
        rr = float(r @ r)
        trace.F.append(rr + p.value(x))
        if thresholding or not cfg.trace_surrogate:
            trace.G.append(math.nan)
        else:
            trace.G.append(rr + 2.0 * float(np.sum(lam * (x * x + eps * eps) ** (q / 2.0))))
        trace.eps.append(math.nan if eps is None else eps)
        trace.step_norm.append(step)
        trace.residual_norm.append(math.sqrt(rr))
        if cfg.keep_iterates:
            trace.iterates.append(x.copy())
        if callback is not None:
            callback(it, x)
        if step <= step_tol:
            termination = "step_tol_reached"
            break
    return SolverResult(x, it, termination, trace)

