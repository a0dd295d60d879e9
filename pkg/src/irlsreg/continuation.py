"""Warm-started solving along a decreasing sequence of regularization weights."""

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .penalty import PenaltySpec
from .problems import recovery_error
from .solvers import SolverError, solve

PATH_HEADER = ("stage", "tau", "iters", "F_final", "recovery_error_pct")


@dataclass(frozen=True)
class ContinuationPath:
    taus: np.ndarray
    per_stage_iters: int = 40

    def __post_init__(self):
        taus = np.array(self.taus, dtype=np.float64).ravel()
        if taus.size < 1:
            raise ValueError("path needs at least one tau")
        if np.any(taus <= 0) or np.any(np.diff(taus) >= 0):
            raise ValueError("taus must be positive and strictly decreasing")
        if int(self.per_stage_iters) < 1:
            raise ValueError("per_stage_iters must be >= 1")
        taus.setflags(write=False)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "per_stage_iters", int(self.per_stage_iters))

    def __len__(self):
        return self.taus.size


def make_tau_path(lambda_max, final_divisor, count, per_stage_iters=40):
    """``count`` values spaced geometrically from ``lambda_max`` to ``lambda_max / final_divisor``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    if not final_divisor > 1:
        raise ValueError("final_divisor must exceed 1")
    if count == 1:
        taus = np.array([float(lambda_max)])
    else:
        taus = lambda_max * np.power(float(final_divisor), -np.arange(count) / (count - 1))
    return ContinuationPath(taus, per_stage_iters)


@dataclass
class StageResult:
    tau: float
    result: object
    recovery_error: float | None


@dataclass
class PathResult:
    stages: list = field(default_factory=list)
    chain_violations: int | None = None

    @property
    def x_final(self):
        return self.stages[-1].result.x_final

    def to_csv(self, fh=None):
        out = io.StringIO() if fh is None else fh
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow(PATH_HEADER)
        for i, st in enumerate(self.stages):
            err = "" if st.recovery_error is None else repr(st.recovery_error)
            wr.writerow([i, repr(st.tau), st.result.iterations_run,
                         repr(st.result.trace.F[-1]), err])
        return out.getvalue() if fh is None else None


def solve_path(prob, q, path, cfg):
    """Solve for each tau in turn, starting every stage from the previous solution.

    Stage ``i`` uses ``lam_k = taus[i]`` for all k with the given exponents
    ``q``. The first stage starts from ``cfg.x0`` (zero when unset). Each
    stage runs ``path.per_stage_iters`` iterations and restarts the IRLS
    smoothing parameter at ``cfg.eps_init``.
    """
    op, b = prob.operator, prob.b
    q = np.broadcast_to(np.asarray(q, dtype=np.float64), (op.ncols,))
    x = None if cfg.x0 is None else np.asarray(cfg.x0, dtype=np.float64)
    out = PathResult()
    for i, tau in enumerate(path.taus):
        p = PenaltySpec(np.full(op.ncols, tau), q, experimental_subunit_q=bool(np.any(q < 1)))
        stage_cfg = replace(cfg, x0=x, max_iters=path.per_stage_iters)
        try:
            res = solve(op, b, p, stage_cfg)
        except SolverError as exc:
            raise SolverError(f"stage {i} (tau={tau:g}): {exc}", iteration=exc.iteration) from exc
        err = None if prob.x_true is None else recovery_error(res.x_final, prob.x_true)
        out.stages.append(StageResult(float(tau), res, err))
        x = res.x_final
    return out

