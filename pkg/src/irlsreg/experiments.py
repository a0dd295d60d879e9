"""The four numerical experiments, parameterized by :class:`ExperimentConfig`.

Each ``run_*`` function writes its CSV/PGM/vector outputs into ``cfg.out``
and returns an in-memory summary so tests can inspect results without
re-reading files.
"""

import csv
import logging
import math
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from . import fileio
from .continuation import make_tau_path, solve_path
from .linops import ConvolutionOperator, rescale_problem
from .penalty import PenaltySpec, lambda_max
from .problems import (
    SignalKind,
    SyntheticProblem,
    add_noise_snr,
    make_gaussian_blur_kernel,
    make_problem,
    recovery_error,
    subsample_rows,
)
from .solvers import TRACE_HEADER, VARIANTS, SolverConfig, solve
from .surrogate import audit_monotone_chain

log = logging.getLogger(__name__)

EXPERIMENTS = ("convergence_bench", "cs_recovery", "mixed_q", "deblur")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "convergence_bench"
    seed: int = 0
    out: str = "out"
    audit: bool = False
    # problem size and conditioning
    m: int = 100
    n: int = 100
    sv_hi: float = 1.0
    sv_lo: float = 0.1
    sv_lo_alt: float = 1e-4
    density: float = 0.05
    signal: str = "random_support"
    fraction: float = 1.0
    # solver settings
    solvers: tuple = VARIANTS
    iters: int = 300
    tau_divisor: float = 1e5
    trials: int = 10
    alpha: float = 0.9
    eps_init: float = 1.0
    # continuation
    count: int = 20
    divisor: float = 50000.0
    per_stage_iters: int = 100
    # mixed q
    mixed_q: bool = True
    q_dense: float = 1.9
    # deblur
    image: str = "checkerboard"
    image_size: int = 32
    kernel_size: int = 9
    sigma: float = 2.5
    amplitude: float = 2.9
    snr: float = 25.0
    q: float = 1.0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if isinstance(self.solvers, str):
            self.solvers = tuple(s.strip().upper() for s in self.solvers.split(",") if s.strip())
        self.solvers = tuple(s.upper() for s in self.solvers)
        bad = [s for s in self.solvers if s not in VARIANTS]
        if bad or not self.solvers:
            raise ConfigError(f"unknown solver(s) {bad}; choose from {VARIANTS}")
        checks = [
            (self.m >= 1 and self.n >= 2, "m >= 1 and n >= 2"),
            (0 < self.density <= 1, "0 < density <= 1"),
            (0 < self.fraction <= 1, "0 < fraction <= 1"),
            (0 < self.sv_lo <= self.sv_hi and 0 < self.sv_lo_alt <= self.sv_hi, "0 < sv_lo <= sv_hi"),
            (self.iters >= 1 and self.per_stage_iters >= 1, "iteration budgets >= 1"),
            (self.trials >= 1 and self.count >= 1, "trials, count >= 1"),
            (self.tau_divisor > 0 and self.divisor > 1, "tau_divisor > 0, divisor > 1"),
            (0 < self.alpha < 1 and self.eps_init > 0, "0 < alpha < 1 and eps_init > 0"),
            (1 <= self.q_dense <= 2, "1 <= q_dense <= 2"),
            (self.kernel_size >= 1 and self.kernel_size % 2 == 1, "kernel_size odd"),
            (self.sigma > 0 and self.amplitude > 0, "sigma, amplitude > 0"),
            (self.snr >= 0, "snr >= 0 (0 disables noise)"),
            (0 < self.q <= 2, "0 < q <= 2"),
            (self.image_size >= 2, "image_size >= 2"),
        ]
        for ok, what in checks:
            if not ok:
                raise ConfigError(f"invalid configuration: need {what}")
        try:
            SignalKind(self.signal)
        except ValueError:
            raise ConfigError(f"unknown signal kind {self.signal!r}") from None
        if self.image != "checkerboard" and not os.path.isfile(self.image):
            raise ConfigError(f"image file not found: {self.image}")

    @classmethod
    def for_experiment(cls, experiment, **overrides):
        """Defaults for ``experiment`` with ``overrides`` applied on top."""
        base = dict(EXPERIMENT_DEFAULTS.get(experiment, {}))
        base.update(overrides)
        return cls(experiment=experiment, **base)

    @classmethod
    def from_strings(cls, experiment, values):
        """Build from string values (config file / CLI), coercing by field type."""
        types = {f.name: f.type for f in fields(cls)}
        parsed = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"unknown configuration key {key!r}")
            parsed[key] = _coerce(key, raw, types[key])
        parsed.pop("experiment", None)
        return cls.for_experiment(experiment, **parsed)


EXPERIMENT_DEFAULTS = {
    "convergence_bench": {},
    "cs_recovery": dict(m=200, n=200, sv_lo=1e-4, density=0.12, signal="staircase",
                        fraction=1 / 3, solvers=VARIANTS),
    "mixed_q": dict(m=200, n=200, sv_lo=1e-4, density=0.1, signal="half_sparse_half_dense",
                    fraction=1 / 3),
    "deblur": dict(solvers=("IRLS",), count=30, per_stage_iters=40),
}


def _coerce(key, raw, typ):
    if not isinstance(raw, str):
        return raw
    typ = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    try:
        if typ == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(eval_fraction(raw))
        return raw.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def eval_fraction(text):
    """Parse a float or a simple ``a/b`` ratio such as ``1/3``."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _solver_cfg(cfg, variant, **kw):
    return SolverConfig(variant=variant, alpha=cfg.alpha, eps_init=cfg.eps_init, **kw)


def _rescaled(prob):
    op, b, _ = rescale_problem(prob.operator, prob.b)
    return replace(prob, operator=op, b=b)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def _audit(op, b, p, result):
    return len(audit_monotone_chain(op, b, result.trace.snapshots(p), p))


# ---------------------------------------------------------------------------
# convergence benchmark


def run_convergence_bench(cfg):
    """Per-iteration median traces for every (matrix type, solver) pair.

    Two matrices are built with singular values logspaced from ``sv_hi`` to
    ``sv_lo`` and to ``sv_lo_alt``. Every trial draws a fresh matrix and
    signal from ``seed + trial``; each solver runs ``iters`` iterations at
    ``tau = lambda_max / tau_divisor``.
    """
    os.makedirs(cfg.out, exist_ok=True)
    summary = {}
    rows = []
    for label, lo in (("A1", cfg.sv_lo), ("A2", cfg.sv_lo_alt)):
        per_solver = {v: {"trace": [], "err": [], "final_F": [], "final_err": [], "viol": 0}
                      for v in cfg.solvers}
        for trial in range(cfg.trials):
            prob = _rescaled(make_problem(cfg.m, cfg.n, cfg.sv_hi, lo, cfg.density,
                                          cfg.signal, cfg.seed + trial))
            tau = lambda_max(prob.operator, prob.b) / cfg.tau_divisor
            p = PenaltySpec.uniform(cfg.n, tau)
            for v in cfg.solvers:
                errs = []
                res = solve(prob.operator, prob.b, p,
                            _solver_cfg(cfg, v, max_iters=cfg.iters, step_tol=0.0,
                                        keep_iterates=cfg.audit and v == "IRLS"),
                            callback=lambda it, x: errs.append(recovery_error(x, prob.x_true)))
                rec = per_solver[v]
                tr = res.trace
                rec["trace"].append(np.column_stack([tr.F, tr.G, tr.eps, tr.step_norm,
                                                     tr.residual_norm]))
                rec["err"].append(errs)
                rec["final_F"].append(tr.F[-1])
                rec["final_err"].append(errs[-1])
                if cfg.audit and v == "IRLS":
                    rec["viol"] += _audit(prob.operator, prob.b, p, res)
        err_cols = []
        for v in cfg.solvers:
            rec = per_solver[v]
            med = np.median(np.stack(rec["trace"]), axis=0)
            _write_rows(os.path.join(cfg.out, f"trace_{label}_{v}.csv"), TRACE_HEADER,
                        [[i + 1] + [_fmt(c) for c in row] for i, row in enumerate(med)])
            err_cols.append(np.median(np.array(rec["err"]), axis=0))
            fF, fe = float(np.median(rec["final_F"])), float(np.median(rec["final_err"]))
            summary[(label, v)] = {"F_final": fF, "recovery_error_pct": fe,
                                   "chain_violations": rec["viol"] if cfg.audit else None}
            rows.append([label, v, repr(fF), repr(fe)])
        _write_rows(os.path.join(cfg.out, f"recovery_{label}.csv"), ("iter",) + tuple(cfg.solvers),
                    [[i + 1] + [repr(float(c)) for c in row]
                     for i, row in enumerate(np.column_stack(err_cols))])
    _write_rows(os.path.join(cfg.out, "summary.csv"),
                ("matrix", "solver", "F_final_median", "recovery_error_pct_median"), rows)
    return summary


# ---------------------------------------------------------------------------
# continuation experiments


def cs_problem(cfg, seed=None):
    """The subsampled, rescaled problem shared by the CS and mixed-q runs."""
    seed = cfg.seed if seed is None else seed
    prob = make_problem(cfg.m, cfg.n, cfg.sv_hi, cfg.sv_lo, cfg.density, cfg.signal, seed)
    return _rescaled(subsample_rows(prob, cfg.fraction))


def _run_paths(cfg, prob, q_for):
    path = make_tau_path(lambda_max(prob.operator, prob.b), cfg.divisor, cfg.count,
                         cfg.per_stage_iters)
    results = {}
    for v in cfg.solvers:
        keep = cfg.audit and v == "IRLS"
        res = solve_path(prob, q_for(v), path,
                         _solver_cfg(cfg, v, step_tol=0.0, keep_iterates=keep))
        if keep:
            q = np.broadcast_to(np.asarray(q_for(v), dtype=np.float64), (prob.operator.ncols,))
            res.chain_violations = sum(
                _audit(prob.operator, prob.b, PenaltySpec(np.full(q.size, st.tau), q), st.result)
                for st in res.stages)
        results[v] = res
    return path, results


def _write_path_outputs(cfg, prob, results):
    os.makedirs(cfg.out, exist_ok=True)
    fileio.save_vector(prob.x_true, os.path.join(cfg.out, "x_true.txt"))
    for v, res in results.items():
        with open(os.path.join(cfg.out, f"path_{v}.csv"), "w", newline="") as fh:
            res.to_csv(fh)
        fileio.save_vector(res.x_final, os.path.join(cfg.out, f"x_{v}.txt"))


def run_cs_recovery(cfg, seed=None):
    prob = cs_problem(cfg, seed)
    _, results = _run_paths(cfg, prob, lambda v: 1.0)
    _write_path_outputs(cfg, prob, results)
    return results


def mixed_q_exponents(n, q_dense):
    """q = 1 on the first ceil(n/2) coordinates, ``q_dense`` on the rest."""
    h1 = (n + 1) // 2
    return np.concatenate([np.ones(h1), np.full(n - h1, float(q_dense))])


def run_mixed_q(cfg, seed=None):
    """IRLS/FIRLS with per-half exponents against uniform-q ISTA/FISTA."""
    prob = cs_problem(cfg, seed)
    n = prob.operator.ncols
    qm = mixed_q_exponents(n, cfg.q_dense) if cfg.mixed_q else np.ones(n)

    def q_for(v):
        return qm if v in ("IRLS", "FIRLS") else np.ones(n)

    _, results = _run_paths(cfg, prob, q_for)
    _write_path_outputs(cfg, prob, results)
    _write_rows(os.path.join(cfg.out, "summary.csv"),
                ("solver", "q_mode", "final_recovery_error_pct"),
                [[v, "mixed" if cfg.mixed_q and v in ("IRLS", "FIRLS") else "uniform",
                  repr(r.stages[-1].recovery_error)] for v, r in results.items()])
    return results


# ---------------------------------------------------------------------------
# deblurring


def checkerboard(size, block=None):
    block = max(1, size // 4) if block is None else block
    i = np.arange(size)
    return ((i[:, None] // block + i[None, :] // block) % 2).astype(np.float64)


@dataclass
class DeblurResult:
    original: np.ndarray
    blurred: np.ndarray
    reconstructed: np.ndarray
    blurred_error_pct: float
    reconstructed_error_pct: float
    path: object


def run_deblur(cfg):
    """Blur, add noise, then reconstruct with a continuation IRLS path.

    Pixels are scaled to [0, 1]. The operator is rescaled to spectral norm
    0.99, and the "blurred" image reported is the rescaled data the solver
    sees, so its error is measured on the same scale as the reconstruction.
    """
    if cfg.image == "checkerboard":
        img = checkerboard(cfg.image_size)
    else:
        img = fileio.read_pgm(cfg.image)
    h, w = img.shape
    kernel = make_gaussian_blur_kernel(cfg.kernel_size, cfg.sigma, cfg.amplitude)
    op = ConvolutionOperator(kernel, h, w)
    x_true = img.ravel()
    b = op.apply(x_true)
    if cfg.snr > 0 and math.isfinite(cfg.snr):
        b = add_noise_snr(b, cfg.snr, cfg.seed)
    prob = _rescaled(SyntheticProblem(op, b, x_true, cfg.seed, "deblur"))
    q = cfg.q
    if q < 1:
        log.warning("q=%g < 1 is an unsupported nonconvex setting; no convergence guarantee", q)
    variant = cfg.solvers[0]
    if variant in ("ISTA", "FISTA") and q != 1:
        raise ConfigError(f"{variant} requires q = 1")
    path = make_tau_path(lambda_max(prob.operator, prob.b), cfg.divisor, cfg.count,
                         cfg.per_stage_iters)
    res = solve_path(prob, q, path,
                     _solver_cfg(cfg, variant, step_tol=0.0,
                                 keep_iterates=cfg.audit and variant == "IRLS" and q >= 1))
    if cfg.audit and variant == "IRLS" and q >= 1:
        qv = np.full(x_true.size, q)
        res.chain_violations = sum(
            _audit(prob.operator, prob.b, PenaltySpec(np.full(qv.size, st.tau), qv), st.result)
            for st in res.stages)
    rec = res.x_final.reshape(h, w)
    blurred = prob.b.reshape(h, w)
    out = DeblurResult(img, blurred, rec, recovery_error(prob.b, x_true),
                       recovery_error(res.x_final, x_true), res)
    os.makedirs(cfg.out, exist_ok=True)
    fileio.write_pgm(img, os.path.join(cfg.out, "original.pgm"))
    fileio.write_pgm(blurred, os.path.join(cfg.out, "blurred.pgm"))
    fileio.write_pgm(rec, os.path.join(cfg.out, "reconstructed.pgm"))
    with open(os.path.join(cfg.out, f"path_{variant}.csv"), "w", newline="") as fh:
        res.to_csv(fh)
    _write_rows(os.path.join(cfg.out, "summary.csv"),
                ("image", "blurred_error_pct", "reconstructed_error_pct"),
                [[cfg.image, repr(out.blurred_error_pct), repr(out.reconstructed_error_pct)]])
    return out


RUNNERS = {
    "convergence_bench": run_convergence_bench,
    "cs_recovery": run_cs_recovery,
    "mixed_q": run_mixed_q,
    "deblur": run_deblur,
}
