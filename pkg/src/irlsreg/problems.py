"""Seeded generators for synthetic test problems.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64 bit
generator; normal draws via numpy's ziggurat transform of uniform bits), so
identical seeds give identical streams on a given numpy version.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .linops import DenseOperator, SubsampledOperator, kept_row_count


class SignalKind(str, Enum):
    RANDOM_SUPPORT = "random_support"
    STAIRCASE = "staircase"
    HALF_SPARSE_HALF_DENSE = "half_sparse_half_dense"


@dataclass(frozen=True)
class SyntheticProblem:
    operator: object
    b: np.ndarray
    x_true: np.ndarray | None = None
    seed: int = 0
    description: str = ""
    noisy: bool = False


def logspace(hi, lo, n):
    """``n`` geometrically spaced values from ``hi`` down to ``lo`` inclusive."""
    if hi <= 0 or lo <= 0:
        raise ValueError("endpoints must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return np.array([float(hi)])
    return np.logspace(math.log10(hi), math.log10(lo), int(n))


def make_reverse_svd_matrix(m, n, singular_values, seed):
    """Dense ``U S V^T`` with orthogonal factors from QR of Gaussian matrices."""
    s = np.asarray(singular_values, dtype=np.float64)
    k = min(m, n)
    if s.shape != (k,):
        raise ValueError(f"need {k} singular values for a {m}x{n} matrix, got {s.size}")
    if np.any(s < 0) or np.any(np.diff(s) > 0):
        raise ValueError("singular values must be nonnegative and nonincreasing")
    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.standard_normal((m, m)))
    v, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return DenseOperator((u[:, :k] * s) @ v[:, :k].T)


def _sparse_part(rng, n, count):
    x = np.zeros(n)
    idx = rng.choice(n, size=count, replace=False)
    x[np.sort(idx)] = rng.standard_normal(count)
    return x


def _staircase(rng, n, count):
    # up to four plateaus, one per quarter of the vector, heights alternating in sign
    blocks = min(4, count)
    lengths = [count // blocks + (1 if i < count % blocks else 0) for i in range(blocks)]
    x = np.zeros(n)
    seg = n // blocks
    sign = rng.choice([-1.0, 1.0])
    for i, length in enumerate(lengths):
        lo = i * seg
        hi = n if i == blocks - 1 else (i + 1) * seg
        start = lo + int(rng.integers(0, max(hi - lo - length, 0) + 1))
        x[start:start + length] = sign * float(rng.integers(1, 4))
        sign = -sign
    return x


def make_signal(n, density, kind, seed):
    kind = SignalKind(kind)
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    count = int(math.floor(density * n + 1e-9))
    if count < 1:
        raise ValueError(f"density {density} leaves no nonzeros for n={n}")
    rng = np.random.default_rng(seed)
    if kind is SignalKind.RANDOM_SUPPORT:
        return _sparse_part(rng, n, count)
    if kind is SignalKind.STAIRCASE:
        return _staircase(rng, n, count)
    h1 = (n + 1) // 2
    x = np.zeros(n)
    x[:h1] = _sparse_part(rng, h1, max(1, int(math.floor(density * h1 + 1e-9))))
    x[h1:] = rng.standard_normal(n - h1)
    return x


def make_problem(m, n, sv_hi, sv_lo, density, kind, seed):
    """Reverse-SVD matrix with logspaced singular values and ``b = A x_true``."""
    ss = np.random.SeedSequence(seed)
    mat_seed, sig_seed = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    op = make_reverse_svd_matrix(m, n, logspace(sv_hi, sv_lo, min(m, n)), mat_seed)
    x = make_signal(n, density, kind, sig_seed)
    return SyntheticProblem(op, op.apply(x), x, seed,
                            f"{m}x{n} sv {sv_hi:g}..{sv_lo:g} {SignalKind(kind).value} {density:g}")


def subsample_rows(prob, fraction):
    """Keep the leading ``ceil(fraction * m)`` rows of the operator and data."""
    op = prob.operator
    k = kept_row_count(op.nrows, fraction)
    if k == op.nrows:
        return prob
    if isinstance(op, DenseOperator):
        sub = DenseOperator(op.entries[:k])
    else:
        sub = SubsampledOperator(op, k)
    return replace(prob, operator=sub, b=prob.b[:k].copy(),
                   description=f"{prob.description} rows[:{k}]")


def make_gaussian_blur_kernel(size, sigma, amplitude):
    size = int(size)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    if sigma <= 0 or amplitude <= 0:
        raise ValueError("sigma and amplitude must be positive")
    c = (size - 1) / 2.0
    i = np.arange(size) - c
    r2 = i[:, None] ** 2 + i[None, :] ** 2
    return amplitude * np.exp(-r2 / (2.0 * sigma * sigma))


def add_noise_snr(b, snr, seed):
    """Add white Gaussian noise with ``||b|| / ||noise|| = snr`` exactly."""
    b = np.asarray(b, dtype=np.float64)
    if snr <= 0:
        raise ValueError("snr must be positive")
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        raise ValueError("cannot set an SNR for a zero signal")
    e = np.random.default_rng(seed).standard_normal(b.shape)
    return b + e * (nb / (snr * float(np.linalg.norm(e))))


def recovery_error(x, x_true):
    """Percent error ``100 ||x - x_true|| / ||x_true||``."""
    x_true = np.asarray(x_true, dtype=np.float64)
    nt = float(np.linalg.norm(x_true))
    if nt == 0.0:
        raise ValueError("x_true is zero")
    return 100.0 * float(np.linalg.norm(np.asarray(x, dtype=np.float64) - x_true)) / nt
