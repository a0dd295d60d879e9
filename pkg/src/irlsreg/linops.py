"""Linear operators with forward and adjoint maps.

Every operator acts on flat float64 vectors. ``apply`` maps a vector of length
``ncols`` to one of length ``nrows``; ``apply_adjoint`` goes the other way.
Operators are immutable after construction.
"""

import math

import numpy as np

from . import kernels


class LinearOperator:
    """Base class. Subclasses implement ``_forward`` and ``_adjoint``."""

    def __init__(self, nrows, ncols):
        nrows, ncols = int(nrows), int(ncols)
        if nrows < 1 or ncols < 1:
            raise ValueError(f"operator dimensions must be positive, got {nrows}x{ncols}")
        self.nrows = nrows
        self.ncols = ncols

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def apply(self, x):
        x = _as_vector(x, self.ncols, "apply")
        return self._forward(x)

    def apply_adjoint(self, y):
        y = _as_vector(y, self.nrows, "apply_adjoint")
        return self._adjoint(y)

    def _forward(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError

    def to_dense(self):
        """Materialize the operator column by column."""
        cols = [self._forward(e) for e in np.eye(self.ncols)]
        return np.column_stack(cols)

    def __repr__(self):
        return f"{type(self).__name__}({self.nrows}x{self.ncols})"


class DenseOperator(LinearOperator):
    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64, order="C")
        if a.ndim != 2:
            raise ValueError(f"dense operator needs a 2D array, got ndim={a.ndim}")
        if not np.all(np.isfinite(a)):
            raise ValueError("dense operator entries must be finite")
        super().__init__(*a.shape)
        a.setflags(write=False)
        self.entries = a

    def _forward(self, x):
        return self.entries @ x

    def _adjoint(self, y):
        return self.entries.T @ y

    def to_dense(self):
        return self.entries.copy()


class ConvolutionOperator(LinearOperator):
    """2D correlation with a small kernel on a zero-padded image.

    Vectors are images flattened in row-major order. The adjoint is the
    correlation with the kernel flipped along both axes.
    """

    def __init__(self, kernel, image_height, image_width):
        k = np.array(kernel, dtype=np.float64, order="C")
        if k.ndim != 2:
            raise ValueError("convolution kernel must be 2D")
        if k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
            raise ValueError(f"kernel side lengths must be odd, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValueError("kernel entries must be finite")
        h, w = int(image_height), int(image_width)
        super().__init__(h * w, h * w)
        k.setflags(write=False)
        self.kernel = k
        self.image_height = h
        self.image_width = w
        self._flipped = np.ascontiguousarray(k[::-1, ::-1])

    def _forward(self, x):
        img = x.reshape(self.image_height, self.image_width)
        return kernels.correlate2d_same(img, self.kernel).ravel()

    def _adjoint(self, y):
        img = y.reshape(self.image_height, self.image_width)
        return kernels.correlate2d_same(img, self._flipped).ravel()


class SubsampledOperator(LinearOperator):
    """Keeps the leading ``kept_rows`` rows of ``inner``."""

    def __init__(self, inner, kept_rows):
        kept_rows = int(kept_rows)
        if not 1 <= kept_rows <= inner.nrows:
            raise ValueError(f"kept_rows must lie in [1, {inner.nrows}], got {kept_rows}")
        super().__init__(kept_rows, inner.ncols)
        self.inner = inner
        self.kept_rows = kept_rows

    def _forward(self, x):
        return self.inner.apply(x)[: self.kept_rows]

    def _adjoint(self, y):
        full = np.zeros(self.inner.nrows)
        full[: self.kept_rows] = y
        return self.inner.apply_adjoint(full)


class ScaledOperator(LinearOperator):
    """``inner`` multiplied by a scalar."""

    def __init__(self, inner, factor):
        super().__init__(inner.nrows, inner.ncols)
        self.inner = inner
        self.factor = float(factor)

    def _forward(self, x):
        return self.factor * self.inner.apply(x)

    def _adjoint(self, y):
        return self.factor * self.inner.apply_adjoint(y)


def _as_vector(v, expected, where):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != expected:
        got = v.shape[0] if v.ndim == 1 else v.shape
        raise ValueError(f"{where}: expected vector of length {expected}, got {got}")
    return np.ascontiguousarray(v)


def apply(op, x):
    return op.apply(x)


def apply_adjoint(op, y):
    return op.apply_adjoint(y)


def estimate_spectral_norm(op, max_iters=200, tol=1e-10, seed=0):
    """Estimate ``||A||_2`` by power iteration on ``A^T A``.

    The estimate is ``||A v||`` for a unit vector ``v``, so it never exceeds
    the true norm (up to rounding). Iteration stops once two successive
    estimates differ by less than ``tol``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.ncols)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iters):
        av = op.apply(v)
        prev, est = est, float(np.linalg.norm(av))
        if est == 0.0:
            return 0.0
        u = op.apply_adjoint(av)
        v = u / np.linalg.norm(u)
        if abs(est - prev) < tol:
            break
    # the final normalized vector gives a Rayleigh quotient at least as good
    return max(est, float(np.linalg.norm(op.apply(v))))


def rescale_problem(op, b, target=0.99, **power_kw):
    """Scale ``A`` and ``b`` by ``1/c`` so that ``||A/c||_2 <= target``.

    Returns ``(scaled_op, scaled_b, c)``; ``c = 1`` when the operator is
    already small enough. A minimizer of the scaled problem with penalty
    weights ``lam`` is a minimizer of the original with ``lam / c**2``.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target must lie in (0, 1), got {target}")
    b = _as_vector(b, op.nrows, "rescale_problem")
    s = estimate_spectral_norm(op, **power_kw)
    if s <= target:
        return op, b.copy(), 1.0
    c = s / target
    if isinstance(op, DenseOperator):
        scaled = DenseOperator(op.entries / c)
    else:
        scaled = ScaledOperator(op, 1.0 / c)
    return scaled, b / c, c


def load_dense_operator(path):
    """Read a whitespace-delimited matrix file: ``nrows ncols`` then entries."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'nrows ncols' header")
    m, n = int(tokens[0]), int(tokens[1])
    vals = tokens[2:]
    if len(vals) != m * n:
        raise ValueError(f"{path}: expected {m * n} entries, found {len(vals)}")
    return DenseOperator(np.array(vals, dtype=np.float64).reshape(m, n))


def save_dense_operator(op, path):
    a = op.to_dense()
    with open(path, "w") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def kept_row_count(nrows, fraction):
    """Number of leading rows retained when keeping ``fraction`` of them."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    # guard against 999 * (1/3) landing a hair above 333
    k = math.ceil(round(nrows * fraction, 9))
    if k < 1:
        raise ValueError("subsampling would keep no rows")
    return min(k, nrows)
