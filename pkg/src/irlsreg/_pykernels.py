"""Pure numpy versions of the inner loops in ``_ckernels.pyx``."""

import numpy as np


def correlate2d_same(image, kernel):
    h, w = image.shape
    kh, kw = kernel.shape
    ch, cw = kh // 2, kw // 2
    padded = np.zeros((h + kh - 1, w + kw - 1))
    padded[ch:ch + h, cw:cw + w] = image
    out = np.zeros((h, w))
    for a in range(kh):
        for c in range(kw):
            out += kernel[a, c] * padded[a:a + h, c:c + w]
    return out


def irls_weights(x, eps, q):
    w = np.power(x * x + eps * eps, (q - 2.0) / 2.0)
    w[q == 2.0] = 1.0
    return w


def reweighted_scale(v, lam, q, w):
    return v / (1.0 + lam * q * w)


def soft_threshold(v, tau):
    # adding 0.0 turns -0.0 into +0.0
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0) + 0.0
