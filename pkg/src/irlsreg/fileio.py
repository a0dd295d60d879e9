"""Plain-text vector files, plain PGM images and ``key = value`` config files."""

import numpy as np


def save_vector(v, path):
    with open(path, "w") as fh:
        for val in np.asarray(v, dtype=np.float64):
            fh.write(f"{float(val)!r}\n")


def load_vector(path):
    return np.loadtxt(path, dtype=np.float64, ndmin=1, comments="#")


class PgmError(ValueError):
    pass


def read_pgm(path):
    """Read a plain (P2) or binary (P5) 8-bit PGM; returns floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"{path}: not a PGM file (magic {magic!r})")
    # header tokens, skipping comments
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise PgmError(f"{path}: truncated header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PgmError(f"{path}: malformed header") from None
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise PgmError(f"{path}: unsupported dimensions or maxval")
    if magic == b"P2":
        body = data[pos:].split()
        if len(body) != width * height:
            raise PgmError(f"{path}: expected {width * height} pixels, found {len(body)}")
        pix = np.array([int(t) for t in body], dtype=np.float64)
    else:
        raw = data[pos + 1:pos + 1 + width * height]
        if len(raw) != width * height:
            raise PgmError(f"{path}: truncated pixel data")
        pix = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
    if np.any(pix > maxval):
        raise PgmError(f"{path}: pixel value exceeds maxval")
    return pix.reshape(height, width) / maxval


def write_pgm(image, path):
    """Write a [0, 1] image as plain P2 with maxval 255, clamping out-of-range values."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    pix = np.rint(img * 255.0).astype(int)
    h, w = pix.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in pix:
            fh.write(" ".join(str(v) for v in row))
            fh.write("\n")


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            out[key] = val.strip()
    return out
