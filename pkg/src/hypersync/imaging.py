"""8-bit grayscale images: binary PGM I/O, vectorisation and additive noise."""
from __future__ import annotations

import re

import numpy as np

from .errors import PixelOutOfRange


def as_image(a) -> np.ndarray:
    """Validate an m x n array of integers in [0, 255] and return it as uint8."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise ValueError(f"grayscale image must be 2-D, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (np.any(arr < 0) or np.any(arr > 255)):
            raise PixelOutOfRange("pixel values must lie in [0, 255]")
        if arr.size and np.any(arr != np.round(arr)):
            raise PixelOutOfRange("pixel values must be integers")
        arr = arr.astype(np.uint8)
    return arr


def image_to_symbols(img) -> np.ndarray:
    """Column-major vectorisation: s11, s21, ..., sm1, s12, ..."""
    return as_image(img).flatten(order="F").astype(np.int64)


def symbols_to_image(symbols, dims) -> np.ndarray:
    m, n = dims
    s = np.asarray(symbols)
    if s.size != m * n:
        raise ValueError(f"{s.size} symbols cannot fill a {m}x{n} image")
    if np.any(s < 0) or np.any(s > 255):
        raise PixelOutOfRange("pixel values must lie in [0, 255]")
    return s.reshape((m, n), order="F").astype(np.uint8)


_PGM_TOKEN = re.compile(rb"(?:\s+|#[^\n]*\n)*([^\s#]+)")


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != b"P5":
        raise ValueError(f"{path}: only binary PGM (P5) is supported, got {magic!r}")
    if maxval != 255:
        raise ValueError(f"{path}: maxval must be 255, got {maxval}")
    pos += 1  # single whitespace byte before the raster
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return raster.reshape((height, width)).copy()


def write_pgm(path, img) -> None:
    img = as_image(img)
    m, n = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (n, m))
        fh.write(np.ascontiguousarray(img).tobytes())


def gaussian_image_noise(img, variance: float, seed=None) -> np.ndarray:
    """Zero-mean Gaussian noise of the given variance on [0, 1]-scaled intensities.

    The result is clipped to [0, 1] and re-quantised to 8 bits.
    """
    if variance < 0:
        raise ValueError("variance must be >= 0")
    img = as_image(img)
    if variance == 0:
        return img.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noisy = img / 255.0 + rng.normal(0.0, np.sqrt(variance), size=img.shape)
    return np.round(np.clip(noisy, 0.0, 1.0) * 255.0).astype(np.uint8)
