"""Full-reference quality metrics for 8-bit grayscale images."""
from __future__ import annotations

import csv
import math

import numpy as np

from .errors import DimensionMismatch
from .imaging import as_image

PEAK = 255.0
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2


def _pair(a, b):
    a = as_image(a).astype(np.float64)
    b = as_image(b).astype(np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical images."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / err)


def ssim(a, b, C1: float = SSIM_C1, C2: float = SSIM_C2) -> float:
    """Single-window SSIM over whole-image statistics (population moments)."""
    if not (C1 > 0 and C2 > 0):
        raise ValueError("C1 and C2 must be positive")
    a, b = _pair(a, b)
    mu_a, mu_b = a.mean(), b.mean()
    var_a, var_b = a.var(), b.var()
    cov = np.mean((a - mu_a) * (b - mu_b))
    num = (2 * mu_a * mu_b + C1) * (2 * cov + C2)
    den = (mu_a ** 2 + mu_b ** 2 + C1) * (var_a + var_b + C2)
    return float(num / den)


def histogram(a) -> np.ndarray:
    return np.bincount(as_image(a).ravel(), minlength=256).astype(np.int64)


def write_histogram_csv(path, counts) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["intensity", "count"])
        for i, c in enumerate(counts):
            w.writerow([i, int(c)])


def metrics_row(image_id: str, reference, test) -> dict:
    return {"image_id": image_id, "mse": mse(reference, test), "psnr_db": psnr(reference, test),
            "ssim": ssim(reference, test)}


def write_metrics_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image_id", "mse", "psnr_db", "ssim"])
        for r in rows:
            w.writerow([r["image_id"], repr(r["mse"]), "inf" if math.isinf(r["psnr_db"]) else repr(r["psnr_db"]),
                        repr(r["ssim"])])
