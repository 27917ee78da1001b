"""PSNR/SSIM of retrieved vs sent (noisy) images at three noise variances.

Uses tests/data/cameraman64.pgm by default; ``--size 256`` uses the 256x256
fixture instead (about 3 minutes per noise level).
"""
import argparse
import time
from pathlib import Path

import numpy as np

from hypersync import comm, metrics
from hypersync.imaging import gaussian_image_noise, read_pgm, write_pgm

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, choices=(64, 256), default=64)
    ap.add_argument("--variances", type=float, nargs="+", default=[0.03, 0.07, 0.1])
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default="out/table")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clean = read_pgm(DATA / f"cameraman{args.size}.pgm")
    rows = []
    for k, v in enumerate(args.variances):
        t0 = time.perf_counter()
        noisy = gaussian_image_noise(clean, v, seed=np.random.SeedSequence([args.seed, k]))
        msg = comm.Message.from_image(noisy)
        got = comm.receive(comm.transmit(msg, fraction=10 / len(msg))).to_image()
        write_pgm(out / f"retrieved_{v:g}.pgm", got)
        rows.append(metrics.metrics_row(f"noisy_{v:g}", noisy, got))
        rows.append(metrics.metrics_row(f"clean_{v:g}", clean, got))
        print(f"variance {v:g}: PSNR {rows[-2]['psnr_db']:.4f} dB  SSIM {rows[-2]['ssim']:.6f}  "
              f"({time.perf_counter() - t0:.0f} s)")
    metrics.write_metrics_csv(out / "table.csv", rows)


if __name__ == "__main__":
    main()
