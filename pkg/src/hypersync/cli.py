"""Command-line front end: ``python -m hypersync <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import comm, imaging, metrics
from .config import ExperimentConfig, load_config
from .dynamics import classify_stability, drive_rhs, equilibrium_eigenvalues
from .errors import HypersyncError
from .integrator import IntegrationConfig, _integrate_jit
from .lyapunov import lyapunov_spectrum
from .sync import ParameterEstimates, run_sync_experiment

log = logging.getLogger("hypersync")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(v) -> str:
    return repr(float(v))


def cmd_simulate(cfg: ExperimentConfig, out: Path, args) -> None:
    path = out / "trajectory.csv"
    header = ["t", "x1", "x2", "x3", "x4", "x5", "x6"]
    if cfg.horizon == 0:
        _write_rows(path, header, [])
        print(f"wrote {path} (empty horizon)")
        return
    every = max(1, int(round(cfg.sample_interval / cfg.step)))
    ic = IntegrationConfig(step=cfg.step, t_end=cfg.horizon, sample_every=every)
    n, tail = ic.step_plan()
    times, states, failed_at = _integrate_jit(drive_rhs, np.array(cfg.initial_point, dtype=np.float64),
                                              0.0, cfg.step, n, tail, every, (cfg.params.as_array(),))
    if tail == 0.0:
        times[-1] = cfg.horizon
    _write_rows(path, header, ([_fmt(t)] + [_fmt(v) for v in s] for t, s in zip(times, states)))
    if not math.isnan(failed_at):
        log.warning("state became non-finite at t=%.6g; trajectory truncated", failed_at)
    norms = np.linalg.norm(states, axis=1)
    print(f"wrote {path}: {len(times)} samples, |x| first {norms[0]:.6g} last {norms[-1]:.6g} max {norms.max():.6g}")


def cmd_eigen(cfg: ExperimentConfig, out: Path, args) -> None:
    eig = equilibrium_eigenvalues(cfg.params)
    verdict = classify_stability(cfg.params)
    path = out / "eigen.csv"
    _write_rows(path, ["index", "eigenvalue"], ([i, _fmt(v)] for i, v in enumerate(eig, start=1)))
    print(f"eigenvalues at the origin: {', '.join(f'{v:g}' for v in eig)}")
    print(f"stability: {verdict.value}")


def cmd_lyapunov(cfg: ExperimentConfig, out: Path, args) -> None:
    rep = lyapunov_spectrum(cfg.params, cfg.initial_point, cfg.horizon, cfg.reorth_interval, cfg.step,
                            cfg.transient)
    path = out / "lyapunov.csv"
    rep.to_csv(path)
    (out / "lyapunov_summary.txt").write_text(rep.summary() + "\n")
    print("exponents: " + ", ".join(f"{v:.4f}" for v in rep.exponents))
    print(f"{rep.summary()}  (sum {rep.exponents.sum():.5f}, mean divergence {rep.mean_divergence:.5f})")


def cmd_sync(cfg: ExperimentConfig, out: Path, args) -> None:
    rep = run_sync_experiment(cfg.params, cfg.gains, cfg.drive_init, cfg.response_init,
                              ParameterEstimates.zeros(), cfg.horizon, cfg.sync_threshold, cfg.step,
                              cfg.sample_interval, cfg.sync_window)
    path = out / "sync.csv"
    rep.to_csv(path)
    est = rep.final_estimates.as_params()
    lines = [f"sync_time {rep.sync_time!r}",
             f"final_estimates upsilon={est.upsilon:.6g} alpha={est.alpha:.6g} beta={est.beta:.6g} gamma={est.gamma:.6g}",
             f"max_V_step_increase {rep.max_V_step_increase!r}"]
    (out / "sync_summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


def _schedule(cfg: ExperimentConfig) -> comm.Schedule:
    return comm.Schedule(cfg.dwell, cfg.sample_period, cfg.start_time, cfg.channel_period, cfg.step,
                         cfg.comm_horizon)


def _round_trip(cfg: ExperimentConfig, msg: comm.Message, out: Path) -> comm.ReceptionReport:
    t0 = time.perf_counter()
    rec = comm.transmit(msg, cfg.params, _schedule(cfg), cfg.noise_sigma, cfg.seed, cfg.fraction_for(len(msg)),
                        cfg.drive_init, cfg.modulated_parameter, cfg.masked_component)
    rec_path = out / "record.txt"
    rec.write(rec_path)
    # decode what a receiver would get: the file, not the in-memory arrays
    rep = comm.decode(comm.TransmissionRecord.read(rec_path), cfg.params, cfg.gains, cfg.response_init,
                      hold=cfg.hold, sync_threshold=cfg.sync_threshold, window=cfg.sync_window)
    log.info("round trip took %.1f s", time.perf_counter() - t0)
    print(f"wrote {rec_path} (horizon {rec.header.horizon:g} s, split {rec.header.split_index}/{len(msg)}, "
          f"receiver sync at t={rep.sync_time})")
    return rep


def cmd_send_text(cfg: ExperimentConfig, out: Path, args) -> None:
    text = Path(args.input).read_text(encoding="utf-8")
    msg = comm.Message.from_text(text)
    rep = _round_trip(cfg, msg, out)
    got = rep.message.to_text()
    (out / "decrypted.txt").write_text(got, encoding="utf-8")
    wrong = [i for i, (a, b) in enumerate(zip(msg.symbols, rep.message.symbols)) if a != b]
    rows = [[i, msg.symbols[i], rep.message.symbols[i]] for i in wrong]
    _write_rows(out / "diff.csv", ["index", "sent", "received"], rows)
    print(f"{len(msg) - len(wrong)}/{len(msg)} symbols recovered" + (" (exact)" if not wrong else ""))


def cmd_send_image(cfg: ExperimentConfig, out: Path, args) -> None:
    clean = imaging.read_pgm(args.input)
    sent = clean
    if cfg.image_noise > 0:
        # image noise and channel noise use separate child streams of the seed
        img_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
        sent = imaging.gaussian_image_noise(clean, cfg.image_noise, img_rng)
        imaging.write_pgm(out / "sent.pgm", sent)
    rep = _round_trip(cfg, comm.Message.from_image(sent), out)
    got = rep.message.to_image()
    imaging.write_pgm(out / "decrypted.pgm", got)
    rows = [metrics.metrics_row("retrieved_vs_sent", sent, got),
            metrics.metrics_row("retrieved_vs_clean", clean, got)]
    metrics.write_metrics_csv(out / "metrics.csv", rows)
    metrics.write_histogram_csv(out / "histogram_sent.csv", metrics.histogram(sent))
    metrics.write_histogram_csv(out / "histogram_decrypted.csv", metrics.histogram(got))
    for r in rows:
        print(f"{r['image_id']}: mse {r['mse']:.6g} psnr {r['psnr_db']:.4f} dB ssim {r['ssim']:.6f}")


def cmd_metrics(cfg: ExperimentConfig, out: Path, args) -> None:
    a = imaging.read_pgm(args.reference)
    b = imaging.read_pgm(args.test)
    row = metrics.metrics_row(Path(args.test).name, a, b)
    metrics.write_metrics_csv(out / "metrics.csv", [row])
    metrics.write_histogram_csv(out / "histogram_reference.csv", metrics.histogram(a))
    metrics.write_histogram_csv(out / "histogram_test.csv", metrics.histogram(b))
    print(f"mse {row['mse']:.6g} psnr {row['psnr_db']:.4f} dB ssim {row['ssim']:.6f}")


COMMANDS = {
    "simulate": (cmd_simulate, "integrate the drive system and write t,x1..x6"),
    "eigen": (cmd_eigen, "eigenvalues and stability of the origin"),
    "lyapunov": (cmd_lyapunov, "finite-time Lyapunov spectrum and Kaplan-Yorke dimension"),
    "sync": (cmd_sync, "adaptive synchronisation run with V(t) monitoring"),
    "send-text": (cmd_send_text, "encrypt, transmit and decrypt a UTF-8 text file"),
    "send-image": (cmd_send_image, "encrypt, transmit and decrypt a binary PGM image"),
    "metrics": (cmd_metrics, "MSE, PSNR, SSIM and histograms for two PGM images"),
}


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def _config_table() -> str:
    rows = ExperimentConfig.describe()
    width = max(len(k) for k, _, _ in rows)
    lines = ["config keys (key = value, '#' comments) with defaults:"]
    lines += [f"  {k:<{width}}  {d:<20}  {doc}" for k, d, doc in rows]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file; flags below override it")
    common.add_argument("--out", metavar="DIR", help="output directory (config key out_dir, default 'out')")
    common.add_argument("--seed", type=int, metavar="N", help="random seed (default 0)")
    common.add_argument("--noise", type=float, metavar="SIGMA",
                        help="channel noise std-dev relative to channel RMS (default 0)")
    common.add_argument("--horizon", type=float, metavar="T",
                        help="run length in seconds (default 100; send-* default: just enough)")
    common.add_argument("--step", type=float, metavar="H", help="RK4 step in seconds (default 1e-4)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="hypersync", formatter_class=_HelpFormatter,
                                     description="Adaptive synchronisation and two-channel secure "
                                                 "communication with complex Rabinovich systems.",
                                     epilog=_config_table())
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, doc) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=doc, description=doc,
                           formatter_class=_HelpFormatter, epilog=_config_table())
        if name in ("send-text", "send-image"):
            p.add_argument("input", help="message file (UTF-8 text or binary PGM)")
        if name == "metrics":
            p.add_argument("reference", help="reference PGM")
            p.add_argument("test", help="PGM to compare against the reference")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.noise is not None:
        changes["noise_sigma"] = args.noise
    if args.step is not None:
        changes["step"] = args.step
    if args.horizon is not None:
        changes["comm_horizon" if args.command.startswith("send-") else "horizon"] = args.horizon
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command][0](cfg, out, args)
    except HypersyncError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
