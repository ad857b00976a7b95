"""Command-line surface: hide, extract, analyze-normality, sweep-tradeoff,
ode-selftest.

Every config key is mirrored as a --key flag overriding the config file, the
key file holds 32 raw bytes or 64 hex characters, and all reports are UTF-8
CSV. Exit codes: 0 success, 2 usage, 3 capacity exceeded, 4 infeasible
geometry, 5 corrupted extraction, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import experiments, ode
from .codec import bit_accuracy, decrypt_bits
from .errors import CapacityError, CorruptionError, InfeasibleGeometryError, TensorFormatError
from .runconfig import CONFIG_KEYS, RunConfig
from .tensorio import read_tensor, write_tensor

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_GEOMETRY = 4
EXIT_CORRUPTION = 5


def _load_key(path: str) -> bytes:
    raw = Path(path).read_bytes()
    if len(raw) == 32:
        return raw
    text = raw.decode("ascii", errors="replace").strip()
    if len(text) == 64:
        try:
            return bytes.fromhex(text)
        except ValueError:
            pass
    raise ValueError(f"{path}: key file must be 32 raw bytes or 64 hex chars")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {
        key: getattr(args, f"cfg_{key}")
        for key in CONFIG_KEYS
        if getattr(args, f"cfg_{key}", None) is not None
    }
    return cfg.with_overrides(overrides) if overrides else cfg


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value run configuration file")
    group = parser.add_argument_group("config overrides")
    for key in CONFIG_KEYS:
        group.add_argument(
            f"--{key.replace('_', '-')}", dest=f"cfg_{key}", metavar="V",
            help=f"override config key {key}",
        )


def _write_report(path: str | None, rows: list[tuple]) -> None:
    if path is None:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def cmd_hide(args) -> int:
    cfg = _load_config(args)
    key = _load_key(args.key)
    message = Path(args.message).read_bytes()
    result = experiments.hide_message(message, cfg, key, cfg.nonce)
    write_tensor(args.out_noise, result.noise.values.reshape(cfg.shape))
    write_tensor(args.out_stego, result.sample.reshape(cfg.shape))
    rep = result.correction
    rows = [
        ("capacity_bits", result.capacity_bits),
        ("used_bits", result.used_bits),
        ("capacity_bpp", result.capacity_bits / cfg.pixels),
        ("used_bpp", result.used_bits / cfg.pixels),
        ("iterations", rep.iterations),
        ("c1", repr(rep.c1)),
        ("c2", repr(rep.c2)),
        ("g_bar", repr(rep.g_bar)),
        ("s_g2", repr(rep.s_g2)),
        ("converged", rep.converged),
        ("nonce", cfg.nonce.hex()),
    ]
    _write_report(args.report, rows)
    print(f"hidden {len(message)} bytes ({result.used_bits}/{result.capacity_bits} bits), "
          f"correction iterations={rep.iterations}, S^2={rep.s_g2:.6f}")
    if not rep.converged:
        print("warning: variance correction did not converge", file=sys.stderr)
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _load_config(args)
    key = _load_key(args.key)
    stego = read_tensor(args.stego)
    if stego.size != cfg.k:
        raise ValueError(f"stego has {stego.size} values, config expects {cfg.k}")
    stego = experiments.apply_channel(stego, cfg)
    received = experiments.extract_symbol_bits(stego, cfg, key)

    rows: list[tuple] = []
    accuracy = None
    if args.reference:
        ref_bits = np.unpackbits(np.frombuffer(Path(args.reference).read_bytes(), np.uint8))
        if 32 + ref_bits.size > received.size:
            raise ValueError("reference message exceeds configured capacity")
        plain = decrypt_bits(received, key, cfg.nonce)
        accuracy = bit_accuracy(plain[32:32 + ref_bits.size], ref_bits)
        rows.append(("bit_accuracy", repr(accuracy)))
        print(f"bit accuracy vs reference: {accuracy:.6f}")

    try:
        message = experiments.extract_message(stego, cfg, key, cfg.nonce)
    except CorruptionError as exc:
        rows.append(("header_valid", False))
        _write_report(args.report, rows)
        print(f"corrupted extraction: {exc}", file=sys.stderr)
        return EXIT_CORRUPTION
    rows += [("header_valid", True), ("message_bytes", len(message))]
    _write_report(args.report, rows)
    Path(args.out).write_bytes(message)
    print(f"extracted {len(message)} bytes -> {args.out}")
    return EXIT_OK


def cmd_analyze_normality(args) -> int:
    cfg = _load_config(args)
    reports = experiments.normality_trials(cfg, args.trials)
    ratio = sum(r.accept_h0 for r in reports) / len(reports)
    rows: list[tuple] = [("trial", "n", "D", "p_value", "accept_h0")]
    rows += [
        (i, r.n, repr(r.statistic), repr(r.p_value), r.accept_h0)
        for i, r in enumerate(reports)
    ]
    rows.append(("acceptance_ratio", len(reports), "", "", repr(ratio)))
    _write_report(args.out, rows)
    print(f"acceptance ratio over {args.trials} trials "
          f"(mode={cfg.mode.value}, l={cfg.l}, delta_g={cfg.delta_g}, n={cfg.k}): {ratio:.3f}")
    return EXIT_OK


def cmd_sweep_tradeoff(args) -> int:
    cfg = _load_config(args)
    deltas = [float(v) for v in args.sweep.split(",") if v.strip()]
    if not deltas:
        raise ValueError("--sweep needs at least one delta_g value")
    rows: list[tuple] = [(
        "delta_g", "trials", "ks_accept_ratio", "mean_bit_accuracy",
        "mean_iterations", "feasible",
    )]
    for i, dg in enumerate(deltas):
        row = experiments.tradeoff_point(cfg, dg, args.trials, seed=cfg.master_seed + i)
        rows.append((
            row.delta_g, row.trials, repr(row.ks_accept_ratio),
            repr(row.mean_bit_accuracy), repr(row.mean_iterations), row.feasible,
        ))
        status = "" if row.feasible else "  [infeasible]"
        print(f"delta_g={dg}: ks_ratio={row.ks_accept_ratio:.3f} "
              f"accuracy={row.mean_bit_accuracy:.4f} iters={row.mean_iterations:.1f}{status}")
    _write_report(args.out, rows)
    return EXIT_OK


def cmd_ode_selftest(args) -> int:
    cfg = _load_config(args)
    report = experiments.ode_selftest(cfg)
    rows: list[tuple] = [("steps", "max_error")]
    rows += list(zip(report.study_steps, (repr(e) for e in report.study_errors)))
    if report.order is not None:
        rows.append(("measured_order", repr(report.order)))
    rows.append(("benchmark_err_final", repr(report.benchmark_err_final)))
    rows.append(("benchmark_order", repr(report.benchmark_order)))
    rows.append(("notes", report.notes))
    _write_report(args.out, rows)
    for n, err in zip(report.study_steps, report.study_errors):
        print(f"steps={n:5d}  max error vs closed form = {err:.3e}")
    if report.order is None:
        print(f"order study skipped: {report.notes}")
    else:
        print(f"measured order: {report.order:.2f}  ({report.notes})")
    print(f"short-horizon benchmark: err@{experiments.BENCHMARK_LADDER[-1]} steps = "
          f"{report.benchmark_err_final:.3e}, order={report.benchmark_order:.2f}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gausstego",
        description="Hide bit messages inside Gaussian noise and flow them "
                    "through an invertible sampler.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hide", help="encrypt a message into noise and a sample tensor")
    p.add_argument("--key", required=True)
    p.add_argument("--message", required=True)
    p.add_argument("--out-noise", required=True)
    p.add_argument("--out-stego", required=True)
    p.add_argument("--report")
    _add_config_flags(p)
    p.set_defaults(func=cmd_hide)

    p = sub.add_parser("extract", help="invert a sample tensor back to the message")
    p.add_argument("--key", required=True)
    p.add_argument("--stego", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reference", help="original message for bit-accuracy reporting")
    p.add_argument("--report")
    _add_config_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("analyze-normality", help="K-S acceptance ratio over keyed trials")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--out", help="CSV output path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_analyze_normality)

    p = sub.add_parser("sweep-tradeoff", help="accuracy/normality sweep over delta_g")
    p.add_argument("--sweep", required=True, metavar="D0,D1,...",
                   help="comma-separated delta_g values")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--out", help="CSV output path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep_tradeoff)

    p = sub.add_parser("ode-selftest", help="closed-form solver verification")
    p.add_argument("--out", help="CSV output path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ode_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InfeasibleGeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except CorruptionError as exc:
        print(f"corruption error: {exc}", file=sys.stderr)
        return EXIT_CORRUPTION
    except (ValueError, OSError, TensorFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
