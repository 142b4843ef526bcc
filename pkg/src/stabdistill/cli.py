"""Command-line front end; every subcommand writes CSV (or text) output."""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

import numpy as np

from .csvio import write_csv

SUBCOMMANDS = ("distill", "recurrence", "classical", "conv", "surface", "threshold", "standard-form", "metrics")


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (stop inclusive), a comma list, or one value."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid {text!r} must be start:stop:step")
        start, stop, step = (float(v) for v in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"grid {text!r} needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _prob(text: str) -> float:
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"{text} is not a probability")
    return v


def _modes(text: str):
    parts = text.split(",")
    if len(parts) > 2 or any(m not in ("correct", "detect") for m in parts):
        raise argparse.ArgumentTypeError(f"invalid mode {text!r}")
    return parts[0] if len(parts) == 1 else tuple(parts)


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_mc(p: argparse.ArgumentParser, engines=("frame", "tableau")) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--p", type=parse_grid, help="input error probabilities (grid)")
    g.add_argument("--fidelity", type=parse_grid, help="input fidelities F = 1 - p (grid)")
    p.add_argument("--trials", type=_positive, default=100000)
    p.add_argument("--seed", type=int, required=True, help="integer seed (mandatory)")
    p.add_argument("--bilateral", action="store_true", help="noise on both halves")
    p.add_argument("--engine", choices=engines, default=engines[0])
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stabdistill", description="Stabilizer entanglement distillation toolkit")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("distill", help="block-code distillation sweep")
    p.add_argument("--code", required=True, help="builtin name or code file")
    p.add_argument("--mode", choices=("correct", "detect"), default="correct")
    _add_mc(p)

    p = sub.add_parser("recurrence", help="n-to-1 recurrence protocol sweep")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--iterations", type=_positive, default=2)
    _add_mc(p)

    p = sub.add_parser("classical", help="two classical codes, bit flips then phase flips")
    p.add_argument("--h1", required=True, help="bit-flip parity-check file (rows of 0/1)")
    p.add_argument("--h2", required=True, help="phase-flip parity-check file")
    p.add_argument("--mode", type=_modes, default="correct", help="one mode, or two as 'correct,detect'")
    _add_mc(p)

    p = sub.add_parser("conv", help="convolutional-code streaming distillation")
    p.add_argument("--code", default=None, help="Laurent check-matrix file or 'rate_one_third' (default)")
    p.add_argument("--frames", type=_positive, default=12)
    p.add_argument("--mode", choices=("correct", "detect"), default="correct")
    p.add_argument("--assist", default=None, metavar="Q", help="run assisted decoding of Q(D) instead")
    p.add_argument("--block", type=_positive, default=None, help="block length N for --assist")
    p.add_argument("--meas-flip", type=_prob, default=0.0)
    _add_mc(p)

    p = sub.add_parser("surface", help="planar-code resource state under decoding-measurement noise")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--meas-flip", type=parse_grid, required=True, help="flip probabilities (grid)")
    p.add_argument("--p", type=float, default=0.0, help="pair error probability")
    p.add_argument("--trials", type=_positive, default=100000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--engine", choices=("frame", "tableau"), default="frame")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out", default="-")

    p = sub.add_parser("threshold", help="analytic decoding-measurement threshold versus L")
    p.add_argument("--lmin", type=int, default=2)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--lstep", type=_positive, default=1)
    p.add_argument("--out", default="-")

    p = sub.add_parser("standard-form", help="print a code in standard form with logical operators")
    p.add_argument("--code", required=True, help="builtin name, stabilizer file or Laurent file")
    p.add_argument("--conv", action="store_true", help="treat --code as a Laurent check matrix")
    p.add_argument("--steps", action="store_true", help="also list elimination steps (Laurent codes)")
    p.add_argument("--out", default="-")

    p = sub.add_parser("metrics", help="circuit metrics of the synthesized measurement circuit")
    p.add_argument("--code", default=None, help="builtin name or code file")
    p.add_argument("--conv", default=None, nargs="?", const="", help="Laurent code file ('' = rate-1/3)")
    p.add_argument("--frames", type=_positive, default=12)
    p.add_argument("--netlist", default=None, help="also write the scheduled netlist here")
    p.add_argument("--out", default="-")
    return ap


# ----------------------------------------------------------------------


def _noise_points(args) -> list:
    from .distillation import NoiseSpec

    if args.fidelity is not None:
        return [NoiseSpec.from_fidelity(F, bilateral=args.bilateral) for F in args.fidelity]
    ps = args.p if args.p is not None else [0.0]
    return [NoiseSpec(p, bilateral=args.bilateral) for p in ps]


def _sweep(args, run) -> int:
    rows = [run(spec).to_row() for spec in _noise_points(args)]
    write_csv(rows, args.out)
    return 0


def _read_bits(path: str) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([int(c) for c in line.replace(",", " ").replace(" ", "")])
    return np.array(rows, dtype=np.uint8)


def _cmd_distill(args) -> int:
    from .blockcode import load_code
    from .distillation import run_block_protocol

    code = load_code(args.code)
    return _sweep(args, lambda s: run_block_protocol(code, args.mode, s, args.trials, args.seed,
                                                     engine=args.engine, workers=args.workers))


def _cmd_recurrence(args) -> int:
    from .distillation import run_recurrence

    return _sweep(args, lambda s: run_recurrence(args.n, args.iterations, s, args.trials, args.seed,
                                                 engine=args.engine, workers=args.workers))


def _cmd_classical(args) -> int:
    from .distillation import classical_code_protocol

    h1, h2 = _read_bits(args.h1), _read_bits(args.h2)
    return _sweep(args, lambda s: classical_code_protocol(h1, h2, s, args.trials, args.seed, mode=args.mode,
                                                          engine=args.engine, workers=args.workers))


def _load_conv(path):
    from .convcode import ConvCode, rate_one_third_code

    if not path or path.replace("-", "_").removesuffix(".txt") == "rate_one_third":
        return rate_one_third_code()
    with open(path, encoding="utf-8") as fh:
        return ConvCode.from_text(fh.read())


def _cmd_conv(args) -> int:
    from .convcode import LaurentPoly, ea_decode, run_conv_distillation
    from .distillation import NoiseSpec

    if args.assist is not None:
        q = LaurentPoly.parse(args.assist)
        rows = []
        for spec in _noise_points(args):
            spec = NoiseSpec(spec.p, meas_flip=args.meas_flip, bilateral=spec.bilateral)
            r = ea_decode(q, args.block, spec, args.trials, args.seed, workers=args.workers)
            row = r.result.to_row()
            row["overhead"] = r.overhead
            rows.append(row)
        write_csv(rows, args.out)
        return 0
    code = _load_conv(args.code)
    return _sweep(args, lambda s: run_conv_distillation(code, args.frames, s, args.trials, args.seed, args.mode,
                                                        engine=args.engine, workers=args.workers))


def _cmd_surface(args) -> int:
    from .distillation import NoiseSpec
    from .planar import decode_error_prob, measurement_threshold, run_resource_protocol

    rows = []
    for q in args.meas_flip:
        r = run_resource_protocol(args.L, NoiseSpec(args.p, meas_flip=q), args.trials, args.seed,
                                  engine=args.engine, workers=args.workers)
        pl = 1.0 - float(r.residual_probs[0, 0])
        ci = 1.96 * math.sqrt(max(pl * (1 - pl), 0.0) / r.trials)
        rows.append({"L": args.L, "p_meas": q, "P_L_analytic": decode_error_prob(q, args.L), "P_L_mc": pl,
                     "ci95": ci, "p_threshold": measurement_threshold(args.L)})
    write_csv(rows, args.out, ["L", "p_meas", "P_L_analytic", "P_L_mc", "ci95", "p_threshold"])
    return 0


def _cmd_threshold(args) -> int:
    from .planar import measurement_threshold

    if args.lmin < 2 or args.lmax < args.lmin:
        raise UsageError("need 2 <= lmin <= lmax")
    rows = [{"L": L, "n_qubits": 2 * L * L - 2 * L + 1, "p_threshold": measurement_threshold(L)}
            for L in range(args.lmin, args.lmax + 1, args.lstep)]
    write_csv(rows, args.out, ["L", "n_qubits", "p_threshold"])
    return 0


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_standard_form(args) -> int:
    if args.conv:
        from .convcode import SeriesReport, conv_logical_operators, conv_standard_form, format_matrix

        std = conv_standard_form(_load_conv(args.code))
        out = []
        if args.steps:
            out += [s.to_text() for s in std.steps]
        if isinstance(std, SeriesReport):
            out.append("# " + std.message + "\n")
            _emit("".join(out), args.out)
            return 1
        lx, lz = conv_logical_operators(std)
        out.append(f"# r = {std.r}\n# column_perm = {','.join(map(str, std.column_perm))}\n")
        out.append(std.to_text())
        out.append("# logical X\n" + format_matrix(lx))
        out.append("# logical Z\n" + format_matrix(lz))
        _emit("".join(out), args.out)
        return 0
    from .blockcode import load_code, standard_form_listing

    _emit(standard_form_listing(load_code(args.code)), args.out)
    return 0


def _cmd_metrics(args) -> int:
    from .blockcode import load_code
    from .circuit import UNITARY_REFERENCE, synthesize_measurement_circuit

    if (args.code is None) == (args.conv is None):
        raise UsageError("give exactly one of --code or --conv")
    if args.conv is not None:
        code = _load_conv(args.conv)
        name = args.conv or "rate_one_third"
    else:
        code = load_code(args.code)
        name = args.code
    mc = synthesize_measurement_circuit(code, frames=args.frames)
    m = mc.metrics
    cols = ["circuit", "depth2q", "gates2q_per_frame", "span_frames", "data_layers"]
    rows = [{"circuit": name, "depth2q": m.depth2q, "gates2q_per_frame": m.gates2q_per_frame,
             "span_frames": m.span_frames, "data_layers": m.data_layers}]
    if args.conv is not None:
        r = UNITARY_REFERENCE
        rows.append({"circuit": "unitary_reference", "depth2q": r.depth2q, "gates2q_per_frame": r.gates2q_per_frame,
                     "span_frames": r.span_frames, "data_layers": ""})
    if args.netlist:
        _emit(mc.circuit.to_netlist(), args.netlist)
    write_csv(rows, args.out, cols)
    return 0


class UsageError(Exception):
    pass


_DISPATCH = {
    "distill": _cmd_distill,
    "recurrence": _cmd_recurrence,
    "classical": _cmd_classical,
    "conv": _cmd_conv,
    "surface": _cmd_surface,
    "threshold": _cmd_threshold,
    "standard-form": _cmd_standard_form,
    "metrics": _cmd_metrics,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse reports usage errors with code 2
        return int(e.code) if e.code is not None else 0
    try:
        return _DISPATCH[args.command](args)
    except UsageError as e:
        print(f"stabdistill {args.command}: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as e:
        print(f"stabdistill {args.command}: error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
