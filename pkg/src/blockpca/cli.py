"""Experiment command line.

Subcommands:
  recover   independent recovery trials at one configuration
  scaling   minimal sample budget vs dimension (log-log slope on stderr)
  phase     success fraction over a (sigma, n) grid
  realdata  stream a UCI docword corpus and report explained variance
  diagnose  convergence diagnostics (concentration / init / recursion)

All commands write CSV (header row, floats at 12 significant digits) to
stdout or --out, and are byte-deterministic given --seed and a fixed
BLOCKPCA_WORKERS.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .errors import BlockPCAError
from .model import parse_model_config


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(header, rows, out_path=None) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_format_cell(row[h]) for h in header) for row in rows)
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(parser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    parser.add_argument("--out", default=None, help="CSV output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockpca", description="Streaming PCA experiment harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("recover", help="independent recovery trials")
    rec.add_argument("--p", type=int, help="ambient dimension")
    rec.add_argument("--k", type=int, default=1, help="requested rank (default 1)")
    rec.add_argument(
        "--lambdas",
        type=_parse_float_list,
        default=None,
        help="comma list of spike strengths, descending with first 1 "
        "(default: k copies of 1); length above k runs under-parameterized",
    )
    rec.add_argument("--sigma", type=float, help="noise standard deviation")
    rec.add_argument("--eps", type=float, required=True, help="success threshold")
    rec.add_argument(
        "--schedule",
        choices=("theorem", "empirical", "manual"),
        default="theorem",
        help="block schedule rule (default theorem)",
    )
    rec.add_argument("--n", type=int, default=None, help="sample budget (empirical schedule)")
    rec.add_argument("--block-size", type=int, default=None, help="manual B")
    rec.add_argument("--blocks", type=int, default=None, help="manual T")
    rec.add_argument("--c-b", type=float, default=0.2, help="block-size constant (default 0.2)")
    rec.add_argument("--c-t", type=float, default=1.0, help="block-count constant (default 1)")
    rec.add_argument("--trials", type=int, default=200, help="independent runs (default 200)")
    rec.add_argument(
        "--model-config",
        default=None,
        help="key-value file providing p, lambdas, sigma, seed",
    )
    _add_common(rec)

    sca = sub.add_parser("scaling", help="minimal sample budget vs dimension")
    sca.add_argument("--p-list", type=_parse_int_list, required=True, help="ascending dims")
    sca.add_argument("--sigma", type=float, required=True)
    sca.add_argument("--eps", type=float, required=True)
    sca.add_argument("--success-target", type=float, default=0.5)
    sca.add_argument("--trials", type=int, default=200)
    sca.add_argument("--n-floor-mult", type=int, default=32, help="grid floor = mult * p")
    sca.add_argument("--n-cap-mult", type=int, default=8192, help="grid cap = mult * p")
    sca.add_argument("--grid-factor", type=float, default=1.3)
    sca.add_argument("--with-batch", action="store_true", help="also search the batch oracle")
    _add_common(sca)

    pha = sub.add_parser("phase", help="success fraction over a (sigma, n) grid")
    pha.add_argument("--sigma-grid", type=_parse_float_list, required=True)
    pha.add_argument("--n-grid", type=_parse_int_list, required=True)
    pha.add_argument("--p", type=int, required=True)
    pha.add_argument("--eps", type=float, required=True)
    pha.add_argument("--trials", type=int, default=200)
    _add_common(pha)

    rea = sub.add_parser("realdata", help="explained variance on a docword corpus")
    rea.add_argument("--docword", required=True, help="UCI docword file (.gz accepted)")
    rea.add_argument("--k", type=int, required=True, help="components to extract")
    rea.add_argument(
        "--orientation",
        choices=("docs", "words"),
        required=True,
        help="docs: documents are samples; words: words are samples",
    )
    rea.add_argument(
        "--normalize", action="store_true", help="l2-normalize each sample (default off)"
    )
    rea.add_argument(
        "--no-batch", action="store_true", help="skip the batch comparison column"
    )
    _add_common(rea)

    dia = sub.add_parser("diagnose", help="convergence diagnostics")
    dia.add_argument("--lemma", choices=("concentration", "init", "recursion"), required=True)
    dia.add_argument("--p", type=int, default=100)
    dia.add_argument("--k", type=int, default=1)
    dia.add_argument("--sigma", type=float, default=0.5)
    dia.add_argument(
        "--block-sizes",
        type=_parse_int_list,
        default=[500, 1000],
        help="comma list of block sizes (concentration)",
    )
    dia.add_argument("--trials", type=int, default=100)
    _add_common(dia)

    return parser


def _cmd_recover(args, parser) -> int:
    p, sigma, seed = args.p, args.sigma, args.seed
    lambdas = args.lambdas
    if args.model_config is not None:
        if any(v is not None for v in (args.p, args.sigma, args.lambdas)):
            parser.error("--model-config conflicts with --p/--sigma/--lambdas")
        cfg = parse_model_config(open(args.model_config, encoding="utf-8").read())
        p, lambdas, sigma, seed = cfg["p"], cfg["lambdas"], cfg["sigma"], cfg["seed"]
    if p is None or sigma is None:
        parser.error("recover needs --p and --sigma (or --model-config)")
    if p < 1:
        parser.error("--p must be positive")
    if lambdas is None:
        lambdas = [1.0] * args.k
    if args.k > len(lambdas):
        parser.error("--k cannot exceed the number of lambdas")
    schedule = experiments.build_schedule(
        args.schedule, p, args.k, sigma, lambdas, args.eps,
        args.n, args.block_size, args.blocks, args.c_b, args.c_t,
    )
    rows = experiments.recover_rows(
        p, args.k, lambdas, sigma, schedule, args.eps, args.trials, seed
    )
    write_csv(experiments.RECOVER_HEADER, rows, args.out)
    return 0


def _cmd_scaling(args) -> int:
    rows, slope = experiments.scaling_rows(
        args.p_list,
        args.sigma,
        args.eps,
        args.success_target,
        args.trials,
        args.seed,
        n_floor_mult=args.n_floor_mult,
        n_cap_mult=args.n_cap_mult,
        grid_factor=args.grid_factor,
        include_batch=args.with_batch,
    )
    write_csv(experiments.SCALING_HEADER, rows, args.out)
    if slope is not None:
        print(f"log-log slope: {slope:.12g}", file=sys.stderr)
    return 0


def _cmd_phase(args) -> int:
    rows = experiments.phase_rows(
        args.sigma_grid, args.n_grid, args.p, args.eps, args.trials, args.seed
    )
    write_csv(experiments.PHASE_HEADER, rows, args.out)
    return 0


def _cmd_realdata(args) -> int:
    rows = experiments.realdata_rows(
        args.docword,
        args.k,
        args.orientation,
        args.normalize,
        args.seed,
        include_batch=not args.no_batch,
    )
    write_csv(experiments.REALDATA_HEADER, rows, args.out)
    return 0


def _cmd_diagnose(args) -> int:
    if args.lemma == "recursion":
        write_csv(experiments.RECURSION_HEADER, experiments.recursion_check_rows(), args.out)
    elif args.lemma == "init":
        rows = experiments.init_overlap_rows(args.p, args.k, args.trials, args.seed)
        write_csv(experiments.INIT_HEADER, rows, args.out)
    else:
        rows = experiments.concentration_rows(
            args.p, args.sigma, args.block_sizes, args.trials, args.seed
        )
        write_csv(experiments.CONCENTRATION_HEADER, rows, args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "recover":
            return _cmd_recover(args, parser)
        if args.command == "scaling":
            return _cmd_scaling(args)
        if args.command == "phase":
            return _cmd_phase(args)
        if args.command == "realdata":
            return _cmd_realdata(args)
        return _cmd_diagnose(args)
    except BlockPCAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
