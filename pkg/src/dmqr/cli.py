"""Command-line harness.

Subcommands:
  gen      write the fixture suite (or one generated matrix) as MatrixMarket
  factor   factor one matrix and print a summary
  compare  run algorithms over matrices and emit the comparison CSV
  sweep    scan the (tau, delta) plane and emit the stability/time CSV

Exit codes: 0 success, 1 parse/config error, 2 oracle failure in a requested
check.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .dm import DMParams
from .harness import (
    ALGORITHMS,
    compare_run,
    fixture_suite,
    grid_sweep,
    kahan_matrix,
    random_rank_deficient,
    rows_to_csv,
    run_algorithm,
    sweep_to_csv,
)
from .mmio import MatrixMarketError, read_matrix_market, write_matrix_market
from .rrqr import StopCriterion


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 on any usage problem (unknown flags included)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--algo", default="qrdm2", choices=sorted(ALGORITHMS))
    p.add_argument("--tau", type=float, default=0.15)
    p.add_argument("--delta", type=float, default=0.9)
    p.add_argument("--kdm", type=int, default=64)
    p.add_argument("--stop", default="n", choices=["n", "sqrt-n", "none"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)


def _params(args) -> DMParams:
    return DMParams(tau=args.tau, delta=args.delta, k_dm=args.kdm)


def _fail(code: int, msg: str) -> SystemExit:
    print(f"error: {msg}", file=sys.stderr)
    return SystemExit(code)


def _load_inputs(args) -> list[tuple[str, object]]:
    mats = []
    for path in args.inputs or []:
        mats.append((Path(path).stem, read_matrix_market(path)))
    if getattr(args, "fixtures", None):
        root = Path(args.fixtures)
        for path in sorted(root.glob("*.mtx")):
            mats.append((path.stem, read_matrix_market(path)))
    if not mats:
        raise _fail(1, "no input matrices given (use --inputs or --fixtures)")
    return mats


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_gen(args) -> int:
    outdir = Path(args.out or "fixtures")
    outdir.mkdir(parents=True, exist_ok=True)
    if args.m is not None:
        if args.n is None or args.rank is None:
            raise _fail(1, "--m requires --n and --rank")
        A = random_rank_deficient(args.m, args.n, args.rank, args.gap, args.seed)
        name = f"rankdef_m{args.m}_n{args.n}_r{args.rank}.mtx"
        write_matrix_market(outdir / name, A)
        print(f"wrote {outdir / name}")
        return 0
    suite = fixture_suite()
    for name, A in suite:
        write_matrix_market(outdir / f"{name}.mtx", A)
    print(f"wrote {len(suite)} matrices to {outdir}")
    return 0


def _cmd_factor(args) -> int:
    A = read_matrix_market(args.input)
    t0 = time.perf_counter()
    result = run_algorithm(args.algo, A, _params(args), StopCriterion.from_name(args.stop))
    dt = time.perf_counter() - t0
    recs = result.step_log
    lines = [
        f"matrix: {args.input} ({result.m} x {result.n})",
        f"algo: {args.algo}  stop: {args.stop}  tau={args.tau} delta={args.delta} kdm={args.kdm}",
        f"rank: {result.rank}  columns factored: {result.n_factored}  time_s: {dt:.6f}",
        f"outer steps: {len(recs)}  breaks: {sum(r.broke_early for r in recs)}"
        f"  fallbacks: {sum(r.fell_back_to_scalar for r in recs)}",
        "leading pivots (1-based): "
        + " ".join(str(int(i) + 1) for i in result.perm.forward[: min(10, result.n)]),
    ]
    text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def _cmd_compare(args) -> int:
    mats = _load_inputs(args)
    algos = args.algos.split(",") if args.algos else ["qrp", "qrdm", "qrdm2"]
    for a in algos:
        if a not in ALGORITHMS:
            raise _fail(1, f"unknown algorithm {a!r}")
    rows = compare_run(
        mats,
        algos,
        params=_params(args),
        stop=StopCriterion.from_name(args.stop),
        rank_eps1=args.rank_eps1,
    )
    _emit(rows_to_csv(rows), args.out)
    if any(r.flags == "oracle_failed" for r in rows):
        return 2
    return 0


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise _fail(1, f"bad grid {text!r}") from None


def _cmd_sweep(args) -> int:
    mats = _load_inputs(args)
    taus = _parse_grid(args.tau_grid)
    deltas = _parse_grid(args.delta_grid)
    if any(not 0.0 <= t <= 1.0 for t in taus + deltas):
        raise _fail(1, "grid values must lie in [0, 1]")
    rows = grid_sweep(mats, taus, deltas, k_dm=args.kdm)
    _emit(sweep_to_csv(rows), args.out)
    return 0


def main(argv=None) -> int:
    parser = _Parser(prog="dmqr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate MatrixMarket fixtures")
    p_gen.add_argument("--m", type=int, default=None)
    p_gen.add_argument("--n", type=int, default=None)
    p_gen.add_argument("--rank", type=int, default=None)
    p_gen.add_argument("--gap", type=float, default=1e9)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default=None)

    p_factor = sub.add_parser("factor", help="factor one matrix")
    p_factor.add_argument("--input", required=True)
    _add_common(p_factor)

    p_cmp = sub.add_parser("compare", help="comparison CSV over a matrix set")
    p_cmp.add_argument("--inputs", nargs="*", default=None)
    p_cmp.add_argument("--fixtures", default=None)
    p_cmp.add_argument("--algos", default=None, help="comma list, default all three")
    p_cmp.add_argument("--rank-eps1", type=float, default=None,
                       help="override the oracle rank threshold factor (default eps*n)")
    _add_common(p_cmp)

    p_sweep = sub.add_parser("sweep", help="(tau, delta) grid scan CSV")
    p_sweep.add_argument("--inputs", nargs="*", default=None)
    p_sweep.add_argument("--fixtures", default=None)
    p_sweep.add_argument("--tau-grid", default="0.05,0.15,0.5,0.9")
    p_sweep.add_argument("--delta-grid", default="0.05,0.5,0.9,0.95")
    p_sweep.add_argument("--kdm", type=int, default=64)
    p_sweep.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "factor":
            return _cmd_factor(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
    except MatrixMarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
