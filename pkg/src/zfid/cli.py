"""Command line interface: ``zfid {zf,reconstruct,simulate,roundtrip}``."""

import argparse
import json
import sys
import time

import numpy as np

from .chain import (
    CONTINUOUS,
    DISCRETE,
    estimate_moments,
    normalize_kind,
    power_moments,
    random_chain_with_graph,
    rate_moments,
    validate_rate,
    validate_stochastic,
)
from .exceptions import (
    DegenerateChainError,
    IdentificationError,
    InsufficientHorizonError,
    MatrixValidationError,
    NotCombinatoriallySymmetricError,
    NotZeroForcingError,
    format_vertex_set,
)
from .graph import (
    DEFAULT_SEARCH_BOUND,
    forcing_closure,
    graph_of_matrix,
    is_combinatorially_symmetric,
    is_connected,
    min_zero_forcing_set,
)
from .io import FileFormatError, load_graph, load_matrix, load_moments, save_moments, write_json
from .reconstruct import reconstruct, required_power_horizon

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NOT_FORCING = 3
EXIT_NOT_SYMMETRIC = 4
EXIT_HORIZON = 5
EXIT_NUMERICAL = 6
EXIT_PRECONDITION = 7

DEFAULT_TRIALS = 1000
ROUNDTRIP_NOTE = (
    "note: exact-moment round trips on a zero forcing set (floating point); "
    "this is not the exact computer-algebra check of two-node identifiability"
)


class _ParseFailure(Exception):
    pass


def exit_code_for(exc):
    if isinstance(exc, (_ParseFailure, FileFormatError)):
        return EXIT_PARSE
    if isinstance(exc, NotZeroForcingError):
        return EXIT_NOT_FORCING
    if isinstance(exc, NotCombinatoriallySymmetricError):
        return EXIT_NOT_SYMMETRIC
    if isinstance(exc, InsufficientHorizonError):
        return EXIT_HORIZON
    if isinstance(exc, (DegenerateChainError, MatrixValidationError)):
        return EXIT_NUMERICAL
    return EXIT_PRECONDITION


def parse_vertices(text):
    if text is None:
        return None
    try:
        return [int(x) for x in text.replace(" ", "").strip("{}").split(",") if x]
    except ValueError as exc:
        raise _ParseFailure(f"--observe: {exc}") from exc


def _load(fn, *args):
    # file problems are parse errors whatever their cause
    try:
        return fn(*args)
    except NotCombinatoriallySymmetricError:
        raise
    except (OSError, ValueError) as exc:
        raise _ParseFailure(str(exc)) from exc


def _fmt_forces(forces):
    return ", ".join(f"{k}→{l}" for k, l in forces)


def _resolve_seed(seed, out):
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2**32)
        print(f"seed: {seed} (generated)", file=out)
    return seed


def cmd_zf(args, out):
    G = _load(load_graph, args.graph)
    Z = parse_vertices(args.observe)
    if Z is None:
        best = min_zero_forcing_set(G, search_bound=args.search_bound)
        print(f"zero forcing number: {len(best)}", file=out)
        print(f"minimum forcing set: {format_vertex_set(best)}", file=out)
        return EXIT_OK
    try:
        seq = forcing_closure(G, Z)
    except ValueError as exc:
        raise _ParseFailure(str(exc)) from exc
    if seq.is_complete(G.order):
        print(f"forcing; order {_fmt_forces(seq.forces)}", file=out)
    else:
        print(f"not forcing; closure = {format_vertex_set(seq.closure)}", file=out)
        if seq.forces:
            print(f"forcing order: {_fmt_forces(seq.forces)}", file=out)
    return EXIT_OK


def cmd_reconstruct(args, out):
    G = _load(load_graph, args.graph)
    table = _load(load_moments, args.moments)
    Z = parse_vertices(args.observe) or list(table.known_states)
    kind = normalize_kind(args.kind) if args.kind else table.kind
    result = reconstruct(G, Z, table, kind, div_tol=args.tol)
    print(f"kind: {result.kind}", file=out)
    print(f"observed: {format_vertex_set(Z)}", file=out)
    print(f"forcing order: {_fmt_forces(result.forcing_sequence.forces) or '(none)'}", file=out)
    print(f"required horizon: {result.required_horizon} (table has {table.max_power})", file=out)
    print(f"residual max: {result.residual_max:.3g}  mean: {result.residual_mean:.3g}", file=out)
    for w in result.diagnostics.get("warnings", []):
        print(f"warning: {w}", file=out)
    print(np.array2string(result.matrix.entries, precision=6, suppress_small=True), file=out)
    if args.out:
        write_json(result.to_dict(), args.out)
    return EXIT_OK


def cmd_simulate(args, out):
    M = _load(load_matrix, args.matrix)
    Z = parse_vertices(args.observe)
    if not Z:
        raise _ParseFailure("--observe is required")
    kind = normalize_kind(args.kind)
    N = args.powers
    if N is None:
        if not is_combinatorially_symmetric(M):
            raise NotCombinatoriallySymmetricError(
                "matrix is not combinatorially symmetric; pass --powers explicitly"
            )
        N = required_power_horizon(graph_of_matrix(M), Z)
    if args.exact:
        table = rate_moments(M, Z, N) if kind == CONTINUOUS else power_moments(M, Z, N)
    else:
        if kind == CONTINUOUS:
            raise IdentificationError("sampling is only supported for discrete chains; use --exact")
        P = _load(validate_stochastic, M)
        seed = _resolve_seed(args.seed, out)
        table = estimate_moments(P, Z, N, args.windows, seed=seed, max_wait=args.max_wait)
        print(f"windows per state: {args.windows}", file=out)
        print(f"max stderr: {table.max_stderr():.3g}", file=out)
    print(f"powers: 1..{N} on {format_vertex_set(Z)}", file=out)
    if args.out:
        save_moments(table, args.out)
    return EXIT_OK


def run_roundtrip(G, Z, trials, seed, kind=DISCRETE, powers=None, min_weight=0.05,
                  accuracy=1e-8):
    """Random chains on ``G``, exact moments on ``Z``, reconstruction, error statistics."""
    seq = forcing_closure(G, Z)
    if not seq.is_complete(G.order):
        raise NotZeroForcingError(seq.closure)
    if not is_connected(G):
        raise IdentificationError("pattern graph is not connected")
    kind = normalize_kind(kind)
    required = required_power_horizon(G, Z)
    N = required if powers is None else powers
    errors = []
    failures = {}
    t0 = time.perf_counter()
    for child in np.random.SeedSequence(seed).spawn(trials):
        chain = random_chain_with_graph(G, kind, seed=child, min_weight=min_weight)
        moments = rate_moments if kind == CONTINUOUS else power_moments
        table = moments(chain, Z, N)
        try:
            result = reconstruct(G, Z, table, kind)
        except IdentificationError as exc:
            name = type(exc).__name__
            failures[name] = failures.get(name, 0) + 1
            continue
        err = float(np.max(np.abs(result.matrix.entries - chain.entries)))
        errors.append(err)
        if err > accuracy:
            failures["AccuracyExceeded"] = failures.get("AccuracyExceeded", 0) + 1
    return {
        "kind": kind,
        "order": G.order,
        "observed": sorted(Z),
        "powers": N,
        "required_horizon": required,
        "trials": trials,
        "seed": seed,
        "successes": trials - sum(failures.values()),
        "failures": failures,
        "max_error": max(errors) if errors else None,
        "mean_error": float(np.mean(errors)) if errors else None,
        "accuracy": accuracy,
        "seconds": time.perf_counter() - t0,
    }


def cmd_roundtrip(args, out):
    G = _load(load_graph, args.graph)
    Z = parse_vertices(args.observe)
    if Z is None:
        Z = sorted(min_zero_forcing_set(G))
    seed = _resolve_seed(args.seed, out)
    summary = run_roundtrip(G, Z, args.trials, seed, args.kind, args.powers,
                            args.min_weight, args.tol if args.tol is not None else 1e-8)
    print(f"kind: {summary['kind']}  observed: {format_vertex_set(Z)}  "
          f"powers: {summary['powers']} (required {summary['required_horizon']})", file=out)
    print(f"trials: {summary['trials']}  successes: {summary['successes']}  "
          f"failures: {sum(summary['failures'].values())} {summary['failures'] or ''}".rstrip(),
          file=out)
    if summary["max_error"] is not None:
        print(f"max error: {summary['max_error']:.3g}  mean error: {summary['mean_error']:.3g}",
              file=out)
    print(ROUNDTRIP_NOTE, file=out)
    if args.out:
        write_json(summary, args.out)
    return EXIT_OK if not summary["failures"] else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zfid",
        description="Identify combinatorially symmetric Markov chains from moments on a zero forcing set.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zf", help="zero forcing closure or zero forcing number of a graph")
    p.add_argument("--graph", required=True, help="graph JSON (or matrix file)")
    p.add_argument("--observe", help="comma separated initial blue set")
    p.add_argument("--search-bound", type=int, default=DEFAULT_SEARCH_BOUND)
    p.set_defaults(func=cmd_zf)

    p = sub.add_parser("reconstruct", help="recover the full matrix from a moment table")
    p.add_argument("--graph", required=True, help="graph JSON, or a matrix file carrying the pattern")
    p.add_argument("--moments", required=True)
    p.add_argument("--observe", help="observed states (default: the table's states)")
    p.add_argument("--kind", choices=["dtmc", "ctmc"])
    p.add_argument("--tol", type=float, help="division guard (default depends on the table)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("simulate", help="moment table of a chain on the observed states")
    p.add_argument("--matrix", required=True)
    p.add_argument("--observe", required=True)
    p.add_argument("--powers", type=int, help="max power (default: required horizon)")
    p.add_argument("--windows", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--kind", choices=["dtmc", "ctmc"], default="dtmc")
    p.add_argument("--exact", action="store_true", help="exact moments instead of sampling")
    p.add_argument("--max-wait", type=int, default=10_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("roundtrip", help="random-chain reconstruction experiment")
    p.add_argument("--graph", required=True)
    p.add_argument("--observe", help="observed states (default: a minimum forcing set)")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int)
    p.add_argument("--kind", choices=["dtmc", "ctmc"], default="dtmc")
    p.add_argument("--powers", type=int, help="override the power horizon")
    p.add_argument("--min-weight", type=float, default=0.05)
    p.add_argument("--tol", type=float, help="max entry error counted as success (default 1e-8)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_roundtrip)
    return parser


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        print("error: --trials must be >= 1", file=err)
        return EXIT_PARSE
    try:
        return args.func(args, out)
    except (_ParseFailure, FileFormatError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_PARSE
    except IdentificationError as exc:
        print(f"error: {exc}", file=err)
        return exit_code_for(exc)
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
