"""Command-line front end.

Subcommands: simulate (single trace), sweep (full experiment grid), analyze
(matrix workbench), chain-bound (sustainable chain length), export (snapshot
conversion). Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .dynamics import RewireModel
from .experiments import (
    ConfigError,
    ExperimentConfig,
    cell_rng,
    export_snapshot,
    import_snapshot,
    run_experiment,
    simulate_trace,
)
from .graph import DirectedNetwork, InvalidAdjacencyError, compute_sccs, enumerate_cycles
from .reputation import ChainBoundDomainError, SolverConfig, chain_length_bound, equilibrium


class ValidationFailure(Exception):
    """User-input problem: bad flags, bad files, bad values. Exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we want 1
        raise ValidationFailure(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="repnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate",
                         help="run one seeded simulation and emit its trace CSV")
    sim.add_argument("--n", type=int, required=True, help="number of users")
    sim.add_argument("--tau", type=float, required=True, help="participation cost")
    dens = sim.add_mutually_exclusive_group(required=True)
    dens.add_argument("--p", type=float, help="per-pair link probability")
    dens.add_argument("--m", type=float, help="average links per user, p = m/(n-1)")
    sim.add_argument("--t-max", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", help="trace CSV path (default: stdout)")

    swp = sub.add_parser("sweep",
                         help="run a (tau, run) experiment grid from a JSON config")
    swp.add_argument("--config", required=True, help="JSON experiment config")
    swp.add_argument("--out", required=True, help="output directory for CSV artifacts")
    swp.add_argument("--seed", type=int, help="override the config seed")
    swp.add_argument("--t-max", type=int, help="override t_max")
    swp.add_argument("--runs", type=int, help="override run count")
    swp.add_argument("--sample-every", type=int, help="override sampling stride")
    swp.add_argument("--workers", type=int, help="override worker process count")

    ana = sub.add_parser("analyze",
                         help="print lambda1, b, x, SCCs and cycles for a 0/1 matrix file")
    ana.add_argument("matrix", help="matrix file; row i lists a_ij over followers j")
    ana.add_argument("--json", action="store_true", help="machine-readable output")

    chb = sub.add_parser("chain-bound",
                         help="longest chain a core can sustain above cost tau")
    chb.add_argument("--b", type=float, required=True, help="reputation of the chain anchor")
    chb.add_argument("--tau", type=float, required=True)
    chb.add_argument("--lambda1", type=float, required=True)

    exp = sub.add_parser("export",
                         help="convert a matrix or JSON snapshot to JSON or DOT")
    exp.add_argument("input", help="matrix file or .json snapshot")
    exp.add_argument("--format", choices=("json", "dot"), default="dot")
    exp.add_argument("--out", help="output path (default: stdout)")
    return parser


def _read_matrix(path: str) -> DirectedNetwork:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationFailure(f"cannot read matrix file {path}: {exc}") from exc
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([tok for tok in line.replace(",", " ").split()])
    if not rows:
        raise ValidationFailure(f"matrix file {path} contains no rows")
    try:
        cells = [[int(tok) for tok in row] for row in rows]
    except ValueError as exc:
        raise ValidationFailure(f"matrix file {path}: non-integer entry ({exc})") from exc
    try:
        arr = np.array(cells, dtype=np.int64)
    except ValueError as exc:
        raise ValidationFailure(f"matrix file {path}: rows have unequal lengths") from exc
    try:
        return DirectedNetwork.from_adjacency(arr)
    except (InvalidAdjacencyError, ValueError) as exc:
        raise ValidationFailure(str(exc)) from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _cmd_simulate(args) -> int:
    if args.n < 2:
        raise ValidationFailure("--n must be at least 2")
    if args.t_max < 1:
        raise ValidationFailure("--t-max must be at least 1")
    try:
        model = RewireModel(args.p) if args.p is not None else RewireModel.from_links_per_user(
            args.m, args.n
        )
        rule_check = args.tau  # range-checked by ExitRule inside the loop
        if not (0 <= rule_check < 1):
            raise ValueError(f"tau must lie in [0, 1), got {rule_check}")
    except ValueError as exc:
        raise ValidationFailure(str(exc)) from exc
    from . import fastpath

    rng = cell_rng(args.seed, 0, 0)
    if fastpath.available():
        records, _, _ = fastpath.simulate_trace_fast(
            args.n, args.tau, model.p, SolverConfig(), args.t_max, rng
        )
    else:
        records, _, _ = simulate_trace(
            args.n, args.tau, model, SolverConfig(), args.t_max, rng
        )
    _emit(metrics.step_records_to_csv(records), args.out)
    return 0


def _cmd_sweep(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ValidationFailure(f"cannot read config {args.config}: {exc}") from exc
    try:
        cfg = ExperimentConfig.from_json(text)
        overrides = {
            "seed": args.seed,
            "t_max": args.t_max,
            "runs": args.runs,
            "sample_every": args.sample_every,
            "workers": args.workers,
        }
        applied = {k: v for k, v in overrides.items() if v is not None}
        if applied:
            doc = json.loads(cfg.to_json())
            doc.update(applied)
            cfg = ExperimentConfig.from_json(json.dumps(doc))
    except ConfigError as exc:
        raise ValidationFailure(str(exc)) from exc
    run_experiment(cfg, out_dir=args.out)
    return 0


def _cmd_analyze(args) -> int:
    net = _read_matrix(args.matrix)
    eq = equilibrium(net, SolverConfig())
    analysis = compute_sccs(net)
    cycles = enumerate_cycles(net)
    if args.json:
        doc = {
            "n": net.n,
            "lambda1": eq.lambda1,
            "b": [float(v) for v in eq.b],
            "x": [float(v) for v in eq.x],
            "converged": eq.converged,
            "iterations": eq.iterations,
            "sccs": [sorted(s) for s in analysis.sccs],
            "core": sorted(analysis.core),
            "core_alive": analysis.is_core_alive,
            "cycles": [list(c) for c in cycles.cycles],
        }
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
        return 0
    print(f"users: {net.n}   edges: {len(net.edges())}")
    print(f"lambda1: {eq.lambda1:.6f}   (converged: {eq.converged}, iterations: {eq.iterations})")
    print("b (max-normalized):  " + "  ".join(f"{v:.4f}" for v in eq.b))
    print("x (sum-normalized):  " + "  ".join(f"{v:.4f}" for v in eq.x))
    print("SCCs: " + "; ".join("{" + ", ".join(map(str, sorted(s))) + "}" for s in analysis.sccs))
    core = sorted(analysis.core)
    print(f"core: {{{', '.join(map(str, core))}}}   alive: {analysis.is_core_alive}")
    if cycles.truncated:
        print(f"cycles (first {len(cycles.cycles)}, truncated):")
    else:
        print(f"cycles ({len(cycles.cycles)}):")
    for cyc in cycles.cycles:
        print("  " + " -> ".join(map(str, cyc)) + f" -> {cyc[0]}")
    return 0


def _cmd_chain_bound(args) -> int:
    try:
        n = chain_length_bound(args.b, args.tau, args.lambda1)
    except ChainBoundDomainError as exc:
        raise ValidationFailure(str(exc)) from exc
    print(n)
    return 0


def _cmd_export(args) -> int:
    path = Path(args.input)
    if path.suffix == ".json":
        try:
            net = import_snapshot(path.read_bytes())
        except OSError as exc:
            raise ValidationFailure(f"cannot read snapshot {args.input}: {exc}") from exc
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ValidationFailure(f"bad snapshot {args.input}: {exc}") from exc
    else:
        net = _read_matrix(args.input)
    eq = equilibrium(net, SolverConfig())
    payload = export_snapshot(net, compute_sccs(net), eq, args.format)
    if args.out is None:
        sys.stdout.write(payload.decode())
    else:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_bytes(payload)
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
    "chain-bound": _cmd_chain_bound,
    "export": _cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help path
        code = exc.code or 0
        return int(code) if isinstance(code, int) else 1
    except Exception as exc:  # runtime failure: unwritable output, solver blowup, ...
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
