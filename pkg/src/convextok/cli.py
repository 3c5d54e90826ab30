"""Command-line entry point: ``convextok <subcommand> ...``.

Exit codes: 0 success, 1 data error (JSON message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

from . import __version__
from .bpe import train_bpe
from .corpus import DEFAULT_PRESET, build_pretoken_table, load_corpus, resolve_pattern
from .errors import ConvexTokError
from .lp import SolverOptions, assemble_lp, brute_force_ip, solve_pdhg, write_lp
from .metrics import DEFAULT_ALPHAS, certify, certify_values, intrinsic_metrics, jaccard_stability
from .pipeline import train_convextok
from .rounding import INT_THRESHOLD, KINDS, RoundingScheme
from .tokeniser import DEFAULT_SPECIALS, Tokeniser
from .tokgraph import DEFAULT_MAX_TOKEN_LEN, EdgePolicy, build_graph, dump_graph

logger = logging.getLogger("convextok")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _show(token: bytes) -> str:
    return token.decode("utf-8", errors="backslashreplace")


def _csv_list(text: str) -> list[str]:
    return [part for part in text.split(",") if part]


def _alphas(text: str) -> list[float]:
    try:
        alphas = [float(a) for a in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not alphas or any(a <= 0 for a in alphas):
        raise argparse.ArgumentTypeError("alpha values must be positive")
    return alphas


class Run:
    """Collects inputs/outputs of one invocation and writes its manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.extra: dict = {}
        self.timings: dict[str, float] = {}

    def table(self, corpus: str, tok: Tokeniser | None = None):
        if tok is not None:
            preset, pattern = tok.pretokenizer_preset, tok.pattern
        else:
            preset, pattern = resolve_pattern(self.args.pretokenizer)
        self.inputs.append(Path(corpus))
        t = time.perf_counter()
        docs = load_corpus(corpus, self.args.format, strict=not self.args.lenient)
        table = build_pretoken_table(docs, pattern, threads=self.args.threads)
        self.timings["pretokenise"] = time.perf_counter() - t
        logger.info("%d distinct pretokens, %d bytes", len(table), table.total_bytes)
        return table, preset, pattern

    def tokeniser(self, path: str) -> Tokeniser:
        self.inputs.append(Path(path))
        return Tokeniser.load(path)

    def write_text(self, path: str | Path, text: str) -> None:
        path = Path(path)
        path.write_text(text, encoding="utf-8")
        self.outputs.append(path)

    def manifest(self) -> None:
        target = self.args.manifest
        if target is None and self.outputs:
            first = self.outputs[0]
            target = first.with_name(first.name + ".manifest.json")
        if target is None:
            return
        target = Path(target)
        base = target.resolve().parent
        flags = {k: v for k, v in sorted(vars(self.args).items())
                 if k not in ("func", "manifest", "verbose")}

        def rel(p: Path) -> str:
            try:
                return os.path.relpath(p.resolve(), base)
            except ValueError:
                return str(p)

        doc = {
            "tool": "convextok",
            "version": __version__,
            "command": self.args.command,
            "flags": flags,
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.inputs],
            "outputs": [{"path": rel(p), "sha256": _sha256(p)} for p in self.outputs],
            **self.extra,
        }
        target.write_text(json.dumps(doc, sort_keys=True, indent=1, default=str) + "\n")
        for stage, secs in self.timings.items():
            logger.info("timing %s: %.3fs", stage, secs)


def _emit(args: argparse.Namespace, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True, default=str))
    else:
        print(text)


def _aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(str(c).rjust(w) for c, w in zip(row, widths)) for row in [header, *rows]]
    return "\n".join(lines)


def _solver_options(args: argparse.Namespace) -> SolverOptions:
    return SolverOptions(
        gap_mode=args.gap_mode,
        gap_tol=args.gap_tol,
        residual_tol=args.residual_tol,
        max_iters=args.max_iters,
        precondition=not args.no_precond,
        seed=args.seed,
    )


def _policy(args: argparse.Namespace) -> EdgePolicy:
    max_len = args.max_token_len if args.max_token_len > 0 else None
    return EdgePolicy(max_token_len=max_len, min_colour_count=args.min_colour_count)


def _policy_from(tok: Tokeniser) -> EdgePolicy:
    d = tok.provenance.get("edge_policy", {})
    return EdgePolicy(
        max_token_len=d.get("max_token_len", DEFAULT_MAX_TOKEN_LEN),
        min_colour_count=d.get("min_colour_count", 0),
        name=d.get("name", "bytes-free"),
    )


# -- subcommands --------------------------------------------------------------


def cmd_train_convextok(args: argparse.Namespace, run: Run) -> int:
    table, preset, pattern = run.table(args.corpus)
    policy = _policy(args)
    if args.dump_graph:
        buf = io.StringIO()
        dump_graph(build_graph(table, policy), buf)
        run.write_text(args.dump_graph, buf.getvalue())
    t = time.perf_counter()
    result = train_convextok(
        table,
        args.k,
        RoundingScheme(args.rounding, args.int_threshold),
        policy,
        _solver_options(args),
        _csv_list(args.specials),
        pretokenizer_preset=preset,
        pattern=pattern,
    )
    run.timings["train"] = time.perf_counter() - t
    run.write_text(args.output, result.tokeniser.dumps())
    if args.dump_lp:
        buf = io.StringIO()
        write_lp(result.problem, buf)
        run.write_text(args.dump_lp, buf.getvalue())
    sol = result.solution
    run.extra = {
        "graph_hash": result.graph.graph_hash(),
        "solver": sol.summary(),
        "objective": result.objective,
    }
    payload = {
        "objective": result.objective,
        "lp_value": sol.objective,
        "total_bytes": table.total_bytes,
        "learned": [_show(t) for t in result.tokeniser.learned],
        "solver": sol.summary(),
    }
    _emit(args, payload, (
        f"lp_value={sol.objective:.6f} ({sol.status}, {sol.iterations} iters, rel_gap={sol.rel_gap:.2e})\n"
        f"objective={result.objective} total_bytes={table.total_bytes} "
        f"learned={len(result.tokeniser.learned)}/{args.k} -> {args.output}"
    ))
    return 0


def cmd_train_bpe(args: argparse.Namespace, run: Run) -> int:
    table, preset, pattern = run.table(args.corpus)
    tok = train_bpe(table, args.k, _csv_list(args.specials), pretokenizer_preset=preset, pattern=pattern)
    run.write_text(args.output, tok.dumps())
    objective = tok.provenance["train_objective"]
    run.extra = {"objective": objective}
    _emit(args, {"objective": objective, "total_bytes": table.total_bytes,
                 "learned": [_show(t) for t in tok.learned]},
          f"objective={objective} total_bytes={table.total_bytes} "
          f"learned={len(tok.learned)}/{args.k} -> {args.output}")
    return 0


def _read_input(path: str | None) -> bytes:
    if path in (None, "-"):
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write_output(run: Run, path: str | None, data: bytes) -> None:
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(path).write_bytes(data)
        run.outputs.append(Path(path))


def cmd_encode(args: argparse.Namespace, run: Run) -> int:
    tok = run.tokeniser(args.tokeniser)
    if args.input not in (None, "-"):
        run.inputs.append(Path(args.input))
    ids = [tok.special_id(n) for n in args.prepend_special]
    ids += tok.encode(_read_input(args.input))
    ids += [tok.special_id(n) for n in args.append_special]
    _write_output(run, args.output, (" ".join(map(str, ids)) + "\n").encode("ascii"))
    return 0


def cmd_decode(args: argparse.Namespace, run: Run) -> int:
    tok = run.tokeniser(args.tokeniser)
    if args.input not in (None, "-"):
        run.inputs.append(Path(args.input))
    raw = _read_input(args.input).split()
    try:
        ids = [int(x) for x in raw]
    except ValueError as exc:
        raise ConvexTokError(f"token ids must be integers: {exc}") from exc
    _write_output(run, args.output, tok.decode(ids))
    return 0


def cmd_certify(args: argparse.Namespace, run: Run) -> int:
    if args.tokenised is not None:
        if args.lp_value is None:
            raise ConvexTokError("--tokenised requires --lp-value")
        cert = certify_values(args.tokenised, args.lp_value, args.gap_tol, args.gap_mode)
        label = "-"
    else:
        if not (args.tokeniser and args.corpus):
            raise ConvexTokError("certify needs TOKENISER CORPUS, or --tokenised with --lp-value")
        tok = run.tokeniser(args.tokeniser)
        table, _, _ = run.table(args.corpus, tok)
        graph = build_graph(table, _policy_from(tok))
        solver = tok.provenance.get("solver", {})
        gap_tol = solver.get("gap_tol", args.gap_tol)
        gap_mode = solver.get("gap_mode", args.gap_mode)
        if args.lp_value is not None:
            lp_value = args.lp_value
        elif args.resolve or "lp_value" not in tok.provenance:
            sol = solve_pdhg(assemble_lp(graph, tok.budget), _solver_options(args))
            lp_value, gap_tol, gap_mode = sol.objective, args.gap_tol, args.gap_mode
        else:
            lp_value = tok.provenance["lp_value"]
        cert = certify(tok, table, lp_value, graph.graph_hash(), gap_tol, gap_mode)
        label = tok.method if tok.rounding is None else f"{tok.method}:{tok.rounding}"
    flag = "" if cert.within_tolerance else "  (below LP bound beyond tolerance)"
    row = [label, f"{cert.lp_value:.6f}", str(cert.tokenised_value), f"{cert.gap_ratio:.3f}%"]
    _emit(args, {"tokeniser": label, **cert.to_dict()},
          _aligned(["Tokeniser", "LP Value", "Tokenised Value", "Integrality Gap Ratio"], [row]) + flag)
    return 0


def cmd_metrics(args: argparse.Namespace, run: Run) -> int:
    tok = run.tokeniser(args.tokeniser)
    run.inputs.append(Path(args.corpus))
    docs = load_corpus(args.corpus, args.format, strict=not args.lenient)
    report = intrinsic_metrics(tok, docs, args.alpha)
    cols = report.row(args.alpha)
    label = tok.method if tok.rounding is None else f"{tok.method}:{tok.rounding}"
    header = ["Tokeniser"] + [c for c, _ in cols]
    values = [label] + [v for _, v in cols]
    if args.out:
        run.write_text(args.out, json.dumps(report.to_dict(), sort_keys=True, indent=1) + "\n")
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerow(values)
        run.write_text(args.csv, buf.getvalue())
    _emit(args, {"tokeniser": label, **report.to_dict()}, _aligned(header, [values]))
    return 0


def cmd_stability(args: argparse.Namespace, run: Run) -> int:
    toks = [run.tokeniser(p) for p in args.tokenisers]
    matrix, mean = jaccard_stability([t.learned for t in toks])
    names = [Path(p).name for p in args.tokenisers]
    rows = [[n] + [f"{v:.4f}" for v in row] for n, row in zip(names, matrix.tolist())]
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([""] + names)
        writer.writerows(rows)
        run.write_text(args.csv, buf.getvalue())
    _emit(args, {"tokenisers": names, "matrix": matrix.tolist(), "mean": mean},
          _aligned([""] + names, rows) + f"\nmean pairwise Jaccard: {mean:.4f}")
    return 0


def cmd_oracle(args: argparse.Namespace, run: Run) -> int:
    table, _, _ = run.table(args.corpus)
    graph = build_graph(table, _policy(args))
    value, colours = brute_force_ip(graph, args.k, args.limit)
    shown = [_show(t) for t in colours]
    _emit(args, {"optimum": value, "colours": shown, "total_bytes": table.total_bytes,
                 "n_colours": len(graph.colours)},
          f"optimum {value}\ncolours {' '.join(shown)}\n"
          f"(total_bytes={table.total_bytes}, candidates={len(graph.colours)})")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convextok", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--manifest", default=None, help="manifest path (default: next to first output)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--seed", type=int, default=None, help="reserved; the pipeline is deterministic")
    common.add_argument("-v", "--verbose", action="count", default=0)

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("--format", choices=["plain", "jsonl"], default="plain")
    corpus.add_argument("--pretokenizer", default=DEFAULT_PRESET, help="preset name or regex file")
    corpus.add_argument("--lenient", action="store_true", help="skip malformed JSONL lines")

    graph = argparse.ArgumentParser(add_help=False)
    graph.add_argument("--max-token-len", type=int, default=DEFAULT_MAX_TOKEN_LEN,
                       help="longest candidate token in bytes; 0 = unbounded")
    graph.add_argument("--min-colour-count", type=int, default=0)

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--gap-tol", type=float, default=1e-6)
    solver.add_argument("--gap-mode", choices=["rel", "abs"], default="rel")
    solver.add_argument("--residual-tol", type=float, default=1e-8)
    solver.add_argument("--max-iters", type=int, default=200_000)
    solver.add_argument("--no-precond", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-convextok", parents=[common, corpus, graph, solver],
                       help="train a tokeniser from the LP relaxation")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k", type=int, required=True, help="number of learned tokens")
    p.add_argument("--rounding", choices=KINDS, default="det")
    p.add_argument("--int-threshold", type=float, default=INT_THRESHOLD)
    p.add_argument("--specials", default=",".join(DEFAULT_SPECIALS))
    p.add_argument("--dump-lp", default=None)
    p.add_argument("--dump-graph", default=None)
    p.set_defaults(func=cmd_train_convextok)

    p = sub.add_parser("train-bpe", parents=[common, corpus], help="train a BPE baseline")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--specials", default=",".join(DEFAULT_SPECIALS))
    p.set_defaults(func=cmd_train_bpe)

    for name, func in (("encode", cmd_encode), ("decode", cmd_decode)):
        p = sub.add_parser(name, parents=[common], help=f"{name} stdin/file to stdout/file")
        p.add_argument("tokeniser")
        p.add_argument("input", nargs="?", default=None)
        p.add_argument("-o", "--output", default=None)
        if name == "encode":
            p.add_argument("--prepend-special", action="append", default=[], metavar="NAME")
            p.add_argument("--append-special", action="append", default=[], metavar="NAME")
        p.set_defaults(func=func)

    p = sub.add_parser("certify", parents=[common, corpus, solver],
                       help="integrality gap ratio against the LP bound")
    p.add_argument("tokeniser", nargs="?")
    p.add_argument("corpus", nargs="?")
    p.add_argument("--lp-value", type=float, default=None)
    p.add_argument("--tokenised", type=int, default=None, help="arithmetic only, no tokeniser")
    p.add_argument("--resolve", action="store_true", help="solve the LP afresh")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("metrics", parents=[common, corpus], help="intrinsic metrics on a corpus")
    p.add_argument("tokeniser")
    p.add_argument("corpus")
    p.add_argument("--alpha", type=_alphas, default=list(DEFAULT_ALPHAS))
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("stability", parents=[common], help="pairwise Jaccard of learned vocabularies")
    p.add_argument("tokenisers", nargs="+")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("oracle", parents=[common, corpus, graph], help="exact optimum on tiny corpora")
    p.add_argument("corpus")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--limit", type=int, default=22)
    p.set_defaults(func=cmd_oracle)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "k", 0) is not None and getattr(args, "k", 0) < 0:
        parser.error("--k must be non-negative")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    session = Run(args)
    try:
        code = args.func(args, session)
        session.manifest()
        return code
    except (ConvexTokError, OSError, ValueError, KeyError) as exc:
        if isinstance(exc, ConvexTokError):
            err = exc.to_dict()
        else:
            err = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
