from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar
from contextlib import contextmanager
from pathlib import Path
import logging
import statistics
import sys
import time
import typer

from .config import RunConfig, build_run_config, load_bench_case, seed_from_env
from .emit import emit_datalog, emit_ddl, emit_sql, schema_for, schema_for_omq
from .engine import Budget, BudgetExhausted, RewriteOutcome, Rewriting, rewrite
from .errors import OmqError
from .generate import write_corpus
from .model import FULL, Omq, Signature, UnionQuery
from .oracle import Verdict, check_rewriting
from .parser import (
    parse_abox,
    parse_cq,
    parse_signature,
    parse_tbox,
    parse_ucq,
    serialize_abox,
    serialize_cq,
    serialize_ucq,
)
from .reasoner import certain_answer, classify_names
from .structure import classify

app = typer.Typer(help="Rewrite ontology-mediated queries with EL TBoxes into UCQs")

logger = logging.getLogger(__name__)

EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_COUNTEREXAMPLE = 3

_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

T = TypeVar("T")


def _configure_logging(verbose: int) -> None:
    level = _LEVELS[min(verbose, len(_LEVELS) - 1)]
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


@contextmanager
def _input_errors() -> Iterator[None]:
    """Report library and file errors on stderr and exit with the input-error code."""
    try:
        yield
    except (OmqError, OSError) as exc:
        typer.echo(f"✖ {exc}", err=True)
        raise typer.Exit(code=EXIT_INPUT)


def _read(path: Path, parse: Callable[[str, str], T]) -> T:
    return parse(path.read_text(), str(path))


def _require(path: Optional[Path], flag: str) -> Path:
    if path is None:
        typer.echo(f"✖ {flag} is required (flag or run profile)", err=True)
        raise typer.Exit(code=EXIT_INPUT)
    return path


def _load_sigma(path: Optional[Path]) -> Signature:
    return FULL if path is None else _read(path, parse_signature)


def _load_omq(cfg: RunConfig) -> Omq:
    tbox = _read(_require(cfg.tbox, "--tbox"), parse_tbox)
    query = _read(_require(cfg.query, "--query"), parse_cq)
    return Omq(tbox, _load_sigma(cfg.sigma), query)


def render(u: UnionQuery, emit: str, omq: Optional[Omq] = None) -> str:
    """The rewriting as native UCQ text, non-recursive Datalog, or SQL (DDL then query).

    With *omq* the relational schema covers its whole signature, so answer
    variables bound by no atom range over every individual of the data.
    """
    schema = schema_for(u) if omq is None else schema_for_omq(omq, u)
    if emit == "datalog":
        return emit_datalog(u, schema=schema)
    if emit == "sql":
        return emit_ddl(schema) + emit_sql(u, schema) + ";\n"
    if not u.disjuncts:
        return "# empty rewriting: no answers\n"
    return serialize_ucq(u)


def _echo_stats(outcome: RewriteOutcome) -> None:
    for s in outcome.stats:
        typer.echo(
            f"  {s.label}: {s.members} members, {s.sigma_hits} in Σ, "
            f"depth {s.max_depth}, {s.pending} pending, {s.seconds:.3f}s",
            err=True,
        )


def _echo_exhausted(outcome: BudgetExhausted) -> None:
    typer.echo(f"✖ budget exhausted ({outcome.reason})", err=True)
    typer.echo(f"  frontier size: {outcome.frontier_size}", err=True)
    typer.echo(f"  max depth reached: {outcome.max_depth_reached}", err=True)
    typer.echo(f"  Σ-queries found: {len(outcome.sigma_hits)}", err=True)
    if outcome.largest is not None:
        typer.echo(f"  largest member: {serialize_cq(outcome.largest)}", err=True)
    if outcome.chain is not None:
        c = outcome.chain
        typer.echo(
            f"  {c.role}-chain of length {c.length}, likely not UCQ-rewritable: "
            f"{serialize_cq(c.query)}",
            err=True,
        )


def _echo_counterexample(verdict: Verdict) -> None:
    assert verdict.counterexample is not None
    abox, answer = verdict.counterexample
    typer.echo(f"✖ counterexample after {verdict.checked} ABoxes, answer ({', '.join(answer)}):", err=True)
    for line in serialize_abox(abox).splitlines():
        typer.echo(f"    {line}", err=True)


def _verify(omq: Omq, u: UnionQuery, max_individuals: int, max_assertions: Optional[int]) -> None:
    verdict = check_rewriting(omq, u, max_individuals, max_assertions)
    if not verdict.ok:
        _echo_counterexample(verdict)
        raise typer.Exit(code=EXIT_COUNTEREXAMPLE)
    note = " (Σ finitized to the OMQ's symbols)" if verdict.finitized else ""
    typer.echo(f"✔ verified on {verdict.checked} ABoxes{note}", err=True)


def _write_or_echo(text: str, out: Optional[Path]) -> None:
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        typer.echo(f"Wrote rewriting to {out}")
    else:
        typer.echo(text, nl=False)


@app.command("rewrite")
def cmd_rewrite(
    tbox: Optional[Path] = typer.Option(None, "--tbox", "-t", help="TBox file"),
    query: Optional[Path] = typer.Option(None, "--query", "-q", help="Query file"),
    sigma: Optional[Path] = typer.Option(
        None, "--sigma", "-s", help="ABox signature file (default: every symbol)"
    ),
    strategy: Optional[str] = typer.Option(
        None, "--strategy", help="Pipeline: 'auto', 'direct' or 'reduction'"
    ),
    budget_queries: Optional[int] = typer.Option(
        None, "--budget-queries", help="Maximum number of frontier members"
    ),
    budget_depth: Optional[int] = typer.Option(
        None, "--budget-depth", help="Maximum derivation depth"
    ),
    budget_seconds: Optional[float] = typer.Option(
        None, "--budget-seconds", help="Wall-clock limit in seconds"
    ),
    emit: Optional[str] = typer.Option(
        None, "--emit", "-e", help="Output format: 'ucq', 'datalog' or 'sql'"
    ),
    verify: Optional[bool] = typer.Option(
        None, "--verify/--no-verify", help="Check the rewriting against the certain answers"
    ),
    verify_max_individuals: Optional[int] = typer.Option(
        None, "--verify-max-individuals", help="Largest ABox size enumerated by --verify"
    ),
    verify_max_assertions: Optional[int] = typer.Option(
        None, "--verify-max-assertions", help="Bound the assertions per enumerated ABox"
    ),
    tmin: Optional[str] = typer.Option(
        None, "--tmin", help="Goal test of the rCQ pipeline: 'materialized' or 'direct'"
    ),
    prune_subsumed: Optional[bool] = typer.Option(
        None, "--prune-subsumed/--no-prune-subsumed",
        help="Drop disjuncts contained in other disjuncts",
    ),
    probe_depth: Optional[int] = typer.Option(
        None, "--probe-depth", help="Depth cap of the per-name probe legs of 'auto'"
    ),
    stats: bool = typer.Option(False, "--stats", help="Print frontier statistics to stderr"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the rewriting to path"),
    config: Optional[List[str]] = typer.Option(
        None, "--config", "-c", help="Run profile (YAML/JSON); repeatable, later ones win"
    ),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="More logging (-vv for debug)"),
):
    """Compute a UCQ rewriting of the OMQ (TBox, Σ, query).

    Exit codes: 0 rewriting found, 1 input or configuration error, 2 budget
    exhausted, 3 verification found a counterexample.
    """
    _configure_logging(verbose)
    overrides = {
        "tbox": tbox,
        "query": query,
        "sigma": sigma,
        "strategy": strategy,
        "budget_queries": budget_queries,
        "budget_depth": budget_depth,
        "budget_seconds": budget_seconds,
        "emit": emit,
        "verify": verify,
        "verify_max_individuals": verify_max_individuals,
        "verify_max_assertions": verify_max_assertions,
        "tmin": tmin,
        "prune_subsumed": prune_subsumed,
        "probe_depth": probe_depth,
        "out": out,
    }
    with _input_errors():
        cfg = build_run_config(config or (), overrides)
        if cfg.emit not in ("ucq", "datalog", "sql"):
            raise OmqError(f"unknown output format {cfg.emit!r}")
        omq = _load_omq(cfg)
        outcome = rewrite(
            omq,
            cfg.budget(),
            cfg.strategy,
            tmin=cfg.tmin,
            prune=cfg.prune_subsumed,
            probe_depth=cfg.probe_depth,
        )

    if stats:
        _echo_stats(outcome)
    if isinstance(outcome, BudgetExhausted):
        _echo_exhausted(outcome)
        raise typer.Exit(code=EXIT_BUDGET)

    with _input_errors():
        _write_or_echo(render(outcome.ucq, cfg.emit, omq), cfg.out)
    if cfg.verify:
        _verify(omq, outcome.ucq, cfg.verify_max_individuals, cfg.verify_max_assertions)


@app.command("classify")
def cmd_classify(
    query: Optional[Path] = typer.Option(None, "--query", "-q", help="Query file to classify"),
    tbox: Optional[Path] = typer.Option(
        None, "--tbox", "-t", help="TBox whose concept hierarchy is printed"
    ),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="More logging"),
):
    """Print the query class (AQ, TreeCQ, TqCQ, RCQ, Unsupported) and/or the TBox hierarchy."""
    _configure_logging(verbose)
    if query is None and tbox is None:
        typer.echo("✖ give --query and/or --tbox", err=True)
        raise typer.Exit(code=EXIT_INPUT)
    with _input_errors():
        if query is not None:
            typer.echo(str(classify(_read(query, parse_cq))))
        if tbox is not None:
            for name, entailed in classify_names(_read(tbox, parse_tbox)).items():
                supers = ", ".join(sorted(entailed - {name}))
                typer.echo(f"{name} ⊑ {supers}" if supers else name)


@app.command("check")
def cmd_check(
    tbox: Optional[Path] = typer.Option(None, "--tbox", "-t", help="TBox file"),
    query: Optional[Path] = typer.Option(None, "--query", "-q", help="Query file"),
    abox: Optional[Path] = typer.Option(None, "--abox", "-a", help="ABox file"),
    answer: List[str] = typer.Argument(..., help="Candidate answer individuals, in head order"),
    config: Optional[List[str]] = typer.Option(None, "--config", "-c", help="Run profile"),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="More logging"),
):
    """Decide whether the answer tuple is a certain answer over the ABox."""
    _configure_logging(verbose)
    with _input_errors():
        cfg = build_run_config(config or (), {"tbox": tbox, "query": query, "abox": abox})
        t = _read(_require(cfg.tbox, "--tbox"), parse_tbox)
        q = _read(_require(cfg.query, "--query"), parse_cq)
        a = _read(_require(cfg.abox, "--abox"), parse_abox)
        entailed = certain_answer(a, t, q, answer)
    typer.echo("true" if entailed else "false")


@app.command("verify")
def cmd_verify(
    ucq: Path = typer.Option(..., "--ucq", "-u", help="Candidate rewriting (native UCQ file)"),
    tbox: Optional[Path] = typer.Option(None, "--tbox", "-t", help="TBox file"),
    query: Optional[Path] = typer.Option(None, "--query", "-q", help="Query file"),
    sigma: Optional[Path] = typer.Option(None, "--sigma", "-s", help="ABox signature file"),
    max_individuals: Optional[int] = typer.Option(
        None, "--max-individuals", help="Largest ABox size enumerated"
    ),
    max_assertions: Optional[int] = typer.Option(
        None, "--max-assertions", help="Bound the assertions per enumerated ABox"
    ),
    config: Optional[List[str]] = typer.Option(None, "--config", "-c", help="Run profile"),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="More logging"),
):
    """Check a user-supplied UCQ against the OMQ on every small Σ-ABox."""
    _configure_logging(verbose)
    overrides = {
        "tbox": tbox,
        "query": query,
        "sigma": sigma,
        "verify_max_individuals": max_individuals,
        "verify_max_assertions": max_assertions,
    }
    with _input_errors():
        cfg = build_run_config(config or (), overrides)
        omq = _load_omq(cfg)
        u = _read(ucq, parse_ucq)
        if not u.disjuncts:
            u = UnionQuery(omq.query.answer_vars, ())
    _verify(omq, u, cfg.verify_max_individuals, cfg.verify_max_assertions)


def _bench_case(path: Path, budget: Budget) -> Tuple[str, str, float, Optional[int]]:
    case = load_bench_case(str(path))
    omq = Omq(
        _read(case.tbox, parse_tbox),
        _load_sigma(case.sigma),
        _read(case.query, parse_cq),
    )
    start = time.monotonic()
    outcome = rewrite(omq, budget, case.strategy)
    seconds = time.monotonic() - start
    size = len(outcome.ucq) if isinstance(outcome, Rewriting) else None
    return case.name, case.ontology, seconds, size


def _bench_table(rows: Sequence[Tuple[str, str, float, Optional[int]]]) -> List[str]:
    groups: Dict[str, List[Tuple[float, Optional[int]]]] = {}
    for _, ontology, seconds, size in rows:
        groups.setdefault(ontology, []).append((seconds, size))
    header = (
        f"{'ontology':<16}{'cases':>6}{'aborted':>8}"
        f"{'min s':>9}{'avg s':>9}{'max s':>9}"
        f"{'min CQ':>8}{'avg CQ':>8}{'max CQ':>8}"
    )
    lines = [header]
    for ontology in sorted(groups):
        entries = groups[ontology]
        times = [s for s, _ in entries]
        sizes = [n for _, n in entries if n is not None]
        aborted = len(entries) - len(sizes)
        if sizes:
            cq = f"{min(sizes):>8}{statistics.mean(sizes):>8.1f}{max(sizes):>8}"
        else:
            cq = f"{'-':>8}{'-':>8}{'-':>8}"
        lines.append(
            f"{ontology:<16}{len(entries):>6}{aborted:>8}"
            f"{min(times):>9.3f}{statistics.mean(times):>9.3f}{max(times):>9.3f}" + cq
        )
    return lines


@app.command("bench")
def cmd_bench(
    directory: Path = typer.Argument(..., help="Directory of *.yaml bench cases"),
    generate: Optional[int] = typer.Option(
        None, "--generate", help="Write N seeded random cases into the directory and stop"
    ),
    seed: Optional[int] = typer.Option(
        None, "--seed", help="Corpus seed (default: $OMQ_REWRITER_SEED or a fixed value)"
    ),
    budget_queries: int = typer.Option(10000, "--budget-queries", help="Frontier limit per case"),
    budget_depth: int = typer.Option(30, "--budget-depth", help="Depth limit per case"),
    budget_seconds: float = typer.Option(60.0, "--budget-seconds", help="Time limit per case"),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="More logging"),
):
    """Rewrite every case of a directory and print min/avg/max timings per ontology."""
    _configure_logging(verbose)
    with _input_errors():
        if generate is not None:
            if generate < 1:
                raise OmqError("--generate needs a positive count")
            written = write_corpus(directory, generate, seed if seed is not None else seed_from_env())
            typer.echo(f"Wrote {len(written)} cases to {directory}")
            return
        budget = Budget(budget_queries, budget_depth, budget_seconds)
        cases = sorted(directory.glob("*.yaml"))
        if not cases:
            raise OmqError(f"no *.yaml bench cases in {directory}")
        rows = []
        for path in cases:
            row = _bench_case(path, budget)
            logger.info("case %s: %.3fs, %s", row[0], row[2], "aborted" if row[3] is None else f"{row[3]} CQs")
            rows.append(row)
    for line in _bench_table(rows):
        typer.echo(line)


def main():
    app()
