"""Command-line front end.

Exit codes: 0 success, 1 negative verdict, 2 input error, 3 resource budget
exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .auxiliary import FraudProof
from .axioms import DEFAULT_BUDGET, AxiomReport, check_axioms
from .config import fixtures_dir, list_fixtures, load_config, resolve_config_path
from .errors import ConfigError, StateSpaceTooLarge
from .scenarios import Transcript, check_fraud_proof, run_scenario

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _run_one(args: tuple[str, int | None]) -> Transcript:
    path, seed = args
    return run_scenario(load_config(resolve_config_path(path), seed=seed))


def _table(rows: list[tuple[str, object]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def render_transcript(t: Transcript) -> str:
    rows = [
        ("scenario", t.id),
        ("anchor", t.anchor),
        ("variant", t.config["variant"]),
        ("x", t.config["x"]),
        ("policies", f"alice={t.config['alice_policy']} bob={t.config['bob_policy']}"),
        ("ground truth", "delivered" if t.ground_truth else "not delivered"),
        ("outcome", t.outcome),
        ("escrow net alice", t.escrow_utility.u_alice),
        ("escrow net bob", t.escrow_utility.u_bob),
        ("auxiliary net alice", t.aux_utility.u_alice),
        ("auxiliary net bob", t.aux_utility.u_bob),
        ("total alice", t.utility.u_alice),
        ("total bob", t.utility.u_bob),
        ("extortion", str(t.extortion).lower()),
        ("fraud proofs", len(t.fraud_proofs)),
        ("conservation gap", t.audit["conservation_gap"]),
    ]
    if "m" in t.annotations:
        rows.append(("m", t.annotations["m"]))
    return _table(rows)


def render_axioms(r: AxiomReport) -> str:
    rows = [("variant", r.protocol.get("variant")), ("x", r.protocol.get("x"))]
    for name, v in r.verdicts.items():
        rows.append((name, f"{'pass' if v.passed else 'FAIL'}  {v.detail}"))
    rows.append(("m", r.m))
    rows.append(("nodes", r.nodes))
    out = _table(rows)
    for name in r.failed():
        w = r.verdicts[name].witness or []
        out += f"\n\nwitness for {name}:\n" + "\n".join(
            f"  round {mv.round}: {mv.role} {mv.action.label()}" for mv in w)
    return out


def cmd_run(ns) -> int:
    try:
        jobs = [(p, ns.seed) for p in ns.config]
        for p, _ in jobs:
            load_config(resolve_config_path(p), seed=ns.seed)  # fail fast on bad input
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    if ns.format == "json":
        payload = results[0].to_dict() if len(results) == 1 else [t.to_dict() for t in results]
        text = _dump(payload)
    else:
        text = "\n\n".join(render_transcript(t) for t in results)
    _emit(text, ns.out)
    return EXIT_OK


def cmd_check_axioms(ns) -> int:
    try:
        cfg = load_config(resolve_config_path(ns.config))
        report = check_axioms(cfg.protocol(), budget=ns.budget)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StateSpaceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    text = _dump(report.to_dict()) if ns.format == "json" else render_axioms(report)
    _emit(text, ns.out)
    return EXIT_OK if report.all_passed else EXIT_NEGATIVE


def cmd_prove_fraud(ns) -> int:
    try:
        proof = FraudProof.from_json(Path(ns.proof).read_text())
        transcript = Transcript.from_json(Path(ns.transcript).read_text())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        verdict = check_fraud_proof(transcript, proof)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if ns.format == "json":
        _emit(_dump(verdict), None)
    else:
        print(("valid: " if verdict["valid"] else "invalid: ") + verdict["reason"])
    return EXIT_OK if verdict["valid"] else EXIT_NEGATIVE


def cmd_list(ns) -> int:
    names = list_fixtures()
    if ns.format == "json":
        _emit(_dump({"fixtures_dir": str(fixtures_dir()), "scenarios": names}), None)
    else:
        for n in names:
            print(n)
    return EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="escrowlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more scenario configs")
    run.add_argument("config", nargs="+", help="config path or bundled scenario name")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--format", choices=("table", "json"), default="table")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for batches")
    run.add_argument("--out", help="write the report to a file")
    run.set_defaults(func=cmd_run)

    ax = sub.add_parser("check-axioms", help="check the escrow named in a config")
    ax.add_argument("config")
    ax.add_argument("--format", choices=("table", "json"), default="table")
    ax.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="enumeration node budget")
    ax.add_argument("--out")
    ax.set_defaults(func=cmd_check_axioms)

    pf = sub.add_parser("prove-fraud", help="check a fraud proof against a transcript")
    pf.add_argument("proof", help="fraud proof JSON")
    pf.add_argument("transcript", help="scenario transcript JSON (from `run --format json`)")
    pf.add_argument("--format", choices=("table", "json"), default="table")
    pf.set_defaults(func=cmd_prove_fraud)

    ls = sub.add_parser("list-scenarios", help="list bundled scenario configs")
    ls.add_argument("--format", choices=("table", "json"), default="table")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
