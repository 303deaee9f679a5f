"""Command-line front end.

Commands:
    analyze FILE            emit the analysis result JSON
    scan FILE [--facts F]   emit vulnerability warnings
    corpus-build DIR        analyze every .svc file, write out/*.result.json
    corpus-infer DIR        run fact refinement, write out/facts.round-N.json
    corpus-scan DIR         emit corpus-anomaly warnings for every contract

Exit status: 0 no warnings, 1 warnings emitted, 2 usage or parse error,
3 analysis resource cap hit on any input. Reports go to stdout,
diagnostics to stderr. Identical invocations produce byte-identical JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from . import corpus as corpus_mod
from .clients import BUILTIN_SPECS, run_detectors, warnings_json
from .corpus import Thresholds, anomalies, facts_json, latest_facts
from .deps import DependencyBudget
from .parser import ParseError, parse
from .valueflow import AnalysisConfig, analyze

EXIT_OK = 0
EXIT_WARNINGS = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _add_engine_flags(p: argparse.ArgumentParser):
    p.add_argument("--dep-args", type=int, default=3, metavar="N",
                   help="tracked function arguments (default 3)")
    p.add_argument("--dep-storage-loads", type=int, default=1, metavar="N",
                   help="tracked storage-load variables (default 1)")
    p.add_argument("--dep-tx-args", type=int, default=2, metavar="N",
                   help="tracked transaction entry arguments (default 2)")
    p.add_argument("--arith-depth", type=int, default=5, metavar="N",
                   help="arithmetic depth limit through storage (default 5)")
    p.add_argument("--tx-rounds", type=int, default=3, metavar="N",
                   help="transaction rounds (default 3)")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for input drawing (env SYMVALIC_SEED, then 1)")
    p.add_argument("--format", choices=("json", "text"), default="json")


def _add_threshold_flags(p: argparse.ArgumentParser):
    p.add_argument("--min-samples", type=int, default=10)
    p.add_argument("--untainted-frac", type=float, default=0.9)
    p.add_argument("--guarded-frac", type=float, default=0.9)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symvalic",
        description="Symbolic value-flow analyzer and corpus scanner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze one contract")
    p.add_argument("file", type=Path)
    _add_engine_flags(p)

    p = sub.add_parser("scan", help="scan one contract for vulnerabilities")
    p.add_argument("file", type=Path)
    p.add_argument("--facts", type=Path, default=None,
                   help="corpus facts JSON enabling the corpus-informed detectors")
    _add_engine_flags(p)

    p = sub.add_parser("corpus-build", help="analyze all .svc files in a corpus")
    p.add_argument("dir", type=Path)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_engine_flags(p)

    p = sub.add_parser("corpus-infer", help="infer domain facts from a corpus")
    p.add_argument("dir", type=Path)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_engine_flags(p)
    _add_threshold_flags(p)

    p = sub.add_parser("corpus-scan", help="emit corpus anomalies")
    p.add_argument("dir", type=Path)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_engine_flags(p)
    _add_threshold_flags(p)

    return parser


def config_from_args(args) -> AnalysisConfig:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("SYMVALIC_SEED", "1"))
    return AnalysisConfig(
        budget=DependencyBudget(args.dep_args, args.dep_storage_loads,
                                args.dep_tx_args),
        arithmetic_depth_limit=args.arith_depth,
        transaction_rounds=args.tx_rounds,
        seed=seed,
    )


def thresholds_from_args(args) -> Thresholds:
    return Thresholds(args.min_samples, args.untainted_frac, args.guarded_frac)


def _emit(doc: dict, fmt: str, text_lines):
    if fmt == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for line in text_lines(doc):
            print(line)


def _warning_lines(doc: dict):
    rows = doc["warnings"]
    if not rows:
        yield "no warnings"
        return
    for w in rows:
        yield (f"{w['kind']} {w['contract']}.{w['function']} s{w['stmt']}: "
               f"{w['explanation']} [{w['witness']}]")


def _result_lines(doc: dict):
    yield f"contract {doc['contract']} (truncated: {doc['truncated']})"
    yield "config " + " ".join(f"{k}={v}" for k, v in sorted(doc["config"].items()))
    for i in doc["inferences"]:
        yield (f"  {i['function']}.{i['var']} -> {i['value']} "
               f"<{i['local']} ; {i['tx']}>")
    for r in doc["reachability"]:
        yield f"  reach s{r['stmt']} ({r['function']}) <{r['local']} ; {r['tx']}>"
    for c in doc["externalCalls"]:
        yield f"  call s{c['stmt']} {c['function']} -> {c['callee']} ({c['kind']})"
    for fname, rows in sorted(doc["returns"].items()):
        for row in rows:
            yield (f"  return {fname} -> {row['value']} "
                   f"<{row['local']} ; {row['tx']}>")
    for cell in doc["storage"]:
        yield (f"  storage {cell['address']} -> {cell['value']} "
               f"(depth {cell['depth']})")
    for note in doc.get("notes", ()):
        yield f"  note: {note}"


def _facts_lines(doc: dict):
    yield f"facts (round {doc['round']})"
    for f in doc["sensitiveArgs"]:
        yield (f"  sensitive {f['signature']}[{f['position']}]: "
               f"untainted {f['fraction']:.2f} of {f['samples']}")
    for f in doc["usuallyGuarded"]:
        yield (f"  guarded {f['signature']}: {f['fraction']:.2f} "
               f"of {f['samples']}")
    for f in doc["reentrancyAllowing"]:
        yield f"  reentrancy-allowing {f['signature']} ({f['votes']} votes)"


def _parse_file(path: Path):
    try:
        text = path.read_text()
    except OSError as err:
        print(f"{path}: {err}", file=sys.stderr)
        return None
    try:
        return parse(text)
    except ParseError as err:
        print(f"{path}:{err}", file=sys.stderr)
        return None


def cmd_analyze(args) -> int:
    contract = _parse_file(args.file)
    if contract is None:
        return EXIT_USAGE
    result = analyze(contract, config_from_args(args))
    _emit(result.to_json_dict(), args.format, _result_lines)
    return EXIT_RESOURCE if result.truncated else EXIT_OK


def cmd_scan(args) -> int:
    contract = _parse_file(args.file)
    if contract is None:
        return EXIT_USAGE
    facts = None
    if args.facts is not None:
        try:
            facts = corpus_mod.facts_from_json(json.loads(args.facts.read_text()))
        except (OSError, ValueError, KeyError) as err:
            print(f"{args.facts}: {err}", file=sys.stderr)
            return EXIT_USAGE
    result = analyze(contract, config_from_args(args))
    warnings = run_detectors(result, BUILTIN_SPECS, facts)
    _emit(warnings_json(warnings), args.format, _warning_lines)
    if result.truncated:
        return EXIT_RESOURCE
    return EXIT_WARNINGS if warnings else EXIT_OK


def _analyze_one(payload):
    """Worker for corpus commands (runs in a separate process)."""
    name, text, config = payload
    contract = parse(text)
    return name, analyze(contract, config)


def _analyze_corpus(corpus_dir: Path, config: AnalysisConfig, jobs: int):
    """(results by contract name, parse errors by file name)."""
    errors: dict[str, str] = {}
    payloads = []
    seen = set()
    for path in sorted(corpus_dir.glob("*.svc")):
        text = path.read_text()
        try:
            contract = parse(text)
        except ParseError as err:
            errors[path.name] = str(err)
            continue
        if contract.name in seen:
            errors[path.name] = f"duplicate contract name {contract.name}"
            continue
        seen.add(contract.name)
        payloads.append((contract.name, text, config))
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_analyze_one, payloads))
    else:
        rows = [_analyze_one(p) for p in payloads]
    return {name: result for name, result in sorted(rows)}, errors


def _report_errors(errors: dict):
    for name in sorted(errors):
        print(f"{name}: {errors[name]}", file=sys.stderr)


def _corpus_exit(errors, truncated, warnings) -> int:
    if errors:
        return EXIT_USAGE
    if truncated:
        return EXIT_RESOURCE
    return EXIT_WARNINGS if warnings else EXIT_OK


def cmd_corpus_build(args) -> int:
    config = config_from_args(args)
    results, errors = _analyze_corpus(args.dir, config, args.jobs)
    _report_errors(errors)
    out = corpus_mod.corpus_out_dir(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for name in sorted(results):
        result = results[name]
        doc = result.to_json_dict()
        (out / f"{name}.result.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n")
        index.append({"contract": name, "truncated": result.truncated,
                      "inferences": len(doc["inferences"])})
    _emit({"schema": "symvalic-corpus-index/1", "contracts": index},
          args.format,
          lambda d: (f"{c['contract']}: {c['inferences']} inferences"
                     for c in d["contracts"]))
    truncated = any(r.truncated for r in results.values())
    return _corpus_exit(errors, truncated, warnings=False)


def cmd_corpus_infer(args) -> int:
    config = config_from_args(args)
    thresholds = thresholds_from_args(args)
    results, errors = _analyze_corpus(args.dir, config, args.jobs)
    outcome = corpus_mod.refine(args.dir, rounds=args.rounds, config=config,
                                thresholds=thresholds, results=results)
    _report_errors(outcome.errors)
    final_round = len(outcome.facts_rounds)
    _emit(facts_json(outcome.facts, final_round, thresholds), args.format,
          _facts_lines)
    truncated = any(r.truncated for r in outcome.results.values())
    return _corpus_exit(outcome.errors, truncated, warnings=False)


def cmd_corpus_scan(args) -> int:
    config = config_from_args(args)
    thresholds = thresholds_from_args(args)
    results, errors = _analyze_corpus(args.dir, config, args.jobs)
    facts = latest_facts(args.dir)
    if facts is None:
        outcome = corpus_mod.refine(args.dir, rounds=args.rounds,
                                    config=config, thresholds=thresholds,
                                    results=results)
        errors.update(outcome.errors)
        facts = outcome.facts
    _report_errors(errors)
    all_warnings = []
    for name in sorted(results):
        all_warnings.extend(anomalies(results[name], facts))
    _emit(warnings_json(all_warnings), args.format, _warning_lines)
    truncated = any(r.truncated for r in results.values())
    return _corpus_exit(errors, truncated, warnings=bool(all_warnings))


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "analyze": cmd_analyze,
        "scan": cmd_scan,
        "corpus-build": cmd_corpus_build,
        "corpus-infer": cmd_corpus_infer,
        "corpus-scan": cmd_corpus_scan,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
