"""Corpus analysis: behavioral summaries, statistical aggregation, inferred
domain facts, anomaly detection, and bounded recursive re-import.

Each analyzed contract yields one FunctionSummary per function. Summaries
are counted per call site into CorpusStats; frequency thresholds turn the
stats into DomainFacts (which arguments are usually untainted, which
signatures are usually guarded, which allow reentrancy). Facts feed back
into summarization -- marking a signature reentrancy-allowing can make its
callers' summaries vote in the next round -- so refine() iterates until
the facts stop changing or the round budget runs out.

Corpus directory layout:

    corpus/<contract>.svc               inputs
    corpus/out/<contract>.result.json   analysis results
    corpus/out/facts.round-N.json       facts per refine round (newest wins)
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

from .clients import (
    CORPUS_ANOMALY, SensitiveOpSpec, Warning, detect_tainted_sensitive_arg,
    detect_untrusted_reachability, is_tainted, relabel, requires_owner,
    requires_unprivileged,
)
from .ir import CONSTRUCTOR_NAME, Contract
from .parser import ParseError, parse
from .symexpr import Expr, FREE_IDENTITY_SYMBOLS
from .valueflow import AnalysisConfig, AnalysisResult, analyze

log = logging.getLogger(__name__)

FACTS_SCHEMA_ID = "symvalic-facts/1"


@dataclass(frozen=True)
class ExternalCallSummary:
    stmt: int
    signature: str
    guarded: bool
    arg_taint: Tuple[str, ...]  # "tainted" | "untainted" per position


@dataclass(frozen=True)
class FunctionSummary:
    contract: str
    function: str
    reaches_delegatecall: bool
    monetary_arg_positions: frozenset
    performs_init: bool
    manipulable_return: bool
    allows_reentrancy: bool
    checked_transfer: bool
    external_calls: Tuple[ExternalCallSummary, ...]


def _holds_free_identity(e: Expr) -> bool:
    return any(n in FREE_IDENTITY_SYMBOLS for n in e.walk())


def summarize(result: AnalysisResult, facts: Optional["DomainFacts"] = None
              ) -> Tuple[FunctionSummary, ...]:
    """Behavioral summaries for every function of one analyzed contract.

    facts, when given, enables the recursive definitions: a call to a
    known reentrancy-allowing signature with a parameter-controlled
    argument makes the caller vote allows-reentrancy too.
    """
    reentrancy_allowing = (facts.reentrancy_allowing if facts is not None
                           else frozenset())
    calls_by_fn: dict[str, list] = {}
    for c in result.calls:
        calls_by_fn.setdefault(c.function, []).append(c)

    ctor_slots = {s.slot for s in result.stores
                  if s.function == CONSTRUCTOR_NAME and s.slot is not None}
    unpriv_writable_slots = {
        s.slot for s in result.stores
        if s.slot is not None and requires_unprivileged(s.deps)
    }
    load_slots: dict[Tuple[str, str], set] = {}
    for ld in result.loads:
        if ld.slot is not None:
            load_slots.setdefault((ld.function, ld.var), set()).add(ld.slot)

    direct: dict[str, FunctionSummary] = {}
    for fname, _vis, params in result.functions:
        calls = sorted(calls_by_fn.get(fname, ()), key=lambda c: c.stmt)
        intrinsics = [c for c in calls if c.kind == "intrinsic"]
        externals = [c for c in calls if c.kind == "external"]

        ext_summaries = []
        for c in externals:
            reach = result.reach_for(c.stmt)
            guarded = bool(reach) and all(requires_owner(f.deps) for f in reach)
            taint = tuple(
                "tainted" if any(is_tainted(v) and requires_unprivileged(d)
                                 for v, d in pos) else "untainted"
                for pos in c.arg_values
            )
            ext_summaries.append(ExternalCallSummary(
                c.stmt, c.callee, guarded, taint))

        allows = False
        for c in externals:
            if any(_holds_free_identity(v) for v, _ in c.target_values):
                allows = True
                break
            if c.callee in reentrancy_allowing and any(
                    _holds_free_identity(v) for pos in c.arg_values
                    for v, _ in pos):
                allows = True
                break

        transfers = [c for c in intrinsics if c.callee == "TRANSFER"]
        checked_transfer = bool(transfers) and all(
            all(requires_owner(f.deps) for f in result.reach_for(c.stmt))
            for c in transfers
        )

        monetary = set()
        for c in transfers:
            for pos in c.arg_values:
                for _v, d in pos:
                    local = d.local_map
                    for i, p in enumerate(params):
                        if p in local:
                            monetary.add(i)

        performs_init = fname != CONSTRUCTOR_NAME and any(
            s.function == fname and s.slot in ctor_slots
            and any(requires_unprivileged(f.deps)
                    for f in result.reach_for(s.stmt))
            for s in result.stores
        )

        manipulable = False
        for _value, d in result.returns.get(fname, ()):
            for var in d.local_map:
                slots = load_slots.get((fname, var), ())
                if any(s in unpriv_writable_slots for s in slots):
                    manipulable = True
                    break

        direct[fname] = FunctionSummary(
            contract=result.contract,
            function=fname,
            reaches_delegatecall=any(c.callee == "DELEGATECALL"
                                     for c in intrinsics),
            monetary_arg_positions=frozenset(monetary),
            performs_init=performs_init,
            manipulable_return=manipulable,
            allows_reentrancy=allows,
            checked_transfer=checked_transfer,
            external_calls=tuple(ext_summaries),
        )

    # delegatecall reachability closes over internal calls
    edges = {(caller, callee) for caller, callee, _ in result.internal_calls}
    changed = True
    while changed:
        changed = False
        for caller, callee in sorted(edges):
            if (caller in direct and callee in direct
                    and direct[callee].reaches_delegatecall
                    and not direct[caller].reaches_delegatecall):
                direct[caller] = replace(direct[caller],
                                         reaches_delegatecall=True)
                changed = True
    return tuple(direct[name] for name, _, _ in result.functions)


# ---------------------------------------------------------------------------
# Aggregation and fact inference
# ---------------------------------------------------------------------------


@dataclass
class CorpusStats:
    """Per-call-site counts across the corpus."""

    arg_taint: dict = field(default_factory=dict)       # (sig, pos) -> [t, u]
    guarded_callers: dict = field(default_factory=dict)  # sig -> [g, u]
    reentrancy_votes: dict = field(default_factory=dict)  # sig -> votes


def aggregate(summaries: Iterable[FunctionSummary]) -> CorpusStats:
    """Pure counting; invariant under permutation of the summary list."""
    stats = CorpusStats()
    for s in sorted(summaries, key=lambda s: (s.contract, s.function)):
        if s.allows_reentrancy:
            stats.reentrancy_votes[s.function] = (
                stats.reentrancy_votes.get(s.function, 0) + 1)
        for call in s.external_calls:
            g = stats.guarded_callers.setdefault(call.signature, [0, 0])
            g[0 if call.guarded else 1] += 1
            for pos, taint in enumerate(call.arg_taint):
                t = stats.arg_taint.setdefault((call.signature, pos), [0, 0])
                t[0 if taint == "tainted" else 1] += 1
    return stats


@dataclass(frozen=True)
class Thresholds:
    min_samples: int = 10
    untainted_fraction: float = 0.9
    guarded_fraction: float = 0.9


@dataclass(frozen=True)
class SensitiveArgFact:
    signature: str
    position: int
    tainted: int
    untainted: int

    @property
    def samples(self) -> int:
        return self.tainted + self.untainted

    @property
    def fraction(self) -> float:
        return self.untainted / self.samples if self.samples else 0.0


@dataclass(frozen=True)
class GuardedFact:
    signature: str
    guarded: int
    unguarded: int

    @property
    def samples(self) -> int:
        return self.guarded + self.unguarded

    @property
    def fraction(self) -> float:
        return self.guarded / self.samples if self.samples else 0.0


@dataclass(frozen=True)
class ReentrancyFact:
    signature: str
    votes: int


@dataclass(frozen=True)
class DomainFacts:
    sensitive_args: Tuple[SensitiveArgFact, ...] = ()
    usually_guarded: Tuple[GuardedFact, ...] = ()
    reentrancy: Tuple[ReentrancyFact, ...] = ()

    @property
    def reentrancy_allowing(self) -> frozenset:
        return frozenset(f.signature for f in self.reentrancy)

    def sensitive_specs(self) -> Tuple[SensitiveOpSpec, ...]:
        by_sig: dict[str, set] = {}
        for f in self.sensitive_args:
            by_sig.setdefault(f.signature, set()).add(f.position)
        return tuple(
            SensitiveOpSpec(sig, frozenset(positions), source="corpus-inferred")
            for sig, positions in sorted(by_sig.items())
        )

    def sensitive_fact(self, signature: str, position: int
                       ) -> Optional[SensitiveArgFact]:
        for f in self.sensitive_args:
            if f.signature == signature and f.position == position:
                return f
        return None

    def is_empty(self) -> bool:
        return not (self.sensitive_args or self.usually_guarded
                    or self.reentrancy)


EMPTY_FACTS = DomainFacts()


def infer_domain_facts(stats: CorpusStats,
                       thresholds: Thresholds = Thresholds()) -> DomainFacts:
    """Frequency thresholds over the stats; both bounds are inclusive (>=)."""
    sensitive = []
    for (sig, pos), (tainted, untainted) in sorted(stats.arg_taint.items()):
        samples = tainted + untainted
        if samples >= thresholds.min_samples and \
                untainted / samples >= thresholds.untainted_fraction:
            sensitive.append(SensitiveArgFact(sig, pos, tainted, untainted))
    guarded = []
    for sig, (g, u) in sorted(stats.guarded_callers.items()):
        samples = g + u
        if samples >= thresholds.min_samples and \
                g / samples >= thresholds.guarded_fraction:
            guarded.append(GuardedFact(sig, g, u))
    reentrancy = [ReentrancyFact(sig, votes)
                  for sig, votes in sorted(stats.reentrancy_votes.items())
                  if votes >= 1]
    return DomainFacts(tuple(sensitive), tuple(guarded), tuple(reentrancy))


def anomalies(result: AnalysisResult, facts: DomainFacts) -> Tuple[Warning, ...]:
    """Corpus-informed warnings for one contract, labeled CORPUS_ANOMALY.

    Facts are portable: the contract need not be part of the corpus the
    facts were inferred from.
    """
    out: list[Warning] = []
    for fact in facts.sensitive_args:
        spec = SensitiveOpSpec(fact.signature, frozenset({fact.position}),
                               source="corpus-inferred")
        found = detect_tainted_sensitive_arg(result, (spec,))
        out.extend(relabel(
            found, CORPUS_ANOMALY,
            suffix=(f"corpus: untainted fraction {fact.fraction:.2f} "
                    f"over {fact.samples} call sites")))
    out.extend(relabel(detect_untrusted_reachability(result, facts),
                       CORPUS_ANOMALY))
    return tuple(sorted(set(out), key=Warning.sort_key))


# ---------------------------------------------------------------------------
# Recursive refinement
# ---------------------------------------------------------------------------


@dataclass
class RefineOutcome:
    facts_rounds: Tuple[DomainFacts, ...]
    stable_after: Optional[int]  # facts unchanged since this round (1-based)
    results: dict
    summaries: Tuple[FunctionSummary, ...]
    errors: dict

    @property
    def facts(self) -> DomainFacts:
        return self.facts_rounds[-1] if self.facts_rounds else EMPTY_FACTS


def refine_contracts(contracts: Sequence[Contract], rounds: int = 3,
                     config: Optional[AnalysisConfig] = None,
                     thresholds: Thresholds = Thresholds(),
                     results: Optional[dict] = None) -> RefineOutcome:
    """Iterate analyze-all / summarize / aggregate / infer until the fact
    sets stop changing or the round budget is exhausted.

    Analysis results do not depend on the facts, so contracts are analyzed
    once and only the fact-sensitive summaries are recomputed per round.
    Per-contract failures are recorded and skipped.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    cfg = config or AnalysisConfig()
    errors: dict[str, str] = {}
    if results is None:
        results = {}
        for contract in sorted(contracts, key=lambda c: c.name):
            try:
                results[contract.name] = analyze(contract, cfg)
            except Exception as err:  # never abort the corpus run
                log.warning("analysis of %s failed: %s", contract.name, err)
                errors[contract.name] = str(err)

    facts = EMPTY_FACTS
    facts_rounds: list[DomainFacts] = []
    summaries: Tuple[FunctionSummary, ...] = ()
    stable_after = None
    for round_no in range(1, rounds + 1):
        all_summaries: list[FunctionSummary] = []
        for name in sorted(results):
            all_summaries.extend(summarize(results[name], facts))
        summaries = tuple(all_summaries)
        new_facts = infer_domain_facts(aggregate(summaries), thresholds)
        facts_rounds.append(new_facts)
        if new_facts == facts:
            # facts were already final after the previous change (round 1
            # at the earliest); this round merely confirmed them
            stable_after = max(1, round_no - 1)
            break
        facts = new_facts
    return RefineOutcome(tuple(facts_rounds), stable_after, results,
                         summaries, errors)


# ---------------------------------------------------------------------------
# Corpus directory I/O
# ---------------------------------------------------------------------------


def corpus_out_dir(corpus_dir: Path) -> Path:
    return Path(corpus_dir) / "out"


def load_corpus(corpus_dir) -> Tuple[list, dict]:
    """Parse every .svc file in the directory; returns (contracts, errors)."""
    contracts = []
    errors: dict[str, str] = {}
    seen: set[str] = set()
    for path in sorted(Path(corpus_dir).glob("*.svc")):
        try:
            contract = parse(path.read_text())
        except ParseError as err:
            errors[path.name] = str(err)
            continue
        if contract.name in seen:
            errors[path.name] = f"duplicate contract name {contract.name}"
            continue
        seen.add(contract.name)
        contracts.append(contract)
    return contracts, errors


def facts_json(facts: DomainFacts, round_no: int,
               thresholds: Thresholds) -> dict:
    return {
        "schema": FACTS_SCHEMA_ID,
        "round": round_no,
        "thresholds": {
            "minSamples": thresholds.min_samples,
            "untaintedFraction": thresholds.untainted_fraction,
            "guardedFraction": thresholds.guarded_fraction,
        },
        "sensitiveArgs": [
            {"signature": f.signature, "position": f.position,
             "taintedCount": f.tainted, "untaintedCount": f.untainted,
             "fraction": f.fraction, "samples": f.samples}
            for f in facts.sensitive_args
        ],
        "usuallyGuarded": [
            {"signature": f.signature, "guardedCallers": f.guarded,
             "unguardedCallers": f.unguarded, "fraction": f.fraction,
             "samples": f.samples}
            for f in facts.usually_guarded
        ],
        "reentrancyAllowing": [
            {"signature": f.signature, "votes": f.votes}
            for f in facts.reentrancy
        ],
    }


def facts_from_json(doc: dict) -> DomainFacts:
    if doc.get("schema") != FACTS_SCHEMA_ID:
        raise ValueError(f"unexpected facts schema: {doc.get('schema')!r}")
    return DomainFacts(
        sensitive_args=tuple(
            SensitiveArgFact(r["signature"], r["position"],
                             r["taintedCount"], r["untaintedCount"])
            for r in doc.get("sensitiveArgs", ())),
        usually_guarded=tuple(
            GuardedFact(r["signature"], r["guardedCallers"],
                        r["unguardedCallers"])
            for r in doc.get("usuallyGuarded", ())),
        reentrancy=tuple(
            ReentrancyFact(r["signature"], r["votes"])
            for r in doc.get("reentrancyAllowing", ())),
    )


def write_facts_rounds(corpus_dir, outcome: RefineOutcome,
                       thresholds: Thresholds) -> list:
    out = corpus_out_dir(corpus_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, facts in enumerate(outcome.facts_rounds, start=1):
        path = out / f"facts.round-{i}.json"
        path.write_text(json.dumps(facts_json(facts, i, thresholds),
                                   indent=2, sort_keys=True) + "\n")
        paths.append(path)
    return paths


def latest_facts(corpus_dir) -> Optional[DomainFacts]:
    """The newest facts round in the corpus out directory, if any."""
    out = corpus_out_dir(corpus_dir)
    best_path = None
    best_round = -1
    for path in out.glob("facts.round-*.json"):
        try:
            round_no = int(path.stem.rsplit("-", 1)[1])
        except ValueError:
            continue
        if round_no > best_round:
            best_round = round_no
            best_path = path
    if best_path is None:
        return None
    return facts_from_json(json.loads(best_path.read_text()))


def refine(corpus_dir, rounds: int = 3,
           config: Optional[AnalysisConfig] = None,
           thresholds: Thresholds = Thresholds(),
           results: Optional[dict] = None) -> RefineOutcome:
    """Directory-level refinement: parse, iterate, persist facts per round."""
    contracts, errors = load_corpus(corpus_dir)
    outcome = refine_contracts(contracts, rounds, config, thresholds,
                               results=results)
    outcome.errors.update(errors)
    write_facts_rounds(corpus_dir, outcome, thresholds)
    return outcome
