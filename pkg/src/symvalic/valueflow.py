"""The symvalic fixpoint engine.

Seeds entry-point inputs with concrete and symbolic values, propagates
(variable, value, dependency-map) inferences through three-address
statements, models storage across transaction rounds, and enforces path
sensitivity by consulting the symbolic reasoner at REQUIRE/BRANCH gates.

Mechanics
---------
Each public function is explored once per transaction round against the
storage committed by earlier rounds (the constructor runs first, with the
sender fixed to <<owner>>). Inside a function, blocks of the acyclic CFG
are visited in topological order carrying:

  * an environment: variable -> set of (value, deps, depth) triples;
  * reachability alternatives: (deps, path-condition, solver substitution)
    triples describing the distinguishable ways control reached the block.

Every statement executes once per (alternative x operand combination);
dependency combination prunes pairs that belong to guaranteed-separate
executions. Branch edges tag the flowing environment with the surviving
arm alternatives, so values that took the other arm conflict and die at
the join. Storage writes are buffered during a round and committed (with
dependencies stripped: a new transaction is a new dependency world) at the
round boundary.
"""

from __future__ import annotations

import hashlib
import itertools
import random
import re
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Tuple, Union

from .deps import (
    DEFAULT_BUDGET, EMPTY, Conflict, DependencyBudget, DependencyMap,
    SENDER_KEY, TrackingPlan, combine, restrict,
)
from .ir import (
    Contract, Function, Statement, harvest_constants, slot_of_address,
    statements_after,
)
from .symexpr import (
    ARITH_OPS, BinOp, Concat, Const, Expr, FALSE, Not, OWNER,
    OWNER_UNIQUE, Sha3, Sym, TRUE, UNPRIVILEGED_USER, USER_UNIQUE, WORD,
    as_expr, contract_symbol, expr_key, free_syms, implies, normalize,
    substitute, value_for_var,
)

SENDER_INPUT = "msg.sender"
_TEMP_NAME = re.compile(r"t\d+\Z")


@dataclass(frozen=True)
class AnalysisConfig:
    """Engine limits. All bounds are >= 1; see the CLI for the flag names."""

    budget: DependencyBudget = DEFAULT_BUDGET
    arithmetic_depth_limit: int = 5
    transaction_rounds: int = 3
    seed: int = 1
    max_values_per_var: int = 64
    max_alts_per_block: int = 256
    max_inferences: int = 200_000
    time_budget: Optional[float] = 60.0

    def __post_init__(self):
        if self.arithmetic_depth_limit < 1 or self.transaction_rounds < 1:
            raise ValueError("limits must be >= 1")


@dataclass(frozen=True)
class Inference:
    """Variable `var` (in `function`) may hold `value` under `deps`."""

    function: str
    var: str
    value: Expr
    deps: DependencyMap


@dataclass(frozen=True)
class ReachabilityFact:
    function: str
    stmt: int
    deps: DependencyMap


@dataclass(frozen=True)
class CallSite:
    """An executed external call or sensitive intrinsic."""

    stmt: int
    function: str
    callee: str          # signature: callee name, or TRANSFER/SELFDESTRUCT/...
    kind: str            # "external" | "intrinsic"
    target_values: Tuple[Tuple[Expr, DependencyMap], ...]
    arg_values: Tuple[Tuple[Tuple[Expr, DependencyMap], ...], ...]


@dataclass(frozen=True)
class StoreFact:
    function: str
    stmt: int
    address: Expr
    slot: Optional[int]
    value: Expr
    deps: DependencyMap


@dataclass(frozen=True)
class LoadFact:
    function: str
    stmt: int
    var: str
    address: Expr
    slot: Optional[int]


@dataclass
class AnalysisResult:
    contract: str
    config: AnalysisConfig
    inferences: Tuple[Inference, ...]
    reachability: Tuple[ReachabilityFact, ...]
    calls: Tuple[CallSite, ...]
    stores: Tuple[StoreFact, ...]
    loads: Tuple[LoadFact, ...]
    returns: Mapping[str, Tuple[Tuple[Expr, DependencyMap], ...]]
    storage: Tuple[Tuple[Expr, Expr, int], ...]  # (address, value, depth)
    truncated: bool
    notes: Tuple[str, ...] = ()
    # structural context for clients: declared functions (name,
    # visibility, param names), intra-function statement follow-order,
    # and internal call edges
    functions: Tuple[Tuple[str, str, Tuple[str, ...]], ...] = ()
    flow_after: Mapping[int, frozenset] = field(default_factory=dict)
    internal_calls: Tuple[Tuple[str, str, int], ...] = ()

    # -- queries --------------------------------------------------------

    def var_may_be(self, var, value=None, local=None, tx=None, function=None
                   ) -> Tuple[Inference, ...]:
        """Inferences matching the patterns (None = wildcard).

        Dependency patterns match when every pattern entry is present and
        equal in the witness; other entries are unconstrained.
        """
        want = None if value is None else normalize(as_expr(value))
        out = []
        for inf in self.inferences:
            if function is not None and inf.function != function:
                continue
            if inf.var != var:
                continue
            if want is not None and inf.value != want:
                continue
            if _deps_match(inf.deps, local, tx):
                out.append(inf)
        return tuple(out)

    def stmt_reachable(self, stmt, local=None, tx=None
                       ) -> Tuple[ReachabilityFact, ...]:
        return tuple(
            f for f in self.reachability
            if f.stmt == stmt and _deps_match(f.deps, local, tx)
        )

    def reach_for(self, stmt: int) -> Tuple[ReachabilityFact, ...]:
        return tuple(f for f in self.reachability if f.stmt == stmt)

    def return_values(self, function: str) -> frozenset:
        return frozenset(v for v, _ in self.returns.get(function, ()))

    def to_json_dict(self) -> dict:
        return _result_json(self)


def _deps_match(d: DependencyMap, local, tx) -> bool:
    if local:
        have = d.local_map
        for var, value in local.items():
            want = normalize(as_expr(value))
            if have.get(var) != want:
                return False
    if tx:
        have = d.transaction_map
        for var, value in tx.items():
            want = normalize(as_expr(value))
            if have.get(var) != want:
                return False
    return True


def var_may_be(result: AnalysisResult, var, value=None, local=None, tx=None,
               function=None) -> Tuple[Inference, ...]:
    return result.var_may_be(var, value, local, tx, function)


def stmt_reachable(result: AnalysisResult, stmt, local=None, tx=None
                   ) -> Tuple[ReachabilityFact, ...]:
    return result.stmt_reachable(stmt, local, tx)


# ---------------------------------------------------------------------------
# Input seeding
# ---------------------------------------------------------------------------


def _derived_rng(seed: int, *scope: str) -> random.Random:
    material = f"{seed}|" + "|".join(scope)
    digest = hashlib.sha256(material.encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))

# Bounds of the two seeded draws from the program text: up to 3 small
# constants (< 256) and up to 8 constants overall. With eight or fewer
# constants in the text every one of them is seeded.
SMALL_CONST_DRAW = 3
TEXT_CONST_DRAW = 8


def seed_inputs(fn: Function, contract: Contract,
                config: Optional[AnalysisConfig] = None
                ) -> dict[str, Tuple[Expr, ...]]:
    """Initial value sets for a public function's parameters.

    Numeric parameters: {0, 1}, a seeded draw of small program constants,
    2^256-1 (overflow trigger), and a seeded draw over all program
    constants. Address parameters: address-like program constants plus the
    free symbols <<owner-unique-value>> / <<user-unique-value>>. Booleans:
    {0, 1}. The implicit sender (key "msg.sender"): address-like constants
    plus the bound symbols <<owner>> / <<unprivileged-user>>.
    """
    cfg = config or AnalysisConfig()
    numeric, addr_like = harvest_constants(contract)
    addr_consts = tuple(Const(a, hex_hint=True) for a in sorted(addr_like))
    seeds: dict[str, Tuple[Expr, ...]] = {}
    for pname, ptype in fn.params:
        if ptype == "address":
            seeds[pname] = addr_consts + (OWNER_UNIQUE, USER_UNIQUE)
        elif ptype == "bool":
            seeds[pname] = (Const(0), Const(1))
        else:
            rng = _derived_rng(cfg.seed, contract.name, fn.name, pname)
            chosen = {0, 1, WORD - 1}
            small = sorted(v for v in numeric if v < 256)
            chosen.update(rng.sample(small, min(SMALL_CONST_DRAW, len(small))))
            full = sorted(numeric)
            chosen.update(rng.sample(full, min(TEXT_CONST_DRAW, len(full))))
            seeds[pname] = tuple(Const(v) for v in sorted(chosen))
    seeds[SENDER_INPUT] = (OWNER, UNPRIVILEGED_USER) + addr_consts
    return seeds


SeedOverrides = Mapping[Tuple[str, str], Iterable[Union[Expr, int]]]


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Alt:
    """One distinguishable way control reached the current point."""

    deps: DependencyMap
    pc: frozenset = frozenset()              # assumed-true normalized exprs
    subst: Tuple[Tuple[Sym, Expr], ...] = ()  # solver-chosen assignments


@dataclass(frozen=True)
class _Val:
    expr: Expr
    deps: DependencyMap
    depth: int


class _Timeout(Exception):
    pass


class _Engine:
    def __init__(self, contract: Contract, config: AnalysisConfig,
                 entry_seeds: Optional[SeedOverrides]):
        self.contract = contract
        self.cfg = config
        self.entry_seeds = dict(entry_seeds or {})
        self.limit = config.arithmetic_depth_limit
        self.truncated = False
        self.notes: list[str] = []
        self.deadline = (time.monotonic() + config.time_budget
                         if config.time_budget else None)

        # per-function tracking plans (local part); the tracked storage-load
        # variable is the first SLOAD into a named local (temps are the
        # unnamed intermediate loads, e.g. inside a require condition).
        # Reassigned locals are not trackable: a name-keyed dependency must
        # denote one value per execution.
        self.local_plans: dict[str, TrackingPlan] = {}
        for f in contract.functions:
            assign_counts: dict[str, int] = {}
            for s in f.statements():
                if s.result:
                    assign_counts[s.result] = assign_counts.get(s.result, 0) + 1
            first_load: Tuple[str, ...] = ()
            for s in f.statements():
                if (s.op == "SLOAD" and s.result
                        and not _TEMP_NAME.match(s.result)
                        and assign_counts[s.result] == 1):
                    first_load = (s.result,)
                    break
            self.local_plans[f.name] = TrackingPlan(
                arg_order=f.param_names, storage_load_order=first_load)

        # collectors (ordered dedup)
        self.inferences: dict[Inference, None] = {}
        self.reach: dict[ReachabilityFact, None] = {}
        self.stores: dict[StoreFact, None] = {}
        self.loads: dict[LoadFact, None] = {}
        self.returns: dict[str, dict[Tuple[Expr, DependencyMap], None]] = {}
        self.call_rows: dict[Tuple[int, str, str, str], dict] = {}
        self.internal_edges: dict[Tuple[str, str, int], None] = {}
        self.storage: dict[Expr, dict[Expr, int]] = {}
        self.buffer: dict[Expr, dict[Expr, int]] = {}
        self.call_memo: set = set()

    # -- top level -------------------------------------------------------

    def run(self) -> AnalysisResult:
        try:
            ctor = self.contract.constructor
            if ctor is not None:
                self._run_entry(ctor, senders=(OWNER,))
                self._commit()
            for _ in range(self.cfg.transaction_rounds):
                self.call_memo.clear()
                for f in self.contract.public_functions():
                    self._run_entry(f, senders=None)
                if not self._commit():
                    break
        except _Timeout:
            self.truncated = True
            self.notes.append("resource cap exceeded; partial result")
        return self._assemble()

    def _check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout()

    def _commit(self) -> bool:
        """Fold buffered writes into committed storage (deps stripped)."""
        changed = False
        for key in sorted(self.buffer, key=expr_key):
            cell = self.storage.setdefault(key, {})
            for value, depth in self.buffer[key].items():
                if value not in cell or cell[value] < depth:
                    cell[value] = depth
                    changed = True
        self.buffer = {}
        return changed

    def _run_entry(self, fn: Function, senders: Optional[Tuple[Expr, ...]]):
        seeds = seed_inputs(fn, self.contract, self.cfg)
        for (fname, pname), values in self.entry_seeds.items():
            if fname == fn.name:
                seeds[pname] = tuple(normalize(as_expr(v)) for v in values)
        sender_values = senders if senders is not None else seeds[SENDER_INPUT]
        alts = [
            _Alt(DependencyMap.of(transaction={SENDER_KEY: s}))
            for s in sender_values
        ]
        env: dict[str, Tuple[_Val, ...]] = {}
        for pname, _ in fn.params:
            env[pname] = tuple(
                _Val(normalize(v), EMPTY, self.limit) for v in seeds[pname])
        tx_plan = tuple(f"{fn.name}.{p}"
                        for p in fn.param_names[: self.cfg.budget.tx_args])
        frame_plan = replace(self.local_plans[fn.name], tx_arg_order=tx_plan)
        for pname, _ in fn.params:
            for val in env[pname]:
                for alt in alts:
                    self._record_inference(fn.name, frame_plan, pname,
                                           val.expr, alt.deps)
        self._walk(fn, env, alts, entry_fn=fn, stack=(fn.name,))

    # -- function body ----------------------------------------------------

    def _walk(self, fn: Function, entry_env, entry_alts, entry_fn: Function,
              stack: Tuple[str, ...]):
        self._check_time()
        plan = replace(
            self.local_plans[fn.name],
            tx_arg_order=tuple(
                f"{entry_fn.name}.{p}"
                for p in entry_fn.param_names[: self.cfg.budget.tx_args]),
        )
        env_in: dict[str, dict[str, Tuple[_Val, ...]]] = {
            fn.entry_block: dict(entry_env)}
        alts_in: dict[str, list[_Alt]] = {fn.entry_block: list(entry_alts)}

        for block in fn.topo_blocks():
            env = env_in.get(block.bid)
            alts = alts_in.get(block.bid, [])
            if env is None or not alts:
                continue
            self._check_time()
            env = dict(env)
            alts = self._cap_alts(alts)
            for stmt in block.statements:
                for alt in alts:
                    self._record_reach(fn.name, stmt.sid, alt.deps, plan)
                alts = self._exec(fn, plan, stmt, env, alts, entry_fn, stack,
                                  env_in, alts_in)
                if not alts:
                    break

    def _cap_alts(self, alts: list[_Alt]) -> list[_Alt]:
        out: dict[_Alt, None] = {}
        for a in alts:
            out.setdefault(a, None)
        alts = list(out)
        if len(alts) > self.cfg.max_alts_per_block:
            self.notes.append("alternative bound trimmed a block")
            alts = alts[: self.cfg.max_alts_per_block]
        return alts

    # -- recording ---------------------------------------------------------

    def _record_inference(self, fname: str, plan: TrackingPlan, var: str,
                          value: Expr, deps: DependencyMap):
        assert value == normalize(value)
        assert restrict(deps, self.cfg.budget, plan) == deps, \
            f"budget violation for {var}: {deps}"
        if len(self.inferences) >= self.cfg.max_inferences:
            raise _Timeout()
        self.inferences.setdefault(Inference(fname, var, value, deps), None)

    def _record_reach(self, fname: str, sid: int, deps: DependencyMap,
                      plan: TrackingPlan):
        self.reach.setdefault(ReachabilityFact(fname, sid, deps), None)

    def _call_row(self, stmt: Statement, fname: str, kind: str, n_args: int):
        key = (stmt.sid, fname, stmt.callee or stmt.op, kind)
        row = self.call_rows.get(key)
        if row is None:
            row = {"target": {}, "args": [dict() for _ in range(n_args)]}
            self.call_rows[key] = row
        return row

    # -- operand resolution -------------------------------------------------

    def _subst_val(self, val: _Val, alt: _Alt) -> _Val:
        if not alt.subst:
            return val
        m = dict(alt.subst)
        e = normalize(substitute(val.expr, m))
        d = DependencyMap(
            tuple((v, normalize(substitute(x, m))) for v, x in val.deps.local),
            tuple((v, normalize(substitute(x, m))) for v, x in val.deps.transaction),
        )
        return _Val(e, d, val.depth)

    def _resolve(self, operand, env, alt: _Alt, plan: TrackingPlan):
        """Values of one operand under alt: (expr, contribution deps, depth)."""
        if isinstance(operand, Const):
            return [(operand, EMPTY, self.limit)]
        if operand.startswith("@"):
            return [(contract_symbol(operand[1:]), EMPTY, self.limit)]
        out = []
        tracked = operand in plan.tracked_locals(self.cfg.budget)
        for val in env.get(operand, ()):
            v = self._subst_val(val, alt)
            d = v.deps
            if tracked:
                d = combine(d, DependencyMap.of(local={operand: v.expr}))
                if isinstance(d, Conflict):
                    continue
            out.append((v.expr, d, v.depth))
        return out

    def _combos(self, operands, env, alt: _Alt, plan: TrackingPlan):
        """All compatible assignments of values to the distinct operand vars.

        Yields (values by operand position, combined deps incl. alt.deps,
        depths by operand position). A duplicated variable operand takes the
        same value at every position; conflicting pairings are pruned.
        """
        distinct: list = []
        for op in operands:
            if op not in distinct:
                distinct.append(op)
        resolved = [self._resolve(op, env, alt, plan) for op in distinct]
        for choice in itertools.product(*resolved):
            d: DependencyMap = alt.deps
            ok = True
            for (_, cd, _k) in choice:
                res = combine(d, cd)
                if isinstance(res, Conflict):
                    ok = False
                    break
                d = res
            if not ok:
                continue
            by_op = {op: (choice[i][0], choice[i][2])
                     for i, op in enumerate(distinct)}
            vals = [by_op[op][0] for op in operands]
            depths = [by_op[op][1] for op in operands]
            yield vals, d, depths

    def _put_env(self, env, var: str, vals: list[_Val]):
        dedup: dict[_Val, None] = {}
        for v in vals:
            dedup.setdefault(v, None)
        out = list(dedup)
        if len(out) > self.cfg.max_values_per_var:
            self.notes.append(f"value bound trimmed {var}")
            out = out[: self.cfg.max_values_per_var]
        env[var] = tuple(out)

    # -- statement execution -------------------------------------------------

    def _exec(self, fn: Function, plan: TrackingPlan, stmt: Statement, env,
              alts: list[_Alt], entry_fn: Function, stack, env_in, alts_in
              ) -> list[_Alt]:
        op = stmt.op
        if op == "REQUIRE":
            return self._gate(stmt.operands[0], env, alts, plan, want_true=True)
        if op == "BRANCH":
            then_alts = self._gate(stmt.operands[0], env, alts, plan, True)
            else_alts = self._gate(stmt.operands[0], env, alts, plan, False)
            then_bid, else_bid = stmt.targets
            self._flow_edge(env, then_alts, then_bid, env_in, alts_in, tag=True)
            self._flow_edge(env, else_alts, else_bid, env_in, alts_in, tag=True)
            return []
        if op == "JUMP":
            self._flow_edge(env, alts, stmt.targets[0], env_in, alts_in,
                            tag=False)
            return []
        if op == "RETURN":
            self._exec_return(fn, plan, stmt, env, alts)
            return []
        if op == "CONST":
            lit = stmt.operands[0]
            produced = [_Val(normalize(lit), alt.deps, self.limit)
                        for alt in alts]
            self._finish_assign(fn, plan, stmt, env, produced)
            return alts
        if op == "CALLER":
            produced = []
            for alt in alts:
                sender = alt.deps.sender()
                if sender is not None:
                    produced.append(_Val(sender, alt.deps, self.limit))
            self._finish_assign(fn, plan, stmt, env, produced)
            return alts
        if op == "BINOP":
            self._exec_binop(fn, plan, stmt, env, alts)
            return alts
        if op in ("SHA3", "CONCAT"):
            produced = []
            for alt in alts:
                for vals, d, depths in self._combos(stmt.operands, env, alt, plan):
                    e = (Sha3(vals[0]) if op == "SHA3"
                         else Concat(vals[0], vals[1]))
                    produced.append(_Val(normalize(e), d, min(depths)))
            self._finish_assign(fn, plan, stmt, env, produced)
            return alts
        if op == "SLOAD":
            self._exec_sload(fn, plan, stmt, env, alts)
            return alts
        if op == "SSTORE":
            self._exec_sstore(fn, plan, stmt, env, alts)
            return alts
        if op in ("CALLEXTERNAL", "TRANSFER", "SELFDESTRUCT", "DELEGATECALL"):
            self._exec_external(fn, plan, stmt, env, alts)
            return alts if op != "SELFDESTRUCT" else []
        if op == "CALLINTERNAL":
            self._exec_internal(fn, plan, stmt, env, alts, entry_fn, stack)
            return alts
        raise AssertionError(op)

    def _finish_assign(self, fn, plan, stmt, env, produced: list[_Val]):
        if stmt.result is None:
            return
        self._put_env(env, stmt.result, produced)
        for v in env[stmt.result]:
            self._record_inference(fn.name, plan, stmt.result, v.expr, v.deps)

    def _exec_binop(self, fn, plan, stmt, env, alts):
        binop = stmt.binop
        arith = binop in ARITH_OPS
        produced = []
        for alt in alts:
            for vals, d, depths in self._combos(stmt.operands, env, alt, plan):
                depth = min(depths)
                if arith and depth == 0:
                    continue  # storage-cycle lineage exhausted
                e = Not(vals[0]) if binop == "NOT" else BinOp(binop, vals[0], vals[1])
                produced.append(_Val(normalize(e), d, depth))
        self._finish_assign(fn, plan, stmt, env, produced)

    def _exec_sload(self, fn, plan, stmt, env, alts):
        produced = []
        for alt in alts:
            for vals, d, _ in self._combos(stmt.operands, env, alt, plan):
                key = vals[0]
                if stmt.result:
                    self.loads.setdefault(
                        LoadFact(fn.name, stmt.sid, stmt.result, key,
                                 slot_of_address(key)), None)
                cell = self.storage.get(key)
                if not cell:
                    # never-written cell: EVM zero default
                    produced.append(_Val(FALSE, d, self.limit))
                    continue
                for value, depth in cell.items():
                    produced.append(_Val(value, d, depth))
        self._finish_assign(fn, plan, stmt, env, produced)

    def _exec_sstore(self, fn, plan, stmt, env, alts):
        for alt in alts:
            for vals, d, depths in self._combos(stmt.operands, env, alt, plan):
                key, value = vals[0], vals[1]
                self.stores.setdefault(
                    StoreFact(fn.name, stmt.sid, key, slot_of_address(key),
                              value, d), None)
                stored_depth = depths[1] - 1
                if stored_depth < 0:
                    continue  # value lineage stops propagating
                cell = self.buffer.setdefault(key, {})
                if value not in cell or cell[value] < stored_depth:
                    cell[value] = stored_depth

    def _exec_return(self, fn, plan, stmt, env, alts):
        if not stmt.operands:
            return
        rows = self.returns.setdefault(fn.name, {})
        for alt in alts:
            for vals, d, _ in self._combos(stmt.operands, env, alt, plan):
                rows.setdefault((vals[0], d), None)

    def _exec_external(self, fn, plan, stmt, env, alts):
        if stmt.op == "CALLEXTERNAL":
            kind, n_args = "external", len(stmt.operands) - 1
        else:
            kind, n_args = "intrinsic", len(stmt.operands)
        row = self._call_row(stmt, fn.name, kind, n_args)
        for alt in alts:
            for vals, d, _ in self._combos(stmt.operands, env, alt, plan):
                if kind == "external":
                    row["target"].setdefault((vals[0], d), None)
                    args = vals[1:]
                else:
                    args = vals
                for i, a in enumerate(args):
                    row["args"][i].setdefault((a, d), None)

    def _exec_internal(self, fn, plan, stmt, env, alts, entry_fn, stack):
        callee = self.contract.function(stmt.callee)
        if callee is None or callee.name in stack:
            self.notes.append(f"internal call to {stmt.callee} skipped")
            return
        self.internal_edges.setdefault((fn.name, callee.name, stmt.sid), None)
        tx_keys = tuple(
            f"{entry_fn.name}.{p}"
            for p in entry_fn.param_names[: self.cfg.budget.tx_args])
        for alt in alts:
            for vals, d, depths in self._combos(stmt.operands, env, alt, plan):
                # entry-point arguments pinned on this path migrate into the
                # transaction dependencies under qualified keys
                tx = dict(d.transaction)
                if fn.name == entry_fn.name:
                    for p, qualified in zip(entry_fn.param_names, tx_keys):
                        bound = d.local_map.get(p)
                        if bound is not None:
                            tx.setdefault(qualified, bound)
                callee_alt = _Alt(DependencyMap.of(transaction=tx),
                                  alt.pc, alt.subst)
                callee_env = {
                    pname: (_Val(vals[i], EMPTY, depths[i]),)
                    for i, (pname, _) in enumerate(callee.params)
                }
                memo_key = (callee.name, tuple(vals), tuple(depths), callee_alt)
                if memo_key in self.call_memo:
                    continue
                self.call_memo.add(memo_key)
                callee_plan = replace(
                    self.local_plans[callee.name], tx_arg_order=tx_keys)
                for pname in callee_env:
                    for val in callee_env[pname]:
                        self._record_inference(callee.name, callee_plan,
                                               pname, val.expr, callee_alt.deps)
                self._walk(callee, callee_env, [callee_alt], entry_fn,
                           stack + (callee.name,))

    # -- gating (REQUIRE and branch arms) -------------------------------------

    def _gate(self, cond_operand, env, alts, plan, want_true: bool) -> list[_Alt]:
        out: list[_Alt] = []
        for alt in alts:
            for cv, cd, _ in self._resolve(cond_operand, env, alt, plan):
                d = combine(alt.deps, cd)
                if isinstance(d, Conflict):
                    continue
                target = cv if want_true else normalize(Not(cv))
                out.extend(self._admit(alt, d, target))
        return self._cap_alts(out)

    def _admit(self, alt: _Alt, d: DependencyMap, target: Expr) -> list[_Alt]:
        """Continue the flow through a condition that must hold.

        Concrete conditions decide directly; otherwise the path condition
        may already imply the target, or the solver may propose values for
        free symbols. An equality proposal is accepted only when it newly
        satisfies the condition (the implies check above failed), and its
        assignment is recorded by substituting into the dependency values
        and the per-flow substitution. Disequalities and comparisons over a
        free symbol are the easy-to-satisfy case: the flow continues with
        the symbol left unconstrained.
        """
        if isinstance(target, Const):
            return [_Alt(d, alt.pc, alt.subst)] if target.value != 0 else []
        if implies(_conjunction(alt.pc), target):
            return [_Alt(d, alt.pc, alt.subst)]
        out = []
        for sym in free_syms(target):
            for cand in value_for_var(sym, target):
                m = {sym: cand}
                merged = dict(alt.subst)
                merged[sym] = cand
                new_subst = tuple(sorted(merged.items(),
                                         key=lambda kv: kv[0].sort_key()))
                d2 = DependencyMap(
                    tuple((v, normalize(substitute(e, m))) for v, e in d.local),
                    tuple((v, normalize(substitute(e, m)))
                          for v, e in d.transaction),
                )
                pc2 = alt.pc | {normalize(BinOp("EQ", sym, cand))}
                out.append(_Alt(d2, pc2, new_subst))
        if not out and _free_satisfiable(target):
            out.append(_Alt(d, alt.pc | {target}, alt.subst))
        return out

    # -- edges -----------------------------------------------------------------

    def _flow_edge(self, env, alts: list[_Alt], target_bid: str, env_in,
                   alts_in, tag: bool):
        if not alts:
            return
        if tag:
            tagged: dict[str, Tuple[_Val, ...]] = {}
            for var, vals in env.items():
                keep: dict[_Val, None] = {}
                for val in vals:
                    for alt in alts:
                        v = self._subst_val(val, alt)
                        d = combine(v.deps, alt.deps)
                        if isinstance(d, Conflict):
                            continue
                        keep.setdefault(_Val(v.expr, d, val.depth), None)
                if keep:
                    out = list(keep)
                    if len(out) > self.cfg.max_values_per_var:
                        self.notes.append(f"value bound trimmed {var}")
                        out = out[: self.cfg.max_values_per_var]
                    tagged[var] = tuple(out)
            payload = tagged
        else:
            payload = env
        dest = env_in.setdefault(target_bid, {})
        for var, vals in payload.items():
            merged: dict[_Val, None] = {}
            for v in dest.get(var, ()):
                merged.setdefault(v, None)
            for v in vals:
                merged.setdefault(v, None)
            dest[var] = tuple(merged)
        alts_in.setdefault(target_bid, []).extend(alts)

    # -- result ------------------------------------------------------------------

    def _assemble(self) -> AnalysisResult:
        calls = []
        for (sid, fname, callee, kind), row in sorted(self.call_rows.items()):
            calls.append(CallSite(
                stmt=sid, function=fname, callee=callee, kind=kind,
                target_values=tuple(row["target"]),
                arg_values=tuple(tuple(pos) for pos in row["args"]),
            ))
        storage = []
        for key in sorted(self.storage, key=expr_key):
            for value, depth in sorted(self.storage[key].items(),
                                       key=lambda kv: kv[0].sort_key()):
                storage.append((key, value, depth))
        flow_after = {}
        for f in self.contract.functions:
            for s in f.statements():
                flow_after[s.sid] = statements_after(f, s.sid)
        return AnalysisResult(
            contract=self.contract.name,
            config=self.cfg,
            inferences=tuple(self.inferences),
            reachability=tuple(self.reach),
            calls=tuple(calls),
            stores=tuple(self.stores),
            loads=tuple(self.loads),
            returns={f: tuple(rows) for f, rows in self.returns.items()},
            storage=tuple(storage),
            truncated=self.truncated,
            notes=tuple(dict.fromkeys(self.notes)),
            functions=tuple((f.name, f.visibility, f.param_names)
                            for f in self.contract.functions),
            flow_after=flow_after,
            internal_calls=tuple(self.internal_edges),
        )


def _conjunction(pc: frozenset) -> Expr:
    if not pc:
        return TRUE
    out = None
    for e in sorted(pc, key=expr_key):
        out = e if out is None else BinOp("AND", out, e)
    return out


def _free_satisfiable(target: Expr) -> bool:
    """A free symbol can make the (normalized, undecided) condition hold
    without committing to a particular value: disequalities and order
    comparisons, unlike equalities, admit almost every value.
    """
    if isinstance(target, Not):
        return bool(free_syms(target.operand))
    if isinstance(target, BinOp):
        if target.op == "LT":
            return bool(free_syms(target))
        if target.op == "OR":
            return (_free_satisfiable(target.left)
                    or _free_satisfiable(target.right))
        if target.op == "AND":
            return (_free_satisfiable(target.left)
                    and _free_satisfiable(target.right))
    return False


def analyze(contract: Contract, config: Optional[AnalysisConfig] = None,
            entry_seeds: Optional[SeedOverrides] = None) -> AnalysisResult:
    """Run the symvalic analysis of one contract to fixpoint.

    entry_seeds optionally replaces the default seed set for selected
    (function, parameter) pairs; everything else follows seed_inputs.
    """
    return _Engine(contract, config or AnalysisConfig(), entry_seeds).run()


# ---------------------------------------------------------------------------
# JSON serialization (schema symvalic-result/1)
# ---------------------------------------------------------------------------

RESULT_SCHEMA_ID = "symvalic-result/1"


def deps_json(d: DependencyMap) -> dict:
    return {
        "local": {var: e.render() for var, e in d.local},
        "tx": {var: e.render() for var, e in d.transaction},
    }


def _values_json(values: Tuple[Tuple[Expr, DependencyMap], ...]) -> list:
    rows = [{"value": v.render(), **deps_json(d)} for v, d in values]
    rows.sort(key=lambda r: (r["value"], str(r["local"]), str(r["tx"])))
    return rows


def _result_json(r: AnalysisResult) -> dict:
    inferences = [
        {"function": i.function, "var": i.var, "value": i.value.render(),
         **deps_json(i.deps)}
        for i in r.inferences
    ]
    inferences.sort(key=lambda row: (row["function"], row["var"], row["value"],
                                     str(row["local"]), str(row["tx"])))
    reach = [
        {"function": f.function, "stmt": f.stmt, **deps_json(f.deps)}
        for f in r.reachability
    ]
    reach.sort(key=lambda row: (row["stmt"], str(row["local"]), str(row["tx"])))
    calls = [
        {
            "stmt": c.stmt, "function": c.function, "callee": c.callee,
            "kind": c.kind,
            "target": _values_json(c.target_values),
            "args": [_values_json(pos) for pos in c.arg_values],
        }
        for c in r.calls
    ]
    cfg = r.config
    return {
        "schema": RESULT_SCHEMA_ID,
        "contract": r.contract,
        "truncated": r.truncated,
        "config": {
            "depArgs": cfg.budget.local_args,
            "depStorageLoads": cfg.budget.storage_loads,
            "depTxArgs": cfg.budget.tx_args,
            "arithDepth": cfg.arithmetic_depth_limit,
            "txRounds": cfg.transaction_rounds,
            "seed": cfg.seed,
        },
        "inferences": inferences,
        "reachability": reach,
        "externalCalls": calls,
        "returns": {
            fname: _values_json(rows)
            for fname, rows in sorted(r.returns.items())
        },
        "storage": [
            {"address": a.render(), "value": v.render(), "depth": depth}
            for a, v, depth in r.storage
        ],
        "notes": list(r.notes),
    }
