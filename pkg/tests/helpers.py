"""Test utilities: a brute-force concrete interpreter (the oracle the engine
is checked against), random expression generators for the reasoner
properties, and a random contract generator for oracle-equivalence runs.

The oracle deliberately shares no evaluation code with the engine: it
re-implements 256-bit semantics inline and models storage addresses as
plain tuples.
"""

from __future__ import annotations

import random
from typing import Optional

from symvalic.ir import Contract
from symvalic.symexpr import (
    BinOp, Concat, Const, Expr, Not, Sha3, Sym,
)

WORD = 1 << 256
MASK = WORD - 1


class Reverted(Exception):
    """A require failed in the concrete run."""


def _arith(op: str, a: int, b: int) -> int:
    if op == "ADD":
        return (a + b) & MASK
    if op == "SUB":
        return (a - b) & MASK
    if op == "MUL":
        return (a * b) & MASK
    if op == "DIV":
        return a // b if b else 0
    if op == "MOD":
        return a % b if b else 0
    if op == "LT":
        return 1 if a < b else 0
    if op == "GT":
        return 1 if a > b else 0
    if op == "EQ":
        return 1 if a == b else 0
    if op == "AND":
        return 1 if (a and b) else 0
    if op == "OR":
        return 1 if (a or b) else 0
    raise AssertionError(op)


def run_concrete(contract: Contract, fn_name: str, args: dict,
                 sender: int = 0xABCD, storage: Optional[dict] = None):
    """Directly interpret one function invocation with concrete values.

    Returns (return value or None, storage after). Storage keys are tuples:
    ('slot', n) for scalars, ('cell', key, slot) for mapping cells.
    Raises Reverted when a require fails; NotImplementedError on calls.
    """
    fn = contract.function(fn_name)
    assert fn is not None
    store = dict(storage or {})
    env = dict(args)
    addr_of: dict[str, tuple] = {}

    def value_of(operand):
        if isinstance(operand, Const):
            return operand.value
        return env[operand]

    block = fn.block(fn.entry_block)
    while True:
        jumped = False
        for s in block.statements:
            op = s.op
            if op == "CONST":
                env[s.result] = s.operands[0].value
            elif op == "CALLER":
                env[s.result] = sender
            elif op == "BINOP":
                if s.binop == "NOT":
                    env[s.result] = 1 if value_of(s.operands[0]) == 0 else 0
                else:
                    env[s.result] = _arith(s.binop, value_of(s.operands[0]),
                                           value_of(s.operands[1]))
            elif op == "CONCAT":
                addr_of[s.result] = ("concat", value_of(s.operands[0]),
                                     value_of(s.operands[1]))
            elif op == "SHA3":
                env_key = addr_of[s.operands[0]]
                addr_of[s.result] = ("cell", env_key[1], env_key[2])
            elif op == "SLOAD":
                a = s.operands[0]
                key = (("slot", a.value) if isinstance(a, Const)
                       else addr_of[a])
                env[s.result] = store.get(key, 0)
            elif op == "SSTORE":
                a = s.operands[0]
                key = (("slot", a.value) if isinstance(a, Const)
                       else addr_of[a])
                store[key] = value_of(s.operands[1])
            elif op == "REQUIRE":
                if value_of(s.operands[0]) == 0:
                    raise Reverted()
            elif op == "BRANCH":
                target = s.targets[0] if value_of(s.operands[0]) else s.targets[1]
                block = fn.block(target)
                jumped = True
                break
            elif op == "JUMP":
                block = fn.block(s.targets[0])
                jumped = True
                break
            elif op == "RETURN":
                if s.operands:
                    return value_of(s.operands[0]), store
                return None, store
            else:
                raise NotImplementedError(op)
        if not jumped:
            raise AssertionError("block fell through without terminator")


# ---------------------------------------------------------------------------
# Random expressions for reasoner properties
# ---------------------------------------------------------------------------

ARITH = ("ADD", "SUB", "MUL", "DIV", "MOD")
CMP = ("LT", "GT", "EQ")


def gen_arith(rng: random.Random, syms: list, depth: int) -> Expr:
    if depth <= 0 or rng.random() < 0.35:
        if syms and rng.random() < 0.5:
            return rng.choice(syms)
        return Const(rng.choice((0, 1, 2, 3, 5, 7, 90, 100, 255,
                                 WORD - 1, WORD - 2)))
    roll = rng.random()
    if roll < 0.08:
        return Sha3(gen_arith(rng, syms, depth - 1))
    if roll < 0.14:
        return Concat(gen_arith(rng, syms, depth - 1),
                      gen_arith(rng, syms, depth - 1))
    return BinOp(rng.choice(ARITH), gen_arith(rng, syms, depth - 1),
                 gen_arith(rng, syms, depth - 1))


def gen_bool(rng: random.Random, syms: list, depth: int) -> Expr:
    if depth <= 0 or rng.random() < 0.3:
        return BinOp(rng.choice(CMP), gen_arith(rng, syms, 1),
                     gen_arith(rng, syms, 1))
    roll = rng.random()
    if roll < 0.25:
        return Not(gen_bool(rng, syms, depth - 1))
    if roll < 0.65:
        return BinOp("AND", gen_bool(rng, syms, depth - 1),
                     gen_bool(rng, syms, depth - 1))
    return BinOp("OR", gen_bool(rng, syms, depth - 1),
                 gen_bool(rng, syms, depth - 1))


def gen_assignment(rng: random.Random, e: Expr) -> dict:
    """Total assignment for e's symbols; distinct bound symbols get distinct
    values (the bound-identity axiom the normalizer relies on)."""
    out = {}
    bound_taken = set()
    for node in e.walk():
        if isinstance(node, Sym) and node.name not in out:
            v = rng.getrandbits(rng.choice((8, 16, 256))) & MASK
            if node.bound:
                while v in bound_taken:
                    v = rng.getrandbits(16)
                bound_taken.add(v)
            out[node.name] = v
    return out


def some_syms(rng: random.Random) -> list:
    pool = [Sym("x", False), Sym("y", False), Sym("z", False),
            Sym("<<owner>>", True), Sym("<<unprivileged-user>>", True)]
    rng.shuffle(pool)
    return pool[: rng.randint(1, 4)]


# ---------------------------------------------------------------------------
# Random contracts for oracle equivalence
# ---------------------------------------------------------------------------


def _gen_body(rng: random.Random, seed_vars: list) -> list:
    """Statement lines: local assignments, an optional require, and one or
    two (possibly nested via sequence) branches over mutable locals."""
    consts = [rng.randint(0, 9) for _ in range(3)]
    vars_avail = list(seed_vars)
    lines = []

    def atom():
        if rng.random() < 0.6 and vars_avail:
            return rng.choice(vars_avail)
        return str(rng.choice(consts))

    def arith(depth=2):
        if depth == 0 or rng.random() < 0.4:
            return atom()
        op = rng.choice("+-*/%")
        return f"({arith(depth - 1)} {op} {arith(depth - 1)})"

    def cond():
        op = rng.choice(("<", ">", "=="))
        c = f"{arith(1)} {op} {arith(1)}"
        if rng.random() < 0.3:
            c = (f"({c}) {rng.choice(('&&', '||'))} "
                 f"({arith(1)} {rng.choice(('<', '>'))} {arith(1)})")
        return c

    locals_only = []
    for i in range(rng.randint(1, 3)):
        name = f"v{i}"
        lines.append(f"{name} = {arith()};")
        vars_avail.append(name)
        locals_only.append(name)
    if rng.random() < 0.5:
        lines.append(f"require({cond()});")
    for _ in range(rng.randint(1, 2)):
        then_var = rng.choice(locals_only)  # parameters are read-only
        body = f"{then_var} = {arith()};"
        if rng.random() < 0.5:
            lines.append(f"if ({cond()}) {{ {body} }}")
        else:
            else_var = rng.choice(locals_only)
            lines.append(f"if ({cond()}) {{ {body} }} else {{ "
                         f"{else_var} = {arith()}; }}")
    lines.append(f"return {rng.choice(vars_avail)};")
    return lines


def _assemble(name: str, params: list, lines: list, decls: str = "",
              ctor: str = "") -> str:
    body = "\n        ".join(lines)
    sig = ", ".join("uint " + p for p in params)
    parts = [f"contract {name} {{"]
    if decls:
        parts.append(decls)
    if ctor:
        parts.append(f"\n    function constructor() internal {{\n{ctor}\n    }}")
    parts.append(f"\n    function run({sig}) public {{\n        {body}\n    }}")
    parts.append("}")
    return "\n".join(parts) + "\n"


def gen_oracle_contract(rng: random.Random, index: int) -> tuple:
    """A straight-line/branching contract over uint params, no storage or
    calls. Returns (source text, fn name, param names)."""
    params = [f"p{i}" for i in range(rng.randint(1, 2))]
    lines = _gen_body(rng, params)
    return _assemble(f"Gen{index}", params, lines), "run", params


def gen_storage_contract(rng: random.Random, index: int) -> tuple:
    """Like gen_oracle_contract but with scalar storage written by the
    constructor and read (never written) by the function, so concrete and
    round-snapshot storage semantics coincide."""
    params = [f"p{i}" for i in range(rng.randint(1, 2))]
    slots = [f"s{i}" for i in range(rng.randint(1, 3))]
    decls = "\n".join(f"    uint {s};" for s in slots)
    ctor = "\n".join(f"        {s} = {rng.randint(0, 50)};"
                     for s in slots if rng.random() < 0.8) or "        noop = 1;"
    reads = [f"r{i} = {rng.choice(slots)};" for i in range(rng.randint(1, 2))]
    lines = reads + _gen_body(rng, params + [f"r{i}" for i in range(len(reads))])
    return (_assemble(f"Stor{index}", params, lines, decls, ctor),
            "run", params)
