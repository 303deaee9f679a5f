"""Symbolic expression algebra and the three reasoner predicates.

Expressions are immutable trees over 256-bit unsigned wraparound arithmetic.
A value is either a concrete constant, a symbolic variable (bound or free),
a binary/unary operation, or one of the two storage-addressing constructors
SHA3 and CONCAT, which are kept uninterpreted and assumed injective.

The reasoner exposes:

  normalize(e)          -- minimal equivalent form (total, idempotent)
  implies(strong, weak) -- True only if provable; False means "unknown"
  value_for_var(v, c)   -- candidate assignments for a free symbol making c true
  eval_concrete(e, ...) -- reference 256-bit evaluator (test oracle)

All four are pure; normalize is memoized but observationally pure.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Union

WORD_BITS = 256
WORD = 1 << WORD_BITS
MASK = WORD - 1
ADDRESS_BITS = 160
ADDRESS_BOUND = 1 << ADDRESS_BITS

ARITH_OPS = ("ADD", "SUB", "MUL", "DIV", "MOD")
CMP_OPS = ("LT", "GT", "EQ")
LOGIC_OPS = ("AND", "OR")
BINOPS = ARITH_OPS + CMP_OPS + LOGIC_OPS
COMMUTATIVE = {"ADD", "MUL", "AND", "OR", "EQ"}
ASSOCIATIVE = {"ADD", "MUL", "AND", "OR"}


class Expr:
    """Base class for expression nodes. Nodes are frozen and hashable."""

    __slots__ = ()

    def render(self) -> str:
        """Canonical printed form, e.g. SHA3(CONCAT(<<owner>>, 0x0))."""
        raise NotImplementedError

    def sort_key(self) -> tuple:
        """Total order: Const < Sym < composite, then structural."""
        raise NotImplementedError

    def children(self) -> tuple["Expr", ...]:
        return ()

    def walk(self) -> Iterator["Expr"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"Expr[{self.render()}]"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    """Concrete 256-bit value. hex_hint only affects printing."""

    value: int
    hex_hint: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not (0 <= self.value < WORD):
            raise ValueError(f"constant out of 256-bit range: {self.value}")

    def render(self) -> str:
        return hex(self.value) if self.hex_hint else str(self.value)

    def sort_key(self) -> tuple:
        return (0, self.value)


@dataclass(frozen=True, repr=False)
class Sym(Expr):
    """Symbolic variable. Bound symbols model fixed identities the caller
    cannot choose; free symbols may be concretized by the solver."""

    name: str
    bound: bool

    def render(self) -> str:
        return self.name

    def sort_key(self) -> tuple:
        return (1, self.name)


@dataclass(frozen=True, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINOPS:
            raise ValueError(f"unknown binop {self.op}")

    def render(self) -> str:
        return f"{self.op}({self.left.render()}, {self.right.render()})"

    def sort_key(self) -> tuple:
        return (2, self.op, self.left.sort_key(), self.right.sort_key())

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, repr=False)
class Not(Expr):
    operand: Expr

    def render(self) -> str:
        return f"NOT({self.operand.render()})"

    def sort_key(self) -> tuple:
        return (2, "NOT", self.operand.sort_key())

    def children(self):
        return (self.operand,)


@dataclass(frozen=True, repr=False)
class Sha3(Expr):
    operand: Expr

    def render(self) -> str:
        return f"SHA3({self.operand.render()})"

    def sort_key(self) -> tuple:
        return (2, "SHA3", self.operand.sort_key())

    def children(self):
        return (self.operand,)


@dataclass(frozen=True, repr=False)
class Concat(Expr):
    left: Expr
    right: Expr

    def render(self) -> str:
        return f"CONCAT({self.left.render()}, {self.right.render()})"

    def sort_key(self) -> tuple:
        return (2, "CONCAT", self.left.sort_key(), self.right.sort_key())

    def children(self):
        return (self.left, self.right)


TRUE = Const(1)
FALSE = Const(0)

# The four distinguished identity symbols.
OWNER = Sym("<<owner>>", bound=True)
UNPRIVILEGED_USER = Sym("<<unprivileged-user>>", bound=True)
OWNER_UNIQUE = Sym("<<owner-unique-value>>", bound=False)
USER_UNIQUE = Sym("<<user-unique-value>>", bound=False)

IDENTITY_SYMBOLS = (OWNER, UNPRIVILEGED_USER, OWNER_UNIQUE, USER_UNIQUE)
FREE_IDENTITY_SYMBOLS = (OWNER_UNIQUE, USER_UNIQUE)


def contract_symbol(name: str) -> Sym:
    """Opaque bound symbol for an external contract referenced by name."""
    return Sym(f"<<contract:{name}>>", bound=True)


def expr_key(e: Expr) -> tuple:
    """Sort key usable on heterogeneous Expr collections."""
    return e.sort_key()


def is_const(e: Expr) -> bool:
    return isinstance(e, Const)


def is_truthy_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.value != 0


def is_falsy_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def free_syms(e: Expr) -> tuple[Sym, ...]:
    """Free symbolic variables of e, deduplicated, in canonical order."""
    seen = {n for n in e.walk() if isinstance(n, Sym) and not n.bound}
    return tuple(sorted(seen, key=expr_key))


def contains_sym(e: Expr, sym: Sym) -> bool:
    return any(n == sym for n in e.walk())


def substitute(e: Expr, mapping: Mapping[Sym, Expr]) -> Expr:
    """Replace symbols per mapping. Result is not normalized."""
    if not mapping:
        return e
    if isinstance(e, Sym):
        return mapping.get(e, e)
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Not):
        return Not(substitute(e.operand, mapping))
    if isinstance(e, Sha3):
        return Sha3(substitute(e.operand, mapping))
    if isinstance(e, Concat):
        return Concat(substitute(e.left, mapping), substitute(e.right, mapping))
    return e


# ---------------------------------------------------------------------------
# normalize
# ---------------------------------------------------------------------------

_norm_cache: dict[Expr, Expr] = {}


def normalize(e: Expr) -> Expr:
    """Minimal equivalent form under 256-bit wraparound semantics.

    Guarantees: constant subterms folded (no BinOp with two Const children),
    commutative operands canonically ordered, the standard identities applied
    (x+0, x*1, x*0, x-x, x&&true, x&&false, !!x, x==x) plus sound extras:
    associative const gathering for ADD/MUL, GT -> swapped LT, unsigned
    facts (x<0 is false, x%1 is 0), SHA3/CONCAT injectivity peeling, and
    disequality of distinct bound identity symbols.
    """
    if isinstance(e, (Const, Sym)):
        return e  # leaves are their own normal form (keeps display hints)
    cached = _norm_cache.get(e)
    if cached is not None:
        return cached
    result = _normalize(e)
    _norm_cache[e] = result
    _norm_cache[result] = result
    return result


def _normalize(e: Expr) -> Expr:
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Sha3):
        return Sha3(normalize(e.operand))
    if isinstance(e, Concat):
        return Concat(normalize(e.left), normalize(e.right))
    if isinstance(e, Not):
        x = normalize(e.operand)
        if isinstance(x, Const):
            return FALSE if x.value != 0 else TRUE
        if isinstance(x, Not):
            return x.operand
        return Not(x)
    assert isinstance(e, BinOp)
    left = normalize(e.left)
    right = normalize(e.right)
    op = e.op
    if op == "GT":
        return _norm_binop("LT", right, left)
    return _norm_binop(op, left, right)


def _norm_binop(op: str, left: Expr, right: Expr) -> Expr:
    """Normalize a BinOp whose children are already normalized."""
    if op in ASSOCIATIVE:
        return _rebuild_assoc(op, left, right)

    if isinstance(left, Const) and isinstance(right, Const):
        return Const(_fold(op, left.value, right.value))

    if op == "SUB":
        if is_falsy_const(right):
            return left
        if left == right:
            return FALSE
    elif op == "DIV":
        if is_falsy_const(right) or is_falsy_const(left):
            return FALSE
        if isinstance(right, Const) and right.value == 1:
            return left
    elif op == "MOD":
        if isinstance(right, Const) and right.value <= 1:
            return FALSE
        if is_falsy_const(left) or left == right:
            return FALSE
    elif op == "LT":
        if is_falsy_const(right) or left == right:
            return FALSE
    elif op == "EQ":
        folded = _norm_eq(left, right)
        if folded is not None:
            return folded
        if right.sort_key() < left.sort_key():
            left, right = right, left
    return BinOp(op, left, right)


def _norm_eq(left: Expr, right: Expr) -> Optional[Expr]:
    if left == right:
        return TRUE
    if isinstance(left, Sym) and isinstance(right, Sym) and left.bound and right.bound:
        # Distinct bound identities never coincide (modeling axiom).
        return FALSE
    if isinstance(left, Sha3) and isinstance(right, Sha3):
        # SHA3 assumed injective: peel the constructor.
        return normalize(BinOp("EQ", left.operand, right.operand))
    if isinstance(left, Concat) and isinstance(right, Concat):
        return normalize(
            BinOp(
                "AND",
                BinOp("EQ", left.left, right.left),
                BinOp("EQ", left.right, right.right),
            )
        )
    return None


def _assoc_leaves(op: str, e: Expr) -> Iterator[Expr]:
    if isinstance(e, BinOp) and e.op == op:
        yield from _assoc_leaves(op, e.left)
        yield from _assoc_leaves(op, e.right)
    else:
        yield e


def _rebuild_assoc(op: str, left: Expr, right: Expr) -> Expr:
    """Flatten an ADD/MUL/AND/OR chain, fold constants, apply identities,
    and rebuild with sorted operands (confluent canonical form)."""
    leaves = list(_assoc_leaves(op, left)) + list(_assoc_leaves(op, right))
    if op in ("ADD", "MUL"):
        acc = 0 if op == "ADD" else 1
        rest = []
        for leaf in leaves:
            if isinstance(leaf, Const):
                acc = _fold(op, acc, leaf.value)
            else:
                rest.append(leaf)
        if op == "MUL" and acc == 0:
            return FALSE
        if not rest:
            return Const(acc)
        if (op == "ADD" and acc != 0) or (op == "MUL" and acc != 1):
            rest.append(Const(acc))
    else:
        absorber = op == "OR"  # a truthy leaf absorbs OR; falsy absorbs AND
        rest = []
        seen = set()
        for leaf in leaves:
            if isinstance(leaf, Const):
                if (leaf.value != 0) == absorber:
                    return TRUE if absorber else FALSE
                continue  # neutral constant drops out
            if leaf not in seen:  # x && x -> x (boolean idempotence)
                seen.add(leaf)
                rest.append(leaf)
        if not rest:
            return FALSE if absorber else TRUE
    rest.sort(key=expr_key)
    out = rest[0]
    for leaf in rest[1:]:
        out = BinOp(op, out, leaf)
    return out


def _fold(op: str, a: int, b: int) -> int:
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
        return int(a < b)
    if op == "GT":
        return int(a > b)
    if op == "EQ":
        return int(a == b)
    if op == "AND":
        return int(a != 0 and b != 0)
    if op == "OR":
        return int(a != 0 or b != 0)
    raise AssertionError(op)


# ---------------------------------------------------------------------------
# implies
# ---------------------------------------------------------------------------


def conjuncts(e: Expr) -> tuple[Expr, ...]:
    """Flatten a normalized AND tree into its conjuncts."""
    return tuple(_assoc_leaves("AND", e))


def implies(strong: Expr, weak: Expr) -> bool:
    """Prove strong => weak for every concrete assignment.

    Deliberately incomplete: returns True only when a cheap syntactic
    argument exists (normalization, conjunct subsumption, interval facts
    on single comparisons against constants). False means "unknown".
    """
    s = normalize(strong)
    w = normalize(weak)
    if is_falsy_const(s) or is_truthy_const(w):
        return True
    if s == w:
        return True
    if isinstance(s, BinOp) and s.op == "OR":
        return implies(s.left, w) and implies(s.right, w)
    have = conjuncts(s)
    if any(is_falsy_const(c) for c in have):
        return True
    return all(_prove_one(have, c) for c in conjuncts(w))


def _prove_one(have: tuple[Expr, ...], goal: Expr) -> bool:
    if is_truthy_const(goal):
        return True
    if goal in have:
        return True
    if isinstance(goal, BinOp) and goal.op == "OR":
        return any(_prove_one(have, d) for d in _assoc_leaves("OR", goal))
    return _prove_interval(have, goal)


def _cmp_shape(e: Expr):
    """Decompose a comparison against a constant: (subject, 'lt'|'gt'|'eq', k)."""
    if not isinstance(e, BinOp):
        return None
    if e.op == "LT":
        if isinstance(e.right, Const) and not isinstance(e.left, Const):
            return (e.left, "lt", e.right.value)
        if isinstance(e.left, Const) and not isinstance(e.right, Const):
            return (e.right, "gt", e.left.value)
    if e.op == "EQ" and isinstance(e.left, Const) and not isinstance(e.right, Const):
        return (e.right, "eq", e.left.value)
    return None


def _prove_interval(have: tuple[Expr, ...], goal: Expr) -> bool:
    g = _cmp_shape(goal)
    if g is None:
        return False
    subject, rel, k = g
    for h in have:
        hs = _cmp_shape(h)
        if hs is None or hs[0] != subject:
            continue
        _, hrel, hk = hs
        if rel == "lt" and ((hrel == "lt" and hk <= k) or (hrel == "eq" and hk < k)):
            return True
        if rel == "gt" and ((hrel == "gt" and hk >= k) or (hrel == "eq" and hk > k)):
            return True
        if rel == "eq" and hrel == "eq" and hk == k:
            return True
    return False


# ---------------------------------------------------------------------------
# value_for_var
# ---------------------------------------------------------------------------


def value_for_var(var: Sym, constraint: Expr) -> tuple[Expr, ...]:
    """Candidate assignments for free symbol var that satisfy constraint.

    Candidates come from equalities (the productive case); each one is
    verified by substitution + normalization before being returned. The
    result may be empty (the predicate is incomplete by design).
    """
    if var.bound:
        raise ValueError(f"value_for_var requires a free symbol, got {var.name}")
    c = normalize(constraint)
    out: list[Expr] = []
    seen: set[Expr] = set()
    for cand in _equality_candidates(var, c):
        if cand in seen:
            continue
        seen.add(cand)
        if is_truthy_const(normalize(substitute(c, {var: cand}))):
            out.append(cand)
    out.sort(key=expr_key)
    return tuple(out)


def _equality_candidates(var: Sym, c: Expr) -> Iterator[Expr]:
    if isinstance(c, BinOp):
        if c.op == "EQ":
            if c.left == var and not contains_sym(c.right, var):
                yield c.right
            if c.right == var and not contains_sym(c.left, var):
                yield c.left
        elif c.op in ("AND", "OR"):
            yield from _equality_candidates(var, c.left)
            yield from _equality_candidates(var, c.right)


# ---------------------------------------------------------------------------
# eval_concrete
# ---------------------------------------------------------------------------

HashOracle = Callable[[bytes], bytes]


def default_hash_oracle(data: bytes) -> bytes:
    """Fixed cryptographic hash standing in for Keccak-256."""
    return hashlib.sha3_256(data).digest()


Assignment = Mapping[str, int]


def eval_concrete(
    e: Expr,
    assignment: Assignment,
    hash_oracle: HashOracle = default_hash_oracle,
) -> int:
    """Evaluate e to a 256-bit integer under a total symbol assignment.

    Booleans are 0/1; DIV/MOD by zero yield 0; SHA3 hashes the byte image
    of its operand (constants and symbols as 32-byte big-endian words,
    CONCAT as juxtaposition). Raises KeyError if a symbol is unassigned.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Sym):
        return assignment[e.name] & MASK
    if isinstance(e, BinOp):
        if e.op == "AND":  # short-circuit; same result, total either way
            if eval_concrete(e.left, assignment, hash_oracle) == 0:
                return 0
            return int(eval_concrete(e.right, assignment, hash_oracle) != 0)
        if e.op == "OR":
            if eval_concrete(e.left, assignment, hash_oracle) != 0:
                return 1
            return int(eval_concrete(e.right, assignment, hash_oracle) != 0)
        return _fold(
            e.op,
            eval_concrete(e.left, assignment, hash_oracle),
            eval_concrete(e.right, assignment, hash_oracle),
        )
    if isinstance(e, Not):
        return int(eval_concrete(e.operand, assignment, hash_oracle) == 0)
    if isinstance(e, Sha3):
        img = _byte_image(e.operand, assignment, hash_oracle)
        return int.from_bytes(hash_oracle(img), "big") & MASK
    if isinstance(e, Concat):
        img = _byte_image(e, assignment, hash_oracle)
        return int.from_bytes(img, "big") & MASK
    raise TypeError(f"not an Expr: {e!r}")


def _byte_image(e: Expr, assignment: Assignment, hash_oracle: HashOracle) -> bytes:
    if isinstance(e, Concat):
        return _byte_image(e.left, assignment, hash_oracle) + _byte_image(
            e.right, assignment, hash_oracle
        )
    if isinstance(e, Sha3):
        return hash_oracle(_byte_image(e.operand, assignment, hash_oracle))
    return eval_concrete(e, assignment, hash_oracle).to_bytes(32, "big")


ExprLike = Union[Expr, int]


def as_expr(v: ExprLike, hex_hint: bool = False) -> Expr:
    """Coerce an int to a Const; pass Exprs through."""
    if isinstance(v, Expr):
        return v
    return Const(v & MASK, hex_hint=hex_hint)
