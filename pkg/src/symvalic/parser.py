"""Surface-format (.svc) parser and lowering to the contract IR.

Grammar (keywords bit-exact):

    contract NAME { storage-decl* function-decl* }
    storage-decl  := ("address" | "uint" | "mapping") NAME ";"
    function-decl := "function" NAME "(" params ")" ("public"|"internal")
                     "{" stmt* "}"
    stmt := NAME "=" expr ";"
          | NAME "[" expr "]" "=" expr ";"
          | "require" "(" expr ")" ";"
          | "if" "(" expr ")" "{" stmt* "}" ["else" "{" stmt* "}"]
          | "call" NAME "." NAME "(" args ")" ";"      -- external call
          | "call" NAME "(" args ")" ";"               -- internal call
          | "transfer" "(" expr "," expr ")" ";"
          | "selfdestruct" "(" expr ")" ";"
          | "delegatecall" "(" expr ")" ";"
          | "return" [expr] ";"

Expressions: `+ - * / % < > == && || !`, decimal/0x literals, msg.sender,
NAME, NAME[expr], parentheses. Storage slots are assigned in declaration
order from 0. A function named `constructor` is the initializer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Tuple

from .ir import (
    CONSTRUCTOR_NAME, BasicBlock, Contract, Function, IRError, LiteralUse,
    Statement, StorageDecl, validate,
)
from .symexpr import Const, WORD


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

KEYWORDS = {
    "contract", "address", "uint", "bool", "mapping", "function", "public",
    "internal", "require", "if", "else", "call", "transfer", "selfdestruct",
    "delegatecall", "return", "msg",
}

PUNCT = ("&&", "||", "==", "{", "}", "(", ")", "[", "]", ";", ",", ".",
         "=", "+", "-", "*", "/", "%", "<", ">", "!")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "keyword" | "number" | "punct" | "eof"
    text: str
    value: int = 0
    hex_form: bool = False
    line: int = 0
    col: int = 0


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            start, scol = i, col
            if text.startswith("0x", i) or text.startswith("0X", i):
                i += 2
                while i < n and text[i] in "0123456789abcdefABCDEF":
                    i += 1
                lit = text[start:i]
                if len(lit) == 2:
                    raise ParseError("malformed hex literal", line, scol)
                value, hex_form = int(lit, 16), True
            else:
                while i < n and text[i].isdigit():
                    i += 1
                value, hex_form = int(text[start:i]), False
            if value >= WORD:
                raise ParseError("literal exceeds 256 bits", line, scol)
            col += i - start
            toks.append(Token("number", text[start:i], value, hex_form, line, scol))
            continue
        if ch.isalpha() or ch == "_":
            start, scol = i, col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            col += i - start
            kind = "keyword" if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, line=line, col=scol))
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                toks.append(Token("punct", p, line=line, col=col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line=line, col=col))
    return toks


# ---------------------------------------------------------------------------
# Surface AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ENum:
    value: int
    hex_form: bool = False


@dataclass(frozen=True)
class EVar:
    name: str


@dataclass(frozen=True)
class ESender:
    pass


@dataclass(frozen=True)
class EIndex:
    mapping: str
    key: "ExprAst"


@dataclass(frozen=True)
class EBin:
    op: str  # surface operator text
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class ENot:
    operand: "ExprAst"


ExprAst = object


@dataclass(frozen=True)
class SAssign:
    target: str
    key: Optional[ExprAst]  # mapping subscript, if any
    value: ExprAst
    line: int = 0


@dataclass(frozen=True)
class SRequire:
    cond: ExprAst
    line: int = 0


@dataclass(frozen=True)
class SIf:
    cond: ExprAst
    then: Tuple
    els: Tuple
    has_else: bool
    line: int = 0


@dataclass(frozen=True)
class SCall:
    target: Optional[str]  # None for internal calls
    callee: str
    args: Tuple
    line: int = 0


@dataclass(frozen=True)
class SIntrinsic:
    op: str  # TRANSFER | SELFDESTRUCT | DELEGATECALL
    args: Tuple
    line: int = 0


@dataclass(frozen=True)
class SReturn:
    value: Optional[ExprAst]
    line: int = 0


@dataclass(frozen=True)
class FuncAst:
    name: str
    params: Tuple[Tuple[str, str], ...]
    visibility: str
    body: Tuple
    line: int = 0


@dataclass(frozen=True)
class ContractAst:
    name: str
    decls: Tuple[Tuple[str, str], ...]  # (kind keyword, name)
    functions: Tuple[FuncAst, ...]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_BIN_LEVELS = (("||",), ("&&",), ("==",), ("<", ">"), ("+", "-"), ("*", "/", "%"))


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, msg: str, tok: Optional[Token] = None):
        t = tok or self.peek()
        raise ParseError(msg, t.line, t.col)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            self.fail(f"expected {want!r}, found {t.text or t.kind!r}")
        return self.next()

    def accept(self, kind: str, text: str) -> bool:
        t = self.peek()
        if t.kind == kind and t.text == text:
            self.next()
            return True
        return False

    def parse_contract(self) -> ContractAst:
        self.expect("keyword", "contract")
        name = self.expect("ident").text
        self.expect("punct", "{")
        decls: list[Tuple[str, str]] = []
        while self.peek().kind == "keyword" and self.peek().text in (
                "address", "uint", "mapping"):
            kind = self.next().text
            dname = self.expect("ident").text
            self.expect("punct", ";")
            decls.append((kind, dname))
        funcs: list[FuncAst] = []
        while self.peek().kind == "keyword" and self.peek().text == "function":
            funcs.append(self.parse_function())
        self.expect("punct", "}")
        self.expect("eof")
        return ContractAst(name, tuple(decls), tuple(funcs))

    def parse_function(self) -> FuncAst:
        start = self.expect("keyword", "function")
        name = self.expect("ident")
        self.expect("punct", "(")
        params: list[Tuple[str, str]] = []
        if not self.accept("punct", ")"):
            while True:
                ptype = self.peek()
                if ptype.kind != "keyword" or ptype.text not in ("uint", "address", "bool"):
                    self.fail("expected parameter type (uint, address, bool)")
                self.next()
                pname = self.expect("ident").text
                params.append((pname, {"uint": "uint256"}.get(ptype.text, ptype.text)))
                if self.accept("punct", ")"):
                    break
                self.expect("punct", ",")
        vis = self.peek()
        if vis.kind != "keyword" or vis.text not in ("public", "internal"):
            self.fail("expected visibility (public or internal)")
        self.next()
        body = self.parse_block_stmts()
        return FuncAst(name.text, tuple(params), vis.text, body, start.line)

    def parse_block_stmts(self) -> Tuple:
        self.expect("punct", "{")
        stmts = []
        while not self.accept("punct", "}"):
            stmts.append(self.parse_stmt())
        return tuple(stmts)

    def parse_stmt(self):
        t = self.peek()
        if t.kind == "keyword":
            if t.text == "require":
                self.next()
                self.expect("punct", "(")
                cond = self.parse_expr()
                self.expect("punct", ")")
                self.expect("punct", ";")
                return SRequire(cond, t.line)
            if t.text == "if":
                self.next()
                self.expect("punct", "(")
                cond = self.parse_expr()
                self.expect("punct", ")")
                then = self.parse_block_stmts()
                els: Tuple = ()
                has_else = False
                if self.accept("keyword", "else"):
                    els = self.parse_block_stmts()
                    has_else = True
                return SIf(cond, then, els, has_else, t.line)
            if t.text == "call":
                self.next()
                first = self.expect("ident").text
                if self.accept("punct", "."):
                    callee = self.expect("ident").text
                    target: Optional[str] = first
                else:
                    callee, target = first, None
                args = self.parse_args()
                self.expect("punct", ";")
                return SCall(target, callee, args, t.line)
            if t.text == "transfer":
                self.next()
                args = self.parse_args()
                if len(args) != 2:
                    self.fail("transfer takes (to, amount)", t)
                self.expect("punct", ";")
                return SIntrinsic("TRANSFER", args, t.line)
            if t.text in ("selfdestruct", "delegatecall"):
                self.next()
                args = self.parse_args()
                if len(args) != 1:
                    self.fail(f"{t.text} takes one argument", t)
                self.expect("punct", ";")
                return SIntrinsic(t.text.upper(), args, t.line)
            if t.text == "return":
                self.next()
                value = None
                if not (self.peek().kind == "punct" and self.peek().text == ";"):
                    value = self.parse_expr()
                self.expect("punct", ";")
                return SReturn(value, t.line)
            self.fail(f"unexpected keyword {t.text!r}")
        if t.kind == "ident":
            name = self.next().text
            key = None
            if self.accept("punct", "["):
                key = self.parse_expr()
                self.expect("punct", "]")
            self.expect("punct", "=")
            value = self.parse_expr()
            self.expect("punct", ";")
            return SAssign(name, key, value, t.line)
        self.fail("expected statement")

    def parse_args(self) -> Tuple:
        self.expect("punct", "(")
        args = []
        if not self.accept("punct", ")"):
            while True:
                args.append(self.parse_expr())
                if self.accept("punct", ")"):
                    break
                self.expect("punct", ",")
        return tuple(args)

    def parse_expr(self, level: int = 0):
        if level == len(_BIN_LEVELS):
            return self.parse_unary()
        node = self.parse_expr(level + 1)
        ops = _BIN_LEVELS[level]
        while self.peek().kind == "punct" and self.peek().text in ops:
            op = self.next().text
            rhs = self.parse_expr(level + 1)
            node = EBin(op, node, rhs)
        return node

    def parse_unary(self):
        if self.peek().kind == "punct" and self.peek().text == "!":
            self.next()
            return ENot(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        t = self.peek()
        if t.kind == "number":
            self.next()
            return ENum(t.value, t.hex_form)
        if t.kind == "keyword" and t.text == "msg":
            self.next()
            self.expect("punct", ".")
            sender = self.expect("ident")
            if sender.text != "sender":
                self.fail("expected msg.sender", sender)
            return ESender()
        if t.kind == "punct" and t.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect("punct", ")")
            return inner
        if t.kind == "ident":
            self.next()
            if self.accept("punct", "["):
                key = self.parse_expr()
                self.expect("punct", "]")
                return EIndex(t.text, key)
            return EVar(t.text)
        self.fail("expected expression")


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------

_SURFACE_TO_BINOP = {"+": "ADD", "-": "SUB", "*": "MUL", "/": "DIV", "%": "MOD",
                     "<": "LT", ">": "GT", "==": "EQ", "&&": "AND", "||": "OR"}

_TEMP_RE = re.compile(r"t\d+\Z")


def _check_name(name: str, line: int):
    if _TEMP_RE.match(name):
        raise ParseError(f"{name!r} is reserved for lowering temps", line, 0)


class _Lowerer:
    def __init__(self, ast: ContractAst):
        self.ast = ast
        self.storage: dict[str, StorageDecl] = {}
        for slot, (kind, name) in enumerate(ast.decls):
            _check_name(name, 0)
            if name in self.storage:
                raise ParseError(f"duplicate storage name {name}", 0, 0)
            skind = "mapping" if kind == "mapping" else "scalar"
            self.storage[name] = StorageDecl(name, slot, skind)
        self.storage_types = {name: ("address" if kind == "address" else "uint256")
                              for (kind, name) in ast.decls if kind != "mapping"}
        self.fn_names = {f.name for f in ast.functions}
        self.literals: list[LiteralUse] = []
        self.sid = 0

    def fresh_sid(self) -> int:
        self.sid += 1
        return self.sid - 1

    def lower(self) -> Contract:
        functions = tuple(self.lower_function(f) for f in self.ast.functions)
        contract = Contract(
            name=self.ast.name,
            storage=tuple(self.storage[name] for _, name in self.ast.decls),
            functions=functions,
            literal_uses=tuple(self.literals),
            source_ast=self.ast,
        )
        try:
            validate(contract)
        except IRError as err:  # lowering must never construct invalid IR
            raise AssertionError(f"lowering produced invalid IR: {err}") from err
        return contract

    def lower_function(self, fast: FuncAst) -> Function:
        fl = _FnLowerer(self, fast)
        return fl.run()


class _FnLowerer:
    def __init__(self, outer: _Lowerer, fast: FuncAst):
        self.o = outer
        self.fast = fast
        self.blocks: list[BasicBlock] = []
        self.current = self.new_block()
        self.temp = 0
        self.locals: dict[str, str] = {}  # name -> shallow semantic type
        self.param_names = frozenset(p for p, _ in fast.params)
        _check_name(fast.name, fast.line)
        for pname, ptype in fast.params:
            _check_name(pname, fast.line)
            if pname in self.locals or pname in outer.storage:
                raise ParseError(f"duplicate name {pname}", fast.line, 0)
            self.locals[pname] = ptype

    def new_block(self) -> BasicBlock:
        b = BasicBlock(f"{self.fast.name}.b{len(self.blocks)}")
        self.blocks.append(b)
        return b

    def fresh_temp(self) -> str:
        name = f"t{self.temp}"
        self.temp += 1
        return name

    def emit(self, op: str, operands=(), result=None, binop=None, callee=None,
             targets=(), line=0) -> Statement:
        s = Statement(self.o.fresh_sid(), op, tuple(operands), result, binop,
                      callee, tuple(targets), line)
        self.current.statements.append(s)
        return s

    @property
    def terminated(self) -> bool:
        return bool(self.current.statements) and (
            self.current.statements[-1].op in ("BRANCH", "JUMP", "RETURN",
                                               "SELFDESTRUCT"))

    def run(self) -> Function:
        self.lower_stmts(self.fast.body)
        if not self.terminated:
            self.emit("RETURN")
        return Function(
            name=self.fast.name,
            visibility=self.fast.visibility,
            params=self.fast.params,
            blocks=self.blocks,
            entry_block=self.blocks[0].bid,
        )

    def lower_stmts(self, stmts):
        for s in stmts:
            if self.terminated:
                raise ParseError("unreachable statement after terminator",
                                 getattr(s, "line", 0), 0)
            self.lower_stmt(s)

    # -- expressions ---------------------------------------------------

    def expr_type(self, e) -> str:
        if isinstance(e, ESender):
            return "address"
        if isinstance(e, EVar):
            if e.name in self.locals:
                return self.locals[e.name]
            return self.o.storage_types.get(e.name, "uint256")
        if isinstance(e, EBin) and e.op in ("==", "<", ">", "&&", "||"):
            return "bool"
        if isinstance(e, ENot):
            return "bool"
        return "uint256"

    def note_literal(self, e, address_position: bool):
        if isinstance(e, ENum):
            self.o.literals.append(LiteralUse(e.value, address_position, e.hex_form))

    def scan_literals(self, e, address_position: bool = False):
        """Record literal uses, marking address positions."""
        if isinstance(e, ENum):
            self.note_literal(e, address_position)
        elif isinstance(e, EIndex):
            self.scan_literals(e.key, address_position=True)
        elif isinstance(e, EBin):
            addr_cmp = e.op == "==" and (
                self.expr_type(e.left) == "address"
                or self.expr_type(e.right) == "address")
            self.scan_literals(e.left, addr_cmp)
            self.scan_literals(e.right, addr_cmp)
        elif isinstance(e, ENot):
            self.scan_literals(e.operand)

    def lower_operand(self, e, line=0):
        """Lower an expression to an operand (var name or literal Const)."""
        if isinstance(e, ENum):
            return Const(e.value, hex_hint=e.hex_form)
        if isinstance(e, EVar) and e.name in self.locals:
            return e.name
        return self.lower_into(e, None, line)

    def lower_into(self, e, result: Optional[str], line=0) -> str:
        """Lower e so its value lands in `result` (a fresh temp when None,
        allocated after the operands so temp numbering follows emission
        order). Returns the actual result name."""
        if isinstance(e, ENum):
            return self.emit("CONST", [Const(e.value, hex_hint=e.hex_form)],
                             result=result or self.fresh_temp(), line=line).result
        if isinstance(e, ESender):
            return self.emit("CALLER", [], result=result or self.fresh_temp(),
                             line=line).result
        if isinstance(e, EVar):
            name = e.name
            if name in self.locals:
                # plain variable copy, encoded as x + 0
                return self.emit("BINOP", [name, Const(0)],
                                 result=result or self.fresh_temp(),
                                 binop="ADD", line=line).result
            decl = self.o.storage.get(name)
            if decl is None:
                raise ParseError(f"reference to undeclared name {name}", line, 0)
            if decl.kind == "mapping":
                raise ParseError(f"mapping {name} used without a key", line, 0)
            return self.emit("SLOAD", [Const(decl.slot, hex_hint=True)],
                             result=result or self.fresh_temp(),
                             line=line).result
        if isinstance(e, EIndex):
            addr = self.lower_cell_address(e, line)
            return self.emit("SLOAD", [addr],
                             result=result or self.fresh_temp(),
                             line=line).result
        if isinstance(e, EBin):
            left = self.lower_operand(e.left, line)
            right = self.lower_operand(e.right, line)
            return self.emit("BINOP", [left, right],
                             result=result or self.fresh_temp(),
                             binop=_SURFACE_TO_BINOP[e.op], line=line).result
        if isinstance(e, ENot):
            x = self.lower_operand(e.operand, line)
            return self.emit("BINOP", [x], result=result or self.fresh_temp(),
                             binop="NOT", line=line).result
        raise AssertionError(e)

    def lower_cell_address(self, e: EIndex, line=0) -> str:
        decl = self.o.storage.get(e.mapping)
        if decl is None:
            raise ParseError(f"reference to undeclared name {e.mapping}", line, 0)
        if decl.kind != "mapping":
            raise ParseError(f"{e.mapping} is not a mapping", line, 0)
        key = self.lower_operand(e.key, line)
        t0 = self.fresh_temp()
        self.emit("CONCAT", [key, Const(decl.slot, hex_hint=True)], result=t0,
                  line=line)
        t1 = self.fresh_temp()
        self.emit("SHA3", [t0], result=t1, line=line)
        return t1

    # -- statements ----------------------------------------------------

    def lower_stmt(self, s):
        if isinstance(s, SAssign):
            self.lower_assign(s)
        elif isinstance(s, SRequire):
            self.scan_literals(s.cond)
            cond = self.lower_operand(s.cond, s.line)
            self.emit("REQUIRE", [cond], line=s.line)
        elif isinstance(s, SIf):
            self.lower_if(s)
        elif isinstance(s, SCall):
            self.lower_call(s)
        elif isinstance(s, SIntrinsic):
            first_is_addr = True  # to / beneficiary / target
            for i, a in enumerate(s.args):
                self.scan_literals(a, address_position=(i == 0 and first_is_addr))
            ops = [self.lower_operand(a, s.line) for a in s.args]
            self.emit(s.op, ops, line=s.line)
        elif isinstance(s, SReturn):
            if s.value is None:
                self.emit("RETURN", [], line=s.line)
            else:
                self.scan_literals(s.value)
                v = self.lower_operand(s.value, s.line)
                self.emit("RETURN", [v], line=s.line)
        else:
            raise AssertionError(s)

    def lower_assign(self, s: SAssign):
        if s.key is not None:
            self.scan_literals(s.key, address_position=True)
            self.scan_literals(s.value)
            addr = self.lower_cell_address(EIndex(s.target, s.key), s.line)
            value = self.lower_operand(s.value, s.line)
            self.emit("SSTORE", [addr, value], line=s.line)
            return
        decl = self.o.storage.get(s.target)
        if decl is not None:
            if decl.kind == "mapping":
                raise ParseError(f"mapping {s.target} assigned without a key",
                                 s.line, 0)
            target_type = self.o.storage_types.get(s.target, "uint256")
            self.scan_literals(s.value, address_position=target_type == "address")
            value = self.lower_operand(s.value, s.line)
            self.emit("SSTORE", [Const(decl.slot, hex_hint=True), value],
                      line=s.line)
            return
        # local (auto-declared on first assignment); parameters always
        # denote the caller-supplied values and cannot be reassigned
        if s.target in self.param_names:
            raise ParseError(f"cannot assign to parameter {s.target}",
                             s.line, 0)
        self.scan_literals(s.value,
                           address_position=self.locals.get(s.target) == "address")
        _check_name(s.target, s.line)
        self.lower_into(s.value, s.target, s.line)
        if s.target not in self.locals:
            self.locals[s.target] = self.expr_type(s.value)

    def lower_if(self, s: SIf):
        self.scan_literals(s.cond)
        cond = self.lower_operand(s.cond, s.line)
        branch = self.emit("BRANCH", [cond], line=s.line)

        then_block = self.new_block()
        self.current = then_block
        self.lower_stmts(s.then)
        then_end, then_done = self.current, self.terminated

        else_block = self.new_block()
        self.current = else_block
        self.lower_stmts(s.els)
        else_end, else_done = self.current, self.terminated

        join = self.new_block()
        if not then_done:
            self.current = then_end
            self.emit("JUMP", targets=[join.bid], line=s.line)
        if not else_done:
            self.current = else_end
            self.emit("JUMP", targets=[join.bid], line=s.line)
        branch.targets = (then_block.bid, else_block.bid)
        self.current = join
        if then_done and else_done:
            # join unreachable; it still needs a terminator
            self.emit("RETURN", [], line=s.line)

    def lower_call(self, s: SCall):
        for a in s.args:
            self.scan_literals(a)
        if s.target is None:
            if s.callee not in self.o.fn_names:
                raise ParseError(f"internal call to unknown function {s.callee}",
                                 s.line, 0)
            if s.callee == CONSTRUCTOR_NAME:
                raise ParseError("cannot call the constructor", s.line, 0)
            callee_ast = next(f for f in self.o.ast.functions if f.name == s.callee)
            if len(callee_ast.params) != len(s.args):
                raise ParseError(
                    f"{s.callee} expects {len(callee_ast.params)} arguments",
                    s.line, 0)
            ops = [self.lower_operand(a, s.line) for a in s.args]
            self.emit("CALLINTERNAL", ops, callee=s.callee, line=s.line)
            return
        target = s.target
        if target in self.locals:
            top = target
        elif target in self.o.storage:
            decl = self.o.storage[target]
            if decl.kind == "mapping":
                raise ParseError(f"mapping {target} is not callable", s.line, 0)
            top = self.fresh_temp()
            self.emit("SLOAD", [Const(decl.slot, hex_hint=True)], result=top,
                      line=s.line)
        else:
            top = f"@{target}"  # opaque external contract reference
        ops = [top] + [self.lower_operand(a, s.line) for a in s.args]
        self.emit("CALLEXTERNAL", ops, callee=s.callee, line=s.line)


def parse(text: str) -> Contract:
    """Parse and lower a surface contract. Raises ParseError."""
    ast = _Parser(text).parse_contract()
    return _Lowerer(ast).lower()


# ---------------------------------------------------------------------------
# Pretty printing (canonical surface form; parse(pretty(c)) == c)
# ---------------------------------------------------------------------------

_PREC = {"||": 1, "&&": 2, "==": 3, "<": 4, ">": 4, "+": 5, "-": 5,
         "*": 6, "/": 6, "%": 6}


def _pp_expr(e, parent_prec: int = 0, right: bool = False) -> str:
    if isinstance(e, ENum):
        return hex(e.value) if e.hex_form else str(e.value)
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, ESender):
        return "msg.sender"
    if isinstance(e, EIndex):
        return f"{e.mapping}[{_pp_expr(e.key)}]"
    if isinstance(e, ENot):
        return f"!{_pp_expr(e.operand, 7)}"
    if isinstance(e, EBin):
        prec = _PREC[e.op]
        s = (f"{_pp_expr(e.left, prec)} {e.op} "
             f"{_pp_expr(e.right, prec, right=True)}")
        if prec < parent_prec or (prec == parent_prec and right):
            return f"({s})"
        return s
    raise AssertionError(e)


def _pp_stmt(s, indent: str) -> list[str]:
    if isinstance(s, SAssign):
        lhs = s.target if s.key is None else f"{s.target}[{_pp_expr(s.key)}]"
        return [f"{indent}{lhs} = {_pp_expr(s.value)};"]
    if isinstance(s, SRequire):
        return [f"{indent}require({_pp_expr(s.cond)});"]
    if isinstance(s, SIf):
        lines = [f"{indent}if ({_pp_expr(s.cond)}) {{"]
        for t in s.then:
            lines.extend(_pp_stmt(t, indent + "    "))
        if s.has_else:
            lines.append(f"{indent}}} else {{")
            for t in s.els:
                lines.extend(_pp_stmt(t, indent + "    "))
        lines.append(f"{indent}}}")
        return lines
    if isinstance(s, SCall):
        args = ", ".join(_pp_expr(a) for a in s.args)
        prefix = f"{s.target}." if s.target else ""
        return [f"{indent}call {prefix}{s.callee}({args});"]
    if isinstance(s, SIntrinsic):
        args = ", ".join(_pp_expr(a) for a in s.args)
        return [f"{indent}{s.op.lower()}({args});"]
    if isinstance(s, SReturn):
        if s.value is None:
            return [f"{indent}return;"]
        return [f"{indent}return {_pp_expr(s.value)};"]
    raise AssertionError(s)


def pretty(contract: Contract) -> str:
    """Emit the canonical surface form of a parsed contract."""
    ast = contract.source_ast
    if not isinstance(ast, ContractAst):
        raise ValueError("contract has no retained surface AST")
    lines = [f"contract {ast.name} {{"]
    for kind, name in ast.decls:
        lines.append(f"    {kind} {name};")
    for f in ast.functions:
        lines.append("")
        params = ", ".join(
            f"{'uint' if ptype == 'uint256' else ptype} {pname}"
            for pname, ptype in f.params)
        lines.append(f"    function {f.name}({params}) {f.visibility} {{")
        for s in f.body:
            lines.extend(_pp_stmt(s, "        "))
        lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"
