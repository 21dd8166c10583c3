"""Behavior language front end: lexer, parser, AST, and pretty-printer.

The language is indentation-sensitive (spaces only, one consistent step
width). A program is a set of named behaviors; statements are do-calls with
optional `until` interrupts, Wait/Speak forms, if/elif/else, while, and
terminate. Conditions compose registry constraint calls with and/or/not.

Every statement and call keeps its source line/column (ignored by structural
equality) so Speak records and repair edits can point back into the text.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field

from .constraints import And, Call, CondExpr, Not, Or, SampleExpr, Str, TrueExpr
from .registry import ApiRegistry, ApiSig

RESERVED = {
    "behavior", "do", "until", "if", "elif", "else", "while",
    "and", "or", "not", "terminate", "True",
}
SPECIAL_CALLS = {"Wait", "Speak", "Sample"}
_OPERATORS = ("<=", ">=", "==", "<", ">")


class DslError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})")
        self.message = message
        self.line = line
        self.col = col


class ParseError(DslError):
    """Syntax error; carries the expected-token set."""

    def __init__(self, message: str, line: int, col: int, expected: tuple = ()):
        super().__init__(message, line, col)
        self.expected = tuple(expected)


class UnknownApiError(DslError):
    pass


class SignatureError(DslError):
    """Arity or argument-kind mismatch against the registry."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class DoAction:
    call: Call
    until: CondExpr | None = None
    line: int = dc_field(default=0, compare=False)


@dataclass(frozen=True)
class DoWaitUntil:
    cond: CondExpr
    line: int = dc_field(default=0, compare=False)


@dataclass(frozen=True)
class SpeakStmt:
    text: str
    line: int = dc_field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    branches: tuple  # ((cond, block), ...)
    orelse: tuple | None = None
    line: int = dc_field(default=0, compare=False)


@dataclass(frozen=True)
class While:
    cond: CondExpr
    body: tuple
    line: int = dc_field(default=0, compare=False)


@dataclass(frozen=True)
class Terminate:
    line: int = dc_field(default=0, compare=False)


Stmt = (DoAction, DoWaitUntil, SpeakStmt, If, While, Terminate)


@dataclass(frozen=True)
class Behavior:
    name: str
    params: tuple[str, ...]
    body: tuple
    line: int = dc_field(default=0, compare=False)


@dataclass(frozen=True)
class BehaviorProgram:
    behaviors: tuple[Behavior, ...]
    entry: str

    def entry_behavior(self) -> Behavior:
        for b in self.behaviors:
            if b.name == self.entry:
                return b
        raise DslError(f"entry behavior {self.entry!r} not defined")


def walk_stmts(block: tuple):
    """Yield every statement in the block, depth first, textual order."""
    for s in block:
        yield s
        if isinstance(s, If):
            for _c, blk in s.branches:
                yield from walk_stmts(blk)
            if s.orelse:
                yield from walk_stmts(s.orelse)
        elif isinstance(s, While):
            yield from walk_stmts(s.body)


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class Token:
    kind: str  # NAME NUMBER STRING OP PUNCT NEWLINE INDENT DEDENT EOF
    value: str
    line: int
    col: int


_NUMBER_RE = re.compile(r"-?\d+(\.\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    indent_stack = [0]
    unit = 0  # indentation step width, fixed by first indented block
    for lineno, raw in enumerate(source.splitlines(), start=1):
        if "\t" in raw[: len(raw) - len(raw.lstrip())]:
            raise ParseError("tabs are not allowed in indentation", lineno, 1)
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indent = len(stripped) - len(stripped.lstrip(" "))
        if indent > indent_stack[-1]:
            if unit == 0:
                unit = indent - indent_stack[-1]
            if indent != indent_stack[-1] + unit:
                raise ParseError(
                    f"inconsistent indentation width (expected {indent_stack[-1] + unit} spaces)",
                    lineno, indent + 1)
            indent_stack.append(indent)
            tokens.append(Token("INDENT", "", lineno, 1))
        else:
            while indent < indent_stack[-1]:
                indent_stack.pop()
                tokens.append(Token("DEDENT", "", lineno, 1))
            if indent != indent_stack[-1]:
                raise ParseError("unindent does not match any outer level", lineno, indent + 1)
        _lex_line(stripped.lstrip(" "), lineno, indent, tokens)
        tokens.append(Token("NEWLINE", "", lineno, len(raw) + 1))
    last = tokens[-1].line if tokens else 1
    while len(indent_stack) > 1:
        indent_stack.pop()
        tokens.append(Token("DEDENT", "", last, 1))
    tokens.append(Token("EOF", "", last + 1, 1))
    return tokens


def _lex_line(text: str, lineno: int, offset: int, out: list[Token]) -> None:
    i = 0
    while i < len(text):
        ch = text[i]
        col = offset + i + 1
        if ch == " ":
            i += 1
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < len(text):
                c = text[j]
                if c == "\\":
                    if j + 1 >= len(text):
                        raise ParseError("unterminated escape in string", lineno, offset + j + 1)
                    esc = text[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                    continue
                if c == '"':
                    break
                buf.append(c)
                j += 1
            else:
                raise ParseError("unterminated string literal", lineno, col)
            out.append(Token("STRING", "".join(buf), lineno, col))
            i = j + 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m and (ch.isdigit() or (ch == "-" and i + 1 < len(text) and text[i + 1].isdigit())):
            out.append(Token("NUMBER", m.group(), lineno, col))
            i = m.end()
            continue
        m = _NAME_RE.match(text, i)
        if m:
            out.append(Token("NAME", m.group(), lineno, col))
            i = m.end()
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                out.append(Token("OP", op, lineno, col))
                i += len(op)
                break
        else:
            if ch in "(),:":
                out.append(Token("PUNCT", ch, lineno, col))
                i += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", lineno, col)


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, tokens: list[Token], registry: ApiRegistry):
        self.tokens = tokens
        self.pos = 0
        self.registry = registry

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Token, expected: tuple = ()):
        raise ParseError(message, tok.line, tok.col, expected)

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            shown = tok.value or tok.kind
            self.fail(f"expected {want!r}, found {shown!r}", tok, expected=(want,))
        return self.next()

    def expect_kw(self, word: str) -> Token:
        return self.expect("NAME", word) if word not in RESERVED else self._expect_name(word)

    def _expect_name(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "NAME" or tok.value != word:
            shown = tok.value or tok.kind
            self.fail(f"expected {word!r}, found {shown!r}", tok, expected=(word,))
        return self.next()

    # ---- program structure

    def program(self) -> BehaviorProgram:
        behaviors = []
        while self.peek().kind != "EOF":
            behaviors.append(self.behavior())
        if not behaviors:
            self.fail("expected 'behavior'", self.peek(), expected=("behavior",))
        names = [b.name for b in behaviors]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise DslError(f"duplicate behavior name {dup!r}")
        return BehaviorProgram(tuple(behaviors), entry=behaviors[0].name)

    def behavior(self) -> Behavior:
        start = self._expect_name("behavior")
        name = self.expect("NAME").value
        self.expect("PUNCT", "(")
        params = []
        if not (self.peek().kind == "PUNCT" and self.peek().value == ")"):
            params.append(self.expect("NAME").value)
            while self.peek().value == ",":
                self.next()
                params.append(self.expect("NAME").value)
        self.expect("PUNCT", ")")
        self.expect("PUNCT", ":")
        self.expect("NEWLINE")
        body = self.block()
        return Behavior(name, tuple(params), body, line=start.line)

    def block(self) -> tuple:
        self.expect("INDENT")
        stmts = []
        while self.peek().kind not in ("DEDENT", "EOF"):
            stmts.append(self.stmt())
        self.expect("DEDENT")
        if not stmts:
            self.fail("expected at least one statement", self.peek())
        return tuple(stmts)

    # ---- statements

    def stmt(self):
        tok = self.peek()
        if tok.kind != "NAME":
            self.fail(f"expected statement, found {tok.value or tok.kind!r}", tok,
                      expected=("do", "if", "while", "terminate"))
        if tok.value == "do":
            return self.do_stmt()
        if tok.value == "if":
            return self.if_stmt()
        if tok.value == "while":
            return self.while_stmt()
        if tok.value == "terminate":
            self.next()
            self.expect("NEWLINE")
            return Terminate(line=tok.line)
        self.fail(f"expected statement, found {tok.value!r}", tok,
                  expected=("do", "if", "while", "terminate"))

    def do_stmt(self):
        start = self._expect_name("do")
        name_tok = self.expect("NAME")
        if name_tok.value == "Wait":
            self.expect("PUNCT", "(")
            self.expect("PUNCT", ")")
            self._expect_name("until")
            cond = self.cond()
            self.expect("NEWLINE")
            return DoWaitUntil(cond, line=start.line)
        if name_tok.value == "Speak":
            self.expect("PUNCT", "(")
            text_tok = self.expect("STRING")
            if not text_tok.value:
                self.fail("Speak text must be non-empty", text_tok)
            self.expect("PUNCT", ")")
            self.expect("NEWLINE")
            return SpeakStmt(text_tok.value, line=start.line)
        call = self.call(name_tok, kind="action")
        until = None
        if self.peek().kind == "NAME" and self.peek().value == "until":
            self.next()
            until = self.cond()
        self.expect("NEWLINE")
        return DoAction(call, until, line=start.line)

    def if_stmt(self) -> If:
        start = self._expect_name("if")
        branches = [(self.cond(), self._suite())]
        orelse = None
        while self.peek().kind == "NAME" and self.peek().value == "elif":
            self.next()
            branches.append((self.cond(), self._suite()))
        if self.peek().kind == "NAME" and self.peek().value == "else":
            self.next()
            orelse = self._suite()
        return If(tuple(branches), orelse, line=start.line)

    def while_stmt(self) -> While:
        start = self._expect_name("while")
        cond = self.cond()
        body = self._suite()
        return While(cond, body, line=start.line)

    def _suite(self) -> tuple:
        self.expect("PUNCT", ":")
        self.expect("NEWLINE")
        return self.block()

    # ---- conditions (precedence: or < and < not < atom)

    def cond(self) -> CondExpr:
        left = self.and_expr()
        while self.peek().kind == "NAME" and self.peek().value == "or":
            self.next()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> CondExpr:
        left = self.not_expr()
        while self.peek().kind == "NAME" and self.peek().value == "and":
            self.next()
            left = And(left, self.not_expr())
        return left

    def not_expr(self) -> CondExpr:
        if self.peek().kind == "NAME" and self.peek().value == "not":
            self.next()
            return Not(self.not_expr())
        return self.cond_atom()

    def cond_atom(self) -> CondExpr:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.value == "(":
            self.next()
            inner = self.cond()
            self.expect("PUNCT", ")")
            return inner
        if tok.kind == "NAME" and tok.value == "True":
            self.next()
            return TrueExpr()
        if tok.kind == "NAME" and tok.value not in RESERVED:
            return self.call(self.next(), kind="constraint")
        self.fail(f"expected condition, found {tok.value or tok.kind!r}", tok,
                  expected=("True", "not", "(", "CONSTRAINT"))

    # ---- calls and arguments

    def call(self, name_tok: Token, kind: str) -> Call:
        name = name_tok.value
        sig = (self.registry.action(name) if kind == "action"
               else self.registry.constraint(name))
        if sig is None:
            raise UnknownApiError(f"unknown {kind} API {name!r}",
                                  name_tok.line, name_tok.col)
        self.expect("PUNCT", "(")
        args: list = []
        arg_toks: list[Token] = []
        if not (self.peek().kind == "PUNCT" and self.peek().value == ")"):
            a, t = self.arg()
            args.append(a)
            arg_toks.append(t)
            while self.peek().value == ",":
                self.next()
                a, t = self.arg()
                args.append(a)
                arg_toks.append(t)
        close = self.expect("PUNCT", ")")
        call = Call(name, tuple(args), line=name_tok.line, col=name_tok.col)
        self._check_signature(call, sig, arg_toks, close)
        return call

    def arg(self):
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return float(tok.value), tok
        if tok.kind == "STRING":
            self.next()
            return Str(tok.value), tok
        if tok.kind == "OP":
            self.next()
            return tok.value, tok
        if tok.kind == "PUNCT" and tok.value == "(":
            self.next()
            x = float(self.expect("NUMBER").value)
            self.expect("PUNCT", ",")
            y = float(self.expect("NUMBER").value)
            self.expect("PUNCT", ")")
            return (x, y), tok
        if tok.kind == "NAME":
            if tok.value == "Sample":
                self.next()
                self.expect("PUNCT", "(")
                inner = self.cond()
                self.expect("PUNCT", ")")
                return SampleExpr(inner), tok
            if self.peek(1).kind == "PUNCT" and self.peek(1).value == "(":
                self.fail("only Sample(...) may be called in argument position", tok)
            self.next()
            return tok.value, tok
        self.fail(f"expected argument, found {tok.value or tok.kind!r}", tok,
                  expected=("NAME", "NUMBER", "STRING", "(", "Sample"))

    def _check_signature(self, call: Call, sig: ApiSig, arg_toks: list[Token],
                         close: Token) -> None:
        want, got = len(sig.params), len(call.args)
        if got < want:
            raise SignatureError(
                f"{sig.name} expects {want} argument(s), got {got}",
                close.line, close.col)
        if got > want:
            extra = arg_toks[want]
            raise SignatureError(
                f"{sig.name} expects {want} argument(s), got {got}",
                extra.line, extra.col)
        for p, a, t in zip(sig.params, call.args, arg_toks):
            if not _kind_ok(p, a):
                raise SignatureError(
                    f"{sig.name}: argument {t.value!r} does not fit kind {p!r}",
                    t.line, t.col)


def _kind_ok(param: str, arg) -> bool:
    if param == "number":
        return isinstance(arg, float)
    if param == "point":
        return isinstance(arg, (tuple, SampleExpr))
    if param == "string":
        return isinstance(arg, Str)
    if param == "operator":
        return isinstance(arg, str) and arg in _OPERATORS
    if param.startswith("choice:"):
        return isinstance(arg, str) and arg in param[len("choice:"):].split("|")
    if param in ("entity", "name"):
        return isinstance(arg, str) and arg not in _OPERATORS
    return False


def parse(source: str, registry: ApiRegistry) -> BehaviorProgram:
    return _Parser(tokenize(source), registry).program()


def parse_condition(source: str, registry: ApiRegistry) -> CondExpr:
    """Parse a bare condition expression (used by condition-hint events)."""
    parser = _Parser(tokenize(source), registry)
    cond = parser.cond()
    tok = parser.peek()
    if tok.kind not in ("NEWLINE", "EOF"):
        parser.fail(f"trailing input after condition: {tok.value!r}", tok)
    return cond


# ---------------------------------------------------------------------------
# printer


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")


def _num(x: float) -> str:
    return repr(float(x))


def _arg_text(a) -> str:
    if isinstance(a, float):
        return _num(a)
    if isinstance(a, tuple):
        return f"({_num(a[0])}, {_num(a[1])})"
    if isinstance(a, Str):
        return f'"{_escape(a.value)}"'
    if isinstance(a, SampleExpr):
        return f"Sample({cond_text(a.cond)})"
    return str(a)


def call_text(call: Call) -> str:
    return f"{call.name}({', '.join(_arg_text(a) for a in call.args)})"


def cond_text(expr: CondExpr, parent_prec: int = 0) -> str:
    if isinstance(expr, TrueExpr):
        return "True"
    if isinstance(expr, Call):
        return call_text(expr)
    if isinstance(expr, Not):
        inner = cond_text(expr.item, 3)
        text = f"not {inner}"
        prec = 3
    elif isinstance(expr, And):
        text = f"{cond_text(expr.left, 2)} and {cond_text(expr.right, 3)}"
        prec = 2
    elif isinstance(expr, Or):
        text = f"{cond_text(expr.left, 1)} or {cond_text(expr.right, 2)}"
        prec = 1
    else:
        raise DslError(f"cannot print {expr!r}")
    return f"({text})" if prec < parent_prec else text


def _stmt_lines(stmt, depth: int, out: list[str]) -> None:
    pad = "    " * depth
    if isinstance(stmt, DoAction):
        text = f"{pad}do {call_text(stmt.call)}"
        if stmt.until is not None:
            text += f" until {cond_text(stmt.until)}"
        out.append(text)
    elif isinstance(stmt, DoWaitUntil):
        out.append(f"{pad}do Wait() until {cond_text(stmt.cond)}")
    elif isinstance(stmt, SpeakStmt):
        out.append(f'{pad}do Speak("{_escape(stmt.text)}")')
    elif isinstance(stmt, If):
        kw = "if"
        for cond, blk in stmt.branches:
            out.append(f"{pad}{kw} {cond_text(cond)}:")
            for s in blk:
                _stmt_lines(s, depth + 1, out)
            kw = "elif"
        if stmt.orelse:
            out.append(f"{pad}else:")
            for s in stmt.orelse:
                _stmt_lines(s, depth + 1, out)
    elif isinstance(stmt, While):
        out.append(f"{pad}while {cond_text(stmt.cond)}:")
        for s in stmt.body:
            _stmt_lines(s, depth + 1, out)
    elif isinstance(stmt, Terminate):
        out.append(f"{pad}terminate")
    else:
        raise DslError(f"cannot print statement {stmt!r}")


def print_program(program: BehaviorProgram) -> str:
    chunks = []
    for b in program.behaviors:
        lines = [f"behavior {b.name}({', '.join(b.params)}):"]
        for s in b.body:
            _stmt_lines(s, 1, lines)
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"


def strip_speak(program: BehaviorProgram) -> BehaviorProgram:
    """Drop every Speak statement; everything else keeps its order."""

    def strip_block(block: tuple) -> tuple:
        out = []
        for s in block:
            if isinstance(s, SpeakStmt):
                continue
            if isinstance(s, If):
                s = If(
                    tuple((c, strip_block(b)) for c, b in s.branches),
                    strip_block(s.orelse) if s.orelse else None,
                    line=s.line,
                )
            elif isinstance(s, While):
                s = While(s.cond, strip_block(s.body), line=s.line)
            out.append(s)
        if not out:
            raise DslError("stripping Speak statements would empty a block")
        return tuple(out)

    return BehaviorProgram(
        tuple(Behavior(b.name, b.params, strip_block(b.body), line=b.line)
              for b in program.behaviors),
        entry=program.entry,
    )
