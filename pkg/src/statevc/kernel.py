"""Deterministic embedded cell language.

The kernel executes "cells" of a small expression language and is the
replay oracle for everything else in this package: running the same list
of cell sources always produces the same variable environment and the
same outputs. There is no clock, randomness, filesystem or network access
inside the interpreter.

Values are 64-bit checked integers, 64-bit floats, UTF-8 strings,
booleans, lists and none. The grammar is documented in docs/grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

# Builtins callable from the language.
BUILTIN_NAMES = frozenset(
    {"len", "sum", "min", "max", "range", "str", "abs", "concat"}
)

# Guard against pathological `range` calls hanging the oracle.
MAX_RANGE_LEN = 1_000_000

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class CellSyntaxError(Exception):
    """Parse failure with 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class KernelRuntimeError(Exception):
    """Runtime failure inside a cell; rendered into the cell output."""

    def __init__(self, text: str):
        super().__init__(text)
        self.text = text


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Literal:
    value: object


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Index:
    obj: object
    index: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class Assign:
    name: str
    expr: object


@dataclass(frozen=True)
class Delete:
    name: str


@dataclass(frozen=True)
class PrintStmt:
    expr: object


@dataclass(frozen=True)
class ExprStmt:
    expr: object


@dataclass(frozen=True)
class Program:
    statements: tuple = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# Tokenizer

_KEYWORDS = {"True", "False", "None", "and", "or", "not", "del", "print"}

_TWO_CHAR_OPS = ("==", "!=", "<=", ">=")
_ONE_CHAR_OPS = "+-*/%<>=()[],;"


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER FLOAT STRING NAME KEYWORD OP NEWLINE EOF
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            tokens.append(Token("NEWLINE", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        start_col = col
        two = source[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token("OP", two, line, start_col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(Token("OP", ch, line, start_col))
            i += 1
            col += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                if source[j] == ".":
                    seen_dot = True
                j += 1
            text = source[i:j]
            kind = "FLOAT" if seen_dot else "NUMBER"
            tokens.append(Token(kind, text, line, start_col))
            col += j - i
            i = j
            continue
        if ch in "\"'":
            quote = ch
            j = i + 1
            buf = []
            while j < n:
                c = source[j]
                if c == "\\":
                    if j + 1 >= n:
                        raise CellSyntaxError("unterminated string", line, start_col)
                    esc = source[j + 1]
                    mapped = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}.get(esc)
                    if mapped is None:
                        raise CellSyntaxError(
                            f"unknown escape '\\{esc}'", line, start_col
                        )
                    buf.append(mapped)
                    j += 2
                    continue
                if c == "\n":
                    raise CellSyntaxError("unterminated string", line, start_col)
                if c == quote:
                    break
                buf.append(c)
                j += 1
            else:
                raise CellSyntaxError("unterminated string", line, start_col)
            if j >= n or source[j] != quote:
                raise CellSyntaxError("unterminated string", line, start_col)
            tokens.append(Token("STRING", "".join(buf), line, start_col))
            col += (j + 1) - i
            i = j + 1
            continue
        m = IDENT_RE.match(source, i)
        if m:
            text = m.group(0)
            kind = "KEYWORD" if text in _KEYWORDS else "NAME"
            tokens.append(Token(kind, text, line, start_col))
            col += len(text)
            i = m.end()
            continue
        raise CellSyntaxError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent)

_COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> CellSyntaxError:
        tok = tok or self.peek()
        return CellSyntaxError(message, tok.line, tok.column)

    def expect_op(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "OP" or tok.text != text:
            raise self.error(f"expected {text!r}", tok)
        return self.advance()

    def at_op(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text in texts

    def at_keyword(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.text in texts

    def skip_separators(self) -> None:
        while self.peek().kind == "NEWLINE" or self.at_op(";"):
            self.advance()

    def parse_program(self) -> Program:
        stmts = []
        self.skip_separators()
        while self.peek().kind != "EOF":
            stmts.append(self.parse_statement())
            tok = self.peek()
            if tok.kind == "EOF":
                break
            if tok.kind == "NEWLINE" or (tok.kind == "OP" and tok.text == ";"):
                self.skip_separators()
            else:
                raise self.error(f"unexpected {tok.text!r}", tok)
        return Program(tuple(stmts))

    def parse_statement(self):
        if self.at_keyword("del"):
            self.advance()
            tok = self.peek()
            if tok.kind != "NAME":
                raise self.error("expected name after 'del'", tok)
            self.advance()
            return Delete(tok.text)
        if self.at_keyword("print"):
            self.advance()
            self.expect_op("(")
            expr = self.parse_expr()
            self.expect_op(")")
            return PrintStmt(expr)
        tok = self.peek()
        nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
        if (
            tok.kind == "NAME"
            and nxt is not None
            and nxt.kind == "OP"
            and nxt.text == "="
        ):
            self.advance()
            self.advance()
            return Assign(tok.text, self.parse_expr())
        return ExprStmt(self.parse_expr())

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        left = self.parse_and()
        while self.at_keyword("or"):
            self.advance()
            left = Binary("or", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at_keyword("and"):
            self.advance()
            left = Binary("and", left, self.parse_not())
        return left

    def parse_not(self):
        if self.at_keyword("not"):
            self.advance()
            return Unary("not", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_arith()
        if self.at_op(*_COMPARE_OPS):
            op = self.advance().text
            right = self.parse_arith()
            if self.at_op(*_COMPARE_OPS):
                raise self.error("comparisons cannot be chained")
            return Binary(op, left, right)
        return left

    def parse_arith(self):
        left = self.parse_term()
        while self.at_op("+", "-"):
            op = self.advance().text
            left = Binary(op, left, self.parse_term())
        return left

    def parse_term(self):
        left = self.parse_unary()
        while self.at_op("*", "/", "%"):
            op = self.advance().text
            left = Binary(op, left, self.parse_unary())
        return left

    def parse_unary(self):
        if self.at_op("-"):
            self.advance()
            return Unary("-", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        expr = self.parse_atom()
        while self.at_op("["):
            self.advance()
            index = self.parse_expr()
            self.expect_op("]")
            expr = Index(expr, index)
        return expr

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            value = int(tok.text)
            if value > INT_MAX:
                raise self.error("integer literal out of range", tok)
            return Literal(value)
        if tok.kind == "FLOAT":
            self.advance()
            return Literal(float(tok.text))
        if tok.kind == "STRING":
            self.advance()
            return Literal(tok.text)
        if tok.kind == "KEYWORD" and tok.text in ("True", "False", "None"):
            self.advance()
            return Literal({"True": True, "False": False, "None": None}[tok.text])
        if tok.kind == "NAME":
            nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
            if nxt is not None and nxt.kind == "OP" and nxt.text == "(":
                if tok.text not in BUILTIN_NAMES:
                    raise self.error(f"unknown function {tok.text!r}", tok)
                self.advance()
                self.advance()
                args = []
                if not self.at_op(")"):
                    args.append(self.parse_expr())
                    while self.at_op(","):
                        self.advance()
                        args.append(self.parse_expr())
                self.expect_op(")")
                return Call(tok.text, tuple(args))
            self.advance()
            return Name(tok.text)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect_op(")")
            return expr
        if tok.kind == "OP" and tok.text == "[":
            self.advance()
            items = []
            if not self.at_op("]"):
                items.append(self.parse_expr())
                while self.at_op(","):
                    self.advance()
                    items.append(self.parse_expr())
            self.expect_op("]")
            return ListLit(tuple(items))
        raise self.error(f"unexpected {tok.text!r}" if tok.text else "unexpected end of input", tok)


def parse(source: str) -> Program:
    """Parse a cell source into a Program. Pure; raises CellSyntaxError."""
    return _Parser(tokenize(source)).parse_program()


# ---------------------------------------------------------------------------
# Pretty printer (round-trips through parse)

_PRECEDENCE = {
    "or": 1,
    "and": 2,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}


def _fmt_expr(expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Literal):
        return repr_value(expr.value)
    if isinstance(expr, Name):
        return expr.name
    if isinstance(expr, ListLit):
        return "[" + ", ".join(_fmt_expr(e) for e in expr.items) + "]"
    if isinstance(expr, Call):
        return expr.func + "(" + ", ".join(_fmt_expr(a) for a in expr.args) + ")"
    if isinstance(expr, Index):
        return _fmt_expr(expr.obj, 8) + "[" + _fmt_expr(expr.index) + "]"
    if isinstance(expr, Unary):
        inner = _fmt_expr(expr.operand, 7)
        text = f"not {inner}" if expr.op == "not" else f"-{inner}"
        return f"({text})" if parent_prec > 3 else text
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        left = _fmt_expr(expr.left, prec)
        right = _fmt_expr(expr.right, prec + 1)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"not an expression: {expr!r}")


def pretty_print(program: Program) -> str:
    lines = []
    for stmt in program.statements:
        if isinstance(stmt, Assign):
            lines.append(f"{stmt.name} = {_fmt_expr(stmt.expr)}")
        elif isinstance(stmt, Delete):
            lines.append(f"del {stmt.name}")
        elif isinstance(stmt, PrintStmt):
            lines.append(f"print({_fmt_expr(stmt.expr)})")
        elif isinstance(stmt, ExprStmt):
            lines.append(_fmt_expr(stmt.expr))
        else:
            raise TypeError(f"not a statement: {stmt!r}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Values


def repr_value(value) -> str:
    """Canonical text representation; injective per value."""
    if value is None:
        return "None"
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)  # shortest round-trip decimal
    if isinstance(value, str):
        text = value.replace("\\", "\\\\").replace("'", "\\'")
        text = text.replace("\n", "\\n").replace("\t", "\\t")
        return f"'{text}'"
    if isinstance(value, list):
        return "[" + ", ".join(repr_value(v) for v in value) + "]"
    raise TypeError(f"not a kernel value: {value!r}")


def display_value(value) -> str:
    """Display form used by print() and str(): strings stay unquoted."""
    if isinstance(value, str):
        return value
    return repr_value(value)


def values_equal(a, b) -> bool:
    """Structural equality. bool never equals int; int never equals float."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if type(a) is not type(b):
        return False
    return a == b


def copy_value(value):
    if isinstance(value, list):
        return [copy_value(v) for v in value]
    return value


def type_name(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "str"
    if isinstance(value, list):
        return "list"
    raise TypeError(f"not a kernel value: {value!r}")


# ---------------------------------------------------------------------------
# Interpreter


def _check_int(result: int) -> int:
    if result < INT_MIN or result > INT_MAX:
        raise KernelRuntimeError("OverflowError: integer overflow")
    return result


def _check_float(result: float) -> float:
    if result != result or result in (float("inf"), float("-inf")):
        raise KernelRuntimeError("OverflowError: float overflow")
    return result


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _require_bool(v, op: str):
    if not isinstance(v, bool):
        raise KernelRuntimeError(
            f"TypeError: '{op}' requires bool, got {type_name(v)}"
        )
    return v


def _binary(op: str, left, right):
    if op == "+":
        if _is_number(left) and _is_number(right):
            if isinstance(left, int) and isinstance(right, int):
                return _check_int(left + right)
            return _check_float(float(left) + float(right))
        if isinstance(left, str) and isinstance(right, str):
            return left + right
        if isinstance(left, list) and isinstance(right, list):
            return left + right
    elif op in ("-", "*"):
        if _is_number(left) and _is_number(right):
            raw = left - right if op == "-" else left * right
            if isinstance(left, int) and isinstance(right, int):
                return _check_int(raw)
            return _check_float(float(raw))
    elif op == "/":
        if _is_number(left) and _is_number(right):
            if right == 0:
                raise KernelRuntimeError("ZeroDivisionError: division by zero")
            return _check_float(float(left) / float(right))
    elif op == "%":
        if isinstance(left, int) and isinstance(right, int) \
                and not isinstance(left, bool) and not isinstance(right, bool):
            if right == 0:
                raise KernelRuntimeError("ZeroDivisionError: division by zero")
            return left % right
    elif op == "==":
        return values_equal(left, right)
    elif op == "!=":
        return not values_equal(left, right)
    elif op in ("<", "<=", ">", ">="):
        ok = (_is_number(left) and _is_number(right)) or (
            isinstance(left, str) and isinstance(right, str)
        )
        if ok:
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            return left >= right
    raise KernelRuntimeError(
        f"TypeError: unsupported operands for '{op}': "
        f"{type_name(left)} and {type_name(right)}"
    )


def _call_builtin(func: str, args: list):
    if func == "len":
        if len(args) == 1 and isinstance(args[0], (str, list)):
            return len(args[0])
        raise KernelRuntimeError("TypeError: len() takes one string or list")
    if func == "sum":
        if len(args) == 1 and isinstance(args[0], list) \
                and all(_is_number(v) for v in args[0]):
            total = 0
            for v in args[0]:
                total = _binary("+", total, v)
            return total
        raise KernelRuntimeError("TypeError: sum() takes one list of numbers")
    if func in ("min", "max"):
        items = args[0] if len(args) == 1 and isinstance(args[0], list) else args
        if not items:
            raise KernelRuntimeError(f"ValueError: {func}() of empty sequence")
        numbers = all(_is_number(v) for v in items)
        strings = all(isinstance(v, str) for v in items)
        if not (numbers or strings):
            raise KernelRuntimeError(
                f"TypeError: {func}() requires all numbers or all strings"
            )
        return min(items) if func == "min" else max(items)
    if func == "range":
        if not 1 <= len(args) <= 3 or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in args
        ):
            raise KernelRuntimeError("TypeError: range() takes 1 to 3 integers")
        if len(args) == 1:
            start, stop, step = 0, args[0], 1
        elif len(args) == 2:
            start, stop, step = args[0], args[1], 1
        else:
            start, stop, step = args
        if step == 0:
            raise KernelRuntimeError("ValueError: range() step must not be zero")
        length = max(0, (stop - start + (step - (1 if step > 0 else -1))) // step)
        if length > MAX_RANGE_LEN:
            raise KernelRuntimeError("OverflowError: range too large")
        return list(range(start, stop, step))
    if func == "str":
        if len(args) == 1:
            return display_value(args[0])
        raise KernelRuntimeError("TypeError: str() takes one argument")
    if func == "abs":
        if len(args) == 1 and _is_number(args[0]):
            if isinstance(args[0], int):
                return _check_int(abs(args[0]))
            return abs(args[0])
        raise KernelRuntimeError("TypeError: abs() takes one number")
    if func == "concat":
        if all(isinstance(v, str) for v in args):
            return "".join(args)
        raise KernelRuntimeError("TypeError: concat() takes string arguments")
    raise KernelRuntimeError(f"NameError: {func}")


def _eval(expr, env: dict):
    if isinstance(expr, Literal):
        return copy_value(expr.value)
    if isinstance(expr, Name):
        if expr.name not in env:
            raise KernelRuntimeError(f"NameError: {expr.name}")
        return copy_value(env[expr.name])
    if isinstance(expr, ListLit):
        return [_eval(e, env) for e in expr.items]
    if isinstance(expr, Unary):
        if expr.op == "not":
            return not _require_bool(_eval(expr.operand, env), "not")
        value = _eval(expr.operand, env)
        if not _is_number(value):
            raise KernelRuntimeError(
                f"TypeError: unary '-' requires a number, got {type_name(value)}"
            )
        if isinstance(value, int):
            return _check_int(-value)
        return -value
    if isinstance(expr, Binary):
        if expr.op == "and":
            left = _require_bool(_eval(expr.left, env), "and")
            if not left:
                return False
            return _require_bool(_eval(expr.right, env), "and")
        if expr.op == "or":
            left = _require_bool(_eval(expr.left, env), "or")
            if left:
                return True
            return _require_bool(_eval(expr.right, env), "or")
        return _binary(expr.op, _eval(expr.left, env), _eval(expr.right, env))
    if isinstance(expr, Index):
        obj = _eval(expr.obj, env)
        idx = _eval(expr.index, env)
        if not isinstance(obj, (list, str)):
            raise KernelRuntimeError(
                f"TypeError: {type_name(obj)} is not indexable"
            )
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise KernelRuntimeError(
                f"TypeError: index must be int, got {type_name(idx)}"
            )
        if idx < -len(obj) or idx >= len(obj):
            raise KernelRuntimeError("IndexError: index out of range")
        return copy_value(obj[idx])
    if isinstance(expr, Call):
        return _call_builtin(expr.func, [_eval(a, env) for a in expr.args])
    raise TypeError(f"not an expression: {expr!r}")


def exec_one(env: dict, source: str) -> tuple[dict, str, bool]:
    """Execute one cell against an environment.

    Returns (new environment, output text, error flag). The input env is
    never mutated. Output is the printed lines in order, plus the repr of
    the last bare-expression value if the cell has one; on error, the
    lines printed so far plus the error text. Bindings established before
    the failing statement survive (sequential statement semantics).
    """
    new_env = {name: copy_value(v) for name, v in env.items()}
    lines: list[str] = []
    try:
        program = parse(source)
    except CellSyntaxError as exc:
        return new_env, f"SyntaxError: {exc}", True
    last_bare = None
    has_bare = False
    try:
        for stmt in program.statements:
            if isinstance(stmt, Assign):
                new_env[stmt.name] = _eval(stmt.expr, new_env)
            elif isinstance(stmt, Delete):
                if stmt.name not in new_env:
                    raise KernelRuntimeError(f"NameError: {stmt.name}")
                del new_env[stmt.name]
            elif isinstance(stmt, PrintStmt):
                lines.append(display_value(_eval(stmt.expr, new_env)))
            elif isinstance(stmt, ExprStmt):
                last_bare = _eval(stmt.expr, new_env)
                has_bare = True
    except KernelRuntimeError as exc:
        lines.append(exc.text)
        return new_env, "\n".join(lines), True
    if has_bare:
        lines.append(repr_value(last_bare))
    return new_env, "\n".join(lines), False


def exec_history(sources: list[str]) -> tuple[dict, list[str]]:
    """Fold exec_one over a fresh environment; the consistency oracle."""
    env: dict = {}
    outputs: list[str] = []
    for source in sources:
        env, output, _error = exec_one(env, source)
        outputs.append(output)
    return env, outputs
