"""Arithmetic expressions in ``z0, z1, conj(z0), conj(z1)``.

Grammar (whitespace insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := atom (("^" | "**") ["-"] INTEGER)?
    atom    := NUMBER | "sqrt(" NUMBER ")" | "√" NUMBER
             | "z0" | "z1" | "conj(z0)" | "conj(z1)" | "i"
             | "(" expr ")"

``NUMBER`` is a decimal literal (``2``, ``0.5``, ``1e-3``); ``i`` is the
imaginary unit.  The unicode operators ``−``, ``×`` and ``·`` are accepted as
aliases of ``-`` and ``*``.  Expressions compile to functions of two complex
arrays, so an entry table evaluates in batch over many points.
"""

from __future__ import annotations

import math
import operator
import re
from typing import Callable

import numpy as np

from .errors import ParseError

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()√−×·]))"
)
_ALIASES = {"−": "-", "×": "*", "·": "*"}


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} at offset {pos} in {text!r}")
        kind = m.lastgroup
        value = m.group(kind)
        tokens.append((kind, _ALIASES.get(value, value)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, value=None):
        kind, tok = self.peek()
        if kind is None or (value is not None and tok != value):
            want = repr(value) if value else "a token"
            raise ParseError(f"expected {want} at token {self.pos} in {self.text!r}")
        self.pos += 1
        return kind, tok

    def parse(self) -> Evaluator:
        if not self.tokens:
            raise ParseError("empty expression")
        node = self.expr()
        if self.pos != len(self.tokens):
            raise ParseError(f"trailing input {self.tokens[self.pos][1]!r} in {self.text!r}")
        return node

    def expr(self) -> Evaluator:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = operator.add if self.take()[1] == "+" else operator.sub
            node = _binary(op, node, self.term())
        return node

    def term(self) -> Evaluator:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = operator.mul if self.take()[1] == "*" else operator.truediv
            node = _binary(op, node, self.unary())
        return node

    def unary(self) -> Evaluator:
        if self.peek()[1] in ("+", "-"):
            sign = self.take()[1]
            inner = self.unary()
            return inner if sign == "+" else (lambda z0, z1: -inner(z0, z1))
        return self.power()

    def power(self) -> Evaluator:
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            negative = self.peek()[1] == "-"
            if negative:
                self.take()
            kind, tok = self.take()
            if kind != "num" or not tok.isdigit():
                raise ParseError(f"exponent must be an integer, got {tok!r} in {self.text!r}")
            n = -int(tok) if negative else int(tok)
            return lambda z0, z1: base(z0, z1) ** n
        return base

    def number(self) -> float:
        kind, tok = self.take()
        if kind != "num":
            raise ParseError(f"expected a number, got {tok!r} in {self.text!r}")
        return float(tok)

    def atom(self) -> Evaluator:
        kind, tok = self.peek()
        if kind == "num":
            return _const(self.number())
        if tok == "√":
            self.take()
            return _const(math.sqrt(self.number()))
        if tok == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if kind == "name":
            self.take()
            if tok == "z0":
                return lambda z0, z1: z0
            if tok == "z1":
                return lambda z0, z1: z1
            if tok == "i":
                return _const(1j)
            if tok == "sqrt":
                self.take("(")
                value = self.number()
                self.take(")")
                return _const(math.sqrt(value))
            if tok == "conj":
                self.take("(")
                _, var = self.take()
                self.take(")")
                if var == "z0":
                    return lambda z0, z1: np.conj(z0)
                if var == "z1":
                    return lambda z0, z1: np.conj(z1)
                raise ParseError(f"conj() applies only to z0 or z1, got {var!r}")
            raise ParseError(f"unknown name {tok!r} in {self.text!r}")
        raise ParseError(f"unexpected token {tok!r} in {self.text!r}")


def _const(value) -> Evaluator:
    return lambda z0, z1: value


def _binary(op, left: Evaluator, right: Evaluator) -> Evaluator:
    return lambda z0, z1: op(left(z0, z1), right(z0, z1))


def compile_expression(text: str) -> Evaluator:
    """Compile one entry expression into ``f(z0, z1)``."""
    return _Parser(text).parse()


def compile_matrix(entries: list[list[str]]) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Compile an ``N x r`` table of expressions into a batch matrix function."""
    if not entries or not all(isinstance(row, list) for row in entries):
        raise ParseError("entries must be a non-empty list of rows")
    width = len(entries[0])
    if width == 0 or any(len(row) != width for row in entries):
        raise ParseError("all rows of the entry table must have the same positive length")
    compiled = [[compile_expression(str(e)) for e in row] for row in entries]

    def frame(z0, z1):
        z0 = np.asarray(z0, dtype=complex)
        z1 = np.asarray(z1, dtype=complex)
        shape = np.broadcast(z0, z1).shape
        out = np.empty(shape + (len(compiled), width), dtype=complex)
        for j, row in enumerate(compiled):
            for a, f in enumerate(row):
                out[..., j, a] = f(z0, z1)
        return out

    return frame
