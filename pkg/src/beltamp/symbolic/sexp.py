"""Tokenizer and s-expression reader with source positions."""

from __future__ import annotations

from .errors import DomainSyntaxError


class Sym(str):
    """An atom token carrying its 1-based line/column."""

    line: int
    col: int

    def __new__(cls, text, line=0, col=0):
        self = super().__new__(cls, text)
        self.line = line
        self.col = col
        return self


class SList(list):
    """A parenthesised list carrying the position of its opening paren."""

    def __init__(self, items=(), line=0, col=0):
        super().__init__(items)
        self.line = line
        self.col = col


NEG_SIGN = "¬"


def tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()" or ch == NEG_SIGN:
            yield Sym(ch, line, col)
            i += 1
            col += 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();" and text[i] != NEG_SIGN:
            i += 1
            col += 1
        yield Sym(text[start:i], line, start_col)


def read_all(text: str) -> list:
    """Read every top-level s-expression in ``text``."""
    stack = [SList()]
    for tok in tokenize(text):
        if tok == "(":
            stack.append(SList(line=tok.line, col=tok.col))
        elif tok == ")":
            if len(stack) == 1:
                raise DomainSyntaxError("unbalanced ')'", tok.line, tok.col)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) > 1:
        open_list = stack[-1]
        raise DomainSyntaxError("unterminated '(' (unexpected end of input)", open_list.line, open_list.col)
    return list(stack[0])


def pos(node):
    return getattr(node, "line", 0), getattr(node, "col", 0)
