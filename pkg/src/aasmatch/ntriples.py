"""N-Triples reader and canonical writer.

The writer emits one triple per line, lines sorted in code-point order, so
equal triple sets always serialize to identical bytes.
"""

from __future__ import annotations

from typing import Union

from .errors import (
    InvalidIRIError,
    MalformedTermError,
    NTriplesSyntaxError,
    UnterminatedLiteralError,
)
from .rdf import IRI, BlankNode, Graph, Literal, Triple

_ECHAR_IN = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}
_IRI_BAD = set('<"{}|^`\\') | {chr(c) for c in range(0x21)}


class _LineParser:
    def __init__(self, line: str, lineno: int):
        self.s = line
        self.i = 0
        self.lineno = lineno

    def error(self, msg: str, cls=NTriplesSyntaxError):
        raise cls(f"{msg} (column {self.i + 1})", self.lineno)

    def skip_ws(self):
        while self.i < len(self.s) and self.s[self.i] in " \t":
            self.i += 1

    def peek(self) -> str:
        return self.s[self.i] if self.i < len(self.s) else ""

    def uchar(self) -> str:
        # positioned just after the backslash, on 'u' or 'U'
        width = 4 if self.s[self.i] == "u" else 8
        digits = self.s[self.i + 1 : self.i + 1 + width]
        if len(digits) != width or any(c not in "0123456789abcdefABCDEF" for c in digits):
            self.error("bad unicode escape")
        self.i += 1 + width
        return chr(int(digits, 16))

    def iri(self) -> str:
        assert self.s[self.i] == "<"
        self.i += 1
        out = []
        while True:
            if self.i >= len(self.s):
                self.error("unterminated IRI", InvalidIRIError)
            ch = self.s[self.i]
            if ch == ">":
                self.i += 1
                break
            if ch == "\\":
                self.i += 1
                if self.peek() not in ("u", "U"):
                    self.error("only \\u and \\U escapes are allowed in IRIs", InvalidIRIError)
                ch = self.uchar()
                if ch in _IRI_BAD:
                    self.error("escaped character not allowed in IRI", InvalidIRIError)
                out.append(ch)
                continue
            if ch in _IRI_BAD:
                self.error(f"character {ch!r} not allowed in IRI", InvalidIRIError)
            out.append(ch)
            self.i += 1
        value = "".join(out)
        if not value:
            self.error("empty IRI", InvalidIRIError)
        return value

    def bnode(self) -> BlankNode:
        self.i += 2
        start = self.i
        while self.i < len(self.s) and (self.s[self.i].isalnum() or self.s[self.i] in "_-"):
            self.i += 1
        label = self.s[start : self.i]
        try:
            return BlankNode(label)
        except MalformedTermError as exc:
            self.error(str(exc))

    def literal(self) -> Literal:
        self.i += 1
        out = []
        while True:
            if self.i >= len(self.s):
                self.error("unterminated literal", UnterminatedLiteralError)
            ch = self.s[self.i]
            if ch == '"':
                self.i += 1
                break
            if ch == "\\":
                self.i += 1
                nxt = self.peek()
                if nxt in ("u", "U"):
                    out.append(self.uchar())
                    continue
                if nxt not in _ECHAR_IN:
                    self.error(f"unknown escape \\{nxt}")
                out.append(_ECHAR_IN[nxt])
                self.i += 1
                continue
            out.append(ch)
            self.i += 1
        lexical = "".join(out)
        if self.s.startswith("^^", self.i):
            self.i += 2
            if self.peek() != "<":
                self.error("datatype must be an IRI")
            return Literal(lexical, datatype=self.iri())
        if self.peek() == "@":
            self.i += 1
            start = self.i
            while self.i < len(self.s) and (self.s[self.i].isalnum() or self.s[self.i] == "-"):
                self.i += 1
            try:
                return Literal(lexical, language=self.s[start : self.i])
            except MalformedTermError as exc:
                self.error(str(exc))
        return Literal(lexical)

    def term(self, position: str):
        ch = self.peek()
        if ch == "<":
            return IRI(self.iri())
        if self.s.startswith("_:", self.i):
            if position == "predicate":
                self.error("predicate must be an IRI")
            return self.bnode()
        if ch == '"':
            if position != "object":
                self.error(f"literal not allowed as {position}")
            return self.literal()
        self.error(f"expected {position}")

    def triple(self) -> Triple:
        self.skip_ws()
        s = self.term("subject")
        self.skip_ws()
        p = self.term("predicate")
        self.skip_ws()
        o = self.term("object")
        self.skip_ws()
        if self.peek() != ".":
            self.error("expected '.'")
        self.i += 1
        self.skip_ws()
        if self.i < len(self.s) and self.s[self.i] != "#":
            self.error("trailing characters after '.'")
        return Triple(s, p, o)


def parse_ntriples(text: Union[bytes, str]) -> Graph:
    """Parse N-Triples into a :class:`Graph`.

    Blank lines and ``#`` comment lines are ignored. Errors carry the
    1-based line number.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = text[: exc.start].count(b"\n") + 1
            raise NTriplesSyntaxError("input is not valid UTF-8", line) from None
    graph = Graph()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        stripped = line.strip(" \t")
        if not stripped or stripped.startswith("#"):
            continue
        graph.add(_LineParser(line, lineno).triple())
    return graph


def serialize_ntriples(graph: Graph) -> bytes:
    lines = sorted(t.n3() for t in graph)
    return "".join(line + "\n" for line in lines).encode("utf-8")
