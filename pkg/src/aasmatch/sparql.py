"""A small SPARQL engine: SELECT/ASK over basic graph patterns.

Supported grammar (keywords are case-insensitive)::

    Query    := Prologue ( Select | Ask )
    Prologue := ( "PREFIX" PNAME_NS IRIREF | "BASE" IRIREF )*
    Select   := "SELECT" "DISTINCT"? ( "*" | VAR+ ) "WHERE"? Group
    Ask      := "ASK" "WHERE"? Group
    Group    := "{" ( Pattern | Filter ) ( "."? ( Pattern | Filter ) )* "."? "}"
    Pattern  := Term Term Term
    Filter   := "FILTER" "(" ( VAR "=" Term | Term "=" VAR
                              | "CONTAINS" "(" ( VAR | "STR" "(" VAR ")" ) "," STRING ")" ) ")"
    Term     := VAR | IRIREF | PNAME | "a" | STRING ( LANGTAG | "^^" IRI )? | NUMBER | "true" | "false"

Results use set semantics and are sorted by the N-Triples form of each row.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import (
    MalformedTermError,
    ReservedVariableMissingError,
    SPARQLSyntaxError,
    UnboundProjectionError,
    UnknownKeywordError,
)
from .rdf import IRI, RDF_TYPE, XSD, BlankNode, Graph, Literal, Term, term_key

RESERVED_VARIABLE = "aas"


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return "?" + self.name


PatternTerm = Union[Term, Variable]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self):
        if isinstance(self.subject, Literal):
            raise MalformedTermError("literal in subject position")
        if not isinstance(self.predicate, (IRI, Variable)):
            raise MalformedTermError("predicate must be an IRI or a variable")

    def variables(self) -> list[str]:
        return [t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Variable)]


@dataclass(frozen=True)
class Equals:
    var: str
    value: Term


@dataclass(frozen=True)
class Contains:
    var: str
    substring: str


FilterExpr = Union[Equals, Contains]


@dataclass(frozen=True)
class Query:
    form: str  # "SELECT" or "ASK"
    projection: tuple[str, ...]
    patterns: tuple[TriplePattern, ...]
    filters: tuple[FilterExpr, ...] = ()

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for p in self.patterns:
            for v in p.variables():
                seen.setdefault(v, None)
        return list(seen)


@dataclass
class BindingTable:
    columns: tuple[str, ...]
    rows: list[tuple[Term, ...]] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def as_dicts(self) -> list[dict[str, Term]]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def to_tsv(self) -> str:
        lines = ["\t".join("?" + c for c in self.columns)]
        lines.extend("\t".join(t.n3() for t in row) for row in self.rows)
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')
  | (?P<lang>@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<number>[+-]?(?:[0-9]+\.[0-9]+|[0-9]+))
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_\-]+(?:\.[A-Za-z0-9_\-]+)*)?)
  | (?P<word>[A-Za-z]+)
  | (?P<punct>[{}().,=*])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"SELECT", "ASK", "WHERE", "FILTER", "PREFIX", "BASE", "DISTINCT", "CONTAINS", "STR"}
_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise SPARQLSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(), i))
        i = m.end()
    out.append(_Tok("eof", "", len(text)))
    return out


def _unescape(body: str, pos: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
                i += 2
                continue
            if nxt in "uU":
                width = 4 if nxt == "u" else 8
                digits = body[i + 2 : i + 2 + width]
                try:
                    out.append(chr(int(digits, 16)))
                except ValueError:
                    raise SPARQLSyntaxError("bad unicode escape", pos + i) from None
                i += 2 + width
                continue
            raise SPARQLSyntaxError(f"unknown escape \\{nxt}", pos + i)
        out.append(ch)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.base: Optional[str] = None

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def is_word(self, word: str) -> bool:
        return self.tok.kind == "word" and self.tok.text.upper() == word

    def expect_word(self, word: str):
        if not self.is_word(word):
            raise SPARQLSyntaxError(f"expected {word}", self.tok.pos)
        self.advance()

    def expect_punct(self, p: str):
        if self.tok.kind != "punct" or self.tok.text != p:
            raise SPARQLSyntaxError(f"expected {p!r}, found {self.tok.text or 'end of input'!r}", self.tok.pos)
        self.advance()

    def check_word(self):
        t = self.tok
        if t.kind == "word" and t.text.upper() not in _KEYWORDS and t.text not in ("a", "true", "false"):
            raise UnknownKeywordError(f"unknown keyword {t.text!r}", t.pos)

    def iri(self, tok: _Tok) -> IRI:
        value = tok.text[1:-1]
        if not value:
            raise SPARQLSyntaxError("empty IRI", tok.pos)
        if self.base is not None and not re.match(r"^[A-Za-z][A-Za-z0-9+.\-]*:", value):
            value = self.base + value
        return IRI(value)

    def pname(self, tok: _Tok) -> IRI:
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            raise SPARQLSyntaxError(f"undeclared prefix {prefix!r}", tok.pos)
        return IRI(self.prefixes[prefix] + local)

    def parse(self) -> Query:
        while True:
            self.check_word()
            if self.is_word("PREFIX"):
                self.advance()
                t = self.advance()
                if t.kind != "pname" or not t.text.endswith(":"):
                    raise SPARQLSyntaxError("expected prefix name ending in ':'", t.pos)
                iri_tok = self.advance()
                if iri_tok.kind != "iri":
                    raise SPARQLSyntaxError("expected IRI after prefix name", iri_tok.pos)
                self.prefixes[t.text[:-1]] = self.iri(iri_tok).value
            elif self.is_word("BASE"):
                self.advance()
                iri_tok = self.advance()
                if iri_tok.kind != "iri":
                    raise SPARQLSyntaxError("expected IRI after BASE", iri_tok.pos)
                self.base = iri_tok.text[1:-1]
            else:
                break

        start = self.tok.pos
        if self.is_word("SELECT"):
            self.advance()
            form = "SELECT"
            if self.is_word("DISTINCT"):
                self.advance()
            projection: Optional[list[str]] = []
            if self.tok.kind == "punct" and self.tok.text == "*":
                self.advance()
                projection = None
            else:
                while self.tok.kind == "var":
                    projection.append(self.advance().text[1:])
                if not projection:
                    raise SPARQLSyntaxError("SELECT needs '*' or at least one variable", self.tok.pos)
        elif self.is_word("ASK"):
            self.advance()
            form = "ASK"
            projection = []
        else:
            self.check_word()
            raise SPARQLSyntaxError("expected SELECT or ASK", self.tok.pos)

        if self.is_word("WHERE"):
            self.advance()
        patterns, filters = self.group()
        self.check_word()
        if self.tok.kind != "eof":
            raise SPARQLSyntaxError(f"unexpected {self.tok.text!r} after query body", self.tok.pos)

        if not patterns:
            raise SPARQLSyntaxError("empty graph pattern", start)
        query_vars = set()
        for p in patterns:
            query_vars.update(p.variables())
        if projection is None:
            projection = Query(form, (), tuple(patterns)).variables()
        for v in projection:
            if v not in query_vars:
                raise UnboundProjectionError(f"projected variable ?{v} does not occur in any pattern")
        for f in filters:
            if f.var not in query_vars:
                raise UnboundProjectionError(f"filter variable ?{f.var} does not occur in any pattern")
        return Query(form, tuple(dict.fromkeys(projection)), tuple(patterns), tuple(filters))

    def group(self):
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters: list[FilterExpr] = []
        while True:
            t = self.tok
            if t.kind == "punct" and t.text == "}":
                self.advance()
                break
            if t.kind == "punct" and t.text == ".":
                self.advance()
                continue
            if self.is_word("FILTER"):
                self.advance()
                filters.append(self.filter())
                continue
            if t.kind == "eof":
                raise SPARQLSyntaxError("unterminated group, expected '}'", t.pos)
            patterns.append(self.pattern())
            nxt = self.tok
            if not (nxt.kind == "punct" and nxt.text in ".}") and not self.is_word("FILTER"):
                raise SPARQLSyntaxError(f"expected '.' or '}}' after triple pattern, found {nxt.text!r}", nxt.pos)
        return patterns, filters

    def pattern(self) -> TriplePattern:
        pos = self.tok.pos
        s = self.term()
        p = self.term(predicate=True)
        o = self.term()
        try:
            return TriplePattern(s, p, o)
        except MalformedTermError as exc:
            raise SPARQLSyntaxError(str(exc), pos) from None

    def term(self, predicate: bool = False) -> PatternTerm:
        self.check_word()
        t = self.advance()
        if t.kind == "var":
            return Variable(t.text[1:])
        if t.kind == "iri":
            return self.iri(t)
        if t.kind == "pname":
            return self.pname(t)
        if t.kind == "word" and t.text == "a" and predicate:
            return IRI(RDF_TYPE)
        if t.kind == "word" and t.text in ("true", "false"):
            return Literal(t.text, datatype=XSD + "boolean")
        if t.kind == "number":
            dt = "decimal" if "." in t.text else "integer"
            return Literal(t.text, datatype=XSD + dt)
        if t.kind == "string":
            lexical = _unescape(t.text[1:-1], t.pos + 1)
            if self.tok.kind == "lang":
                return Literal(lexical, language=self.advance().text[1:])
            if self.tok.kind == "dtype":
                self.advance()
                dt_tok = self.advance()
                if dt_tok.kind == "iri":
                    return Literal(lexical, datatype=self.iri(dt_tok).value)
                if dt_tok.kind == "pname":
                    return Literal(lexical, datatype=self.pname(dt_tok).value)
                raise SPARQLSyntaxError("expected datatype IRI after '^^'", dt_tok.pos)
            return Literal(lexical)
        raise SPARQLSyntaxError(f"expected an RDF term or variable, found {t.text or 'end of input'!r}", t.pos)

    def filter(self) -> FilterExpr:
        self.expect_punct("(")
        if self.is_word("CONTAINS"):
            self.advance()
            self.expect_punct("(")
            if self.is_word("STR"):
                self.advance()
                self.expect_punct("(")
                var = self.variable()
                self.expect_punct(")")
            else:
                var = self.variable()
            self.expect_punct(",")
            s = self.advance()
            if s.kind != "string":
                raise SPARQLSyntaxError("CONTAINS needs a string argument", s.pos)
            self.expect_punct(")")
            expr: FilterExpr = Contains(var, _unescape(s.text[1:-1], s.pos + 1))
        else:
            left = self.term()
            self.expect_punct("=")
            right = self.term()
            if isinstance(left, Variable) and not isinstance(right, Variable):
                expr = Equals(left.name, right)
            elif isinstance(right, Variable) and not isinstance(left, Variable):
                expr = Equals(right.name, left)
            else:
                raise SPARQLSyntaxError("FILTER equality needs one variable and one constant", self.tok.pos)
        self.expect_punct(")")
        return expr

    def variable(self) -> str:
        t = self.advance()
        if t.kind != "var":
            raise SPARQLSyntaxError("expected a variable", t.pos)
        return t.text[1:]


def parse_query(text: str) -> Query:
    """Parse query text into a :class:`Query`.

    Raises:
        SPARQLSyntaxError: malformed input (``position`` is a character offset).
        UnknownKeywordError: an unrecognized bare word.
        UnboundProjectionError: a projected or filtered variable is not used
            in any pattern.
    """
    return _Parser(text).parse()


# ------------------------------------------------------------------ evaluation

Binding = dict[str, Term]


def _filter_holds(f: FilterExpr, binding: Binding) -> bool:
    value = binding.get(f.var)
    if value is None:
        return False
    if isinstance(f, Equals):
        return value == f.value
    if isinstance(value, BlankNode):
        return False
    return f.substring in str(value)


def _solve(graph: Graph, patterns: Sequence[TriplePattern], binding: Binding) -> Iterator[Binding]:
    if not patterns:
        yield binding
        return
    pat, rest = patterns[0], patterns[1:]
    positions = (pat.subject, pat.predicate, pat.object)
    concrete = [binding.get(t.name) if isinstance(t, Variable) else t for t in positions]
    for triple in graph.triples(*concrete):
        new = binding
        ok = True
        for slot, value in zip(positions, (triple.subject, triple.predicate, triple.object)):
            if isinstance(slot, Variable):
                bound = new.get(slot.name)
                if bound is None:
                    if new is binding:
                        new = dict(binding)
                    new[slot.name] = value
                elif bound != value:
                    ok = False
                    break
        if ok:
            yield from _solve(graph, rest, new)


def solutions(query: Query, graph: Graph, initial: Optional[Binding] = None) -> Iterator[Binding]:
    """Full (unprojected) solutions of the query body, filters applied."""
    for b in _solve(graph, query.patterns, dict(initial or {})):
        if all(_filter_holds(f, b) for f in query.filters):
            yield b


def eval_select(query: Query, graph: Graph, initial: Optional[Binding] = None) -> BindingTable:
    if query.form != "SELECT":
        raise ValueError("eval_select needs a SELECT query")
    rows = {tuple(b[v] for v in query.projection) for b in solutions(query, graph, initial)}
    ordered = sorted(rows, key=lambda row: tuple(term_key(t) for t in row))
    return BindingTable(query.projection, ordered)


def eval_ask(query: Query, graph: Graph, initial: Optional[Binding] = None) -> bool:
    for _ in solutions(query, graph, initial):
        return True
    return False


def prefilter(
    constraint: Query,
    repository: Iterable[tuple[Term, Graph]],
    threads: int = 1,
):
    """Keep the candidates whose subgraph satisfies ``constraint`` with ``?aas``
    fixed to the candidate's shell IRI.

    Returns a :class:`~aasmatch.matcher.CandidateSet` sorted by shell IRI.
    """
    from .matcher import CandidateSet

    if RESERVED_VARIABLE not in constraint.variables():
        raise ReservedVariableMissingError("constraint must use the variable ?aas")
    repo = list(repository)

    def check(item):
        shell, graph = item
        return eval_ask(constraint, graph, {RESERVED_VARIABLE: shell})

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            keep = list(pool.map(check, repo))
    else:
        keep = [check(item) for item in repo]
    return CandidateSet([item for item, k in zip(repo, keep) if k])
