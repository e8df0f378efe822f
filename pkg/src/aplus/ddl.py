"""Parser for the command language: MATCH queries and index DDL.

Accepted surface, keywords case-insensitive::

    MATCH a1-[r1:W]->a2<-[:DD]-a3, a3-[r3]->a1 WHERE a1.ID=v1, r1.amt>r3.amt + alpha
    EXPLAIN MATCH ...
    CREATE 1-HOP VIEW name MATCH v_s-[e_adj]->v_d [WHERE ...]
        [INDEX AS FW|BW|FW-BW [PARTITION BY keys] [SORT BY keys]]
    CREATE 2-HOP VIEW name MATCH v_s-[e_b]->v_d-[e_adj]->v_nbr [WHERE ...]
        [INDEX AS [PARTITION BY keys] [SORT BY keys]]
    RECONFIGURE PRIMARY INDEXES [PARTITION BY keys] [SORT BY keys]
    DROP VIEW|INDEX name      SET alpha = 5000      FLUSH [ALL | name [page]]
    STATS    SHOW INDEXES     LOAD 'v.csv' 'e.csv' ['schema.json']     EXPORT 'v.csv' 'e.csv'

Conjunctions use ``,``, ``&`` or ``AND``; comparisons may be chained
(``a3.city=a4.city=a6.city``).  Unicode arrows, minus signs and ``α`` are
accepted, as is a string opened with a backtick and closed with a quote.
Statements may be separated by ``;`` or simply follow each other.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .config import (
    NBR_ID,
    Atom,
    Direction,
    EdgeAdjacencyKind,
    IndexConfig,
    IndexKind,
    Param,
    PartitionKey,
    Predicate,
    PropRef,
    SortKey,
    Subject,
    TRUE,
)
from .errors import ParseError
from .query import QueryGraph

KEYWORDS = {
    "MATCH", "WHERE", "AND", "CREATE", "VIEW", "INDEX", "INDEXES", "AS", "PARTITION", "BY",
    "SORT", "RECONFIGURE", "PRIMARY", "DROP", "EXPLAIN", "STATS", "SHOW", "FLUSH", "EXPORT",
    "LOAD", "SET", "ALL",
}
STATEMENT_STARTS = {"MATCH", "CREATE", "RECONFIGURE", "DROP", "EXPLAIN", "STATS", "SHOW", "FLUSH",
                    "EXPORT", "LOAD", "SET"}


class CommandKind(str, Enum):
    LOAD = "LOAD"
    RECONFIGURE_PRIMARY = "RECONFIGURE_PRIMARY"
    CREATE_1HOP_VIEW = "CREATE_1HOP_VIEW"
    CREATE_2HOP_VIEW = "CREATE_2HOP_VIEW"
    DROP_INDEX = "DROP_INDEX"
    MATCH_QUERY = "MATCH_QUERY"
    EXPLAIN = "EXPLAIN"
    STATS = "STATS"
    SHOW_INDEXES = "SHOW_INDEXES"
    FLUSH = "FLUSH"
    EXPORT = "EXPORT"
    SET = "SET"


@dataclass
class Command:
    kind: CommandKind
    name: str | None = None
    config: IndexConfig | None = None
    query: QueryGraph | None = None
    paths: tuple = ()
    value: object = None
    page: int | None = None
    text: str = field(default="", compare=False)


# -- tokens -------------------------------------------------------------------

@dataclass
class Token:
    kind: str  # IDENT NUMBER STRING OP EOF
    value: object
    line: int
    col: int

    @property
    def upper(self):
        return self.value.upper() if self.kind == "IDENT" else None


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?![A-Za-z_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*|α)
  | (?P<string>'(?:[^'\\\n]|\\.)*'|"(?:[^"\\\n]|\\.)*"|`[^`'\n]*[`'])
  | (?P<op>->|<-|→|←|<=|>=|!=|<>|[-−\[\]():,.=<>+&;{}*])
    """,
    re.VERBOSE,
)


def tokenize(text: str):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "number":
            tokens.append(Token("NUMBER", float(raw) if "." in raw else int(raw), line, col))
        elif kind == "ident":
            tokens.append(Token("IDENT", "alpha" if raw == "α" else raw, line, col))
        elif kind == "string":
            body = raw[1:-1]
            if raw[0] != "`":
                body = re.sub(r"\\(.)", r"\1", body)
            tokens.append(Token("STRING", body, line, col))
        elif kind == "op":
            op = {"→": "->", "←": "<-", "−": "-", "<>": "!="}.get(raw, raw)
            tokens.append(Token("OP", op, line, col))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            line_start = pos + raw.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", None, line, pos - line_start + 1))
    return tokens


# -- parser -------------------------------------------------------------------

_CMP = {"=", "!=", "<", "<=", ">", ">="}
_FLIP = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers ----------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k=1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message, expected=None, tok=None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col, expected)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def is_kw(self, *words, tok=None) -> bool:
        t = tok or self.tok
        return t.kind == "IDENT" and t.value.upper() in words

    def is_op(self, *ops, tok=None) -> bool:
        t = tok or self.tok
        return t.kind == "OP" and t.value in ops

    def expect_kw(self, word) -> Token:
        if not self.is_kw(word):
            self.error(f"expected {word}, found {self._show(self.tok)}", [word])
        return self.advance()

    def expect_op(self, op) -> Token:
        if not self.is_op(op):
            self.error(f"expected {op!r}, found {self._show(self.tok)}", [op])
        return self.advance()

    def ident(self, what="identifier") -> str:
        t = self.tok
        if t.kind != "IDENT" or t.value.upper() in KEYWORDS:
            self.error(f"expected {what}, found {self._show(t)}", [what])
        self.advance()
        return t.value

    @staticmethod
    def _show(t):
        return "end of input" if t.kind == "EOF" else repr(t.value)

    # -- statements ------------------------------------------------------------------
    def parse_script(self):
        commands = []
        while True:
            while self.is_op(";"):
                self.advance()
            if self.tok.kind == "EOF":
                return commands
            commands.append(self.statement())

    def statement(self) -> Command:
        start = self.tok
        if not self.is_kw(*STATEMENT_STARTS):
            self.error(f"expected a command, found {self._show(start)}", sorted(STATEMENT_STARTS))
        word = self.advance().value.upper()
        handler = getattr(self, "_stmt_" + word.lower())
        cmd = handler()
        if not (self.is_op(";") or self.tok.kind == "EOF" or self.is_kw(*STATEMENT_STARTS)):
            self.error(f"unexpected {self._show(self.tok)}")
        end = self.tok
        cmd.text = self._slice(start, end)
        return cmd

    def _slice(self, start, end):
        lines = self.text.splitlines(keepends=True)
        offset = lambda t: sum(len(l) for l in lines[: t.line - 1]) + t.col - 1  # noqa: E731
        return self.text[offset(start): offset(end) if end.kind != "EOF" else len(self.text)].strip()

    def _stmt_match(self) -> Command:
        q = self.match_body()
        return Command(CommandKind.MATCH_QUERY, query=q)

    def _stmt_explain(self) -> Command:
        self.expect_kw("MATCH")
        return Command(CommandKind.EXPLAIN, query=self.match_body())

    def _stmt_stats(self):
        return Command(CommandKind.STATS)

    def _stmt_show(self):
        self.expect_kw("INDEXES")
        return Command(CommandKind.SHOW_INDEXES)

    def _stmt_drop(self):
        if not self.is_kw("VIEW", "INDEX"):
            self.error("expected VIEW or INDEX", ["VIEW", "INDEX"])
        self.advance()
        return Command(CommandKind.DROP_INDEX, name=self.index_name())

    def _stmt_flush(self):
        if self.is_kw("ALL"):
            self.advance()
            return Command(CommandKind.FLUSH)
        if self.tok.kind in ("IDENT", "STRING") and not self.is_kw(*STATEMENT_STARTS):
            name = self.index_name()
            page = None
            if self.tok.kind == "NUMBER":
                page = int(self.advance().value)
            return Command(CommandKind.FLUSH, name=name, page=page)
        return Command(CommandKind.FLUSH)

    def index_name(self) -> str:
        if self.tok.kind == "STRING":
            return self.advance().value
        t = self.tok
        if t.kind != "IDENT" or self.is_kw(*STATEMENT_STARTS):
            self.error(f"expected an index name, found {self._show(t)}", ["index name"])
        name = self.advance().value
        # names such as ``primary-fw`` or ``View.FW``
        while self.is_op("-", ".") and self.peek().kind == "IDENT":
            name += self.advance().value + self.advance().value
        return name

    def _paths(self, n_min, n_max):
        paths = []
        while self.tok.kind == "STRING" and len(paths) < n_max:
            paths.append(self.advance().value)
        if len(paths) < n_min:
            self.error("expected a quoted file path", ["'path'"])
        return tuple(paths)

    def _stmt_load(self):
        return Command(CommandKind.LOAD, paths=self._paths(2, 3))

    def _stmt_export(self):
        return Command(CommandKind.EXPORT, paths=self._paths(2, 2))

    def _stmt_set(self):
        name = self.ident("parameter name")
        self.expect_op("=")
        value = self.number()
        return Command(CommandKind.SET, name=name, value=value)

    def number(self):
        sign = 1
        if self.is_op("-"):
            self.advance()
            sign = -1
        t = self.tok
        if t.kind != "NUMBER":
            self.error(f"expected a number, found {self._show(t)}", ["number"])
        self.advance()
        return sign * t.value

    def _stmt_reconfigure(self):
        self.expect_kw("PRIMARY")
        self.expect_kw("INDEXES")
        partitioning, sorting = self.layout()
        cfg = IndexConfig(IndexKind.PRIMARY, Direction.FW, partitioning, sorting)
        return Command(CommandKind.RECONFIGURE_PRIMARY, config=cfg)

    def _stmt_create(self):
        t = self.tok
        if t.kind != "NUMBER" or t.value not in (1, 2):
            self.error("expected 1-HOP or 2-HOP", ["1-HOP", "2-HOP"])
        hops = self.advance().value
        self.expect_op("-")
        self.expect_kw("HOP")
        self.expect_kw("VIEW")
        name = self.ident("view name")
        self.expect_kw("MATCH")
        pattern_start = self.tok
        q = self.patterns()
        pattern_text = self._slice(pattern_start, self.tok)
        pred = self.where() if self.is_kw("WHERE") else TRUE
        pred = pred.and_(_label_atoms(q))
        direction = Direction.FW_BW
        partitioning, sorting = (), (NBR_ID,)
        if self.is_kw("INDEX"):
            self.advance()
            self.expect_kw("AS")
            if hops == 1:
                direction = self.direction()
            partitioning, sorting = self.layout()
        if hops == 1:
            self._check_vars(q, {"v_s", "v_d"}, {"e_adj"}, pattern_start)
            e = q.edges["e_adj"]
            if (e.src, e.dst) != ("v_s", "v_d"):
                self.error("a 1-hop view matches v_s-[e_adj]->v_d", tok=pattern_start)
            cfg = IndexConfig(IndexKind.VERTEX, direction, partitioning, sorting, pred)
            return Command(CommandKind.CREATE_1HOP_VIEW, name=name, config=cfg)
        kind = self._edge_kind(q, pattern_start)
        cfg = IndexConfig(IndexKind.EDGE, kind.direction, partitioning, sorting, pred, kind, pattern_text)
        return Command(CommandKind.CREATE_2HOP_VIEW, name=name, config=cfg)

    def _check_vars(self, q, vertices, edges, tok):
        if set(q.vertices) != vertices or set(q.edges) != edges:
            self.error(f"view patterns use exactly the variables {sorted(vertices | edges)}", tok=tok)

    def _edge_kind(self, q, tok) -> EdgeAdjacencyKind:
        self._check_vars(q, {"v_s", "v_d", "v_nbr"}, {"e_b", "e_adj"}, tok)
        b, adj = q.edges["e_b"], q.edges["e_adj"]
        if (b.src, b.dst) != ("v_s", "v_d"):
            self.error("the bound edge must be v_s-[e_b]->v_d", tok=tok)
        ends = {adj.src, adj.dst}
        if "v_nbr" not in ends or len(ends & {"v_s", "v_d"}) != 1:
            self.error("e_adj must join v_nbr to v_s or v_d", tok=tok)
        pivot_is_dst = "v_d" in ends
        outgoing = adj.dst == "v_nbr"
        return {
            (True, True): EdgeAdjacencyKind.DEST_FW,
            (True, False): EdgeAdjacencyKind.DEST_BW,
            (False, False): EdgeAdjacencyKind.SOURCE_FW,
            (False, True): EdgeAdjacencyKind.SOURCE_BW,
        }[(pivot_is_dst, outgoing)]

    def direction(self) -> Direction:
        if self.is_kw("FW", "BW"):
            d = self.advance().value.upper()
            if d == "FW" and self.is_op("-") and self.is_kw("BW", tok=self.peek()):
                self.advance()
                self.advance()
                return Direction.FW_BW
            return Direction(d)
        self.error("expected FW, BW or FW-BW", ["FW", "BW", "FW-BW"])

    def layout(self):
        partitioning, sorting = (), (NBR_ID,)
        if self.is_kw("PARTITION"):
            self.advance()
            self.expect_kw("BY")
            partitioning = tuple(PartitionKey(*k) for k in self.keys())
        elif self.is_kw("PARTITON"):
            self.error("unknown keyword PARTITON (did you mean PARTITION?)", ["PARTITION"])
        if self.is_kw("SORT"):
            self.advance()
            self.expect_kw("BY")
            sorting = tuple(SortKey(*k) for k in self.keys())
        return partitioning, sorting

    def keys(self):
        out = []
        while True:
            t = self.tok
            subject = self.ident("e_adj or v_nbr")
            if subject not in ("e_adj", "v_nbr"):
                self.error(f"keys refer to e_adj or v_nbr, not {subject!r}", tok=t)
            self.expect_op(".")
            prop = self.prop_name()
            out.append((Subject(subject), prop))
            if not self.is_op(","):
                return out
            self.advance()

    def prop_name(self) -> str:
        t = self.tok
        if t.kind != "IDENT":
            self.error(f"expected a property name, found {self._show(t)}", ["property"])
        self.advance()
        return t.value

    # -- patterns ------------------------------------------------------------------
    def match_body(self) -> QueryGraph:
        q = self.patterns()
        if self.is_kw("WHERE"):
            q.where(*self.where().atoms)
        return q

    def _pattern_start(self) -> bool:
        t = self.tok
        return self.is_op("(") or (t.kind == "IDENT" and t.value.upper() not in KEYWORDS)

    def patterns(self) -> QueryGraph:
        q = QueryGraph()
        if not self._pattern_start():
            self.error(f"expected a pattern, found {self._show(self.tok)}", ["pattern"])
        while True:
            self.chain(q)
            if self.is_op(","):
                self.advance()
                continue
            if self._pattern_start():  # juxtaposed patterns
                continue
            return q

    def node(self, q) -> str:
        if self.is_op("("):
            self.advance()
            name = self.ident("vertex variable")
            label = None
            if self.is_op(":"):
                self.advance()
                label = self.ident("vertex label")
            self.expect_op(")")
            q.add_vertex(name, label)
            return name
        name = self.ident("vertex variable")
        q.add_vertex(name)
        return name

    def chain(self, q):
        left = self.node(q)
        while self.is_op("-", "<-"):
            incoming = self.advance().value == "<-"
            self.expect_op("[")
            name, label = None, None
            if self.tok.kind == "IDENT" and not self.is_op(":"):
                name = self.ident("edge variable")
            if self.is_op(":"):
                self.advance()
                if self.tok.kind == "IDENT" and self.tok.value.upper() not in KEYWORDS:
                    label = self.advance().value
            self.expect_op("]")
            if incoming:
                self.expect_op("-")
            elif self.is_op("->"):
                self.advance()
            else:
                self.expect_op("-")
                self.expect_op(">")
            right = self.node(q)
            src, dst = (right, left) if incoming else (left, right)
            try:
                q.add_edge(src, dst, label, name)
            except Exception as exc:  # duplicate variable names
                self.error(str(exc))
            left = right

    # -- predicates ------------------------------------------------------------------
    def where(self) -> Predicate:
        self.expect_kw("WHERE")
        atoms = []
        while True:
            atoms.extend(self.comparison_chain())
            if self.is_op(",", "&") or self.is_kw("AND"):
                self.advance()
                if self.tok.kind == "EOF" or self.is_kw(*STATEMENT_STARTS) or self.is_op(";"):
                    return Predicate(tuple(atoms))  # tolerate a trailing separator
                continue
            return Predicate(tuple(atoms))

    def comparison_chain(self):
        first = self.operand()
        operands, ops = [first], []
        while True:
            op, negate = self.cmp_op()
            if op is None:
                break
            ops.append(op)
            operands.append(self.operand(negate))
        if not ops:
            self.error("expected a comparison operator", sorted(_CMP))
        return [self._atom(operands[k], ops[k], operands[k + 1]) for k in range(len(ops))]

    def cmp_op(self):
        """``(operator, negate next operand)``; operator is None at the end."""
        if self.is_op(*_CMP):
            return self.advance().value, False
        if self.is_op("<-"):  # ``x<-5`` lexes as an arrow
            self.advance()
            return "<", True
        return None, False

    def operand(self, negate=False):
        """``(value, offset, token)``; value is a PropRef or a constant."""
        t = self.tok
        if t.kind == "IDENT" and t.value.upper() not in KEYWORDS and self.is_op(".", tok=self.peek()):
            var = self.advance().value
            self.advance()
            value = PropRef(var, self.prop_name())
        elif t.kind == "IDENT" and t.value.upper() not in KEYWORDS:
            value = self.advance().value  # symbolic constant (USD, t13, v1)
        elif t.kind == "STRING":
            value = self.advance().value
        elif t.kind == "NUMBER" or self.is_op("-"):
            value = self.number()
        else:
            self.error(f"expected a property or constant, found {self._show(t)}", ["operand"])
        if negate:
            if not isinstance(value, (int, float)):
                self.error("expected a number after '<-'", tok=t)
            value = -value
        offset = 0
        while self.is_op("+", "-"):
            sign = 1 if self.advance().value == "+" else -1
            o = self.tok
            if o.kind == "NUMBER":
                term = sign * self.advance().value
            elif o.kind == "IDENT":
                self.advance()
                term = Param(o.value, sign < 0)
            else:
                self.error("expected a number or parameter", ["number", "parameter"])
            offset = _add_offsets(offset, term, self, o)
        return value, offset, t

    def _atom(self, left, op, right):
        lv, lo, lt = left
        rv, ro, rt = right
        if not isinstance(lv, PropRef):
            if not isinstance(rv, PropRef):
                self.error("a comparison needs at least one property", tok=lt)
            lv, lo, rv, ro, op = rv, ro, lv, lo, _FLIP[op]
        # lhs + lo op rhs + ro  ==>  lhs op rhs + (ro - lo)
        neg_lo = -lo if not isinstance(lo, Param) else Param(lo.name, not lo.negated)
        offset = _add_offsets(ro, neg_lo if lo else 0, self, lt)
        return Atom(lv, op, rv, offset)


def _add_offsets(a, b, parser, tok):
    if not a:
        return b
    if not b:
        return a
    if isinstance(a, Param) or isinstance(b, Param):
        parser.error("only one parameter or number may offset a comparison", tok=tok)
    return a + b


def _label_atoms(q: QueryGraph) -> Predicate:
    return Predicate(tuple(a for a in q.full_predicate() if a.lhs.prop == "label" and not a.is_cross
                           and a not in q.predicate.atoms))


def parse(text: str) -> Command:
    """Parse exactly one command."""
    commands = Parser(text).parse_script()
    if len(commands) != 1:
        raise ParseError(f"expected one command, found {len(commands)}", 1, 1)
    return commands[0]


def parse_script(text: str) -> list:
    return Parser(text).parse_script()


def parse_query(text: str) -> QueryGraph:
    cmd = parse(text if text.lstrip().upper().startswith(("MATCH", "EXPLAIN")) else "MATCH " + text)
    if cmd.query is None:
        raise ParseError("expected a MATCH query", 1, 1)
    return cmd.query


def parse_predicate(text: str) -> Predicate:
    p = Parser("WHERE " + text)
    pred = p.where()
    if p.tok.kind != "EOF":
        p.error(f"unexpected {p._show(p.tok)}")
    return pred
