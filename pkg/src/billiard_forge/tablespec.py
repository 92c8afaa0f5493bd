"""Line-oriented text format for tables.

Grammar (one statement per line, ``#`` starts a comment)::

    tablespec v1 <name>
    arc   id=<id> center=<x>,<y> radius=<r> from=<rad> to=<rad> <ccw|cw>
    line  id=<id> from=<x>,<y> to=<x>,<y>
    curve id=<id> start=<x>,<y> heading=<rad> length=<L> kappa=[s0:k0,s1:k1,...]

Parameters must appear in exactly this order. Segments are chained in
file order and the chain must close. :func:`emit_tablespec` writes the
canonical form with 17 significant digits so that parsing reproduces
every float bit for bit.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ValidationError
from .geometry import ArcSegment, CLOSURE_TOL, CurvatureProfile, IntrinsicCurve, LineSegment, Table

VERSION = "v1"

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")
_NAME = re.compile(r"[^\s#]+")

# keyword -> ordered (parameter, kind); kinds: id, num, pair, knots
_STATEMENTS = {
    "arc": (("id", "id"), ("center", "pair"), ("radius", "num"), ("from", "num"), ("to", "num")),
    "line": (("id", "id"), ("from", "pair"), ("to", "pair")),
    "curve": (("id", "id"), ("start", "pair"), ("heading", "num"), ("length", "num"), ("kappa", "knots")),
}


class TableSpecError(ValidationError):
    """Syntax or semantic error located at a 1-based line and column."""

    def __init__(self, message, line, column, expected=None):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected) if expected else ()
        text = f"line {line}, column {column}: {message}"
        if self.expected:
            text += f" (expected {' or '.join(self.expected)})"
        super().__init__(text)


class _Cursor:
    """Character cursor over a single line."""

    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, message, expected=None, pos=None):
        p = self.pos if pos is None else pos
        return TableSpecError(message, self.lineno, p + 1, expected)

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def skip_space(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def require_space(self, what):
        if self.at_end() or self.text[self.pos] not in " \t":
            raise self.error("missing separator", [what])
        self.skip_space()

    def literal(self, lit: str, expected=None):
        if not self.text.startswith(lit, self.pos):
            raise self.error(f"unexpected {self._peek()}", expected or [repr(lit)])
        self.pos += len(lit)

    def match(self, pattern: re.Pattern, what: str) -> str:
        m = pattern.match(self.text, self.pos)
        if not m:
            raise self.error(f"unexpected {self._peek()}", [what])
        self.pos = m.end()
        return m.group(0)

    def number(self) -> float:
        start = self.pos
        tok = self.match(_NUMBER, "decimal number")
        # reject things like 1.5abc or 1e5e3 glued to the literal
        if not self.at_end() and self.text[self.pos] not in " \t,:]":
            raise self.error(f"malformed number {self._peek()}", ["decimal number"], pos=start)
        val = float(tok)
        if not math.isfinite(val):
            raise self.error(f"number {tok!r} overflows", ["finite number"], pos=start)
        return val

    def _peek(self) -> str:
        if self.at_end():
            return "end of line"
        m = re.match(r"\S+", self.text[self.pos:])
        return repr(m.group(0)) if m else repr(self.text[self.pos])


def _strip_comment(line: str) -> str:
    k = line.find("#")
    return (line if k < 0 else line[:k]).rstrip()


def _parse_value(cur: _Cursor, kind: str):
    if kind == "id":
        return cur.match(_IDENT, "identifier")
    if kind == "num":
        return cur.number()
    if kind == "pair":
        x = cur.number()
        cur.literal(",", [","])
        return (x, cur.number())
    # knots: [s:k,s:k,...]
    cur.literal("[", ["'['"])
    knots = []
    while True:
        col = cur.pos
        s = cur.number()
        cur.literal(":", ["':'"])
        k = cur.number()
        knots.append((s, k, col))
        if cur.text.startswith(",", cur.pos):
            cur.pos += 1
            continue
        cur.literal("]", ["','", "']'"])
        return knots


def _parse_statement(cur: _Cursor):
    kw_col = cur.pos
    kw = cur.match(_IDENT, "statement keyword")
    if kw not in _STATEMENTS:
        raise cur.error(f"unknown statement {kw!r}", list(_STATEMENTS), pos=kw_col)
    values, cols = {}, {}
    for name, kind in _STATEMENTS[kw]:
        cur.require_space(f"{name}=")
        col = cur.pos
        key = cur.match(_IDENT, f"{name}=")
        if key != name:
            what = "duplicate" if key in values else "misplaced" if any(key == n for n, _ in _STATEMENTS[kw]) else "unknown"
            raise cur.error(f"{what} parameter {key!r}", [f"{name}="], pos=col)
        cur.literal("=", ["'='"])
        cols[name] = cur.pos
        values[name] = _parse_value(cur, kind)
    if kw == "arc":
        cur.require_space("ccw or cw")
        col = cur.pos
        flag = cur.match(_IDENT, "ccw or cw")
        if flag not in ("ccw", "cw"):
            raise cur.error(f"unexpected {flag!r}", ["ccw", "cw"], pos=col)
        values["ccw"] = flag == "ccw"
        cols["ccw"] = col
    cur.skip_space()
    if not cur.at_end():
        raise cur.error(f"unexpected {cur._peek()}", ["end of statement"])
    return kw, values, cols


def _build_segment(kw, v, cols, lineno):
    def fail(message, col):
        return TableSpecError(message, lineno, col + 1)

    if kw == "arc":
        if not v["radius"] > 0:
            raise fail("arc radius must be positive", cols["radius"])
        span = v["to"] - v["from"]
        if (v["ccw"] and not span > 0) or (not v["ccw"] and not span < 0):
            raise fail(f"arc angles must {'increase' if v['ccw'] else 'decrease'} for {'ccw' if v['ccw'] else 'cw'}",
                       cols["to"])
        if abs(span) > 2 * math.pi + 1e-12:
            raise fail("arc spans more than a full turn", cols["to"])
        return ArcSegment(v["center"], v["radius"], v["from"], v["to"], v["ccw"])
    if kw == "line":
        if v["from"] == v["to"]:
            raise fail("line has zero length", cols["to"])
        return LineSegment(v["from"], v["to"])
    knots = v["kappa"]
    if len(knots) < 2:
        raise fail("curvature profile needs at least two knots", cols["kappa"])
    if knots[0][0] != 0.0:
        raise fail("first knot must sit at s = 0", knots[0][2])
    for (a, _, _), (b, _, col) in zip(knots, knots[1:]):
        if not b > a:
            raise fail("bad knot order: arclengths must strictly increase", col)
    L = v["length"]
    if not L > 0:
        raise fail("curve length must be positive", cols["length"])
    if abs(knots[-1][0] - L) > 1e-12 * max(1.0, L):
        raise fail(f"length {L!r} differs from the last knot {knots[-1][0]!r}", cols["length"])
    prof = CurvatureProfile(tuple(k[0] for k in knots), tuple(k[1] for k in knots))
    return IntrinsicCurve(prof, v["start"], v["heading"])


def parse_tablespec(text: str) -> Table:
    """Parse a tablespec document into a closed :class:`Table`."""
    name = None
    header_line = 0
    segs, ids, lines = [], [], []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw)
        if not body.strip():
            continue
        cur = _Cursor(body, lineno)
        cur.skip_space()
        if name is None:
            cur.literal("tablespec", ["'tablespec'"])
            cur.require_space("version tag")
            col = cur.pos
            ver = cur.match(_IDENT, "version tag")
            if ver != VERSION:
                raise cur.error(f"unsupported version {ver!r}", [VERSION], pos=col)
            cur.require_space("table name")
            name = cur.match(_NAME, "table name")
            cur.skip_space()
            if not cur.at_end():
                raise cur.error(f"unexpected {cur._peek()}", ["end of header"])
            header_line = lineno
            continue
        kw, values, cols = _parse_statement(cur)
        if values["id"] in seen:
            raise TableSpecError(f"duplicate id {values['id']!r} (first used on line {seen[values['id']]})",
                                 lineno, cols["id"] + 1)
        seen[values["id"]] = lineno
        segs.append(_build_segment(kw, values, cols, lineno))
        ids.append(values["id"])
        lines.append(lineno)
    if name is None:
        raise TableSpecError("empty document", 1, 1, ["'tablespec'"])
    if not segs:
        raise TableSpecError("table has no segments", header_line, 1, list(_STATEMENTS))
    for k, seg in enumerate(segs):
        nxt = segs[(k + 1) % len(segs)]
        gap = float(np.hypot(*(seg.point_at(seg.length) - nxt.point_at(0.0))))
        if gap > CLOSURE_TOL:
            raise TableSpecError(f"open chain: end of {ids[k]!r} misses the start of "
                                 f"{ids[(k + 1) % len(segs)]!r} by {gap:.3e}", lines[k], 1)
    try:
        return Table(tuple(segs), name=name, ids=tuple(ids))
    except ValidationError as e:
        raise TableSpecError(str(e), header_line, 1) from e


def _g(x: float) -> str:
    return format(float(x), ".17g")


def emit_tablespec(table: Table) -> str:
    """Canonical text of ``table``."""
    if not isinstance(table, Table) or not table.segments:
        raise ValidationError("cannot emit an empty table")
    if not _NAME.fullmatch(table.name):
        raise ValidationError(f"table name {table.name!r} must be a single token")
    out = [f"tablespec {VERSION} {table.name}"]
    for sid, seg in zip(table.ids, table.segments):
        if not _IDENT.fullmatch(sid):
            raise ValidationError(f"segment id {sid!r} is not an identifier")
        if isinstance(seg, ArcSegment):
            out.append(f"arc id={sid} center={_g(seg.center[0])},{_g(seg.center[1])} radius={_g(seg.radius)} "
                       f"from={_g(seg.theta0)} to={_g(seg.theta1)} {'ccw' if seg.ccw else 'cw'}")
        elif isinstance(seg, LineSegment):
            out.append(f"line id={sid} from={_g(seg.a[0])},{_g(seg.a[1])} to={_g(seg.b[0])},{_g(seg.b[1])}")
        elif isinstance(seg, IntrinsicCurve):
            p = seg.profile
            knots = ",".join(f"{_g(s)}:{_g(k)}" for s, k in zip(p.s, p.kappa))
            out.append(f"curve id={sid} start={_g(seg.start[0])},{_g(seg.start[1])} heading={_g(seg.heading0)} "
                       f"length={_g(p.total_length)} kappa=[{knots}]")
        else:
            raise ValidationError(f"cannot emit segment of type {type(seg).__name__}")
    return "\n".join(out) + "\n"


def read_table(path) -> Table:
    with open(path, encoding="utf-8") as fh:
        return parse_tablespec(fh.read())


def write_table(table: Table, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emit_tablespec(table))
