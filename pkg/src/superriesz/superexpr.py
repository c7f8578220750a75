"""Expression trees for test superfunctions.

Integrands such as Ber(Y)^n e^{-str(xY)} are assembled once as small trees and
then evaluated at supermatrix points whose entries are Grassmann numbers.  A
prefix (s-expression) text form is provided for the CLI.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

from .grassmann import GrassmannAlgebra, GrassmannNumber
from .supermatrix import SuperMatrix

Value = Union[GrassmannNumber, SuperMatrix]

_SCALAR_OPS = {"exp", "pow", "str", "det", "ber"}
_MATRIX_OPS = {"mul", "inv", "minor"}


class ExprError(ValueError):
    """Malformed expression or binding problem."""


@dataclass(frozen=True)
class SuperExpr:
    """A node in a superfunction expression tree."""

    kind: str
    children: tuple["SuperExpr", ...] = ()
    payload: object = None

    # ---------------------------------------------------------- constructors

    @staticmethod
    def const(value: Value) -> "SuperExpr":
        return SuperExpr("const", payload=value)

    @staticmethod
    def scalar(c: complex) -> "SuperExpr":
        return SuperExpr("scalar", payload=complex(c))

    @staticmethod
    def slot(name: str) -> "SuperExpr":
        return SuperExpr("slot", payload=name)

    @staticmethod
    def mul(*xs: "SuperExpr") -> "SuperExpr":
        return SuperExpr("mul", tuple(xs))

    @staticmethod
    def add(*xs: "SuperExpr") -> "SuperExpr":
        return SuperExpr("add", tuple(xs))

    @staticmethod
    def smul(c: complex, x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("smul", (x,), complex(c))

    @staticmethod
    def inv(x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("inv", (x,))

    @staticmethod
    def minor(k: int, x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("minor", (x,), int(k))

    @staticmethod
    def det(x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("det", (x,))

    @staticmethod
    def ber(x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("ber", (x,))

    @staticmethod
    def strace(x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("str", (x,))

    @staticmethod
    def exp(x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("exp", (x,))

    @staticmethod
    def power(alpha: float, x: "SuperExpr") -> "SuperExpr":
        return SuperExpr("pow", (x,), float(alpha))

    # ---------------------------------------------------------- evaluation

    def eval(self, bindings: Mapping[str, Value]) -> Value:
        k = self.kind
        if k == "const":
            return self.payload
        if k == "scalar":
            alg = _find_algebra(bindings)
            return alg.scalar(self.payload)
        if k == "slot":
            try:
                return bindings[self.payload]
            except KeyError:
                raise ExprError(f"unbound slot {self.payload!r}") from None
        vals = [c.eval(bindings) for c in self.children]
        if k == "mul":
            out = vals[0]
            for v in vals[1:]:
                out = _generic_mul(out, v)
            return out
        if k == "add":
            out = vals[0]
            for v in vals[1:]:
                if isinstance(out, SuperMatrix) != isinstance(v, SuperMatrix):
                    raise ExprError("add mixes matrix and scalar operands")
                out = out + v
            return out
        if k == "smul":
            v = vals[0]
            return v.scale(self.payload) if isinstance(v, SuperMatrix) else v * self.payload
        if k == "inv":
            return _want_matrix(vals[0], "inv").inverse()
        if k == "minor":
            return _want_matrix(vals[0], "minor").principal_minor(self.payload)
        if k == "det":
            return _want_matrix(vals[0], "det").det()
        if k == "ber":
            return _want_matrix(vals[0], "ber").berezinian()
        if k == "str":
            return _want_matrix(vals[0], "str").supertrace()
        if k == "exp":
            return _want_scalar(vals[0], "exp").exp()
        if k == "pow":
            s = _want_scalar(vals[0], "pow")
            a = self.payload
            return s ** int(a) if float(a).is_integer() else s.power(a)
        raise ExprError(f"unknown node kind {k!r}")

    # ---------------------------------------------------------- text form

    def to_text(self) -> str:
        k = self.kind
        if k == "slot":
            return str(self.payload)
        if k == "scalar":
            return _fmt_complex(self.payload)
        if k == "const":
            raise ExprError("const nodes with inline values have no text form; "
                            "build them through the CLI matrix syntax")
        head = k
        if k in ("minor",):
            head = f"{k} {self.payload}"
        elif k == "pow":
            head = f"pow {self.payload:g}"
        elif k == "smul":
            head = f"smul {_fmt_complex(self.payload)}"
        inner = " ".join(c.to_text() for c in self.children)
        return f"({head} {inner})" if inner else f"({head})"


def _fmt_complex(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:g}"
    return f"{c.real:g}{c.imag:+g}j"


def _find_algebra(bindings: Mapping[str, Value]) -> GrassmannAlgebra:
    for v in bindings.values():
        return v.algebra
    raise ExprError("cannot infer the algebra from empty bindings")


def _want_matrix(v: Value, op: str) -> SuperMatrix:
    if not isinstance(v, SuperMatrix):
        raise ExprError(f"{op} needs a matrix operand")
    return v


def _want_scalar(v: Value, op: str) -> GrassmannNumber:
    if not isinstance(v, GrassmannNumber):
        raise ExprError(f"{op} needs a scalar operand")
    return v


def _generic_mul(a: Value, b: Value) -> Value:
    amat = isinstance(a, SuperMatrix)
    bmat = isinstance(b, SuperMatrix)
    if amat and bmat:
        return a @ b
    if amat:
        return a.map_entries(lambda v: v * b)
    if bmat:
        return b.map_entries(lambda v: a * v)
    return a * b


def laplace_kernel(x: SuperMatrix) -> SuperExpr:
    """Expression for e^{-str(x Y)} with Y left as a slot."""
    return SuperExpr.exp(SuperExpr.smul(-1, SuperExpr.strace(
        SuperExpr.mul(SuperExpr.const(x), SuperExpr.slot("Y")))))


# ------------------------------------------------------------ text parsing

_TOKEN = re.compile(r"\(|\)|[^\s()]+")

_SLOT_NAMES = {"Y", "z", "w", "zeta", "omega"}


def parse_expr(text: str, algebra: GrassmannAlgebra | None = None,
               fmt: tuple[int, int] | None = None) -> SuperExpr:
    """Parse the prefix text form; algebra/fmt enable (const ...) literals."""
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise ExprError("empty expression")
    pos = 0

    def walk() -> SuperExpr:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise ExprError("unexpected ')'")
        if tok != "(":
            return _parse_atom(tok)
        op = tokens[pos]
        pos += 1
        payload = None
        if op == "minor":
            payload = int(tokens[pos]); pos += 1
        elif op == "pow":
            payload = float(tokens[pos]); pos += 1
        elif op == "smul":
            payload = complex(tokens[pos]); pos += 1
        elif op == "const":
            if algebra is None or fmt is None:
                raise ExprError("const literals need an algebra and format")
            lit = tokens[pos]; pos += 1
            payload = parse_matrix(lit, algebra, fmt)
        children = []
        while tokens[pos] != ")":
            children.append(walk())
        pos += 1
        if op == "const":
            return SuperExpr("const", payload=payload)
        if op in ("minor", "pow", "smul"):
            return SuperExpr(op, tuple(children), payload)
        if op in ("mul", "add", "inv", "det", "ber", "str", "exp"):
            return SuperExpr(op, tuple(children))
        raise ExprError(f"unknown operator {op!r}")

    out = walk()
    if pos != len(tokens):
        raise ExprError("trailing tokens after expression")
    return out


def _parse_atom(tok: str) -> SuperExpr:
    if tok in _SLOT_NAMES or tok.startswith("param:"):
        return SuperExpr.slot(tok)
    try:
        return SuperExpr.scalar(complex(tok))
    except ValueError:
        raise ExprError(f"unknown atom {tok!r}") from None


_TERM_SPLIT = re.compile(r"(?<![eE*^(,])(?=[+-])")


def parse_entry(text: str, algebra: GrassmannAlgebra) -> GrassmannNumber:
    """Parse one matrix entry: sums of complex literals and c*t<k> terms."""
    text = text.strip()
    if not text:
        raise ExprError("empty matrix entry")
    out = algebra.zero
    for term in _TERM_SPLIT.split(text):
        term = term.strip()
        if not term:
            continue
        sign = 1.0
        while term and term[0] in "+-":
            if term[0] == "-":
                sign = -sign
            term = term[1:]
        if "*" in term:
            cpart, gpart = term.split("*", 1)
            coef = complex(cpart) * sign
        elif term.startswith("t") and term[1:].isdigit():
            coef, gpart = complex(sign), term
        else:
            out = out + algebra.scalar(complex(term) * sign)
            continue
        gpart = gpart.strip()
        if not (gpart.startswith("t") and gpart[1:].isdigit()):
            raise ExprError(f"bad generator token {gpart!r}")
        idx = int(gpart[1:]) - 1
        if not 0 <= idx < algebra.n_generators:
            raise ExprError(f"generator {gpart} outside the declared odd parameters")
        out = out + algebra.gen(idx) * coef
    return out


def parse_matrix(text: str, algebra: GrassmannAlgebra, fmt: tuple[int, int]) -> SuperMatrix:
    """Parse 'diag:a,b' or row-major 'a,b;c,d' into a (p|q) square supermatrix."""
    p, q = fmt
    n = p + q
    text = text.strip()
    if text.startswith("diag:"):
        vals = [parse_entry(v, algebra) for v in text[5:].split(",")]
        if len(vals) != n:
            raise ExprError(f"expected {n} diagonal entries")
        return SuperMatrix.diagonal(algebra, fmt, vals)
    rows = [r for r in text.split(";") if r.strip()]
    if len(rows) != n:
        raise ExprError(f"expected {n} rows")
    ent = []
    for r in rows:
        vals = [parse_entry(v, algebra) for v in r.split(",")]
        if len(vals) != n:
            raise ExprError(f"expected {n} entries per row")
        ent.append(vals)
    return SuperMatrix(algebra, fmt, fmt, ent)
