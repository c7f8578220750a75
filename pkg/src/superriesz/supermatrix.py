"""Linear superalgebra over a Grassmann algebra.

Supermatrices of format (r_even|r_odd) x (c_even|c_odd) with parity-constrained
entries, supertrace, Berezinian, principal minors and the conical functions
built from them, LDU factorisation on the big cell, and fractional group
actions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grassmann import EVEN, ODD, GrassmannAlgebra, GrassmannNumber

Format = tuple[int, int]


class SingularBodyError(ZeroDivisionError):
    """Raised when a required body matrix is not invertible."""


class ParityError(ValueError):
    """Raised when entries violate the declared parity pattern."""


def _as_gn(algebra: GrassmannAlgebra, v) -> GrassmannNumber:
    if isinstance(v, GrassmannNumber):
        if v.algebra != algebra:
            raise ValueError("entry lives in a different algebra")
        return v
    return algebra.scalar(v)


class SuperMatrix:
    """Block matrix over a Grassmann algebra with row/column parities."""

    def __init__(self, algebra, row_fmt: Format, col_fmt: Format, entries,
                 check_parity: bool = False):
        self.algebra = algebra
        self.row_fmt = (int(row_fmt[0]), int(row_fmt[1]))
        self.col_fmt = (int(col_fmt[0]), int(col_fmt[1]))
        rows = sum(self.row_fmt)
        cols = sum(self.col_fmt)
        if len(entries) != rows or any(len(r) != cols for r in entries):
            raise ValueError("entry grid does not match the declared format")
        self.entries = [[_as_gn(algebra, v) for v in row] for row in entries]
        if check_parity:
            self.check_even()

    # -- construction helpers ---------------------------------------------

    @staticmethod
    def identity(algebra, fmt: Format) -> "SuperMatrix":
        n = fmt[0] + fmt[1]
        ent = [[algebra.one if i == j else algebra.zero for j in range(n)] for i in range(n)]
        return SuperMatrix(algebra, fmt, fmt, ent)

    @staticmethod
    def zeros(algebra, row_fmt: Format, col_fmt: Format) -> "SuperMatrix":
        ent = [[algebra.zero for _ in range(sum(col_fmt))] for _ in range(sum(row_fmt))]
        return SuperMatrix(algebra, row_fmt, col_fmt, ent)

    @staticmethod
    def diagonal(algebra, fmt: Format, values) -> "SuperMatrix":
        n = fmt[0] + fmt[1]
        if len(values) != n:
            raise ValueError("need one diagonal value per row")
        ent = [[_as_gn(algebra, values[i]) if i == j else algebra.zero
                for j in range(n)] for i in range(n)]
        return SuperMatrix(algebra, fmt, fmt, ent)

    @staticmethod
    def from_blocks(a: "SuperMatrix", b: "SuperMatrix", c: "SuperMatrix", d: "SuperMatrix") -> "SuperMatrix":
        """Assemble [[a, b], [c, d]] with a: (p|0)x(p|0) ... d: (0|q)x(0|q)."""
        p = a.shape[0]
        q = d.shape[0]
        alg = a.algebra
        ent = [[None] * (p + q) for _ in range(p + q)]
        for i in range(p):
            for j in range(p):
                ent[i][j] = a.entries[i][j]
            for j in range(q):
                ent[i][p + j] = b.entries[i][j]
        for i in range(q):
            for j in range(p):
                ent[p + i][j] = c.entries[i][j]
            for j in range(q):
                ent[p + i][p + j] = d.entries[i][j]
        return SuperMatrix(alg, (p, q), (p, q), ent)

    # -- structure ----------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (sum(self.row_fmt), sum(self.col_fmt))

    def is_square(self) -> bool:
        return self.row_fmt == self.col_fmt

    def row_parity(self, i: int) -> int:
        return 0 if i < self.row_fmt[0] else 1

    def col_parity(self, j: int) -> int:
        return 0 if j < self.col_fmt[0] else 1

    def check_even(self) -> None:
        """Verify the even-supermatrix parity pattern of all entries."""
        for i, row in enumerate(self.entries):
            for j, v in enumerate(row):
                if v.is_zero():
                    continue
                want = (self.row_parity(i) + self.col_parity(j)) % 2
                par = v.parity
                if par == "mixed" or (par == ODD) != bool(want):
                    raise ParityError(f"entry ({i},{j}) has parity {par}, expected {want}")

    def block(self, which: str) -> "SuperMatrix":
        """Sub-block 'ee', 'eo', 'oe' or 'oo' as a purely even/odd-format matrix."""
        re_, ro = self.row_fmt
        ce, co = self.col_fmt
        ri = range(re_) if which[0] == "e" else range(re_, re_ + ro)
        ci = range(ce) if which[1] == "e" else range(ce, ce + co)
        ent = [[self.entries[i][j] for j in ci] for i in ri]
        rf = (len(list(ri)), 0)
        cf = (len(list(ci)), 0)
        return SuperMatrix(self.algebra, rf, cf, ent)

    def body_matrix(self) -> np.ndarray:
        """Bodies of all entries stacked as a (batch..., rows, cols) array."""
        bodies = [[np.asarray(v.body) for v in row] for row in self.entries]
        batch = np.broadcast_shapes(*[b.shape for row in bodies for b in row])
        rows, cols = self.shape
        out = np.zeros(batch + (rows, cols), dtype=complex)
        for i in range(rows):
            for j in range(cols):
                out[..., i, j] = bodies[i][j]
        return out

    def map_entries(self, fn) -> "SuperMatrix":
        ent = [[fn(v) for v in row] for row in self.entries]
        return SuperMatrix(self.algebra, self.row_fmt, self.col_fmt, ent)

    def __repr__(self) -> str:
        return f"SuperMatrix({self.row_fmt}x{self.col_fmt}, {self.entries!r})"

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        ent = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)]
        return SuperMatrix(self.algebra, self.row_fmt, self.col_fmt, ent)

    def __sub__(self, other: "SuperMatrix") -> "SuperMatrix":
        return self + other.scale(-1)

    def scale(self, c) -> "SuperMatrix":
        return self.map_entries(lambda v: v * c)

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        if self.col_fmt != other.row_fmt:
            raise ValueError(f"format mismatch: {self.col_fmt} vs {other.row_fmt}")
        n, k = self.shape
        k2, m = other.shape
        alg = self.algebra
        ent = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = alg.zero
                for t in range(k):
                    a = self.entries[i][t]
                    b = other.entries[t][j]
                    if a.is_zero() or b.is_zero():
                        continue
                    acc = acc + a * b
                row.append(acc)
            ent.append(row)
        return SuperMatrix(alg, self.row_fmt, other.col_fmt, ent)

    def supertrace(self) -> GrassmannNumber:
        if not self.is_square():
            raise ValueError("supertrace needs a square matrix")
        out = self.algebra.zero
        for i in range(self.shape[0]):
            d = self.entries[i][i]
            out = out - d if self.row_parity(i) else out + d
        return out

    def inverse(self) -> "SuperMatrix":
        """Exact inverse via the nilpotent Neumann series around the body.

        Requires the body matrix to be invertible, which for even square
        supermatrices means both diagonal blocks have invertible bodies.
        """
        if not self.is_square():
            raise ValueError("inverse needs a square matrix")
        body = self.body_matrix()
        try:
            binv = np.linalg.inv(body)
        except np.linalg.LinAlgError as exc:
            raise SingularBodyError("body matrix is singular") from exc
        if not np.all(np.isfinite(binv)):
            raise SingularBodyError("body matrix is singular")
        n = self.shape[0]
        alg = self.algebra
        b0inv = SuperMatrix(alg, self.row_fmt, self.col_fmt,
                            [[binv[..., i, j] if binv.ndim > 2 else binv[i, j]
                              for j in range(n)] for i in range(n)])
        nil = self - SuperMatrix(alg, self.row_fmt, self.col_fmt,
                                 [[body[..., i, j] if body.ndim > 2 else body[i, j]
                                   for j in range(n)] for i in range(n)])
        # X^-1 = sum_k (-B^-1 N)^k B^-1, finite because N is nilpotent
        term = b0inv
        out = b0inv
        factor = (b0inv @ nil).scale(-1)
        for _ in range(alg.n_generators):
            term = factor @ term
            if all(v.is_zero() for row in term.entries for v in row):
                break
            out = out + term
        return out

    # -- determinants and Berezinians -----------------------------------------

    def det(self) -> GrassmannNumber:
        """Determinant; entries must commute (even parity)."""
        n, m = self.shape
        if n != m:
            raise ValueError("det needs a square matrix")
        alg = self.algebra
        if n == 0:
            return alg.one
        for row in self.entries:
            for v in row:
                if v.parity == ODD or v.parity == "mixed":
                    raise ParityError("det is defined for matrices with even entries")
        out = alg.zero
        for perm in itertools.permutations(range(n)):
            sgn = _perm_sign(perm)
            term = self.entries[0][perm[0]]
            for i in range(1, n):
                term = term * self.entries[i][perm[i]]
            out = out + term * sgn
        return out

    def berezinian(self) -> GrassmannNumber:
        """Ber = det(A - B D^-1 C) det(D)^-1 (A-block fallback when D is singular)."""
        if not self.is_square():
            raise ValueError("Berezinian needs a square even supermatrix")
        p, q = self.row_fmt
        if q == 0:
            return self.det()
        a, b = self.block("ee"), self.block("eo")
        c, d = self.block("oe"), self.block("oo")
        if p == 0:
            return d.det().inverse()
        try:
            dinv = d.inverse()
        except SingularBodyError:
            # Ber = det(A) det(D - C A^-1 B)^-1
            try:
                ainv = a.inverse()
                return a.det() * (d - c @ ainv @ b).det().inverse()
            except ZeroDivisionError as exc:
                raise SingularBodyError("both Schur routes have singular bodies") from exc
        schur = a - b @ dinv @ c
        return schur.det() * d.det().inverse()

    def principal_minor(self, k: int) -> "SuperMatrix":
        """Leading k x k corner as a (min(k,p) | max(0,k-p)) supermatrix."""
        p, q = self.row_fmt
        if not 1 <= k <= p + q:
            raise ValueError("minor index out of range")
        fmt = (min(k, p), max(0, k - p))
        ent = [[self.entries[i][j] for j in range(k)] for i in range(k)]
        return SuperMatrix(self.algebra, fmt, fmt, ent)

    def delta_k(self, k: int) -> GrassmannNumber:
        """Delta_k(Z) = Ber([Z]_k); a determinant while k <= p."""
        minor = self.principal_minor(k)
        return minor.berezinian()

    def delta_m(self, m: "MultiIndex") -> GrassmannNumber:
        """Conical function Delta_m = prod_k Delta_k^(m_k - m_{k+1})."""
        p, q = self.row_fmt
        if (p, q) != (m.p, m.q):
            raise ValueError("multi-index does not match the matrix format")
        out = self.algebra.one
        for k in range(1, p + q + 1):
            e = m.exponent(k)
            if e == 0:
                continue
            dk = self.delta_k(k)
            if k <= p and not float(e).is_integer():
                out = out * dk.power(float(e))
            else:
                out = out * dk ** int(e)
        return out

    # -- big cell -----------------------------------------------------------

    def in_big_cell(self) -> bool:
        """True when all principal minors have invertible bodies."""
        if not self.is_square():
            return False
        p, q = self.row_fmt
        body = self.body_matrix()
        zb = body[..., :p, :p]
        wb = body[..., p:, p:]
        for k in range(1, p + 1):
            if not np.all(np.abs(np.linalg.det(zb[..., :k, :k])) > 0):
                return False
        for k in range(1, q + 1):
            if not np.all(np.abs(np.linalg.det(wb[..., :k, :k])) > 0):
                return False
        return True

    def ldu(self) -> tuple["SuperMatrix", list[GrassmannNumber], "SuperMatrix"]:
        """Z = L diag(d) U with L/U unitriangular; requires the big cell."""
        if not self.in_big_cell():
            raise SingularBodyError("LDU needs all principal-minor bodies invertible")
        n = self.shape[0]
        alg = self.algebra
        s = [[v for v in row] for row in self.entries]
        lower = [[alg.one if i == j else alg.zero for j in range(n)] for i in range(n)]
        upper = [[alg.one if i == j else alg.zero for j in range(n)] for i in range(n)]
        diag: list[GrassmannNumber] = []
        for k in range(n):
            dk = s[k][k]
            dinv = dk.inverse()
            diag.append(dk)
            for i in range(k + 1, n):
                lower[i][k] = s[i][k] * dinv
            for j in range(k + 1, n):
                upper[k][j] = dinv * s[k][j]
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    s[i][j] = s[i][j] - s[i][k] * dinv * s[k][j]
        lmat = SuperMatrix(alg, self.row_fmt, self.col_fmt, lower)
        umat = SuperMatrix(alg, self.row_fmt, self.col_fmt, upper)
        return lmat, diag, umat

    def allclose(self, other: "SuperMatrix", atol: float = 1e-12) -> bool:
        if self.shape != other.shape:
            return False
        return all(a.allclose(b, atol=atol)
                   for ra, rb in zip(self.entries, other.entries)
                   for a, b in zip(ra, rb))


def _perm_sign(perm: Sequence[int]) -> int:
    sgn = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sgn = -sgn
    return sgn


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector (m_1..m_{p+q}); boson entries real, fermion entries int."""

    boson: tuple[float, ...]
    fermion: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "boson", tuple(float(x) for x in self.boson))
        ferm = []
        for x in self.fermion:
            if float(x) != int(x):
                raise ValueError("fermion-sector exponents must be integers")
            ferm.append(int(x))
        object.__setattr__(self, "fermion", tuple(ferm))

    @staticmethod
    def from_list(values, p: int, q: int) -> "MultiIndex":
        if len(values) != p + q:
            raise ValueError(f"expected {p + q} entries")
        return MultiIndex(tuple(values[:p]), tuple(values[p:]))

    @staticmethod
    def constant(v, p: int, q: int) -> "MultiIndex":
        return MultiIndex((v,) * p, (int(v),) * q)

    @property
    def p(self) -> int:
        return len(self.boson)

    @property
    def q(self) -> int:
        return len(self.fermion)

    @property
    def entries(self) -> tuple[float, ...]:
        return self.boson + self.fermion

    def entry(self, k: int) -> float:
        return self.entries[k - 1]

    def exponent(self, k: int) -> float:
        """Exponent of Delta_k: m_k - m_{k+1}, with m_{p+q+1} = 0."""
        ent = self.entries
        nxt = ent[k] if k < len(ent) else 0.0
        return ent[k - 1] - nxt

    def __str__(self) -> str:
        return "(" + ",".join(f"{v:g}" for v in self.entries) + ")"


@dataclass
class GroupElement:
    """h = diag(A, D) in K_C, optionally a full (A,B;C,D) block matrix."""

    a: SuperMatrix
    d: SuperMatrix
    b: SuperMatrix | None = None
    c: SuperMatrix | None = None

    def __post_init__(self):
        if self.a.row_fmt != self.d.row_fmt or self.a.col_fmt != self.d.col_fmt:
            raise ValueError("A and D must share the (p|q) format")

    @property
    def fmt(self) -> Format:
        return self.a.row_fmt

    @staticmethod
    def block_diagonal(a: SuperMatrix, d: SuperMatrix) -> "GroupElement":
        return GroupElement(a, d)

    @staticmethod
    def diagonal(algebra, fmt: Format, a_values, d_values) -> "GroupElement":
        return GroupElement(SuperMatrix.diagonal(algebra, fmt, a_values),
                            SuperMatrix.diagonal(algebra, fmt, d_values))

    def is_diagonal(self) -> bool:
        if self.b is not None or self.c is not None:
            return False
        n = sum(self.fmt)
        for mat in (self.a, self.d):
            for i in range(n):
                for j in range(n):
                    if i != j and not mat.entries[i][j].is_zero():
                        return False
        return True

    def compose(self, other: "GroupElement") -> "GroupElement":
        if self.b is not None or other.b is not None:
            raise NotImplementedError("composition only for block-diagonal elements")
        return GroupElement(self.a @ other.a, self.d @ other.d)

    def inverse(self) -> "GroupElement":
        if self.b is not None or self.c is not None:
            raise NotImplementedError("inverse only for block-diagonal elements")
        return GroupElement(self.a.inverse(), self.d.inverse())

    def act(self, z: SuperMatrix) -> SuperMatrix:
        """Fractional action g.Z = (AZ+B)(CZ+D)^-1; block-diagonal: A Z D^-1."""
        if self.b is None and self.c is None:
            return self.a @ z @ self.d.inverse()
        alg = z.algebra
        b = self.b if self.b is not None else SuperMatrix.zeros(alg, self.fmt, self.fmt)
        c = self.c if self.c is not None else SuperMatrix.zeros(alg, self.fmt, self.fmt)
        num = self.a @ z + b
        den = c @ z + self.d
        return num @ den.inverse()

    def chi_m(self, m: MultiIndex) -> GrassmannNumber:
        """Character chi_m(t) for diagonal t = (diag(a), diag(d))."""
        if not self.is_diagonal():
            raise ValueError("chi_m needs a diagonal group element")
        p, q = self.fmt
        if (p, q) != (m.p, m.q):
            raise ValueError("multi-index does not match the group format")
        out = self.a.algebra.one
        for j in range(p + q):
            ratio = self.a.entries[j][j].inverse() * self.d.entries[j][j]
            mj = m.entry(j + 1)
            e = mj if j < p else -mj
            if e == 0:
                continue
            if j < p and not float(e).is_integer():
                out = out * ratio.power(float(e))
            else:
                out = out * ratio ** int(e)
        return out


def vrho(z: SuperMatrix) -> GrassmannNumber:
    """det(z - zeta w^-1 omega)^q det(w - omega z^-1 zeta)^p on the (p|q) block Z."""
    p, q = z.row_fmt
    zb, zeta = z.block("ee"), z.block("eo")
    omega, w = z.block("oe"), z.block("oo")
    out = z.algebra.one
    if q > 0 and p > 0:
        winv = w.inverse()
        zinv = zb.inverse()
        out = out * (zb - zeta @ winv @ omega).det() ** q
        out = out * (w - omega @ zinv @ zeta).det() ** p
    elif p > 0:
        out = out * zb.det() ** q  # q = 0: empty product, stays 1
    elif q > 0:
        out = out * w.det() ** p  # p = 0: stays 1
    return out


def vrho_via_berezinian(z: SuperMatrix) -> GrassmannNumber:
    """Equivalent form Ber(Z)^{q-p} det(z)^p det(w)^q (identity test surface)."""
    p, q = z.row_fmt
    out = z.algebra.one
    if q != p:
        out = out * z.berezinian() ** (q - p)
    if p:
        out = out * z.block("ee").det() ** p
    if q:
        out = out * z.block("oo").det() ** q
    return out
