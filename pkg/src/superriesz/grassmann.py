"""Exact arithmetic in finite-dimensional Grassmann algebras.

Elements are stored as sparse tables mapping generator subsets (bitmasks,
ascending generator order) to complex coefficients.  Coefficients may also be
numpy arrays of a common broadcastable shape, which lets quadrature modules
evaluate Grassmann-valued integrands on whole node grids at once.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

Coefficient = Union[complex, np.ndarray]

EVEN = "even"
ODD = "odd"
MIXED = "mixed"


class AlgebraMismatchError(ValueError):
    """Raised when combining elements of different Grassmann algebras."""


def _is_zero(c: Coefficient) -> bool:
    if isinstance(c, np.ndarray):
        return not np.any(c)
    return c == 0


def _mul_sign(left_mask: int, right_mask: int) -> int:
    """Sign (+1/-1) for theta^I * theta^J by transposition counting.

    Each generator in J must jump over the generators of I that are strictly
    above it; subsets themselves are kept in ascending order.
    """
    sign = 0
    i = left_mask
    while i:
        low = i & -i
        # generators of right_mask strictly below this one get jumped over
        sign ^= (right_mask & (low - 1)).bit_count() & 1
        i ^= low
    return -1 if sign else 1


class GrassmannAlgebra:
    """Grassmann algebra on a fixed, totally ordered set of generators."""

    def __init__(self, n_generators: int, labels: Sequence[str] | None = None):
        if n_generators < 0:
            raise ValueError("n_generators must be >= 0")
        if labels is None:
            labels = [f"θ{i + 1}" for i in range(n_generators)]
        if len(labels) != n_generators:
            raise ValueError("labels must match n_generators")
        self.n_generators = int(n_generators)
        self.labels = list(labels)
        self._sign_cache: dict[tuple[int, int], int] = {}

    def __repr__(self) -> str:
        return f"GrassmannAlgebra({self.n_generators}, {self.labels})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GrassmannAlgebra)
            and other.n_generators == self.n_generators
            and other.labels == self.labels
        )

    def __hash__(self):
        return hash((self.n_generators, tuple(self.labels)))

    def mul_sign(self, left_mask: int, right_mask: int) -> int:
        key = (left_mask, right_mask)
        s = self._sign_cache.get(key)
        if s is None:
            s = _mul_sign(left_mask, right_mask)
            self._sign_cache[key] = s
        return s

    def scalar(self, c: Coefficient) -> "GrassmannNumber":
        return GrassmannNumber(self, {0: c})

    @property
    def zero(self) -> "GrassmannNumber":
        return GrassmannNumber(self, {})

    @property
    def one(self) -> "GrassmannNumber":
        return self.scalar(1.0)

    def gen(self, i: int) -> "GrassmannNumber":
        if not 0 <= i < self.n_generators:
            raise IndexError(f"generator index {i} out of range")
        return GrassmannNumber(self, {1 << i: 1.0})

    def gens(self) -> list["GrassmannNumber"]:
        return [self.gen(i) for i in range(self.n_generators)]

    def subset_label(self, mask: int) -> str:
        if mask == 0:
            return "1"
        return "".join(self.labels[i] for i in range(self.n_generators) if mask >> i & 1)

    def from_coefficients(self, coeffs: Mapping[int, Coefficient]) -> "GrassmannNumber":
        return GrassmannNumber(self, dict(coeffs))


def _coerce(c) -> Coefficient:
    if isinstance(c, np.ndarray):
        return c.astype(complex) if c.dtype != complex else c
    if isinstance(c, GrassmannNumber):
        raise TypeError("expected a scalar coefficient, got a GrassmannNumber")
    return complex(c)


class GrassmannNumber:
    """Element of a GrassmannAlgebra with complex (or array) coefficients."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: GrassmannAlgebra, coeffs: Mapping[int, Coefficient]):
        self.algebra = algebra
        self.coeffs = {m: _coerce(c) for m, c in coeffs.items() if not _is_zero(c)}

    # -- basic structure ---------------------------------------------------

    @property
    def body(self) -> Coefficient:
        return self.coeffs.get(0, 0j)

    @property
    def soul(self) -> "GrassmannNumber":
        return GrassmannNumber(self.algebra, {m: c for m, c in self.coeffs.items() if m})

    @property
    def parity(self) -> str:
        has_even = any(m.bit_count() % 2 == 0 for m in self.coeffs)
        has_odd = any(m.bit_count() % 2 == 1 for m in self.coeffs)
        if has_even and has_odd:
            return MIXED
        if has_odd:
            return ODD
        return EVEN

    def is_zero(self) -> bool:
        return not self.coeffs

    def extract(self, mask: int) -> Coefficient:
        """Coefficient of the generator subset given as a bitmask."""
        if mask < 0 or mask >> self.algebra.n_generators:
            raise IndexError(f"bitmask {mask} out of range")
        return self.coeffs.get(mask, 0j)

    def max_degree(self) -> int:
        return max((m.bit_count() for m in self.coeffs), default=0)

    # -- ring operations ----------------------------------------------------

    def _check(self, other: "GrassmannNumber") -> None:
        if other.algebra is not self.algebra and other.algebra != self.algebra:
            raise AlgebraMismatchError("operands live in different algebras")

    def __add__(self, other):
        if not isinstance(other, GrassmannNumber):
            other = self.algebra.scalar(other)
        self._check(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            cur = out.get(m)
            out[m] = c if cur is None else cur + c
        return GrassmannNumber(self.algebra, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannNumber(self.algebra, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, GrassmannNumber):
            other = self.algebra.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return self.algebra.scalar(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, GrassmannNumber):
            c = _coerce(other)
            return GrassmannNumber(self.algebra, {m: v * c for m, v in self.coeffs.items()})
        self._check(other)
        sign = self.algebra.mul_sign
        out: dict[int, Coefficient] = {}
        for mi, ci in self.coeffs.items():
            for mj, cj in other.coeffs.items():
                if mi & mj:
                    continue
                m = mi | mj
                term = ci * cj if sign(mi, mj) > 0 else -(ci * cj)
                cur = out.get(m)
                out[m] = term if cur is None else cur + term
        return GrassmannNumber(self.algebra, out)

    def __rmul__(self, other):
        # scalars commute with everything
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, GrassmannNumber):
            return self * other.inverse()
        c = _coerce(other)
        return GrassmannNumber(self.algebra, {m: v / c for m, v in self.coeffs.items()})

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("use .power() for non-integer exponents")
        if k < 0:
            return self.inverse() ** (-k)
        out = self.algebra.one
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # -- odd calculus --------------------------------------------------------

    def derivative(self, i: int) -> "GrassmannNumber":
        """Left derivative with respect to generator i."""
        if not 0 <= i < self.algebra.n_generators:
            raise IndexError(f"generator index {i} out of range")
        bit = 1 << i
        below = bit - 1
        out: dict[int, Coefficient] = {}
        for m, c in self.coeffs.items():
            if m & bit:
                s = -1 if (m & below).bit_count() & 1 else 1
                out[m ^ bit] = c * s
        return GrassmannNumber(self.algebra, out)

    def berezin(self, order: Sequence[int]) -> "GrassmannNumber":
        """Iterated Berezin integral: derivatives applied in list order.

        gn.berezin([a, b]) computes d/d(theta_b) d/d(theta_a) gn, i.e. the
        first listed generator is differentiated first.
        """
        if len(set(order)) != len(order):
            raise ValueError("generators in the Berezin order must be distinct")
        out = self
        for i in order:
            out = out.derivative(i)
        return out

    # -- analytic functions of even arguments --------------------------------

    def apply_analytic(self, derivs: Callable[[int], Coefficient]) -> "GrassmannNumber":
        """Finite Taylor series sum_k derivs(k) * soul^k / k! around the body.

        derivs(k) must return the k-th derivative of the scalar function at
        the body.  The series is exact because the soul is nilpotent.
        """
        s = self.soul
        out = self.algebra.scalar(derivs(0))
        power = self.algebra.one
        kfact = 1.0
        for k in range(1, self.algebra.n_generators + 1):
            power = power * s
            if power.is_zero():
                break
            kfact *= k
            out = out + power * (derivs(k) / kfact)
        return out

    def _body_nonzero(self, what: str):
        b = self.body
        bad = not np.all(np.asarray(b) != 0)
        if bad:
            raise ZeroDivisionError(f"{what} needs a non-vanishing body")
        return b

    def exp(self) -> "GrassmannNumber":
        b = self.body
        eb = np.exp(b) if isinstance(b, np.ndarray) else complex(np.exp(b))
        return self.apply_analytic(lambda k: eb)

    def log(self) -> "GrassmannNumber":
        b = self._body_nonzero("log")

        def derivs(k: int) -> Coefficient:
            if k == 0:
                return np.log(b) if isinstance(b, np.ndarray) else complex(np.log(b))
            return (-1) ** (k - 1) * math.factorial(k - 1) / b ** k

        return self.apply_analytic(derivs)

    def inverse(self) -> "GrassmannNumber":
        b = self._body_nonzero("inverse")
        return self.apply_analytic(lambda k: (-1) ** k * math.factorial(k) / b ** (k + 1))

    def power(self, alpha: float) -> "GrassmannNumber":
        """Real power with the principal branch taken at the body."""
        if alpha == int(alpha):
            return self ** int(alpha)
        b = self._body_nonzero("power")

        def derivs(k: int) -> Coefficient:
            coef = 1.0
            for j in range(k):
                coef *= alpha - j
            val = np.power(b, alpha - k)
            return coef * (val if isinstance(val, np.ndarray) else complex(val))

        return self.apply_analytic(derivs)

    # -- comparison and display ----------------------------------------------

    def allclose(self, other: "GrassmannNumber", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        if not isinstance(other, GrassmannNumber):
            other = self.algebra.scalar(other)
        self._check(other)
        masks = set(self.coeffs) | set(other.coeffs)
        for m in masks:
            a = np.asarray(self.coeffs.get(m, 0j))
            b = np.asarray(other.coeffs.get(m, 0j))
            if not np.allclose(a, b, atol=atol, rtol=rtol):
                return False
        return True

    def max_abs_diff(self, other: "GrassmannNumber") -> float:
        if not isinstance(other, GrassmannNumber):
            other = self.algebra.scalar(other)
        self._check(other)
        masks = set(self.coeffs) | set(other.coeffs)
        worst = 0.0
        for m in masks:
            a = np.asarray(self.coeffs.get(m, 0j))
            b = np.asarray(other.coeffs.get(m, 0j))
            d = np.max(np.abs(a - b)) if a.shape or b.shape else abs(complex(a) - complex(b))
            worst = max(worst, float(d))
        return worst

    def map_coefficients(self, fn: Callable[[Coefficient], Coefficient]) -> "GrassmannNumber":
        """Apply fn to every coefficient (e.g. a quadrature contraction)."""
        return GrassmannNumber(self.algebra, {m: fn(c) for m, c in self.coeffs.items()})

    def embed(self, target: GrassmannAlgebra, gen_map: Sequence[int] | None = None) -> "GrassmannNumber":
        """Re-express in a larger algebra; gen_map must be strictly increasing."""
        if gen_map is None:
            gen_map = list(range(self.algebra.n_generators))
        if any(b <= a for a, b in zip(gen_map, gen_map[1:])):
            raise ValueError("gen_map must be strictly increasing to preserve signs")
        out: dict[int, Coefficient] = {}
        for m, c in self.coeffs.items():
            mm = 0
            for i in range(self.algebra.n_generators):
                if m >> i & 1:
                    mm |= 1 << gen_map[i]
            out[mm] = c
        return GrassmannNumber(target, out)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for m in sorted(self.coeffs):
            label = self.algebra.subset_label(m)
            c = self.coeffs[m]
            if isinstance(c, np.ndarray):
                parts.append(f"<array{c.shape}>*{label}")
            else:
                parts.append(f"({c:.6g})*{label}" if m else f"({c:.6g})")
        return " + ".join(parts)


def grade_involution_sign(a: GrassmannNumber, b: GrassmannNumber) -> int:
    """(-1)^{|a||b|} for homogeneous a, b."""
    pa, pb = a.parity, b.parity
    if MIXED in (pa, pb):
        raise ValueError("sign defined for homogeneous elements only")
    return -1 if (pa == ODD and pb == ODD) else 1
