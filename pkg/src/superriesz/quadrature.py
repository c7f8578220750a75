"""Bosonic integration backends.

* Herm+(p) via the triangular t(u) parametrisation: z_jj = u_j^2 + sum |u_kj|^2,
  with the invariant measure |dz|/|det z|^p pulling back to 2^p prod u_j^(-2j+1).
  Diagonal u_j integrals become generalised Gauss-Laguerre after t = c u_j^2;
  off-diagonal u_jk integrals are Gauss-Hermite after completing the square.
* U(q): exact trapezoid rule on the circle for q = 1, seeded Haar Monte Carlo
  (Ginibre + QR with phase fix) for q >= 2.
* Flat Gaussian integrals over C^d for the left-hand side of the identity.

Rules return nodes plus weights that already include the compensation factor
e^{+(quadratic form)}, so integrands are passed *with* their Gaussian decay and
only need to satisfy it (caller contract).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.laguerre import laggauss

from .grassmann import GrassmannNumber

_EXP_GUARD = 600.0  # drop nodes whose compensation exponent would overflow


@dataclass(frozen=True)
class QuadSpec:
    """Serialisable quadrature configuration."""

    rule: str
    orders: tuple[int, ...] = ()
    mc_samples: int = 1
    seed: int = 0

    _RULES = ("gauss-laguerre", "gauss-hermite", "circle-trapezoid", "haar-mc")

    def __post_init__(self):
        if self.rule not in self._RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))
        if any(o < 1 for o in self.orders):
            raise ValueError("orders must be >= 1")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")

    def to_dict(self) -> dict:
        return {"rule": self.rule, "orders": list(self.orders),
                "mc_samples": self.mc_samples, "seed": self.seed}

    @staticmethod
    def from_dict(d: dict) -> "QuadSpec":
        return QuadSpec(rule=d["rule"], orders=tuple(d.get("orders", ())),
                        mc_samples=int(d.get("mc_samples", 1)),
                        seed=int(d.get("seed", 0)))

    def scaled(self, factor: int) -> "QuadSpec":
        return QuadSpec(self.rule, tuple(o * factor for o in self.orders),
                        self.mc_samples, self.seed)


# --------------------------------------------------------------- Herm+(p)

def herm_param(u: np.ndarray) -> np.ndarray:
    """Map Hermitian u with positive diagonal to z = t(u).1 in Herm+(p)."""
    u = np.asarray(u, dtype=complex)
    p = u.shape[-1]
    if np.any(u[..., range(p), range(p)].real <= 0):
        raise ValueError("diagonal entries of u must be positive")
    z = np.zeros_like(u)
    for j in range(p):
        acc = u[..., j, j] ** 2
        for k in range(j):
            acc = acc + np.abs(u[..., k, j]) ** 2
        z[..., j, j] = acc
    for j in range(p):
        for k in range(j + 1, p):
            acc = u[..., j, j] * u[..., j, k]
            for l in range(j):
                acc = acc + np.conj(u[..., l, j]) * u[..., l, k]
            z[..., j, k] = acc
            z[..., k, j] = np.conj(acc)
    return z


def herm_unparam(z: np.ndarray) -> np.ndarray:
    """Recover u from z = t(u).1 by the recursive Cholesky-style formulas."""
    z = np.asarray(z, dtype=complex)
    p = z.shape[-1]
    u = np.zeros_like(z)
    work = z.copy()
    for j in range(p):
        uj = np.sqrt(work[..., j, j].real)
        u[..., j, j] = uj
        for k in range(j + 1, p):
            u[..., j, k] = work[..., j, k] / uj
            u[..., k, j] = np.conj(u[..., j, k])
        for k in range(j + 1, p):
            for l in range(j + 1, p):
                work[..., k, l] = work[..., k, l] - np.conj(u[..., j, k]) * u[..., j, l]
    return u


def herm_weight(p: int, u: np.ndarray) -> np.ndarray:
    """Pullback density of |dz|/|det z|^p: 2^p prod_j u_j^(1-2j).

    Here |dz| is the coordinate Lebesgue density prod dz_jj prod dRe dIm;
    the integration rules additionally carry the factor 2^(p(p-1)/2) that
    converts it to the tr(xy)-orthonormal Lebesgue density.
    """
    u = np.asarray(u, dtype=complex)
    out = np.full(u.shape[:-2], float(2 ** p))
    for j in range(p):
        out = out * u[..., j, j].real ** (1 - 2 * (j + 1))
    return out


def cone_rule(p: int, spec: QuadSpec, scale: np.ndarray | None = None
              ) -> tuple[np.ndarray, np.ndarray]:
    """Nodes z (M,p,p) and weights for integrating F(z) |dz|/|det z|^p.

    F must decay like e^{-tr(scale . z)} with Hermitian positive `scale`
    (default: identity).  The compensation e^{+tr(scale z)} is folded into the
    weights, so the integral is approximated by sum_i w_i F(z_i).
    """
    if p not in (1, 2):
        raise ValueError("cone_rule supports p in {1, 2}")
    if spec.rule != "gauss-laguerre":
        raise ValueError("cone quadrature uses the gauss-laguerre rule")
    a = np.eye(p, dtype=complex) if scale is None else np.asarray(scale, dtype=complex)
    a = (a + a.conj().T) / 2
    if a.shape != (p, p) or np.any(np.linalg.eigvalsh(a) <= 0):
        raise ValueError("scale must be Hermitian positive definite of size p")
    n_lag = spec.orders[0]
    t, wt = laggauss(n_lag)

    if p == 1:
        c1 = a[0, 0].real
        u1 = np.sqrt(t / c1)
        z = (u1 ** 2).reshape(-1, 1, 1).astype(complex)
        # measure: 2 u^-1 du -> t^-1 dt, then e^{+t} compensation
        w = np.where(t < _EXP_GUARD, wt / t * np.exp(np.minimum(t, _EXP_GUARD)), 0.0)
        return z, w

    a22 = a[1, 1].real
    schur = a[0, 0].real - (abs(a[0, 1]) ** 2) / a22
    n_her = spec.orders[1] if len(spec.orders) > 1 else spec.orders[0]
    x, wx = hermgauss(n_her)

    t1, t2, xx, yy = np.meshgrid(t, t, x, x, indexing="ij")
    w1, w2, wxx, wyy = np.meshgrid(wt, wt, wx, wx, indexing="ij")
    u1 = np.sqrt(t1 / schur).ravel()
    u2 = np.sqrt(t2 / a22).ravel()
    center = -(a[0, 1] / a22)
    u12 = center * u1 + (xx.ravel() + 1j * yy.ravel()) / np.sqrt(a22)

    m = u1.size
    u = np.zeros((m, 2, 2), dtype=complex)
    u[:, 0, 0] = u1
    u[:, 1, 1] = u2
    u[:, 0, 1] = u12
    u[:, 1, 0] = np.conj(u12)
    z = herm_param(u)

    # u_1: 2 u^-1 du -> t1^-1 dt1, u_2: 2 u^-3 du -> a22 t2^-2 dt2, u12: dx dy / a22.
    # The extra 2^(p(p-1)/2) makes |dz| the Lebesgue density of the tr(xy)
    # inner product (one factor 2 per complex off-diagonal entry), which is the
    # normalisation the closed-form gamma constants refer to.
    w = (w1.ravel() / t1.ravel()) * (a22 * w2.ravel() / t2.ravel() ** 2) \
        * (wxx.ravel() * wyy.ravel() / a22) * 2.0
    expo = np.einsum("ij,nji->n", a, z).real
    keep = expo < _EXP_GUARD
    w = np.where(keep, w * np.exp(np.minimum(expo, _EXP_GUARD)), 0.0)
    return z, w


def weighted_sum(value, weights: np.ndarray):
    """Contract an array-valued (or Grassmann-valued) integrand with weights."""
    if isinstance(value, GrassmannNumber):
        return value.map_coefficients(lambda c: np.sum(np.broadcast_to(c, weights.shape) * weights))
    return np.sum(np.asarray(value) * weights)


def cone_integrate(p: int, integrand: Callable, spec: QuadSpec,
                   scale: np.ndarray | None = None):
    """Integrate F(z) over Herm+(p) against |dz|/|det z|^p.

    The integrand receives a stacked (M,p,p) array of cone points and must
    return matching (M,)-shaped values (plain or Grassmann-coefficient-wise).
    """
    z, w = cone_rule(p, spec, scale)
    return weighted_sum(integrand(z), w)


# --------------------------------------------------------------- U(1)

def circle_nodes(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform nodes on U(1) for the normalised invariant density."""
    theta = 2 * np.pi * np.arange(n_nodes) / n_nodes
    return np.exp(1j * theta), np.full(n_nodes, 1.0 / n_nodes)


def u1_integrate(integrand: Callable, n_nodes: int):
    """Trapezoid rule on the circle; exact for Laurent degree < n_nodes."""
    w, wt = circle_nodes(n_nodes)
    return weighted_sum(integrand(w), wt)


# --------------------------------------------------------------- Haar MC

_CHUNK = 8192


def haar_sample(q: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Haar unitaries via QR of a complex Ginibre matrix with phase fix."""
    g = rng.standard_normal((size, q, q)) + 1j * rng.standard_normal((size, q, q))
    g /= np.sqrt(2)
    qm, r = np.linalg.qr(g)
    d = np.einsum("nii->ni", r)
    ph = d / np.abs(d)
    return qm * ph[:, None, :]


def haar_chunks(q: int, n_samples: int, seed: int,
                chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    """Deterministic chunked Haar stream; chunk c is seeded from (seed, c).

    The partitioning is fixed, so results do not depend on scheduling.
    """
    done = 0
    index = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        yield haar_sample(q, rng, size)
        done += size
        index += 1


class McAccumulator:
    """Streaming mean and per-coefficient standard error, fixed order."""

    def __init__(self):
        self.n = 0
        self._sum: dict[int, complex] = {}
        self._sumsq: dict[int, float] = {}
        self._algebra = None

    def add(self, value, count: int) -> None:
        if isinstance(value, GrassmannNumber):
            self._algebra = value.algebra
            items = value.coeffs.items()
        else:
            items = [(0, np.asarray(value))]
        self.n += count
        for mask, c in items:
            arr = np.broadcast_to(np.asarray(c), (count,))
            self._sum[mask] = self._sum.get(mask, 0j) + complex(np.sum(arr))
            self._sumsq[mask] = self._sumsq.get(mask, 0.0) + float(np.sum(np.abs(arr) ** 2))

    def mean(self):
        coeffs = {m: s / self.n for m, s in self._sum.items()}
        if self._algebra is None:
            return coeffs.get(0, 0j)
        return GrassmannNumber(self._algebra, coeffs)

    def stderr(self) -> dict[int, float]:
        out = {}
        for m, s in self._sum.items():
            mu = s / self.n
            var = max(self._sumsq[m] / self.n - abs(mu) ** 2, 0.0)
            out[m] = float(np.sqrt(var / self.n))
        return out


def uq_integrate_mc(q: int, integrand: Callable, spec: QuadSpec):
    """Monte Carlo Haar integral with per-coefficient standard errors.

    Returns (mean, stderr) where stderr maps Grassmann subset masks to floats
    (mask 0 only, for plain scalar integrands).
    """
    if spec.rule != "haar-mc":
        raise ValueError("uq_integrate_mc needs the haar-mc rule")
    acc = McAccumulator()
    for w in haar_chunks(q, spec.mc_samples, spec.seed):
        acc.add(integrand(w), w.shape[0])
    return acc.mean(), acc.stderr()


# --------------------------------------------------------------- flat Gaussians

def gauss_flat_rule(dims: int, spec: QuadSpec,
                    scale: Sequence[float] | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Nodes a (M, dims) in C^dims and weights for Lebesgue dRe dIm integrals.

    The integrand must decay like e^{-sum_k scale_k |a_k|^2}; the compensation
    is folded into the weights.
    """
    if spec.rule != "gauss-hermite":
        raise ValueError("flat quadrature uses the gauss-hermite rule")
    c = np.ones(dims) if scale is None else np.asarray(scale, dtype=float)
    if c.shape != (dims,) or np.any(c <= 0):
        raise ValueError("scale must be positive, one entry per complex dimension")
    n = spec.orders[0]
    x, wx = hermgauss(n)
    grids = np.meshgrid(*([x] * (2 * dims)), indexing="ij")
    wgrids = np.meshgrid(*([wx] * (2 * dims)), indexing="ij")
    m = grids[0].size
    a = np.zeros((m, dims), dtype=complex)
    w = np.ones(m)
    expo = np.zeros(m)
    for k in range(dims):
        re = grids[2 * k].ravel()
        im = grids[2 * k + 1].ravel()
        a[:, k] = (re + 1j * im) / np.sqrt(c[k])
        w *= wgrids[2 * k].ravel() * wgrids[2 * k + 1].ravel() / c[k]
        expo += re ** 2 + im ** 2
    keep = expo < _EXP_GUARD
    w = np.where(keep, w * np.exp(np.minimum(expo, _EXP_GUARD)), 0.0)
    return a, w


def gauss_flat_integrate(dims: int, integrand: Callable, spec: QuadSpec,
                         scale: Sequence[float] | None = None):
    """Integrate over C^dims against Lebesgue measure prod dRe(a_k) dIm(a_k)."""
    a, w = gauss_flat_rule(dims, spec, scale)
    return weighted_sum(integrand(a), w)


@dataclass
class ConePoint:
    """A point of Herm+(p) with its triangular parameter u (z = t(u).1)."""

    u: np.ndarray
    z: np.ndarray = field(init=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.z = herm_param(self.u)

    @property
    def weight(self) -> float:
        p = self.u.shape[-1]
        return float(herm_weight(p, self.u).real)
