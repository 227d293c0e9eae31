"""Exact representation theory for the small root systems used here.

Weights are integer vectors in the basis of fundamental weights (the
semisimple part) followed by the abelian frequencies. Everything except
:func:`character` / :func:`character_value` is exact integer or rational
arithmetic.

Supported Cartan types are ``A1``, ``A1xA1``, ``C2`` and the purely abelian
case, each optionally with an abelian factor of rank <= 2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "RootSystem",
    "Weight",
    "root_system",
    "kostant_partition",
    "weight_multiplicity",
    "gupta_f",
    "gupta_inverse_entry",
    "gupta_inverse_row",
    "weyl_dimension",
    "dominance_leq",
    "weyl_orbit",
    "fund_norm",
    "character",
    "character_value",
    "dominant_weights",
    "dominant_weights_below",
    "weight_multiset",
    "dimension_growth_constant",
    "motivic_weight",
]

def _matmul(a, b):
    n, k = len(a), len(b)
    m = len(b[0]) if k else 0
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m))
        for i in range(n)
    )


def _matvec(a, v):
    return tuple(sum(r * x for r, x in zip(row, v)) for row in a)


def _identity(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _det(a):
    n = len(a)
    if n == 0:
        return 1
    if n == 1:
        return a[0][0]
    return sum(
        (-1) ** j * a[0][j] * _det(tuple(row[:j] + row[j + 1:] for row in a[1:]))
        for j in range(n)
    )


def _inverse(a):
    """Exact inverse of a small square matrix over the rationals."""
    n = len(a)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


@dataclass(frozen=True)
class Weight:
    """An integral weight: fundamental-weight coordinates plus abelian part."""

    semisimple: tuple = ()
    abelian: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "semisimple", tuple(int(x) for x in self.semisimple))
        object.__setattr__(self, "abelian", tuple(int(x) for x in self.abelian))

    @classmethod
    def of(cls, rs: "RootSystem", coords) -> "Weight":
        """Split a flat coordinate list according to ``rs``."""
        coords = tuple(int(c) for c in coords)
        if len(coords) != rs.rank_h + rs.abelian_rank_a:
            raise InvalidInputError(
                f"expected {rs.rank_h + rs.abelian_rank_a} coordinates, got {len(coords)}"
            )
        return cls(coords[: rs.rank_h], coords[rs.rank_h:])

    @classmethod
    def zero(cls, rs: "RootSystem") -> "Weight":
        return cls((0,) * rs.rank_h, (0,) * rs.abelian_rank_a)

    @property
    def coords(self) -> tuple:
        return self.semisimple + self.abelian

    def __add__(self, other):
        return Weight(
            tuple(a + b for a, b in zip(self.semisimple, other.semisimple)),
            tuple(a + b for a, b in zip(self.abelian, other.abelian)),
        )

    def __sub__(self, other):
        return Weight(
            tuple(a - b for a, b in zip(self.semisimple, other.semisimple)),
            tuple(a - b for a, b in zip(self.abelian, other.abelian)),
        )

    def is_dominant(self) -> bool:
        return all(m >= 0 for m in self.semisimple)


@dataclass(frozen=True)
class RootSystem:
    """Root data for a reductive Lie algebra of small rank.

    Roots and weights live in fundamental-weight coordinates. ``torus_basis``
    converts those coordinates to exponents of the Cartan torus, i.e. the
    frequencies ``n`` in ``exp(2*pi*i n.theta)``.
    """

    cartan_label: str
    rank_h: int
    abelian_rank_a: int
    simple_roots: tuple
    positive_roots: tuple
    weyl_elements: tuple
    weyl_signs: tuple
    rho: tuple
    pairing: tuple
    torus_basis: tuple
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def phi(self) -> int:
        return len(self.positive_roots)

    @property
    def weyl_order(self) -> int:
        return len(self.weyl_elements)

    @property
    def q(self) -> int:
        return self.rank_h + self.abelian_rank_a

    def inner(self, u, v) -> Fraction:
        return sum(
            (Fraction(u[i]) * self.pairing[i][j] * v[j]
             for i in range(self.rank_h) for j in range(self.rank_h)),
            Fraction(0),
        )

    def torus_action(self):
        """Weyl elements transported to torus-exponent coordinates.

        For every supported type these are signed permutation matrices, so
        the same matrices act on angle vectors.
        """
        key = "torus_action"
        if key not in self._cache:
            P = self.torus_basis
            Pinv = _inverse(P) if self.rank_h else ()
            mats = []
            for w in self.weyl_elements:
                m = _matmul(_matmul(P, w), Pinv) if self.rank_h else ()
                mats.append(tuple(tuple(int(x) for x in row) for row in m))
            self._cache[key] = tuple(mats)
        return self._cache[key]

    def _simple_coords(self, v):
        """Coordinates of ``v`` in the basis of simple roots (rational)."""
        if "to_simple" not in self._cache:
            cartan_t = tuple(zip(*self.simple_roots))
            self._cache["to_simple"] = _inverse(cartan_t)
        return _matvec(self._cache["to_simple"], v)


def _simple_reflection(alpha, i, n):
    return tuple(
        tuple(int(r == c) - (alpha[r] if c == i else 0) for c in range(n))
        for r in range(n)
    )


def _weyl_closure(simple_roots, n):
    gens = [_simple_reflection(a, i, n) for i, a in enumerate(simple_roots)]
    ident = _identity(n)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for m in frontier:
            for s in gens:
                w = _matmul(s, m)
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    elements = sorted(seen)
    elements.remove(ident)
    elements.insert(0, ident)
    return tuple(elements), tuple(_det(w) for w in elements)


_SEMISIMPLE = {
    # label: (simple roots, positive roots, pairing, torus basis), omega coords
    "A1": (
        ((2,),),
        ((2,),),
        ((Fraction(1, 2),),),
        ((1,),),
    ),
    "A1xA1": (
        ((2, 0), (0, 2)),
        ((2, 0), (0, 2)),
        ((Fraction(1, 2), Fraction(0)), (Fraction(0), Fraction(1, 2))),
        ((1, 0), (0, 1)),
    ),
    # C2 with e-basis omega1 = e1, omega2 = e1 + e2; alpha1 = e1 - e2, alpha2 = 2 e2
    "C2": (
        ((2, -1), (-2, 2)),
        ((2, -1), (-2, 2), (0, 1), (2, 0)),
        ((Fraction(1), Fraction(1)), (Fraction(1), Fraction(2))),
        ((1, 1), (0, 1)),
    ),
    "": ((), (), (), ()),
}


def root_system(cartan_label: str, abelian_rank: int = 0) -> RootSystem:
    """Build the root data for ``cartan_label`` ("A1", "A1xA1", "C2" or "")."""
    key = ("rs", cartan_label, abelian_rank)
    if key in _RS_CACHE:
        return _RS_CACHE[key]
    if cartan_label not in _SEMISIMPLE:
        raise InvalidInputError(f"unsupported Cartan type {cartan_label!r}")
    if not 0 <= abelian_rank <= 2:
        raise InvalidInputError("abelian rank must be between 0 and 2")
    simple, positive, pairing, basis = _SEMISIMPLE[cartan_label]
    h = len(simple)
    weyl, signs = _weyl_closure(simple, h)
    rho = tuple(sum(a[i] for a in positive) // 2 for i in range(h))
    label = cartan_label if cartan_label else "abelian"
    rs = RootSystem(
        cartan_label=label,
        rank_h=h,
        abelian_rank_a=abelian_rank,
        simple_roots=simple,
        positive_roots=positive,
        weyl_elements=weyl,
        weyl_signs=signs,
        rho=rho,
        pairing=pairing,
        torus_basis=basis,
    )
    _RS_CACHE[key] = rs
    return rs


_RS_CACHE: dict = {}


def _act(w, v):
    return _matvec(w, v)


def _require_dominant(*weights):
    for lam in weights:
        if not lam.is_dominant():
            raise InvalidInputError(f"weight {lam.coords} is not dominant")


def kostant_partition(rs: RootSystem, v: Weight) -> int:
    """Number of ways to write ``v`` as a nonnegative sum of positive roots."""
    if any(v.abelian):
        raise InvalidInputError("Kostant partition function needs zero abelian part")
    return _partition(rs, v.semisimple)


def _partition(rs, v):
    if rs.rank_h == 0:
        return 1
    k = rs._simple_coords(v)
    if any(x.denominator != 1 or x < 0 for x in k):
        return 0
    k = tuple(int(x) for x in k)
    cache = rs._cache.setdefault("kostant", {})
    if "pos_simple" not in rs._cache:
        rs._cache["pos_simple"] = tuple(
            tuple(int(x) for x in rs._simple_coords(a)) for a in rs.positive_roots
        )
    roots = rs._cache["pos_simple"]

    def count(target, idx):
        if not any(target):
            return 1
        if idx == len(roots):
            return 0
        key = (target, idx)
        if key in cache:
            return cache[key]
        total = count(target, idx + 1)
        beta = roots[idx]
        rest = tuple(t - b for t, b in zip(target, beta))
        if all(x >= 0 for x in rest):
            total += count(rest, idx)
        cache[key] = total
        return total

    return count(k, 0)


def weight_multiplicity(rs: RootSystem, lam: Weight, mu: Weight) -> int:
    """Multiplicity of ``mu`` in the irreducible representation ``lam``.

    Kostant's formula, summing signed partition counts over the Weyl group.
    """
    _require_dominant(lam)
    if lam.abelian != mu.abelian:
        return 0
    cache = rs._cache.setdefault("mult", {})
    key = (lam.semisimple, mu.semisimple)
    if key in cache:
        return cache[key]
    lr = tuple(a + b for a, b in zip(lam.semisimple, rs.rho))
    mr = tuple(a + b for a, b in zip(mu.semisimple, rs.rho))
    total = 0
    for w, eps in zip(rs.weyl_elements, rs.weyl_signs):
        wl = _act(w, lr)
        total += eps * _partition(rs, tuple(a - b for a, b in zip(wl, mr)))
    if total < 0:
        raise AssertionError("negative weight multiplicity")
    cache[key] = total
    return total


def _f_table(rs):
    if "f" not in rs._cache:
        table = {}
        h = rs.rank_h
        for subset in itertools.product((0, 1), repeat=rs.phi):
            v = list(rs.rho) if h else []
            sign = 1
            for take, alpha in zip(subset, rs.positive_roots):
                if take:
                    sign = -sign
                    v = [x - a for x, a in zip(v, alpha)]
            key = tuple(v)
            table[key] = table.get(key, 0) + sign
        rs._cache["f"] = {k: c for k, c in table.items() if c}
    return rs._cache["f"]


def gupta_f(rs: RootSystem, v: Weight) -> int:
    """Coefficient of ``e^v`` in ``e^rho * prod_{alpha > 0} (1 - e^{-alpha})``."""
    return _f_table(rs).get(v.semisimple, 0)


def gupta_inverse_entry(rs: RootSystem, lam: Weight, mu: Weight) -> Fraction:
    """Entry ``d_lam^mu`` of the inverse of the weight-multiplicity matrix.

    Uses Gupta's closed form with ``f`` evaluated at ``w(mu + rho) - lam``
    and divided by the stabilizer order of ``lam``.
    """
    _require_dominant(lam, mu)
    if lam.abelian != mu.abelian:
        return Fraction(0)
    table = _f_table(rs)
    mr = tuple(a + b for a, b in zip(mu.semisimple, rs.rho))
    total = 0
    for w, eps in zip(rs.weyl_elements, rs.weyl_signs):
        wm = _act(w, mr)
        total += eps * table.get(tuple(a - b for a, b in zip(wm, lam.semisimple)), 0)
    _, t_lam = weyl_orbit(rs, lam)
    return Fraction(total, t_lam)


def gupta_inverse_row(rs: RootSystem, lam: Weight) -> dict:
    """All nonzero entries ``mu -> d_lam^mu`` of one row of the inverse.

    Only the ``2^phi`` terms of ``f`` can contribute, so the row is found by
    solving ``w(mu + rho) = lam + s`` for each ``w`` and each support point
    ``s`` rather than by scanning candidate ``mu``.
    """
    _require_dominant(lam)
    cache = rs._cache.setdefault("gupta_row", {})
    if lam.semisimple not in cache:
        _, t_lam = weyl_orbit(rs, lam)
        acc = {}
        for s, fs in _f_table(rs).items():
            target = tuple(a + b for a, b in zip(lam.semisimple, s))
            for w, eps in zip(rs.weyl_elements, rs.weyl_signs):
                mu = tuple(a - r for a, r in zip(_act(w, target), rs.rho))
                if all(x >= 0 for x in mu):
                    acc[mu] = acc.get(mu, 0) + eps * fs
        cache[lam.semisimple] = {mu: Fraction(c, t_lam) for mu, c in acc.items() if c}
    return {Weight(mu, lam.abelian): d for mu, d in cache[lam.semisimple].items()}


def weyl_dimension(rs: RootSystem, lam: Weight) -> int:
    """Dimension of the irreducible representation with highest weight ``lam``."""
    _require_dominant(lam)
    lr = tuple(a + b for a, b in zip(lam.semisimple, rs.rho))
    value = prod(
        (rs.inner(lr, alpha) / rs.inner(rs.rho, alpha) for alpha in rs.positive_roots),
        start=Fraction(1),
    )
    if value.denominator != 1:
        raise AssertionError(f"non-integral Weyl dimension {value}")
    return int(value)


def dominance_leq(rs: RootSystem, mu: Weight, lam: Weight) -> bool:
    """True iff ``lam - mu`` is a nonnegative integer sum of positive roots."""
    if mu.abelian != lam.abelian:
        return False
    diff = tuple(a - b for a, b in zip(lam.semisimple, mu.semisimple))
    return _partition(rs, diff) > 0


def weyl_orbit(rs: RootSystem, mu: Weight):
    """Return ``(orbit, stabilizer_size)`` for the Weyl action on ``mu``."""
    orbit = {Weight(_act(w, mu.semisimple), mu.abelian) for w in rs.weyl_elements}
    return frozenset(orbit), rs.weyl_order // len(orbit)


def fund_norm(lam: Weight) -> int:
    """Largest absolute coordinate of ``lam`` (semisimple and abelian)."""
    coords = lam.coords
    return max((abs(c) for c in coords), default=0)


def dominant_weights(rs: RootSystem, bound: int):
    """All dominant weights with zero abelian part and ``fund_norm <= bound``."""
    zero_a = (0,) * rs.abelian_rank_a
    return [
        Weight(c, zero_a)
        for c in itertools.product(range(bound + 1), repeat=rs.rank_h)
    ]


def dominant_weights_below(rs: RootSystem, lam: Weight):
    """Dominant weights ``nu`` with ``nu <= lam`` in the dominance order."""
    _require_dominant(lam)
    if rs.rank_h == 0:
        return [lam]
    cache = rs._cache.setdefault("below", {})
    if lam.semisimple in cache:
        return [Weight(s, lam.abelian) for s in cache[lam.semisimple]]
    top = rs._simple_coords(lam.semisimple)
    ranges = [range(int(x) + 1) for x in top]  # floor, since top >= 0 for dominant
    found = []
    for k in itertools.product(*ranges):
        nu = list(lam.semisimple)
        for ki, alpha in zip(k, rs.simple_roots):
            nu = [x - ki * a for x, a in zip(nu, alpha)]
        if all(x >= 0 for x in nu):
            found.append(tuple(nu))
    found.sort(key=lambda s: (-sum(rs._simple_coords(s)), s))
    cache[lam.semisimple] = found
    return [Weight(s, lam.abelian) for s in found]


def weight_multiset(rs: RootSystem, lam: Weight) -> dict:
    """All weights of ``lam`` as torus exponents mapped to multiplicities."""
    _require_dominant(lam)
    cache = rs._cache.setdefault("multiset", {})
    if lam in cache:
        return cache[lam]
    out = {}
    for mu in dominant_weights_below(rs, lam):
        m = weight_multiplicity(rs, lam, mu)
        if not m:
            continue
        orbit, _ = weyl_orbit(rs, mu)
        for nu in orbit:
            exps = _matvec(rs.torus_basis, nu.semisimple) + nu.abelian
            out[exps] = out.get(exps, 0) + m
    cache[lam] = out
    return out


def _character_from_weights(rs: RootSystem, lam: Weight, theta: np.ndarray) -> np.ndarray:
    ms = weight_multiset(rs, lam)
    exps = np.array(list(ms.keys()), dtype=float).reshape(len(ms), rs.q)
    mult = np.array(list(ms.values()), dtype=float)
    return np.exp(2j * np.pi * (theta @ exps.T)) @ mult


def character(rs: RootSystem, lam: Weight, angles) -> complex | np.ndarray:
    """Complex character of ``lam`` at torus angles (shape ``(..., q)``).

    Uses the Weyl character formula, falling back to the weight sum where
    the Weyl denominator is small.
    """
    _require_dominant(lam)
    theta = np.asarray(angles, dtype=float)
    if theta.shape[-1:] != (rs.q,):
        raise InvalidInputError(f"angles must have trailing dimension {rs.q}")
    h = rs.rank_h
    twist = np.exp(2j * np.pi * (theta[..., h:] @ np.asarray(lam.abelian, dtype=float)))
    if h == 0:
        return complex(twist) if np.ndim(twist) == 0 else twist
    P = rs.torus_basis
    lr = np.array(_matvec(P, [a + b for a, b in zip(lam.semisimple, rs.rho)]), dtype=float)
    r = np.array(_matvec(P, rs.rho), dtype=float)
    th = theta[..., :h]
    num = np.zeros(th.shape[:-1], dtype=complex)
    den = np.zeros(th.shape[:-1], dtype=complex)
    for w, sgn in zip(rs.torus_action(), rs.weyl_signs):
        W = np.array(w, dtype=float)
        num = num + sgn * np.exp(2j * np.pi * (th @ (W @ lr)))
        den = den + sgn * np.exp(2j * np.pi * (th @ (W @ r)))
    small = np.abs(den) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 0, num / np.where(small, 1, den)) * twist
    if np.any(small):
        flat, mask = out.reshape(-1), small.reshape(-1)
        flat[mask] = _character_from_weights(rs, lam, theta.reshape(-1, rs.q)[mask])
        out = flat.reshape(out.shape)
    return complex(out) if np.ndim(out) == 0 else out


def character_value(rs: RootSystem, lam: Weight, angles) -> float | np.ndarray:
    """Real character value; the imaginary part must vanish."""
    z = character(rs, lam, angles)
    if np.max(np.abs(np.imag(z))) >= 1e-10 * max(1, weyl_dimension(rs, lam)):
        raise InvalidInputError(f"character {lam.coords} is not real at these angles")
    re = np.real(z)
    return float(re) if np.ndim(re) == 0 else re


def dimension_growth_constant(rs: RootSystem) -> int:
    """``K`` with ``dim(lam) <= K * fund_norm(lam)**phi`` whenever fund_norm >= 1.

    Since ``(omega_j, alpha) >= 0`` for positive roots and ``rho`` is the sum
    of fundamental weights, ``(lam + rho, alpha) <= (n + 1)(rho, alpha)``.
    """
    return 2 ** rs.phi


def motivic_weight(rs: RootSystem, lam: Weight) -> int:
    """Motivic weight of ``lam``: tensor degree of its torus exponents."""
    exps = _matvec(rs.torus_basis, lam.semisimple) + lam.abelian
    return sum(abs(x) for x in exps)
