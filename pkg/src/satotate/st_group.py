"""Connected Sato-Tate groups, their trace map and the pushforward measure.

A group is described by its root data plus an integer ``g x q`` embedding
matrix ``A`` whose rows ``a_j`` give the eigenangles ``a_j . theta`` of the
symplectic representation. Angles ``theta`` live in torus coordinates: the
semisimple block (in the basis fixed by ``RootSystem.torus_basis``) followed
by the abelian block.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import (
    DescriptorInvalidError,
    InvalidInputError,
    NotFoundError,
    NumericFailureError,
    UnsupportedError,
)
from .lie_core import RootSystem, _matvec, root_system

__all__ = [
    "SatoTateGroupDescriptor",
    "IntervalQuery",
    "CATALOG_NAMES",
    "catalog_lookup",
    "descriptor_from_dict",
    "descriptor_to_dict",
    "load_catalog",
    "dump_catalog",
    "trace_value",
    "weyl_density",
    "gradient_bound",
    "crossing_bound",
    "preimage_segments",
    "measure_interval",
    "measure_tail_u1",
    "epsilon",
    "epsilon_pair",
    "nu",
    "nu_pair",
    "x0_threshold",
    "hodge_circle_basis",
    "moment",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class SatoTateGroupDescriptor:
    """A compact group given by root data and a Cartan embedding matrix.

    Attributes
    ----------
    name : str
    g : int
        Dimension of the abelian variety; ``A`` has ``g`` rows.
    root_system : RootSystem
    embedding : tuple of tuple of int
        Rows ``a_1, ..., a_g``, each of length ``q``.
    connected : bool
        False only for the measure-only ``N(U1)`` entry.
    """

    name: str
    g: int
    root_system: RootSystem
    embedding: tuple
    connected: bool = True

    def __post_init__(self):
        A = tuple(tuple(int(x) for x in row) for row in self.embedding)
        object.__setattr__(self, "embedding", A)
        q = self.root_system.q
        if len(A) != self.g or any(len(row) != q for row in A):
            raise DescriptorInvalidError(f"{self.name}: embedding must be {self.g}x{q}")
        if q > self.g:
            raise DescriptorInvalidError(f"{self.name}: q={q} exceeds g={self.g}")
        for i in range(q):
            if A[i] != tuple(int(i == j) for j in range(q)):
                raise DescriptorInvalidError(f"{self.name}: first q rows of A must be the identity")

    @property
    def q(self) -> int:
        return self.root_system.q

    @property
    def phi(self) -> int:
        return self.root_system.phi

    @property
    def cartan_label(self) -> str:
        return self.root_system.cartan_label

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.embedding, dtype=float).reshape(self.g, self.q)


@dataclass(frozen=True)
class IntervalQuery:
    """Closed interval ``[lower, upper]`` inside ``[-2g, 2g]``."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise InvalidInputError("interval endpoints must be finite")
        if not self.lower < self.upper:
            raise InvalidInputError(f"empty interval [{self.lower}, {self.upper}]")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def check(self, g: int) -> "IntervalQuery":
        if self.lower < -2 * g - 1e-12 or self.upper > 2 * g + 1e-12:
            raise InvalidInputError(f"interval must lie in [-{2 * g}, {2 * g}]")
        return self


# name -> (g, cartan label, abelian rank, A, connected)
_CATALOG = {
    "U1": (1, "", 1, ((1,),), True),
    "SU2": (1, "A1", 0, ((1,),), True),
    "U1xU1": (2, "", 2, ((1, 0), (0, 1)), True),
    "SU2xU1": (2, "A1", 1, ((1, 0), (0, 1)), True),
    "SU2xSU2": (2, "A1xA1", 0, ((1, 0), (0, 1)), True),
    "USp4": (2, "C2", 0, ((1, 0), (0, 1)), True),
    "U1_diag": (2, "", 1, ((1,), (1,)), True),
    "N(U1)": (1, "", 1, ((1,),), False),
}
CATALOG_NAMES = tuple(_CATALOG)


@lru_cache(maxsize=None)
def catalog_lookup(name: str) -> SatoTateGroupDescriptor:
    """Return the catalog descriptor called ``name``.

    Raises
    ------
    NotFoundError
        If ``name`` is not one of :data:`CATALOG_NAMES`.
    """
    try:
        g, label, a, A, connected = _CATALOG[name]
    except KeyError:
        raise NotFoundError(f"unknown group {name!r}; known: {', '.join(CATALOG_NAMES)}") from None
    return SatoTateGroupDescriptor(name, g, root_system(label, a), A, connected)


def descriptor_to_dict(desc: SatoTateGroupDescriptor) -> dict:
    return {
        "name": desc.name,
        "g": desc.g,
        "cartan_label": desc.root_system.cartan_label if desc.root_system.rank_h else "",
        "abelian_rank": desc.root_system.abelian_rank_a,
        "A": [list(row) for row in desc.embedding],
        "connected": desc.connected,
    }


def descriptor_from_dict(d: dict) -> SatoTateGroupDescriptor:
    """Build a descriptor from its JSON form; Hodge circles are verified."""
    try:
        rs = root_system(d.get("cartan_label", ""), int(d.get("abelian_rank", 0)))
        desc = SatoTateGroupDescriptor(
            str(d["name"]), int(d["g"]), rs, tuple(map(tuple, d["A"])), bool(d.get("connected", True))
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise DescriptorInvalidError(str(exc)) from exc
        raise DescriptorInvalidError(f"malformed descriptor: {exc}") from exc
    if desc.connected:
        hodge_circle_basis(desc)
    return desc


def dump_catalog(descs, fp=None) -> str:
    text = json.dumps([descriptor_to_dict(d) for d in descs], indent=2)
    if fp is not None:
        fp.write(text)
    return text


def load_catalog(fp) -> dict:
    """Read a JSON list of descriptors into a ``name -> descriptor`` dict."""
    data = json.load(fp)
    if isinstance(data, dict):
        data = [data]
    return {d.name: d for d in map(descriptor_from_dict, data)}


# ---------------------------------------------------------------------------
# trace map and density
# ---------------------------------------------------------------------------

def trace_value(desc: SatoTateGroupDescriptor, theta):
    """``T(theta) = sum_j 2 cos(2 pi a_j . theta)``; vectorized over ``(..., q)``."""
    th = np.asarray(theta, dtype=float)
    if th.ndim == 0 and desc.q == 1:
        th = th.reshape(1)
    if th.shape[-1] != desc.q:
        raise InvalidInputError(f"theta must have trailing dimension {desc.q}")
    out = 2.0 * np.cos(2 * np.pi * (th @ desc.matrix.T)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def _root_exponents(rs: RootSystem) -> np.ndarray:
    """Positive roots as torus exponent vectors, shape ``(phi, q)``."""
    rows = []
    for alpha in rs.positive_roots:
        v = [int(x) for x in _matvec(rs.torus_basis, alpha)]
        rows.append(v + [0] * rs.abelian_rank_a)
    return np.array(rows, dtype=float).reshape(len(rows), rs.q)


def weyl_density(desc: SatoTateGroupDescriptor, theta):
    """Haar density on the torus: ``(1/#W) prod_{alpha>0} 4 sin^2(pi alpha.theta)``."""
    rs = desc.root_system
    th = np.asarray(theta, dtype=float)
    if th.ndim == 0:
        th = th.reshape(1)
    roots = _root_exponents(rs)
    if len(roots) == 0:
        return np.ones(th.shape[:-1]) if th.ndim > 1 else 1.0
    s = np.sin(np.pi * (th @ roots.T))
    out = np.prod(4 * s * s, axis=-1) / rs.weyl_order
    return float(out) if out.ndim == 0 else out


def gradient_bound(desc: SatoTateGroupDescriptor) -> float:
    """Uniform bound ``K = 4 pi sum_j |a_j|`` on ``|grad T|``."""
    return 4 * math.pi * float(np.linalg.norm(desc.matrix, axis=1).sum())


def crossing_bound(desc: SatoTateGroupDescriptor) -> int:
    """``C = 4 max |a_lj|``, bounding level crossings of ``T`` along a coordinate line."""
    return 4 * max(abs(x) for row in desc.embedding for x in row)


# ---------------------------------------------------------------------------
# preimages of intervals
# ---------------------------------------------------------------------------

def _line_roots(freqs, phases, level):
    """Roots in ``[0,1)`` of ``sum_j 2cos(2pi(k_j t + phase_j)) - level``.

    Even polynomials are solved in ``u = cos(2 pi t)`` through the Chebyshev
    basis, which stays well conditioned at the ends of the trace range.
    Otherwise the companion matrix of the Laurent polynomial in
    ``z = exp(2 pi i t)`` is used, keeping roots on the unit circle.
    """
    freqs = [int(k) for k in freqs]
    const = sum(2 * np.cos(2 * np.pi * ph) for k, ph in zip(freqs, phases) if k == 0)
    active = [(abs(k), ph) for k, ph in zip(freqs, phases) if k != 0]
    if not active:
        return np.empty(0)
    level = level - const
    F = max(k for k, _ in active)
    if all(abs(ph - round(ph)) < 1e-15 for _, ph in active):
        cheb = np.zeros(F + 1)
        cheb[0] -= level
        for k, _ in active:
            cheb[k] += 2.0
        u = np.polynomial.chebyshev.chebroots(cheb)
        u = np.clip(u[np.abs(u.imag) < 1e-6].real, -1.0, 1.0)
        t = np.arccos(u) / (2 * np.pi)
        return np.unique(np.concatenate((t, np.mod(-t, 1.0))))
    coef = np.zeros(2 * F + 1, dtype=complex)  # index e <-> z^(e - F)
    coef[F] -= level
    for k, ph in zip(freqs, phases):
        if k == 0:
            continue
        e = np.exp(2j * np.pi * ph)
        coef[F + k] += e
        coef[F - k] += np.conj(e)
    roots = np.roots(coef[::-1])
    keep = roots[np.abs(np.log(np.abs(roots))) < 1e-6]
    t = np.mod(np.angle(keep) / (2 * np.pi), 1.0)
    return np.unique(np.round(t, 15))


def _segments(freqs, phases, lo, hi):
    """Sub-intervals of ``[0,1]`` on which the line trace lies in ``[lo, hi]``."""
    cuts = np.concatenate(([0.0, 1.0], _line_roots(freqs, phases, lo), _line_roots(freqs, phases, hi)))
    cuts = np.unique(np.clip(cuts, 0.0, 1.0))
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    k = np.asarray(freqs, dtype=float)[:, None]
    ph = np.asarray(phases, dtype=float)[:, None]
    vals = 2 * np.cos(2 * np.pi * (k * mids[None, :] + ph)).sum(axis=0)
    inside = (vals >= lo) & (vals <= hi)
    segs = []
    for a, b, ok in zip(cuts[:-1], cuts[1:], inside):
        if not ok or b <= a:
            continue
        if segs and abs(segs[-1][1] - a) < 1e-15:
            segs[-1] = (segs[-1][0], b)
        else:
            segs.append((a, b))
    return segs


def preimage_segments(desc: SatoTateGroupDescriptor, I: IntervalQuery, theta1: float | None = None):
    """Segments of ``T^{-1}(I)`` along the last coordinate.

    For ``q = 1`` this is the full preimage in ``[0,1]``; for ``q = 2`` it is
    the slice at first coordinate ``theta1``.
    """
    A = desc.matrix
    if desc.q == 1:
        return _segments(A[:, 0], np.zeros(desc.g), I.lower, I.upper)
    if desc.q == 2:
        if theta1 is None:
            raise InvalidInputError("theta1 is required for two-dimensional groups")
        return _segments(A[:, 1], A[:, 0] * theta1, I.lower, I.upper)
    raise UnsupportedError(f"q={desc.q} is not supported")


def _segment_integral(fn, segs):
    """Gauss-Legendre integral of a vectorized ``fn`` over a list of segments."""
    total = 0.0
    for a, b in segs:
        x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
        total += 0.5 * (b - a) * float(np.dot(_GL_WEIGHTS, fn(x)))
    return total


def _slice_signature(desc, I, theta1):
    """Number of boundary crossings at each end of ``I`` along the slice."""
    A = desc.matrix
    ph = A[:, 0] * theta1
    return len(_line_roots(A[:, 1], ph, I.lower)), len(_line_roots(A[:, 1], ph, I.upper))


def slice_breakpoints(desc, I, n_grid=1024):
    """Outer coordinates where the slice crossing structure changes."""
    return _outer_breakpoints(lambda t: _slice_signature(desc, I, t), n_grid)


def _outer_breakpoints(slice_count, n_grid=1024):
    """Locate where ``slice_count`` changes, by grid plus bisection."""
    grid = np.linspace(0.0, 1.0, n_grid + 1)
    counts = [slice_count(t) for t in grid]
    pts = [0.0, 1.0]
    for i in range(n_grid):
        if counts[i] != counts[i + 1]:
            a, b, ca = grid[i], grid[i + 1], counts[i]
            for _ in range(40):
                m = 0.5 * (a + b)
                if slice_count(m) == ca:
                    a = m
                else:
                    b = m
            pts.append(0.5 * (a + b))
    return np.unique(pts)


def _integrate_torus2(desc, I, inner, tol, budget=400):
    """Integrate ``inner(theta1)`` over ``[0,1]``, splitting at slice breakpoints.

    The slice integrals have square-root behaviour at breakpoints, so each
    piece is mapped by ``t -> (1 - cos(pi t))/2`` before adaptive quadrature.
    """
    breaks = slice_breakpoints(desc, I)
    total, err = 0.0, 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a < 1e-14:
            continue

        def f(s, a=a, b=b):
            x = a + (b - a) * 0.5 * (1 - math.cos(math.pi * s))
            return inner(x) * (b - a) * 0.5 * math.pi * math.sin(math.pi * s)

        val, e = integrate.quad(f, 0.0, 1.0, epsabs=tol / (4 * len(breaks)), epsrel=0.0, limit=budget)
        total += val
        err += e
    if err > tol:
        raise NumericFailureError(f"2-D quadrature error estimate {err:.3g} exceeds tol {tol:.3g}")
    return total


def measure_interval(desc: SatoTateGroupDescriptor, I: IntervalQuery, tol: float | None = None) -> float:
    """Trace-measure mass of the closed interval ``I``.

    Parameters
    ----------
    desc : SatoTateGroupDescriptor
    I : IntervalQuery
    tol : float, optional
        Absolute tolerance; defaults to ``1e-9`` for ``q = 1`` and ``1e-7``
        for ``q = 2``.

    Returns
    -------
    float
        Haar mass of ``T^{-1}(I)``. For ``N(U1)`` this is the mixture of a
        point mass at 0 and the ``U1`` measure, each with weight 1/2.
    """
    I.check(desc.g)
    if tol is None:
        tol = 1e-9 if desc.q == 1 else 1e-7
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if not desc.connected:
        u1 = catalog_lookup("U1")
        atom = 0.5 if I.lower <= 0.0 <= I.upper else 0.0
        return atom + 0.5 * measure_interval(u1, I, tol)
    if desc.q == 1:
        dens = lambda x: weyl_density(desc, x[:, None])  # noqa: E731
        return _segment_integral(dens, preimage_segments(desc, I))
    if desc.q == 2:
        def inner(t1):
            segs = preimage_segments(desc, I, t1)
            dens = lambda x: weyl_density(desc, np.column_stack([np.full_like(x, t1), x]))  # noqa: E731
            return _segment_integral(dens, segs)

        return _integrate_torus2(desc, I, inner, tol)
    raise UnsupportedError(f"q={desc.q} is not supported")


def measure_tail_u1(y: float):
    """Approximate ``mu_U1([2 - y^{-1/2}, 2])`` for large ``y``.

    Returns
    -------
    approx : float
        ``1 / (pi y^{1/4})``.
    error_bound : float
        ``y^{-3/4} / (10 pi)``; the exact value is
        ``arccos(1 - y^{-1/2}/2)/pi`` and ``arccos(1-u) <= sqrt(2u)(1 + u/10)``
        for ``u <= 0.4``.
    """
    if y < 2 ** (2 / 3):
        raise InvalidInputError("y must be at least 2^(2/3)")
    return 1.0 / (math.pi * y**0.25), y**-0.75 / (10 * math.pi)


# ---------------------------------------------------------------------------
# exponents and thresholds
# ---------------------------------------------------------------------------

def _require_connected(*descs):
    for d in descs:
        if not d.connected:
            raise UnsupportedError(f"{d.name} is not connected")


def epsilon(desc: SatoTateGroupDescriptor) -> Fraction:
    """``1 / (2(q + phi))``."""
    _require_connected(desc)
    return Fraction(1, 2 * (desc.q + desc.phi))


def epsilon_pair(desc: SatoTateGroupDescriptor, other: SatoTateGroupDescriptor) -> Fraction:
    """``1 / (2(q + q' + phi + phi' - 1))``."""
    _require_connected(desc, other)
    return Fraction(1, 2 * (desc.q + other.q + desc.phi + other.phi - 1))


def _nu(z, eps, power):
    if z <= 0:
        raise InvalidInputError("z must be positive")
    return max(1.0, math.log(z) ** power / z ** (1 / float(eps)))


def nu(desc: SatoTateGroupDescriptor, z: float) -> float:
    """``max(1, log(z)^6 / z^(1/eps))``."""
    return _nu(z, epsilon(desc), 6)


def nu_pair(desc: SatoTateGroupDescriptor, other: SatoTateGroupDescriptor, z: float) -> float:
    """``max(1, log(z)^8 / z^(1/eps_pair))``."""
    return _nu(z, epsilon_pair(desc, other), 8)


def x0_threshold(desc: SatoTateGroupDescriptor, interval_length: float, N: int, constant: float) -> float:
    """``constant * nu(|I|) * log(2N)^2 * log(log(4N))^4``.

    The implied constant is left to the caller.
    """
    if N < 1:
        raise InvalidInputError("N must be a positive integer")
    return constant * nu(desc, interval_length) * math.log(2 * N) ** 2 * math.log(math.log(4 * N)) ** 4


def hodge_circle_basis(desc: SatoTateGroupDescriptor) -> list:
    """Find ``q`` independent ``v in {+-1}^q`` with ``A v in {+-1}^g``.

    Raises
    ------
    DescriptorInvalidError
        If fewer than ``q`` independent sign vectors qualify.
    """
    _require_connected(desc)
    A = np.array(desc.embedding, dtype=np.int64).reshape(desc.g, desc.q)
    basis = []
    for v in itertools.product((1, -1), repeat=desc.q):
        if not np.all(np.abs(A @ np.array(v)) == 1):
            continue
        cand = np.array(basis + [v], dtype=float)
        if np.linalg.matrix_rank(cand) == len(cand):
            basis.append(v)
        if len(basis) == desc.q:
            return basis
    raise DescriptorInvalidError(f"{desc.name}: Hodge circles do not generate the torus")


def moment(desc: SatoTateGroupDescriptor, n: int, tol: float = 1e-9) -> float:
    """``E[T^n]`` under the trace measure.

    The integrand is a trigonometric polynomial, so the trapezoid rule on a
    uniform grid finer than its degree is exact up to rounding.
    """
    if n < 0:
        raise InvalidInputError("n must be nonnegative")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if not desc.connected:
        return 0.5 * (0.0**n) + 0.5 * moment(catalog_lookup("U1"), n, tol)
    A = np.abs(np.array(desc.embedding)).max(axis=0)
    roots = np.abs(_root_exponents(desc.root_system)).sum(axis=0) if desc.phi else np.zeros(desc.q)
    sizes = [int(n * A[l] + roots[l]) + 2 for l in range(desc.q)]
    axes = [np.arange(s) / s for s in sizes]
    th = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, desc.q)
    w = weyl_density(desc, th)
    return float(np.mean(w * trace_value(desc, th) ** n))
