"""Experiments comparing trace data against Sato-Tate predictions.

Every sum runs over the good records of a :class:`TraceSequence`. Results
are returned as :class:`AnalysisReport` tables or plain floats; implied
constants in error terms are caller parameters, reported alongside.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import InsufficientDataError, InvalidInputError, UnsupportedError
from .frobenius import TraceSequence, eigen_angles
from .lie_core import Weight, character, motivic_weight
from .st_group import (
    IntervalQuery,
    SatoTateGroupDescriptor,
    _root_exponents,
    epsilon,
    measure_interval,
    moment,
    nu,
    weyl_density,
)

__all__ = [
    "REPORT_SCHEMA",
    "BACH_A",
    "AnalysisReport",
    "CharacterSpec",
    "li",
    "interval_count",
    "st_envelope",
    "effective_st_report",
    "linnik_interval_search",
    "psi_value",
    "sign_search",
    "character_values",
    "character_sum",
    "character_report",
    "bach_sum",
    "delta_psi",
    "max_trace_stats",
    "empirical_moment",
]

REPORT_SCHEMA = "satotate-report/1"
BACH_A = 0.25
BASE_COLUMNS = ("x", "observed", "main_term", "error", "normalized_error", "envelope")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.12g}")
    if isinstance(v, dict):
        return {k: _fmt(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_fmt(x) for x in v]
    return v


@dataclass
class AnalysisReport:
    """One experiment: parameters, rows sorted by ``x`` and verdicts.

    Each row holds the base columns ``x, observed, main_term, error,
    normalized_error, envelope`` (``error = observed - main_term``) plus
    experiment-specific extras.
    """

    experiment: str
    parameters: dict
    rows: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    def add_row(self, x, observed, main_term, envelope, **extra):
        err = observed - main_term
        norm = err / envelope if envelope else math.nan
        row = dict(zip(BASE_COLUMNS, (x, observed, main_term, err, norm, envelope)))
        row.update(extra)
        self.rows.append(row)
        return row

    @property
    def columns(self) -> list:
        cols = list(BASE_COLUMNS)
        for r in self.rows:
            cols += [k for k in r if k not in cols]
        return cols

    def column(self, name) -> list:
        return [r.get(name) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        w.writerow(cols)
        for r in self.rows:
            w.writerow(["" if r.get(c) is None else _cell(r.get(c)) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "schema": REPORT_SCHEMA,
            "experiment": self.experiment,
            "parameters": _fmt(self.parameters),
            "rows": [_fmt(r) for r in self.rows],
            "verdicts": _fmt(self.verdicts),
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------

def li(x: float) -> float:
    """``Li(x) = int_2^x dt / log t`` via the exponential integral."""
    if x < 2:
        raise InvalidInputError("li needs x >= 2")
    return float(special.expi(math.log(x)) - special.expi(math.log(2.0)))


def _prefix(seq: TraceSequence, x: float) -> int:
    seq.require(x)
    return int(np.searchsorted(seq.norms, x, side="right"))


def interval_count(seq: TraceSequence, I: IntervalQuery, x: float) -> int:
    """Number of records with norm ``<= x`` and normalized trace in the closed ``I``."""
    k = _prefix(seq, x)
    ab = seq.abar[:k]
    return int(np.count_nonzero((ab >= I.lower) & (ab <= I.upper)))


def st_envelope(eps: float, x: float, N: int, constant: float = 1.0) -> float:
    """``constant * x^(1-eps) log(Nx)^(2 eps) / log(x)^(1 - 4 eps)``."""
    eps = float(eps)
    return constant * x ** (1 - eps) * math.log(N * x) ** (2 * eps) / math.log(x) ** (1 - 4 * eps)


def effective_st_report(seq, desc: SatoTateGroupDescriptor, I: IntervalQuery, x_grid, N=None,
                        envelope_constant: float = 1.0, tol: float | None = None) -> AnalysisReport:
    """Interval counts against ``mu(I) Li(x)`` with the effective error envelope."""
    grid = _grid(x_grid)
    seq.require(grid[-1])
    N = int(N or seq.conductor_proxy)
    eps = epsilon(desc)
    mu = measure_interval(desc, I, tol)
    rep = AnalysisReport("effective_st", {
        "group": desc.name, "curve": seq.label, "interval": [I.lower, I.upper], "N": N,
        "epsilon": str(eps), "mu": mu, "envelope_constant": envelope_constant,
    })
    for x in grid:
        env = st_envelope(eps, x, N, envelope_constant)
        row = rep.add_row(x, interval_count(seq, I, x), mu * li(x), env, li=li(x))
        row["within_envelope"] = abs(row["error"]) <= env
    rep.verdicts["within_envelope"] = all(r["within_envelope"] for r in rep.rows)
    return rep


def _grid(x_grid):
    grid = [float(x) for x in np.atleast_1d(x_grid)]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidInputError("x grid must be strictly increasing")
    if grid[0] < 2:
        raise InvalidInputError("x grid must start at 2 or above")
    return grid


def linnik_interval_search(seq: TraceSequence, I: IntervalQuery, desc: SatoTateGroupDescriptor | None = None,
                           constant: float = 1.0, N=None):
    """Least norm whose normalized trace lies in ``I``.

    Returns
    -------
    norm : int or None
        ``None`` when no record in the data qualifies.
    bound : float or None
        ``constant * nu(min(|I|, mu(I))) * log(2N)^2 * log(log 4N)^4`` when
        ``desc`` is given.
    """
    ab = seq.abar
    hit = np.flatnonzero((ab >= I.lower) & (ab <= I.upper))
    norm = int(seq.norms[hit[0]]) if len(hit) else None
    bound = None
    if desc is not None:
        N = int(N or seq.conductor_proxy)
        z = min(I.length, measure_interval(desc, I))
        bound = float(constant * nu(desc, z) * math.log(2 * N) ** 2 * math.log(math.log(4 * N)) ** 4)
    return norm, bound


def psi_value(abar, abar2, g: int = 1, g2: int = 1):
    """``abar abar' (abar - 2g)(abar' + 2g')``; positive iff the traces have opposite signs."""
    a, b = np.asarray(abar, dtype=float), np.asarray(abar2, dtype=float)
    out = a * b * (a - 2 * g) * (b + 2 * g2)
    return float(out) if out.ndim == 0 else out


def _common(seq: TraceSequence, other: TraceSequence):
    common, ia, ib = np.intersect1d(seq.norms, other.norms, assume_unique=True, return_indices=True)
    if len(common) == 0:
        raise InsufficientDataError("the two sequences share no norms")
    return common, ia, ib


def sign_search(seq: TraceSequence, other: TraceSequence, constant: float = 1.0, N=None, N2=None):
    """Least common good norm where the two traces are nonzero with opposite signs.

    Returns ``(norm or None, bound)`` with ``bound = constant * log(2 N N')^2``.
    """
    common, ia, ib = _common(seq, other)
    prod = seq.a[ia] * other.a[ib]
    hit = np.flatnonzero(prod < 0)
    N = int(N or seq.conductor_proxy)
    N2 = int(N2 or other.conductor_proxy)
    bound = constant * math.log(2 * N * N2) ** 2
    return (int(common[hit[0]]) if len(hit) else None), bound


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CharacterSpec:
    """A self-dual (virtual) character of a Sato-Tate group.

    ``kind`` is one of ``trivial``, ``irreducible`` (highest weight
    ``weight``), ``squared`` (the irreducible character evaluated at the
    square of the class) or ``psi_pair`` (the sign-detecting character on a
    product of two groups, ``desc`` and ``desc2``).
    """

    kind: str
    desc: SatoTateGroupDescriptor | None = None
    weight: Weight | None = None
    desc2: SatoTateGroupDescriptor | None = None

    def __post_init__(self):
        if self.kind not in ("trivial", "irreducible", "squared", "psi_pair"):
            raise InvalidInputError(f"unknown character kind {self.kind!r}")
        if self.kind in ("irreducible", "squared"):
            if self.desc is None or self.weight is None:
                raise InvalidInputError(f"{self.kind} characters need a group and a weight")
            rs = self.desc.root_system
            if rs.abelian_rank_a or rs.rank_h == 0 or self.desc.q != self.desc.g:
                raise UnsupportedError("irreducible characters need a semisimple group with A = I")
            if not self.weight.is_dominant() or len(self.weight.semisimple) != rs.rank_h:
                raise InvalidInputError("weight must be dominant for this root system")
        if self.kind == "psi_pair" and (self.desc is None or self.desc2 is None):
            raise InvalidInputError("psi_pair needs two groups")

    @property
    def g(self) -> int:
        return self.desc.g if self.desc is not None else 1

    @property
    def motivic_weight(self) -> int:
        if self.kind == "trivial":
            return 0
        if self.kind == "psi_pair":
            return 4
        w = motivic_weight(self.desc.root_system, self.weight)
        return 2 * w if self.kind == "squared" else w

    def delta(self) -> float:
        """Multiplicity of the trivial representation."""
        if self.kind == "trivial":
            return 1.0
        if self.kind == "psi_pair":
            return delta_psi(self.desc, self.desc2)
        if self.kind == "irreducible":
            return float(not any(self.weight.semisimple))
        return _torus_mean(self.desc, lambda th: character(self.desc.root_system, self.weight, 2 * th),
                           4 * sum(self.weight.semisimple) + 2)

    def on_angles(self, theta) -> np.ndarray:
        """Character values at angle vectors of shape ``(n, q)``."""
        th = np.asarray(theta, dtype=float)
        if self.kind == "squared":
            th = 2 * th
        z = character(self.desc.root_system, self.weight, th)
        return np.real(z)


def _torus_mean(desc, fn, degree):
    """Haar mean of a trigonometric polynomial of the given degree."""
    roots = np.abs(_root_exponents(desc.root_system)).sum(axis=0)
    sizes = [int(degree + roots[l]) + 2 for l in range(desc.q)]
    axes = [np.arange(s) / s for s in sizes]
    th = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, desc.q)
    vals = np.real(fn(th)) * weyl_density(desc, th)
    return float(np.mean(vals))


def _angles(seq: TraceSequence, k: int) -> np.ndarray:
    if seq.lpoly is not None:
        return np.array([eigen_angles(lpoly=row, g=seq.g) for row in seq.lpoly[:k]])
    if seq.g != 1:
        raise InvalidInputError("angles need g = 1 or local-factor columns")
    return (np.arccos(np.clip(seq.abar[:k] / 2, -1, 1)) / (2 * np.pi))[:, None]


def character_values(seq: TraceSequence, char: CharacterSpec, x: float, other: TraceSequence | None = None):
    """``(norms, chi(y_p))`` for records with norm ``<= x``."""
    if char.kind == "psi_pair":
        if other is None:
            raise InvalidInputError("psi_pair needs a second sequence")
        seq.require(x)
        other.require(x)
        common, ia, ib = _common(seq, other)
        keep = common <= x
        vals = psi_value(seq.abar[ia][keep], other.abar[ib][keep], seq.g, other.g)
        return common[keep], np.atleast_1d(vals)
    k = _prefix(seq, x)
    if char.kind == "trivial":
        return seq.norms[:k], np.ones(k)
    if char.desc.g != seq.g:
        raise InvalidInputError("character group and data have different g")
    return seq.norms[:k], char.on_angles(_angles(seq, k))


def character_sum(seq: TraceSequence, char: CharacterSpec, x: float, other: TraceSequence | None = None) -> float:
    """``sum_{norm <= x} chi(y_p)``."""
    return float(np.sum(character_values(seq, char, x, other)[1]))


def character_report(seq, char: CharacterSpec, x_grid, N=None, constant: float = 1.0,
                     other: TraceSequence | None = None) -> AnalysisReport:
    """Character sums against ``delta(chi) Li(x)`` with a ``sqrt(x) log(N(x + w))`` envelope."""
    grid = _grid(x_grid)
    N = int(N or seq.conductor_proxy * (other.conductor_proxy if other is not None else 1))
    d = char.delta()
    w = char.motivic_weight
    rep = AnalysisReport("character_sum", {
        "curve": seq.label, "character": char.kind, "delta": d, "N": N, "envelope_constant": constant,
        "motivic_weight": w,
    })
    for x in grid:
        env = constant * math.sqrt(x) * math.log(N * (x + w))
        row = rep.add_row(x, character_sum(seq, char, x, other), d * li(x), env)
        row["within_envelope"] = abs(row["error"]) <= env
    rep.verdicts["within_envelope"] = all(r["within_envelope"] for r in rep.rows)
    return rep


def bach_sum(seq: TraceSequence, char: CharacterSpec, x: float, other: TraceSequence | None = None,
             include_squares: bool = False) -> float:
    """``sum chi(y_p) log(p) (p/x)^(1/4) log(x/p)`` over norms ``p <= x``.

    With ``include_squares`` the prime-square term
    ``sum chi(y_p^2) log(p) (p^2/x)^(1/4) log(x/p^2)`` is added, using the
    squared character for irreducible inputs.
    """
    norms, vals = character_values(seq, char, x, other)
    if len(norms) == 0:
        return 0.0
    n = norms.astype(float)
    total = float(np.sum(vals * np.log(n) * (n / x) ** BACH_A * np.log(x / n)))
    if include_squares:
        k = int(np.searchsorted(norms, math.sqrt(x), side="right"))
        n2 = n[:k] ** 2
        if char.kind == "trivial":
            v2 = np.ones(k)
        elif char.kind in ("irreducible", "squared"):
            sq = CharacterSpec("squared", char.desc, char.weight) if char.kind == "irreducible" else None
            if sq is None:
                raise UnsupportedError("fourth powers of classes are not supported")
            v2 = sq.on_angles(_angles(seq, k))
        else:
            raise UnsupportedError("the square term is not defined for psi_pair")
        total += float(np.sum(v2 * np.log(n[:k]) * (n2 / x) ** BACH_A * np.log(x / n2)))
    return total


def delta_psi(desc: SatoTateGroupDescriptor, desc2: SatoTateGroupDescriptor, tol: float = 1e-9) -> float:
    """``(-2g E[T] + E[T^2]) (2g' E[T'] + E[T'^2])`` assuming independent groups."""
    left = -2 * desc.g * moment(desc, 1, tol) + moment(desc, 2, tol)
    right = 2 * desc2.g * moment(desc2, 1, tol) + moment(desc2, 2, tol)
    return left * right


# ---------------------------------------------------------------------------
# maximal traces and moments
# ---------------------------------------------------------------------------

def max_trace_stats(seq: TraceSequence, x_grid) -> AnalysisReport:
    """Counts of maximal traces ``a_p = floor(2 sqrt p)`` with the partition sandwich.

    For each ``x`` the report holds ``#M(x)``, ``R(x)`` (records with
    ``|abar - 2| < x^-1/2``), the partition bound
    ``sum_{j<n} #S(x_{j+1}, x_j) + #{p <= x_n}`` for ``x_j = x/j^4`` and
    ``n = floor(x^(1/16))``, and the ratio ``#M(x) log(x) / x^(3/4)``.
    """
    if seq.g != 1:
        raise InvalidInputError("maximal traces are defined for g = 1")
    grid = _grid(x_grid)
    seq.require(grid[-1])
    norms = seq.norms
    gap = 2 - seq.abar
    maximal = seq.a == _isqrt_array(4 * norms)
    cum_m = np.concatenate(([0], np.cumsum(maximal)))
    rep = AnalysisReport("max_trace", {"curve": seq.label, "target_constant": 2 / (3 * math.pi)})
    for x in grid:
        k = int(np.searchsorted(norms, x, side="right"))
        m = int(cum_m[k])
        r = int(np.count_nonzero(gap[:k] < x**-0.5))
        n = max(1, int(math.floor(x ** (1 / 16))))
        xs = [x / j**4 for j in range(1, n + 1)]
        s_total = 0
        for j in range(n - 1):
            hi, lo = xs[j], xs[j + 1]
            a = int(np.searchsorted(norms, lo, side="right"))
            b = int(np.searchsorted(norms, hi, side="right"))
            s_total += int(np.count_nonzero(gap[a:b] < lo**-0.5))
        tail = int(np.searchsorted(norms, xs[-1], side="right"))
        bound = s_total + tail
        main = 2 / (3 * math.pi) * x**0.75 / math.log(x)
        row = rep.add_row(x, m, main, x**0.75 / math.log(x), R=r, partition_bound=bound,
                          ratio=m * math.log(x) / x**0.75, n_parts=n)
        row["sandwich"] = r <= m <= bound
    rep.verdicts["sandwich"] = all(r["sandwich"] for r in rep.rows)
    return rep


def _isqrt_array(n: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(n.astype(float))).astype(np.int64)
    r -= (r * r > n).astype(np.int64)
    r += ((r + 1) * (r + 1) <= n).astype(np.int64)
    return r


def empirical_moment(seq: TraceSequence, n: int, x: float) -> float:
    """``(1/#records) sum abar^n`` over norms ``<= x``."""
    if not 0 <= n <= 8:
        raise InvalidInputError("moment order must be between 0 and 8")
    k = _prefix(seq, x)
    if k == 0:
        raise InsufficientDataError("no records up to x")
    return float(np.mean(seq.abar[:k] ** n))

