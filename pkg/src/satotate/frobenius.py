"""Frobenius traces of elliptic curves over Q and trace-file ingestion.

Three independent algorithms compute ``a_p``: character-sum enumeration
(:func:`ap_naive`), Mestre's baby-step/giant-step order search
(:func:`ap_bsgs`) and, for ``y^2 = x^3 - x``, Cornacchia's algorithm
(:func:`ap_cm`). Higher-genus or number-field data enters through files.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import isqrt

import numpy as np
from sympy import primefactors

from .errors import (
    BadReductionError,
    DataInvalidError,
    InsufficientDataError,
    InvalidInputError,
    NotFoundError,
    NumericFailureError,
    TraceParseError,
    UnsupportedError,
)

__all__ = [
    "CurveSpec",
    "CURVES",
    "curve_lookup",
    "parse_curve",
    "TraceSequence",
    "sieve_primes",
    "ap_naive",
    "ap_bsgs",
    "ap_cm",
    "trace_sequence",
    "eigen_angles",
    "load_traces",
    "save_traces",
    "FORMAT_TAG",
]

FORMAT_TAG = "ap-traces v1"
_BSGS_MIN_P = 457
_AUTO_NAIVE_BELOW = 10**4


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveSpec:
    """Long Weierstrass model ``y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6``.

    ``bad_norms`` defaults to the primes dividing the model discriminant; a
    supplied set must contain them.
    """

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    label: str = ""
    bad_norms: frozenset = None
    cm_discriminant: int | None = None

    def __post_init__(self):
        if self.discriminant == 0:
            raise InvalidInputError(f"singular model {self.coefficients}")
        disc_primes = frozenset(primefactors(abs(self.discriminant)))
        if self.bad_norms is None:
            object.__setattr__(self, "bad_norms", disc_primes)
        else:
            given = frozenset(int(p) for p in self.bad_norms)
            if not disc_primes <= given:
                raise InvalidInputError(f"bad set must contain {sorted(disc_primes)}")
            object.__setattr__(self, "bad_norms", given)

    @property
    def coefficients(self) -> tuple:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b_invariants(self) -> tuple:
        a1, a2, a3, a4, a6 = self.coefficients
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c_invariants(self) -> tuple:
        b2, b4, b6, _ = self.b_invariants
        return b2 * b2 - 24 * b4, -b2**3 + 36 * b2 * b4 - 216 * b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def conductor_proxy(self) -> int:
        """Product of the bad primes, used where a conductor is needed."""
        return math.prod(self.bad_norms) if self.bad_norms else 1

    def check_good(self, p: int) -> None:
        if p in self.bad_norms or self.discriminant % p == 0:
            raise BadReductionError(p)


CURVES = {
    # y^2 + y = x^3 - x^2 (this model is 11a3 in Cremona's tables; same a_p as 11a1)
    "11a1": CurveSpec(0, -1, 1, 0, 0, label="11a1"),
    "37a1": CurveSpec(0, 0, 1, -1, 0, label="37a1"),
    "y^2=x^3-x": CurveSpec(0, 0, 0, -1, 0, label="y^2=x^3-x", cm_discriminant=-4),
}


def curve_lookup(name: str) -> CurveSpec:
    try:
        return CURVES[name]
    except KeyError:
        raise NotFoundError(f"unknown curve {name!r}; known: {', '.join(CURVES)}") from None


def parse_curve(text: str, label: str = "") -> CurveSpec:
    """Parse ``"a1,a2,a3,a4,a6"`` or a catalog name."""
    if text in CURVES:
        return CURVES[text]
    parts = text.replace("[", "").replace("]", "").split(",")
    if len(parts) != 5:
        raise InvalidInputError(f"curve must be five integers a1,a2,a3,a4,a6, got {text!r}")
    try:
        coeffs = [int(s.strip()) for s in parts]
    except ValueError:
        raise InvalidInputError(f"curve coefficients must be integers, got {text!r}") from None
    cm = -4 if coeffs == [0, 0, 0, -1, 0] else None
    return CurveSpec(*coeffs, label=label or text, cm_discriminant=cm)


# ---------------------------------------------------------------------------
# primes
# ---------------------------------------------------------------------------

def _small_primes(n: int) -> np.ndarray:
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for i in range(2, isqrt(n) + 1):
        if is_p[i]:
            is_p[i * i::i] = False
    return np.flatnonzero(is_p)


def _prime_mask(x: int, segment: int = 1 << 22) -> np.ndarray:
    """Boolean array ``mask[n]`` for ``0 <= n <= x``, filled segment by segment."""
    mask = np.zeros(x + 1, dtype=bool)
    base = _small_primes(isqrt(x))
    for lo in range(0, x + 1, segment):
        hi = min(lo + segment, x + 1)
        seg = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            start = max(p * p, (lo + p - 1) // p * p)
            if start >= hi:
                if p * p >= hi:
                    break
                continue
            seg[start - lo::p] = False
        if lo == 0:
            seg[: min(2, hi)] = False
        mask[lo:hi] = seg
    return mask


def sieve_primes(x: int) -> np.ndarray:
    """All primes ``<= x`` in increasing order (segmented sieve)."""
    x = int(x)
    if x < 2:
        raise InvalidInputError("x must be at least 2")
    return np.flatnonzero(_prime_mask(x)).astype(np.int64)


# ---------------------------------------------------------------------------
# a_p by enumeration
# ---------------------------------------------------------------------------

def ap_naive(curve: CurveSpec, p: int) -> int:
    """``a_p = p + 1 - #E(F_p)`` by summing the quadratic character.

    After completing the square the affine count is
    ``sum_x (1 + chi(4x^3 + b2 x^2 + 2 b4 x + b6))`` for odd ``p``.
    """
    p = int(p)
    curve.check_good(p)
    if p == 2:
        a1, a2, a3, a4, a6 = (c % 2 for c in curve.coefficients)
        pts = sum(
            (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % 2 == 0
            for x in range(2) for y in range(2)
        )
        return p + 1 - (pts + 1)
    b2, b4, b6, _ = (b % p for b in curve.b_invariants)
    xs = np.arange(p, dtype=np.int64)
    g = (4 * xs) % p
    g = (g + b2) % p
    g = (g * xs) % p
    g = (g + 2 * b4) % p
    g = (g * xs) % p
    g = (g + b6) % p
    is_sq = np.zeros(p, dtype=bool)
    is_sq[(xs * xs) % p] = True
    chi = np.where(is_sq[g], 1, -1)
    chi[g == 0] = 0
    return -int(chi.sum())


# ---------------------------------------------------------------------------
# a_p by baby-step/giant-step
# ---------------------------------------------------------------------------

def _sqrt_mod(a: int, p: int) -> int:
    """Tonelli-Shanks square root of a quadratic residue ``a`` mod odd ``p``."""
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def _add(P, Q, A, p):
    """Affine addition on ``y^2 = x^3 + A x + B``; ``None`` is the identity."""
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def _mul(k, P, A, p):
    if k < 0:
        k, P = -k, (None if P is None else (P[0], -P[1] % p))
    R = None
    while k:
        if k & 1:
            R = _add(R, P, A, p)
        P = _add(P, P, A, p)
        k >>= 1
    return R


def _random_point(A, B, p, rng):
    while True:
        x = rng.randrange(p)
        f = (x * x * x + A * x + B) % p
        if f == 0:
            return (x, 0)
        if pow(f, (p - 1) // 2, p) == 1:
            return (x, _sqrt_mod(f, p))


def _annihilators(P, A, p, lo, hi):
    """All ``N in [lo, hi]`` with ``N P = O``, by baby-step/giant-step."""
    m = isqrt(hi - lo) + 1
    baby = {}
    R = None
    for j in range(m + 1):
        if R is not None:
            baby.setdefault(R[0], []).append((j, R[1]))
        elif j:
            # P has order j: the annihilators are exactly its multiples
            return set(range(-(-lo // j) * j, hi + 1, j))
        R = _add(R, P, A, p)
    step = _mul(2 * m + 1, P, A, p)
    found = set()
    k = lo + m
    Q = _mul(k, P, A, p)
    while k - m <= hi:
        if Q is None:
            found.add(k)
        else:
            for j, y in baby.get(Q[0], ()):
                if y == Q[1]:
                    found.add(k - j)
                if (y + Q[1]) % p == 0:
                    found.add(k + j)
        Q = _add(Q, step, A, p)
        k += 2 * m + 1
    return {n for n in found if lo <= n <= hi}


def _short_model(curve: CurveSpec, p: int):
    c4, c6 = curve.c_invariants
    return (-27 * c4) % p, (-54 * c6) % p


def ap_bsgs(curve: CurveSpec, p: int, seed: int = 0, max_points: int = 64) -> int:
    """``a_p`` by Mestre's method.

    Random points on the curve and on its quadratic twist each restrict the
    group order to a set of candidates in the Hasse interval; the sets are
    intersected until one value remains. Primes ``p <= 457`` are delegated
    to :func:`ap_naive`.
    """
    p = int(p)
    curve.check_good(p)
    if p <= _BSGS_MIN_P:
        return ap_naive(curve, p)
    A, B = _short_model(curve, p)
    d = 2
    while pow(d, (p - 1) // 2, p) != p - 1:
        d += 1
    At, Bt = A * d * d % p, B * d * d * d % p
    w = isqrt(4 * p)
    lo, hi = p + 1 - w, p + 1 + w
    rng = random.Random(seed * 1_000_003 + p)
    cands = None
    for i in range(max_points):
        if i % 2 == 0:
            new = _annihilators(_random_point(A, B, p, rng), A, p, lo, hi)
        else:
            tw = _annihilators(_random_point(At, Bt, p, rng), At, p, lo, hi)
            new = {2 * p + 2 - n for n in tw}
        cands = new if cands is None else cands & new
        if len(cands) == 1:
            return p + 1 - cands.pop()
        if not cands:
            break
    raise NumericFailureError(f"order search did not isolate #E(F_{p})")


# ---------------------------------------------------------------------------
# a_p by complex multiplication
# ---------------------------------------------------------------------------

def _cornacchia_sum_of_squares(p: int):
    """``(a, b)`` with ``a^2 + b^2 = p`` for a prime ``p = 1 mod 4``."""
    c = 2
    while pow(c, (p - 1) // 2, p) != p - 1:
        c += 1
    r0, r1 = p, pow(c, (p - 1) // 4, p)
    limit = isqrt(p)
    while r1 > limit:
        r0, r1 = r1, r0 % r1
    a = r1
    b = isqrt(p - a * a)
    if a * a + b * b != p:
        raise NumericFailureError(f"Cornacchia failed for p={p}")
    return a, b


def ap_cm(curve: CurveSpec, p: int) -> int:
    """``a_p`` for ``y^2 = x^3 - x`` from ``p = a^2 + b^2``.

    Zero for ``p = 3 mod 4``. Otherwise ``a`` is taken odd with
    ``a + b = 1 mod 4`` and ``a_p = 2a``.
    """
    if curve.cm_discriminant != -4 or curve.coefficients != (0, 0, 0, -1, 0):
        raise UnsupportedError("CM fast path is implemented for y^2 = x^3 - x only")
    p = int(p)
    curve.check_good(p)
    if p % 4 == 3:
        return 0
    a, b = _cornacchia_sum_of_squares(p)
    if a % 2 == 0:
        a, b = b, a
    if (a + b) % 4 != 1:
        a = -a
    return 2 * a


def _cm_table(x: int, mask: np.ndarray):
    """``a_p`` for all primes ``p <= x`` with ``p = 1 mod 4`` via lattice points."""
    out_p, out_a = [], []
    for a in range(1, isqrt(x) + 1, 2):
        bmax = isqrt(max(x - a * a, 0))
        b = np.arange(2, bmax + 1, 2, dtype=np.int64)
        n = a * a + b * b
        keep = mask[n]
        if not keep.any():
            continue
        n, b = n[keep], b[keep]
        # a + b = 1 mod 4 fixes the sign of a
        sgn = np.where((a + b) % 4 == 1, 1, -1)
        out_p.append(n)
        out_a.append(2 * a * sgn)
    if not out_p:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    ps, ap = np.concatenate(out_p), np.concatenate(out_a)
    order = np.argsort(ps, kind="stable")
    return ps[order], ap[order]


# ---------------------------------------------------------------------------
# sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TraceSequence:
    """Frobenius traces at good prime norms up to ``max_norm``.

    Attributes
    ----------
    label : str
    g : int
    bad_norms : tuple of int
    norms, a : ndarray of int64
        Strictly increasing norms and the corresponding traces.
    max_norm : int
        Every good norm up to this bound is present.
    lpoly : ndarray or None
        Normalized local-factor coefficients ``c_1..c_{2g}`` per record.
    curve : tuple or None
        Weierstrass coefficients when the data came from a curve.
    """

    label: str
    g: int
    bad_norms: tuple
    norms: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    max_norm: int
    lpoly: np.ndarray | None = field(default=None, repr=False)
    curve: tuple | None = None

    def __post_init__(self):
        norms = np.asarray(self.norms, dtype=np.int64)
        a = np.asarray(self.a, dtype=np.int64)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "bad_norms", tuple(sorted(int(b) for b in self.bad_norms)))
        if norms.shape != a.shape or norms.ndim != 1:
            raise DataInvalidError("norm and trace columns differ in length")
        if len(norms) and (np.any(np.diff(norms) <= 0)):
            raise DataInvalidError("norms must be strictly increasing")
        if len(norms) and norms[-1] > self.max_norm:
            raise DataInvalidError("a norm exceeds max_norm")
        if np.isin(norms, np.array(self.bad_norms, dtype=np.int64)).any():
            raise DataInvalidError("sequence contains a bad norm")
        over = a.astype(object) ** 2 > 4 * self.g * self.g * norms.astype(object)
        if np.any(over):
            i = int(np.flatnonzero(over)[0])
            raise DataInvalidError(f"Hasse bound violated at norm {norms[i]} (a={a[i]})")
        if self.lpoly is not None:
            lp = np.asarray(self.lpoly, dtype=float).reshape(len(norms), 2 * self.g)
            object.__setattr__(self, "lpoly", lp)

    def __len__(self):
        return len(self.norms)

    def __eq__(self, other):
        if not isinstance(other, TraceSequence):
            return NotImplemented
        same_lp = (self.lpoly is None and other.lpoly is None) or (
            self.lpoly is not None and other.lpoly is not None and np.array_equal(self.lpoly, other.lpoly)
        )
        return (
            (self.label, self.g, self.bad_norms, self.max_norm, self.curve)
            == (other.label, other.g, other.bad_norms, other.max_norm, other.curve)
            and np.array_equal(self.norms, other.norms)
            and np.array_equal(self.a, other.a)
            and same_lp
        )

    @property
    def abar(self) -> np.ndarray:
        return self.a / np.sqrt(self.norms)

    @property
    def conductor_proxy(self) -> int:
        return math.prod(self.bad_norms) if self.bad_norms else 1

    def upto(self, x: float) -> "TraceSequence":
        """Records with norm ``<= x``; raises if ``x`` exceeds the data."""
        self.require(x)
        k = int(np.searchsorted(self.norms, x, side="right"))
        return TraceSequence(
            self.label, self.g, self.bad_norms, self.norms[:k], self.a[:k], int(x),
            None if self.lpoly is None else self.lpoly[:k], self.curve,
        )

    def require(self, x: float) -> None:
        if x > self.max_norm:
            raise InsufficientDataError(f"x={x:g} exceeds available data (max norm {self.max_norm})")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SATOTATE_THREADS", "1")))
    except ValueError:
        return 1


def _ap_chunk(args):
    curve, ps, method, seed = args
    out = []
    for p in ps:
        try:
            if method == "bsgs":
                out.append(ap_bsgs(curve, int(p), seed=seed))
            else:
                out.append(ap_naive(curve, int(p)))
        except NumericFailureError as exc:
            raise NumericFailureError(f"p={p}: {exc}") from exc
    return out


def trace_sequence(curve: CurveSpec, x: float, strategy: str = "auto", threads: int | None = None,
                   seed: int = 0) -> TraceSequence:
    """Traces at every good prime ``p <= x``.

    ``auto`` uses the CM path when available, otherwise enumeration below
    ``10^4`` and baby-step/giant-step above. With ``threads > 1`` primes are
    split into contiguous chunks whose results are concatenated in order, so
    the output does not depend on the schedule.
    """
    x = int(x)
    if x < 2:
        raise InvalidInputError("x must be at least 2")
    if strategy not in ("auto", "naive", "bsgs", "cm"):
        raise InvalidInputError(f"unknown strategy {strategy!r}")
    if strategy == "cm" or (strategy == "auto" and curve.cm_discriminant == -4
                            and curve.coefficients == (0, 0, 0, -1, 0)):
        return _cm_sequence(curve, x)
    primes = sieve_primes(x)
    primes = primes[~np.isin(primes, np.array(sorted(curve.bad_norms), dtype=np.int64))]
    if strategy == "auto":
        methods = np.where(primes < _AUTO_NAIVE_BELOW, "naive", "bsgs")
    else:
        methods = np.full(len(primes), strategy)
    jobs = []
    for method in ("naive", "bsgs"):
        sel = primes[methods == method]
        if len(sel):
            n_chunks = max(1, min(len(sel) // 256, 64))
            for chunk in np.array_split(sel, n_chunks):
                jobs.append((curve, chunk.tolist(), method, seed))
    jobs.sort(key=lambda j: j[1][0])
    n = threads or _threads()
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_ap_chunk, jobs))
    else:
        results = [_ap_chunk(j) for j in jobs]
    a = [v for r in results for v in r]
    return TraceSequence(curve.label, 1, tuple(curve.bad_norms), primes, np.array(a, dtype=np.int64), x,
                         curve=curve.coefficients)


def _cm_sequence(curve: CurveSpec, x: int) -> TraceSequence:
    if curve.cm_discriminant != -4 or curve.coefficients != (0, 0, 0, -1, 0):
        raise UnsupportedError("CM fast path is implemented for y^2 = x^3 - x only")
    mask = _prime_mask(x)
    for b in curve.bad_norms:
        if b <= x:
            mask[b] = False
    primes = np.flatnonzero(mask).astype(np.int64)
    a = np.zeros(len(primes), dtype=np.int64)
    ps, ap = _cm_table(x, mask)
    a[np.searchsorted(primes, ps)] = ap
    return TraceSequence(curve.label, 1, tuple(curve.bad_norms), primes, a, x, curve=curve.coefficients)


# ---------------------------------------------------------------------------
# eigenangles
# ---------------------------------------------------------------------------

def _palindromic_s_roots(c, tol):
    """Roots ``s = z + 1/z`` of ``1 + c1 T + ... + c_{2g} T^{2g}``."""
    g = len(c) // 2
    full = np.concatenate(([1.0], np.asarray(c, dtype=float)))
    if np.max(np.abs(full - full[::-1])) > tol:
        raise DataInvalidError("local factor is not palindromic")
    if g == 1:
        return np.array([-full[1]])
    if g == 2:
        # T^-2 L(T) = s^2 + c1 s + (c2 - 2)
        disc = full[1] ** 2 - 4 * (full[2] - 2)
        if disc < -tol:
            raise DataInvalidError("reciprocal roots are off the unit circle")
        r = math.sqrt(max(disc, 0.0))
        return np.array([(-full[1] - r) / 2, (-full[1] + r) / 2])
    roots = np.roots(full)
    if np.max(np.abs(np.abs(roots) - 1)) > tol:
        raise DataInvalidError("reciprocal roots are off the unit circle")
    s = np.sort((2 * roots.real)[np.argsort(-roots.imag)][:g])
    return s


def eigen_angles(abar: float | None = None, lpoly=None, g: int = 1, tol: float = 1e-8) -> np.ndarray:
    """Angles ``theta_j in [0, 1/2]`` of the Frobenius class, sorted.

    With ``g = 1`` and no local factor, ``theta = arccos(abar/2)/(2 pi)``.
    Otherwise the normalized local factor ``1 + c1 T + ... + c_{2g} T^{2g}``
    is reduced through ``s = T + 1/T`` and every ``s`` must be real in
    ``[-2, 2]``, which is equivalent to all reciprocal roots lying on the
    unit circle.
    """
    if lpoly is None:
        if g != 1 or abar is None:
            raise InvalidInputError("angles need g = 1 with abar, or a local factor")
        s = np.array([float(abar)])
        if abs(s[0]) > 2 + tol:
            raise DataInvalidError(f"normalized trace {abar} outside [-2, 2]")
    else:
        lp = np.asarray(lpoly, dtype=float)
        if lp.shape != (2 * g,):
            raise InvalidInputError(f"local factor needs {2 * g} coefficients")
        s = _palindromic_s_roots(lp, tol)
        if np.any(np.abs(s) > 2 + tol):
            raise DataInvalidError("reciprocal roots are off the unit circle")
    return np.sort(np.arccos(np.clip(s / 2, -1.0, 1.0)) / (2 * np.pi))


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------

def save_traces(path, seq: TraceSequence) -> None:
    """Write ``seq`` in the ``ap-traces v1`` CSV format."""
    lines = [
        f"# format: {FORMAT_TAG}",
        f"# label: {seq.label}",
        f"# g: {seq.g}",
        f"# bad_norms: {','.join(str(b) for b in seq.bad_norms)}",
        f"# max_norm: {seq.max_norm}",
    ]
    if seq.curve is not None:
        lines.append(f"# curve: {','.join(str(c) for c in seq.curve)}")
    if seq.lpoly is None:
        body = [f"{n},{a}" for n, a in zip(seq.norms.tolist(), seq.a.tolist())]
    else:
        body = [
            f"{n},{a}," + ",".join(repr(float(c)) for c in row)
            for n, a, row in zip(seq.norms.tolist(), seq.a.tolist(), seq.lpoly)
        ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines + body) + "\n")


def _parse_int(text, lineno, what):
    t = text.strip()
    if not t or not (t.isdigit() or (t[0] in "+-" and t[1:].isdigit())):
        raise TraceParseError(lineno, f"{what} must be an integer, got {text.strip()!r}")
    return int(t)


def load_traces(path) -> TraceSequence:
    """Read and validate an ``ap-traces v1`` file.

    Raises
    ------
    TraceParseError
        On a malformed line (the line number is attached).
    DataInvalidError
        On a Hasse-bound or unit-circle violation.
    """
    header = {}
    norms, traces, lps = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].partition(":")
                if sep:
                    header[key.strip()] = val.strip()
                continue
            if header.get("format") != FORMAT_TAG:
                raise TraceParseError(lineno, f"missing or unsupported '# format: {FORMAT_TAG}' header")
            if "g" not in header:
                raise TraceParseError(lineno, "missing '# g:' header")
            g = _parse_int(header["g"], lineno, "g")
            cols = line.split(",")
            if len(cols) not in (2, 2 + 2 * g):
                raise TraceParseError(lineno, f"expected 2 or {2 + 2 * g} columns, got {len(cols)}")
            norms.append(_parse_int(cols[0], lineno, "norm"))
            traces.append(_parse_int(cols[1], lineno, "a"))
            if len(cols) > 2:
                try:
                    lps.append([float(c) for c in cols[2:]])
                except ValueError:
                    raise TraceParseError(lineno, "local-factor coefficients must be numbers") from None
            if lps and len(lps) != len(norms):
                raise TraceParseError(lineno, "local-factor columns must be present on every row")
    if header.get("format") != FORMAT_TAG:
        raise TraceParseError(0, f"missing or unsupported '# format: {FORMAT_TAG}' header")
    g = _parse_int(header.get("g", "1"), 0, "g")
    bad = tuple(_parse_int(b, 0, "bad norm") for b in header.get("bad_norms", "").split(",") if b.strip())
    max_norm = _parse_int(header["max_norm"], 0, "max_norm") if "max_norm" in header else (norms[-1] if norms else 0)
    curve = tuple(_parse_int(c, 0, "curve coefficient") for c in header["curve"].split(",")) if "curve" in header else None
    lpoly = np.array(lps, dtype=float) if lps else None
    seq = TraceSequence(header.get("label", ""), g, bad, norms, traces, max_norm, lpoly, curve)
    if lpoly is not None:
        abar = seq.abar
        for i, row in enumerate(lpoly):
            eigen_angles(lpoly=row, g=g)
            if abs(-row[0] - abar[i]) > 1e-6 * max(1.0, abs(abar[i])):
                raise DataInvalidError(f"norm {norms[i]}: local factor disagrees with the trace")
    return seq
