"""Trigonometric smoothing of interval indicators on the maximal torus.

The indicator ``psi_0`` of ``T^{-1}(I)`` is expanded in a Fourier series,
smoothed by ``r``-fold box averaging of half-width ``delta`` (a multiplier on
the Fourier side), averaged over the Weyl group and finally rewritten in
irreducible characters so its trivial component can be read off.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import BelowThresholdError, InvalidInputError, NumericFailureError, UnsupportedError
from .lie_core import Weight, _inverse, _matvec, character, gupta_inverse_row, weyl_dimension
from .st_group import (
    IntervalQuery,
    SatoTateGroupDescriptor,
    crossing_bound,
    epsilon,
    gradient_bound,
    measure_interval,
    preimage_segments,
    slice_breakpoints,
    trace_value,
)

__all__ = [
    "FourierSeries",
    "SmoothingParams",
    "Decomposition",
    "indicator_fourier",
    "box_multiplier",
    "smooth",
    "evaluate_series",
    "evaluate_direct",
    "region_label",
    "weyl_average",
    "character_decomposition",
    "default_parameters",
    "make_params",
    "coefficient_bound",
    "tail_bound",
    "smoothed_delta",
    "delta_gap",
]


@dataclass(frozen=True)
class FourierSeries:
    """Real coefficients ``c_m`` for integer vectors ``m`` with ``|m|_inf <= M``.

    ``coeffs`` is a dense array of shape ``(2M+1,) * q``; entry ``m + M``
    holds ``c_m``.
    """

    q: int
    M: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (2 * self.M + 1,) * self.q:
            raise InvalidInputError(f"coefficient array must have shape {(2 * self.M + 1,) * self.q}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, q: int, M: int) -> "FourierSeries":
        return cls(q, M, np.zeros((2 * M + 1,) * q))

    @classmethod
    def from_dict(cls, q: int, coeffs: dict) -> "FourierSeries":
        """Build from ``{m: c_m}`` where ``m`` is an int (q=1) or a tuple."""
        keys = [(k,) if np.isscalar(k) else tuple(k) for k in coeffs]
        M = max((max(abs(x) for x in k) for k in keys), default=0)
        arr = np.zeros((2 * M + 1,) * q)
        for k, v in zip(keys, coeffs.values()):
            arr[tuple(x + M for x in k)] = v
        return cls(q, M, arr)

    def coefficient(self, m) -> float:
        m = (m,) if np.isscalar(m) else tuple(m)
        if max(abs(x) for x in m) > self.M:
            return 0.0
        return float(self.coeffs[tuple(x + self.M for x in m)])

    @property
    def c0(self) -> float:
        return self.coefficient((0,) * self.q)

    def frequencies(self) -> np.ndarray:
        """All frequency vectors, shape ``((2M+1)^q, q)``, in array order."""
        axes = [np.arange(-self.M, self.M + 1)] * self.q
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.q)

    def items(self):
        for m, c in zip(self.frequencies(), self.coeffs.ravel()):
            if c != 0.0:
                yield tuple(int(x) for x in m), float(c)

    def truncate(self, M: int) -> "FourierSeries":
        if M >= self.M:
            pad = [(M - self.M, M - self.M)] * self.q
            return FourierSeries(self.q, M, np.pad(self.coeffs, pad))
        sl = tuple(slice(self.M - M, self.M + M + 1) for _ in range(self.q))
        return FourierSeries(self.q, M, self.coeffs[sl])

    def to_csv(self, fp) -> None:
        """Write nonzero coefficients as ``m1[,m2],coefficient`` rows."""
        w = csv.writer(fp)
        w.writerow([f"m{j + 1}" for j in range(self.q)] + ["coefficient"])
        for m, c in self.items():
            w.writerow(list(m) + [f"{c:.12g}"])


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing schedule; ``delta`` satisfies ``r sqrt(q) K delta = Delta``."""

    Delta: float
    r: int
    delta: float
    K: float
    M: int


def make_params(desc: SatoTateGroupDescriptor, Delta: float, r: int, M: int) -> SmoothingParams:
    """Parameters for a given ``Delta``, ``r`` and truncation ``M``."""
    if Delta <= 0 or r < 0 or M < 0:
        raise InvalidInputError("need Delta > 0, r >= 0, M >= 0")
    K = gradient_bound(desc)
    delta = Delta / (r * math.sqrt(desc.q) * K) if r else 0.0
    return SmoothingParams(Delta, r, delta, K, M)


def default_parameters(desc: SatoTateGroupDescriptor, x: float, N: int, I: IntervalQuery) -> SmoothingParams:
    """The schedule ``Delta = x^-eps log(x)^(4eps) log(Nx)^(2eps)``.

    Raises
    ------
    BelowThresholdError
        If ``2 Delta`` exceeds the interval length.
    """
    if x < 2:
        raise InvalidInputError("x must be at least 2")
    eps = float(epsilon(desc))
    Delta = x**-eps * math.log(x) ** (4 * eps) * math.log(N * x) ** (2 * eps)
    q, phi = desc.q, desc.phi
    if phi > 0:
        r, M = q + phi - 1, math.ceil(Delta ** (-(q + phi) / phi))
    else:
        r, M = q, math.ceil(Delta ** (-q - 1))
    if 2 * Delta > I.length:
        raise BelowThresholdError(
            f"Delta={Delta:.6g} violates 2*Delta <= |I|={I.length:.6g}; x must be larger"
        )
    return make_params(desc, Delta, r, M)


# ---------------------------------------------------------------------------
# coefficients of the indicator
# ---------------------------------------------------------------------------

def _segment_transform(segs, m):
    """``sum over segments of int_u^v exp(-2 pi i m t) dt`` for an array ``m``."""
    m = np.asarray(m, dtype=float)
    out = np.zeros(m.shape, dtype=complex)
    nz = m != 0
    for u, v in segs:
        out[~nz] += v - u
        mm = m[nz]
        out[nz] += (np.exp(-2j * np.pi * mm * u) - np.exp(-2j * np.pi * mm * v)) / (2j * np.pi * mm)
    return out


def indicator_fourier(desc: SatoTateGroupDescriptor, I: IntervalQuery, M: int) -> FourierSeries:
    """Fourier coefficients of the indicator of ``T^{-1}(I)`` in ``[0,1]^q``.

    One-dimensional coefficients are exact integrals over the preimage
    segments. In two dimensions the inner integral is exact and the outer
    one uses Gauss-Legendre panels between slice breakpoints, with a cosine
    substitution to absorb the square-root behaviour at each breakpoint.
    """
    I.check(desc.g)
    if M < 0:
        raise InvalidInputError("M must be nonnegative")
    ms = np.arange(-M, M + 1)
    if desc.q == 1:
        c = _segment_transform(preimage_segments(desc, I), ms)
        return FourierSeries(1, M, c.real)
    if desc.q != 2:
        raise UnsupportedError(f"q={desc.q} is not supported")
    breaks = slice_breakpoints(desc, I)
    C = np.zeros((2 * M + 1, 2 * M + 1), dtype=complex)
    for a, b in zip(breaks[:-1], breaks[1:]):
        L = b - a
        if L < 1e-14:
            continue
        n = 48 + int(8 * M * L)
        s, w = np.polynomial.legendre.leggauss(n)
        s = 0.5 * (s + 1)
        x = a + L * 0.5 * (1 - np.cos(np.pi * s))
        wx = 0.5 * w * L * 0.5 * np.pi * np.sin(np.pi * s)
        inner = np.array([_segment_transform(preimage_segments(desc, I, t), ms) for t in x])
        outer = np.exp(-2j * np.pi * np.outer(x, ms)) * wx[:, None]
        C += outer.T @ inner
    if np.max(np.abs(C.imag)) > 1e-8:
        raise NumericFailureError("indicator coefficients failed the reality check")
    return FourierSeries(2, M, C.real)


def box_multiplier(m, delta: float):
    """``sin(2 pi m delta) / (2 pi m delta)``, equal to 1 at ``m = 0``."""
    if not 0 <= delta < 1:
        raise InvalidInputError("delta must lie in [0, 1)")
    out = np.sinc(2 * np.asarray(m, dtype=float) * delta)
    return float(out) if out.ndim == 0 else out


def smooth(series: FourierSeries, params: SmoothingParams) -> FourierSeries:
    """Multiply ``c_m`` by ``prod_j nu(m_j, delta)^r`` and truncate to ``params.M``."""
    nu = box_multiplier(np.arange(-series.M, series.M + 1), params.delta) ** params.r
    factor = nu
    for _ in range(series.q - 1):
        factor = np.multiply.outer(factor, nu)
    out = FourierSeries(series.q, series.M, series.coeffs * factor)
    return out.truncate(params.M) if params.M < series.M else out


def evaluate_series(series: FourierSeries, theta):
    """``sum_m c_m exp(2 pi i m.theta)`` at angles of shape ``(..., q)``."""
    th = np.asarray(theta, dtype=float)
    if th.ndim == 0:
        th = th.reshape(1)
    if th.shape[-1] != series.q:
        raise InvalidInputError(f"theta must have trailing dimension {series.q}")
    flat = th.reshape(-1, series.q)
    ms = np.arange(-series.M, series.M + 1)
    E = [np.exp(2j * np.pi * np.outer(flat[:, j], ms)) for j in range(series.q)]
    if series.q == 1:
        val = E[0] @ series.coeffs
    else:
        val = np.einsum("na,ab,nb->n", E[0], series.coeffs, E[1])
    scale = max(1.0, float(np.abs(series.coeffs).sum()))
    if np.max(np.abs(val.imag), initial=0.0) > 1e-10 * scale:
        raise NumericFailureError("series value is not real")
    out = val.real.reshape(th.shape[:-1])
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# direct evaluation (test oracle)
# ---------------------------------------------------------------------------

def _box_sum_cdf(s, r, delta):
    """CDF of a sum of ``r`` independent uniforms on ``[-delta, delta]``."""
    if r == 0 or delta == 0:
        return np.where(np.asarray(s) >= 0, 1.0, 0.0)
    x = np.clip((np.asarray(s, dtype=float) / delta + r) / 2, 0, r)
    k = np.arange(r + 1)
    terms = (-1.0) ** k * special.comb(r, k) * np.clip(x[..., None] - k, 0, None) ** r
    return terms.sum(axis=-1) / math.factorial(r)


def _box_sum_pdf(s, r, delta):
    x = (np.asarray(s, dtype=float) / delta + r) / 2
    if r == 1:
        return np.where((x >= 0) & (x <= 1), 0.5 / delta, 0.0)
    k = np.arange(r + 1)
    terms = (-1.0) ** k * special.comb(r, k) * np.clip(x[..., None] - k, 0, None) ** (r - 1)
    return np.where((x >= 0) & (x <= r), terms.sum(axis=-1) / math.factorial(r - 1) / (2 * delta), 0.0)


def _line_probability(segs, t, r, delta):
    """``P(t + S mod 1 in segments)`` for the box-sum ``S``."""
    total = 0.0
    for u, v in segs:
        for k in (-1, 0, 1):
            total += _box_sum_cdf(v + k - t, r, delta) - _box_sum_cdf(u + k - t, r, delta)
    return float(total)


def evaluate_direct(desc: SatoTateGroupDescriptor, I: IntervalQuery, params: SmoothingParams, theta, tol=1e-9) -> float:
    """Evaluate the ``r``-fold box average of the indicator at one point.

    The average of ``r`` boxes equals the expectation of the indicator at
    ``theta + S``, where each coordinate of ``S`` is an independent sum of
    ``r`` uniforms. Along the last coordinate this probability is exact; in
    two dimensions the first coordinate is integrated by quadrature.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    r, d = params.r, params.delta
    if desc.q == 1:
        return _line_probability(preimage_segments(desc, I), th[0], r, d)
    if desc.q != 2:
        raise UnsupportedError(f"q={desc.q} is not supported")

    def slice_prob(t1):
        return _line_probability(preimage_segments(desc, I, t1 % 1.0), th[1], r, d)

    if r == 0 or d == 0:
        return slice_prob(th[0])
    lo, hi = -r * d, r * d
    knots = list(np.linspace(lo, hi, r + 1)[1:-1])
    val, err = integrate.quad(
        lambda s: _box_sum_pdf(s, r, d) * slice_prob(th[0] + s),
        lo, hi, points=knots or None, epsabs=tol, epsrel=0.0, limit=400,
    )
    if err > 10 * tol:
        raise NumericFailureError(f"direct evaluation error {err:.3g} exceeds tol")
    return float(val)


def region_label(desc: SatoTateGroupDescriptor, I: IntervalQuery, Delta: float, theta) -> str:
    """``"R1"`` if ``T(theta)`` is Delta-inside ``I``, ``"R0"`` if Delta-outside, else ``"boundary"``."""
    t = trace_value(desc, theta)
    if I.lower + Delta <= t <= I.upper - Delta:
        return "R1"
    if t < I.lower - Delta or t > I.upper + Delta:
        return "R0"
    return "boundary"


# ---------------------------------------------------------------------------
# coefficient bounds
# ---------------------------------------------------------------------------

def coefficient_bound(desc: SatoTateGroupDescriptor, params: SmoothingParams, c0: float, m) -> float:
    """Best of the bounds ``min(c0, C/(pi max|m_j|) prod (rK sqrt(q)/(2 pi |m_j| Delta))^rho)``."""
    m = np.atleast_1d(np.asarray(m))
    top = int(np.max(np.abs(m)))
    if top == 0:
        return abs(c0)
    C = crossing_bound(desc)
    B = params.r * params.K * math.sqrt(desc.q) / (2 * math.pi * params.Delta) if params.r else 0.0
    prod = 1.0
    for mj in m:
        if mj:
            prod *= min(1.0, B / abs(mj)) ** params.r if params.r else 1.0
    return min(abs(c0), C / (math.pi * top) * prod)


def tail_bound(desc: SatoTateGroupDescriptor, params: SmoothingParams, shells: int = 100000) -> float:
    """Upper bound on ``sum_{|m|_inf > M} |c_m|`` from the coefficient bound."""
    C, M, r, q = crossing_bound(desc), params.M, params.r, desc.q
    if r < 1:
        return math.inf
    B = r * params.K * math.sqrt(q) / (2 * math.pi * params.Delta)
    k = np.arange(M + 1, M + 1 + shells, dtype=float)
    line = np.minimum(1.0, B / k) ** r
    if q == 1:
        body = float(np.sum(2 * C / (math.pi * k) * line))
        a, b = 2 * C * B**r / math.pi, 0.0
    elif q == 2:
        j = np.arange(1, M + shells + 1, dtype=float)
        cum = 1 + 2 * np.cumsum(np.minimum(1.0, B / j) ** r)
        other = cum[M:M + shells]
        body = float(np.sum(4 * C / (math.pi * k) * line * other))
        a = 4 * C * B**r / math.pi * (1 + 2 * B * (1 + math.log(B)) if B > 1 else 3)
        b = 8 * C * B ** (r + 1) / math.pi
    else:
        raise UnsupportedError(f"q={q} is not supported")
    K_end = M + shells
    rest = (a + b * math.log(K_end)) / (r * K_end**r) + b / (r * r * K_end**r)
    return body + rest


# ---------------------------------------------------------------------------
# Weyl averaging and character decomposition
# ---------------------------------------------------------------------------

def _full_actions(desc: SatoTateGroupDescriptor):
    """Weyl elements on the full torus (identity on the abelian block)."""
    rs = desc.root_system
    h, q = rs.rank_h, desc.q
    mats = []
    for w in rs.torus_action() if h else [()]:
        full = np.eye(q, dtype=int)
        if h:
            full[:h, :h] = np.array(w, dtype=int)
        mats.append(full)
    return mats


def weyl_average(desc: SatoTateGroupDescriptor, series: FourierSeries) -> FourierSeries:
    """``c_m <- (1/#W) sum_w c_{w(m)}``."""
    mats = _full_actions(desc)
    freqs = series.frequencies()
    acc = np.zeros(freqs.shape[0])
    for w in mats:
        idx = freqs @ w.T + series.M
        acc += series.coeffs[tuple(idx.T)]
    return FourierSeries(series.q, series.M, acc.reshape(series.coeffs.shape) / len(mats))


@dataclass(frozen=True)
class Decomposition:
    """``F = delta + sum_lam p_lam * chi_lam`` with ``chi`` irreducible characters."""

    desc: SatoTateGroupDescriptor = field(repr=False)
    delta: float
    coeffs: dict
    virtual_dimension: float

    def evaluate(self, theta):
        th = np.asarray(theta, dtype=float)
        total = np.full(th.shape[:-1], self.delta, dtype=complex)
        for lam, p in self.coeffs.items():
            total = total + p * character(self.desc.root_system, lam, th)
        return np.real(total) if total.ndim else float(np.real(total))


def character_decomposition(desc: SatoTateGroupDescriptor, F: FourierSeries, M: int | None = None) -> Decomposition:
    """Rewrite a Weyl-invariant series in irreducible characters.

    Each Weyl orbit sum is expanded through a row of the inverse weight
    multiplicity matrix. ``virtual_dimension`` is ``sum |p_lam| dim(lam)``
    over all terms, trivial one included.

    Raises
    ------
    InvalidInputError
        If ``F`` is not Weyl-invariant.
    """
    if M is not None:
        F = F.truncate(M)
    avg = weyl_average(desc, F)
    scale = max(1.0, float(np.abs(F.coeffs).max(initial=0.0)))
    if np.max(np.abs(avg.coeffs - F.coeffs), initial=0.0) > 1e-12 * scale:
        raise InvalidInputError("series is not Weyl-invariant")
    rs = desc.root_system
    h = rs.rank_h
    Pinv = _inverse(rs.torus_basis) if h else ()
    p = {}
    for m, c in F.items():
        wt = tuple(_matvec(Pinv, m[:h])) if h else ()
        if any(x.denominator != 1 for x in wt):
            raise InvalidInputError(f"frequency {m} is not a weight of the group")
        lam = Weight(tuple(int(x) for x in wt), m[h:])
        if not lam.is_dominant():
            continue
        for mu, d in gupta_inverse_row(rs, lam).items():
            p[mu] = p.get(mu, 0.0) + c * float(d)
    zero = Weight((0,) * h, (0,) * rs.abelian_rank_a)
    delta = p.pop(zero, 0.0)
    p = {k: v for k, v in p.items() if v != 0.0}
    vdim = abs(delta) + sum(abs(v) * weyl_dimension(rs, k) for k, v in p.items())
    return Decomposition(desc, delta, p, vdim)


def smoothed_delta(desc: SatoTateGroupDescriptor, I: IntervalQuery, params: SmoothingParams) -> float:
    """Trivial-character component of the Weyl-averaged smoothed indicator."""
    series = smooth(indicator_fourier(desc, I, params.M), params)
    return character_decomposition(desc, weyl_average(desc, series)).delta


def delta_gap(desc: SatoTateGroupDescriptor, I: IntervalQuery, params: SmoothingParams) -> float:
    """``|delta - mu(I)|``."""
    return abs(smoothed_delta(desc, I, params) - measure_interval(desc, I))
