"""Farey sequences, the mediant arc dissection of R/Z and its dyadic (Q, L) refinement.

All arithmetic on arcs is exact.  Fractions are handled as ``(a, q)`` integer pairs in
the hot paths and exposed as :class:`fractions.Fraction` on the public types.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .space_catalog import DomainError, as_fraction


@dataclass(frozen=True, order=True)
class FareyFraction:
    a: int
    q: int

    def __post_init__(self):
        if self.q < 1 or not 0 <= self.a <= self.q or math.gcd(self.a, self.q) != 1:
            raise DomainError(f"{self.a}/{self.q} is not a reduced fraction in [0, 1]")

    @property
    def value(self) -> Fraction:
        return Fraction(self.a, self.q)

    def __str__(self) -> str:
        return f"{self.a}/{self.q}"


@dataclass(frozen=True)
class FareyArc:
    """Arc [left, right) around a/q; ``left`` may be negative for the arc around 0."""

    a: int
    q: int
    a_left: int  # left Farey neighbor a_l/q_l (circular: -1/n for 0/1)
    q_left: int
    a_right: int
    q_right: int

    @property
    def center(self) -> FareyFraction:
        return FareyFraction(self.a, self.q)

    @property
    def left(self) -> Fraction:
        return Fraction(self.a_left + self.a, self.q_left + self.q)

    @property
    def right(self) -> Fraction:
        return Fraction(self.a + self.a_right, self.q + self.q_right)

    @property
    def half_left(self) -> Fraction:
        return Fraction(self.a, self.q) - self.left

    @property
    def half_right(self) -> Fraction:
        return self.right - Fraction(self.a, self.q)


@dataclass(frozen=True)
class ArcCell:
    """Dyadic cell M_{a,q,L}; ``side`` is -1 / +1 for the outer pieces, 0 for the innermost."""

    parent: FareyArc
    Q: int
    L: int
    lo: Fraction
    hi: Fraction
    side: int

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo


@dataclass(frozen=True)
class MajorArcTag:
    a: int
    q: int
    Q: int
    L: int
    dist: Fraction
    N: Fraction

    @property
    def is_major(self) -> bool:
        """Inside the range q < N of the dispersive major-arc bound."""
        return self.q < self.N and self.dist < Fraction(1) / (self.q * self.N)


def dyadic_floor(x) -> int:
    """Largest power of two <= x (x >= 1)."""
    x = as_fraction(x)
    if x < 1:
        raise DomainError(f"no dyadic integer <= {x}")
    return 1 << (math.floor(x).bit_length() - 1)


def totient(k: int) -> int:
    result, m, p = k, k, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


# ---------------------------------------------------------------------------
# sequences and arcs


def farey_pairs(n: int) -> Iterator[tuple[int, int]]:
    """Farey sequence of order n from 0/1 to 1/1 by the next-term recurrence."""
    if n < 1:
        raise DomainError("Farey order must be >= 1")
    a, b, c, d = 0, 1, 1, n
    yield a, b
    while c <= n:
        k = (n + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        yield a, b


def farey_sequence(n: int) -> list[FareyFraction]:
    return [FareyFraction(a, q) for a, q in farey_pairs(n)]


def _neighbors(a: int, q: int, n: int) -> tuple[int, int, int, int]:
    """Left and right Farey neighbors of a/q in F_n (circularly around 0)."""
    inv = pow(a, -1, q) if q > 1 else 0
    # a*q_l = 1 (mod q), a*q_r = -1 (mod q), largest such denominators <= n
    q_l = n - ((n - inv) % q)
    q_r = n - ((n + inv) % q)
    return (a * q_l - 1) // q, q_l, (a * q_r + 1) // q, q_r


def farey_arc_of(a: int, q: int, n: int) -> FareyArc:
    if q > n:
        raise DomainError(f"{a}/{q} is not in the Farey sequence of order {n}")
    a_l, q_l, a_r, q_r = _neighbors(a, q, n)
    return FareyArc(a, q, a_l, q_l, a_r, q_r)


def farey_arcs(n: int) -> list[FareyArc]:
    """Mediant arcs around every a/q in F_n with 0 <= a/q < 1; together they tile R/Z."""
    seq = list(farey_pairs(n))
    arcs = []
    for i in range(len(seq) - 1):
        a, q = seq[i]
        a_l, q_l = seq[i - 1] if i > 0 else (seq[-2][0] - seq[-2][1], seq[-2][1])
        a_r, q_r = seq[i + 1]
        arcs.append(FareyArc(a, q, a_l, q_l, a_r, q_r))
    return arcs


def farey_bracket(t: Fraction, n: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Consecutive a/q <= t < a'/q' in F_n (0 <= t < 1), by batched Stern-Brocot descent."""
    la, lq, ha, hq = 0, 1, 1, 1
    while lq + hq <= n:
        ma, mq = la + ha, lq + hq
        if t < Fraction(ma, mq):
            # hi <- hi + k*lo, largest k keeping the fraction > t
            den = t * lq - la
            kmax = (n - hq) // lq
            if den > 0:
                x = (ha - t * hq) / den
                kmax = min(kmax, math.ceil(x) - 1)
            ha, hq = ha + kmax * la, hq + kmax * lq
        else:
            den = ha - t * hq
            k = min((n - lq) // hq, math.floor((t * lq - la) / den))
            la, lq = la + k * ha, lq + k * hq
    return (la, lq), (ha, hq)


def locate_arc(t, n: int) -> FareyArc:
    t = as_fraction(t) % 1
    (la, lq), (ha, hq) = farey_bracket(t, n)
    if t < Fraction(la + ha, lq + hq):
        return farey_arc_of(la, lq, n)
    if (ha, hq) == (1, 1):
        return farey_arc_of(0, 1, n)
    return farey_arc_of(ha, hq, n)


def circle_dist(t: Fraction, a: int, q: int) -> Fraction:
    d = (t - Fraction(a, q)) % 1
    return min(d, 1 - d)


# ---------------------------------------------------------------------------
# dyadic refinement


def arc_refine(arc: FareyArc, N) -> list[ArcCell]:
    """Split an arc of F_{floor N} into dyadic cells.

    Cell L < L_max holds 1/(2NL) < dist <= 1/(NL); the innermost cell L_max holds
    dist <= 1/(N L_max) (a 2/N^2 neighbourhood).  Cells are clipped to the arc, so
    they tile it exactly; empty cells are dropped.
    """
    N = as_fraction(N)
    n = math.floor(N)
    if arc.q > n:
        raise DomainError(f"arc {arc.a}/{arc.q} is not of Farey order {n}")
    Q = dyadic_floor(arc.q)
    lmax = dyadic_floor(N)
    c = Fraction(arc.a, arc.q)
    hl, hr = arc.half_left, arc.half_right
    cells = []
    inner = Fraction(1) / (N * lmax)
    cells.append(ArcCell(arc, Q, lmax, c - min(inner, hl), c + min(inner, hr), 0))
    L = lmax // 2
    while L >= Q:
        outer, inner_edge = Fraction(1) / (N * L), Fraction(1) / (2 * N * L)
        for side, half in ((-1, hl), (1, hr)):
            near, far = min(inner_edge, half), min(outer, half)
            if far > near:
                lo, hi = (c - far, c - near) if side < 0 else (c + near, c + far)
                cells.append(ArcCell(arc, Q, L, lo, hi, side))
        L //= 2
    # cells must reach the arc ends: dist < 1/(qN) <= 1/(QN) holds for every point
    return sorted(cells, key=lambda cell: cell.lo)


def major_arc_locate(t_frac, N) -> MajorArcTag:
    """Farey arc of order floor(N) containing t_frac, with its dyadic level and exact distance."""
    N = as_fraction(N)
    if N < 2:
        raise DomainError("major_arc_locate needs N >= 2")
    t = as_fraction(t_frac) % 1
    arc = locate_arc(t, math.floor(N))
    cell = containing_cell(arc_refine(arc, N), t)
    return MajorArcTag(arc.a, arc.q, cell.Q, cell.L, circle_dist(t, arc.a, arc.q), N)


def containing_cell(cells: list[ArcCell], t: Fraction) -> ArcCell:
    for c in cells:
        if c.lo <= t < c.hi or c.lo <= t - 1 < c.hi:
            return c
    raise DomainError(f"{t} is not covered by the given cells")


def cells_QL(N, Q: int, L: int) -> list[ArcCell]:
    """All cells M_{a,q,L} with Q <= q < 2Q (q <= floor N): the set M_{Q,L}."""
    N = as_fraction(N)
    n = math.floor(N)
    out = []
    for q in range(Q, min(2 * Q, n + 1)):
        for a in range(q):
            if math.gcd(a, q) != 1:
                continue
            out.extend(c for c in arc_refine(farey_arc_of(a, q, n), N) if c.L == L)
    return out


def dyadic_pairs(N) -> list[tuple[int, int]]:
    lmax = dyadic_floor(N)
    qs = [1 << k for k in range(lmax.bit_length()) if (1 << k) <= math.floor(as_fraction(N))]
    return [(Q, L) for Q in qs for L in qs if L >= Q]


# ---------------------------------------------------------------------------
# Fourier coefficients of the indicator of M_{Q,L}


def _exp_table(num: np.ndarray, den: np.ndarray, ks: np.ndarray) -> np.ndarray:
    # exp(-2 pi i k num/den) with the phase reduced exactly mod 1 in integers
    ph = (np.multiply.outer(num, ks) % den[:, None]).astype(np.float64) / den[:, None]
    return np.exp(-2j * np.pi * ph)


def indicator_coefficients(cells: list[ArcCell], kmax: int, block: int = 512) -> np.ndarray:
    """Closed-form Fourier coefficients c_k, k = 0..kmax, of the union of ``cells`` on R/Z."""
    if not cells:
        return np.zeros(kmax + 1, dtype=complex)
    ends = [(c.hi, 1.0) for c in cells] + [(c.lo, -1.0) for c in cells]
    num = np.array([e.numerator for e, _ in ends], dtype=np.int64)
    den = np.array([e.denominator for e, _ in ends], dtype=np.int64)
    sign = np.array([s for _, s in ends])
    num %= den
    nblocks = kmax // block + 1
    inner = _exp_table(num, den, np.arange(block, dtype=np.int64)) * sign[:, None]
    outer = _exp_table(num, den, block * np.arange(nblocks, dtype=np.int64))
    sums = (inner.T @ outer).T.reshape(-1)[: kmax + 1]  # index k = k0 + block*k1
    ks = np.arange(kmax + 1)
    coeffs = np.empty(kmax + 1, dtype=complex)
    coeffs[1:] = sums[1:] / (-2j * np.pi * ks[1:])
    coeffs[0] = float(sum((c.length for c in cells), Fraction(0)))
    return coeffs


@dataclass(frozen=True)
class SpectrumResult:
    sup_value: float
    argmax: int
    l1_mass: Fraction
    coeffs: np.ndarray


def indicator_spectrum(N, Q: int, L: int, period=1, kmax: int | None = None) -> SpectrumResult:
    N = as_fraction(N)
    if not 1 <= Q <= L <= N:
        raise DomainError("need 1 <= Q <= L <= N")
    cells = cells_QL(N, Q, L)
    kmax = 64 * math.floor(N) ** 2 if kmax is None else kmax
    coeffs = indicator_coefficients(cells, kmax)
    mod = np.abs(coeffs)
    k = int(np.argmax(mod))
    mass = as_fraction(period) * sum((c.length for c in cells), Fraction(0))
    return SpectrumResult(float(mod[k]), k, mass, coeffs)


def indicator_fourier_sup(N, Q: int, L: int, period=1) -> tuple[float, Fraction]:
    """(sup_{|k| <= 64 N^2} |coefficient|, exact L1 mass) of the indicator of M_{Q,L}.

    The circle carries the variable t/(2 pi) in [0, period); coefficient k = 0 equals
    l1_mass / period.  Negative k are conjugates of positive k (real indicator).
    """
    res = indicator_spectrum(N, Q, L, period)
    return res.sup_value, res.l1_mass


def partition_count(t, N) -> int:
    """Number of (Q, L) sets M_{Q,L} containing t, by direct membership over all cells."""
    t = as_fraction(t) % 1
    hits = 0
    for Q, L in dyadic_pairs(N):
        for c in cells_QL(N, Q, L):
            # cells around 0 start below 0
            if c.lo <= t < c.hi or c.lo <= t - 1 < c.hi:
                hits += 1
    return hits
