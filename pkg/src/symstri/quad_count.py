"""Representation numbers of integral quadratic forms and related lattice counts.

A form is stored as an integer symmetric matrix ``M`` with Q(x) = x^T M x.  Cross
terms of Q are therefore even; a form with odd cross terms is represented by 2Q.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .farey import MajorArcTag, major_arc_locate
from .kernel_lab import BUMP, BumpSpec
from .space_catalog import (
    DomainError,
    SpaceDescriptor,
    _det,
    as_fraction,
    lattice_points,
    spec_norms_array,
    weights_array_in_band,
)
from .tables import ScanTable


class FitError(ValueError):
    """Raised when a regression has nothing to fit."""


@dataclass(frozen=True)
class QuadForm:
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        m = self.matrix
        r = len(m)
        if r == 0 or any(len(row) != r for row in m):
            raise DomainError("form matrix must be square and non-empty")
        if any(m[i][j] != m[j][i] for i in range(r) for j in range(r)):
            raise DomainError("form matrix must be symmetric")
        for k in range(1, r + 1):
            if _det([[Fraction(x) for x in row[:k]] for row in m[:k]]) <= 0:
                raise DomainError("form is not positive definite")

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        return np.einsum("...i,ij,...j->...", x, self.array, x)

    def blocks(self) -> list[list[int]]:
        """Index sets of the block-diagonal decomposition (connected components)."""
        r, m = self.dim, self.matrix
        seen, out = set(), []
        for start in range(r):
            if start in seen:
                continue
            comp, stack = [], [start]
            seen.add(start)
            while stack:
                i = stack.pop()
                comp.append(i)
                for j in range(r):
                    if m[i][j] != 0 and j not in seen:
                        seen.add(j)
                        stack.append(j)
            out.append(sorted(comp))
        return out

    def sub(self, idx: Sequence[int]) -> "QuadForm":
        return QuadForm(tuple(tuple(self.matrix[i][j] for j in idx) for i in idx))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "matrix": [list(r) for r in self.matrix]}


def quad_form(matrix) -> QuadForm:
    rows = []
    for row in matrix:
        vals = []
        for x in row:
            f = as_fraction(x)
            if f.denominator != 1:
                raise DomainError("form entries must be integers (double a half-integral form)")
            vals.append(int(f))
        rows.append(tuple(vals))
    return QuadForm(tuple(rows))


def identity_form(r: int) -> QuadForm:
    return QuadForm(tuple(tuple(int(i == j) for j in range(r)) for i in range(r)))


def form_from_dict(doc: dict) -> QuadForm:
    form = quad_form(doc["matrix"])
    if "dim" in doc and int(doc["dim"]) != form.dim:
        raise DomainError(f"dim {doc['dim']} does not match the {form.dim}x{form.dim} matrix")
    return form


def coordinate_bounds(form: QuadForm, n_max: int) -> np.ndarray:
    """|x_i| <= sqrt(n_max * (M^-1)_ii) on the ellipsoid Q(x) <= n_max."""
    inv = np.linalg.inv(form.array.astype(float))
    return np.floor(np.sqrt(n_max * np.diag(inv)) + 1e-9).astype(np.int64)


def _block_counts(form: QuadForm, n_max: int, threads: int = 1) -> np.ndarray:
    bounds = coordinate_bounds(form, n_max)
    rest = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds[1:]]
    tail = (
        np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, form.dim - 1)
        if rest
        else np.zeros((1, 0), dtype=np.int64)
    )
    m = form.array
    # Q(x0, y) = m00 x0^2 + 2 x0 (m[0,1:] . y) + Q'(y)
    qtail = np.einsum("ni,ij,nj->n", tail, m[1:, 1:], tail)
    cross = 2 * tail @ m[0, 1:]

    def chunk(x0: int) -> np.ndarray:
        q = m[0, 0] * x0 * x0 + x0 * cross + qtail
        return np.bincount(q[q <= n_max], minlength=n_max + 1)

    first = range(-int(bounds[0]), int(bounds[0]) + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(chunk, first))
    else:
        parts = [chunk(x0) for x0 in first]
    return np.sum(parts, axis=0)  # exact integer sum, order independent


def _truncated_convolve(a: np.ndarray, b: np.ndarray, n_max: int) -> np.ndarray:
    """(a * b)[0..n_max] exactly; shell counts are sparse, so shift-and-add over nonzeros."""
    if np.count_nonzero(a) > np.count_nonzero(b):
        a, b = b, a
    out = np.zeros(n_max + 1, dtype=np.int64)
    for i in np.flatnonzero(a):
        out[i:] += a[i] * b[: n_max + 1 - i]
    return out


def rep_counts(form: QuadForm, n_max: int, threads: int = 1) -> np.ndarray:
    """r_Q(n) for n = 0..n_max, by enumeration per diagonal block and convolution."""
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    total = None
    for idx in form.blocks():
        c = _block_counts(form.sub(idx), n_max, threads)
        total = c if total is None else _truncated_convolve(total, c, n_max)
    return total.astype(np.int64)


def rep_count(form: QuadForm, n: int) -> int:
    """#{x in Z^r : Q(x) = n}."""
    if n < 0:
        raise DomainError("n must be >= 0")
    return int(rep_counts(form, int(n))[int(n)])


def ball_count(form: QuadForm, X: int) -> int:
    """#{x : Q(x) <= X} by direct enumeration of the bounding box (no block splitting)."""
    bounds = coordinate_bounds(form, X)
    rest = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds[1:]]
    tail = (
        np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, form.dim - 1)
        if rest
        else np.zeros((1, 0), dtype=np.int64)
    )
    total = 0
    for x0 in range(-int(bounds[0]), int(bounds[0]) + 1):
        x = np.column_stack([np.full(len(tail), x0, dtype=np.int64), tail])
        total += int(np.count_nonzero(form(x) <= X))
    return total


def theory_exponent(r: int) -> float:
    """Growth exponent of r_Q(n): r/2 - 1 (up to n^eps when r <= 4), and 0 for r <= 2."""
    return max(r / 2 - 1, 0.0)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    theory_exponent: float
    checkpoints: tuple[int, ...]
    running_max: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "residual": self.residual,
            "theory_exponent": self.theory_exponent,
            "checkpoints": list(self.checkpoints),
            "running_max": list(self.running_max),
        }


def rep_exponent_fit(form: QuadForm, n_max: int, threads: int = 1) -> ExponentFit:
    """Least-squares slope of log(max_{m <= n} r_Q(m)) against log n at n = 2^k <= n_max."""
    if n_max < 64:
        raise DomainError("n_max must be >= 64")
    counts = rep_counts(form, n_max, threads)
    running = np.maximum.accumulate(counts[1:])  # index n - 1
    checkpoints = [1 << k for k in range(1, n_max.bit_length()) if (1 << k) <= n_max]
    vals = [int(running[n - 1]) for n in checkpoints]
    pts = [(n, v) for n, v in zip(checkpoints, vals) if v > 0]
    if len(pts) < 2:
        raise FitError("rep counts vanish at the checkpoints; nothing to fit")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return ExponentFit(
        float(slope), float(intercept), residual, theory_exponent(form.dim), tuple(checkpoints), tuple(vals)
    )


# ---------------------------------------------------------------------------
# circle-method diagnostic


@dataclass(frozen=True)
class ThetaCheck:
    value: complex
    bound: float
    tag: MajorArcTag

    @property
    def ratio(self) -> float:
        return abs(self.value) / self.bound


def theta_sum(form: QuadForm, n: int, t_frac, bump: BumpSpec = BUMP, counts: np.ndarray | None = None) -> complex:
    """s_n(t) = sum_m phi(m/n) r_Q(m) e^{i t (m - n)} with t = 2 pi t_frac, by shells."""
    if counts is None:
        counts = rep_counts(form, 2 * n)
    m = np.arange(len(counts))
    w = bump(m / n) * counts
    keep = w != 0
    frac = as_fraction(t_frac)
    # e^{2 pi i frac (m - n)}, with the phase reduced exactly mod 1
    ph = ((m[keep] - n) * frac.numerator) % frac.denominator / frac.denominator
    return complex(np.sum(w[keep] * np.exp(2j * np.pi * ph)))


def theta_major_arc_check(form: QuadForm, n: int, t_frac, bump: BumpSpec = BUMP, counts=None) -> ThetaCheck:
    """|s_n(t)| against (N / (sqrt(q) (1 + N ||t/2pi - a/q||^(1/2))))^r, N = floor(sqrt n)."""
    if n < 4:
        raise DomainError("theta check needs n >= 4")
    N = math.isqrt(n)
    tag = major_arc_locate(t_frac, N)
    value = theta_sum(form, n, t_frac, bump, counts)
    bound = (N / (math.sqrt(tag.q) * (1 + N * math.sqrt(float(tag.dist))))) ** form.dim
    return ThetaCheck(value, bound, tag)


def theta_fourier_extract(form: QuadForm, n: int, nodes: int, bump: BumpSpec = BUMP) -> float:
    """Mean of s_n over ``nodes`` equally spaced times; equals r_Q(n) once nodes > 2n."""
    counts = rep_counts(form, 2 * n)
    vals = [theta_sum(form, n, Fraction(j, nodes), bump, counts) for j in range(nodes)]
    return float(np.mean(vals).real)


THETA_COLUMNS = ("t", "a", "q", "L", "abs_value", "bound", "ratio")


def theta_scan(form: QuadForm, n: int, a: int, q: int, samples: int, seed: int) -> ScanTable:
    """Sample times on the major arc around a/q and record |s_n| against the bound."""
    N = math.isqrt(n)
    if not 1 <= q < N:
        raise DomainError(f"need 1 <= q < floor(sqrt n) = {N}")
    rng = np.random.default_rng(seed)
    counts = rep_counts(form, 2 * n)
    scale = 10**9
    table = ScanTable(THETA_COLUMNS)
    for u in rng.uniform(-1.0, 1.0, size=samples):
        off = Fraction(int(round(u * scale)), scale * q * N)  # inside ||t - a/q|| < 1/(qN)
        t = (Fraction(a, q) + off) % 1
        chk = theta_major_arc_check(form, n, t, counts=counts)
        table.rows.append(
            (float(t), chk.tag.a, chk.tag.q, chk.tag.L, abs(chk.value), chk.bound, chk.ratio)
        )
    ratios = table.column("ratio")
    table.summary = {"n": n, "a": a, "q": q, "samples": samples, "seed": seed, "max_ratio": max(ratios)}
    return table


# ---------------------------------------------------------------------------
# pair counts for the bilinear decomposition


def _cube_points(space: SpaceDescriptor, center, side) -> np.ndarray:
    """Admissible weights in the half-open cube prod [c_i - s/2, c_i + s/2)."""
    c = [as_fraction(x) for x in center]
    s = as_fraction(side)
    ranges = []
    for ci, signed in zip(c, space.signed):
        lo = math.ceil(ci - s / 2)
        hi = math.ceil(ci + s / 2) - 1
        if not signed:
            lo = max(lo, 0)
        ranges.append(np.arange(lo, hi + 1, dtype=np.int64))
    if any(len(r) == 0 for r in ranges):
        return np.zeros((0, space.rank), dtype=np.int64)
    return np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, space.rank)


def pair_count_profile(space: SpaceDescriptor, cube_center, cube_side, N2) -> tuple[np.ndarray, np.ndarray, int]:
    """Counts of pairs by total spectral numerator: returns (totals, counts, denom)."""
    lam1 = _cube_points(space, cube_center, cube_side)
    lam2 = weights_array_in_band(space, N2)
    n1, denom = spec_norms_array(space, lam1)
    n2, _ = spec_norms_array(space, lam2)
    if len(n1) == 0 or len(n2) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), denom
    totals, counts = np.unique(np.add.outer(n1, n2).ravel(), return_counts=True)
    return totals, counts, denom


def joint_pair_count(space: SpaceDescriptor, cube_center, cube_side, N2, n) -> int:
    """#{lam1 in cube, lam2 : N2 <= |lam2| < 2 N2, |lam1|^2 + |lam2|^2 = n}, exact."""
    totals, counts, denom = pair_count_profile(space, cube_center, cube_side, N2)
    target = as_fraction(n) * denom
    if target.denominator != 1:
        return 0
    hit = np.flatnonzero(totals == int(target))
    return int(counts[hit[0]]) if len(hit) else 0


PAIR_COLUMNS = ("N2", "cubes", "max_count", "ref_power", "ratio")


def pair_count_scan(space: SpaceDescriptor, N2_list: Sequence[int], N1: int | None = None, eps: float = 0.2) -> ScanTable:
    """Max over side-N2 cubes tiling the N1 band and over n of the pair count, vs N2^(2r-2+eps)."""
    N1 = N1 if N1 is not None else 2 * max(N2_list)
    band = lattice_points(space, 4.0 * N1 * N1)
    table = ScanTable(PAIR_COLUMNS)
    expo = 2 * space.rank - 2 + eps
    for N2 in N2_list:
        s = int(N2)
        cells = np.unique(np.floor_divide(band, s), axis=0)
        best = 0
        for cell in cells:
            center = [Fraction(2 * int(k) * s + s, 2) for k in cell]
            _, counts, _ = pair_count_profile(space, center, s, N2)
            if len(counts):
                best = max(best, int(counts.max()))
        ref = float(N2) ** expo
        table.rows.append((N2, len(cells), best, ref, best / ref))
    ratios = table.column("ratio")
    counts = table.column("max_count")
    slope = float(np.polyfit(np.log(N2_list), np.log(counts), 1)[0]) if len(N2_list) > 1 and min(counts) > 0 else float("nan")
    table.summary = {
        "space": space.name,
        "N1": N1,
        "exponent": expo,
        "count_slope": slope,
        "C": ratios[0],
        "max_ratio_over_C": max(ratios) / ratios[0] if ratios[0] else float("inf"),
    }
    return table
