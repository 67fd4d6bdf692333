"""Mollified Schrodinger kernel as an explicit exponential sum, and major-arc bound scans.

    K_N(t, x) = sum_lam phi(|lam|_rho / N) exp(-i t |lam|^2_rho) d_lam phi_lam(x)

Time enters only through t/T (T = 2 pi * period); with period * |lam|^2_rho an integer
m_lam the phase is exp(-2 pi i (t/T) m_lam), which makes T-periodicity exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.fft as sp_fft

from .farey import MajorArcTag, arc_refine, dyadic_pairs, farey_arc_of, major_arc_locate
from .space_catalog import DomainError, SpaceDescriptor, as_fraction, dims_array, period, spec_norms_array
from .space_catalog import weights_array_in_band
from .spherical_fn import PrecisionError, gegenbauer_table, zonal_profile_nodes
from .tables import ScanTable


# ---------------------------------------------------------------------------
# the dyadic bump


def _g(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(y) -> np.ndarray:
    """chi: 1 on |y| <= 1, 0 on |y| >= 2, smooth in between (even)."""
    y = np.abs(np.asarray(y, dtype=float))
    a, b = _g(2.0 - y), _g(y - 1.0)
    return a / (a + b)


@dataclass(frozen=True)
class BumpSpec:
    """phi(y) = chi(y) - chi(2y), supported in (1/2, 2) with phi(1) = 1.

    ``phi0 = chi(2y)`` completes the dyadic partition of unity
    phi0(y) + sum_{m >= 0} phi(y / 2^m) = 1.
    """

    support: tuple[float, float] = (0.5, 2.0)
    plateau: tuple[float, float] = (1.0, 1.0)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return smooth_step(y) - smooth_step(2.0 * y)

    def phi0(self, y) -> np.ndarray:
        return smooth_step(2.0 * np.asarray(y, dtype=float))

    def partition_sum(self, y, terms: int | None = None) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if terms is None:
            terms = int(np.ceil(np.log2(max(np.max(np.abs(y)), 1.0)))) + 3
        total = self.phi0(y)
        for m in range(terms):
            total = total + self(y / 2.0**m)
        return total


BUMP = BumpSpec()


# ---------------------------------------------------------------------------
# band data and the zonal profile transform


@dataclass(frozen=True)
class KernelBand:
    """Weights in supp phi(|lam|/N) with their spectral integers and bump-weighted dimensions."""

    space: SpaceDescriptor
    N: float
    weights: np.ndarray  # (n, r) int
    m: np.ndarray  # period * |lam|^2_rho, integers
    bump: np.ndarray  # phi(|lam|_rho / N)
    dims: np.ndarray

    @property
    def coefficients0(self) -> np.ndarray:
        return self.bump * self.dims


def kernel_band(space: SpaceDescriptor, N: float, bump: BumpSpec = BUMP) -> KernelBand:
    if N < 1:
        raise DomainError("N must be >= 1")
    w = weights_array_in_band(space, N, lower=False)
    num, denom = spec_norms_array(space, w)
    p = period(space)
    scaled = [Fraction(int(x) * p.numerator, denom * p.denominator) for x in num]
    if any(s.denominator != 1 for s in scaled):
        raise DomainError("period does not clear the spectral denominators")
    m = np.array([int(s) for s in scaled], dtype=np.int64)
    b = bump(np.sqrt(num / denom) / N)
    keep = b > 0
    return KernelBand(space, float(N), w[keep], m[keep], b[keep], dims_array(space, w[keep]))


class ProfileTransform:
    """Evaluate sum_lam c_lam phi_lam(x) on a product of per-factor zonal node sets.

    Compact factors contribute a Gegenbauer table, torus factors an FFT on a uniform grid.
    With ``even_torus`` the coefficients are assumed invariant under sign flips of each
    torus coordinate; only xi >= 0 is kept and a DCT-I gives the values on [0, pi]^k,
    which is all a sup over a symmetric grid needs.
    """

    def __init__(
        self,
        space: SpaceDescriptor,
        weights: np.ndarray,
        resolution: int,
        kind: str = "uniform",
        even_torus: bool = False,
    ):
        self.space = space
        weights = np.asarray(weights, dtype=np.int64)
        self.select = np.arange(len(weights))
        if even_torus:
            tor = [i for f in space.factors if f.kind == "torus" for i in range(f.offset, f.offset + f.rank)]
            self.select = np.flatnonzero((weights[:, tor] >= 0).all(axis=1))
        self.weights = weights[self.select]
        self.axes = []  # per output axis: (kind, size, table-or-None)
        self.node_weights = []
        scatter, shape = [], []
        for f in space.factors:
            cols = self.weights[:, f.coords]
            if f.kind == "torus":
                kmax = int(np.abs(cols).max()) if len(cols) else 0
                n = max(resolution, 2 * kmax + 1)
                if even_torus:
                    n += n % 2
                for j in range(f.rank):
                    if even_torus:
                        scatter.append(cols[:, j])
                        shape.append(n // 2 + 1)
                        self.axes.append(("dct", n // 2 + 1, None))
                        self.node_weights.append(np.full(n // 2 + 1, 1.0 / (n // 2 + 1)))
                    else:
                        scatter.append(cols[:, j] % n)
                        shape.append(n)
                        self.axes.append(("fft", n, None))
                        self.node_weights.append(np.full(n, 1.0 / n))
            else:
                nmax = int(cols.max()) if len(cols) else 0
                theta, w = zonal_profile_nodes(f, resolution, kind)
                scatter.append(cols[:, 0])
                shape.append(nmax + 1)
                self.axes.append(("table", len(theta), gegenbauer_table(f.gegenbauer_alpha, nmax, np.cos(theta))))
                self.node_weights.append(w)
        self.coef_shape = tuple(shape)
        self.flat_index = (
            np.ravel_multi_index(tuple(scatter), self.coef_shape) if len(self.weights) else np.zeros(0, int)
        )

    @property
    def out_shape(self) -> tuple[int, ...]:
        return tuple(n for _, n, _ in self.axes)

    @property
    def measure(self) -> np.ndarray:
        """Normalized zonal measure on the output nodes (exact only for the FFT / Gauss layouts)."""
        w = np.ones(())
        for nw in self.node_weights:
            w = np.multiply.outer(w, nw)
        return w

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        """``coeffs`` shape (batch, n_weights) -> values shape (batch,) + out_shape."""
        coeffs = np.atleast_2d(coeffs)[:, self.select]
        batch = coeffs.shape[0]
        dense = np.zeros((batch, int(np.prod(self.coef_shape))), dtype=complex)
        dense[:, self.flat_index] = coeffs  # weights are distinct, so indices are too
        dense = dense.reshape((batch,) + self.coef_shape)
        for axis, (kind, n, table) in enumerate(self.axes, start=1):
            if kind == "fft":
                # sum_k c_k e^{i k x_j}, x_j = 2 pi j / n
                dense = sp_fft.ifft(dense, axis=axis) * n
            elif kind == "dct":
                # c_0 + 2 sum_{k>0} c_k cos(k x_j), x_j = pi j / (n - 1)
                dense = sp_fft.dct(dense, type=1, axis=axis)
            else:
                dense = np.moveaxis(np.tensordot(dense, table, axes=([axis], [0])), -1, axis)
        return dense


def even_in_torus(space: SpaceDescriptor) -> bool:
    """True when |lam|^2_rho is invariant under sign flips of each torus coordinate."""
    for f in space.factors:
        if f.kind == "torus":
            block = [row[f.coords] for row in space.gram[f.coords]]
            if any(block[i][j] != 0 for i in range(f.rank) for j in range(f.rank) if i != j):
                return False
    return True


# ---------------------------------------------------------------------------
# kernel evaluation


def _phases(m: np.ndarray, s: np.ndarray) -> np.ndarray:
    # exp(-2 pi i s m) with s reduced mod 1 first; m integral
    frac = np.mod(np.multiply.outer(np.asarray(s, dtype=float), m.astype(float)), 1.0)
    return np.exp(-2j * np.pi * frac)


def t_to_frac(space: SpaceDescriptor, t) -> np.ndarray:
    return np.asarray(t, dtype=float) / (2 * math.pi * float(period(space)))


def kernel_eval(space: SpaceDescriptor, N: float, bump: BumpSpec, t: float, x: Sequence) -> complex:
    """K_N(t, x) at a zonal point ``x`` (one entry per factor) by direct summation."""
    band = kernel_band(space, N, bump)
    return kernel_eval_frac(band, float(t_to_frac(space, t)), x)


def kernel_eval_frac(band: KernelBand, s: float, x: Sequence) -> complex:
    space = band.space
    if np.isscalar(x) or (len(space.factors) == 1 and not space.factors[0].compact and np.ndim(x) == 1):
        x = (x,)
    vals = band.coefficients0 * _phases(band.m, s)
    for f, xf in zip(space.factors, x):
        cols = band.weights[:, f.coords]
        if f.kind == "torus":
            vals = vals * np.exp(1j * cols @ np.asarray(xf, dtype=float).reshape(f.rank))
        else:
            table = gegenbauer_table(f.gegenbauer_alpha, int(cols.max(initial=0)), np.cos(float(xf)))
            vals = vals * table[cols[:, 0]]
    return complex(np.sum(vals))


def kernel_profile(band: KernelBand, s, resolution: int, transform: ProfileTransform | None = None) -> np.ndarray:
    """K_N on the zonal profile grid for each time fraction in ``s``."""
    tr = transform or ProfileTransform(band.space, band.weights, resolution)
    coeffs = band.coefficients0 * _phases(band.m, np.atleast_1d(s))
    return tr(coeffs)


# ---------------------------------------------------------------------------
# bounds


def dispersive_rhs(space: SpaceDescriptor, N, tag: MajorArcTag) -> float:
    """N^d / (sqrt(q) (1 + N ||t/T - a/q||^{1/2}))^r."""
    N = float(N)
    if tag.q >= N:
        raise DomainError(f"q = {tag.q} >= N = {N}: outside the major-arc range")
    d, r = space.dim, space.rank
    return N**d / (math.sqrt(tag.q) * (1 + N * math.sqrt(float(tag.dist)))) ** r


def weyl_denominator_sum(N: int, t_frac, h: float = 0.0) -> float:
    """sum_{|m| <= N} 1 / max(1/N, ||m t + h||)^2."""
    if N < 1:
        raise DomainError("N must be >= 1")
    m = np.arange(-N, N + 1)
    x = np.mod(m * float(t_frac) + h, 1.0)
    dist = np.minimum(x, 1.0 - x)
    return float(np.sum(1.0 / np.maximum(1.0 / N, dist) ** 2))


def weyl_sum_bound(N, tag: MajorArcTag) -> float:
    """N^3 / (sqrt(q) (1 + N ||t - a/q||^{1/2}))^2."""
    N = float(N)
    return N**3 / (math.sqrt(tag.q) * (1 + N * math.sqrt(float(tag.dist)))) ** 2


# ---------------------------------------------------------------------------
# scans


def stratified_fracs(N, per_cell: int = 16, arcs_per_q: int = 2) -> list[Fraction]:
    """Exact time fractions covering every (Q, L) regime: endpoints, centre and interior points."""
    N = as_fraction(N)
    n = math.floor(N)
    out: set[Fraction] = set()
    for Q, L in dyadic_pairs(N):
        qs = [q for q in (Q, min(2 * Q - 1, n)) if q < N]
        for q in qs:
            for a in [x for x in range(q) if math.gcd(x, q) == 1][:arcs_per_q]:
                for c in arc_refine(farey_arc_of(a, q, n), N):
                    if c.L != L:
                        continue
                    k = max(per_cell // max(1, 2 * arcs_per_q * len(qs)), 2)
                    for j in range(k + 1):
                        out.add((c.lo + (c.hi - c.lo) * Fraction(j, k)) % 1)
                    out.add(Fraction(a, q))
    return sorted(out)


KERNEL_COLUMNS = ("t", "a", "q", "L", "sup_mod", "rhs", "ratio")


def kernel_bound_scan(
    space: SpaceDescriptor,
    N: int,
    bump: BumpSpec = BUMP,
    t_samples: int | None = None,
    x_profile_samples: int | None = None,
    stratified: bool = True,
    batch: int = 64,
) -> ScanTable:
    """Measure sup_x |K_N(t, x)| against the dispersive right-hand side on major arcs.

    Rows: uniform grid of ``t_samples`` time fractions plus stratified cell samples, kept
    when the containing arc has q < N.  ``t`` is reported as the fraction t/T.
    """
    p = float(period(space))
    need_t = int(math.ceil(8 * N * N * p))
    need_x = 8 * N
    t_samples = need_t if t_samples is None else t_samples
    x_profile_samples = need_x if x_profile_samples is None else x_profile_samples
    if t_samples < need_t or x_profile_samples < need_x:
        raise PrecisionError(
            f"kernel scan needs t_samples >= {need_t} and x_profile_samples >= {need_x}",
            {"t_samples": need_t, "x_profile_samples": need_x},
        )
    band = kernel_band(space, N, bump)
    transform = ProfileTransform(space, band.weights, x_profile_samples, even_torus=even_in_torus(space))
    fracs = {Fraction(k, t_samples) for k in range(t_samples)}
    if stratified:
        fracs.update(stratified_fracs(N))
    tagged = []
    for s in sorted(fracs):
        tag = major_arc_locate(s, N)
        if tag.q < N:
            tagged.append((s, tag))
    # K(1 - s, x) = conj K(s, -x) and the profile grids are symmetric under x -> -x,
    # so the sup only depends on min(s, 1 - s)
    reduced = sorted({min(s, 1 - s) for s, _ in tagged})
    sup_of: dict[Fraction, float] = {}
    for i in range(0, len(reduced), batch):
        chunk = reduced[i : i + batch]
        vals = kernel_profile(band, np.array([float(s) for s in chunk]), 0, transform)
        sups = np.abs(vals).reshape(len(chunk), -1).max(axis=1)
        sup_of.update(zip(chunk, map(float, sups)))
    rows = []
    for s, tag in tagged:
        sup = sup_of[min(s, 1 - s)]
        rhs = dispersive_rhs(space, N, tag)
        rows.append((float(s), tag.a, tag.q, tag.L, sup, rhs, sup / rhs))
    table = ScanTable(KERNEL_COLUMNS, rows)
    ratios = np.array([r[-1] for r in rows])
    k = int(np.argmax(ratios))
    table.summary.update(
        space=space.name,
        N=N,
        C_of_N=float(ratios[k]),
        argmax_t=rows[k][0],
        t_samples=t_samples,
        x_profile_samples=x_profile_samples,
        rows=len(rows),
    )
    return table


def parseval_check(space: SpaceDescriptor, N: int, bump: BumpSpec = BUMP, batch: int = 64) -> dict:
    """(1/T) int_0^T int_M |K_N|^2 by quadrature vs. vol * sum phi^2 d_lam (orthogonality)."""
    band = kernel_band(space, N, bump)
    exact = space.volume * float(np.sum(band.bump**2 * band.dims))
    # |K|^2 has time frequencies m - m' with |m - m'| <= max m; spatially degree <= 2 * max coord
    t_nodes = int(band.m.max()) + 1
    deg = int(np.abs(band.weights).max())
    transform = ProfileTransform(space, band.weights, deg + 2, kind="gauss")
    measure = transform.measure
    acc = 0.0
    s = np.arange(t_nodes) / t_nodes
    for i in range(0, t_nodes, batch):
        vals = kernel_profile(band, s[i : i + batch], 0, transform)
        acc += float(np.sum(np.abs(vals) ** 2 * measure))
    quad = space.volume * acc / t_nodes
    return {"quadrature": quad, "exact": exact, "rel_error": abs(quad - exact) / exact, "t_nodes": t_nodes}
