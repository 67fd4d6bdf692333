"""Band-limited states, the Schroedinger flow and space-time Lebesgue norm scans.

A :class:`BandState` is a finite sum of translated zonal atoms

    f(x) = sum_i c_i d_{lam_i} phi_{lam_i}(a_i^{-1} x),

so it is automatically band limited and its spectral projections are exact
(keep the atoms at one weight).  Norms use the Riemannian measure of the space
and integrate in time over the full period T = 2 pi p.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sp_fft
import scipy.sparse as sp_sparse

from .space_catalog import (
    DomainError,
    DominantWeight,
    SpaceDescriptor,
    check_weight,
    dims_array,
    lattice_slabs,
    period,
    spec_norms_array,
    weights_array_in_band,
)
from .spherical_fn import (
    PrecisionError,
    factor_grid,
    random_center,
    random_factor_points,
    zonal_profile_nodes,
)
from .tables import ScanTable

MC_DIM = 5  # spatial integration switches to uniform sampling from this dimension on


class SubAdmissibleWarning(UserWarning):
    """Exponent or space outside the regime of the scaling estimate being tested."""


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class Atom:
    lam: DominantWeight
    center: tuple  # one point per factor
    coeff: complex


@dataclass(frozen=True)
class BandState:
    space: SpaceDescriptor
    atoms: tuple[Atom, ...]
    N: float
    band: str = "sharp"  # "sharp": N <= |lam| < 2N; "shell": |lam|^2 = N^2 exactly

    @property
    def weights(self) -> list[DominantWeight]:
        return sorted({a.lam for a in self.atoms})

    def component(self, lam: Sequence[int]) -> "BandState":
        """P_lambda f: the atoms sitting at ``lam``."""
        lam = check_weight(self.space, lam)
        return replace(self, atoms=tuple(a for a in self.atoms if a.lam == lam))

    def scaled(self, factor: complex) -> "BandState":
        return replace(self, atoms=tuple(replace(a, coeff=a.coeff * factor) for a in self.atoms))

    def l2_norm(self) -> float:
        """Exact L^2(M) norm: <atom(lam, a), atom(lam, b)> = vol d_lam phi_lam(a^{-1} b)."""
        if all(f.kind == "torus" for f in self.space.factors):
            c = np.array([a.coeff for a in _merge_torus_atoms(self)], dtype=complex)
            return math.sqrt(float(np.vdot(c, c).real) * self.space.volume)
        groups: dict[DominantWeight, list[Atom]] = {}
        for a in self.atoms:
            groups.setdefault(a.lam, []).append(a)
        total = 0.0
        for lam, group in groups.items():
            lams = np.array([lam], dtype=np.int64)
            centers = _stack_centers(self.space, group)
            vals = _phi_matrix(self.space, lams.repeat(len(group), 0), centers, centers)
            c = np.array([a.coeff for a in group])
            d = dims_array(self.space, lams)[0]
            total += float(np.real(c @ vals @ np.conj(c))) * d
        return math.sqrt(max(total, 0.0) * self.space.volume)

    def evaluate(self, points: Sequence[np.ndarray]) -> np.ndarray:
        """f at joint points (one array per factor, equal lengths)."""
        arr = atom_arrays(self)
        vals = _phi_matrix(self.space, arr.lams, arr.centers, points)
        return (arr.coeff * arr.dims) @ vals


def _stack_centers(space: SpaceDescriptor, atoms: Sequence[Atom]) -> list[np.ndarray]:
    return [np.array([np.asarray(a.center[i], dtype=float) for a in atoms]) for i in range(len(space.factors))]


@dataclass(frozen=True)
class AtomArrays:
    lams: np.ndarray
    centers: list[np.ndarray]
    coeff: np.ndarray
    dims: np.ndarray
    m: np.ndarray  # period * |lam|^2, integers


def atom_arrays(state: BandState) -> AtomArrays:
    space = state.space
    atoms = state.atoms
    if all(f.kind == "torus" for f in space.factors):
        atoms = _merge_torus_atoms(state)
    lams = np.array([a.lam for a in atoms], dtype=np.int64).reshape(-1, space.rank)
    return AtomArrays(
        lams,
        _stack_centers(space, atoms),
        np.array([a.coeff for a in atoms], dtype=complex),
        dims_array(space, lams),
        spectral_integers(space, lams),
    )


def _merge_torus_atoms(state: BandState) -> list[Atom]:
    # on a torus c e^{i lam (x - a)} = (c e^{-i lam a}) e^{i lam x}: one atom per weight
    merged: dict[DominantWeight, complex] = {}
    for a in state.atoms:
        shift = float(np.dot(a.lam, np.concatenate([np.atleast_1d(c) for c in a.center])))
        merged[a.lam] = merged.get(a.lam, 0.0) + a.coeff * complex(np.exp(-1j * shift))
    zero = tuple(np.zeros(f.rank) for f in state.space.factors)
    return [Atom(lam, zero, c) for lam, c in sorted(merged.items())]


def spectral_integers(space: SpaceDescriptor, lams: np.ndarray) -> np.ndarray:
    """period * |lam|^2_rho as exact integers."""
    num, denom = spec_norms_array(space, lams)
    p = period(space)
    scaled = num * p.numerator
    if np.any(scaled % (denom * p.denominator)):
        raise DomainError("period does not clear the spectral denominators")
    return scaled // (denom * p.denominator)


def _gegenbauer_select(alpha: float, degs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Normalized C_{deg}^alpha(x) with a per-row degree (``degs`` broadcasts against x)."""
    degs = np.broadcast_to(degs, x.shape)
    out = np.ones_like(x)
    nmax = int(degs.max()) if degs.size else 0
    if nmax == 0:
        return out
    c_prev, c = np.ones_like(x), 2 * alpha * x
    one_prev, one = 1.0, 2 * alpha
    np.copyto(out, c / one, where=degs == 1)
    for n in range(2, nmax + 1):
        a, b = 2 * (n + alpha - 1) / n, (n + 2 * alpha - 2) / n
        c_prev, c = c, a * x * c - b * c_prev
        one_prev, one = one, a * one - b * one_prev
        np.copyto(out, c / one, where=degs == n)
    return out


def _phi_matrix(space: SpaceDescriptor, lams: np.ndarray, centers, points) -> np.ndarray:
    """phi_{lam_i}(a_i^{-1} x_j) for atoms i and points j: shape (n_atoms, n_points)."""
    out = None
    for f, c, x in zip(space.factors, centers, points):
        c = np.asarray(c, dtype=float).reshape(len(lams), -1)
        x = np.asarray(x, dtype=float).reshape(-1, c.shape[1])
        lf = lams[:, f.coords]
        if f.kind == "torus":
            ph = lf @ x.T - np.sum(lf * c, axis=1)[:, None]
            val = np.exp(1j * ph)
        else:
            cosang = np.clip(c @ x.T, -1.0, 1.0)
            val = _gegenbauer_select(f.gegenbauer_alpha, lf[:, :1], cosang)
        out = val if out is None else out * val
    return out


def _draw_state(space, N, band, lams, centers, coeffs) -> BandState:
    atoms = tuple(Atom(tuple(int(v) for v in lam), tuple(c), complex(z)) for lam, c, z in zip(lams, centers, coeffs))
    state = BandState(space, atoms, float(N), band)
    norm = state.l2_norm()
    if norm == 0:
        raise DomainError("drawn state vanishes identically")
    return state.scaled(1.0 / norm)


def random_band_state(
    space: SpaceDescriptor, N, n_atoms: int | None = None, seed=0
) -> BandState:
    """Gaussian combination of zonal atoms with weights drawn uniformly from the sharp band.

    ``n_atoms`` defaults to three times the number of band weights.
    """
    band = weights_array_in_band(space, N)
    if len(band) == 0:
        raise DomainError(f"band N={N} is empty on {space.name}")
    rng = np.random.default_rng(seed)
    n_atoms = 3 * len(band) if n_atoms is None else int(n_atoms)
    lams = band[rng.integers(0, len(band), size=n_atoms)]
    centers = [[random_center(f, rng) for f in space.factors] for _ in range(n_atoms)]
    coeffs = (rng.standard_normal(n_atoms) + 1j * rng.standard_normal(n_atoms)) / math.sqrt(2)
    return _draw_state(space, N, "sharp", lams, centers, coeffs)


def probe_state(space: SpaceDescriptor, N, seed=0) -> BandState:
    """Coherent state: every band weight once, all at one random center, coefficient 1.

    This is the focusing profile sum_lam d_lam phi_lam(a^{-1}x), which saturates the
    scale-invariant Strichartz exponent.
    """
    band = weights_array_in_band(space, N)
    if len(band) == 0:
        raise DomainError(f"band N={N} is empty on {space.name}")
    rng = np.random.default_rng(seed)
    center = [random_center(f, rng) for f in space.factors]
    return _draw_state(space, N, "sharp", band, [center] * len(band), np.ones(len(band)))


def shell_state(space: SpaceDescriptor, n, seed=0, n_atoms: int | None = None, weights: np.ndarray | None = None) -> BandState:
    """Random eigenfunction with |lam|^2_rho = n (gaussian over the shell weights).

    On tori this is sum_{|xi|^2 = n} g_xi e^{i xi x}; on other spaces each shell weight
    receives random atoms (three per weight by default).
    """
    n = Fraction(n)
    lams = shell_weights(space, n) if weights is None else np.asarray(weights, dtype=np.int64)
    if len(lams) == 0:
        raise DomainError(f"shell |lam|^2 = {n} is empty on {space.name}")
    rng = np.random.default_rng(seed)
    if all(f.kind == "torus" for f in space.factors):
        centers = [tuple(np.zeros(f.rank) for f in space.factors)] * len(lams)
    else:
        n_atoms = 3 * len(lams) if n_atoms is None else n_atoms
        lams = lams[rng.integers(0, len(lams), size=n_atoms)]
        centers = [[random_center(f, rng) for f in space.factors] for _ in range(len(lams))]
    coeffs = (rng.standard_normal(len(lams)) + 1j * rng.standard_normal(len(lams))) / math.sqrt(2)
    return _draw_state(space, math.sqrt(n), "shell", lams, centers, coeffs)


def shell_weights(space: SpaceDescriptor, n) -> np.ndarray:
    n = Fraction(n)
    parts = [m[num * n.denominator == n.numerator * denom] for m, num, denom in lattice_slabs(space, float(n))]
    return np.concatenate(parts) if parts else np.zeros((0, space.rank), dtype=np.int64)


def littlewood_paley(state: BandState, N) -> BandState:
    """Sharp projection onto N <= |lam|_rho < 2N (exact on atoms)."""
    n = Fraction(N)
    keep = []
    num_den = {}
    for a in state.atoms:
        if a.lam not in num_den:
            num, denom = spec_norms_array(state.space, np.array([a.lam]))
            num_den[a.lam] = Fraction(int(num[0]), denom)
        v = num_den[a.lam]
        if n * n <= v < 4 * n * n:
            keep.append(a)
    return BandState(state.space, tuple(keep), float(n), "sharp")


def evolve(state: BandState, t) -> BandState:
    """e^{it Delta} f: each coefficient times e^{-i t |lam|^2_rho}.

    ``t`` is reduced modulo the period first, so t = T returns the state unchanged.
    """
    T = 2 * math.pi * float(period(state.space))
    s = (t / T) if not isinstance(t, Fraction) else t / Fraction(T)
    m = spectral_integers(state.space, np.array([a.lam for a in state.atoms], dtype=np.int64).reshape(-1, state.space.rank))
    ph = np.mod(m * float(s), 1.0)
    rot = np.exp(-2j * np.pi * ph)
    return replace(state, atoms=tuple(replace(a, coeff=a.coeff * r) for a, r in zip(state.atoms, rot)))


# ---------------------------------------------------------------------------
# spatial rules


@dataclass(frozen=True)
class SpatialRule:
    """Joint points (one array per factor) with Riemannian weights summing to vol."""

    points: tuple[np.ndarray, ...]
    weights: np.ndarray
    sampled: bool = False

    def __len__(self) -> int:
        return len(self.weights)

    def chunk(self, lo: int, hi: int) -> tuple[np.ndarray, ...]:
        return tuple(p[lo:hi] for p in self.points)


def band_degree(space: SpaceDescriptor, lams: np.ndarray) -> int:
    """Largest per-factor polynomial degree (compact: n, torus: max |coord|) in ``lams``."""
    deg = 0
    for f in space.factors:
        if len(lams):
            deg = max(deg, int(np.abs(lams[:, f.coords]).max()))
    return deg


def quadrature_rule(space: SpaceDescriptor, degree: int) -> SpatialRule:
    """Tensor product of per-factor rules exact to ``degree``, flattened."""
    grids = [factor_grid(f, degree) for f in space.factors]
    idx = np.indices(tuple(len(g) for g in grids)).reshape(len(grids), -1)
    w = np.ones(idx.shape[1])
    for g, i in zip(grids, idx):
        w = w * g.weights[i]
    return SpatialRule(tuple(g.points[i] for g, i in zip(grids, idx)), w * space.volume)


def sampling_rule(space: SpaceDescriptor, n_points: int, seed=0) -> SpatialRule:
    rng = np.random.default_rng(seed)
    pts = tuple(random_factor_points(f, n_points, rng) for f in space.factors)
    return SpatialRule(pts, np.full(n_points, space.volume / n_points), sampled=True)


def common_center(state: BandState) -> tuple | None:
    """The shared center when every atom sits at the same point, else None."""
    if not state.atoms:
        return None
    c0 = state.atoms[0].center
    for a in state.atoms[1:]:
        if any(not np.allclose(np.asarray(x, float), np.asarray(y, float)) for x, y in zip(a.center, c0)):
            return None
    return c0


def zonal_rule(space: SpaceDescriptor, center: Sequence, degree: int) -> SpatialRule:
    """Exact rule for integrands that are zonal about ``center`` in every compact factor.

    Compact factors reduce to Gauss-Gegenbauer nodes in the angle to the center (exact in
    cos(theta) up to ``degree``); torus factors keep the full uniform grid.
    """
    per_factor = []
    for f, c in zip(space.factors, center):
        if f.kind == "torus":
            g = factor_grid(f, degree)
            per_factor.append((g.points, g.weights))
            continue
        theta, w = zonal_profile_nodes(f, degree // 2 + 1, "gauss")
        c = np.asarray(c, dtype=float)
        v = np.zeros_like(c)
        v[np.argmin(np.abs(c))] = 1.0
        v -= (v @ c) * c
        v /= np.linalg.norm(v)
        per_factor.append((np.outer(np.cos(theta), c) + np.outer(np.sin(theta), v), w))
    idx = np.indices(tuple(len(w) for _, w in per_factor)).reshape(len(per_factor), -1)
    wt = np.ones(idx.shape[1])
    for (_, w), i in zip(per_factor, idx):
        wt = wt * w[i]
    return SpatialRule(tuple(pts[i] for (pts, _), i in zip(per_factor, idx)), wt * space.volume)


def _map_chunks(fn: Callable[[int, int], object], total: int, size: int, threads: int) -> list:
    bounds = [(lo, min(lo + size, total)) for lo in range(0, total, size)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda b: fn(*b), bounds))
    return [fn(*b) for b in bounds]


def _grouped_values(arr: AtomArrays, space: SpaceDescriptor, points, m0: int, width: int) -> np.ndarray:
    """H_k(x) = sum over atoms with m = m0 + k of c d phi(a^{-1} x); shape (width, n_points)."""
    vals = _phi_matrix(space, arr.lams, arr.centers, points)
    n = len(arr.m)
    s = sp_sparse.csr_matrix((arr.coeff * arr.dims, (arr.m - m0, np.arange(n))), shape=(width, n))
    return np.asarray(s @ vals)


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormResult:
    value: float
    stderr: float
    t_samples: int
    n_points: int
    sampled: bool


def default_degree(space: SpaceDescriptor, N) -> int:
    lams = weights_array_in_band(space, N, lower=False)
    return 4 * band_degree(space, lams)


def spacetime_lp_norm(
    state: BandState,
    p: float,
    space_grid: int | SpatialRule | None = None,
    t_samples: int | None = None,
    mc_points: int = 200_000,
    seed=0,
    threads: int = 1,
) -> NormResult:
    """(int_0^T int_M |e^{itDelta} f|^p)^(1/p) by trapezoid in time and quadrature/sampling in space.

    ``space_grid`` is a quadrature degree (default: 4x the band's polynomial degree) or a
    ready rule; spaces of dimension >= 5 are sampled uniformly with ``mc_points`` points.
    """
    space = state.space
    if p < 2:
        raise DomainError("p must be >= 2")
    arr = atom_arrays(state)
    per = period(space)
    N = state.N
    t_min = math.ceil(8 * (2 * N) ** 2 * per)
    bdeg = band_degree(space, arr.lams)
    if t_samples is None:
        t_samples = t_min
    if isinstance(space_grid, SpatialRule):
        rule = space_grid
    elif space.dim >= MC_DIM and space_grid is None:
        rule = sampling_rule(space, mc_points, seed)
    else:
        degree = 4 * bdeg if space_grid is None else int(space_grid)
        if degree < 4 * bdeg or t_samples < t_min:
            raise PrecisionError(
                f"resolution too coarse: degree {degree}, t_samples {t_samples}",
                {"degree": 4 * bdeg, "t_samples": t_min},
            )
        pure_torus = all(f.kind == "torus" for f in space.factors)
        rule = None if pure_torus else quadrature_rule(space, degree)
    if t_samples < t_min:
        raise PrecisionError(f"t_samples {t_samples} below {t_min}", {"t_samples": t_min})
    M = int(t_samples)
    m0 = int(arr.m.min()) if len(arr.m) else 0
    width = int(arr.m.max()) - m0 + 1 if len(arr.m) else 1
    if width > M:
        raise PrecisionError("time grid aliases the spectrum", {"t_samples": width})
    T = 2 * math.pi * float(per)
    if rule is None:
        integral = _torus_spacetime_integral(space, arr, degree, M, p, threads) * T
        value = integral ** (1.0 / p)
        return NormResult(value, 0.0, M, _torus_axis(degree) ** space.rank, False)
    chunk = max(1, (1 << 22) // M)

    def work(lo: int, hi: int) -> np.ndarray:
        H = np.zeros((M, hi - lo), dtype=complex)
        H[:width] = _grouped_values(arr, space, rule.chunk(lo, hi), m0, width)
        # u(s_j, x) = sum_k H_k e^{-2 pi i (m0 + k) j / M}; |u| ignores the m0 shift
        u = sp_fft.fft(H, axis=0, workers=threads)
        return _abs_pow(u, p).mean(axis=0) * T  # time integral per point

    g = np.concatenate(_map_chunks(work, len(rule), chunk, 1))
    integral = float(np.dot(rule.weights, g))
    value = integral ** (1.0 / p)
    stderr = 0.0
    if rule.sampled:
        vol = float(np.sum(rule.weights))
        se_int = vol * float(np.std(g, ddof=1)) / math.sqrt(len(g))
        stderr = value * se_int / (p * integral) if integral > 0 else 0.0
    return NormResult(value, stderr, M, len(rule), rule.sampled)


def _abs_pow(u: np.ndarray, p: float) -> np.ndarray:
    """|u|^p, by repeated squaring when p is an even integer."""
    a2 = u.real * u.real + u.imag * u.imag
    if p == int(p) and int(p) % 2 == 0:
        k, out = int(p) // 2, None
        base = a2
        while k:
            if k & 1:
                out = base if out is None else out * base
            k >>= 1
            if k:
                base = base * base
        return out
    return a2 ** (p / 2)


def _torus_axis(degree: int) -> int:
    return sp_fft.next_fast_len(degree + 1)


def _torus_spacetime_integral(space, arr: AtomArrays, degree: int, M: int, p: float, threads: int) -> float:
    """(1/T) int_0^T int |u|^p on a flat torus: spatial FFT per time, exact phase table.

    Single precision transforms with double accumulation; the relative error of the
    result is ~1e-6, far below the sampling effects being measured.
    """
    n = _torus_axis(degree)
    r = space.rank
    flat = np.ravel_multi_index(tuple((arr.lams % n).T), (n,) * r)
    coeff = arr.coeff * arr.dims
    m_mod = arr.m % M
    step = np.exp(-2j * np.pi * m_mod / M)
    batch = max(1, (1 << 18) // n**r)
    axes = tuple(range(1, r + 1))
    dense = np.zeros((batch, n**r), dtype=np.complex64)  # only ``flat`` columns are ever written
    total = 0.0
    for j0 in range(0, M, batch):
        b = min(batch, M - j0)
        # exact phase at the batch start (integer reduction), then a short recurrence
        ph = np.exp(-2j * np.pi * ((j0 * m_mod) % M) / M) * coeff
        for i in range(b):
            dense[i, flat] = ph
            ph = ph * step
        u = sp_fft.ifftn(dense[:b].reshape((b,) + (n,) * r), axes=axes, norm="forward", workers=threads)
        total += float(_abs_pow(u, p).sum(dtype=np.float64))
    return total * space.volume / (M * n**r)


def lp_norm(state: BandState, p: float, rule: SpatialRule) -> tuple[float, float]:
    """Spatial L^p(M) norm of a state with its sampling standard error."""
    arr = atom_arrays(state)
    chunk = max(1, (1 << 22) // max(len(arr.m), 1))
    parts = []
    for lo in range(0, len(rule), chunk):
        vals = _phi_matrix(state.space, arr.lams, arr.centers, rule.chunk(lo, lo + chunk))
        parts.append(np.abs((arr.coeff * arr.dims) @ vals) ** p)
    g = np.concatenate(parts)
    integral = float(np.dot(rule.weights, g))
    value = integral ** (1.0 / p)
    stderr = 0.0
    if rule.sampled and len(g) > 1 and integral > 0:
        se_int = float(np.sum(rule.weights)) * float(np.std(g, ddof=1)) / math.sqrt(len(g))
        stderr = value * se_int / (p * integral)
    return value, stderr


def torus_sliced_lp_norm(state: BandState, p: float, slices: int = 64, seed=0, head: int = 2, batch: int = 8) -> NormResult:
    """Sampled L^p(M) norm on a pure torus of rank >= 3.

    Each slice draws uniform leading coordinates (``head`` of them) and a uniform shift of
    an FFT grid in the remaining ones; the grid mean of |f|^p over one slice is an unbiased
    estimate of the normalized integral, and the slices are independent.
    """
    space = state.space
    if not all(f.kind == "torus" for f in space.factors) or space.rank <= head:
        raise DomainError("sliced sampling needs a pure torus of rank > head")
    arr = atom_arrays(state)
    lams, coeff = arr.lams, arr.coeff * arr.dims
    lh, lt = lams[:, :head].astype(float), lams[:, head:]
    t = space.rank - head
    n = sp_fft.next_fast_len(2 * int(np.abs(lt).max(initial=0)) + 1)
    flat = np.ravel_multi_index(tuple((lt % n).T), (n,) * t)
    rng = np.random.default_rng(seed)
    means = []
    for lo in range(0, slices, batch):
        b = min(batch, slices - lo)
        xh = rng.uniform(0, 2 * np.pi, size=(b, head))
        shift = rng.uniform(0, 2 * np.pi, size=(b, t))
        ph = np.exp(1j * (xh @ lh.T + shift @ lt.T)) * coeff
        dense = np.zeros((b, n**t), dtype=complex)
        for k in range(b):
            np.add.at(dense[k], flat, ph[k])
        vals = sp_fft.ifftn(dense.reshape((b,) + (n,) * t), axes=tuple(range(1, t + 1)), norm="forward")
        means.extend(np.mean(_abs_pow(vals, p).reshape(b, -1), axis=1))
    g = np.asarray(means)
    integral = space.volume * float(np.mean(g))
    value = integral ** (1.0 / p)
    se = space.volume * float(np.std(g, ddof=1)) / math.sqrt(len(g)) if len(g) > 1 else 0.0
    stderr = value * se / (p * integral) if integral > 0 else 0.0
    return NormResult(value, stderr, 0, len(g) * n**t, True)


def bilinear_l2_norm(
    state1: BandState,
    state2: BandState,
    rule: SpatialRule | None = None,
    mc_points: int = 200_000,
    seed=0,
    threads: int = 1,
) -> NormResult:
    """||e^{itDelta} f1 . e^{itDelta} f2||_{L^2([0,T] x M)}, exact in time.

    The product is sum_omega e^{-i t omega / p} h_omega(x) with h_omega collecting the atom
    pairs of total spectral integer omega = m1 + m2; distinct omega are orthogonal over one
    period, so the squared norm is T sum_omega ||h_omega||^2.

    Spatial integration: states sharing one center are integrated exactly on a
    :func:`zonal_rule`; otherwise product quadrature up to dimension 4 and uniform
    sampling (with standard error) beyond.
    """
    space = state1.space
    if state2.space is not space and state2.space.to_dict() != space.to_dict():
        raise DomainError("states live on different spaces")
    a1, a2 = atom_arrays(state1), atom_arrays(state2)
    c1, c2 = common_center(state1), common_center(state2)
    coherent = (
        c1 is not None
        and c2 is not None
        and all(np.allclose(np.asarray(x, float), np.asarray(y, float)) for x, y in zip(c1, c2))
        and any(f.compact for f in space.factors)
    )
    if rule is None:
        if coherent:
            rule = zonal_rule(space, c1, 2 * (band_degree(space, a1.lams) + band_degree(space, a2.lams)))
        elif space.dim >= MC_DIM:
            rule = sampling_rule(space, mc_points, seed)
        else:
            rule = quadrature_rule(space, 2 * (band_degree(space, a1.lams) + band_degree(space, a2.lams)))
    lo1, w1 = int(a1.m.min()), int(a1.m.max() - a1.m.min()) + 1
    lo2, w2 = int(a2.m.min()), int(a2.m.max() - a2.m.min()) + 1
    L = sp_fft.next_fast_len(w1 + w2 - 1)
    chunk = max(1, (1 << 21) // (L + len(a1.m) + len(a2.m)))
    T = 2 * math.pi * float(period(space))

    def work(lo: int, hi: int) -> np.ndarray:
        pts = rule.chunk(lo, hi)
        H1 = _grouped_values(a1, space, pts, lo1, w1)
        H2 = _grouped_values(a2, space, pts, lo2, w2)
        # h_omega = sum_{k1 + k2 = omega} H1_k1 H2_k2 is a convolution along the group axis;
        # sum_omega |h_omega|^2 follows by Parseval on a zero-padded length-L transform
        F = sp_fft.fft(H1, n=L, axis=0) * sp_fft.fft(H2, n=L, axis=0)
        return (F.real**2 + F.imag**2).sum(axis=0) / L

    g = np.concatenate(_map_chunks(work, len(rule), chunk, threads))
    integral = T * float(np.dot(rule.weights, g))
    value = math.sqrt(integral)
    stderr = 0.0
    if rule.sampled and integral > 0:
        se_int = T * float(np.sum(rule.weights)) * float(np.std(g, ddof=1)) / math.sqrt(len(g))
        stderr = value * se_int / (2 * integral)
    return NormResult(value, stderr, 0, len(rule), rule.sampled)


# ---------------------------------------------------------------------------
# scans


def _slope(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    x, y = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    if len(x) < 2:
        return float("nan"), float("nan")
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    return float(coef[0]), float(np.sqrt(res[0] / len(x))) if len(res) else 0.0


def _trial_seed(seed: int, *tags: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & (2**64 - 1), *[int(t) for t in tags]])


STRI_COLUMNS = ("N", "trial", "kind", "norm", "ref_power", "ratio", "stderr")


def strichartz_scan(
    space: SpaceDescriptor,
    p: float,
    N_list: Sequence,
    trials: int,
    seed: int = 0,
    n_atoms: int | None = None,
    probe: bool = True,
    mc_points: int = 200_000,
    threads: int = 1,
) -> ScanTable:
    """Ratio ||e^{itDelta} f||_{L^p} / N^{d/2 - (d+2)/p} over random (and coherent) unit data."""
    admissible = p >= 2 + 8 / space.rank
    if not admissible:
        warnings.warn(
            f"p = {p} is below 2 + 8/r = {2 + 8 / space.rank} for {space.name}", SubAdmissibleWarning, stacklevel=2
        )
    expo = space.dim / 2 - (space.dim + 2) / p
    table = ScanTable(STRI_COLUMNS)
    for N in N_list:
        ref = float(N) ** expo
        states = [
            ("random", k, random_band_state(space, N, n_atoms, _trial_seed(seed, k, int(N)))) for k in range(trials)
        ]
        if probe:
            states.append(("probe", trials, probe_state(space, N, _trial_seed(seed, trials, int(N)))))
        for kind, k, st in states:
            res = spacetime_lp_norm(st, p, mc_points=mc_points, seed=_trial_seed(seed, k, int(N), 1), threads=threads)
            table.rows.append((N, k, kind, res.value, ref, res.value / ref, res.stderr))
    max_ratio = {N: max(r[5] for r in table.rows if r[0] == N) for N in N_list}
    slope, resid = _slope(list(max_ratio), list(max_ratio.values()))
    table.summary = {
        "space": space.name,
        "p": p,
        "exponent": expo,
        "admissible": admissible,
        "max_ratio": max_ratio,
        "slope": slope,
        "residual": resid,
        "spread": max(max_ratio.values()) / min(max_ratio.values()),
        "trials": trials,
        "probe": probe,
        "seed": seed,
    }
    return table


def bilinear_shape_ok(space: SpaceDescriptor) -> bool:
    """Product of rank-one compact factors, each of dimension >= 3."""
    return all(f.compact and f.rank == 1 and f.dim >= 3 for f in space.factors)


BILINEAR_COLUMNS = ("N1", "N2", "trial", "kind", "norm", "ref_power", "ratio", "stderr")


def bilinear_scan(
    space: SpaceDescriptor,
    N1,
    N2_list: Sequence,
    trials: int,
    mc_points: int = 200_000,
    seed: int = 0,
    probe: bool = True,
    n_atoms: int | None = None,
    threads: int = 1,
) -> ScanTable:
    """||u1 u2||_{L^2} for unit data at N1 and N2 against N2^{d/2 - 1}.

    Each trial pairs independent random states; the probe row pairs the coherent states
    of both bands at a common center.
    """
    shape_ok = bilinear_shape_ok(space)
    if not shape_ok:
        warnings.warn(f"{space.name} is not a product of rank-one factors of dimension >= 3", SubAdmissibleWarning, stacklevel=2)
    expo = space.dim / 2 - 1
    table = ScanTable(BILINEAR_COLUMNS)
    for N2 in N2_list:
        ref = float(N2) ** expo
        rule_seed = _trial_seed(seed, int(N1), int(N2), 2)
        pairs = []
        for k in range(trials):
            s1 = random_band_state(space, N1, n_atoms, _trial_seed(seed, k, int(N1), int(N2), 1))
            s2 = random_band_state(space, N2, n_atoms, _trial_seed(seed, k, int(N1), int(N2), 2))
            pairs.append(("random", k, s1, s2))
        if probe:
            ss = _trial_seed(seed, trials, int(N1), int(N2))
            p1 = probe_state(space, N1, ss)
            p2 = probe_state(space, N2, ss)  # same seed, same center
            pairs.append(("probe", trials, p1, p2))
        for kind, k, s1, s2 in pairs:
            res = bilinear_l2_norm(s1, s2, mc_points=mc_points, seed=rule_seed, threads=threads)
            table.rows.append((N1, N2, k, kind, res.value, ref, res.value / ref, res.stderr))
    best = {N2: max((r for r in table.rows if r[1] == N2), key=lambda r: r[4]) for N2 in N2_list}
    slope, resid = _slope(list(best), [r[4] for r in best.values()])
    table.summary = {
        "space": space.name,
        "N1": N1,
        "theory_slope": expo,
        "shape_ok": shape_ok,
        "max_norm": {N2: r[4] for N2, r in best.items()},
        "max_norm_stderr": {N2: r[7] for N2, r in best.items()},
        "slope": slope,
        "residual": resid,
        "ratio_slope": slope - expo,
        "mc_points": mc_points,
        "trials": trials,
        "probe": probe,
        "seed": seed,
    }
    return table


EIGEN_COLUMNS = ("n", "N", "trial", "norm", "ref_power", "ratio", "stderr")


def eigenfunction_lp_scan(
    space: SpaceDescriptor,
    p: float,
    shell_list: Sequence,
    trials: int,
    seed: int = 0,
    mc_points: int = 20_000,
    slices: int = 256,
) -> ScanTable:
    """Sampled L^p(M) norms of random unit eigenfunctions against N^{(d-2)/2 - d/p}, N = sqrt(n).

    Pure tori of rank >= 3 use :func:`torus_sliced_lp_norm` with ``slices`` slices;
    other spaces use ``mc_points`` uniform points.
    """
    sliced = all(f.kind == "torus" for f in space.factors) and space.rank >= 3
    if space.rank < 5:
        warnings.warn(f"rank {space.rank} < 5 is outside the eigenfunction regime", SubAdmissibleWarning, stacklevel=2)
    elif p <= 2 + 8 / (space.rank - 4):
        warnings.warn(f"p = {p} <= 2 + 8/(r-4)", SubAdmissibleWarning, stacklevel=2)
    expo = (space.dim - 2) / 2 - space.dim / p
    table = ScanTable(EIGEN_COLUMNS)
    skipped = []
    for n in shell_list:
        n = Fraction(n)
        lams = shell_weights(space, n)
        if len(lams) == 0:
            skipped.append(str(n))
            continue
        N = math.sqrt(n)
        ref = max(N, 1.0) ** expo
        rule_seed = _trial_seed(seed, n.numerator, n.denominator)
        rule = None if sliced else sampling_rule(space, mc_points, rule_seed)
        for k in range(trials):
            st = shell_state(space, n, _trial_seed(seed, k, n.numerator, n.denominator), weights=lams)
            if sliced:
                res = torus_sliced_lp_norm(st, p, slices, rule_seed)
                value, se = res.value, res.stderr
            else:
                value, se = lp_norm(st, p, rule)
            table.rows.append((str(n), N, k, value, ref, value / ref, se))
    Ns = sorted({r[1] for r in table.rows if r[1] > 0})
    best = {N: max(r[3] for r in table.rows if r[1] == N) for N in Ns}
    slope, resid = _slope(list(best), list(best.values()))
    table.summary = {
        "space": space.name,
        "p": p,
        "exponent": expo,
        "max_norm": best,
        "slope": slope,
        "ratio_slope": slope - expo,
        "residual": resid,
        "skipped": skipped,
        "sampler": "torus_slices" if sliced else "uniform",
        "mc_points": mc_points,
        "slices": slices if sliced else None,
        "seed": seed,
    }
    return table
