"""Spherical functions on catalog spaces, quadrature grids and spectral projectors."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from typing import Sequence

import numpy as np
from scipy.special import roots_gegenbauer

from .space_catalog import (
    DomainError,
    DominantWeight,
    Factor,
    SpaceDescriptor,
    check_weight,
    dim_weight,
)


class PrecisionError(RuntimeError):
    """Quadrature or sampling too coarse for the requested band."""

    def __init__(self, message: str, required: dict | None = None):
        super().__init__(message)
        self.required = required or {}


class PrecisionWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# one-dimensional recurrences


def legendre_recurrence(n: int, x) -> np.ndarray:
    """P_n(x) by Bonnet's recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev, p = np.ones_like(x), x.copy()
    if n == 0:
        return p_prev
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p


def gegenbauer_table(alpha: float, nmax: int, x) -> np.ndarray:
    """Normalized Gegenbauer values C_n^alpha(x)/C_n^alpha(1) for n = 0..nmax.

    Shape ``(nmax + 1,) + x.shape``.  alpha = 1/2 gives Legendre, alpha = 1 the SU(2)
    characters divided by their dimension.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax == 0:
        return out
    c_prev, c = np.ones_like(x), 2 * alpha * x
    one_prev, one = 1.0, 2 * alpha
    out[1] = c / one
    for n in range(2, nmax + 1):
        a, b = 2 * (n + alpha - 1) / n, (n + 2 * alpha - 2) / n
        c_prev, c = c, a * x * c - b * c_prev
        one_prev, one = one, a * one - b * one_prev
        out[n] = c / one
    return out


def factor_phi(factor: Factor, coords: Sequence[int], rel) -> np.ndarray:
    """Spherical function of one factor at relative position ``rel``.

    ``rel`` is an angle array for compact factors and an array of shape (..., rank) of
    angle differences for torus factors.
    """
    if factor.kind == "torus":
        rel = np.asarray(rel, dtype=float)
        return np.exp(1j * (rel.reshape(-1, factor.rank) @ np.asarray(coords, dtype=float))).reshape(
            rel.shape[:-1]
        )
    n = int(coords[0])
    theta = np.asarray(rel, dtype=float)
    return gegenbauer_table(factor.gegenbauer_alpha, n, np.cos(theta))[n]


def phi_zonal(space: SpaceDescriptor, lam: Sequence[int], x: Sequence) -> complex | float:
    """phi_lambda at the zonal point ``x`` (one entry per factor)."""
    lam = check_weight(space, lam)
    if len(space.factors) == 1 and (np.isscalar(x) or (not space.factors[0].compact and np.ndim(x) == 1)):
        x = (x,)
    elif np.isscalar(x):
        x = (x,)
    if len(x) != len(space.factors):
        raise DomainError(f"zonal point needs {len(space.factors)} factor coordinates")
    val: complex | float = 1.0
    for f, xf in zip(space.factors, x):
        if f.compact and not (0 <= float(xf) <= math.pi):
            raise DomainError(f"zonal angle {xf} outside [0, pi]")
        rel = np.asarray(xf, dtype=float).reshape(-1) if not f.compact else float(xf)
        val = val * factor_phi(f, lam[f.coords], rel)
    val = complex(np.asarray(val).reshape(()))
    return val.real if all(f.compact for f in space.factors) else val


def identity_point(space: SpaceDescriptor) -> tuple:
    return tuple(np.zeros(f.rank) if not f.compact else 0.0 for f in space.factors)


# ---------------------------------------------------------------------------
# Laplace integral (SU(2)/SO(2) instance of the Iwasawa-projection integral)


@dataclass(frozen=True)
class LaplaceResult:
    value: complex
    quad_points: int
    underresolved: bool


def phi_laplace_integral(n: int, theta: float, quad_points: int) -> LaplaceResult:
    """(1/2pi) int_0^{2pi} (cos 2theta + i sin 2theta cos 2t)^n dt by the trapezoid rule."""
    if n < 0 or quad_points < 1:
        raise DomainError("need n >= 0 and quad_points >= 1")
    flag = quad_points < 4 * (n + 1)
    if flag:
        warnings.warn(f"{quad_points} nodes under-resolve degree {n}", PrecisionWarning, stacklevel=2)
    t = 2 * np.pi * np.arange(quad_points) / quad_points
    z = np.cos(2 * theta) + 1j * np.sin(2 * theta) * np.cos(2 * t)
    return LaplaceResult(complex(np.mean(z**n)), quad_points, flag)


def laplace_table(nmax: int, theta, quad_points: int) -> np.ndarray:
    """Vectorized Laplace integral for n = 0..nmax over an array of theta."""
    theta = np.asarray(theta, dtype=float)
    t = 2 * np.pi * np.arange(quad_points) / quad_points
    z = np.cos(2 * theta)[..., None] + 1j * np.sin(2 * theta)[..., None] * np.cos(2 * t)
    out = np.empty((nmax + 1,) + theta.shape, dtype=complex)
    power = np.ones_like(z)
    for n in range(nmax + 1):
        out[n] = power.mean(axis=-1)
        power = power * z
    return out


# ---------------------------------------------------------------------------
# quadrature grids


@dataclass(frozen=True)
class FactorGrid:
    """Nodes on one factor with normalized weights (sum 1)."""

    factor: Factor
    points: np.ndarray  # (n, rank) torus angles or (n, dim+1) unit vectors
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def relative(self, center) -> np.ndarray:
        return relative_position(self.factor, self.points, center)


def relative_position(factor: Factor, points: np.ndarray, center) -> np.ndarray:
    """Zonal coordinate of ``points`` seen from ``center``."""
    center = np.asarray(center, dtype=float)
    if factor.kind == "torus":
        return points - center
    return np.arccos(np.clip(points @ center, -1.0, 1.0))


@lru_cache(maxsize=64)
def sphere_nodes(d: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on S^d exact for polynomials of degree <= ``degree``."""
    if d == 1:
        m = degree + 1
        phi = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(m, 1.0 / m)
    npol = degree // 2 + 1
    x, w = roots_gegenbauer(npol, (d - 1) / 2)
    w = w / w.sum()
    sub_pts, sub_w = sphere_nodes(d - 1, degree)
    s = np.sqrt(np.clip(1 - x**2, 0, None))
    pts = np.concatenate(
        [np.column_stack([np.full(len(sub_w), xi), si * sub_pts]) for xi, si in zip(x, s)]
    )
    return pts, np.outer(w, sub_w).ravel()


def factor_grid(factor: Factor, degree: int) -> FactorGrid:
    """Exact quadrature grid for band-limited functions of total degree <= ``degree``."""
    if factor.kind == "torus":
        m = degree + 1
        axis = 2 * np.pi * np.arange(m) / m
        pts = np.stack(np.meshgrid(*([axis] * factor.rank), indexing="ij"), axis=-1).reshape(-1, factor.rank)
        return FactorGrid(factor, pts, np.full(len(pts), 1.0 / len(pts)))
    pts, w = sphere_nodes(factor.dim, degree)
    return FactorGrid(factor, pts, w)


def random_factor_points(factor: Factor, n: int, rng: np.random.Generator) -> np.ndarray:
    if factor.kind == "torus":
        return rng.uniform(0, 2 * np.pi, size=(n, factor.rank))
    g = rng.standard_normal((n, factor.dim + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_center(factor: Factor, rng: np.random.Generator) -> np.ndarray:
    return random_factor_points(factor, 1, rng)[0]


@dataclass(frozen=True)
class ProductGrid:
    """Tensor product of factor grids; sampled functions are arrays with one axis per factor."""

    space: SpaceDescriptor
    grids: tuple[FactorGrid, ...]
    degree: int

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.grids)

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(())
        for g in self.grids:
            w = np.multiply.outer(w, g.weights)
        return w


def product_grid(space: SpaceDescriptor, degree: int) -> ProductGrid:
    return ProductGrid(space, tuple(factor_grid(f, degree) for f in space.factors), degree)


def zonal_translate(space: SpaceDescriptor, lam: Sequence[int], center: Sequence, grid: ProductGrid) -> np.ndarray:
    """phi_lambda(center^{-1} x) sampled on ``grid``."""
    out = np.ones(())
    for f, g, c in zip(space.factors, grid.grids, center):
        out = np.multiply.outer(out, factor_phi(f, lam[f.coords], g.relative(c)))
    return out


def _kernel_matrix(f: Factor, coords, g: FactorGrid) -> np.ndarray:
    if f.kind == "torus":
        diff = g.points[:, None, :] - g.points[None, :, :]
        return np.exp(1j * diff @ np.asarray(coords, dtype=float))
    cosang = np.clip(g.points @ g.points.T, -1.0, 1.0)
    n = int(coords[0])
    return gegenbauer_table(f.gegenbauer_alpha, n, cosang)[n]


def projector_apply(space: SpaceDescriptor, lam: Sequence[int], f, grid: ProductGrid | None = None):
    """Spectral projection P_lambda f = d_lambda f * phi_lambda.

    ``f`` is either a :class:`~symstri.strichartz_lab.BandState` (projection is exact:
    keep the atoms at lambda) or an array sampled on ``grid``.
    """
    lam = check_weight(space, lam)
    if hasattr(f, "atoms"):
        return f.component(lam)
    if grid is None:
        raise DomainError("sampled input needs its grid")
    values = np.asarray(f)
    if values.shape != grid.shape:
        raise DomainError(f"sample shape {values.shape} does not match grid {grid.shape}")
    need = sum(lam[fac.coords][0] if fac.compact else int(np.abs(lam[fac.coords]).sum()) for fac in space.factors)
    if need > grid.degree:
        raise PrecisionError(
            f"grid degree {grid.degree} cannot resolve lambda={lam}", {"degree": need}
        )
    out = values * grid.weights
    for axis, (fac, g) in enumerate(zip(space.factors, grid.grids)):
        k = _kernel_matrix(fac, lam[fac.coords], g)
        out = np.moveaxis(np.tensordot(k, out, axes=([1], [axis])), 0, axis)
    return dim_weight(space, lam) * out


def inner(grid: ProductGrid, f: np.ndarray, g: np.ndarray) -> complex:
    """<f, g> with respect to the normalized measure."""
    return complex(np.sum(grid.weights * f * np.conj(g)))


def projection_norms(
    space: SpaceDescriptor, h: np.ndarray, grid: ProductGrid, candidates: Sequence[DominantWeight]
) -> dict[DominantWeight, float]:
    """||P_nu h|| (normalized measure) for each candidate nu."""
    out = {}
    for nu in candidates:
        p = projector_apply(space, nu, h, grid)
        out[tuple(nu)] = math.sqrt(inner(grid, p, p).real)
    return out


# ---------------------------------------------------------------------------
# Fourier support of products


def product_support(space: SpaceDescriptor, lam: Sequence[int], mu: Sequence[int]) -> list[DominantWeight]:
    """{lam + xi : xi in the weight lattice, |xi + rho0| <= |mu + rho0|, lam + xi admissible}."""
    lam, mu = check_weight(space, lam), check_weight(space, mu)
    g = space.gram
    r = space.rank
    m = [Fraction(x) + y for x, y in zip(mu, space.rho0)]
    rad = sum((g[i][j] * m[i] * m[j] for i in range(r) for j in range(r)), Fraction(0))
    gm = space.gram_matrix
    ginv_diag = np.diag(np.linalg.inv(gm))
    ranges = []
    for i in range(r):
        half = math.sqrt(float(rad) * ginv_diag[i]) + 1e-9
        c = -float(space.rho0[i])
        ranges.append(range(math.ceil(c - half), math.floor(c + half) + 1))
    signed = space.signed
    out = []
    for xi in iproduct(*ranges):
        nu = tuple(a + b for a, b in zip(lam, xi))
        if any(v < 0 and not s for v, s in zip(nu, signed)):
            continue
        v = [Fraction(x) + y for x, y in zip(xi, space.rho0)]
        if sum((g[i][j] * v[i] * v[j] for i in range(r) for j in range(r)), Fraction(0)) <= rad:
            out.append(nu)
    return sorted(out)


def support_check(
    space: SpaceDescriptor,
    lam: Sequence[int],
    mu: Sequence[int],
    seed: int = 0,
    extra: int = 3,
    tol: float = 1e-8,
) -> dict:
    """Project phi_lam(c1^{-1}x) phi_mu(c2^{-1}x) (random centers) onto nearby eigenspaces.

    Returns the projection norms, the detected set (norm > tol), the predicted superset
    and whether detection is contained in the prediction.
    """
    lam, mu = check_weight(space, lam), check_weight(space, mu)
    rng = np.random.default_rng(seed)
    top = [a + b + extra for a, b in zip(lam, mu)]
    degree = 2 * max(top) + 2
    grid = product_grid(space, degree)
    c1 = [random_center(f, rng) for f in space.factors]
    c2 = [random_center(f, rng) for f in space.factors]
    h = zonal_translate(space, lam, c1, grid) * zonal_translate(space, mu, c2, grid)
    ranges = [range(-t if s else 0, t + 1) for t, s in zip(top, space.signed)]
    candidates = list(iproduct(*ranges))
    norms = projection_norms(space, h, grid, candidates)
    detected = sorted(nu for nu, v in norms.items() if v > tol)
    predicted = product_support(space, lam, mu)
    return {
        "norms": norms,
        "detected": detected,
        "predicted": predicted,
        "sound": set(detected) <= set(predicted),
        "degree": degree,
        "grid_shape": grid.shape,
    }


def zonal_profile_nodes(factor: Factor, n: int, kind: str = "uniform") -> tuple[np.ndarray, np.ndarray]:
    """Nodes for the zonal (radial) profile of one factor and their normalized zonal weights.

    ``kind='uniform'``: equispaced (torus: [0, 2pi)^rank, compact: [0, pi] endpoints
    included) for sup scans; ``kind='gauss'``: exact zonal quadrature.
    """
    if factor.kind == "torus":
        axis = 2 * np.pi * np.arange(n) / n
        pts = np.stack(np.meshgrid(*([axis] * factor.rank), indexing="ij"), axis=-1).reshape(-1, factor.rank)
        return pts, np.full(len(pts), 1.0 / len(pts))
    if kind == "uniform":
        theta = np.linspace(0.0, np.pi, n)
        w = np.sin(theta) ** (factor.dim - 1)
        return theta, w / w.sum()
    x, w = roots_gegenbauer(n, factor.gegenbauer_alpha)
    return np.arccos(x), w / w.sum()

