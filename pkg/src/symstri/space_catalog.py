"""Catalog of compact globally symmetric spaces with exact rational data.

Every space is a finite product of three kinds of factor:

* ``T{r}``  flat torus R^r / 2piZ^r, spectral form |xi|^2 = xi^T G xi (G rational),
* ``S{d}``  the round unit sphere, spectral value n(n + d - 1),
* ``SU2``   the group SU(2) with its bi-invariant metric (isometric to unit S^3).

Weights are integer tuples in the fundamental-weight basis.  Torus coordinates
are signed; coordinates belonging to compact-type factors must be >= 0.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product as iproduct
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

DominantWeight = tuple[int, ...]

_PRODUCT_SEP = re.compile(r"\s*(?:×|\*|x(?=[TS]))\s*")


class CatalogError(ValueError):
    """Unknown or malformed space name / descriptor."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and ``"p/q"`` strings exactly; floats via their string form."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


def lcm_denominators(values: Iterable[Fraction]) -> int:
    return reduce(math.lcm, (Fraction(v).denominator for v in values), 1)


@dataclass(frozen=True)
class Factor:
    """One irreducible (or flat) factor; ``coords`` is its slice in the weight vector."""

    kind: str  # "torus" | "sphere" | "su2"
    rank: int
    dim: int
    offset: int

    @property
    def coords(self) -> slice:
        return slice(self.offset, self.offset + self.rank)

    @property
    def compact(self) -> bool:
        return self.kind != "torus"

    @property
    def gegenbauer_alpha(self) -> float:
        # zonal functions on S^d (and SU(2) = S^3) are normalized Gegenbauer C^alpha
        return (self.dim - 1) / 2


@dataclass(frozen=True)
class LinearForm:
    coeffs: tuple[Fraction, ...]
    const: Fraction

    def __call__(self, coords: Sequence) -> Fraction:
        return sum((c * x for c, x in zip(self.coeffs, coords)), self.const)


@dataclass(frozen=True)
class SpaceDescriptor:
    name: str
    rank: int
    dim: int
    gram: tuple[tuple[Fraction, ...], ...]
    spec_linear: tuple[Fraction, ...]
    rho0: tuple[Fraction, ...]
    dim_factors: tuple[LinearForm, ...]
    dim_scale: Fraction
    factors: tuple[Factor, ...] = field(default=())

    @property
    def gram_matrix(self) -> np.ndarray:
        return np.array([[float(g) for g in row] for row in self.gram])

    @property
    def signed(self) -> tuple[bool, ...]:
        """Per-coordinate flag: True where the coordinate may be negative (torus)."""
        flags = [True] * self.rank
        for f in self.factors:
            for i in range(f.offset, f.offset + f.rank):
                flags[i] = not f.compact
        return tuple(flags)

    @property
    def volume(self) -> float:
        """Riemannian volume in the catalog normalization."""
        vol = 1.0
        for f in self.factors:
            if f.kind == "torus":
                block = self.gram_matrix[f.coords, f.coords]
                vol *= (2 * math.pi) ** f.rank / math.sqrt(np.linalg.det(block))
            else:
                vol *= sphere_area(f.dim)
        return vol

    # integer-scaled spectral data: |lam|^2 = (lam^T A lam + c^T lam) / denom
    @property
    def _scaled(self) -> tuple[np.ndarray, np.ndarray, int]:
        denom = lcm_denominators([g for row in self.gram for g in row] + list(self.spec_linear))
        a = np.array([[int(g * denom) for g in row] for row in self.gram], dtype=np.int64)
        c = np.array([int(b * denom) for b in self.spec_linear], dtype=np.int64)
        return a, c, denom

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rank": self.rank,
            "dim": self.dim,
            "gram": [[str(g) for g in row] for row in self.gram],
            "spec_linear": [str(b) for b in self.spec_linear],
            "rho0": [str(x) for x in self.rho0],
            "dim_factors": [
                {"coeffs": [str(c) for c in lf.coeffs], "const": str(lf.const)}
                for lf in self.dim_factors
            ],
            "dim_scale": str(self.dim_scale),
            "factors": [[f.kind, f.rank, f.dim] for f in self.factors],
            "period": str(period(self)),
        }


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^d in R^{d+1}."""
    return 2 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


# ---------------------------------------------------------------------------
# construction


def torus(rank: int, gram: Sequence[Sequence] | None = None, name: str | None = None) -> SpaceDescriptor:
    """Rational flat torus; ``gram`` defaults to the identity."""
    if gram is None:
        g = tuple(tuple(Fraction(int(i == j)) for j in range(rank)) for i in range(rank))
    else:
        g = tuple(tuple(as_fraction(x) for x in row) for row in gram)
        if len(g) != rank or any(len(row) != rank for row in g):
            raise CatalogError(f"gram must be {rank}x{rank}")
        _check_positive_definite(g)
    zero = tuple(Fraction(0) for _ in range(rank))
    return SpaceDescriptor(
        name=name or f"T{rank}",
        rank=rank,
        dim=rank,
        gram=g,
        spec_linear=zero,
        rho0=zero,
        dim_factors=(),
        dim_scale=Fraction(1),
        factors=(Factor("torus", rank, rank, 0),),
    )


def sphere(d: int) -> SpaceDescriptor:
    """Unit S^d = SO(d+1)/SO(d); d_n = (2n+d-1) prod_{k=1}^{d-2} (n+k) / (d-1)!."""
    if d < 2:
        raise CatalogError(f"S{d}: sphere dimension must be >= 2")
    forms = [LinearForm((Fraction(2),), Fraction(d - 1))]
    forms += [LinearForm((Fraction(1),), Fraction(k)) for k in range(1, d - 1)]
    return SpaceDescriptor(
        name=f"S{d}",
        rank=1,
        dim=d,
        gram=((Fraction(1),),),
        spec_linear=(Fraction(d - 1),),
        rho0=(Fraction(1),),
        dim_factors=tuple(forms),
        dim_scale=Fraction(1, math.factorial(d - 1)),
        factors=(Factor("sphere", 1, d, 0),),
    )


def su2() -> SpaceDescriptor:
    """SU(2) as (SU2 x SU2)/diag: d_n = (n+1)^2, eigenvalue n(n+2)."""
    one = LinearForm((Fraction(1),), Fraction(1))
    return SpaceDescriptor(
        name="SU2",
        rank=1,
        dim=3,
        gram=((Fraction(1),),),
        spec_linear=(Fraction(2),),
        rho0=(Fraction(1),),
        dim_factors=(one, one),
        dim_scale=Fraction(1),
        factors=(Factor("su2", 1, 3, 0),),
    )


def product_space(a: SpaceDescriptor, b: SpaceDescriptor) -> SpaceDescriptor:
    r = a.rank + b.rank
    gram = tuple(row + (Fraction(0),) * b.rank for row in a.gram) + tuple(
        (Fraction(0),) * a.rank + row for row in b.gram
    )

    def pad(lf: LinearForm, left: int, right: int) -> LinearForm:
        return LinearForm((Fraction(0),) * left + lf.coeffs + (Fraction(0),) * right, lf.const)

    forms = tuple(pad(lf, 0, b.rank) for lf in a.dim_factors) + tuple(
        pad(lf, a.rank, 0) for lf in b.dim_factors
    )
    factors = a.factors + tuple(
        Factor(f.kind, f.rank, f.dim, f.offset + a.rank) for f in b.factors
    )
    return SpaceDescriptor(
        name=f"{a.name}×{b.name}",
        rank=r,
        dim=a.dim + b.dim,
        gram=gram,
        spec_linear=a.spec_linear + b.spec_linear,
        rho0=a.rho0 + b.rho0,
        dim_factors=forms,
        dim_scale=a.dim_scale * b.dim_scale,
        factors=factors,
    )


def _atom(token: str) -> SpaceDescriptor:
    if token == "SU2":
        return su2()
    m = re.fullmatch(r"T(\d+)", token)
    if m and int(m.group(1)) >= 1:
        return torus(int(m.group(1)))
    m = re.fullmatch(r"S(\d+)", token)
    if m and int(m.group(1)) >= 2:
        return sphere(int(m.group(1)))
    raise CatalogError(f"unknown space token {token!r}")


def catalog_get(name: str) -> SpaceDescriptor:
    """Build a descriptor from a catalog name such as ``"T2"``, ``"S2"`` or ``"T1×S2"``."""
    tokens = [t for t in _PRODUCT_SEP.split(name.strip()) if t]
    if not tokens:
        raise CatalogError(f"empty space name {name!r}")
    return reduce(product_space, (_atom(t) for t in tokens))


CATALOG_EXAMPLES = ("T1", "T2", "T3", "T5", "S2", "S3", "SU2", "T1×S2", "S2×S2", "S3×S3")


def load_space(spec: str) -> SpaceDescriptor:
    """Catalog name, or path to a JSON descriptor document."""
    path = Path(spec)
    if path.suffix == ".json" or path.is_file():
        return descriptor_from_dict(json.loads(path.read_text()))
    return catalog_get(spec)


def descriptor_from_dict(doc: dict) -> SpaceDescriptor:
    try:
        rank = int(doc["rank"])
        dim = int(doc["dim"])
        gram = tuple(tuple(as_fraction(x) for x in row) for row in doc["gram"])
        linear = tuple(as_fraction(x) for x in doc.get("spec_linear", [0] * rank))
        rho0 = tuple(as_fraction(x) for x in doc.get("rho0", [0] * rank))
        forms = tuple(
            LinearForm(tuple(as_fraction(c) for c in f["coeffs"]), as_fraction(f["const"]))
            for f in doc.get("dim_factors", [])
        )
        scale = as_fraction(doc.get("dim_scale", 1))
        raw = doc.get("factors") or [["torus", rank, rank]]
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogError(f"malformed descriptor: {exc}") from exc
    factors, off = [], 0
    for kind, frank, fdim in raw:
        factors.append(Factor(kind, int(frank), int(fdim), off))
        off += int(frank)
    if off != rank or len(gram) != rank or len(linear) != rank:
        raise CatalogError("descriptor rank does not match gram/factors")
    _check_positive_definite(gram)
    space = SpaceDescriptor(doc.get("name", "custom"), rank, dim, gram, linear, rho0, forms, scale, tuple(factors))
    if "period" in doc and as_fraction(doc["period"]) != period(space):
        raise CatalogError(f"descriptor period {doc['period']} disagrees with computed {period(space)}")
    return space


def _check_positive_definite(gram) -> None:
    n = len(gram)
    for k in range(1, n + 1):
        if _det([row[:k] for row in gram[:k]]) <= 0:
            raise CatalogError("gram matrix is not positive definite")
    if any(gram[i][j] != gram[j][i] for i in range(n) for j in range(n)):
        raise CatalogError("gram matrix is not symmetric")


def _det(m) -> Fraction:
    # exact Gaussian elimination
    a = [list(map(Fraction, row)) for row in m]
    n, det = len(a), Fraction(1)
    for i in range(n):
        piv = next((k for k in range(i, n) if a[k][i] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            a[i], a[piv] = a[piv], a[i]
            det = -det
        det *= a[i][i]
        for k in range(i + 1, n):
            f = a[k][i] / a[i][i]
            a[k] = [x - f * y for x, y in zip(a[k], a[i])]
    return det


# ---------------------------------------------------------------------------
# operations


def check_weight(space: SpaceDescriptor, lam: Sequence[int]) -> DominantWeight:
    lam = tuple(int(x) for x in lam)
    if len(lam) != space.rank:
        raise DomainError(f"weight {lam} has length {len(lam)}, space rank is {space.rank}")
    for x, s in zip(lam, space.signed):
        if x < 0 and not s:
            raise DomainError(f"weight {lam} is not dominant")
    return lam


def dim_polynomial(space: SpaceDescriptor, coords: Sequence) -> Fraction:
    """The dimension polynomial at arbitrary rational coordinates (no dominance check)."""
    val = space.dim_scale
    for lf in space.dim_factors:
        val *= lf(coords)
    return val


def dim_weight(space: SpaceDescriptor, lam: Sequence[int]) -> int:
    lam = check_weight(space, lam)
    val = dim_polynomial(space, lam)
    if val.denominator != 1 or val <= 0:
        raise DomainError(f"dimension polynomial gave {val} at {lam}")
    return int(val)


def spec_norm_sq(space: SpaceDescriptor, lam: Sequence[int]) -> Fraction:
    lam = check_weight(space, lam)
    total = sum(
        (space.gram[i][j] * lam[i] * lam[j] for i in range(space.rank) for j in range(space.rank)),
        Fraction(0),
    )
    return total + sum((b * x for b, x in zip(space.spec_linear, lam)), Fraction(0))


def period(space: SpaceDescriptor) -> Fraction:
    """Smallest positive integer p (T = 2 pi p) making all spectral values and phases integral.

    |lam|^2 is integer-valued on Z^r iff G_ii + b_i and 2 G_ij are integers; the phases
    2(w_j, lam + 2 rho) = 2(G lam)_j + 2 b_j additionally need 2 G_jj and 2 b_j.
    """
    g, b, r = space.gram, space.spec_linear, space.rank
    data = [g[i][i] + b[i] for i in range(r)]
    data += [2 * g[i][j] for i in range(r) for j in range(r)]
    data += [2 * x for x in b]
    return Fraction(lcm_denominators(data))


def spec_norms_array(space: SpaceDescriptor, weights: np.ndarray) -> tuple[np.ndarray, int]:
    """Vectorized exact spectral values: returns (integer numerators, common denominator)."""
    a, c, denom = space._scaled
    w = np.asarray(weights, dtype=np.int64).reshape(-1, space.rank)
    num = np.einsum("ni,ij,nj->n", w, a, w) + w @ c
    return num, denom


def dims_array(space: SpaceDescriptor, weights: np.ndarray) -> np.ndarray:
    """Float dimensions d_lambda for an array of weights (exact for the catalog's sizes)."""
    w = np.asarray(weights, dtype=np.float64).reshape(-1, space.rank)
    out = np.full(len(w), float(space.dim_scale))
    for lf in space.dim_factors:
        out *= w @ np.array([float(x) for x in lf.coeffs]) + float(lf.const)
    return np.rint(out)


def lattice_slabs(space: SpaceDescriptor, radius_sq: float, slab_rows: int = 1 << 21) -> Iterator[tuple[np.ndarray, np.ndarray, int]]:
    """Bounding-box candidates for |lam|^2_rho <= radius_sq in slabs of leading coordinates.

    Yields ``(points, numerators, denom)``; peak memory is one slab, not the whole box.
    """
    gm = space.gram_matrix
    b = np.array([float(x) for x in space.spec_linear])
    ginv = np.linalg.inv(gm)
    center = -0.5 * ginv @ b
    rad2 = radius_sq + 0.25 * b @ ginv @ b
    half = np.sqrt(np.maximum(rad2, 0) * np.diag(ginv)) + 1e-9
    ranges = []
    for i, signed in enumerate(space.signed):
        lo = math.ceil(center[i] - half[i])
        hi = math.floor(center[i] + half[i])
        if not signed:
            lo = max(lo, 0)
        ranges.append(np.arange(lo, hi + 1, dtype=np.int64))
    if any(len(r) == 0 for r in ranges):
        return
    # split off leading coordinates until the remaining box fits in one slab
    k = 0
    while k < space.rank - 1 and math.prod(len(r) for r in ranges[k:]) > slab_rows:
        k += 1
    tail = np.stack(np.meshgrid(*ranges[k:], indexing="ij"), axis=-1).reshape(-1, space.rank - k)
    for head in iproduct(*ranges[:k]):
        mesh = np.column_stack([np.full((len(tail), k), head, dtype=np.int64).reshape(len(tail), k), tail])
        num, denom = spec_norms_array(space, mesh)
        yield mesh, num, denom


def lattice_points(space: SpaceDescriptor, radius_sq: float) -> np.ndarray:
    """All admissible weights with |lam|^2_rho <= radius_sq (float bound, inclusive)."""
    parts = [m[num <= radius_sq * denom + 1e-9 * denom] for m, num, denom in lattice_slabs(space, radius_sq)]
    return np.concatenate(parts) if parts else np.zeros((0, space.rank), dtype=np.int64)


def weights_in_band(space: SpaceDescriptor, N: float) -> list[DominantWeight]:
    """Weights with N <= |lam|_rho < 2N, in lexicographic order."""
    if N < 1:
        raise DomainError("band parameter N must be >= 1")
    pts = weights_array_in_band(space, N)
    return [tuple(int(x) for x in p) for p in pts]


def weights_array_in_band(space: SpaceDescriptor, N: float, lower: bool = True) -> np.ndarray:
    """Array form of :func:`weights_in_band`; ``lower=False`` gives the ball |lam|_rho < 2N."""
    n = as_fraction(N)
    pts = lattice_points(space, 4 * float(n) ** 2)
    num, denom = spec_norms_array(space, pts)
    # num/denom < (2n)^2  and (optionally)  num/denom >= n^2, compared exactly
    if n.denominator**2 * int(np.abs(num).max(initial=0)) >= 2**62 or 4 * n.numerator**2 * denom >= 2**62:
        num = num.astype(object)
    keep = num * n.denominator**2 < 4 * n.numerator**2 * denom
    if lower:
        keep &= num * n.denominator**2 >= n.numerator**2 * denom
    pts = pts[np.asarray(keep, dtype=bool)]
    order = np.lexsort(pts.T[::-1]) if len(pts) else np.arange(0)
    return pts[order]


def weights_in_ball(space: SpaceDescriptor, cap_sq) -> list[DominantWeight]:
    """Every admissible weight with |lam|^2_rho < cap_sq (exact comparison)."""
    cap = as_fraction(cap_sq)
    pts = lattice_points(space, float(cap))
    num, denom = spec_norms_array(space, pts)
    pts = pts[num * cap.denominator < cap.numerator * denom]
    order = np.lexsort(pts.T[::-1]) if len(pts) else np.arange(0)
    return [tuple(int(x) for x in p) for p in pts[order]]


def describe(space: SpaceDescriptor) -> str:
    lines = [
        f"name: {space.name}",
        f"rank: {space.rank}",
        f"dim: {space.dim}",
        f"period: {period(space)}",
        "factors: " + ", ".join(f"{f.kind}(rank={f.rank}, dim={f.dim})" for f in space.factors),
    ]
    return "\n".join(lines)


def grid_weights(space: SpaceDescriptor, cap: int) -> Iterable[DominantWeight]:
    """All admissible weights with every coordinate in [-cap, cap] (torus) or [0, cap]."""
    ranges = [range(-cap if s else 0, cap + 1) for s in space.signed]
    return iproduct(*ranges)
