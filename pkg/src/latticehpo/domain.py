"""Finite integer search lattices.

Every hyperparameter takes one of a finite, ordered list of raw values. The
optimizers never see those raw values: each dimension is remapped to the
consecutive integers ``0 .. len(values) - 1`` so that a step of one always
means "the next allowed value", whatever the raw spacing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DimensionSpec",
    "IntegerDomain",
    "DomainError",
    "build_domain",
    "mlp_table_domain",
]

#: Largest lattice we agree to index with int64 flat indices.
MAX_CARDINALITY = 2**62


class DomainError(ValueError):
    """Raised for invalid dimension specs or out-of-domain points."""


@dataclass(frozen=True)
class DimensionSpec:
    """One hyperparameter: a name and its strictly increasing raw values."""

    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise DomainError(f"dimension {self.name!r} has no values")
        if any(not math.isfinite(v) for v in vals):
            raise DomainError(f"dimension {self.name!r} has non-finite values")
        for a, b in zip(vals, vals[1:]):
            if not b > a:
                raise DomainError(
                    f"dimension {self.name!r} values must be strictly increasing "
                    f"({a!r} followed by {b!r})"
                )
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_range(cls, name: str, start: float, stop: float, step: float):
        """Inclusive arithmetic range ``start, start+step, ..., stop``."""
        if step <= 0:
            raise DomainError("step must be positive")
        n = int(round((stop - start) / step)) + 1
        # rounding keeps 0.1-type steps from accumulating binary noise
        vals = [round(start + k * step, 12) for k in range(n)]
        return cls(name, tuple(vals))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class IntegerDomain:
    """The lattice Omega: the Cartesian product of the mapped dimensions.

    Points are integer vectors ``coords`` with
    ``0 <= coords[i] < len(dims[i])``. Functions accept any integer
    array-like; :meth:`as_points` normalizes to a 2-D ``int64`` array.
    """

    dims: tuple[DimensionSpec, ...]
    sizes: np.ndarray = field(init=False, repr=False, compare=False)
    cardinality: int = field(init=False, compare=False)

    def __post_init__(self):
        dims = tuple(self.dims)
        if len(dims) == 0:
            raise DomainError("a domain needs at least one dimension")
        names = [dm.name for dm in dims]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate dimension names in {names}")
        card = 1
        for dm in dims:
            card *= len(dm)  # python int, cannot overflow
        if card > MAX_CARDINALITY:
            raise DomainError(f"domain cardinality {card} exceeds {MAX_CARDINALITY}")
        sizes = np.array([len(dm) for dm in dims], dtype=np.int64)
        sizes.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "cardinality", card)

    # -- basic shape -------------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> list[str]:
        return [dm.name for dm in self.dims]

    @property
    def upper(self) -> np.ndarray:
        """Largest mapped index per dimension."""
        return self.sizes - 1

    def __len__(self) -> int:
        return self.cardinality

    # -- validation and mapping -------------------------------------------

    def as_points(self, points) -> np.ndarray:
        """Return ``points`` as an ``(m, d)`` int64 array (no bounds check)."""
        arr = np.asarray(points)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.d:
            raise DomainError(f"expected points of dimension {self.d}, got shape {arr.shape}")
        if arr.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise DomainError("lattice coordinates must be integers")
        return arr.astype(np.int64)

    def contains(self, points) -> np.ndarray:
        pts = self.as_points(points)
        return np.all((pts >= 0) & (pts < self.sizes), axis=1)

    def check(self, points) -> np.ndarray:
        pts = self.as_points(points)
        bad = ~self.contains(pts)
        if np.any(bad):
            raise DomainError(f"point {pts[np.argmax(bad)].tolist()} is outside the domain")
        return pts

    def to_raw(self, point) -> np.ndarray:
        """Map one lattice point back to its raw hyperparameter values."""
        p = self.check(point)[0]
        return np.array([dm.values[c] for dm, c in zip(self.dims, p)], dtype=float)

    def from_raw(self, raw: Sequence[float], *, rtol: float = 1e-9) -> tuple[int, ...]:
        """Inverse of :meth:`to_raw`; every entry must be an allowed value."""
        raw = np.asarray(raw, dtype=float).ravel()
        if raw.shape[0] != self.d:
            raise DomainError(f"expected {self.d} raw values, got {raw.shape[0]}")
        out = []
        for dm, v in zip(self.dims, raw):
            vals = np.asarray(dm.values)
            k = int(np.argmin(np.abs(vals - v)))
            if not math.isclose(vals[k], v, rel_tol=rtol, abs_tol=1e-12):
                raise DomainError(f"{v!r} is not an allowed value of {dm.name!r}")
            out.append(k)
        return tuple(out)

    # -- flat indexing (used for fast membership tests) --------------------

    def flat_index(self, points) -> np.ndarray:
        pts = self.check(points)
        return np.ravel_multi_index(tuple(pts.T), tuple(self.sizes))

    def unflat_index(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        return np.stack(np.unravel_index(idx, tuple(self.sizes)), axis=1).astype(np.int64)

    # -- sampling ----------------------------------------------------------

    def random_point(self, rng: np.random.Generator) -> tuple[int, ...]:
        """Draw one point uniformly from the lattice."""
        return tuple(int(c) for c in rng.integers(0, self.sizes))

    def random_points(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return rng.integers(0, self.sizes, size=(m, self.d))

    def reflect_into_bounds(self, coords) -> np.ndarray:
        """Mirror out-of-range coordinates back across the violated bound.

        A coordinate ``c < 0`` becomes ``-c`` and ``c > hi`` becomes
        ``2*hi - c``. Two reflections are tried; whatever is still outside
        (only possible on dimensions with one or two values) is clamped.
        Accepts a single point or an ``(m, d)`` array and returns the same
        rank.
        """
        arr = np.asarray(coords, dtype=np.int64)
        single = arr.ndim == 1
        pts = self.as_points(arr).copy()
        hi = self.upper
        for _ in range(2):
            pts = np.where(pts < 0, -pts, pts)
            pts = np.where(pts > hi, 2 * hi - pts, pts)
        pts = np.clip(pts, 0, hi)
        return pts[0] if single else pts

    def enumerate(self) -> np.ndarray:
        """All lattice points in row-major order; only for small domains."""
        if self.cardinality > 10**7:
            raise DomainError(f"refusing to enumerate {self.cardinality} points")
        return self.unflat_index(np.arange(self.cardinality))

    def iter_points(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(s) for s in self.sizes))

    # -- sub-lattices --------------------------------------------------------

    def subdomain(self, keep) -> "IntegerDomain":
        """Domain restricted to the dimensions selected by ``keep``."""
        keep = np.asarray(keep)
        idx = np.flatnonzero(keep) if keep.dtype == bool else keep
        return IntegerDomain(tuple(self.dims[i] for i in idx))


def build_domain(specs: Sequence[DimensionSpec]) -> IntegerDomain:
    """Build a lattice from an ordered list of dimension specs."""
    specs = list(specs)
    if not specs:
        raise DomainError("empty dimension list")
    return IntegerDomain(tuple(specs))


def mlp_table_domain() -> IntegerDomain:
    """The full six-dimensional MLP hyperparameter lattice.

    epochs 50..500/50, dropout 0..0.5/0.1, batch 50..200/5, layers 1..6,
    lag 30..365/5, nodes 5..50/5.
    """
    return build_domain(
        [
            DimensionSpec.from_range("epochs", 50, 500, 50),
            DimensionSpec.from_range("dropout", 0.0, 0.5, 0.1),
            DimensionSpec.from_range("batch", 50, 200, 5),
            DimensionSpec.from_range("layers", 1, 6, 1),
            DimensionSpec.from_range("lag", 30, 365, 5),
            DimensionSpec.from_range("nodes", 5, 50, 5),
        ]
    )
