"""Point configurations, box windows, and reproducible randomness.

Points are plain float64 coordinate rows; a :class:`Configuration` keeps them
in canonical (lexicographic) order so that equal point sets compare bit-exact.
Windows are axis-aligned boxes with the half-open membership convention
(lower faces inclusive, upper faces exclusive) so that a grid of boxes
partitions points uniquely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Window", "Configuration", "Seed", "sample_poisson"]


def _as_coords(x, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected point array of shape (n, d), got {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"dimension mismatch: expected d={dim}, got d={arr.shape[1]}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    return arr


class Window:
    """Axis-aligned box ``[lower, upper)`` with positive volume."""

    __slots__ = ("lower", "upper")

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(upper, dtype=np.float64))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower/upper must be vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("window bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("window must satisfy lower < upper component-wise")
        self.lower = lower
        self.upper = upper
        self.lower.flags.writeable = False
        self.upper.flags.writeable = False

    @classmethod
    def cube(cls, n: float, dim: int = 2) -> "Window":
        """The canonical box ``[-n, n]^dim``."""
        if n <= 0:
            raise ValueError("cube half-side must be positive")
        return cls([-float(n)] * dim, [float(n)] * dim)

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    @property
    def sides(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def dilate(self, rho: float) -> "Window":
        """Grow every face outward by ``rho >= 0``."""
        if rho < 0:
            raise ValueError("dilation radius must be nonnegative")
        return Window(self.lower - rho, self.upper + rho)

    def erode(self, rho: float) -> "Window":
        """Shrink every face inward by ``rho``; exact inverse of :meth:`dilate`."""
        if rho < 0:
            raise ValueError("erosion radius must be nonnegative")
        if rho >= 0.5 * float(np.min(self.sides)):
            raise ValueError("erosion radius must be below half the smallest side")
        return Window(self.lower + rho, self.upper - rho)

    def translate(self, u) -> "Window":
        u = np.asarray(u, dtype=np.float64)
        return Window(self.lower + u, self.upper + u)

    def contains(self, points) -> np.ndarray:
        """Half-open membership mask: lower faces in, upper faces out."""
        pts = _as_coords(points, self.dimension)
        return np.all(pts >= self.lower, axis=1) & np.all(pts < self.upper, axis=1)

    def __eq__(self, other):
        return (
            isinstance(other, Window)
            and self.lower.shape == other.lower.shape
            and bool(np.all(self.lower == other.lower))
            and bool(np.all(self.upper == other.upper))
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self):
        return f"Window({self.lower.tolist()}, {self.upper.tolist()})"


def _canonical_order(points: np.ndarray) -> np.ndarray:
    """Indices sorting rows lexicographically (first coordinate major)."""
    if points.shape[0] <= 1:
        return np.arange(points.shape[0])
    return np.lexsort(points.T[::-1])


class Configuration:
    """A finite set of distinct points held in canonical lexicographic order."""

    __slots__ = ("points",)

    def __init__(self, points, dim: int | None = None, _presorted: bool = False):
        pts = np.array(_as_coords(points, dim) if not _presorted else points,
                       dtype=np.float64, copy=True)
        if pts.shape[0] == 0 and dim is None:
            raise ValueError("empty configuration needs an explicit dim")
        if pts.shape[0] == 0:
            pts = pts.reshape(0, dim)
        elif not _presorted:
            pts = pts[_canonical_order(pts)]
            if pts.shape[0] > 1 and np.any(np.all(pts[1:] == pts[:-1], axis=1)):
                raise ValueError("configuration contains duplicate points")
        pts.flags.writeable = False
        self.points = pts

    @classmethod
    def empty(cls, dim: int) -> "Configuration":
        return cls(np.zeros((0, dim)), dim=dim)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.points.shape[0]

    def restrict(self, window: Window) -> "Configuration":
        """Points lying in the window (half-open convention); order preserved."""
        mask = window.contains(self.points) if len(self) else np.zeros(0, bool)
        return Configuration(self.points[mask], dim=self.dimension, _presorted=True)

    def count_in(self, window: Window) -> int:
        if not len(self):
            return 0
        return int(np.count_nonzero(window.contains(self.points)))

    def translate(self, u) -> "Configuration":
        u = np.asarray(u, dtype=np.float64)
        return Configuration(self.points + u, dim=self.dimension)

    def union(self, x) -> "Configuration":
        x = _as_coords(x, self.dimension)
        return Configuration(np.vstack([self.points, x]), dim=self.dimension)

    def difference(self, x) -> "Configuration":
        """Remove the exact point(s) ``x``; missing points are an error."""
        x = _as_coords(x, self.dimension)
        keep = np.ones(len(self), dtype=bool)
        for row in x:
            hit = np.where(keep & np.all(self.points == row, axis=1))[0]
            if hit.size == 0:
                raise ValueError("point not present in configuration")
            keep[hit[0]] = False
        return Configuration(self.points[keep], dim=self.dimension, _presorted=True)

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.points.shape == other.points.shape
            and bool(np.all(self.points == other.points))
        )

    def __hash__(self):
        return hash(self.points.tobytes())

    def __repr__(self):
        return f"Configuration(n={len(self)}, d={self.dimension})"

    # Plain-text serialization: first line "d N", then one point per line with
    # 17 significant digits (lossless for float64).
    def to_text(self) -> str:
        lines = [f"{self.dimension} {len(self)}"]
        for row in self.points:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Configuration":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty configuration text")
        head = lines[0].split()
        if len(head) != 2:
            raise ValueError("configuration header must be 'd N'")
        dim, n = int(head[0]), int(head[1])
        if len(lines) - 1 != n:
            raise ValueError(f"expected {n} point lines, found {len(lines) - 1}")
        pts = np.array([[float(v) for v in ln.split()] for ln in lines[1:]],
                       dtype=np.float64).reshape(n, dim)
        return cls(pts, dim=dim)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "Configuration":
        with open(path) as fh:
            return cls.from_text(fh.read())


_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> int:
    z = (state + _SPLITMIX_GAMMA) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Seed:
    """A (value, stream) pair selecting one reproducible random stream.

    The same pair always reproduces the same draws bit-for-bit.  Derived
    streams for parallel workers come from :meth:`derive`, which mixes integer
    keys into the stream word, so chains, temperatures, and volumes each own a
    private counter-based (Philox) stream.
    """

    value: int
    stream: int = 0

    def __post_init__(self):
        for name in ("value", "stream"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer")

    def derive(self, *keys: int) -> "Seed":
        s = self.stream
        for k in keys:
            s = _splitmix64(s ^ _splitmix64(int(k)))
        return Seed(self.value, s)

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=[self.value, self.stream])

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(self.seed_sequence())

    def generator(self) -> np.random.Generator:
        return np.random.Generator(self.bit_generator())


def sample_poisson(window: Window, intensity: float, seed: Seed) -> Configuration:
    """Homogeneous Poisson sample on a window: Poisson count, uniform points."""
    if not (intensity > 0 and math.isfinite(intensity)):
        raise ValueError("intensity must be positive and finite")
    rng = seed.generator()
    n = int(rng.poisson(intensity * window.volume))
    pts = window.lower + rng.random((n, window.dimension)) * window.sides
    return Configuration(pts, dim=window.dimension)
