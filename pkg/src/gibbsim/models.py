"""Energy functionals on finite point configurations.

Two families are provided: pairwise potentials with compact support (ideal
gas, Strauss, hard core, truncated-and-shifted Lennard-Jones) and the planar
Quermass interaction, a linear combination of the area, perimeter, and Euler
characteristic of the union of equal discs around the points.

Every model is stationary, hereditary, non-degenerate (H(empty) = 0), stable
with a declared constant ``A`` (H >= -A N, enforced statistically by the test
suite), and has a finite interaction range ``R``: the conditional energy of a
window depends only on points within distance R of it.  Infinite energies
(hard cores) follow the convention ``inf - inf = 0`` in conditional energies.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.spatial import cKDTree

from .core import Configuration, Window
from . import minkowski

__all__ = [
    "EnergyModel",
    "PairwiseModel",
    "IdealGas",
    "Strauss",
    "HardCore",
    "LennardJones",
    "Quermass",
    "build_model",
    "MODEL_IDS",
]


def _unit_ball_volume(dim: int) -> float:
    return {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[dim]


class EnergyModel(ABC):
    """Contract shared by all energy functionals."""

    id: str
    dimension: int
    interaction_range: float
    stability_constant: float
    hard_core: bool

    @abstractmethod
    def total_energy(self, omega: Configuration) -> float:
        """H(omega); +inf only for hard-core models."""

    @abstractmethod
    def insertion_energy(self, omega: Configuration, x) -> float:
        """h(x | omega) = H(omega + x) - H(omega); the caller supplies every
        point within the interaction range of x."""

    def local_energy(self, omega_halo: Configuration, window: Window) -> float:
        """Conditional energy of the window given the exterior.

        The halo must contain all points within the interaction range of the
        window; farther points are clipped away so any valid halo gives a
        bit-identical value.
        """
        self._check_dim(omega_halo)
        clip = omega_halo.restrict(window.dilate(self.interaction_range))
        pts = clip.points
        inside = window.contains(pts) if len(clip) else np.zeros(0, bool)
        outside = Configuration(pts[~inside], dim=self.dimension, _presorted=True)
        a = self.total_energy(clip)
        b = self.total_energy(outside)
        if math.isinf(a) and math.isinf(b):
            return 0.0
        return a - b

    def boundary_term(self, omega_halo: Configuration, n: float) -> float:
        """H_window(omega) - H(omega restricted to the window) on cube(n)."""
        window = Window.cube(n, self.dimension)
        a = self.local_energy(omega_halo, window)
        b = self.total_energy(omega_halo.restrict(window))
        if math.isinf(a) and math.isinf(b):
            return 0.0
        return a - b

    def _check_dim(self, omega: Configuration) -> None:
        if omega.dimension != self.dimension:
            raise ValueError(
                f"model is {self.dimension}-dimensional, configuration is "
                f"{omega.dimension}-dimensional")

    @abstractmethod
    def params(self) -> dict:
        """Parameter list for provenance stamping."""

    def describe(self) -> str:
        inner = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.params().items())
        return f"{self.id}({inner})"

    def kernel_spec(self) -> dict | None:
        """Parameters for the compiled pairwise chain kernel, if applicable."""
        return None


class PairwiseModel(EnergyModel):
    """H(omega) = z N(omega) + sum over pairs of phi(|x - y|).

    ``phi`` has compact support: phi(r) = 0 exactly for r > R, and a pair at
    distance exactly R interacts (closed ball).  Piecewise-constant potentials
    accumulate energy as ``beta * pair_count`` so pairwise energies are exact
    integer multiples, reproducible across evaluation orders.
    """

    #: beta for indicator potentials (phi = beta on [0, R]), else None
    indicator_beta: float | None = None

    def __init__(self, activity: float, dimension: int = 2):
        if not (activity > 0 and math.isfinite(activity)):
            raise ValueError("activity must be positive and finite")
        self.activity = float(activity)
        if dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2, or 3")
        self.dimension = dimension

    def pair_phi(self, d2: float) -> float:
        """Potential evaluated at a squared pair distance (d2 <= R^2)."""
        raise NotImplementedError

    def phi_integral(self) -> float:
        """Integral of phi over R^d (used by closed-form Poisson energies)."""
        raise NotImplementedError

    # -- pair enumeration ---------------------------------------------------

    def _pairs(self, pts: np.ndarray):
        """Sorted (i, j) pairs with |x_i - x_j| <= R, plus squared distances.

        Candidates come from a KD-tree; membership is decided by the exact
        comparison d2 <= R*R so the fast path and the O(N^2) reference agree
        bit-for-bit.
        """
        R = self.interaction_range
        n = pts.shape[0]
        if n < 2 or R <= 0:
            return np.zeros((0, 2), dtype=np.intp), np.zeros(0)
        tree = cKDTree(pts)
        cand = tree.query_pairs(R * (1.0 + 1e-12) + 1e-300, output_type="ndarray")
        if cand.shape[0] == 0:
            return np.zeros((0, 2), dtype=np.intp), np.zeros(0)
        cand.sort(axis=1)
        order = np.lexsort((cand[:, 1], cand[:, 0]))
        cand = cand[order]
        diff = pts[cand[:, 0]] - pts[cand[:, 1]]
        d2 = np.sum(diff * diff, axis=1)
        keep = d2 <= R * R
        return cand[keep], d2[keep]

    def _pair_sum(self, d2_values: np.ndarray) -> float:
        k = d2_values.shape[0]
        if k == 0:
            return 0.0
        beta = self.indicator_beta
        if beta is not None:
            return beta * k
        # sequential accumulation in sorted-pair order is the canonical
        # summation; the O(N^2) reference uses the identical order
        acc = 0.0
        for v in d2_values:
            acc += self.pair_phi(float(v))
        return acc

    # -- operations ----------------------------------------------------------

    def total_energy(self, omega: Configuration) -> float:
        self._check_dim(omega)
        n = len(omega)
        if n == 0:
            return 0.0
        _, d2 = self._pairs(omega.points)
        return self.activity * n + self._pair_sum(d2)

    def insertion_energy(self, omega: Configuration, x) -> float:
        self._check_dim(omega)
        x = np.asarray(x, dtype=np.float64).reshape(self.dimension)
        if len(omega) == 0:
            return self.activity
        diff = omega.points - x
        d2 = np.sum(diff * diff, axis=1)
        if np.any(d2 == 0.0):
            raise ValueError("insertion point already present")
        R = self.interaction_range
        near = d2[d2 <= R * R]
        return self.activity + self._pair_sum(near)

    def local_energy(self, omega_halo: Configuration, window: Window) -> float:
        self._check_dim(omega_halo)
        clip = omega_halo.restrict(window.dilate(self.interaction_range))
        pts = clip.points
        inside = window.contains(pts) if len(clip) else np.zeros(0, bool)
        n_in = int(np.count_nonzero(inside))
        pairs, d2 = self._pairs(pts)
        if pairs.shape[0]:
            touching = inside[pairs[:, 0]] | inside[pairs[:, 1]]
            outside_pairs = d2[~touching]
            if math.isinf(self._pair_sum(outside_pairs)):
                return 0.0  # infeasible exterior: inf - inf convention
            return self.activity * n_in + self._pair_sum(d2[touching])
        return self.activity * n_in

    def energy_from_stats(self, n: int, pair_stat: float) -> float:
        """Energy from the chain's sufficient statistics (N, pair term).

        The pair term is the interacting-pair count for indicator potentials
        (so the energy is exact) and the running potential sum otherwise.
        """
        base = self.activity * n
        if self.indicator_beta is not None:
            if pair_stat == 0.0:
                return base
            return base + self.indicator_beta * pair_stat
        return base + pair_stat

    def kernel_spec(self) -> dict:
        return {
            "kind": self._kernel_kind,
            "dim": self.dimension,
            "z": self.activity,
            "range": self.interaction_range,
            "beta": 0.0,
            "core2": 0.0,
            "eps4": 0.0,
            "sigma2": 0.0,
            "shift": 0.0,
        }

    _kernel_kind = 0


class IdealGas(PairwiseModel):
    """Non-interacting reference: H = z N."""

    id = "ideal"
    indicator_beta = 0.0
    _kernel_kind = 0

    def __init__(self, activity: float = 1.0, dimension: int = 2):
        super().__init__(activity, dimension)
        self.interaction_range = 0.0
        self.stability_constant = 0.0
        self.hard_core = False

    def pair_phi(self, d2: float) -> float:
        return 0.0

    def phi_integral(self) -> float:
        return 0.0

    def params(self) -> dict:
        return {"z": self.activity, "d": self.dimension}


class Strauss(PairwiseModel):
    """Strauss potential: phi = beta on [0, R], 0 beyond.

    ``beta = inf`` turns the model into a hard core at distance R.  With
    beta >= 0 the energy is nonnegative, so the stability constant is 0; the
    potential is superstable (nonnegative with a repulsive bump at 0).
    """

    id = "strauss"
    _kernel_kind = 1

    def __init__(self, activity: float = 1.0, beta: float = 1.0,
                 interaction_range: float = 0.5, dimension: int = 2):
        super().__init__(activity, dimension)
        if not (beta >= 0):
            raise ValueError("beta must be nonnegative (stability)")
        if not (interaction_range > 0 and math.isfinite(interaction_range)):
            raise ValueError("interaction range must be positive")
        self.beta = float(beta)
        self.interaction_range = float(interaction_range)
        self.indicator_beta = self.beta
        self.stability_constant = 0.0
        self.hard_core = math.isinf(self.beta)

    def pair_phi(self, d2: float) -> float:
        return self.beta

    def phi_integral(self) -> float:
        R = self.interaction_range
        return self.beta * _unit_ball_volume(self.dimension) * R ** self.dimension

    def params(self) -> dict:
        return {"z": self.activity, "beta": self.beta,
                "R": self.interaction_range, "d": self.dimension}

    def kernel_spec(self) -> dict:
        spec = super().kernel_spec()
        if self.hard_core:
            spec["kind"] = HardCore._kernel_kind
            spec["core2"] = self.interaction_range ** 2
        else:
            spec["beta"] = self.beta
        return spec


class HardCore(PairwiseModel):
    """Hard exclusion: phi = +inf on [0, delta], so H = z N on feasible sets."""

    id = "hardcore"
    indicator_beta = math.inf
    _kernel_kind = 2

    def __init__(self, activity: float = 1.0, core: float = 0.2,
                 dimension: int = 2):
        super().__init__(activity, dimension)
        if not (core > 0 and math.isfinite(core)):
            raise ValueError("core distance must be positive")
        self.core = float(core)
        self.interaction_range = self.core
        self.stability_constant = 0.0
        self.hard_core = True

    def pair_phi(self, d2: float) -> float:
        return math.inf

    def phi_integral(self) -> float:
        return math.inf

    def params(self) -> dict:
        return {"z": self.activity, "delta": self.core, "d": self.dimension}

    def kernel_spec(self) -> dict:
        spec = super().kernel_spec()
        spec["core2"] = self.core ** 2
        return spec


class LennardJones(PairwiseModel):
    """Lennard-Jones 12-6, truncated at the cutoff and shifted to 0 there.

    Shifting preserves the exact compact support without a jump at the
    cutoff.  The declared stability constant is a conservative packing bound
    ``0.5 * m * |phi_min|`` with m the number of sigma-separated points that
    fit inside the interaction ball; it is validated statistically, not
    symbolically.
    """

    id = "lj-trunc"
    _kernel_kind = 3

    def __init__(self, activity: float = 1.0, epsilon: float = 1.0,
                 sigma: float = 0.3, cutoff: float = 0.9,
                 dimension: int = 2, stability_constant: float | None = None):
        super().__init__(activity, dimension)
        if min(epsilon, sigma, cutoff) <= 0 or cutoff <= sigma:
            raise ValueError("need epsilon, sigma > 0 and cutoff > sigma")
        self.epsilon = float(epsilon)
        self.sigma = float(sigma)
        self.cutoff = float(cutoff)
        self.interaction_range = self.cutoff
        sr6 = (self.sigma / self.cutoff) ** 6
        self.shift = 4.0 * self.epsilon * (sr6 * sr6 - sr6)
        self.hard_core = False
        if stability_constant is None:
            rstar = 2.0 ** (1.0 / 6.0) * self.sigma
            phi_min = (-self.epsilon - self.shift) if rstar <= self.cutoff else 0.0
            m = int(math.ceil((1.0 + 2.0 * self.cutoff / self.sigma) ** dimension))
            stability_constant = 0.5 * m * abs(phi_min)
        self.stability_constant = float(stability_constant)

    def pair_phi(self, d2: float) -> float:
        sr2 = (self.sigma * self.sigma) / d2
        sr6 = sr2 * sr2 * sr2
        return 4.0 * self.epsilon * (sr6 * sr6 - sr6) - self.shift

    def phi_integral(self) -> float:
        # r^-12 divergence at the origin is not integrable in d <= 3
        return math.inf

    def params(self) -> dict:
        return {"z": self.activity, "eps": self.epsilon, "sigma": self.sigma,
                "rcut": self.cutoff, "d": self.dimension}

    def kernel_spec(self) -> dict:
        spec = super().kernel_spec()
        spec["eps4"] = 4.0 * self.epsilon
        spec["sigma2"] = self.sigma * self.sigma
        spec["shift"] = self.shift
        return spec


class Quermass(EnergyModel):
    """Quermass interaction on unions of radius-r discs (planar only).

    H = theta1 * area + theta2 * perimeter + theta3 * euler of the union of
    discs B(x, r) around the points.  The interaction range is exactly 2 r.
    Stability follows from the per-point bounds area <= pi r^2 N,
    perimeter <= 2 pi r N, |euler| <= 3 N.
    """

    id = "quermass"

    def __init__(self, theta1: float = 0.0, theta2: float = 0.0,
                 theta3: float = 0.0, disc_radius: float = 0.5):
        if not (disc_radius > 0 and math.isfinite(disc_radius)):
            raise ValueError("disc radius must be positive")
        for name, v in (("theta1", theta1), ("theta2", theta2), ("theta3", theta3)):
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        self.theta1 = float(theta1)
        self.theta2 = float(theta2)
        self.theta3 = float(theta3)
        self.disc_radius = float(disc_radius)
        self.dimension = 2
        self.interaction_range = 2.0 * self.disc_radius
        r = self.disc_radius
        self.stability_constant = (abs(theta1) * math.pi * r * r
                                   + abs(theta2) * 2.0 * math.pi * r
                                   + 3.0 * abs(theta3))
        self.hard_core = False

    def functionals(self, omega: Configuration) -> minkowski.MinkowskiSummary:
        return minkowski.minkowski_functionals(
            minkowski.DiscUnion(omega, self.disc_radius))

    def total_energy(self, omega: Configuration) -> float:
        self._check_dim(omega)
        if len(omega) == 0:
            return 0.0
        s = self.functionals(omega)
        return self.theta1 * s.area + self.theta2 * s.perimeter + self.theta3 * s.euler

    def insertion_energy(self, omega: Configuration, x) -> float:
        self._check_dim(omega)
        x = np.asarray(x, dtype=np.float64).reshape(2)
        pts = omega.points
        need_euler = self.theta3 != 0.0
        reach = (6.0 if need_euler else 2.0) * self.disc_radius
        if len(omega):
            diff = pts - x
            d2 = np.sum(diff * diff, axis=1)
            if np.any(d2 == 0.0):
                raise ValueError("insertion point already present")
            local = pts[d2 <= reach * reach]
        else:
            local = pts
        da, dp, de = minkowski.disc_insertion_delta(local, x, self.disc_radius,
                                                    need_euler)
        return self.theta1 * da + self.theta2 * dp + self.theta3 * de

    def cube_energy_contribution(self, omega_halo: Configuration, k) -> float:
        """Energy share of the unit cube at integer corner k.

        The share is theta1 * (clipped area) + theta2 * (arc boundary length
        inside the cube) + theta3 * (clipped Euler characteristic minus the
        component count on the cube's left-bottom double edge); summed over a
        grid of cubes it reproduces the total energy up to a boundary
        remainder proportional to the number of points near the window rim.
        """
        self._check_dim(omega_halo)
        k = np.asarray(k, dtype=np.float64).reshape(2)
        box = Window(k, k + 1.0)
        s = minkowski.clipped_functionals(
            minkowski.DiscUnion(omega_halo, self.disc_radius), box)
        return (self.theta1 * s.area + self.theta2 * s.arc_length
                + self.theta3 * (s.euler - s.double_edge_components))

    def params(self) -> dict:
        return {"theta1": self.theta1, "theta2": self.theta2,
                "theta3": self.theta3, "r": self.disc_radius}


MODEL_IDS = {
    "ideal": IdealGas,
    "strauss": Strauss,
    "hardcore": HardCore,
    "lj-trunc": LennardJones,
    "quermass": Quermass,
}


def build_model(model_id: str, **params) -> EnergyModel:
    """Construct a model from its stable string identifier."""
    try:
        cls = MODEL_IDS[model_id]
    except KeyError:
        raise ValueError(f"unknown model id {model_id!r}; "
                         f"known: {sorted(MODEL_IDS)}") from None
    return cls(**params)
