"""Birth-death-move Metropolis-Hastings chains for conditional Gibbs targets.

A :class:`Target` fixes the unnormalized density exp(-theta * H_window) with
free or fixed boundary against the unit Poisson reference.  Each step picks
birth, death, or move with probability 1/3; acceptance ratios only need
insertion energies, never the normalization.  Hard-core infinities give
acceptance zero at every theta (the tempering scales the finite part of the
energy only).

Pairwise models run on the compiled kernel (or its pure-Python twin) selected
in :mod:`gibbsim._kernels`; the Quermass model runs a Python chain that
computes insertion energies from local disc geometry.  Both are deterministic
functions of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, minkowski
from .core import Configuration, Seed, Window
from .diagnostics import effective_sample_size, mcmc_standard_error, split_rhat
from .models import EnergyModel, PairwiseModel, Quermass

__all__ = [
    "Target",
    "McmcParams",
    "ChainState",
    "ChainDiagnostics",
    "step",
    "run",
    "sample_free_boundary",
    "gnz_residual",
    "UnitTestFunction",
    "NeighborCount",
]

KERNEL_BACKEND = _kernels.BACKEND


class Target:
    """Finite-volume conditional Gibbs target at interpolation weight theta."""

    def __init__(self, model: EnergyModel, window: Window,
                 boundary: Configuration | None = None, theta: float = 1.0):
        if window.dimension != model.dimension:
            raise ValueError("window and model dimensions differ")
        if not (0.0 <= theta <= 1.0):
            raise ValueError("theta must lie in [0, 1]")
        if boundary is not None and len(boundary):
            if boundary.dimension != model.dimension:
                raise ValueError("boundary dimension mismatch")
            inside = window.contains(boundary.points)
            if np.any(inside):
                raise ValueError("boundary points must lie outside the window")
            halo = window.dilate(model.interaction_range)
            boundary = boundary.restrict(halo)  # farther points are irrelevant
        self.model = model
        self.window = window
        self.boundary = boundary
        self.theta = float(theta)

    @property
    def boundary_points(self) -> np.ndarray:
        if self.boundary is None or len(self.boundary) == 0:
            return np.zeros((0, self.model.dimension))
        return self.boundary.points

    def describe(self) -> str:
        mode = "free" if self.boundary is None or not len(self.boundary) else "fixed"
        return f"{self.model.describe()}|{mode}|theta={self.theta:g}"


@dataclass
class McmcParams:
    """Chain-length and proposal parameters."""

    burn_in: int = 20_000
    samples: int = 500
    thin: int = 20
    chains: int = 1
    kick_scale: float | None = None  # default: half the interaction range

    def __post_init__(self):
        if min(self.burn_in, self.samples, self.thin) < 1 or self.chains < 1:
            raise ValueError("burn_in, samples, thin, chains must be >= 1")

    def resolve_kick(self, model: EnergyModel) -> float:
        if self.kick_scale is not None:
            return float(self.kick_scale)
        r = model.interaction_range
        return 0.5 * r if r > 0 else 0.5


class _QuermassChain:
    """Python chain for the Quermass model (same draw protocol as the kernel)."""

    def __init__(self, model: Quermass, lower, upper, boundary, theta, kick,
                 bit_generator, acceptance_bias=1.0):
        from ._kernels._pychain import _Grid

        self.model = model
        self.dim = 2
        self.lower = [float(v) for v in lower]
        self.upper = [float(v) for v in upper]
        self.side = [self.upper[a] - self.lower[a] for a in range(2)]
        self.vol = self.side[0] * self.side[1]
        self.theta = float(theta)
        self.kick = float(kick)
        self.bias = float(acceptance_bias)
        self.rng = np.random.Generator(bit_generator)
        self.reach = model.interaction_range  # 2 r
        self.query_radius = (6.0 if model.theta3 != 0.0 else 2.0) * model.disc_radius
        self.grid = _Grid(self.lower, self.upper, self.reach, 2)
        boundary = np.asarray(boundary, dtype=np.float64).reshape(-1, 2)
        self.nb = boundary.shape[0]
        self.bx = [float(v) for v in boundary[:, 0]]
        self.by = [float(v) for v in boundary[:, 1]]
        for i in range(self.nb):
            self.grid.insert(i, (self.bx[i], self.by[i]))
        self.xs: list[float] = []
        self.ys: list[float] = []
        self.n = 0
        self.energy = 0.0  # running H_window(residents + boundary)
        self.pair_stat = 0.0  # mirrors the kernel trace slot (holds energy)
        self.proposals = [0, 0, 0]
        self.accepts = [0, 0, 0]
        self.step_count = 0

    def _neighbors(self, x, exclude_slot):
        rad = self.query_radius
        lo0, hi0 = self.grid.cell_range(x[0], 0, rad)
        lo1, hi1 = self.grid.cell_range(x[1], 1, rad)
        exclude = -1 if exclude_slot < 0 else self.nb + exclude_slot
        out = []
        r2 = rad * rad
        for c0 in range(lo0, hi0 + 1):
            for c1 in range(lo1, hi1 + 1):
                pid = self.grid.head[c0 * self.grid.m[1] + c1]
                while pid != -1:
                    if pid != exclude:
                        if pid < self.nb:
                            px, py = self.bx[pid], self.by[pid]
                        else:
                            slot = pid - self.nb
                            px, py = self.xs[slot], self.ys[slot]
                        dx, dy = x[0] - px, x[1] - py
                        if dx * dx + dy * dy <= r2:
                            out.append((px, py))
                    pid = self.grid.nxt[pid]
        return np.array(out, dtype=np.float64).reshape(-1, 2)

    def insertion_h(self, x, exclude_slot):
        local = self._neighbors(x, exclude_slot)
        m = self.model
        da, dp, de = minkowski.disc_insertion_delta(
            local, x, m.disc_radius, m.theta3 != 0.0)
        return m.theta1 * da + m.theta2 * dp + m.theta3 * de

    def seed_initial(self, init):
        init = np.asarray(init, dtype=np.float64).reshape(-1, 2)
        for row in init:
            x = (float(row[0]), float(row[1]))
            h = self.insertion_h(x, -1)
            self._insert(x, h)

    def _insert(self, x, h):
        slot = self.n
        if slot < len(self.xs):
            self.xs[slot], self.ys[slot] = x[0], x[1]
        else:
            self.xs.append(x[0])
            self.ys.append(x[1])
        self.grid.insert(self.nb + slot, x)
        self.n += 1
        self.energy += h
        self.pair_stat = self.energy

    def _delete(self, slot, h):
        last = self.n - 1
        self.grid.remove(self.nb + slot)
        if slot != last:
            self.grid.remove(self.nb + last)
            self.xs[slot], self.ys[slot] = self.xs[last], self.ys[last]
            self.grid.insert(self.nb + slot, (self.xs[slot], self.ys[slot]))
        self.n = last
        self.energy -= h
        self.pair_stat = self.energy

    def step(self):
        rng = self.rng
        u = rng.random()
        if u < 1.0 / 3.0:
            self.proposals[0] += 1
            x = (self.lower[0] + rng.random() * self.side[0],
                 self.lower[1] + rng.random() * self.side[1])
            h = self.insertion_h(x, -1)
            ratio = self.vol / (self.n + 1.0) * math.exp(-self.theta * h) * self.bias
            if rng.random() < ratio:
                self._insert(x, h)
                self.accepts[0] += 1
        elif u < 2.0 / 3.0:
            self.proposals[1] += 1
            if self.n > 0:
                slot = int(rng.random() * self.n)
                x = (self.xs[slot], self.ys[slot])
                h = self.insertion_h(x, slot)
                ratio = self.n / self.vol * math.exp(self.theta * h)
                if rng.random() < ratio:
                    self._delete(slot, h)
                    self.accepts[1] += 1
        else:
            self.proposals[2] += 1
            if self.n > 0:
                slot = int(rng.random() * self.n)
                x_old = (self.xs[slot], self.ys[slot])
                nx = x_old[0] + self.kick * rng.standard_normal()
                ny = x_old[1] + self.kick * rng.standard_normal()
                inside = (self.lower[0] <= nx < self.upper[0]
                          and self.lower[1] <= ny < self.upper[1])
                ratio = 0.0
                h_new = h_old = 0.0
                if inside:
                    h_new = self.insertion_h((nx, ny), slot)
                    h_old = self.insertion_h(x_old, slot)
                    ratio = math.exp(-self.theta * (h_new - h_old))
                if rng.random() < ratio:
                    self.grid.remove(self.nb + slot)
                    self.xs[slot], self.ys[slot] = nx, ny
                    self.grid.insert(self.nb + slot, (nx, ny))
                    self.energy += h_new - h_old
                    self.pair_stat = self.energy
                    self.accepts[2] += 1
        self.step_count += 1

    def snapshot(self):
        pts = np.empty((self.n, 2))
        pts[:, 0] = self.xs[: self.n]
        pts[:, 1] = self.ys[: self.n]
        return pts

    def get_tallies(self):
        return (np.array(self.proposals, dtype=np.int64),
                np.array(self.accepts, dtype=np.int64))

    def run(self, n_steps, burn_in, thin, keep_samples):
        n_records = max(0, (n_steps - burn_in) // thin)
        n_trace = np.zeros(n_records, dtype=np.int64)
        pair_trace = np.zeros(n_records, dtype=np.float64)
        prop_trace = np.zeros((n_records, 3), dtype=np.int64)
        acc_trace = np.zeros((n_records, 3), dtype=np.int64)
        samples = [] if keep_samples else None
        rec = 0
        for s in range(1, n_steps + 1):
            self.step()
            if s > burn_in and (s - burn_in) % thin == 0:
                n_trace[rec] = self.n
                pair_trace[rec] = self.energy
                prop_trace[rec] = self.proposals
                acc_trace[rec] = self.accepts
                if keep_samples:
                    samples.append(self.snapshot())
                rec += 1
        return {
            "n_trace": n_trace,
            "pair_trace": pair_trace,
            "proposal_trace": prop_trace,
            "accept_trace": acc_trace,
            "samples": samples,
            "final": self.snapshot(),
            "final_pair_stat": self.energy,
            "proposals": np.array(self.proposals, dtype=np.int64),
            "accepts": np.array(self.accepts, dtype=np.int64),
        }


def _make_chain(target: Target, seed: Seed, kick: float,
                acceptance_bias: float = 1.0):
    model = target.model
    bitgen = seed.bit_generator()
    spec = model.kernel_spec()
    if spec is not None:
        return _kernels.new_chain(
            spec["kind"], spec["dim"], spec["z"], spec["range"], spec["beta"],
            spec["core2"], spec["eps4"], spec["sigma2"], spec["shift"],
            target.window.lower, target.window.upper, target.boundary_points,
            target.theta, target.theta, kick, bitgen, acceptance_bias)
    if isinstance(model, Quermass):
        return _QuermassChain(model, target.window.lower, target.window.upper,
                              target.boundary_points, target.theta, kick,
                              bitgen, acceptance_bias)
    raise TypeError(f"no sampler for model {model.id!r}")


def _trace_energy(model: EnergyModel, n_trace, pair_trace):
    if isinstance(model, PairwiseModel):
        return np.array([model.energy_from_stats(int(n), float(p))
                         for n, p in zip(n_trace, pair_trace)])
    return np.asarray(pair_trace, dtype=np.float64).copy()


class ChainState:
    """One chain plus its target; exposes the current configuration and the
    cached conditional energy (revalidate with :meth:`check_energy`)."""

    def __init__(self, target: Target, seed: Seed, kick_scale: float | None = None,
                 acceptance_bias: float = 1.0, init: Configuration | None = None):
        self.target = target
        self.seed = seed
        kick = McmcParams(kick_scale=kick_scale).resolve_kick(target.model)
        self._chain = _make_chain(target, seed, kick, acceptance_bias)
        if init is not None and len(init):
            if np.any(~target.window.contains(init.points)):
                raise ValueError("initial configuration must lie in the window")
            self._chain.seed_initial(init.points)

    @property
    def current(self) -> Configuration:
        return Configuration(self._chain.snapshot(), dim=self.target.model.dimension)

    @property
    def cached_energy(self) -> float:
        model = self.target.model
        if isinstance(model, PairwiseModel):
            return model.energy_from_stats(self._chain.n, self._chain.pair_stat)
        return self._chain.pair_stat

    @property
    def step_count(self) -> int:
        return self._chain.step_count

    @property
    def tallies(self):
        return self._chain.get_tallies()

    def advance(self, steps: int = 1) -> "ChainState":
        for _ in range(steps):
            self._chain.step()
        return self

    def check_energy(self) -> tuple[float, float]:
        """(cached, freshly recomputed) conditional energy of the state."""
        model = self.target.model
        omega = self.current
        full = omega if self.target.boundary is None or not len(self.target.boundary) \
            else Configuration(np.vstack([omega.points,
                                          self.target.boundary.points]),
                               dim=model.dimension)
        fresh = model.local_energy(full, self.target.window)
        return self.cached_energy, fresh


def step(state: ChainState, target: Target | None = None) -> ChainState:
    """Advance the chain by one birth/death/move proposal."""
    if target is not None and target is not state.target:
        raise ValueError("state is bound to a different target")
    return state.advance(1)


class EstimatorError(RuntimeError):
    """A Monte Carlo estimator failed its own validity checks."""


@dataclass
class ChainDiagnostics:
    """Thinned traces, acceptance tallies, and convergence summaries."""

    n_traces: np.ndarray
    h_traces: np.ndarray
    proposal_traces: np.ndarray
    accept_traces: np.ndarray
    acceptance_rates: np.ndarray
    ess_n: float
    ess_h: float
    rhat_n: float
    rhat_h: float
    thin: int
    burn_in: int

    @property
    def n_chains(self) -> int:
        return self.n_traces.shape[0]

    @property
    def n_records(self) -> int:
        return self.n_traces.shape[1]


def run(target: Target, params: McmcParams, seed: Seed,
        keep_samples: bool = True, acceptance_bias: float = 1.0,
        init: Configuration | None = None):
    """Run ``params.chains`` independent chains; deterministic given the seed.

    Returns (samples, diagnostics) with samples concatenated chain-major.
    """
    model = target.model
    kick = params.resolve_kick(model)
    n_steps = params.burn_in + params.samples * params.thin
    all_samples: list[Configuration] = []
    n_traces, h_traces, prop_traces, acc_traces, rates = [], [], [], [], []
    for c in range(params.chains):
        chain_seed = seed.derive(c)
        chain = _make_chain(target, chain_seed, kick, acceptance_bias)
        if init is not None and len(init):
            chain.seed_initial(init.points)
        out = chain.run(n_steps, params.burn_in, params.thin, keep_samples)
        if not np.all(np.isfinite(out["pair_trace"])):
            raise EstimatorError(
                f"diverging energy in chain {c} for {target.describe()}")
        n_traces.append(out["n_trace"])
        h_traces.append(_trace_energy(model, out["n_trace"], out["pair_trace"]))
        prop_traces.append(out["proposal_trace"])
        acc_traces.append(out["accept_trace"])
        with np.errstate(invalid="ignore"):
            rates.append(out["accepts"] / np.maximum(out["proposals"], 1))
        if keep_samples:
            all_samples.extend(Configuration(p, dim=model.dimension)
                               for p in out["samples"])
    n_traces = np.array(n_traces)
    h_traces = np.array(h_traces)
    diag = ChainDiagnostics(
        n_traces=n_traces,
        h_traces=h_traces,
        proposal_traces=np.array(prop_traces),
        accept_traces=np.array(acc_traces),
        acceptance_rates=np.array(rates),
        ess_n=effective_sample_size(n_traces),
        ess_h=effective_sample_size(h_traces),
        rhat_n=split_rhat(n_traces) if params.chains > 1 else float("nan"),
        rhat_h=split_rhat(h_traces) if params.chains > 1 else float("nan"),
        thin=params.thin,
        burn_in=params.burn_in,
    )
    return all_samples, diag


def sample_free_boundary(model: EnergyModel, n: float, params: McmcParams,
                         seed: Seed, keep_samples: bool = True):
    """Free-boundary finite-volume Gibbs samples on cube(n) at theta = 1."""
    target = Target(model, Window.cube(n, model.dimension), None, 1.0)
    return run(target, params, seed, keep_samples=keep_samples)


# ---------------------------------------------------------------------------
# GNZ residuals: the equilibrium identity used as the correctness oracle
# ---------------------------------------------------------------------------

class UnitTestFunction:
    """g(x, omega) = 1: the residual compares E[N] with the weighted volume."""

    name = "unit"

    def sum_over_points(self, omega: Configuration) -> float:
        return float(len(omega))

    def eval_nodes(self, nodes: np.ndarray, omega: Configuration) -> np.ndarray:
        return np.ones(nodes.shape[0])


class NeighborCount:
    """g(x, omega) = number of points of omega within distance R of x."""

    name = "neighbors"

    def __init__(self, radius: float):
        self.radius = float(radius)

    def _count(self, x, pts) -> int:
        if pts.shape[0] == 0:
            return 0
        diff = pts - x
        d2 = np.sum(diff * diff, axis=1)
        return int(np.count_nonzero(d2 <= self.radius * self.radius))

    def sum_over_points(self, omega: Configuration) -> float:
        pts = omega.points
        total = 0
        for i in range(pts.shape[0]):
            mask = np.ones(pts.shape[0], dtype=bool)
            mask[i] = False
            total += self._count(pts[i], pts[mask])
        return float(total)

    def eval_nodes(self, nodes: np.ndarray, omega: Configuration) -> np.ndarray:
        pts = omega.points
        if pts.shape[0] == 0:
            return np.zeros(nodes.shape[0])
        d2 = np.sum((nodes[:, None, :] - pts[None, :, :]) ** 2, axis=2)
        return np.count_nonzero(d2 <= self.radius * self.radius, axis=1).astype(float)


def _stratified_nodes(window: Window, per_axis: int, rng) -> np.ndarray:
    """One uniform point per cell of a per_axis^d grid over the window."""
    d = window.dimension
    axes = [np.arange(per_axis) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    cells = np.stack([m.ravel() for m in mesh], axis=1).astype(np.float64)
    u = rng.random((cells.shape[0], d))
    return window.lower + (cells + u) / per_axis * window.sides


def _insertion_weights(model: EnergyModel, theta: float, nodes: np.ndarray,
                       full_points: np.ndarray) -> np.ndarray:
    """exp(-theta * h(node | omega)) for a batch of nodes."""
    k = nodes.shape[0]
    if isinstance(model, PairwiseModel):
        z = model.activity
        if full_points.shape[0] == 0:
            h = np.full(k, z)
        else:
            d2 = np.sum((nodes[:, None, :] - full_points[None, :, :]) ** 2, axis=2)
            R2 = model.interaction_range ** 2
            mask = d2 <= R2
            if model.indicator_beta is not None:
                counts = mask.sum(axis=1)
                beta = model.indicator_beta
                if math.isinf(beta):
                    h = np.where(counts > 0, np.inf, z)
                else:
                    h = z + beta * counts
            else:
                phi = np.zeros_like(d2)
                sel = mask & (d2 > 0)
                sr2 = model.sigma * model.sigma / d2[sel]
                sr6 = sr2 ** 3
                phi[sel] = 4.0 * model.epsilon * (sr6 * sr6 - sr6) - model.shift
                h = z + np.where(mask, phi, 0.0).sum(axis=1)
    else:
        cfg = Configuration(full_points, dim=2) if full_points.shape[0] \
            else Configuration.empty(2)
        h = np.array([model.insertion_energy(cfg, nodes[i]) for i in range(k)])
    if theta == 0.0:
        return np.ones(k)
    with np.errstate(over="ignore"):
        return np.exp(-theta * np.where(np.isinf(h), np.inf, h))


def gnz_residual(samples: list[Configuration], target: Target, test_fn,
                 seed: Seed, nodes_per_axis: int = 8, n_chains: int = 1):
    """Equilibrium residual E[sum_x g(x, w - x)] - E[int g e^{-theta h}].

    Near zero exactly when the samples follow the target's conditional Gibbs
    density; this is the primary joint correctness check for the sampler and
    the energy model.  The integral is evaluated on stratified uniform nodes,
    a fixed count per sample.  The standard error comes from per-chain batch
    means over the per-sample differences.
    """
    from .thermo import Estimate

    if not samples:
        raise ValueError("gnz_residual needs at least one sample")
    window, theta, model = target.window, target.theta, target.model
    boundary = target.boundary_points
    rng = seed.derive(9103).generator()
    diffs = np.zeros(len(samples))
    sums = np.zeros(len(samples))
    for s, omega in enumerate(samples):
        nodes = _stratified_nodes(window, nodes_per_axis, rng)
        full = np.vstack([omega.points, boundary]) if boundary.shape[0] \
            else omega.points
        weights = _insertion_weights(model, theta, nodes, full)
        gvals = test_fn.eval_nodes(nodes, omega)
        integral = window.volume / nodes.shape[0] * float(np.sum(gvals * weights))
        point_sum = test_fn.sum_over_points(omega)
        sums[s] = point_sum
        diffs[s] = point_sum - integral
    se = _chain_batch_se(diffs, n_chains)
    return Estimate(float(diffs.mean()), se, len(samples), "gnz",
                    details={"sum_term": float(sums.mean()),
                             "test_fn": test_fn.name})


def _chain_batch_se(values: np.ndarray, n_chains: int) -> float:
    """Batch-means standard error of the mean for chain-major sample values."""
    values = np.asarray(values, dtype=np.float64)
    per = len(values) // max(n_chains, 1)
    batches = []
    for c in range(n_chains):
        block = values[c * per: (c + 1) * per]
        nb = min(16, max(2, len(block) // 8))
        width = len(block) // nb
        if width == 0:
            batches.extend(block.tolist())
            continue
        for b in range(nb):
            batches.append(block[b * width: (b + 1) * width].mean())
    batches = np.array(batches)
    if len(batches) < 2:
        return float("inf")
    return float(batches.std(ddof=1) / math.sqrt(len(batches)))
