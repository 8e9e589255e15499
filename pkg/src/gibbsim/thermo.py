"""Estimators for pressure, specific entropy, mean energy, and the
variational gap.

The pressure is the per-volume log partition function with free boundary,
estimated by thermodynamic integration over tempered targets and validated
against a small-window quadrature oracle.  Specific entropy of the
finite-volume Gibbs law combines the mean sampled energy with the estimated
log partition function.  The variational gap I(P) + H(P) + p_H is the
headline quantity: nonnegative for every stationary law, zero exactly at the
Gibbs law.

Every estimator returns an :class:`Estimate` carrying a standard error and
sample-size metadata, and every stochastic routine is a pure function of its
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Configuration, Seed, Window, sample_poisson
from .diagnostics import mcmc_standard_error
from .models import EnergyModel, PairwiseModel, Quermass
from .sampler import EstimatorError, McmcParams, Target, run

__all__ = [
    "Estimate",
    "PoissonLaw",
    "GibbsLaw",
    "InvariantViolation",
    "entropy_poisson",
    "poisson_mean_energy",
    "brute_force_log_partition",
    "ti_log_partition",
    "estimate_pressure",
    "mean_energy",
    "entropy_gibbs",
    "variational_gap",
    "boundary_effect_curve",
    "halo_integer",
]


class InvariantViolation(RuntimeError):
    """A structural bound (pressure bracket, gap sign) failed: fail loudly."""


@dataclass
class Estimate:
    """A scalar with Monte Carlo standard error and provenance."""

    value: float
    std_error: float
    n_samples: int
    method: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.value) and math.isfinite(self.std_error)):
            raise EstimatorError(
                f"non-finite {self.method} estimate "
                f"({self.value} +/- {self.std_error})")

    def within(self, target: float, k_sigma: float = 3.0, atol: float = 0.0) -> bool:
        return abs(self.value - target) <= k_sigma * self.std_error + atol

    def __str__(self):
        return f"{self.value:.6g} +/- {self.std_error:.2g} ({self.method})"


@dataclass(frozen=True)
class PoissonLaw:
    """Stationary Poisson law with the given intensity (entropy closed form)."""

    intensity: float

    def __post_init__(self):
        if not (self.intensity > 0 and math.isfinite(self.intensity)):
            raise ValueError("intensity must be positive and finite")

    def describe(self) -> str:
        return f"poisson({self.intensity:g})"


@dataclass(frozen=True)
class GibbsLaw:
    """Finite-volume free-boundary Gibbs law at volume index n."""

    n: float
    model: EnergyModel | None = None  # defaults to the energy model under study

    def describe(self) -> str:
        inner = self.model.describe() if self.model is not None else "self"
        return f"gibbs({inner}, n={self.n:g})"


def halo_integer(model: EnergyModel) -> int:
    """Smallest integer strictly larger than the interaction range."""
    return int(math.floor(model.interaction_range)) + 1


def entropy_poisson(z_prime: float) -> float:
    """Specific entropy of Poisson(z') against the unit Poisson reference.

    The window density of Poisson(z') is exp((1 - z')|W|) z'^N, so the
    entropy per unit volume is 1 - z' + z' ln z'; nonnegative, zero only at
    z' = 1.
    """
    if not (z_prime > 0):
        raise ValueError("intensity must be positive")
    return 1.0 - z_prime + z_prime * math.log(z_prime)


def poisson_mean_energy(model: EnergyModel, intensity: float) -> float:
    """Closed-form mean energy per unit volume of Poisson(intensity).

    Pairwise models: z * lam + lam^2 / 2 * integral of phi (second factorial
    moment of the Poisson law); infinite when phi is not integrable or has a
    hard core.  Quermass: Boolean-model densities of covered area, boundary
    length, and Euler characteristic.
    """
    lam = float(intensity)
    if isinstance(model, PairwiseModel):
        return model.activity * lam + 0.5 * lam * lam * model.phi_integral()
    if isinstance(model, Quermass):
        r = model.disc_radius
        filled = lam * math.pi * r * r
        area_density = 1.0 - math.exp(-filled)
        length_density = lam * 2.0 * math.pi * r * math.exp(-filled)
        euler_density = lam * math.exp(-filled) * (1.0 - filled)
        return (model.theta1 * area_density + model.theta2 * length_density
                + model.theta3 * euler_density)
    raise NotImplementedError(f"no closed form for {model.id}")


# ---------------------------------------------------------------------------
# brute-force partition function (small-window oracle)
# ---------------------------------------------------------------------------

def _poisson_tail(lam: float, n_max: int) -> float:
    """sum_{k > n_max} lam^k / k! (stability-weighted truncation bound)."""
    term = lam ** (n_max + 1) / math.factorial(n_max + 1)
    total = 0.0
    k = n_max + 1
    while term > 1e-30 and k < n_max + 200:
        total += term
        k += 1
        term *= lam / k
    return total


def _gl_axis(q: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(q)
    half = 0.5 * (hi - lo)
    return lo + (x + 1.0) * half, w * half


def _boltzmann_rows(model: EnergyModel, coords: np.ndarray) -> np.ndarray:
    """exp(-H) for a batch of k-point tuples, shape (m, k, d)."""
    m, k, _ = coords.shape
    if isinstance(model, PairwiseModel):
        z = model.activity
        R2 = model.interaction_range ** 2
        beta = model.indicator_beta
        if beta is not None:
            count = np.zeros(m)
            for i in range(k):
                for j in range(i + 1, k):
                    d2 = np.sum((coords[:, i] - coords[:, j]) ** 2, axis=1)
                    count += d2 <= R2
            if math.isinf(beta):
                return np.where(count > 0, 0.0, math.exp(-z * k))
            return np.exp(-(z * k + beta * count))
        acc = np.zeros(m)
        for i in range(k):
            for j in range(i + 1, k):
                d2 = np.sum((coords[:, i] - coords[:, j]) ** 2, axis=1)
                mask = d2 <= R2
                with np.errstate(divide="ignore", over="ignore"):
                    sr2 = np.where(mask, model.sigma ** 2 / d2, 0.0)
                    sr6 = sr2 ** 3
                    acc += np.where(mask,
                                    4.0 * model.epsilon * (sr6 * sr6 - sr6)
                                    - model.shift, 0.0)
        with np.errstate(over="ignore"):
            return np.exp(-(z * k + acc))
    # geometric models: evaluate row by row on deduplicated point sets
    out = np.empty(m)
    for row in range(m):
        pts = np.unique(coords[row], axis=0)
        out[row] = math.exp(-model.total_energy(
            Configuration(pts, dim=coords.shape[2])))
    return out


def _box_ball_covariance(sides, R: float) -> float:
    """integral over the box pair (x, y) of 1(|x - y| <= R).

    Equals the integral of the box covariogram over the R-ball; closed form
    when the ball fits inside the box, polar quadrature otherwise (d = 2).
    """
    sides = [float(s) for s in sides]
    d = len(sides)
    if d == 1:
        a = sides[0]
        r = min(R, a)
        return 2.0 * a * r - r * r
    if d == 2:
        a, b = sides
        if R >= math.hypot(a, b):
            return (a * b) ** 2  # every pair of box points is within reach
        if R <= min(a, b):
            return (a * b * math.pi * R * R
                    - (a + b) * (4.0 / 3.0) * R ** 3 + 0.5 * R ** 4)
        rho, wr = _gl_axis(400, 0.0, min(R, math.hypot(a, b)))
        th, wt = _gl_axis(400, 0.0, 0.5 * math.pi)
        u = rho[:, None] * np.cos(th[None, :])
        v = rho[:, None] * np.sin(th[None, :])
        g = np.maximum(a - u, 0.0) * np.maximum(b - v, 0.0)
        disc = (u * u + v * v) <= R * R
        return float(4.0 * np.sum((wr[:, None] * wt[None, :])
                                  * np.where(disc, g, 0.0) * rho[:, None]))
    raise NotImplementedError("pair covariance only for d <= 2")


def _single_point_energy(model: EnergyModel) -> float:
    probe = Configuration(np.zeros((1, model.dimension)), dim=model.dimension)
    return model.total_energy(probe)


def _i_k_quadrature(model: EnergyModel, window: Window, k: int, q: int) -> float:
    """Gauss-Legendre tensor quadrature of int exp(-H(x_1..x_k)) over W^k."""
    d = window.dimension
    budget = max(4096, q ** (2 * d))
    qk = max(2, min(q, int(budget ** (1.0 / (d * k)))))
    nodes, weights = [], []
    for _ in range(k):
        for a in range(d):
            xs, ws = _gl_axis(qk, window.lower[a], window.upper[a])
            nodes.append(xs)
            weights.append(ws)
    n_axes = k * d
    total_pts = qk ** n_axes
    chunk = 200_000
    total = 0.0
    for start in range(0, total_pts, chunk):
        ids = np.arange(start, min(start + chunk, total_pts), dtype=np.int64)
        coords = np.empty((len(ids), k, d))
        wprod = np.ones(len(ids))
        rem = ids
        for ax in range(n_axes - 1, -1, -1):
            pos = rem % qk
            rem = rem // qk
            coords[:, ax // d, ax % d] = nodes[ax][pos]
            wprod = wprod * weights[ax][pos]
        total += float(np.sum(_boltzmann_rows(model, coords) * wprod))
    return total


def brute_force_log_partition(model: EnergyModel, window: Window,
                              n_max: int = 8, quad_nodes: int = 24) -> Estimate:
    """ln Z by direct truncated Poisson expansion with tensor quadrature.

    Only valid on windows small enough that the stability-bounded truncation
    tail sum_{k > n_max} (e^A |W|)^k / k! is below 1e-6; the tail is reported
    as the standard error.  Pair integrals of indicator potentials use the
    exact box-covariance closed form.
    """
    vol = window.volume
    lam = math.exp(model.stability_constant) * vol
    tail = _poisson_tail(lam, n_max)
    if tail > 1e-6:
        raise EstimatorError(
            f"truncation tail {tail:.2e} above 1e-6: increase n_max "
            f"(need sum_(k>n_max) ({lam:.3g})^k/k! small)")
    h1 = _single_point_energy(model)
    total = 1.0 + vol * math.exp(-h1)
    is_indicator = isinstance(model, PairwiseModel) and model.indicator_beta is not None
    ideal_like = (is_indicator and (model.indicator_beta == 0.0
                                    or model.interaction_range == 0.0))
    for k in range(2, n_max + 1):
        if ideal_like:
            i_k = (vol * math.exp(-model.activity)) ** k
        elif is_indicator and k == 2:
            beta = model.indicator_beta
            decay = 0.0 if math.isinf(beta) else math.exp(-beta)
            cov = _box_ball_covariance(window.sides, model.interaction_range)
            i_k = math.exp(-2.0 * model.activity) * (vol * vol - (1.0 - decay) * cov)
        else:
            i_k = _i_k_quadrature(model, window, k, quad_nodes)
        total += i_k / math.factorial(k)
    value = -vol + math.log(total)
    return Estimate(value, tail, 0, "brute-force",
                    details={"n_max": n_max, "volume": vol})


# ---------------------------------------------------------------------------
# thermodynamic integration
# ---------------------------------------------------------------------------

def _as_window(model: EnergyModel, n_or_window) -> Window:
    if isinstance(n_or_window, Window):
        return n_or_window
    return Window.cube(float(n_or_window), model.dimension)


def default_theta_grid(n_nodes: int = 11) -> list[float]:
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError("theta grid needs an odd node count >= 3")
    return [i / (n_nodes - 1) for i in range(n_nodes)]


def _quad_weights(grid: np.ndarray, rule: str) -> np.ndarray:
    m = len(grid)
    h = grid[1] - grid[0]
    uniform = np.allclose(np.diff(grid), h, rtol=1e-9, atol=1e-12)
    if rule == "simpson" and uniform and m >= 3 and m % 2 == 1:
        w = np.ones(m)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * h / 3.0
    # trapezoid fallback handles any sorted grid
    w = np.zeros(m)
    w[:-1] += 0.5 * np.diff(grid)
    w[1:] += 0.5 * np.diff(grid)
    return w


def _node_estimates(model: EnergyModel, window: Window, grid, params: McmcParams,
                    seed: Seed, cache: dict, boundary=None) -> None:
    """Populate cache[theta] = (mean H, SE, rhat) for tempered free targets."""
    for theta in grid:
        key = round(float(theta), 12)
        if key in cache:
            continue
        node_params = params
        if theta < 0.5:
            node_params = McmcParams(burn_in=max(1, params.burn_in // 2),
                                     samples=params.samples, thin=params.thin,
                                     chains=params.chains,
                                     kick_scale=params.kick_scale)
        target = Target(model, window, boundary, float(theta))
        node_seed = seed.derive(71, int(round(theta * 1e9)))
        _, diag = run(target, node_params, node_seed, keep_samples=False)
        if node_params.chains >= 2 and np.isfinite(diag.rhat_h) \
                and diag.rhat_h > 1.1:
            raise EstimatorError(
                f"split R-hat {diag.rhat_h:.3f} > 1.1 at theta={theta:g}")
        cache[key] = (float(diag.h_traces.mean()),
                      mcmc_standard_error(diag.h_traces))


def _integrate_nodes(grid: np.ndarray, cache: dict, rule: str):
    means = np.array([cache[round(float(t), 12)][0] for t in grid])
    ses = np.array([cache[round(float(t), 12)][1] for t in grid])
    w_main = _quad_weights(grid, rule)
    w_alt = _quad_weights(grid, "trapezoid")
    integral = float(np.sum(w_main * means))
    alt = float(np.sum(w_alt * means))
    quad_err = abs(integral - alt)
    mc_err = float(np.sqrt(np.sum((w_main * ses) ** 2)))
    return integral, quad_err, mc_err


def ti_log_partition(model: EnergyModel, n_or_window, theta_grid=None,
                     params: McmcParams | None = None, seed: Seed | None = None,
                     rule: str = "simpson", auto_refine: bool = True) -> Estimate:
    """ln Z of the free-boundary window by thermodynamic integration.

    For finite energies this is -int_0^1 E_theta[H] dtheta over tempered
    targets.  Hard-core models keep the core at every theta, which splits the
    path in two legs: a pair-softening bridge from the Poisson reference to
    the core-conditioned reference (measuring ln P(no core violation)), then
    the activity leg integrating E_theta[z N].  The grid must contain 0 and 1;
    Simpson weights by default, and the grid is refined once when the
    quadrature-curvature error dominates the Monte Carlo error.
    """
    if params is None:
        params = McmcParams()
    if seed is None:
        seed = Seed(0)
    window = _as_window(model, n_or_window)
    grid = np.array(sorted(theta_grid if theta_grid is not None
                           else default_theta_grid()), dtype=np.float64)
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("theta grid must span [0, 1] inclusive")
    extra: dict = {}
    if model.hard_core:
        bridge = _hard_core_bridge(model, window, params, seed)
        extra["bridge"] = bridge.value, bridge.std_error
    cache: dict = {}
    _node_estimates(model, window, grid, params, seed, cache)
    integral, quad_err, mc_err = _integrate_nodes(grid, cache, rule)
    refinements = 0
    while auto_refine and quad_err > max(mc_err, 1e-12) and refinements < 2:
        mids = 0.5 * (grid[:-1] + grid[1:])
        grid = np.sort(np.concatenate([grid, mids]))
        _node_estimates(model, window, grid, params, seed, cache)
        integral, quad_err, mc_err = _integrate_nodes(grid, cache, rule)
        refinements += 1
    value = -integral
    se = math.sqrt(mc_err ** 2 + quad_err ** 2)
    n_used = params.samples * params.chains * len(grid)
    if model.hard_core:
        value += extra["bridge"][0]
        se = math.sqrt(se ** 2 + extra["bridge"][1] ** 2)
    return Estimate(value, se, n_used, "ti",
                    details={"theta_nodes": len(grid), "quad_error": quad_err,
                             "refinements": refinements, **extra})


def _hard_core_bridge(model: EnergyModel, window: Window, params: McmcParams,
                      seed: Seed) -> Estimate:
    """ln P_pi(no core pair) via a pair-softening bridge.

    Runs chains targeting exp(-beta * V(omega)), V = number of core pairs,
    on a beta grid; minus the integral of E_beta[V] over beta is the wanted
    log probability.  The integrand decays like e^-beta, so the residual tail
    beyond the last node is bounded by the last estimate and is charged to
    the error budget.
    """
    from . import _kernels

    core = model.interaction_range
    beta_max = 14.0
    grid = np.linspace(0.0, beta_max, 29)
    kick = params.resolve_kick(model)
    means, ses = [], []
    n_steps = params.burn_in + params.samples * params.thin
    for i, beta in enumerate(grid):
        traces = []
        for c in range(params.chains):
            bg = seed.derive(37, i, c).bit_generator()
            out = _kernels.run_chain(
                1, model.dimension, model.activity, core, 1.0, 0.0, 0.0, 0.0,
                0.0, window.lower, window.upper,
                np.zeros((0, model.dimension)), 0.0, float(beta), kick,
                np.zeros((0, model.dimension)), n_steps, params.burn_in,
                params.thin, bg, False, 1.0)
            traces.append(out["pair_trace"])
        traces = np.array(traces)
        means.append(float(traces.mean()))
        ses.append(mcmc_standard_error(traces))
    means = np.array(means)
    ses = np.array(ses)
    w = _quad_weights(grid, "simpson")
    integral = float(np.sum(w * means))
    mc_err = float(np.sqrt(np.sum((w * ses) ** 2)))
    tail = max(means[-1], 0.0)
    return Estimate(-integral - tail, math.sqrt(mc_err ** 2 + tail ** 2),
                    params.samples * params.chains * len(grid), "bridge")


def estimate_pressure(model: EnergyModel, n_list, theta_grid=None,
                      params: McmcParams | None = None,
                      seed: Seed | None = None) -> Estimate:
    """Pressure ln Z_n / |W_n| at the largest volume, with the finite-size
    trend over n_list and a hard assertion of the stability bracket
    [-1 - 3 SE, e^A - 1 + 3 SE]."""
    if seed is None:
        seed = Seed(0)
    n_list = sorted(n_list)
    trend = []
    for n in n_list:
        window = _as_window(model, n)
        est = ti_log_partition(model, window, theta_grid, params,
                               seed.derive(101, int(n * 1024)))
        p = est.value / window.volume
        p_se = est.std_error / window.volume
        lo = -1.0 - 3.0 * p_se
        hi = math.expm1(model.stability_constant) + 3.0 * p_se
        if not (lo <= p <= hi):
            raise InvariantViolation(
                f"pressure {p:.4f} at n={n} outside stability bracket "
                f"[{lo:.4f}, {hi:.4f}] for {model.describe()}")
        trend.append((float(n), p, p_se))
    n, p, p_se = trend[-1]
    return Estimate(p, p_se, 0, "pressure",
                    details={"trend": trend, "n": n})


# ---------------------------------------------------------------------------
# mean energy (three routes) and entropies
# ---------------------------------------------------------------------------

def _direct_pair_energy(model: PairwiseModel, omega: Configuration) -> float:
    """Reference pairwise energy by an explicit all-pairs sum."""
    pts = omega.points
    n = pts.shape[0]
    total = model.activity * n
    if n < 2:
        return total
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    iu = np.triu_indices(n, k=1)
    d2 = d2[iu]
    mask = d2 <= model.interaction_range ** 2
    if model.indicator_beta is not None:
        k = int(np.count_nonzero(mask))
        if k == 0:
            return total
        return total + model.indicator_beta * k
    return total + float(np.sum([model.pair_phi(v) for v in d2[mask]]))


def _quermass_cube_route(model: Quermass, omega: Configuration, n: float) -> float:
    """Mean cube contribution over interior unit cubes (translation average)."""
    r0 = halo_integer(model)
    lo = int(-n + r0)
    hi = int(n - r0)  # cube corners k with k+1 <= n - r0
    if hi <= lo:
        raise EstimatorError(f"window n={n} too small for the cube route")
    vals = []
    for kx in range(lo, hi):
        for ky in range(lo, hi):
            vals.append(model.cube_energy_contribution(omega, (kx, ky)))
    return float(np.mean(vals))


def mean_energy(model: EnergyModel, law, n: float,
                params: McmcParams | None = None, seed: Seed | None = None,
                check_routes: bool = True) -> Estimate:
    """Mean energy per unit volume of the law, cross-validated across routes.

    Route (a) averages H(window restriction) / volume directly.  For pairwise
    models route (b) recomputes the same quantity through an explicit
    all-pairs sum (independent code path, must agree to float precision).
    For the Quermass model route (c) averages per-cube contributions over
    interior unit cubes, which targets the stationary limit; agreement with
    (a) is required within joint 3 SE plus a declared finite-size allowance
    proportional to the rim volume.
    """
    if params is None:
        params = McmcParams()
    if seed is None:
        seed = Seed(0)
    window = _as_window(model, n)
    vol = window.volume
    if isinstance(law, PoissonLaw):
        m_samples = params.samples * params.chains
        configs = [sample_poisson(window, law.intensity, seed.derive(5, i))
                   for i in range(m_samples)]
        h_vals = np.array([model.total_energy(c) for c in configs])
        if np.any(np.isinf(h_vals)):
            raise EstimatorError(
                "mean energy diverges: a hard-core model under a Poisson law "
                "has infinite expected energy")
        values = h_vals / vol
        se = float(values.std(ddof=1) / math.sqrt(len(values)))
        n_chains = 1
    elif isinstance(law, GibbsLaw):
        if float(law.n) != float(n):
            raise ValueError("GibbsLaw volume must match the evaluation volume")
        sample_model = law.model if law.model is not None else model
        target = Target(sample_model, window, None, 1.0)
        configs, diag = run(target, params, seed.derive(6), keep_samples=True)
        if sample_model is model or sample_model == model:
            values = diag.h_traces.ravel() / vol
        else:
            values = np.array([model.total_energy(c) for c in configs]) / vol
        se = mcmc_standard_error(values.reshape(params.chains, -1))
        n_chains = params.chains
    else:
        raise TypeError(f"unsupported law {law!r}")
    est = Estimate(float(values.mean()), se, len(values), "mean-energy",
                   details={"law": law.describe()})

    if not check_routes:
        return est
    if isinstance(model, PairwiseModel):
        ref = np.array([_direct_pair_energy(model, c) for c in configs]) / vol
        gap = abs(float(ref.mean()) - est.value)
        if gap > 1e-8 * max(1.0, abs(est.value)):
            raise EstimatorError(
                f"pairwise route disagreement {gap:.2e} (cell list vs direct)")
        est.details["route_pair"] = float(ref.mean())
    elif isinstance(model, Quermass):
        cube_vals = np.array([_quermass_cube_route(model, c, n) for c in configs])
        cube_se = _route_se(cube_vals, n_chains)
        lam_hat = float(np.mean([len(c) for c in configs])) / vol
        r0 = halo_integer(model)
        rim_vol = vol - Window.cube(n - r0, 2).volume if n > r0 else vol
        allowance = model.stability_constant * lam_hat * rim_vol / vol
        tol = 3.0 * math.sqrt(se ** 2 + cube_se ** 2) + allowance
        gap = abs(float(cube_vals.mean()) - est.value)
        if gap > tol:
            raise EstimatorError(
                f"cube-route disagreement {gap:.4g} > tolerance {tol:.4g}")
        est.details["route_cube"] = (float(cube_vals.mean()), cube_se)
    return est


def _route_se(values: np.ndarray, n_chains: int) -> float:
    if n_chains <= 1:
        return float(values.std(ddof=1) / math.sqrt(len(values)))
    return mcmc_standard_error(values.reshape(n_chains, -1))


def entropy_gibbs(model: EnergyModel, n: float, theta_grid=None,
                  params: McmcParams | None = None,
                  seed: Seed | None = None) -> Estimate:
    """Specific entropy of the free-boundary Gibbs law at volume n.

    Uses the finite-volume identity I(Q_n, pi_n) = -E[H] - ln Z_n, combining
    an energy average at theta = 1 with the integrated log partition
    function; errors add in quadrature (independent runs).
    """
    if params is None:
        params = McmcParams()
    if seed is None:
        seed = Seed(0)
    window = _as_window(model, n)
    vol = window.volume
    lnz = ti_log_partition(model, window, theta_grid, params, seed.derive(21))
    target = Target(model, window, None, 1.0)
    _, diag = run(target, params, seed.derive(22), keep_samples=False)
    e_mean = float(diag.h_traces.mean())
    e_se = mcmc_standard_error(diag.h_traces)
    value = (-e_mean - lnz.value) / vol
    se = math.sqrt(e_se ** 2 + lnz.std_error ** 2) / vol
    return Estimate(value, se, lnz.n_samples + diag.n_chains * diag.n_records,
                    "entropy-gibbs",
                    details={"mean_energy_window": e_mean / vol,
                             "log_partition": lnz.value / vol})


def variational_gap(model: EnergyModel, law, n: float, theta_grid=None,
                    params: McmcParams | None = None, seed: Seed | None = None,
                    pressure: Estimate | None = None,
                    use_closed_forms: bool = True) -> Estimate:
    """The free-excess-energy gap I(P) + H(P) + p_H of a candidate law.

    Nonnegative for every stationary law, zero exactly at the Gibbs law.
    Poisson laws use closed-form entropy (and closed-form mean energy when
    available); the Gibbs law uses the finite-volume entropy identity.  A
    precomputed pressure estimate may be shared across laws.
    """
    if params is None:
        params = McmcParams()
    if seed is None:
        seed = Seed(0)
    if pressure is None:
        pressure = estimate_pressure(model, [n], theta_grid, params,
                                     seed.derive(31))
    parts: dict = {"pressure": (pressure.value, pressure.std_error)}
    if isinstance(law, PoissonLaw):
        entropy_val, entropy_se = entropy_poisson(law.intensity), 0.0
        if use_closed_forms:
            energy_val, energy_se = poisson_mean_energy(model, law.intensity), 0.0
        else:
            me = mean_energy(model, law, n, params, seed.derive(32))
            energy_val, energy_se = me.value, me.std_error
    elif isinstance(law, GibbsLaw):
        ent = entropy_gibbs(model, n, theta_grid, params, seed.derive(33))
        entropy_val, entropy_se = ent.value, ent.std_error
        me = mean_energy(model, law, n, params, seed.derive(34))
        energy_val, energy_se = me.value, me.std_error
    else:
        raise TypeError(f"unsupported law {law!r}")
    parts["entropy"] = (entropy_val, entropy_se)
    parts["mean_energy"] = (energy_val, energy_se)
    value = entropy_val + energy_val + pressure.value
    se = math.sqrt(entropy_se ** 2 + energy_se ** 2 + pressure.std_error ** 2)
    return Estimate(value, se, params.samples * params.chains, "gap",
                    details=parts)


def boundary_effect_curve(model: EnergyModel, n_list,
                          params: McmcParams | None = None,
                          seed: Seed | None = None) -> list[Estimate]:
    """E[boundary term on cube(n)] / volume under the free-boundary Gibbs law.

    Samples live on the R-halo cube(n + R0) so exterior points within range
    of cube(n) are present; the expected decay follows the surface-to-volume
    ratio, and is identically zero for models without cross-boundary terms.
    """
    if params is None:
        params = McmcParams()
    if seed is None:
        seed = Seed(0)
    r0 = halo_integer(model)
    out = []
    for i, n in enumerate(sorted(n_list)):
        big = Window.cube(n + r0, model.dimension)
        target = Target(model, big, None, 1.0)
        configs, _ = run(target, params, seed.derive(41, i), keep_samples=True)
        vol = Window.cube(n, model.dimension).volume
        vals = np.array([model.boundary_term(c, n) for c in configs]) / vol
        se = _route_se(vals, params.chains)
        out.append(Estimate(float(vals.mean()), se, len(vals),
                            "boundary-effect", details={"n": float(n)}))
    return out
