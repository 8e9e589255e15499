"""Convergence diagnostics for chain traces: ESS and split R-hat."""

from __future__ import annotations

import numpy as np

__all__ = ["effective_sample_size", "split_rhat", "mcmc_standard_error"]


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of one trace via FFT."""
    n = x.shape[0]
    x = x - x.mean()
    m = int(2 ** np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, m)
    acov = np.fft.irfft(f * np.conjugate(f), m)[:n].real
    return acov / n


def effective_sample_size(traces) -> float:
    """ESS of stacked chain traces (chains x draws).

    Uses the mean cross-chain autocovariance with Geyer's initial monotone
    positive sequence to truncate the correlation sum.
    """
    traces = np.atleast_2d(np.asarray(traces, dtype=np.float64))
    n_chain, n_draw = traces.shape
    if n_draw < 4:
        return float(n_chain * n_draw)
    acov = np.mean([_autocovariance(t) for t in traces], axis=0)
    chain_var = np.var(traces, axis=1, ddof=1).mean()
    between = np.var(traces.mean(axis=1), ddof=1) if n_chain > 1 else 0.0
    var_plus = acov[0] * n_draw / (n_draw - 1.0) + between
    if var_plus <= 0:
        return float(n_chain * n_draw)
    # Geyer pairs rho_{2t} + rho_{2t+1}
    rho = 1.0 - (chain_var - acov) / var_plus
    t = 1
    total = rho[0]  # = 1 - eps
    prev_pair = np.inf
    while t + 1 < n_draw:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        pair = min(pair, prev_pair)  # enforce monotonicity
        total += pair
        prev_pair = pair
        t += 2
    tau = max(1.0, 2.0 * total - 1.0)
    return float(n_chain * n_draw / tau)


def split_rhat(traces) -> float:
    """Split R-hat of stacked chain traces (chains x draws); nan if too short."""
    traces = np.atleast_2d(np.asarray(traces, dtype=np.float64))
    n_chain, n_draw = traces.shape
    half = n_draw // 2
    if half < 2:
        return float("nan")
    split = np.vstack([traces[:, :half], traces[:, half: 2 * half]])
    m, n = split.shape
    chain_means = split.mean(axis=1)
    chain_vars = split.var(axis=1, ddof=1)
    w = chain_vars.mean()
    b = n * chain_means.var(ddof=1)
    if w <= 0:
        return 1.0 if b <= 0 else float("inf")
    var_plus = (n - 1.0) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def mcmc_standard_error(traces) -> float:
    """Standard error of the grand mean of correlated traces (via ESS)."""
    traces = np.atleast_2d(np.asarray(traces, dtype=np.float64))
    ess = effective_sample_size(traces)
    var = traces.var(ddof=1)
    if var == 0:
        return 0.0
    return float(np.sqrt(var / ess))
