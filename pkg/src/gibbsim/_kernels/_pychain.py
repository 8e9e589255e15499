"""Pure-Python birth-death-move chain for pairwise models.

Reference twin of the compiled kernel: both consume the same Philox stream
through the same draw sequence and evaluate acceptance ratios with the same
floating-point expressions, so given one seed they produce bit-identical
trajectories.  This implementation is the fallback selected when the
extension is unavailable; it is two to three orders of magnitude slower.

Model kinds: 0 ideal gas, 1 Strauss (finite beta), 2 hard core,
3 truncated-shifted Lennard-Jones.  The insertion weight of a point x is
``wz * z + wp * pair_term(x)``; tempered targets use wz = wp = theta, and the
hard core of kind 2 is absolute at every theta.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

_ONE_THIRD = 1.0 / 3.0
_TWO_THIRDS = 2.0 / 3.0


class _Grid:
    """Cell list over the R-dilated window; ids are stable point handles."""

    def __init__(self, lower, upper, reach, dim):
        self.dim = dim
        self.reach = reach
        self.glo = [lower[a] - reach for a in range(dim)]
        side = [(upper[a] + reach) - self.glo[a] for a in range(dim)]
        self.m = [max(1, min(128, int(math.floor(side[a] / reach)))) if reach > 0
                  else 1 for a in range(dim)]
        self.w = [side[a] / self.m[a] for a in range(dim)]
        ncells = 1
        for a in range(dim):
            ncells *= self.m[a]
        self.head = [-1] * ncells
        self.nxt: list[int] = []
        self.cell_of: list[int] = []

    def _ensure(self, pid):
        while len(self.nxt) <= pid:
            self.nxt.append(-1)
            self.cell_of.append(-1)

    def cell_index(self, coords):
        idx = 0
        for a in range(self.dim):
            c = int(math.floor((coords[a] - self.glo[a]) / self.w[a]))
            if c < 0:
                c = 0
            elif c >= self.m[a]:
                c = self.m[a] - 1
            idx = idx * self.m[a] + c
        return idx

    def insert(self, pid, coords):
        self._ensure(pid)
        c = self.cell_index(coords)
        self.nxt[pid] = self.head[c]
        self.head[c] = pid
        self.cell_of[pid] = c

    def remove(self, pid):
        c = self.cell_of[pid]
        cur = self.head[c]
        if cur == pid:
            self.head[c] = self.nxt[pid]
        else:
            while self.nxt[cur] != pid:
                cur = self.nxt[cur]
            self.nxt[cur] = self.nxt[pid]
        self.cell_of[pid] = -1

    def cell_range(self, x, a, radius=None):
        radius = self.reach if radius is None else radius
        lo = int(math.floor((x - radius - self.glo[a]) / self.w[a]))
        hi = int(math.floor((x + radius - self.glo[a]) / self.w[a]))
        if lo < 0:
            lo = 0
        if hi >= self.m[a]:
            hi = self.m[a] - 1
        return lo, hi


class PairwiseChain:
    """Mutable chain state targeting exp(-(wz z N + wp pair energy))."""

    def __init__(self, kind, dim, z, reach, beta, core2, eps4, sigma2, shift,
                 lower, upper, boundary, wz, wp, kick, bit_generator,
                 acceptance_bias=1.0):
        self.kind = int(kind)
        self.dim = int(dim)
        self.z = float(z)
        self.reach = float(reach)
        self.r2 = self.reach * self.reach
        self.beta = float(beta)
        self.core2 = float(core2)
        self.eps4 = float(eps4)
        self.sigma2 = float(sigma2)
        self.shift = float(shift)
        self.lower = [float(v) for v in lower]
        self.upper = [float(v) for v in upper]
        self.side = [self.upper[a] - self.lower[a] for a in range(self.dim)]
        self.vol = 1.0
        for a in range(self.dim):
            self.vol *= self.side[a]
        self.wz = float(wz)
        self.wp = float(wp)
        self.kick = float(kick)
        self.bias = float(acceptance_bias)
        self.rng = np.random.Generator(bit_generator)

        boundary = np.asarray(boundary, dtype=np.float64).reshape(-1, self.dim)
        self.nb = boundary.shape[0]
        self.coords: list[list[float]] = [[] for _ in range(self.dim)]
        self.n = 0
        self.pair_stat = 0.0
        self.grid = None
        if self.kind != 0 and self.reach > 0.0:
            self.grid = _Grid(self.lower, self.upper, self.reach, self.dim)
            self.bcoords = [[float(boundary[i][a]) for i in range(self.nb)]
                            for a in range(self.dim)]
            for i in range(self.nb):
                self.grid.insert(i, [self.bcoords[a][i] for a in range(self.dim)])
        else:
            self.nb = 0
            self.bcoords = [[] for _ in range(self.dim)]

        self.proposals = [0, 0, 0]
        self.accepts = [0, 0, 0]
        self.step_count = 0

    # -- geometry helpers ----------------------------------------------------

    def _point(self, pid):
        if pid < self.nb:
            return [self.bcoords[a][pid] for a in range(self.dim)]
        slot = pid - self.nb
        return [self.coords[a][slot] for a in range(self.dim)]

    def pair_term(self, x, exclude_slot):
        """(term, feasible): neighbor count / LJ sum at x, hard-core flag."""
        if self.grid is None:
            return 0.0, True
        kind = self.kind
        count = 0
        acc = 0.0
        exclude = -1 if exclude_slot < 0 else self.nb + exclude_slot
        dim = self.dim
        ra = [self.grid.cell_range(x[a], a) for a in range(dim)]
        if dim == 1:
            cells = range(ra[0][0], ra[0][1] + 1)
        elif dim == 2:
            cells = (c0 * self.grid.m[1] + c1
                     for c0 in range(ra[0][0], ra[0][1] + 1)
                     for c1 in range(ra[1][0], ra[1][1] + 1))
        else:
            cells = ((c0 * self.grid.m[1] + c1) * self.grid.m[2] + c2
                     for c0 in range(ra[0][0], ra[0][1] + 1)
                     for c1 in range(ra[1][0], ra[1][1] + 1)
                     for c2 in range(ra[2][0], ra[2][1] + 1))
        for cell in cells:
            pid = self.grid.head[cell]
            while pid != -1:
                if pid != exclude:
                    p = self._point(pid)
                    d2 = 0.0
                    for a in range(dim):
                        diff = x[a] - p[a]
                        d2 += diff * diff
                    if d2 <= self.r2:
                        if kind == 2:
                            return 0.0, False
                        if kind == 1:
                            count += 1
                        else:
                            sr2 = self.sigma2 / d2
                            sr6 = sr2 * sr2 * sr2
                            acc += self.eps4 * (sr6 * sr6 - sr6) - self.shift
                pid = self.grid.nxt[pid]
        if kind == 1:
            return float(count), True
        return acc, True

    def get_tallies(self):
        return (np.array(self.proposals, dtype=np.int64),
                np.array(self.accepts, dtype=np.int64))

    # -- state editing --------------------------------------------------------

    def _insert_point(self, x, term):
        slot = self.n
        for a in range(self.dim):
            if slot < len(self.coords[a]):
                self.coords[a][slot] = x[a]
            else:
                self.coords[a].append(x[a])
        if self.grid is not None:
            self.grid.insert(self.nb + slot, x)
        self.n += 1
        self.pair_stat += term

    def _delete_point(self, slot, term):
        last = self.n - 1
        if self.grid is not None:
            self.grid.remove(self.nb + slot)
        if slot != last:
            if self.grid is not None:
                self.grid.remove(self.nb + last)
            for a in range(self.dim):
                self.coords[a][slot] = self.coords[a][last]
            if self.grid is not None:
                self.grid.insert(self.nb + slot,
                                 [self.coords[a][slot] for a in range(self.dim)])
        self.n = last
        self.pair_stat -= term

    def seed_initial(self, init):
        init = np.asarray(init, dtype=np.float64).reshape(-1, self.dim)
        for row in init:
            x = [float(v) for v in row]
            term, feasible = self.pair_term(x, -1)
            if not feasible:
                raise ValueError("initial configuration violates the hard core")
            self._insert_point(x, term)

    # -- one Metropolis move ---------------------------------------------------

    def step(self):
        rng = self.rng
        u = rng.random()
        if u < _ONE_THIRD:
            self.proposals[0] += 1
            x = [0.0] * self.dim
            for a in range(self.dim):
                x[a] = self.lower[a] + rng.random() * self.side[a]
            term, feasible = self.pair_term(x, -1)
            if feasible:
                w = self.wz * self.z + self.wp * term
                ratio = self.vol / (self.n + 1.0) * math.exp(-w) * self.bias
            else:
                ratio = 0.0
            if rng.random() < ratio:
                self._insert_point(x, term)
                self.accepts[0] += 1
        elif u < _TWO_THIRDS:
            self.proposals[1] += 1
            if self.n > 0:
                slot = int(rng.random() * self.n)
                x = [self.coords[a][slot] for a in range(self.dim)]
                term, _ = self.pair_term(x, slot)
                w = self.wz * self.z + self.wp * term
                ratio = self.n / self.vol * math.exp(w)
                if rng.random() < ratio:
                    self._delete_point(slot, term)
                    self.accepts[1] += 1
        else:
            self.proposals[2] += 1
            if self.n > 0:
                slot = int(rng.random() * self.n)
                x_old = [self.coords[a][slot] for a in range(self.dim)]
                x_new = [0.0] * self.dim
                inside = True
                for a in range(self.dim):
                    x_new[a] = x_old[a] + self.kick * rng.standard_normal()
                    if not (self.lower[a] <= x_new[a] < self.upper[a]):
                        inside = False
                ratio = 0.0
                term_new = 0.0
                term_old = 0.0
                if inside:
                    term_new, feasible = self.pair_term(x_new, slot)
                    if feasible:
                        w_new = self.wz * self.z + self.wp * term_new
                        term_old, _ = self.pair_term(x_old, slot)
                        w_old = self.wz * self.z + self.wp * term_old
                        ratio = math.exp(-(w_new - w_old))
                if rng.random() < ratio:
                    if self.grid is not None:
                        self.grid.remove(self.nb + slot)
                    for a in range(self.dim):
                        self.coords[a][slot] = x_new[a]
                    if self.grid is not None:
                        self.grid.insert(self.nb + slot, x_new)
                    self.pair_stat += term_new - term_old
                    self.accepts[2] += 1
        self.step_count += 1

    def snapshot(self):
        pts = np.empty((self.n, self.dim))
        for a in range(self.dim):
            pts[:, a] = self.coords[a][: self.n]
        return pts


def run_chain(kind, dim, z, reach, beta, core2, eps4, sigma2, shift,
              lower, upper, boundary, wz, wp, kick, init,
              n_steps, burn_in, thin, bit_generator,
              keep_samples=True, acceptance_bias=1.0):
    """Run the chain; see the compiled kernel for the authoritative contract."""
    chain = PairwiseChain(kind, dim, z, reach, beta, core2, eps4, sigma2, shift,
                          lower, upper, boundary, wz, wp, kick, bit_generator,
                          acceptance_bias)
    chain.seed_initial(init)
    n_records = max(0, (int(n_steps) - int(burn_in)) // int(thin))
    n_trace = np.zeros(n_records, dtype=np.int64)
    pair_trace = np.zeros(n_records, dtype=np.float64)
    prop_trace = np.zeros((n_records, 3), dtype=np.int64)
    acc_trace = np.zeros((n_records, 3), dtype=np.int64)
    samples = [] if keep_samples else None
    rec = 0
    burn_in = int(burn_in)
    thin = int(thin)
    for s in range(1, int(n_steps) + 1):
        chain.step()
        if s > burn_in and (s - burn_in) % thin == 0:
            n_trace[rec] = chain.n
            pair_trace[rec] = chain.pair_stat
            prop_trace[rec] = chain.proposals
            acc_trace[rec] = chain.accepts
            if keep_samples:
                samples.append(chain.snapshot())
            rec += 1
    return {
        "n_trace": n_trace,
        "pair_trace": pair_trace,
        "proposal_trace": prop_trace,
        "accept_trace": acc_trace,
        "samples": samples,
        "final": chain.snapshot(),
        "final_pair_stat": chain.pair_stat,
        "proposals": np.array(chain.proposals, dtype=np.int64),
        "accepts": np.array(chain.accepts, dtype=np.int64),
    }
