# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled birth-death-move chain for pairwise models.

Twin of the pure-Python kernel: identical draw sequence from the same Philox
bit generator and identical floating-point expressions, so the two backends
produce bit-identical trajectories.  The extension is built with
-ffp-contract=off to keep C arithmetic equal to CPython float arithmetic.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport exp, floor

import numpy as np

cimport numpy as cnp
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (random_standard_normal,
                                           random_standard_uniform)

cnp.import_array()

BACKEND = "cython"

cdef double ONE_THIRD = 1.0 / 3.0
cdef double TWO_THIRDS = 2.0 / 3.0


cdef class CyPairwiseChain:
    cdef int kind, dim
    cdef double z, reach, r2, beta, core2, eps4, sigma2, shift
    cdef double lower[3]
    cdef double upper[3]
    cdef double side[3]
    cdef double vol, wz, wp, kick, bias
    cdef object bg_ref
    cdef bitgen_t *bitgen

    # grid
    cdef bint has_grid
    cdef double glo[3]
    cdef double gw[3]
    cdef long gm[3]
    cdef long ncells
    cdef long[::1] head
    cdef long[::1] nxt
    cdef long[::1] cell_of

    # points: boundary ids [0, nb), resident ids nb + slot
    cdef long nb
    cdef double[:, ::1] bpos
    cdef double[:, ::1] pos
    cdef long cap
    cdef public long n
    cdef public double pair_stat
    cdef public long step_count
    cdef long proposals[3]
    cdef long accepts[3]

    def __init__(self, kind, dim, z, reach, beta, core2, eps4, sigma2, shift,
                 lower, upper, boundary, wz, wp, kick, bit_generator,
                 acceptance_bias=1.0):
        cdef int a
        self.kind = kind
        self.dim = dim
        self.z = z
        self.reach = reach
        self.r2 = reach * reach
        self.beta = beta
        self.core2 = core2
        self.eps4 = eps4
        self.sigma2 = sigma2
        self.shift = shift
        self.vol = 1.0
        for a in range(self.dim):
            self.lower[a] = lower[a]
            self.upper[a] = upper[a]
            self.side[a] = self.upper[a] - self.lower[a]
            self.vol *= self.side[a]
        self.wz = wz
        self.wp = wp
        self.kick = kick
        self.bias = acceptance_bias

        capsule = bit_generator.capsule
        if not PyCapsule_IsValid(capsule, "BitGenerator"):
            raise ValueError("expected a numpy BitGenerator")
        self.bg_ref = bit_generator
        self.bitgen = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

        bnd = np.ascontiguousarray(np.asarray(boundary, dtype=np.float64
                                              ).reshape(-1, self.dim))
        self.has_grid = self.kind != 0 and self.reach > 0.0
        cdef long m
        if self.has_grid:
            self.nb = bnd.shape[0]
            self.ncells = 1
            for a in range(self.dim):
                self.glo[a] = self.lower[a] - self.reach
                side_halo = (self.upper[a] + self.reach) - self.glo[a]
                m = <long>floor(side_halo / self.reach)
                if m < 1:
                    m = 1
                if m > 128:
                    m = 128
                self.gm[a] = m
                self.gw[a] = side_halo / m
                self.ncells *= m
            self.head = np.full(self.ncells, -1, dtype=np.int64)
        else:
            self.nb = 0
            self.ncells = 0
            self.head = np.empty(0, dtype=np.int64)
        self.bpos = bnd if self.nb else np.zeros((0, self.dim))

        self.cap = 64
        self.pos = np.empty((self.cap, self.dim), dtype=np.float64)
        self.nxt = np.full(self.nb + self.cap, -1, dtype=np.int64)
        self.cell_of = np.full(self.nb + self.cap, -1, dtype=np.int64)
        self.n = 0
        self.pair_stat = 0.0
        self.step_count = 0
        cdef int k
        for k in range(3):
            self.proposals[k] = 0
            self.accepts[k] = 0
        cdef long i
        cdef double x[3]
        if self.has_grid:
            for i in range(self.nb):
                for a in range(self.dim):
                    x[a] = self.bpos[i, a]
                self._grid_insert(i, x)

    # -- grid ------------------------------------------------------------

    cdef long _cell_index(self, double *coords) nogil:
        cdef long idx = 0, c
        cdef int a
        for a in range(self.dim):
            c = <long>floor((coords[a] - self.glo[a]) / self.gw[a])
            if c < 0:
                c = 0
            elif c >= self.gm[a]:
                c = self.gm[a] - 1
            idx = idx * self.gm[a] + c
        return idx

    cdef void _grid_insert(self, long pid, double *coords) nogil:
        cdef long c = self._cell_index(coords)
        self.nxt[pid] = self.head[c]
        self.head[c] = pid
        self.cell_of[pid] = c

    cdef void _grid_remove(self, long pid) nogil:
        cdef long c = self.cell_of[pid]
        cdef long cur = self.head[c]
        if cur == pid:
            self.head[c] = self.nxt[pid]
        else:
            while self.nxt[cur] != pid:
                cur = self.nxt[cur]
            self.nxt[cur] = self.nxt[pid]
        self.cell_of[pid] = -1

    cdef void _cell_range(self, double x, int a, long *lo, long *hi) nogil:
        cdef long l = <long>floor((x - self.reach - self.glo[a]) / self.gw[a])
        cdef long h = <long>floor((x + self.reach - self.glo[a]) / self.gw[a])
        if l < 0:
            l = 0
        if h >= self.gm[a]:
            h = self.gm[a] - 1
        lo[0] = l
        hi[0] = h

    # -- energetics --------------------------------------------------------

    cdef int _pair_term(self, double *x, long exclude_slot, double *out) nogil:
        """out <- pair term at x; returns 0 on a hard-core violation."""
        out[0] = 0.0
        if not self.has_grid:
            return 1
        cdef long exclude = -1 if exclude_slot < 0 else self.nb + exclude_slot
        cdef long count = 0
        cdef double acc = 0.0
        cdef long lo[3]
        cdef long hi[3]
        cdef int a
        for a in range(self.dim):
            self._cell_range(x[a], a, &lo[a], &hi[a])
        cdef long c0, c1, c2, cell, pid
        cdef double d2, diff, px, sr2, sr6
        cdef int hit = 0
        cdef long c0_end = hi[0] + 1
        cdef long c1_beg = lo[1] if self.dim > 1 else 0
        cdef long c1_end = (hi[1] + 1) if self.dim > 1 else 1
        cdef long c2_beg = lo[2] if self.dim > 2 else 0
        cdef long c2_end = (hi[2] + 1) if self.dim > 2 else 1
        for c0 in range(lo[0], c0_end):
            for c1 in range(c1_beg, c1_end):
                for c2 in range(c2_beg, c2_end):
                    if self.dim == 1:
                        cell = c0
                    elif self.dim == 2:
                        cell = c0 * self.gm[1] + c1
                    else:
                        cell = (c0 * self.gm[1] + c1) * self.gm[2] + c2
                    pid = self.head[cell]
                    while pid != -1:
                        if pid != exclude:
                            d2 = 0.0
                            for a in range(self.dim):
                                if pid < self.nb:
                                    px = self.bpos[pid, a]
                                else:
                                    px = self.pos[pid - self.nb, a]
                                diff = x[a] - px
                                d2 += diff * diff
                            if d2 <= self.r2:
                                if self.kind == 2:
                                    return 0
                                if self.kind == 1:
                                    count += 1
                                else:
                                    sr2 = self.sigma2 / d2
                                    sr6 = sr2 * sr2 * sr2
                                    acc += self.eps4 * (sr6 * sr6 - sr6) - self.shift
                        pid = self.nxt[pid]
        if self.kind == 1:
            out[0] = <double>count
        else:
            out[0] = acc
        return 1

    # -- state editing -----------------------------------------------------

    cdef void _grow(self):
        cdef long new_cap = self.cap * 2
        new_pos = np.empty((new_cap, self.dim), dtype=np.float64)
        new_pos[: self.cap] = np.asarray(self.pos)
        new_nxt = np.full(self.nb + new_cap, -1, dtype=np.int64)
        new_nxt[: self.nb + self.cap] = np.asarray(self.nxt)
        new_cell = np.full(self.nb + new_cap, -1, dtype=np.int64)
        new_cell[: self.nb + self.cap] = np.asarray(self.cell_of)
        self.pos = new_pos
        self.nxt = new_nxt
        self.cell_of = new_cell
        self.cap = new_cap

    cdef void _insert_point(self, double *x, double term):
        if self.n >= self.cap:
            self._grow()
        cdef long slot = self.n
        cdef int a
        for a in range(self.dim):
            self.pos[slot, a] = x[a]
        if self.has_grid:
            self._grid_insert(self.nb + slot, x)
        self.n += 1
        self.pair_stat += term

    cdef void _delete_point(self, long slot, double term):
        cdef long last = self.n - 1
        cdef int a
        cdef double x[3]
        if self.has_grid:
            self._grid_remove(self.nb + slot)
        if slot != last:
            if self.has_grid:
                self._grid_remove(self.nb + last)
            for a in range(self.dim):
                self.pos[slot, a] = self.pos[last, a]
                x[a] = self.pos[slot, a]
            if self.has_grid:
                self._grid_insert(self.nb + slot, x)
        self.n = last
        self.pair_stat -= term

    def seed_initial(self, init):
        arr = np.asarray(init, dtype=np.float64).reshape(-1, self.dim)
        cdef Py_ssize_t i
        cdef int a
        cdef double x[3]
        cdef double term
        for i in range(arr.shape[0]):
            for a in range(self.dim):
                x[a] = arr[i, a]
            if not self._pair_term(x, -1, &term):
                raise ValueError("initial configuration violates the hard core")
            self._insert_point(x, term)

    # -- one Metropolis move -------------------------------------------------

    cdef void _step(self):
        cdef bitgen_t *rng = self.bitgen
        cdef double u = random_standard_uniform(rng)
        cdef double x[3]
        cdef double x_old[3]
        cdef double term, term_old, w, w_old, w_new, ratio
        cdef long slot
        cdef int a, feasible
        cdef bint inside
        if u < ONE_THIRD:
            self.proposals[0] += 1
            for a in range(self.dim):
                x[a] = self.lower[a] + random_standard_uniform(rng) * self.side[a]
            feasible = self._pair_term(x, -1, &term)
            if feasible:
                w = self.wz * self.z + self.wp * term
                ratio = self.vol / (self.n + 1.0) * exp(-w) * self.bias
            else:
                ratio = 0.0
            if random_standard_uniform(rng) < ratio:
                self._insert_point(x, term)
                self.accepts[0] += 1
        elif u < TWO_THIRDS:
            self.proposals[1] += 1
            if self.n > 0:
                slot = <long>(random_standard_uniform(rng) * self.n)
                for a in range(self.dim):
                    x[a] = self.pos[slot, a]
                self._pair_term(x, slot, &term)
                w = self.wz * self.z + self.wp * term
                ratio = self.n / self.vol * exp(w)
                if random_standard_uniform(rng) < ratio:
                    self._delete_point(slot, term)
                    self.accepts[1] += 1
        else:
            self.proposals[2] += 1
            if self.n > 0:
                slot = <long>(random_standard_uniform(rng) * self.n)
                inside = True
                for a in range(self.dim):
                    x_old[a] = self.pos[slot, a]
                    x[a] = x_old[a] + self.kick * random_standard_normal(rng)
                    if not (self.lower[a] <= x[a] < self.upper[a]):
                        inside = False
                ratio = 0.0
                term = 0.0
                term_old = 0.0
                if inside:
                    feasible = self._pair_term(x, slot, &term)
                    if feasible:
                        w_new = self.wz * self.z + self.wp * term
                        self._pair_term(x_old, slot, &term_old)
                        w_old = self.wz * self.z + self.wp * term_old
                        ratio = exp(-(w_new - w_old))
                if random_standard_uniform(rng) < ratio:
                    if self.has_grid:
                        self._grid_remove(self.nb + slot)
                    for a in range(self.dim):
                        self.pos[slot, a] = x[a]
                    if self.has_grid:
                        self._grid_insert(self.nb + slot, x)
                    self.pair_stat += term - term_old
                    self.accepts[2] += 1
        self.step_count += 1

    def step(self):
        self._step()

    def get_tallies(self):
        return (np.array([self.proposals[0], self.proposals[1],
                          self.proposals[2]], dtype=np.int64),
                np.array([self.accepts[0], self.accepts[1],
                          self.accepts[2]], dtype=np.int64))

    def snapshot(self):
        return np.asarray(self.pos[: self.n]).copy()

    def run(self, long n_steps, long burn_in, long thin, bint keep_samples):
        cdef long n_records = (n_steps - burn_in) // thin
        if n_records < 0:
            n_records = 0
        n_trace = np.zeros(n_records, dtype=np.int64)
        pair_trace = np.zeros(n_records, dtype=np.float64)
        prop_trace = np.zeros((n_records, 3), dtype=np.int64)
        acc_trace = np.zeros((n_records, 3), dtype=np.int64)
        cdef long[::1] n_view = n_trace
        cdef double[::1] pair_view = pair_trace
        cdef long[:, ::1] prop_view = prop_trace
        cdef long[:, ::1] acc_view = acc_trace
        samples = [] if keep_samples else None
        cdef long rec = 0
        cdef long s
        cdef int k
        for s in range(1, n_steps + 1):
            self._step()
            if s > burn_in and (s - burn_in) % thin == 0:
                n_view[rec] = self.n
                pair_view[rec] = self.pair_stat
                for k in range(3):
                    prop_view[rec, k] = self.proposals[k]
                    acc_view[rec, k] = self.accepts[k]
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
            "final_pair_stat": self.pair_stat,
            "proposals": np.array([self.proposals[0], self.proposals[1],
                                   self.proposals[2]], dtype=np.int64),
            "accepts": np.array([self.accepts[0], self.accepts[1],
                                 self.accepts[2]], dtype=np.int64),
        }


def run_chain(kind, dim, z, reach, beta, core2, eps4, sigma2, shift,
              lower, upper, boundary, wz, wp, kick, init,
              n_steps, burn_in, thin, bit_generator,
              keep_samples=True, acceptance_bias=1.0):
    """Run the chain; same contract and bit-identical output as the fallback."""
    chain = CyPairwiseChain(kind, dim, z, reach, beta, core2, eps4, sigma2,
                            shift, lower, upper, boundary, wz, wp, kick,
                            bit_generator, acceptance_bias)
    chain.seed_initial(init)
    return chain.run(int(n_steps), int(burn_in), int(thin), bool(keep_samples))
