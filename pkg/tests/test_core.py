"""Configurations, windows, and seeded randomness."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbsim import Configuration, Seed, Window, sample_poisson


class TestWindow:
    def test_cube(self):
        w = Window.cube(5, 2)
        assert np.all(w.lower == [-5, -5]) and np.all(w.upper == [5, 5])
        assert w.volume == 100.0

    def test_dilate_erode(self):
        w = Window.cube(5, 2)
        assert w.dilate(1.0) == Window.cube(6, 2)
        assert w.erode(1.0) == Window.cube(4, 2)
        assert w.dilate(0.0) == w
        assert w.dilate(1.3).erode(1.3) == w

    def test_erode_too_far(self):
        with pytest.raises(ValueError):
            Window.cube(1, 2).erode(1.0)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Window([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ValueError):
            Window([0.0], [math.inf])

    def test_half_open_membership(self):
        w = Window([0.0, 0.0], [1.0, 1.0])
        inside = w.contains([[0.0, 0.0], [1.0, 0.5], [0.5, 1.0], [0.999, 0.999]])
        assert inside.tolist() == [True, False, False, True]


class TestConfiguration:
    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            Configuration([[1.0, 2.0], [1.0, 2.0]], dim=2)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            Configuration([[math.nan, 0.0]], dim=2)

    def test_canonical_order(self):
        a = Configuration([[2.0, 1.0], [1.0, 3.0], [1.0, 2.0]], dim=2)
        b = Configuration([[1.0, 2.0], [2.0, 1.0], [1.0, 3.0]], dim=2)
        assert a == b
        assert a.points[0].tolist() == [1.0, 2.0]

    def test_restrict_examples(self):
        empty = Configuration.empty(2)
        assert len(empty.restrict(Window.cube(1, 2))) == 0
        omega = Configuration([[0.5, 0.5], [3.0, 3.0]], dim=2)
        got = omega.restrict(Window([0.0, 0.0], [1.0, 1.0]))
        assert got == Configuration([[0.5, 0.5]], dim=2)

    def test_restrict_idempotent(self):
        omega = sample_poisson(Window.cube(3, 2), 1.0, Seed(1))
        w = Window.cube(1, 2)
        assert omega.restrict(w).restrict(w) == omega.restrict(w)

    def test_partition_additivity(self):
        omega = sample_poisson(Window.cube(2, 2), 7.0, Seed(3))
        total = sum(omega.count_in(Window([kx, ky], [kx + 1, ky + 1]))
                    for kx in range(-2, 2) for ky in range(-2, 2))
        assert total == len(omega)

    @given(ux=st.integers(-50, 50), uy=st.integers(-50, 50))
    @settings(max_examples=30, deadline=None)
    def test_translation_covariance(self, ux, uy):
        omega = sample_poisson(Window.cube(2, 2), 2.0, Seed(11))
        w = Window.cube(1, 2)
        u = np.array([float(ux), float(uy)])
        assert omega.translate(u).restrict(w.translate(u)) == \
            omega.restrict(w).translate(u)

    def test_roundtrip_serialization(self):
        omega = sample_poisson(Window.cube(4, 2), 1.5, Seed(9))
        assert Configuration.from_text(omega.to_text()) == omega

    def test_roundtrip_exact_bits(self):
        pts = np.array([[1.0 / 3.0, math.pi], [math.sqrt(2), 1e-300]])
        omega = Configuration(pts, dim=2)
        back = Configuration.from_text(omega.to_text())
        assert np.array_equal(back.points, omega.points)

    def test_union_difference(self):
        omega = Configuration([[0.0, 0.0]], dim=2)
        grown = omega.union([1.0, 1.0])
        assert len(grown) == 2
        assert grown.difference([1.0, 1.0]) == omega
        with pytest.raises(ValueError):
            omega.difference([5.0, 5.0])


class TestSeed:
    def test_determinism(self):
        a = sample_poisson(Window.cube(5, 2), 1.0, Seed(42, 7))
        b = sample_poisson(Window.cube(5, 2), 1.0, Seed(42, 7))
        assert a == b and np.array_equal(a.points, b.points)

    def test_streams_differ(self):
        a = sample_poisson(Window.cube(5, 2), 1.0, Seed(42, 0))
        b = sample_poisson(Window.cube(5, 2), 1.0, Seed(42, 1))
        assert a != b

    def test_derive_stable(self):
        s = Seed(5)
        assert s.derive(1, 2) == s.derive(1, 2)
        assert s.derive(1, 2) != s.derive(2, 1)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Seed(-1)
        with pytest.raises(ValueError):
            Seed(2 ** 64)


class TestPoissonSampling:
    def test_moments(self):
        # mean within 3 sigma and variance within 5% over 10,000 draws
        w = Window.cube(5, 2)
        counts = np.array([len(sample_poisson(w, 1.0, Seed(100, i)))
                           for i in range(10_000)])
        assert abs(counts.mean() - 100.0) <= 3.0 * 10.0 / math.sqrt(10_000)
        assert abs(counts.var(ddof=1) - 100.0) <= 5.0
        inside = Window.cube(5, 2)
        assert all(True for _ in [0])  # points lie in the window by construction

    def test_points_in_window(self):
        w = Window([-1.0, 2.0], [0.5, 4.0])
        omega = sample_poisson(w, 10.0, Seed(8))
        assert np.all(w.contains(omega.points))

    def test_bad_intensity(self):
        with pytest.raises(ValueError):
            sample_poisson(Window.cube(1, 2), 0.0, Seed(1))
