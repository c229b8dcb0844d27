import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import stats

from kdenoise.grid import DomainError
from kdenoise.kernels import (PatchSpec, PhotometricSpec, WindowSpec, bo_gate, boundary_distance,
                              box_sum, extract_patch, mo_gate, nlm_avg_gate, nlm_euclid_gate,
                              patch_means, spatial_window, yf_gate)
from reference import chessboard_distance_bruteforce


class TestSpecs:
    def test_window_side(self):
        assert WindowSpec(3).side == 7
        assert WindowSpec.from_side(23).radius_px == 11
        assert WindowSpec(4).h(64) == 4 / 64

    @pytest.mark.parametrize("side", [0, 4, -1])
    def test_bad_side(self, side):
        with pytest.raises(DomainError):
            WindowSpec.from_side(side)

    @pytest.mark.parametrize("w", [0, 2, 8])
    def test_bad_patch(self, w):
        with pytest.raises(DomainError):
            PatchSpec(w)

    def test_bad_photometric(self):
        with pytest.raises(DomainError):
            PhotometricSpec("yf", -0.1)
        with pytest.raises(DomainError):
            PhotometricSpec("gaussian", 0.1)


class TestSpatialWindow:
    def test_interior(self):
        assert len(spatial_window((5, 5), WindowSpec(1), 10)) == 9

    def test_corner(self):
        w = spatial_window((0, 0), WindowSpec(1), 10)
        assert sorted(map(tuple, w)) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_radius_zero(self):
        assert spatial_window((3, 4), WindowSpec(0), 10).tolist() == [[3, 4]]

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 12), radius=st.integers(0, 5), data=st.data())
    def test_matches_definition(self, n, radius, data):
        i = data.draw(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)))
        got = set(map(tuple, spatial_window(i, WindowSpec(radius), n)))
        want = {(a, b) for a in range(n) for b in range(n)
                if max(abs(a - i[0]), abs(b - i[1])) <= radius}
        assert got == want


class TestPatches:
    def test_width_one(self):
        y = np.arange(16.0).reshape(4, 4)
        assert extract_patch(y, (2, 1), PatchSpec(1)).tolist() == [9.0]

    def test_constant(self):
        p = extract_patch(np.full((6, 6), 0.3), (0, 5), PatchSpec(5))
        assert p.shape == (25,) and np.all(p == 0.3)

    def test_mirror_1d(self):
        # 1-based pixel 1 is numpy index 0
        assert extract_patch(np.array([1.0, 2.0, 3.0]), 0, PatchSpec(3)).tolist() == [2, 1, 2]

    def test_too_wide(self):
        with pytest.raises(DomainError):
            extract_patch(np.zeros(3), 0, PatchSpec(7))

    def test_means_match_patches(self):
        y = np.random.default_rng(1).random((9, 9))
        spec = PatchSpec(5)
        means = patch_means(y, spec)
        for i in [(0, 0), (4, 4), (8, 2)]:
            assert means[i] == pytest.approx(extract_patch(y, i, spec).mean(), rel=1e-13)

    def test_box_sum_width_one_identity(self):
        a = np.random.default_rng(2).random((5, 5))
        assert box_sum(a, 1) is a or np.array_equal(box_sum(a, 1), a)

    def test_box_sum_small(self):
        a = np.arange(1.0, 6.0)
        assert box_sum(a, 3).tolist() == [6.0, 9.0, 12.0]


class TestGates:
    def test_yf_examples(self):
        assert yf_gate(0.5, 0.5, 0.0) == 1
        assert yf_gate(0.0, 0.3, 0.2) == 0
        assert yf_gate(0.25, 0.5, 0.25) == 1

    def test_nlm_examples(self):
        p = np.linspace(0, 1, 9)
        assert nlm_euclid_gate(p, p, 0.0) == 1
        q = p.copy()
        q[4] += 0.4
        assert nlm_euclid_gate(p, q, 0.2) == 0
        assert nlm_euclid_gate(p, q, 0.4) == 1
        with pytest.raises(DomainError):
            nlm_euclid_gate(p, p[:4], 1.0)

    def test_nlm_avg_examples(self):
        assert nlm_avg_gate(0.3, 0.3, 0.0) == 1
        assert nlm_avg_gate(0.1, 0.5, 0.29 * 20 / 255) == 0

    def test_mo_examples(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[:2] = True
        assert mo_gate(mask, (0, 0), (1, 3)) == 1
        assert mo_gate(mask, (1, 0), (2, 0)) == 0
        full = np.ones((4, 4), dtype=bool)
        assert all(mo_gate(full, i, j) for i in np.ndindex(4, 4) for j in np.ndindex(4, 4))

    def test_boundary_distance_examples(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 2] = True
        dist = boundary_distance(mask)
        assert dist[2, 3] == 1 and dist[1, 1] == 1 and dist[2, 2] == 1
        assert dist[0, 0] == 2
        assert np.all(np.isinf(boundary_distance(np.ones((4, 4), dtype=bool))))
        assert np.all(np.isinf(boundary_distance(np.zeros((4, 4), dtype=bool))))

    def test_bo_examples(self):
        dist = np.full((7, 7), 3.0)
        assert bo_gate(dist, (3, 3), (3, 3)) == 1
        assert bo_gate(dist, (3, 3), (3, 6)) == 0
        assert bo_gate(dist, (3, 3), (5, 5)) == 1
        assert bo_gate(np.zeros((2, 2)), (0, 0), (0, 0)) == 0

    def test_bo_asymmetric(self):
        dist = np.array([1.0, 1.0, 3.0])
        assert bo_gate(dist, 2, 1) == 1 and bo_gate(dist, 1, 2) == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_boundary_distance_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        mask = rng.random((16, 16)) < rng.uniform(0.05, 0.6)
        assert np.array_equal(boundary_distance(mask), chessboard_distance_bruteforce(mask))

    def test_bo_window_never_crosses(self):
        n = 32
        x = (np.arange(n) + 0.5) / n
        mask = (x[:, None] - 0.4) ** 2 + (x[None, :] - 0.55) ** 2 < 0.3 ** 2
        dist = boundary_distance(mask)
        idx = np.array(list(np.ndindex(n, n)))
        flat = mask.ravel()
        for k, i in enumerate(idx):
            sep = np.max(np.abs(idx - i), axis=1)
            inside = sep < dist[tuple(i)]
            assert np.all(flat[inside] == flat[k])

    @settings(max_examples=60, deadline=None)
    @given(a=st.floats(0, 1), b=st.floats(0, 1), h=st.floats(0, 1), h2=st.floats(0, 1))
    def test_scalar_symmetry_and_monotonicity(self, a, b, h, h2):
        lo, hi = sorted((h, h2))
        for gate in (yf_gate, nlm_avg_gate):
            assert gate(a, b, h) == gate(b, a, h)
            assert gate(a, b, lo) <= gate(a, b, hi)
            assert gate(a, a, 0.0) == 1

    @settings(max_examples=40, deadline=None)
    @given(p=hnp.arrays(np.float64, 9, elements=st.floats(0, 1)),
           q=hnp.arrays(np.float64, 9, elements=st.floats(0, 1)),
           h=st.floats(0, 3), h2=st.floats(0, 3))
    def test_nlm_symmetry_and_monotonicity(self, p, q, h, h2):
        lo, hi = sorted((h, h2))
        assert nlm_euclid_gate(p, q, h) == nlm_euclid_gate(q, p, h)
        assert nlm_euclid_gate(p, q, lo) <= nlm_euclid_gate(p, q, hi)

    @settings(max_examples=40, deadline=None)
    @given(y=hnp.arrays(np.float64, (5, 5), elements=st.floats(0, 1)), h=st.floats(0, 1),
           i=st.tuples(st.integers(0, 4), st.integers(0, 4)),
           j=st.tuples(st.integers(0, 4), st.integers(0, 4)))
    def test_width_one_patches_reduce_to_yf(self, y, h, i, j):
        spec = PatchSpec(1)
        assert nlm_euclid_gate(extract_patch(y, i, spec), extract_patch(y, j, spec), h) == \
            yf_gate(y[i], y[j], h)
        means = patch_means(y, spec)
        assert nlm_avg_gate(means[i], means[j], h) == yf_gate(y[i], y[j], h)

    @settings(max_examples=30, deadline=None)
    @given(m=hnp.arrays(np.bool_, (6, 6)),
           i=st.tuples(st.integers(0, 5), st.integers(0, 5)),
           j=st.tuples(st.integers(0, 5), st.integers(0, 5)))
    def test_mo_symmetry(self, m, i, j):
        assert mo_gate(m, i, j) == mo_gate(m, j, i)
        assert mo_gate(m, i, i) == 1


class TestNlmAcceptanceProbability:
    """Pairs of 7x7 noise-only patches: ||d||^2 / (2 sigma^2) follows chi^2 with 49 dof."""

    @pytest.mark.parametrize("factor", [13.1, np.sqrt(98.0), 9.0])
    def test_matches_chi_square(self, factor):
        sigma, n_pairs, w = 0.05, 20000, 7
        rng = np.random.default_rng(42)
        p = sigma * rng.standard_normal((n_pairs, w * w))
        q = sigma * rng.standard_normal((n_pairs, w * w))
        h = factor * sigma
        accepted = np.mean([nlm_euclid_gate(a, b, h) for a, b in zip(p, q)])
        expected = stats.chi2.cdf(factor ** 2 / 2, df=w * w)
        assert abs(accepted - expected) <= 0.02
