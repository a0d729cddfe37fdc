import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtlforge.emb import (
    Embedding,
    HiddenMatrix,
    max_pool,
    pca_project,
    separability_report,
    silhouette_two_groups,
    triplet_loss,
    triplet_loss_grad,
)
from rtlforge.errors import DimensionMismatchError, NonFiniteInputError


def finite_diff(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


class TestMaxPool:
    def test_columnwise_max(self):
        assert np.allclose(max_pool(HiddenMatrix([[1, 4], [3, 2]])).values, [3, 4])

    def test_single_row_identity(self):
        row = [0.5, -1.0, 2.0]
        assert np.allclose(max_pool(HiddenMatrix([row])).values, row)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(6, 5))
        p = m[rng.permutation(6)]
        assert np.allclose(max_pool(HiddenMatrix(m)).values, max_pool(HiddenMatrix(p)).values)

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteInputError):
            HiddenMatrix([[1.0, float("nan")]])

    @given(st.integers(0, 4), st.integers(0, 3), st.floats(0.01, 5.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone(self, row, col, bump):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(5, 4))
        before = max_pool(HiddenMatrix(m)).values
        m2 = m.copy()
        m2[row, col] += bump
        after = max_pool(HiddenMatrix(m2)).values
        assert np.all(after >= before - 1e-12)


class TestTripletLoss:
    def test_coincident_points(self):
        z = np.zeros(4)
        assert triplet_loss(z, z, z, 1.0) == 1.0

    def test_hinge_inactive(self):
        a = np.zeros(2)
        p = np.array([0.5, 0.0])
        n = np.array([3.0, 0.0])
        assert triplet_loss(a, p, n, 1.0) == 0.0

    def test_hand_computed(self):
        assert triplet_loss((0, 0), (0, 1), (2, 0), 1.0) == 0.0
        # active case: d_ap=2, d_an=1, m=0.5 -> 1.5
        assert triplet_loss((0, 0), (2, 0), (0, 1), 0.5) == pytest.approx(1.5)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            triplet_loss(np.zeros(3), np.zeros(2), np.zeros(3), 1.0)

    def test_negative_margin_rejected(self):
        with pytest.raises(ValueError):
            triplet_loss(np.zeros(2), np.zeros(2), np.zeros(2), -0.1)

    def test_nonnegative_and_zero_condition(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, p, n = rng.normal(size=(3, 5))
            m = float(rng.uniform(0, 2))
            loss = triplet_loss(a, p, n, m)
            d_ap = np.linalg.norm(a - p)
            d_an = np.linalg.norm(a - n)
            assert loss >= 0
            assert (loss == 0) == (d_an >= d_ap + m)

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(3)
        a, p, n = rng.normal(size=(3, 6))
        q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        assert triplet_loss(q @ a, q @ p, q @ n, 1.0) == pytest.approx(
            triplet_loss(a, p, n, 1.0), abs=1e-10
        )

    def test_accepts_embedding_objects(self):
        a = Embedding([0.0, 0.0])
        p = Embedding([1.0, 0.0])
        n = Embedding([0.0, 3.0])
        assert triplet_loss(a, p, n, 1.0) == 0.0


class TestTripletGrad:
    def test_inactive_hinge_zero_grads(self):
        a = np.zeros(3)
        p = np.array([0.1, 0, 0])
        n = np.array([9.0, 0, 0])
        for g in triplet_loss_grad(a, p, n, 1.0):
            assert np.all(g == 0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 100:
            a, p, n = rng.normal(size=(3, 8))
            m = 1.0
            if triplet_loss(a, p, n, m) < 1e-3:
                continue
            ga, gp, gn = triplet_loss_grad(a, p, n, m)
            for vec, grad, idx in ((a, ga, 0), (p, gp, 1), (n, gn, 2)):
                def f(x, idx=idx):
                    trio = [a, p, n]
                    trio[idx] = x
                    return triplet_loss(*trio, m)

                fd = finite_diff(f, vec.copy())
                rel = np.abs(grad - fd) / np.maximum(1e-8, np.abs(grad) + np.abs(fd))
                assert rel.max() < 1e-5
            checked += 1

    def test_grad_p_formula(self):
        rng = np.random.default_rng(5)
        a, p, n = rng.normal(size=(3, 4))
        if triplet_loss(a, p, n, 5.0) > 0:  # large margin keeps hinge active
            _, gp, _ = triplet_loss_grad(a, p, n, 5.0)
            expect = (p - a) / np.linalg.norm(a - p)
            assert np.allclose(gp, expect, atol=1e-12)


class TestPCA:
    def test_axis_aligned(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        proj, comp, var = pca_project(pts, 2)
        assert np.allclose(np.abs(comp[0]), [1, 0])
        assert comp[0][0] > 0  # deterministic sign
        assert var[1] == pytest.approx(0.0, abs=1e-12)

    def test_completeness(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(30, 6)) * np.array([4, 3, 2, 1, 0.5, 0.1])
        proj, comp, var = pca_project(x, 6)
        assert np.allclose(comp @ comp.T, np.eye(6), atol=1e-6)
        assert var.sum() == pytest.approx(x.var(axis=0, ddof=1).sum(), abs=1e-9)
        centered = x - x.mean(axis=0)
        assert np.abs(proj @ comp - centered).max() < 1e-6

    def test_two_cluster_sign_separation(self):
        pts = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.1], [10.1, 0.1]])
        proj, comp, var = pca_project(pts, 1)
        signs = np.sign(proj[:, 0])
        assert signs[0] == signs[1] and signs[2] == signs[3] and signs[0] != signs[2]

    def test_variances_sorted_descending(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(50, 5)) * np.array([1, 5, 2, 0.5, 3])
        _, _, var = pca_project(x, 5)
        assert all(var[i] >= var[i + 1] - 1e-12 for i in range(4))

    def test_degenerate_zero_variance(self):
        pts = np.ones((5, 3))
        proj, comp, var = pca_project(pts, 2)
        assert np.allclose(var, 0.0)
        assert np.allclose(comp @ comp.T, np.eye(2), atol=1e-9)

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            pca_project(np.zeros((3, 2)), 3)


class TestSeparability:
    def test_identical_distributions_score_near_zero(self, tmp_path):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(60, 4))
        b = rng.normal(size=(60, 4))
        rep = separability_report(a, b, tmp_path / "r0")
        assert abs(rep.score) < 0.15
        assert rep.csv_path.exists()

    def test_distant_clusters_score_near_one(self, tmp_path):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(40, 4))
        b = rng.normal(size=(40, 4)) + 40.0
        rep = separability_report(a, b, tmp_path / "r1")
        assert rep.score > 0.9

    def test_post_beats_pre_with_wider_separation(self, tmp_path):
        rng = np.random.default_rng(8)
        spread = rng.normal(size=(50, 6))
        offset = np.zeros(6)
        offset[0] = 2.0
        pre = separability_report(spread, rng.normal(size=(50, 6)) + offset, tmp_path / "pre")
        post = separability_report(spread, rng.normal(size=(50, 6)) + 3 * offset, tmp_path / "post")
        assert post.score > pre.score

    def test_minimum_group_size(self, tmp_path):
        with pytest.raises(ValueError):
            separability_report(np.zeros((1, 2)), np.zeros((5, 2)), tmp_path / "bad")

    def test_silhouette_symmetric_range(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(20, 2))
        b = rng.normal(size=(20, 2))
        s = silhouette_two_groups(a, b)
        assert -1.0 <= s <= 1.0
