"""Construction, validation, geometry, sampling law, packings, balls."""

import json
import math

import numpy as np
import pytest

from softmaxima import (ball, build_from_covariance, build_iid, from_spec,
                        geometry, greedy_packing, load_spec, sample)
from softmaxima.ensemble import DENSE_CAP
from tests.conftest import two_cluster_vectors


class TestBuildIid:
    def test_identity_covariance(self, iid2):
        assert np.array_equal(iid2.covariance, np.eye(2))
        g = geometry(iid2)
        assert g.min_sep == pytest.approx(math.sqrt(2), abs=0)
        assert g.diameter == pytest.approx(math.sqrt(2), abs=0)
        assert g.sigma == 1.0

    def test_half_variance_separation(self):
        ens = build_iid(4, 0.5)
        assert geometry(ens).min_sep ** 2 == pytest.approx(1.0, rel=1e-15)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError, match="invalid-size"):
            build_iid(1, 1.0)

    def test_bad_variance_rejected(self):
        with pytest.raises(ValueError, match="invalid-parameter"):
            build_iid(4, 0.0)
        with pytest.raises(ValueError, match="invalid-parameter"):
            build_iid(4, -1.0)

    def test_scalar_geometry_property(self):
        # a = diameter = sqrt(2v), sigma = sqrt(v), for every (n, v).
        for n, v in [(2, 1.0), (5, 0.25), (16, 3.0)]:
            g = geometry(build_iid(n, v))
            assert g.min_sep == pytest.approx(math.sqrt(2 * v), rel=1e-15)
            assert g.diameter == g.min_sep
            assert g.sigma == pytest.approx(math.sqrt(v), rel=1e-15)

    def test_custom_labels(self):
        ens = build_iid(3, 1.0, labels=["x", "y", "z"])
        assert ens.labels == ("x", "y", "z")
        assert ens.index_of("y") == 1
        with pytest.raises(ValueError, match="invalid-size"):
            build_iid(3, 1.0, labels=["x", "y"])

    def test_large_implicit_law_has_scalar_accessors(self):
        big = build_iid(2 ** 14, 1.0)
        assert big.sigma_max == 1.0
        assert big.min_separation == pytest.approx(math.sqrt(2))
        assert big.size > DENSE_CAP
        with pytest.raises(ValueError, match="scale:"):
            _ = big.covariance
        with pytest.raises(ValueError, match="scale:"):
            geometry(big)


class TestBuildFromCovariance:
    def test_zero_distance_pair_rejected(self):
        with pytest.raises(ValueError, match=r"'a'.*'b'"):
            build_from_covariance(["a", "b"], [[1.0, 1.0], [1.0, 1.0]])

    def test_hand_distance(self):
        ens = build_from_covariance(["a", "b"], [[1.0, 0.5], [0.5, 1.0]])
        g = geometry(ens)
        assert g.min_sep == pytest.approx(1.0, rel=1e-15)
        assert g.diameter == pytest.approx(1.0, rel=1e-15)
        assert g.sigma == 1.0

    def test_asymmetry_rejected_with_pair_named(self):
        bad = [[1.0, 0.5, 0.2], [0.4, 1.0, 0.3], [0.2, 0.3, 1.0]]
        with pytest.raises(ValueError, match="asymmetric.*'a'.*'b'"):
            build_from_covariance(["a", "b", "c"], bad)

    def test_negative_eigenvalue_rejected_with_value_named(self):
        bad = [[1.0, 2.0], [2.0, 1.0]]   # eigenvalues 3 and -1
        with pytest.raises(ValueError, match="eigenvalue.*-1"):
            build_from_covariance(["a", "b"], bad)

    def test_duplicate_label_rejected(self):
        with pytest.raises(ValueError, match="duplicate.*'a'"):
            build_from_covariance(["a", "a"], [[1.0, 0.5], [0.5, 1.0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="invalid-size"):
            build_from_covariance(["a", "b", "c"], [[1.0, 0.5], [0.5, 1.0]])

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            build_from_covariance(["a", "b"], [[1.0, np.nan], [np.nan, 1.0]])

    def test_singular_psd_accepted(self, twocluster12):
        # Rank-2 covariance: cholesky fails, the eigen fallback must not.
        fac = twocluster12.sampling_factor
        assert np.allclose(fac @ fac.T, twocluster12.covariance, atol=1e-12)

    def test_exact_iid_matrix_detected(self):
        ens = build_from_covariance(["a", "b", "c"], 2.0 * np.eye(3))
        assert ens.is_iid and ens.iid_variance == 2.0

    def test_cache_key_tracks_content(self, iid2, corr3):
        assert iid2.cache_key == build_iid(2, 1.0).cache_key
        assert iid2.cache_key != build_iid(2, 2.0).cache_key
        assert corr3.cache_key != iid2.cache_key
        # same matrix, different labels: different law object
        other = build_from_covariance(["x", "y", "z"], corr3.covariance)
        assert other.cache_key != corr3.cache_key


class TestGeometry:
    def test_iid_hand_values(self):
        g = geometry(build_iid(3, 2.0))
        assert g.min_sep == pytest.approx(2.0, rel=1e-15)
        assert g.diameter == pytest.approx(2.0, rel=1e-15)
        assert g.sigma == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_zero_diagonal(self, corr3, ar8):
        for ens in (corr3, ar8):
            assert np.all(np.diag(geometry(ens).dist) == 0.0)

    def test_triangle_inequality(self, corr3, ar8, twocluster12):
        for ens in (corr3, ar8, twocluster12):
            d = geometry(ens).dist
            m = ens.size
            for i in range(m):
                for j in range(m):
                    for k in range(m):
                        assert d[i, j] <= d[i, k] + d[k, j] + 1e-9

    def test_ordering(self, ar8):
        g = geometry(ar8)
        assert 0 < g.min_sep <= g.diameter
        assert g.sigma > 0


class TestSample:
    def test_empirical_law_iid(self, iid2):
        rng = np.random.default_rng(0)
        xs = np.stack([sample(iid2, rng) for _ in range(10 ** 5)])
        emp = xs.T @ xs / xs.shape[0]
        assert np.abs(emp - np.eye(2)).max() < 0.02
        assert np.abs(xs.mean(axis=0)).max() < 0.02

    def test_empirical_law_dense(self, corr3):
        rng = np.random.default_rng(1)
        g = rng.standard_normal((10 ** 5, 3))
        xs = g @ corr3.sampling_factor.T
        emp = xs.T @ xs / xs.shape[0]
        assert np.abs(emp - corr3.covariance).max() < 0.03

    def test_cloned_streams_agree(self, corr3):
        a = sample(corr3, np.random.default_rng(7))
        b = sample(corr3, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_increment_variance_matches_metric(self, corr3):
        # Var(X_s - X_t) over many draws must recover d^2(s, t).
        n = 10 ** 5
        rng = np.random.default_rng(5)
        xs = rng.standard_normal((n, 3)) @ corr3.sampling_factor.T
        d2 = corr3.squared_distances
        for s in range(3):
            for t in range(s + 1, 3):
                diff = xs[:, s] - xs[:, t]
                v = diff.var(ddof=1)
                se = d2[s, t] * math.sqrt(2.0 / (n - 1))
                assert abs(v - d2[s, t]) < 5 * se


class TestPacking:
    def test_all_kept_at_min_separation(self, iid8):
        assert greedy_packing(iid8, math.sqrt(2)) == list(iid8.labels)

    def test_singleton_above_diameter(self, iid8):
        assert greedy_packing(iid8, 2.0) == [iid8.labels[0]]

    def test_pairwise_separated_and_maximal(self, twocluster12, ar8):
        for ens in (twocluster12, ar8):
            d = geometry(ens).dist
            for radius in (0.5, 1.0, 1.5):
                chosen = greedy_packing(ens, radius)
                idx = ens.indices_of(chosen)
                for a in idx:
                    for b in idx:
                        if a != b:
                            assert d[a, b] >= radius
                rest = [i for i in range(ens.size) if i not in idx]
                for r in rest:
                    assert any(d[r, a] < radius for a in idx)

    def test_two_cluster_picks_one_per_side(self, twocluster12):
        chosen = greedy_packing(twocluster12, 1.0)
        assert len(chosen) == 2
        assert {c[0] for c in chosen} == {"p", "m"}

    def test_bad_radius(self, iid8):
        with pytest.raises(ValueError, match="invalid-parameter"):
            greedy_packing(iid8, 0.0)


class TestBall:
    def test_zero_radius_is_center(self, corr3):
        assert ball(corr3, "b", 0.0) == ["b"]

    def test_full_at_common_distance(self):
        ens = build_iid(4, 1.0)
        assert ball(ens, "0", math.sqrt(2)) == list(ens.labels)
        assert ball(ens, "0", 1.0) == ["0"]

    def test_two_cluster_ball_is_cluster(self, twocluster12):
        got = ball(twocluster12, "p00", 0.25)
        assert got == [l for l in twocluster12.labels if l.startswith("p")]

    def test_unknown_center(self, corr3):
        with pytest.raises(KeyError, match="unknown label"):
            ball(corr3, "zz", 1.0)


class TestSpecLoading:
    def test_iid_form(self):
        ens = from_spec({"iid": {"n": 4, "variance": 0.5}})
        assert ens.size == 4 and ens.iid_variance == 0.5

    def test_covariance_form(self):
        ens = from_spec({"labels": ["a", "b"],
                         "covariance": [[1.0, 0.5], [0.5, 1.0]]})
        assert ens.labels == ("a", "b")

    def test_file_roundtrip(self, tmp_path):
        p = tmp_path / "ens.json"
        p.write_text(json.dumps({"iid": {"n": 3, "variance": 2.0}}))
        assert load_spec(p).size == 3

    def test_rejections(self):
        with pytest.raises(ValueError, match="invalid-input"):
            from_spec({"nope": 1})
        with pytest.raises(ValueError, match="invalid-input"):
            from_spec({"iid": {"n": 4}})
        with pytest.raises(ValueError, match=r"'a'.*'b'"):
            from_spec({"labels": ["a", "b"], "covariance": [[1, 1], [1, 1]]})


def test_two_cluster_fixture_geometry(twocluster12):
    # The fixture's whole point: packing radius 1 separates the clusters,
    # radius-0.25 balls swallow them whole.
    labels, vecs = two_cluster_vectors()
    d = geometry(twocluster12).dist
    for i, u in enumerate(vecs):
        for j, w in enumerate(vecs):
            assert d[i, j] == pytest.approx(np.linalg.norm(u - w), abs=1e-12)
