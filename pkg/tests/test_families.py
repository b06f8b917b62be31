"""
Update-matrix family and assumption-check tests.
"""

import numpy as np
import pytest

from swgossip.core.exceptions import SizeCapError, ValidationError
from swgossip.families import (
    FamilyKind,
    UpdateMatrixSet,
    b2_window_length,
    broadcast_gossip_set,
    bwgossip_failure_set,
    bwgossip_set,
    check_assumptions,
    check_b3_numeric,
    family_from_dict,
    family_to_dict,
    kempe_moments,
    mean_matrix,
    pushsum_kempe_enumerated,
    pushsum_kempe_set,
    random_gossip_set,
)
from swgossip.graph import from_edge_list, generate_rgg, is_connected
from swgossip.linalg import kron_second_moment, min_positive_entry


class TestBWGossip:
    def test_path_matrices(self, p3):
        family = bwgossip_set(p3)
        k0, k1, k2 = family.matrices
        np.testing.assert_allclose(k0, [[0.5, 0.5, 0], [0, 1, 0], [0, 0, 1]])
        np.testing.assert_allclose(k1, [[1, 0, 0], [1 / 3, 1 / 3, 1 / 3], [0, 0, 1]])
        np.testing.assert_allclose(k2, [[1, 0, 0], [0, 1, 0], [0, 0.5, 0.5]])
        np.testing.assert_allclose(family.probs, [1 / 3] * 3)

    def test_row_i_formula(self, connected_rgg):
        g = connected_rgg
        family = bwgossip_set(g)
        d = g.degrees
        for i, k in enumerate(family.matrices):
            expected = np.eye(g.n)
            expected[i] = np.eye(g.n)[i] - g.laplacian[i] / (d[i] + 1)
            np.testing.assert_allclose(k, expected, atol=1e-15)

    def test_row_stochastic(self, connected_rgg):
        family = bwgossip_set(connected_rgg)
        np.testing.assert_allclose(family.matrices.sum(axis=2), 1.0, atol=1e-12)

    def test_mean_matrix(self, connected_rgg):
        g = connected_rgg
        expected = np.eye(g.n) - np.diag(1.0 / (g.degrees + 1)) @ g.laplacian / g.n
        np.testing.assert_allclose(mean_matrix(bwgossip_set(g)), expected, atol=1e-12)

    def test_disconnected_rejected(self, two_components):
        with pytest.raises(ValidationError):
            bwgossip_set(two_components)


class TestRandomGossip:
    def test_pair(self, k2):
        family = random_gossip_set(k2)
        assert family.size == 1
        np.testing.assert_allclose(family.matrices[0], np.full((2, 2), 0.5))

    def test_doubly_stochastic_and_symmetric(self, connected_rgg):
        family = random_gossip_set(connected_rgg)
        assert family.size == len(connected_rgg.edges())
        for k in family.matrices:
            np.testing.assert_allclose(k, k.T)
            np.testing.assert_allclose(k.sum(axis=0), 1.0)
            np.testing.assert_allclose(k.sum(axis=1), 1.0)


class TestBroadcastGossip:
    def test_column_stochastic_not_mass_conserving(self, p3):
        family = broadcast_gossip_set(p3, gamma=0.5)
        assert not family.mass_conserving
        np.testing.assert_allclose(family.matrices.sum(axis=1), 1.0)
        k1 = family.matrices[1]
        np.testing.assert_allclose(k1, [[0.5, 0, 0], [0.5, 1, 0.5], [0, 0, 0.5]])

    @pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5])
    def test_gamma_range(self, p3, gamma):
        with pytest.raises(ValidationError):
            broadcast_gossip_set(p3, gamma=gamma)

    def test_fails_a1(self, p3):
        report = check_assumptions(broadcast_gossip_set(p3))
        assert not report.a1_row_stochastic
        assert report.failing == ["A1"]


class TestPushSum:
    @pytest.mark.parametrize("n", [2, 3])
    def test_closed_form_moments_match_enumeration(self, n):
        enumerated = pushsum_kempe_enumerated(n)
        assert enumerated.size == n**n
        ek, ekk = kempe_moments(n)
        np.testing.assert_allclose(mean_matrix(enumerated), ek, atol=1e-12)
        np.testing.assert_allclose(kron_second_moment(enumerated.matrices, enumerated.probs), ekk, atol=1e-12)

    def test_implicit_family(self):
        family = pushsum_kempe_set(4)
        assert family.kind is FamilyKind.IMPLICIT_SYNCHRONOUS
        assert family.size is None
        np.testing.assert_allclose(mean_matrix(family), 0.5 * np.eye(4) + 0.125)

    def test_sampler_matrices(self):
        family = pushsum_kempe_set(5)
        rng = np.random.default_rng(0)
        for _ in range(20):
            k = family.sample(rng)
            np.testing.assert_allclose(k.sum(axis=1), 1.0)
            assert np.all(np.diag(k) >= 0.5)

    def test_enumeration_cap(self):
        with pytest.raises(SizeCapError):
            pushsum_kempe_enumerated(4)

    def test_assumptions(self):
        report = check_assumptions(pushsum_kempe_set(6))
        assert report.b_primitive
        assert report.witness_exponent == 1
        assert report.m_K == 0.5


class TestLinkFailures:
    def test_zero_probability_is_plain_bwgossip(self, connected_rgg):
        plain = bwgossip_set(connected_rgg)
        failing = bwgossip_failure_set(connected_rgg, 0.0)
        np.testing.assert_array_equal(plain.matrices, failing.matrices)
        np.testing.assert_array_equal(plain.probs, failing.probs)

    def test_path_enumeration(self, p3):
        family = bwgossip_failure_set(p3, 0.2)
        # node 0: 2 outcomes, node 1: 4, node 2: 2
        assert family.size == 8
        assert family.probs.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(family.matrices.sum(axis=2), 1.0, atol=1e-12)
        # node 1 keeps everything when both links fail
        idle = [k for k, b in zip(family.matrices, family.broadcasters) if b == 1 and np.allclose(k, np.eye(3))]
        assert len(idle) == 1

    def test_failure_slows_mean_mixing(self, p3):
        ek0 = mean_matrix(bwgossip_failure_set(p3, 0.0))
        ek3 = mean_matrix(bwgossip_failure_set(p3, 0.3))
        assert np.all(np.diag(ek3) >= np.diag(ek0) - 1e-15)

    def test_monte_carlo_fallback(self, connected_rgg):
        family = bwgossip_failure_set(connected_rgg, 0.1, max_degree=1, seed=3)
        assert family.kind is FamilyKind.IMPLICIT_SYNCHRONOUS
        assert family.moments_estimated
        ek, ekk = family.closed_moments
        np.testing.assert_allclose(ek.sum(axis=1), 1.0, atol=1e-9)
        exact = mean_matrix(bwgossip_failure_set(connected_rgg, 0.1))
        np.testing.assert_allclose(ek, exact, atol=0.05)

    def test_p_e_range(self, p3):
        with pytest.raises(ValidationError):
            bwgossip_failure_set(p3, 1.0)


class TestAssumptions:
    def test_path(self, p3):
        report = check_assumptions(bwgossip_set(p3))
        assert report.a1_row_stochastic and report.a2_positive_diagonal and report.b_primitive
        assert report.m_K == pytest.approx(1 / 3)
        assert report.p_K == pytest.approx(1 / 3)
        assert report.witness_exponent <= 3 * 3 - 2 * 3 + 2

    def test_disconnected(self, two_components):
        report = check_assumptions(bwgossip_set(two_components, require_connected=False))
        assert not report.b_primitive
        assert report.witness_exponent is None
        assert check_b3_numeric(bwgossip_set(two_components, require_connected=False)) is None

    def test_m_k_bounds_sampled_entries(self, connected_rgg):
        family = bwgossip_set(connected_rgg)
        m_k = check_assumptions(family).m_K
        rng = np.random.default_rng(1)
        for _ in range(10):
            assert min_positive_entry(family.sample(rng)) >= m_k

    def test_b3_on_pair(self, k2):
        assert check_b3_numeric(bwgossip_set(k2)) is not None

    def test_b3_on_enumerated_pushsum(self):
        assert check_b3_numeric(pushsum_kempe_enumerated(2)) in (1, 2)

    def test_b3_size_cap(self, monkeypatch):
        monkeypatch.setenv("SWGOSSIP_B3_MAX_N", "2")
        from swgossip.core.config import get_settings

        get_settings.cache_clear()
        with pytest.raises(SizeCapError):
            check_b3_numeric(bwgossip_set(from_edge_list(3, [(0, 1), (1, 2)])))

    def test_b3_needs_explicit(self):
        with pytest.raises(ValidationError):
            check_b3_numeric(pushsum_kempe_set(3))

    def test_b_agrees_with_b3_on_random_graphs(self):
        """Support connectivity of E[K] and primitivity of E[K⊗K] agree."""
        rng = np.random.default_rng(2024)
        for trial in range(50):
            n = int(rng.integers(2, 9))
            g = generate_rgg(n, float(rng.uniform(0.3, 3.0)), seed=trial)
            family = bwgossip_set(g, require_connected=False)
            b = check_assumptions(family).b_primitive
            b3 = check_b3_numeric(family) is not None
            assert b == b3 == is_connected(g)


class TestWindowLength:
    def test_pair(self, k2):
        assert b2_window_length(bwgossip_set(k2)) == 2

    def test_complete_pushsum_is_capped(self):
        assert b2_window_length(pushsum_kempe_set(3)) == 18

    def test_disconnected_gets_cap(self, two_components):
        assert b2_window_length(bwgossip_set(two_components, require_connected=False)) == 32

    def test_path_window_is_positive(self, p3):
        family = bwgossip_set(p3)
        length = b2_window_length(family)
        assert length < 2 * 9


class TestFamilyValidation:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            UpdateMatrixSet(kind=FamilyKind.EXPLICIT, n=2, name="x", matrices=[np.eye(2)], probs=[0.5])

    def test_negative_entries(self):
        bad = np.array([[1.5, -0.5], [0, 1]])
        with pytest.raises(ValidationError):
            UpdateMatrixSet(kind=FamilyKind.EXPLICIT, n=2, name="x", matrices=[bad], probs=[1.0])

    def test_mass_conserving_needs_row_stochastic(self):
        with pytest.raises(ValidationError):
            UpdateMatrixSet(kind=FamilyKind.EXPLICIT, n=2, name="x", matrices=[0.9 * np.eye(2)], probs=[1.0])

    def test_json_round_trip(self, p3):
        family = bwgossip_failure_set(p3, 0.25)
        restored = family_from_dict(family_to_dict(family))
        np.testing.assert_array_equal(restored.matrices, family.matrices)
        np.testing.assert_array_equal(restored.probs, family.probs)
        np.testing.assert_array_equal(restored.broadcasters, family.broadcasters)
        assert restored.mass_conserving

    def test_import_infers_mass_conservation(self, p3):
        data = family_to_dict(broadcast_gossip_set(p3))
        del data["mass_conserving"]
        assert not family_from_dict(data).mass_conserving
