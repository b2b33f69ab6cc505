"""Tests for experiment drivers: fermionic values, AME, varieties, channels."""

import math

import numpy as np
import pytest

from schmidtmax.experiments import (
    InconsistencyError,
    RankProfile,
    ame_search,
    balanced_cuts,
    channel_min_output,
    channel_pair_multiplicativity,
    fermion_entropy_min,
    fermion_extremal,
    fermion_extremal_target,
    min_output_from_projector,
    probe_setting,
    subspace_variety_dimension,
    table1_protocol,
    variety_probe,
    yang_state_value,
)
from schmidtmax.measures import NormSpec
from schmidtmax.optimize import IterationConfig
from schmidtmax.states import Cut, PureState, schmidt_coefficients
from schmidtmax.subspaces import (
    ChannelSpec,
    FermionSpace,
    slater_basis,
    slater_state,
    span_projector,
    split_isometry,
    wedge,
    yang_pair_state,
)

FAST = IterationConfig(restarts=5, seed=0)


def depolarizing_qubit():
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]),
              np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    return ChannelSpec(tuple((0.5 * np.asarray(p, dtype=complex)) for p in paulis))


class TestFermionTargets:
    def test_single_particle_bound(self):
        val, _ = fermion_extremal_target(6, 3, 1, NormSpec(p=2, k=1))
        assert val == pytest.approx(1 / 3)

    def test_paired_bound(self):
        val, _ = fermion_extremal_target(12, 8, 2, NormSpec(p=2, k=1))
        assert val == pytest.approx((12 - 8 + 2) / (7 * 12))

    def test_two_coefficient_value(self):
        val, _ = fermion_extremal_target(10, 6, 2, NormSpec(p=2, k=2))
        assert val == pytest.approx(1 / 6)

    def test_unknown_combination(self):
        assert fermion_extremal_target(12, 8, 4, NormSpec(p=2, k=1)) is None


class TestFermionExtremal:
    def test_d6_n3(self):
        res = fermion_extremal(6, 3, 1, NormSpec(p=2, k=1), FAST)
        assert abs(res.details["best_value_squared"] - 1 / 3) < 1e-6
        assert res.success_count == 5

    def test_d8_n4(self):
        res = fermion_extremal(8, 4, 2, NormSpec(p=2, k=1), FAST)
        assert abs(res.details["best_value_squared"] - 1 / 4) < 1e-6

    def test_result_shape(self):
        res = fermion_extremal(5, 2, 1, NormSpec(p=2, k=1), FAST)
        doc = res.to_dict()
        assert doc["experiment"] == "fermion_extremal"
        assert doc["restarts"] == 5
        assert res.success_count <= res.restarts


class TestConjecturedOptimizerState:
    @pytest.mark.parametrize("d,n", [(6, 4), (8, 6), (10, 6)])
    def test_wedge_construction_hits_two_coefficient_value(self, d, n):
        """phi_1 ^ phi_2 ^ (paired state on the other d-2 modes) reaches the
        conjectured k=2 optimum."""
        target, _ = fermion_extremal_target(d, n, 2, NormSpec(p=2, k=2))
        # paired 2-fermion state on modes {2..d-1}
        space2 = FermionSpace(d, 2)
        pair = np.zeros(space2.intrinsic_dim, dtype=complex)
        for i in range((d - 2) // 2):
            pair[space2.subset_index((2 + 2 * i, 3 + 2 * i))] = 1.0
        pair /= np.linalg.norm(pair)
        amps = pair
        particles = 2
        while particles < n - 2:
            amps = wedge(FermionSpace(d, particles + 2), amps, particles, pair, 2)
            particles += 2
        head = slater_state(space2, (0, 1)).amps
        full = wedge(FermionSpace(d, n), head, 2, amps, n - 2)
        iso = split_isometry(FermionSpace(d, n), 2)
        state = PureState(iso.dims, iso.embed(full))
        lam = schmidt_coefficients(state, Cut((0,)))
        assert abs(np.sum(lam[:2] ** 2) - target) < 1e-9

    def test_yang_state_value_matches_direct_decomposition(self):
        assert yang_state_value(8, 4, 2) == pytest.approx(0.25, abs=1e-10)


class TestFermionEntropyMin:
    def test_small_case(self):
        res = fermion_entropy_min(4, 2, 1, 2.0, FAST)
        assert abs(res.best_value - math.log(2)) < 1e-6
        assert res.target == pytest.approx(math.log(2))

    def test_purity_bound(self):
        # Tr[rho_A^2] <= 1 / C(N,K) for the best state found
        res = fermion_entropy_min(6, 4, 2, 2.0, FAST)
        purity = math.exp(-res.best_value)
        assert purity <= 1 / math.comb(4, 2) + 1e-6

    def test_von_neumann_reported(self):
        res = fermion_entropy_min(4, 2, 1, 2.0, FAST)
        assert res.details["von_neumann_entropy"] >= res.best_value - 1e-9

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            fermion_entropy_min(4, 2, 1, 1.0, FAST)


class TestBalancedCuts:
    def test_three_parties(self):
        cuts = balanced_cuts((3, 3, 3))
        assert [c.side_a for c in cuts] == [(0,), (1,), (2,)]

    def test_four_parties_deduplicated(self):
        cuts = balanced_cuts((2, 2, 2, 2))
        assert len(cuts) == 3
        for c in cuts:
            assert 0 in c.side_a

    def test_five_parties(self):
        assert len(balanced_cuts((2,) * 5)) == 10


class TestAmeSearch:
    def test_qutrit_triple(self):
        res = ame_search((3, 3, 3), IterationConfig(seed=1, restarts=5))
        assert res.success_count == 5
        for v in res.details["best_per_cut_values"]:
            assert abs(v - math.sqrt(3)) < 1e-5

    def test_success_implies_flat_reductions(self):
        res = ame_search((3, 3, 3), IterationConfig(seed=2, restarts=3))
        psi = PureState((3, 3, 3), res.report.best.amps)
        for cut in balanced_cuts((3, 3, 3)):
            lam = schmidt_coefficients(psi, cut)
            assert np.allclose(lam**2, 1 / 3, atol=1e-4)

    def test_four_qubits_fail(self):
        res = ame_search((2, 2, 2, 2), IterationConfig(seed=3, restarts=5))
        assert res.success_count == 0
        assert max(res.details["best_per_cut_deficits"]) > 1e-5


class TestVarietyProbe:
    def test_rank_one_2x3(self):
        setting = probe_setting("full", "rank", dims=(2, 3), rank=1)
        res = variety_probe(setting, IterationConfig(seed=4, restarts=10))
        assert res.details["max_avoiding_dim"] == 2

    def test_rank_one_2x2(self):
        setting = probe_setting("full", "rank", dims=(2, 2), rank=1)
        res = variety_probe(setting, IterationConfig(seed=5, restarts=10))
        assert res.details["max_avoiding_dim"] == 1

    def test_slater_wedge2_c4(self):
        setting = probe_setting("antisymmetric", "slater", d=4, n_parties=2)
        res = variety_probe(setting, IterationConfig(seed=6, restarts=10))
        # Slater variety has dimension N(d-N)+1, so C(4,2) - (2(4-2)+1) = 1
        assert res.details["max_avoiding_dim"] == 1

    def test_unknown_space_rejected(self):
        with pytest.raises(ValueError):
            probe_setting("bogus", "rank", dims=(2, 2))

    def test_condensate_needs_symmetric_space(self):
        with pytest.raises(ValueError):
            probe_setting("full", "condensate", dims=(2, 2))


class TestSubspaceVarietyDimension:
    def test_three_qubits_product(self):
        assert subspace_variety_dimension(RankProfile((2, 2, 2), (1, 1, 1))) == 4

    def test_bipartite_full_rank_caps(self):
        assert subspace_variety_dimension(RankProfile((3, 3), (2, 2))) == 8

    def test_capped_rank(self):
        # min(2, 1) caps the first factor's contribution
        assert subspace_variety_dimension(RankProfile((3, 3), (2, 1))) == 5

    def test_rank_validation(self):
        with pytest.raises(ValueError):
            RankProfile((3, 3), (4, 1))


class TestChannelMinOutput:
    def test_identity_channel(self):
        chan = ChannelSpec((np.eye(2, dtype=complex),))
        res = channel_min_output(chan, 2.0, FAST, target_entropy=0.0)
        assert abs(res.best_value) < 1e-9

    def test_depolarizing_channel(self):
        res = channel_min_output(depolarizing_qubit(), 2.0, FAST,
                                 target_entropy=math.log(2))
        assert abs(res.best_value - math.log(2)) < 1e-9

    def test_antisymmetric_image(self):
        b = slater_basis(6, 2).toarray()
        proj = span_projector(b.T, label="wedge2C6")
        res = min_output_from_projector(proj, (6, 6), 2.0, FAST,
                                        target_entropy=math.log(2))
        assert abs(res.best_value - math.log(2)) < 1e-6

    def test_alpha_validation(self):
        chan = ChannelSpec((np.eye(2, dtype=complex),))
        with pytest.raises(ValueError):
            channel_min_output(chan, 1.0, FAST)

    def test_pair_multiplicativity_gap(self):
        chan = ChannelSpec((np.eye(2, dtype=complex) / math.sqrt(2),
                            np.diag([1.0, -1.0]).astype(complex) / math.sqrt(2)))
        res = channel_pair_multiplicativity(chan, chan, 2.0, FAST)
        assert res.details["multiplicativity_gap"] <= 1e-8


class TestTable1Protocol:
    def test_rows(self):
        specs = [
            {"kind": "fermion", "label": "coleman", "d": 6, "N": 3, "K": 1},
            {"kind": "ame", "label": "ame", "dims": [3, 3, 3]},
        ]
        rows = table1_protocol(specs, seed=7)
        assert [r["label"] for r in rows] == ["coleman", "ame"]
        for row in rows:
            assert row["successes"] == 10
            assert row["mean_iterations"] is not None

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            table1_protocol([{"kind": "bogus"}])
