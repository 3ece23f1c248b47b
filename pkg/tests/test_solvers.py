"""Tests for the QUBO solvers: exactness, determinism, soundness, decomposition."""

import json

import numpy as np
import pytest

from enerqubo.hens import HensInstance, hens_discretize, hens_to_qubo
from enerqubo.qap import QapInstance, qap_to_qubo
from enerqubo.qubo import Qubo
from enerqubo.solvers import (
    DecompParams,
    SampleRecord,
    SampleSet,
    SaParams,
    TabuParams,
    brute_force,
    decompose_solve,
    simulated_anneal,
    solve,
    tabu_search,
)
from enerqubo.varmap import PenaltyWeights

QAP_2X2 = qap_to_qubo(
    QapInstance(cost=[[0, 1], [1, 0]], flow=[[0, 3], [3, 0]]), PenaltyWeights(10.0)
)[0]
HENS_1X1 = hens_to_qubo(
    hens_discretize(HensInstance(supply=[4.0], demand=[4.0], cost=[[7.0]]), 4)
)[0]


def random_model(rng, n, density=0.4):
    linear = {i: float(rng.normal()) for i in range(n) if rng.random() < density}
    quadratic = {
        (i, j): float(rng.normal())
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < density
    }
    return Qubo(n, linear, quadratic, float(rng.normal()))


class TestBruteForce:
    def test_single_negative_bias(self):
        result = brute_force(Qubo(1, {0: -1.0}))
        assert result.best().bits == (1,)
        assert result.best().energy == -1.0

    def test_qap_optimum(self):
        assert brute_force(QAP_2X2).best().energy == pytest.approx(6.0)

    def test_empty_model(self):
        result = brute_force(Qubo(0, {}, {}, 2.5))
        assert result.best().energy == 2.5

    def test_size_guard(self):
        with pytest.raises(ValueError):
            brute_force(Qubo(25))

    def test_lexicographic_tie_break(self):
        # both single-bit states tie at zero linear cost; all-zeros wins
        result = brute_force(Qubo(2))
        assert result.best().bits == (0, 0)

    def test_matches_python_enumeration(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            q = random_model(rng, int(rng.integers(1, 10)))
            best = min(
                (q.energy([(x >> (q.num_vars - 1 - i)) & 1 for i in range(q.num_vars)]))
                for x in range(1 << q.num_vars)
            )
            assert brute_force(q).best().energy == pytest.approx(best, rel=1e-12)


class TestSimulatedAnneal:
    def test_zero_model(self):
        result = simulated_anneal(Qubo(3), SaParams(reads=3, sweeps=10))
        assert result.best().energy == 0.0

    def test_qap_reaches_optimum(self):
        result = simulated_anneal(QAP_2X2, SaParams(reads=50, sweeps=150, seed=1))
        assert result.best().energy == pytest.approx(6.0)

    def test_hens_reaches_optimum(self):
        result = simulated_anneal(HENS_1X1, SaParams(reads=50, sweeps=150, seed=1))
        assert result.best().energy == pytest.approx(7.0)

    def test_determinism(self):
        params = SaParams(reads=10, sweeps=50, seed=7)
        a = simulated_anneal(QAP_2X2, params)
        b = simulated_anneal(QAP_2X2, params)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_occurrences_sum_to_reads(self):
        result = simulated_anneal(QAP_2X2, SaParams(reads=25, sweeps=50, seed=3))
        assert sum(r.occurrences for r in result.records) == 25

    def test_invalid_schedule(self):
        with pytest.raises(ValueError):
            SaParams(beta_hot=2.0, beta_cold=1.0)


class TestTabuSearch:
    def test_zero_model(self):
        result = tabu_search(Qubo(3), TabuParams(restarts=1))
        assert result.best().energy == 0.0

    def test_qap_reaches_optimum(self):
        result = tabu_search(QAP_2X2, TabuParams(seed=2))
        assert result.best().energy == pytest.approx(6.0)

    def test_never_beats_brute_force_and_usually_matches(self):
        rng = np.random.default_rng(42)
        matched = 0
        for seed in range(50):
            q = random_model(rng, 15, density=0.5)
            opt = brute_force(q).best().energy
            got = tabu_search(q, TabuParams(seed=seed)).best().energy
            assert got >= opt - 1e-9 * max(1.0, abs(opt))
            if got <= opt + 1e-9 * max(1.0, abs(opt)):
                matched += 1
        assert matched >= 45  # 90 percent of seeds

    def test_determinism(self):
        params = TabuParams(seed=11)
        a = tabu_search(HENS_1X1, params)
        b = tabu_search(HENS_1X1, params)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


class TestDecompose:
    def test_small_model_equals_exact(self):
        result = decompose_solve(QAP_2X2, DecompParams(seed=5))
        assert result.best().energy == pytest.approx(6.0)

    def test_large_model_improves_monotonically(self):
        rng = np.random.default_rng(43)
        q = random_model(rng, 80, density=0.3)
        result = decompose_solve(q, DecompParams(subproblem_size=20, seed=9))
        energies = result.meta["pass_energies"]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    def test_matches_brute_force_on_mid_size(self):
        rng = np.random.default_rng(44)
        hits = 0
        for seed in range(10):
            q = random_model(rng, 18, density=0.4)
            opt = brute_force(q).best().energy
            got = decompose_solve(q, DecompParams(subproblem_size=12, seed=seed))
            assert got.best().energy >= opt - 1e-9 * max(1.0, abs(opt))
            if got.best().energy <= opt + 1e-9 * max(1.0, abs(opt)):
                hits += 1
        assert hits >= 7

    def test_stitched_energy_reverifies(self):
        rng = np.random.default_rng(45)
        q = random_model(rng, 60, density=0.3)
        result = decompose_solve(q, DecompParams(subproblem_size=16, seed=3))
        best = result.best()
        assert q.energy(best.bits) == pytest.approx(best.energy, rel=1e-12)

    def test_determinism(self):
        rng = np.random.default_rng(46)
        q = random_model(rng, 50, density=0.3)
        params = DecompParams(subproblem_size=16, seed=21)
        a = decompose_solve(q, params)
        b = decompose_solve(q, params)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


class TestSolveDispatcher:
    def test_brute_route(self):
        assert solve(QAP_2X2, "brute").best().energy == pytest.approx(6.0)

    def test_sa_route_deterministic(self):
        a = solve(QAP_2X2, "sa", seed=7, reads=5, sweeps=30)
        b = solve(QAP_2X2, "sa", seed=7, reads=5, sweeps=30)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_decomp_route_matches_brute_on_small(self):
        rng = np.random.default_rng(47)
        q = random_model(rng, 12)
        assert solve(q, "decomp", seed=1).best().energy == pytest.approx(
            brute_force(q).best().energy
        )

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            solve(QAP_2X2, "gurobi")

    def test_unknown_option(self):
        with pytest.raises(ValueError):
            solve(QAP_2X2, "sa", swoops=3)


class TestSampleSet:
    def test_sorted_by_energy_then_bits(self):
        records = [
            SampleRecord((1, 0), 2.0, 1),
            SampleRecord((0, 1), 1.0, 2),
            SampleRecord((0, 0), 2.0, 1),
        ]
        ss = SampleSet(records)
        assert [r.bits for r in ss.records] == [(0, 1), (0, 0), (1, 0)]

    def test_merge_sums_occurrences(self):
        a = SampleSet([SampleRecord((0, 1), 1.0, 2), SampleRecord((1, 1), 3.0, 1)])
        b = SampleSet([SampleRecord((0, 1), 1.0, 5)])
        merged = a.merge(b)
        assert merged.best().occurrences == 7
        assert [r.bits for r in merged.records] == [(0, 1), (1, 1)]

    def test_json_roundtrip(self):
        ss = SampleSet(
            [SampleRecord((0, 1, 1), -1.25, 3)], {"solver": "sa", "seed": 7}
        )
        back = SampleSet.from_dict(json.loads(json.dumps(ss.to_dict())))
        assert back.records == ss.records
        assert back.meta == ss.meta

    def test_volatile_meta_dropped(self):
        ss = SampleSet([SampleRecord((0,), 0.0, 1)], {"solver": "sa", "elapsed_s": 0.5})
        assert "elapsed_s" not in ss.to_dict()["meta"]


class TestSoundness:
    def test_energies_reverify_and_never_beat_brute(self):
        rng = np.random.default_rng(48)
        for seed in range(30):
            n = int(rng.integers(2, 18))
            q = random_model(rng, n)
            opt = brute_force(q).best().energy
            for runner in (
                lambda m: simulated_anneal(m, SaParams(reads=5, sweeps=40, seed=seed)),
                lambda m: tabu_search(m, TabuParams(restarts=2, seed=seed)),
                lambda m: decompose_solve(m, DecompParams(subproblem_size=10, seed=seed)),
            ):
                result = runner(q)
                for rec in result.records:
                    assert q.energy(rec.bits) == pytest.approx(rec.energy, rel=1e-12)
                    assert rec.energy >= opt - 1e-9 * max(1.0, abs(opt))
