"""Tests for heat-match formulation: objective, grids, QUBO, decode, oracle."""

import numpy as np
import pytest

from enerqubo.errors import OracleSizeError
from enerqubo.hens import (
    HensInstance,
    HensSolution,
    hens_decode,
    hens_discretize,
    hens_instance_from_dict,
    hens_instance_to_dict,
    hens_objective,
    hens_oracle,
    hens_to_qubo,
)
from enerqubo.solvers import brute_force
from enerqubo.varmap import PenaltyWeights

ONE_BY_ONE = HensInstance(supply=[4.0], demand=[4.0], cost=[[7.0]])
DIAGONAL = HensInstance(
    supply=[2.0, 2.0], demand=[2.0, 2.0], cost=[[1.0, 5.0], [5.0, 1.0]]
)


def direct_discretized_cost(disc, weights, w_bits, z_bits):
    """Literal evaluation of the discretized match cost with penalties.

    Independent oracle for the QUBO expansion: match costs, per-pair
    link penalties, and both squared balance penalties evaluated on raw bits.
    """
    inst = disc.base
    total = 0.0
    for i in range(inst.m):
        for j in range(inst.n):
            total += inst.cost[i, j] * w_bits[i][j]
            total += weights.a * (w_bits[i][j] - sum(z_bits[i][j])) ** 2
    for i in range(inst.m):
        supplied = sum(
            disc.flows[i][j][k] * z_bits[i][j][k]
            for j in range(inst.n)
            for k in range(len(disc.flows[i][j]))
        )
        total += weights.b * (inst.supply[i] - supplied) ** 2
    for j in range(inst.n):
        delivered = sum(
            disc.flows[i][j][k] * z_bits[i][j][k]
            for i in range(inst.m)
            for k in range(len(disc.flows[i][j]))
        )
        total += weights.b * (inst.demand[j] - delivered) ** 2
    return total


def bits_for(disc, vm, w_bits, z_bits):
    bits = [0] * len(vm)
    inst = disc.base
    for i in range(inst.m):
        for j in range(inst.n):
            bits[vm.index(f"w({i + 1},{j + 1})")] = w_bits[i][j]
            for k, z in enumerate(z_bits[i][j]):
                bits[vm.index(f"z({i + 1},{j + 1},{k + 1})")] = z
    return bits


class TestObjective:
    def test_single_pair(self):
        sol = hens_objective(ONE_BY_ONE, [[1]], [[4.0]])
        assert sol.total_cost == 7.0
        assert sol.feasible

    def test_flow_without_match_flagged(self):
        sol = hens_objective(ONE_BY_ONE, [[0]], [[4.0]])
        assert any("above" in v for v in sol.violations)

    def test_diagonal(self):
        sol = hens_objective(
            DIAGONAL, [[1, 0], [0, 1]], [[2.0, 0.0], [0.0, 2.0]]
        )
        assert sol.total_cost == 2.0
        assert sol.feasible

    def test_balance_violations(self):
        sol = hens_objective(DIAGONAL, [[1, 0], [0, 1]], [[1.0, 0.0], [0.0, 2.0]])
        assert any("source 1" in v for v in sol.violations)
        assert any("sink 1" in v for v in sol.violations)

    def test_unbalanced_instance_rejected(self):
        with pytest.raises(ValueError):
            HensInstance(supply=[4.0], demand=[3.0], cost=[[1.0]])


class TestDiscretize:
    def test_quarter_grid(self):
        disc = hens_discretize(ONE_BY_ONE, 4)
        assert disc.flows[0][0] == (1.0, 2.0, 3.0, 4.0)
        assert disc.capacity[0, 0] == 4.0

    def test_zero_supply_row(self):
        inst = HensInstance(
            supply=[0.0, 4.0], demand=[4.0], cost=[[1.0], [1.0]]
        )
        disc = hens_discretize(inst, 3)
        assert disc.flows[0][0] == ()
        assert disc.zero_capacity_pairs == 1

    def test_uniform_capacity(self):
        disc = hens_discretize(DIAGONAL, 2)
        for i in range(2):
            for j in range(2):
                assert disc.flows[i][j] == (1.0, 2.0)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            hens_discretize(ONE_BY_ONE, 0)


class TestQuboBuilder:
    def test_single_pair_minimum(self):
        disc = hens_discretize(ONE_BY_ONE, 4)
        model, vm = hens_to_qubo(disc)  # defaults a=20, b=5
        assert model.num_vars == 5
        best = brute_force(model).best()
        assert best.energy == pytest.approx(7.0)
        sol = hens_decode(best.bits, vm, disc)
        assert sol.feasible
        assert sol.flows[0, 0] == 4.0

    def test_all_zero_energy_is_double_balance_penalty(self):
        disc = hens_discretize(ONE_BY_ONE, 4)
        model, _ = hens_to_qubo(disc)
        assert model.energy([0] * 5) == pytest.approx(2 * 5.0 * 16.0)

    def test_matches_direct_formula_on_random_bits(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            supply = rng.integers(1, 6, 2).astype(float)
            demand = np.array([float(supply.sum())])
            split = float(rng.uniform(0.2, 0.8))
            demand = np.array(
                [np.round(supply.sum() * split, 3), 0.0]
            )
            demand[1] = supply.sum() - demand[0]
            cost = rng.uniform(1, 6, (2, 2))
            inst = HensInstance(supply=supply, demand=demand, cost=cost)
            disc = hens_discretize(inst, int(rng.integers(1, 4)))
            weights = PenaltyWeights(
                float(rng.uniform(10, 40)), float(rng.uniform(2, 10))
            )
            model, vm = hens_to_qubo(disc, weights)
            for _ in range(25):
                w_bits = [[int(rng.integers(0, 2)) for _ in range(2)] for _ in range(2)]
                z_bits = [
                    [
                        [int(rng.integers(0, 2)) for _ in disc.flows[i][j]]
                        for j in range(2)
                    ]
                    for i in range(2)
                ]
                bits = bits_for(disc, vm, w_bits, z_bits)
                expected = direct_discretized_cost(disc, weights, w_bits, z_bits)
                assert model.energy(bits) == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_variable_count_formula(self):
        # m*n*(N+1) variables when every pair has positive capacity
        disc = hens_discretize(DIAGONAL, 3)
        model, _ = hens_to_qubo(disc)
        assert model.num_vars == 2 * 2 * (3 + 1)

    def test_zero_capacity_pairs_drop_flow_bits(self):
        inst = HensInstance(supply=[0.0, 4.0], demand=[4.0], cost=[[1.0], [2.0]])
        disc = hens_discretize(inst, 3)
        model, vm = hens_to_qubo(disc)
        assert model.num_vars == 2 * 1 * (3 + 1) - 3 * disc.zero_capacity_pairs
        # the dead match bit still exists and minimizes to zero
        best = brute_force(model).best()
        sol = hens_decode(best.bits, vm, disc)
        assert sol.matches[0, 0] == 0


class TestDecode:
    def test_all_zero(self):
        disc = hens_discretize(ONE_BY_ONE, 4)
        _, vm = hens_to_qubo(disc)
        sol = hens_decode([0] * 5, vm, disc)
        assert not sol.feasible
        assert any("source 1" in v for v in sol.violations)
        assert any("sink 1" in v for v in sol.violations)

    def test_feasible_point(self):
        disc = hens_discretize(ONE_BY_ONE, 4)
        _, vm = hens_to_qubo(disc)
        sol = hens_decode(bits_for(disc, vm, [[1]], [[[0, 0, 0, 1]]]), vm, disc)
        assert sol.feasible and sol.total_cost == 7.0

    def test_multi_select_reported(self):
        disc = hens_discretize(ONE_BY_ONE, 4)
        _, vm = hens_to_qubo(disc)
        sol = hens_decode(bits_for(disc, vm, [[1]], [[[1, 1, 0, 0]]]), vm, disc)
        assert any("flow levels" in v for v in sol.violations)


class TestOracle:
    def test_single_pair(self):
        sol = hens_oracle(ONE_BY_ONE)
        assert sol.total_cost == 7.0
        assert sol.matches[0, 0] == 1

    def test_diagonal_matches(self):
        sol = hens_oracle(DIAGONAL)
        assert sol.total_cost == 2.0
        assert sol.matches.tolist() == [[1, 0], [0, 1]]

    def test_zero_cost_instance(self):
        inst = HensInstance(
            supply=[3.0, 1.0], demand=[2.0, 2.0], cost=np.zeros((2, 2))
        )
        sol = hens_oracle(inst)
        assert sol.total_cost == 0.0
        assert sol.feasible

    def test_needs_off_diagonal(self):
        # capacities force both diagonal and one cross match
        inst = HensInstance(
            supply=[3.0, 1.0],
            demand=[1.0, 3.0],
            cost=[[1.0, 1.0], [10.0, 1.0]],
        )
        sol = hens_oracle(inst)
        assert sol.feasible
        assert sol.total_cost == pytest.approx(3.0)

    def test_size_guard(self):
        inst = HensInstance(
            supply=np.ones(5), demand=np.ones(5) * 5 / 5, cost=np.ones((5, 5))
        )
        # 25 pairs exceeds the subset enumeration bound
        with pytest.raises(OracleSizeError):
            hens_oracle(
                HensInstance(
                    supply=np.ones(5),
                    demand=np.full(5, 1.0),
                    cost=np.ones((5, 5)),
                )
            )

    def test_flow_certificate_is_feasible(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            q = rng.integers(0, 4, (3, 3)).astype(float)
            if q.sum() == 0:
                continue
            inst = HensInstance(
                supply=q.sum(axis=1), demand=q.sum(axis=0), cost=rng.uniform(1, 9, (3, 3))
            )
            sol = hens_oracle(inst)
            assert isinstance(sol, HensSolution)
            assert sol.feasible
            # the constructed q is itself feasible, so the optimum cannot cost
            # more than its match pattern
            upper = float((inst.cost * (q > 0)).sum())
            assert sol.total_cost <= upper + 1e-9


class TestJson:
    def test_roundtrip(self):
        back = hens_instance_from_dict(hens_instance_to_dict(DIAGONAL))
        assert np.array_equal(back.supply, DIAGONAL.supply)
        assert np.array_equal(back.demand, DIAGONAL.demand)
        assert np.array_equal(back.cost, DIAGONAL.cost)
