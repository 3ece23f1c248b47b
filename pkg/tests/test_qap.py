"""Tests for the quadratic assignment formulation, decoder, oracle and parser."""

import itertools
from pathlib import Path

import numpy as np
import pytest

from enerqubo.errors import OracleSizeError
from enerqubo.qap import (
    QapInfeasibility,
    QapInstance,
    QapSolution,
    parse_qaplib,
    qap_decode,
    qap_default_penalty,
    qap_objective,
    qap_oracle,
    qap_to_qubo,
)
from enerqubo.varmap import PenaltyWeights

DATA = Path(__file__).parent / "data"

TWO_BY_TWO = QapInstance(cost=[[0, 1], [1, 0]], flow=[[0, 3], [3, 0]])


def random_instance(rng, n):
    return QapInstance(cost=rng.uniform(0, 10, (n, n)), flow=rng.uniform(0, 10, (n, n)))


def direct_penalty_cost(inst, a, x):
    """Literal evaluation of the single-objective penalty cost.

    Independent oracle for the QUBO expansion: the quadruple objective sum
    plus the two squared assignment penalties, evaluated on the raw
    assignment matrix.
    """
    n = inst.n
    obj = float(np.einsum("ij,pq,pi,qj->", inst.cost, inst.flow, x, x))
    per_location = ((1.0 - x.sum(axis=0)) ** 2).sum()
    per_plant = ((1.0 - x.sum(axis=1)) ** 2).sum()
    return obj + a * (per_location + per_plant)


class TestObjective:
    def test_single_facility(self):
        inst = QapInstance(cost=[[5.0]], flow=[[2.0]])
        assert qap_objective(inst, [0]) == 10.0

    def test_two_by_two(self):
        assert qap_objective(TWO_BY_TWO, [0, 1]) == 6.0
        assert qap_objective(TWO_BY_TWO, [1, 0]) == 6.0

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            qap_objective(TWO_BY_TWO, [0, 0])

    def test_instance_validation(self):
        with pytest.raises(ValueError):
            QapInstance(cost=[[0, 1]], flow=[[0, 1]])
        with pytest.raises(ValueError):
            QapInstance(cost=[[-1.0]], flow=[[1.0]])


class TestQuboBuilder:
    def test_single_variable(self):
        inst = QapInstance(cost=[[3.0]], flow=[[2.0]])
        model, _ = qap_to_qubo(inst, PenaltyWeights(10.0))
        assert model.num_vars == 1
        assert model.energy([1]) == pytest.approx(6.0)
        assert model.energy([0]) == pytest.approx(20.0)  # 2*n*a at n=1

    def test_two_by_two_energies(self):
        model, vm = qap_to_qubo(TWO_BY_TWO, PenaltyWeights(10.0))
        assert model.num_vars == 4
        assert model.offset == pytest.approx(40.0)  # 2*n*a
        for perm in itertools.permutations(range(2)):
            bits = [0] * 4
            for p, i in enumerate(perm):
                bits[vm.index(f"x({p + 1},{i + 1})")] = 1
            assert model.energy(bits) == pytest.approx(6.0)
        assert model.energy([0, 0, 0, 0]) == pytest.approx(40.0)

    def test_matches_direct_penalty_cost_exhaustive(self):
        rng = np.random.default_rng(11)
        for n in (2, 3):
            inst = random_instance(rng, n)
            a = 17.5
            model, _ = qap_to_qubo(inst, PenaltyWeights(a))
            for raw in itertools.product((0, 1), repeat=n * n):
                x = np.array(raw).reshape(n, n)
                expected = direct_penalty_cost(inst, a, x)
                assert model.energy(raw) == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_variable_count_formula(self):
        for n in (1, 2, 3, 4):
            rng = np.random.default_rng(n)
            model, vm = qap_to_qubo(random_instance(rng, n))
            assert model.num_vars == n * n == len(vm)

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            qap_to_qubo(TWO_BY_TWO, PenaltyWeights(0.0))


class TestDefaultPenalty:
    def test_formula(self):
        assert qap_default_penalty(TWO_BY_TWO) == 7.0

    def test_zero_matrices(self):
        inst = QapInstance(cost=np.zeros((3, 3)), flow=np.zeros((3, 3)))
        assert qap_default_penalty(inst) == 1.0

    def test_brute_force_argmin_is_feasible(self):
        # with the default weight, the unconstrained minimizer is always a
        # permutation matrix for small random instances
        from enerqubo.solvers import brute_force

        rng = np.random.default_rng(12)
        for _ in range(20):
            inst = random_instance(rng, 3)
            model, vm = qap_to_qubo(inst)
            best = brute_force(model).best()
            decoded = qap_decode(best.bits, vm, inst)
            assert isinstance(decoded, QapSolution)


class TestDecode:
    def test_identity(self):
        model, vm = qap_to_qubo(TWO_BY_TWO, PenaltyWeights(10.0))
        bits = [0] * 4
        bits[vm.index("x(1,1)")] = 1
        bits[vm.index("x(2,2)")] = 1
        sol = qap_decode(bits, vm, TWO_BY_TWO)
        assert isinstance(sol, QapSolution)
        assert sol.perm == (0, 1)
        assert sol.objective == 6.0

    def test_all_zero_reports_everything(self):
        _, vm = qap_to_qubo(TWO_BY_TWO, PenaltyWeights(10.0))
        report = qap_decode([0, 0, 0, 0], vm, TWO_BY_TWO)
        assert isinstance(report, QapInfeasibility)
        assert report.bad_rows == (0, 1)
        assert report.bad_cols == (0, 1)

    def test_two_plants_one_location(self):
        _, vm = qap_to_qubo(TWO_BY_TWO, PenaltyWeights(10.0))
        bits = [0] * 4
        bits[vm.index("x(1,1)")] = 1
        bits[vm.index("x(2,1)")] = 1
        report = qap_decode(bits, vm, TWO_BY_TWO)
        assert isinstance(report, QapInfeasibility)
        assert 0 in report.bad_cols and 1 in report.bad_cols


class TestOracle:
    def test_two_by_two(self):
        assert qap_oracle(TWO_BY_TWO).objective == 6.0

    def test_zero_cost_ties_break_to_identity(self):
        inst = QapInstance(cost=np.zeros((3, 3)), flow=np.ones((3, 3)))
        sol = qap_oracle(inst)
        assert sol.perm == (0, 1, 2)
        assert sol.objective == 0.0

    def test_size_guard(self):
        rng = np.random.default_rng(13)
        with pytest.raises(OracleSizeError):
            qap_oracle(random_instance(rng, 13))

    def test_matches_enumeration(self):
        rng = np.random.default_rng(14)
        for n in (2, 3, 4, 5):
            inst = random_instance(rng, n)
            best = min(
                (qap_objective(inst, p), p)
                for p in itertools.permutations(range(n))
            )
            sol = qap_oracle(inst)
            assert sol.objective == pytest.approx(best[0], rel=1e-12)
            assert sol.perm == best[1]

    def test_nug08_best_known(self):
        inst = parse_qaplib((DATA / "nug08.dat").read_text())
        assert qap_oracle(inst).objective == 214.0

    def test_chr12c_best_known(self):
        inst = parse_qaplib((DATA / "chr12c.dat").read_text())
        assert qap_oracle(inst).objective == 11156.0


class TestParser:
    def test_small(self):
        inst = parse_qaplib("2  0 3 3 0  0 1 1 0")
        assert inst.n == 2
        assert inst.flow.tolist() == [[0, 3], [3, 0]]
        assert inst.cost.tolist() == [[0, 1], [1, 0]]

    def test_single(self):
        inst = parse_qaplib("1 7 4")
        assert inst.flow.tolist() == [[7]]
        assert inst.cost.tolist() == [[4]]

    def test_truncated(self):
        with pytest.raises(ValueError, match="truncated"):
            parse_qaplib("2 0 1")

    def test_extra_tokens(self):
        with pytest.raises(ValueError, match="size mismatch"):
            parse_qaplib("1 7 4 9")

    def test_non_numeric(self):
        with pytest.raises(ValueError):
            parse_qaplib("2 0 3 x 0 0 1 1 0")


class TestPenaltyExactness:
    def test_qubo_argmin_equals_oracle(self):
        # spec invariant: with the default weight, exhaustive QUBO
        # minimization recovers the exact optimum for small instances
        from enerqubo.solvers import brute_force

        rng = np.random.default_rng(15)
        for _ in range(50):
            n = int(rng.integers(2, 4))
            inst = random_instance(rng, n)
            model, vm = qap_to_qubo(inst)
            best = brute_force(model).best()
            decoded = qap_decode(best.bits, vm, inst)
            exact = qap_oracle(inst)
            assert isinstance(decoded, QapSolution)
            assert decoded.objective == exact.objective
            assert best.energy == pytest.approx(exact.objective, rel=1e-9)

    def test_feasible_point_energy_equals_objective(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            inst = random_instance(rng, n)
            model, vm = qap_to_qubo(inst, PenaltyWeights(50.0))
            perm = rng.permutation(n)
            bits = [0] * (n * n)
            for p, i in enumerate(perm):
                bits[vm.index(f"x({p + 1},{i + 1})")] = 1
            assert model.energy(bits) == pytest.approx(
                qap_objective(inst, perm), rel=1e-9, abs=1e-9
            )
