import numpy as np
import pytest

import structlqr as sl


class TestTypes:
    def test_system_shapes(self):
        sys = sl.LtiSystem(a=np.zeros((3, 3)), b=np.ones((3, 2)))
        assert (sys.n, sys.m) == (3, 2)
        with pytest.raises(ValueError):
            sl.LtiSystem(a=np.zeros((3, 3)), b=np.ones((2, 2)))
        with pytest.raises(sl.ShapeMismatch):
            sl.LtiSystem(a=np.zeros((2, 3)), b=np.ones((2, 1)))
        with pytest.raises(ValueError):
            sl.LtiSystem(a=[[np.inf]], b=[[1.0]])

    def test_pattern(self):
        pat = sl.StructurePattern([[1.0, 0.0], [0.0, 1.0]])
        assert pat.nnz == 2
        np.testing.assert_array_equal(pat.complement, [[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(ValueError):
            sl.StructurePattern([[0.5, 1.0]])
        with pytest.raises(ValueError):
            sl.StructurePattern(np.zeros((2, 2)))

    def test_pattern_from_zeroed_entries(self):
        pat = sl.StructurePattern.from_zeroed_entries(2, 3, [(1, 2), (2, 3)])
        np.testing.assert_array_equal(pat.indicator, [[1, 0, 1], [1, 1, 0]])
        assert pat.zero_rows() == []
        pat2 = sl.StructurePattern([[0.0, 0.0], [1.0, 0.0]])
        assert pat2.zero_rows() == [0]

    def test_weights_definiteness(self):
        with pytest.raises(ValueError):
            sl.LqrWeights(q=[[0.0]], r=[[1.0]])
        with pytest.raises(ValueError):
            sl.LqrWeights(q=[[1.0]], r=[[-2.0]])
        with pytest.raises(ValueError):
            sl.LqrWeights(q=[[1.0, 0.1], [0.0, 1.0]], r=np.eye(2))

    def test_robustness_nonnegative(self):
        with pytest.raises(ValueError):
            sl.RobustnessParams(alpha=-0.1)
        assert not sl.RobustnessParams().robust
        assert sl.RobustnessParams(beta=1.0).robust

    def test_problem_dimension_agreement(self):
        sys = sl.LtiSystem(a=np.zeros((2, 2)) - np.eye(2), b=np.eye(2))
        good = sl.SynthesisProblem(
            system=sys, pattern=sl.StructurePattern.dense(2, 2),
            weights=sl.LqrWeights(q=np.eye(2), r=np.eye(2)))
        assert good.system.n == 2
        with pytest.raises(ValueError):
            sl.SynthesisProblem(
                system=sys, pattern=sl.StructurePattern.dense(3, 2),
                weights=sl.LqrWeights(q=np.eye(2), r=np.eye(2)))
        with pytest.raises(ValueError):
            sl.SynthesisProblem(
                system=sys, pattern=sl.StructurePattern.dense(2, 2),
                weights=sl.LqrWeights(q=np.eye(3), r=np.eye(2)))


class TestQFloor:
    def test_zero_when_unperturbed(self):
        assert sl.q_floor(0.0, 0.0, np.eye(4)) == 0.0

    def test_bench_parameters(self):
        # alpha^2 * 1 / 1 + 2 * alpha * d = 0.25 + 2.4
        assert sl.q_floor(0.5, 2.4, np.eye(6)) == pytest.approx(2.65)

    def test_hand_value(self):
        # 1 * 4 / 2 + 2 * 1 * 1
        assert sl.q_floor(1.0, 1.0, 2.0 * np.eye(2)) == pytest.approx(4.0)

    def test_orthogonal_invariance(self):
        rng = np.random.default_rng(99)
        r = np.diag([0.5, 1.3, 2.2])
        base = sl.q_floor(0.7, 1.1, r)
        for _ in range(10):
            u, _ = np.linalg.qr(rng.standard_normal((3, 3)))
            assert sl.q_floor(0.7, 1.1, u.T @ r @ u) == pytest.approx(base, rel=1e-10)


class TestValidate:
    def test_single_integrator(self):
        problem = sl.SynthesisProblem(
            system=sl.LtiSystem(a=[[0.0]], b=[[1.0]]),
            pattern=sl.StructurePattern.dense(1, 1),
            weights=sl.LqrWeights(q=[[1.0]], r=[[1.0]]))
        report = sl.validate_problem(problem)
        assert report.stabilizable and report.observable and report.passed

    def test_uncontrollable_unstable(self):
        problem = sl.SynthesisProblem(
            system=sl.LtiSystem(a=[[1.0]], b=[[0.0]]),
            pattern=sl.StructurePattern.dense(1, 1),
            weights=sl.LqrWeights(q=[[1.0]], r=[[1.0]]))
        report = sl.validate_problem(problem)
        assert not report.stabilizable
        assert not report.passed

    def test_bench_passes(self, bench_problem):
        report = sl.validate_problem(bench_problem)
        assert report.passed
        assert report.stabilizable and report.observable
        assert report.q_positive_definite and report.r_positive_definite
        assert report.floor_value == pytest.approx(2.65)
        assert report.floor_satisfied
        assert report.pattern_zero_rows == ()
        # the zero eigenvalue must be among the PBH-tested ones, and pass
        assert any(abs(z) < 1e-9 and ok for (z, ok) in report.pbh_checks)

    def test_deterministic(self, bench_problem):
        r1 = sl.validate_problem(bench_problem).to_dict()
        r2 = sl.validate_problem(bench_problem).to_dict()
        assert r1 == r2
