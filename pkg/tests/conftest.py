import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import structlqr as sl

BENCH_A = np.array([
    [-5, 2, 3, 0, 0, 0],
    [2, -6, 0, 0, 1, 3],
    [3, 0, -5, 2, 0, 0],
    [0, 0, 2, -2, 0, 0],
    [0, 1, 0, 0, -4, 3],
    [0, 3, 0, 0, 3, -6],
], dtype=float)

BENCH_ZEROED = [(1, 2), (1, 6), (2, 4), (2, 6), (3, 4), (3, 5),
                (4, 1), (4, 2), (5, 4), (5, 3), (6, 4), (6, 1)]

BENCH_X0 = np.array([0.3, 0.5, 0.4, 0.8, 0.9, 0.6])

BUNDLED_CONFIG = Path(__file__).parent.parent / "src" / "structlqr" / "data" / "paper-6agent.json"


@pytest.fixture(scope="session")
def bench_pattern():
    return sl.StructurePattern.from_zeroed_entries(6, 6, BENCH_ZEROED)


@pytest.fixture(scope="session")
def bench_problem(bench_pattern):
    return sl.SynthesisProblem(
        system=sl.LtiSystem(a=BENCH_A, b=np.eye(6)),
        pattern=bench_pattern,
        weights=sl.LqrWeights(q=5.65 * np.eye(6), r=np.eye(6)),
        robustness=sl.RobustnessParams(alpha=0.5, beta=1.0, d=2.4),
    )


@pytest.fixture(scope="session")
def bench_model(bench_problem):
    return sl.structured_policy_iteration(bench_problem, initial_gain=3.0 * np.eye(6))


@pytest.fixture(scope="session")
def bench_config():
    return sl.ExperimentConfig.from_json(BUNDLED_CONFIG)


@pytest.fixture(scope="session")
def bench_report(bench_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    return sl.run_experiment(bench_config, out_dir=out), out


@pytest.fixture
def scalar_problem():
    return sl.SynthesisProblem(
        system=sl.LtiSystem(a=[[-1.0]], b=[[1.0]]),
        pattern=sl.StructurePattern.dense(1, 1),
        weights=sl.LqrWeights(q=[[1.0]], r=[[1.0]]),
    )
