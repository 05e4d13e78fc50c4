"""Experiment configuration and the synthesize / explore / learn pipeline.

A run executes: validation, model-based synthesis, exploration simulation,
data-matrix construction with rank bookkeeping, data-driven learning,
cross-verification of the learned gain against the model-based one, and
cost / suboptimality / disturbance-envelope evaluation. Everything numeric
lands in report.json; the exploration record and per-iteration history go
to sibling CSV files. Reports are byte-identical across runs with the same
config and seed, so wall-clock timings are logged rather than written.
"""

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import bound_report
from .consensus import make_consensus_system
from .errors import InvalidProblem, StructLqrError
from .learner import (LearnerConfig, build_data_matrices, rank_check, rsrl,
                      window_starts)
from .linalg import solve_lyapunov, spectral_abscissa
from .model import (LqrWeights, LtiSystem, RobustnessParams, StructurePattern,
                    SynthesisProblem, validate_problem)
from .sim import ExoModel, ExplorationSignal, Trajectory, evaluate_cost, iss_envelope, simulate
from .synthesis import structured_policy_iteration, verify_modified_are
from .validation import as_matrix, as_vector

log = logging.getLogger("structlqr")

REPORT_SCHEMA_VERSION = 1


def _weight(value, n, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(n)
    return as_matrix(arr, name)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully deterministic run description."""

    system: LtiSystem
    pattern: StructurePattern
    weights: LqrWeights
    robustness: RobustnessParams
    exploration: dict          # n_terms, amplitude, freq_range
    exo: ExoModel
    dt: float
    t_explore: float
    t_eval: float
    x0: np.ndarray
    learner: LearnerConfig
    window_steps: int
    window_count: int          # None means 2x the identifiability requirement
    window_layout: str
    availability: tuple
    initial_gain: np.ndarray
    seed: int
    blowup: float

    @classmethod
    def from_dict(cls, raw):
        sysspec = raw["system"]
        if sysspec.get("kind", "explicit") == "consensus":
            system = make_consensus_system(int(sysspec["n"]),
                                           [tuple(e) for e in sysspec["edges"]])
        else:
            system = LtiSystem(a=sysspec["a"], b=sysspec["b"])
        n, m = system.n, system.m

        patspec = raw.get("pattern", {"kind": "dense"})
        kind = patspec.get("kind", "dense")
        if kind == "dense":
            pattern = StructurePattern.dense(m, n)
        elif kind == "zeros":
            pattern = StructurePattern.from_zeroed_entries(
                m, n, [tuple(e) for e in patspec["entries"]])
        elif kind == "indicator":
            pattern = StructurePattern(patspec["indicator"])
        else:
            raise ValueError(f"unknown pattern kind {kind!r}")

        wspec = raw.get("weights", {})
        weights = LqrWeights(q=_weight(wspec.get("q", 1.0), n, "q"),
                             r=_weight(wspec.get("r", 1.0), m, "r"))
        rspec = raw.get("robustness", {})
        robustness = RobustnessParams(alpha=rspec.get("alpha", 0.0),
                                      beta=rspec.get("beta", 0.0),
                                      d=rspec.get("d", 0.0))

        expl = dict(raw.get("exploration", {}))
        expl.setdefault("n_terms", 10)
        expl.setdefault("amplitude", 0.5)
        expl.setdefault("freq_range", (0.5, 25.0))
        expl["freq_range"] = tuple(float(f) for f in expl["freq_range"])

        exospec = raw.get("exo", {"kind": "none"})
        if exospec.get("kind", "none") == "none":
            exo = ExoModel()
        elif exospec["kind"] == "scalar-sinusoid":
            exo = ExoModel(kind="scalar-sinusoid", alpha=robustness.alpha,
                           c=float(exospec["c"]))
        else:
            raise ValueError(f"config cannot express exo kind {exospec['kind']!r}")

        simspec = raw.get("simulation", {})
        lspec = dict(raw.get("learner", {}))
        learner = LearnerConfig(
            varsigma=float(lspec.get("varsigma", 1e-6)),
            max_iters=int(lspec.get("max_iters", 30)),
            ls_mode=lspec.get("ls_mode", "reduced"),
            symmetric_p=bool(lspec.get("symmetric_p", False)))
        availability = lspec.get("availability")
        availability = (tuple((float(a), float(b)) for (a, b) in availability)
                        if availability else None)
        initial_gain = raw.get("initial_gain")
        if initial_gain is not None:
            initial_gain = as_matrix(initial_gain, "initial_gain")

        return cls(
            system=system, pattern=pattern, weights=weights, robustness=robustness,
            exploration=expl, exo=exo,
            dt=float(simspec.get("dt", 0.01)),
            t_explore=float(simspec.get("t_explore", 2.0)),
            t_eval=float(simspec.get("t_eval", 10.0)),
            x0=as_vector(simspec.get("x0", np.zeros(n)), "x0"),
            learner=learner,
            window_steps=int(lspec.get("window_steps", 1)),
            window_count=(int(lspec["window_count"])
                          if lspec.get("window_count") else None),
            window_layout=lspec.get("window_layout", "contiguous"),
            availability=availability,
            initial_gain=initial_gain,
            seed=int(raw.get("seed", 0)),
            blowup=float(raw.get("blowup", 1e9)),
        )

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def problem(self):
        return SynthesisProblem(system=self.system, pattern=self.pattern,
                                weights=self.weights, robustness=self.robustness)

    def exploration_signal(self):
        return ExplorationSignal.seeded(
            self.system.m, seed=self.seed,
            n_terms=int(self.exploration["n_terms"]),
            amplitude=float(self.exploration["amplitude"]),
            freq_range=self.exploration["freq_range"])

    def required_windows(self):
        n, m = self.system.n, self.system.m
        return n * (n + 1) // 2 + self.pattern.nnz + n * m


@contextmanager
def _stage(name, timings):
    log.info("stage %s: start", name)
    t0 = time.perf_counter()
    try:
        yield
    except StructLqrError as exc:
        if not hasattr(exc, "stage"):
            exc.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - t0
        log.info("stage %s: %.3f s", name, timings[name])


def _spectrum(matrix):
    eigs = np.linalg.eigvals(matrix)
    order = np.argsort(eigs.real)
    return [[float(eigs[i].real), float(eigs[i].imag)] for i in order]


def _true_cost_matrix(system, weights, gain):
    """Unshifted closed-loop Lyapunov solve: x0' P_K x0 is the realized cost."""
    a_cl = system.a - system.b @ gain
    return solve_lyapunov(a_cl, weights.q + gain.T @ weights.r @ gain)


def run_experiment(config, out_dir=None, ls_mode=None, trajectory=None):
    """Execute the full pipeline; returns the report dict.

    ``ls_mode`` overrides the configured least-squares parametrization.
    ``trajectory`` substitutes a recorded exploration Trajectory for the
    simulated one, enabling offline learning from CSV records.
    """
    timings = {}
    problem = config.problem()
    pattern = config.pattern
    report = {"schema_version": REPORT_SCHEMA_VERSION, "seed": config.seed}

    with _stage("validate", timings):
        validation = validate_problem(problem)
        report["validation"] = validation.to_dict()
        if not validation.passed:
            raise InvalidProblem(
                f"problem failed validation: {validation.to_dict()}")

    with _stage("model_synthesis", timings):
        model = structured_policy_iteration(
            problem, initial_gain=config.initial_gain,
            tol=min(1e-9, config.learner.varsigma))
        report["model_based"] = model.to_dict()

    with _stage("exploration", timings):
        if trajectory is None:
            trajectory = simulate(
                config.system, gain=None,
                exploration=config.exploration_signal(), exo=config.exo,
                x0=config.x0, t_end=config.t_explore, dt=config.dt,
                blowup=config.blowup)
        report["exploration"] = {
            "samples": len(trajectory.t),
            "dt": trajectory.dt,
            "duration": trajectory.duration,
            "max_state_norm": float(np.max(np.linalg.norm(trajectory.x, axis=1))),
        }

    with _stage("data_build", timings):
        count = config.window_count or 2 * config.required_windows()
        starts = window_starts(trajectory, count, window_steps=config.window_steps,
                               layout=config.window_layout)
        data = build_data_matrices(trajectory, window_steps=config.window_steps,
                                   start_indices=starts,
                                   availability=config.availability)
        rank = rank_check(data, pattern)
        report["rank"] = dict(rank.to_dict(), windows=data.rows)

    with _stage("rsrl", timings):
        learner_config = config.learner if ls_mode is None else LearnerConfig(
            varsigma=config.learner.varsigma, max_iters=config.learner.max_iters,
            ls_mode=ls_mode, symmetric_p=config.learner.symmetric_p)
        learned, diagnostics = rsrl(problem, data,
                                    initial_gain=config.initial_gain,
                                    config=learner_config)
        report["learned"] = dict(learned.to_dict(),
                                 modified_are_residual=verify_modified_are(
                                     problem, learned.value_matrix),
                                 diagnostics=diagnostics.to_dict())

    with _stage("cross_verification", timings):
        gain_scale = np.linalg.norm(model.gain, "fro")
        report["cross_verification"] = {
            "rel_gain_difference": float(
                np.linalg.norm(learned.gain - model.gain, "fro") / gain_scale),
            "rel_value_difference": float(
                np.linalg.norm(learned.value_matrix - model.value_matrix, "fro")
                / np.linalg.norm(model.value_matrix, "fro")),
            "model_pattern_exact": bool(
                np.all(model.gain * pattern.complement == 0.0)),
            "learned_pattern_exact": bool(
                np.all(learned.gain * pattern.complement == 0.0)),
        }

    with _stage("evaluation", timings):
        # cost of the learned gain, measured by quadrature and by the
        # unshifted Lyapunov certificate
        eval_traj = simulate(config.system, gain=learned.gain, x0=config.x0,
                             t_end=config.t_eval, dt=config.dt, blowup=config.blowup)
        p_true = _true_cost_matrix(config.system, config.weights, learned.gain)
        cost = evaluate_cost(eval_traj, config.weights.q, config.weights.r,
                             learned.gain, value_matrix=p_true)

        # unconstrained-optimum comparison lives at beta = 0, where the
        # dense Riccati solution is the true cost optimum
        base = RobustnessParams(alpha=0.0, beta=0.0, d=0.0)
        dense0 = structured_policy_iteration(SynthesisProblem(
            system=config.system, pattern=StructurePattern.dense(*pattern.shape),
            weights=config.weights, robustness=base),
            initial_gain=config.initial_gain)
        struct0 = structured_policy_iteration(SynthesisProblem(
            system=config.system, pattern=pattern,
            weights=config.weights, robustness=base),
            initial_gain=config.initial_gain)
        x0 = config.x0
        j_learned = cost.j_quadrature
        j_dense = float(x0 @ dense0.value_matrix @ x0)
        j_struct0 = float(x0 @ struct0.value_matrix @ x0)
        report["costs"] = {
            "j_learned_quadrature": j_learned,
            "j_learned_analytic": cost.j_analytic,
            "quadrature_vs_analytic_rel": cost.rel_difference,
            "design_value": float(x0 @ learned.value_matrix @ x0),
            "j_dense_beta0": j_dense,
            "j_structured_beta0": j_struct0,
            "gap_learned_vs_dense": (j_learned - j_dense) / j_dense,
            "gap_structured_vs_dense_beta0": (j_struct0 - j_dense) / j_dense,
        }

        bound = bound_report(SynthesisProblem(
            system=config.system, pattern=pattern, weights=config.weights,
            robustness=base), struct0.off_pattern, x0,
            structured_p=struct0.value_matrix, dense_p=dense0.value_matrix)
        report["bound"] = bound.to_dict()
        report["off_pattern_norm"] = float(np.linalg.norm(learned.off_pattern, 2))
        report["gain_cap_d"] = config.robustness.d
        if config.robustness.d and report["off_pattern_norm"] > config.robustness.d:
            log.warning("realized off-pattern norm %.4g exceeds the configured cap d=%.4g",
                        report["off_pattern_norm"], config.robustness.d)

        a_cl = config.system.a - config.system.b @ learned.gain
        iss_traj = simulate(config.system, gain=learned.gain, exo=config.exo,
                            x0=config.x0, t_end=config.t_eval, dt=config.dt,
                            blowup=config.blowup)
        iss = iss_envelope(a_cl, config.system.b, iss_traj)
        report["iss"] = dict(iss.to_dict(), terminal_norm_ratio=float(
            np.linalg.norm(iss_traj.x[-1]) / np.linalg.norm(iss_traj.x[0])))
        report["spectra"] = {
            "open_loop": _spectrum(config.system.a),
            "closed_loop_model": _spectrum(config.system.a
                                           - config.system.b @ model.gain),
            "closed_loop_learned": _spectrum(a_cl),
        }
        report["closed_loop_spectral_abscissa"] = spectral_abscissa(a_cl)

    if out_dir is not None:
        with _stage("write_outputs", timings):
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_report(report, out / "report.json")
            trajectory.to_csv(out / "trajectory.csv")
            write_history(model, learned, report["learned"]["diagnostics"],
                          out / "history.csv")
    for name, seconds in timings.items():
        log.debug("timing %s: %.4f s", name, seconds)
    return report


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_history(model_result, learned_result, learned_diag, path):
    lines = ["phase,iteration,p_change,ls_residual"]
    for i, change in enumerate(model_result.history, start=1):
        lines.append(f"model,{i},{change:.15g},")
    residuals = learned_diag["residuals"]
    for i, change in enumerate(learned_result.history, start=1):
        res = residuals[i] if i < len(residuals) else residuals[-1]
        lines.append(f"learned,{i},{change:.15g},{res:.15g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def synth_only(config, out_dir=None):
    """Validation plus model-based synthesis; the model half of a run."""
    timings = {}
    problem = config.problem()
    report = {"schema_version": REPORT_SCHEMA_VERSION, "seed": config.seed}
    with _stage("validate", timings):
        validation = validate_problem(problem)
        report["validation"] = validation.to_dict()
        if not validation.passed:
            raise InvalidProblem(f"problem failed validation: {validation.to_dict()}")
    with _stage("model_synthesis", timings):
        model = structured_policy_iteration(problem, initial_gain=config.initial_gain)
        report["model_based"] = model.to_dict()
        report["spectra"] = {
            "open_loop": _spectrum(config.system.a),
            "closed_loop_model": _spectrum(config.system.a
                                           - config.system.b @ model.gain),
        }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report(report, out / "report.json")
    return report
