"""Command-line experiment driver.

Subcommands:
    validate         assumption report for a configured problem
    simulate         gradient-descent escape runs with bound snapshots
    approx           model-trajectory error against the recorded reference
    family           interval-family exit sampling
    bounds           closed-form bound report per run
    phase-retrieval  escape runs on phase retrieval across seeds, no config file

One JSON config document describes an experiment; no environment variables.
Exit codes: 0 success, 2 configuration or I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import approx, bounds, perturb, problems, simulate, spectral

NUMERICAL_ERRORS = (
    spectral.NotSymmetric,
    spectral.NotMorse,
    spectral.NoNegativeEigenvalue,
    spectral.SingleGroup,
    spectral.WrongRadius,
    problems.NotStrictSaddle,
    problems.NotStrictSaddleAtZero,
    simulate.NoExit,
    simulate.StepTooLarge,
    perturb.DegeneracyUnhandled,
    perturb.InvalidAlpha,
    approx.ZeroGap,
    approx.NoExitInFamily,
    bounds.NoLinearExit,
    bounds.VacuousBound,
    bounds.OutOfDomain,
)


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description.

    problem: {"kind": "quadratic", "lambdas": [...]} or {"kind": "cubic"} or
    {"kind": "phase_retrieval", "n": int}.  alpha_mode scales the top step:
    alpha = alpha_mode / L.  Each init carries a label plus either a
    theta_us_sq mass or an explicit u0.
    """

    problem: dict
    eps: float
    alpha_mode: float
    inits: tuple[dict, ...]
    seeds: tuple[int, ...]
    k_max: int | None
    rho: float
    n_samples: int
    estimate_samples: int
    out_prefix: str


@dataclass(frozen=True)
class ExperimentRecord:
    """One gradient-descent run with its bound snapshot."""

    run_id: str
    seed: int
    init_label: str
    theta_us_sq: float
    norms: np.ndarray
    stable_proj_sq: np.ndarray
    unstable_proj_sq: np.ndarray
    first_exit_k: int | None
    summary: dict


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a raw config dict.  Raises ConfigError with a field name."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    try:
        prob = doc["problem"]
        eps = float(doc["eps"])
        alpha_mode = float(doc["alpha_mode"])
        inits = doc["inits"]
        seeds = [int(s) for s in doc["seeds"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"missing or malformed required field: {exc}") from exc
    if not isinstance(prob, dict) or prob.get("kind") not in (
        "quadratic",
        "cubic",
        "phase_retrieval",
    ):
        raise ConfigError("problem.kind must be quadratic, cubic or phase_retrieval")
    if prob["kind"] == "quadratic" and "lambdas" not in prob:
        raise ConfigError("quadratic problem needs lambdas")
    if prob["kind"] == "phase_retrieval" and "n" not in prob:
        raise ConfigError("phase_retrieval problem needs n")
    if eps <= 0:
        raise ConfigError("eps must be positive")
    if not 0 < alpha_mode <= 1:
        raise ConfigError("alpha_mode must lie in (0, 1]")
    if not seeds:
        raise ConfigError("seeds must be a nonempty list")
    if not isinstance(inits, list) or not inits:
        raise ConfigError("inits must be a nonempty list")
    norm_inits = []
    for entry in inits:
        if not isinstance(entry, dict) or "label" not in entry:
            raise ConfigError("every init needs a label")
        if ("theta_us_sq" in entry) == ("u0" in entry):
            raise ConfigError(
                f"init {entry.get('label')!r} needs exactly one of theta_us_sq or u0"
            )
        if "theta_us_sq" in entry:
            t = float(entry["theta_us_sq"])
            if not 0 <= t <= 1:
                raise ConfigError(
                    f"init {entry['label']!r}: theta_us_sq = {t} outside [0, 1]"
                )
            norm_inits.append({"label": str(entry["label"]), "theta_us_sq": t})
        else:
            norm_inits.append(
                {"label": str(entry["label"]), "u0": [float(v) for v in entry["u0"]]}
            )
    rho = float(doc.get("rho", 0.5))
    if not 0 < rho < 1:
        raise ConfigError("rho must lie in (0, 1)")
    k_max = doc.get("k_max")
    if k_max is not None:
        k_max = int(k_max)
        if k_max < 1:
            raise ConfigError("k_max must be at least 1")
    return ExperimentConfig(
        problem=prob,
        eps=eps,
        alpha_mode=alpha_mode,
        inits=tuple(norm_inits),
        seeds=tuple(seeds),
        k_max=k_max,
        rho=rho,
        n_samples=int(doc.get("n_samples", 200)),
        estimate_samples=int(doc.get("estimate_samples", 10_000)),
        out_prefix=str(doc.get("out_prefix", "experiment")),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)


def _build_problem(config: ExperimentConfig, seed: int) -> problems.SaddleProblem:
    kind = config.problem["kind"]
    if kind == "quadratic":
        return problems.quadratic_saddle(config.problem["lambdas"])
    if kind == "cubic":
        return problems.cubic_test()
    n = int(config.problem["n"])
    return problems.phase_retrieval(n, n, seed=seed)


def _init_offset(
    entry: dict, spectrum: spectral.Spectrum, eps: float
) -> np.ndarray:
    """Deterministic starting offset on the eps-sphere for one init entry."""
    if "u0" in entry:
        u0 = np.asarray(entry["u0"], dtype=float)
        if u0.shape != (spectrum.dim,):
            raise ConfigError(
                f"init {entry['label']!r}: u0 has shape {u0.shape}, expected ({spectrum.dim},)"
            )
        return u0
    t = entry["theta_us_sq"]
    n_s = spectrum.stable_idx.size
    n_us = spectrum.unstable_idx.size
    if t < 1 and n_s == 0:
        raise ConfigError(
            f"init {entry['label']!r}: no stable directions to carry mass {1 - t:g}"
        )
    theta = np.zeros(spectrum.dim)
    if n_us:
        theta[spectrum.unstable_idx] = math.sqrt(t / n_us)
    if n_s and t < 1:
        theta[spectrum.stable_idx] = math.sqrt((1.0 - t) / n_s)
    return eps * (spectrum.eigenvectors @ theta)


def _jsonable(obj):
    """Recursively convert to JSON-safe values; non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def run_experiment(config: ExperimentConfig) -> list[ExperimentRecord]:
    """Run every (seed, init) gradient-descent escape and snapshot the bounds.

    Records come back sorted by (seed, init_label).  An eps above the
    estimated validity radius triggers a warning and is recorded, not fatal.
    """
    records = []
    for seed in config.seeds:
        problem = _build_problem(config, seed)
        spectrum = spectral.decompose(problem.hessian(problem.saddle))
        constants = problems.estimate_constants(
            problem, config.eps, samples=config.estimate_samples, seed=seed
        )
        if config.eps > constants.eps_max:
            warnings.warn(
                f"eps = {config.eps:g} exceeds the validity radius "
                f"eps_max = {constants.eps_max:g} for {problem.label}",
                stacklevel=2,
            )
        alpha = config.alpha_mode / constants.big_l
        for entry in config.inits:
            u0 = _init_offset(entry, spectrum, config.eps)
            traj = simulate.gd_run(problem, u0, alpha, config.eps, k_max=config.k_max)
            projections = spectral.project(u0, spectrum, config.eps)
            boundary = bounds.boundary_condition_check(projections, constants, config.rho)

            theta_s_sq = float(projections.theta_s @ projections.theta_s)
            theta_us_sq = float(projections.theta_us @ projections.theta_us)
            mass = theta_s_sq + theta_us_sq
            p = bounds.psi_constants(
                constants.big_l,
                constants.beta,
                constants.big_m,
                constants.delta,
                spectrum.dim,
                alpha,
                config.eps,
                theta_s_sq / mass,
                theta_us_sq / mass,
            )
            try:
                k_iota = bounds.k_iota_from_psi(p, traj.budget)
            except bounds.NoLinearExit:
                k_iota = None
            try:
                crude_k, crude_threshold = bounds.crude_bound(
                    bounds.CrudeBoundParams(
                        rho=config.rho,
                        gamma=1.0,
                        beta=constants.beta,
                        big_m=constants.big_m,
                        alpha=alpha,
                        eps=config.eps,
                    )
                )
            except bounds.VacuousBound:
                crude_k, crude_threshold = None, None

            proj = traj.radials @ spectrum.eigenvectors
            stable_sq = np.sum(proj[:, spectrum.stable_idx] ** 2, axis=1)
            unstable_sq = np.sum(proj[:, spectrum.unstable_idx] ** 2, axis=1)

            run_id = f"s{seed}-{entry['label']}"
            summary = {
                "run_id": run_id,
                "seed": seed,
                "init_label": entry["label"],
                "label": problem.label,
                "eps": config.eps,
                "alpha": alpha,
                "alpha_mode": config.alpha_mode,
                "theta_us_sq": theta_us_sq,
                "first_exit_k": traj.exit_index,
                "k_iota": k_iota,
                "exit_k_bound": boundary["exit_k_bound"],
                "delta_threshold": boundary["delta_threshold"],
                "passes_delta": boundary["passes_delta"],
                "well_conditioned": boundary["well_conditioned"],
                "crude_k_bound": crude_k,
                "crude_threshold": crude_threshold,
                "crude_ok": boundary["crude_ok"],
                "crude_gamma_assumed": 1.0,
                "eps_within_validity": bool(config.eps <= constants.eps_max),
                "constants": {
                    "big_l": constants.big_l,
                    "beta": constants.beta,
                    "delta": constants.delta,
                    "big_m": constants.big_m,
                    "eps_max": constants.eps_max,
                },
            }
            records.append(
                ExperimentRecord(
                    run_id=run_id,
                    seed=seed,
                    init_label=entry["label"],
                    theta_us_sq=theta_us_sq,
                    norms=traj.norms,
                    stable_proj_sq=stable_sq,
                    unstable_proj_sq=unstable_sq,
                    first_exit_k=traj.exit_index,
                    summary=summary,
                )
            )
    records.sort(key=lambda r: (r.seed, r.init_label))
    return records


def emit(records: list[ExperimentRecord], format: str, out_dir: str, prefix: str | None = None) -> list[Path]:
    """Write experiment artifacts; returns the paths written.

    csv: one <prefix>_runs.csv row per recorded iteration plus a
    <prefix>_summary.json with one entry per run.  json: the summary only.
    Output is byte-stable for identical records.
    """
    if not records:
        raise ValueError("no records to emit")
    if format not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {format!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if prefix is None:
        prefix = "experiment"
    written = []

    summary_path = out / f"{prefix}_summary.json"
    payload = {"runs": [_jsonable(r.summary) for r in records]}
    summary_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)

    if format == "csv":
        csv_path = out / f"{prefix}_runs.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "run_id",
                    "seed",
                    "init_label",
                    "k",
                    "radial_norm",
                    "stable_proj_sq",
                    "unstable_proj_sq",
                    "exited",
                ]
            )
            for r in records:
                for k in range(r.norms.size):
                    exited = r.first_exit_k is not None and k >= r.first_exit_k
                    writer.writerow(
                        [
                            r.run_id,
                            r.seed,
                            r.init_label,
                            k,
                            repr(float(r.norms[k])),
                            repr(float(r.stable_proj_sq[k])),
                            repr(float(r.unstable_proj_sq[k])),
                            exited,
                        ]
                    )
        written.append(csv_path)
    return written


def _cmd_validate(config: ExperimentConfig, args) -> int:
    seed = config.seeds[0]
    problem = _build_problem(config, seed)
    report = problems.validate_assumptions(problem, config.eps, seed=seed)
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{config.out_prefix}_validate.json"
        path.write_text(text)
        print(path)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_simulate(config: ExperimentConfig, args) -> int:
    records = run_experiment(config)
    for path in emit(records, args.format, args.out or ".", config.out_prefix):
        print(path)
    return 0


def _cmd_approx(config: ExperimentConfig, args) -> int:
    runs = []
    for seed in config.seeds:
        problem = _build_problem(config, seed)
        spectrum = spectral.decompose(problem.hessian(problem.saddle))
        alpha = config.alpha_mode / spectrum.big_l
        for entry in config.inits:
            u0 = _init_offset(entry, spectrum, config.eps)
            traj = simulate.gd_run(problem, u0, alpha, config.eps, k_max=config.k_max)
            projections = spectral.project(u0, spectrum, config.eps)
            coeffs = approx.reference_coefficients(problem, spectrum, traj)
            stop = traj.norms.size - 1
            path = approx.eps_trajectory(projections, spectrum, coeffs, stop)
            errs = np.linalg.norm(path - traj.radials, axis=1) / traj.norms
            runs.append(
                {
                    "run_id": f"s{seed}-{entry['label']}",
                    "first_exit_k": traj.exit_index,
                    "steps_compared": int(stop),
                    "max_rel_error": float(np.max(errs)),
                    "eps": config.eps,
                }
            )
    text = json.dumps(_jsonable({"runs": runs}), indent=2, sort_keys=True) + "\n"
    _write_or_print(text, args, f"{config.out_prefix}_approx.json")
    return 0


def _cmd_family(config: ExperimentConfig, args) -> int:
    out_rows = []
    summaries = []
    for seed in config.seeds:
        problem = _build_problem(config, seed)
        spectrum = spectral.decompose(problem.hessian(problem.saddle))
        constants = problems.estimate_constants(
            problem, config.eps, samples=config.estimate_samples, seed=seed
        )
        alpha = config.alpha_mode / constants.big_l
        intervals = approx.coefficient_intervals(
            constants.big_l,
            constants.beta,
            constants.big_m,
            constants.delta,
            alpha,
            config.eps,
        )
        for entry in config.inits:
            u0 = _init_offset(entry, spectrum, config.eps)
            projections = spectral.project(u0, spectrum, config.eps)
            k_max = config.k_max or simulate.default_k_max(
                config.eps, alpha, constants.beta
            )
            fam = approx.sample_family(
                intervals,
                projections,
                spectrum,
                k_max,
                config.eps,
                config.n_samples,
                seed,
            )
            run_id = f"s{seed}-{entry['label']}"
            for t, k_exit in enumerate(fam.sampled_exit_times):
                out_rows.append(
                    (run_id, t, "" if math.isinf(k_exit) else int(k_exit))
                )
            summaries.append(
                {
                    "run_id": run_id,
                    "k_iota": fam.k_iota,
                    "sup_exit": fam.sup_exit,
                    "n_samples": fam.n_samples,
                    "k_max": fam.k_max,
                }
            )
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{config.out_prefix}_family.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "tau_index", "exit_k"])
        writer.writerows(out_rows)
    json_path = out / f"{config.out_prefix}_family.json"
    json_path.write_text(
        json.dumps(_jsonable({"runs": summaries}), indent=2, sort_keys=True) + "\n"
    )
    print(csv_path)
    print(json_path)
    return 0


def _cmd_bounds(config: ExperimentConfig, args) -> int:
    runs = []
    for seed in config.seeds:
        problem = _build_problem(config, seed)
        spectrum = spectral.decompose(problem.hessian(problem.saddle))
        constants = problems.estimate_constants(
            problem, config.eps, samples=config.estimate_samples, seed=seed
        )
        for entry in config.inits:
            u0 = _init_offset(entry, spectrum, config.eps)
            projections = spectral.project(u0, spectrum, config.eps)
            report = bounds.boundary_condition_check(projections, constants, config.rho)
            report["run_id"] = f"s{seed}-{entry['label']}"
            report["constants"] = {
                "big_l": constants.big_l,
                "beta": constants.beta,
                "delta": constants.delta,
                "big_m": constants.big_m,
                "eps_max": constants.eps_max,
            }
            runs.append(report)
    text = json.dumps(_jsonable({"runs": runs}), indent=2, sort_keys=True) + "\n"
    _write_or_print(text, args, f"{config.out_prefix}_bounds.json")
    return 0


def _write_or_print(text: str, args, filename: str) -> None:
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / filename
        path.write_text(text)
        print(path)
    else:
        sys.stdout.write(text)


def _phase_retrieval_config(args) -> ExperimentConfig:
    return parse_config(
        {
            "problem": {"kind": "phase_retrieval", "n": args.n},
            "eps": args.eps,
            "alpha_mode": args.alpha_mode,
            "inits": [{"label": "split", "theta_us_sq": args.theta_us_sq}],
            "seeds": list(range(args.num_seeds)),
            "out_prefix": "phase_retrieval",
        }
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saddlesim",
        description="Escape-time experiments around strict saddle points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default: stdout or cwd)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--seed", type=int, default=None, help="override the config seed list")

    for name, fn in (
        ("validate", _cmd_validate),
        ("simulate", _cmd_simulate),
        ("approx", _cmd_approx),
        ("family", _cmd_family),
        ("bounds", _cmd_bounds),
    ):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("phase-retrieval")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--num-seeds", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--alpha-mode", type=float, default=1.0)
    p.add_argument("--theta-us-sq", type=float, default=0.5)
    common(p, needs_config=False)
    p.set_defaults(fn=_cmd_simulate, phase_retrieval=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "phase_retrieval", False):
            config = _phase_retrieval_config(args)
        else:
            config = load_config(args.config)
        if args.seed is not None:
            config = ExperimentConfig(
                problem=config.problem,
                eps=config.eps,
                alpha_mode=config.alpha_mode,
                inits=config.inits,
                seeds=(args.seed,),
                k_max=config.k_max,
                rho=config.rho,
                n_samples=config.n_samples,
                estimate_samples=config.estimate_samples,
                out_prefix=config.out_prefix,
            )
        return args.fn(config, args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
