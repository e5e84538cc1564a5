"""Command-line surface.

Exit codes: 0 success, 2 usage/input error, 3 verification failure (a KKT
FAIL or an oracle mismatch), so CI can gate on the checks directly.  Every
command writes a manifest.json beside its outputs; `lomv rerun` replays a
manifest and reproduces the data files byte-identically for deterministic
commands.
"""

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .asymptotics import (
    CASE_NEGATIVE_MASS_POSITIVE_MEAN,
    ThetaBound,
    classify_and_solve,
    normal_family_constants,
)
from .distributions import DiscreteDistribution, NormalDistribution, dist_from_json
from .experiments import (
    FOUR_ATOM_EXAMPLE,
    GRID_P,
    cell_seed,
    grid_comparison,
    run_grid,
    run_grid_cell,
    run_weight_scatter,
)
from .io import (
    load_instance_csv,
    load_manifest,
    load_sigma2_sidecar,
    make_run_dir,
    summary_payload,
    utc_now,
    write_json,
    write_manifest,
    write_trials_csv,
    write_weights_csv,
)
from .model import FactorModel
from .montecarlo import (
    ConstantDelta,
    IidDelta,
    SimConfig,
    nonconvergence_experiment,
    run_batch,
)
from .oracle import (
    SUBSET_ENUMERATION_CAP,
    covariance_from_model,
    oracle_solve,
    random_factor_instance,
)
from .solver import solve_lomv, verify_kkt

EXIT_VERIFICATION = 3


def _resolve_out(out, command, seed):
    if out is not None:
        directory = Path(out)
        directory.mkdir(parents=True, exist_ok=True)
        return directory
    return make_run_dir("runs", command, seed if seed is not None else "noseed")


@click.group()
@click.version_option(version=__version__, prog_name="lomv")
def main():
    """Long-only minimum variance portfolios under a one-factor model."""


@main.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--sigma2", type=float, default=None, help="Factor variance (overrides the sidecar).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--tolerance", type=float, default=1e-8, show_default=True, help="KKT tolerance.")
def solve(instance, sigma2, out, tolerance):
    """Solve one instance from a CSV of beta,delta2 rows.

    Writes weights.csv and solution.json; exits 3 when the KKT certificate
    fails at the requested tolerance.
    """

    started = utc_now()
    try:
        betas, delta2s = load_instance_csv(instance)
        if sigma2 is None:
            sigma2 = load_sigma2_sidecar(instance)
        if sigma2 is None:
            raise ValueError("sigma2 missing: pass --sigma2 or provide a JSON sidecar")
        model = FactorModel(sigma2, betas, delta2s)
    except (ValueError, OSError) as exc:
        raise click.UsageError(str(exc)) from exc

    solution = solve_lomv(model)
    certificate = verify_kkt(model, solution.weights, tolerance)
    directory = _resolve_out(out, "solve", None)
    write_weights_csv(directory / "weights.csv", model, solution.weights)
    write_json(
        directory / "solution.json",
        {
            "p": model.p,
            "sigma2": model.sigma2,
            "k": solution.k,
            "threshold_beta": solution.threshold_beta,
            "variance": solution.variance,
            "kkt": {
                "stationarity_residual": certificate.stationarity_residual,
                "complementarity_residual": certificate.complementarity_residual,
                "min_lambda": certificate.min_lambda,
                "min_weight": certificate.min_weight,
                "budget_residual": certificate.budget_residual,
                "nu": certificate.nu,
                "tolerance": certificate.tolerance,
                "passed": certificate.passed,
            },
        },
    )
    write_manifest(
        directory,
        "solve",
        {"instance": str(instance), "sigma2": model.sigma2, "tolerance": tolerance},
        None,
        ["weights.csv", "solution.json"],
        started,
    )
    click.echo(
        f"p={model.p} k={solution.k} variance={solution.variance:.6g} "
        f"kkt={'PASS' if certificate.passed else 'FAIL'} -> {directory}"
    )
    if not certificate.passed:
        sys.exit(EXIT_VERIFICATION)


@main.command("oracle-check")
@click.option("--p-max", type=int, default=12, show_default=True)
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=1234, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def oracle_check(p_max, trials, seed, out):
    """Cross-check the closed-form solver against exhaustive enumeration.

    Random mixed-sign instances; any active-set mismatch or weight
    discrepancy above 1e-9 exits 3.
    """

    if trials <= 0:
        raise click.UsageError("trials must be >= 1")
    if not 1 <= p_max <= SUBSET_ENUMERATION_CAP:
        raise click.UsageError(f"p-max must lie in [1, {SUBSET_ENUMERATION_CAP}]")
    started = utc_now()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0])))
    max_weight_gap = 0.0
    max_variance_gap = 0.0
    mismatches = 0
    for _ in range(trials):
        model = random_factor_instance(rng, p_max)
        solution = solve_lomv(model)
        reference = oracle_solve(covariance_from_model(model))
        if solution.active_original_indices != reference.active_set:
            mismatches += 1
            continue
        max_weight_gap = max(
            max_weight_gap, float(np.max(np.abs(solution.weights - reference.weights)))
        )
        max_variance_gap = max(
            max_variance_gap,
            abs(solution.variance - reference.variance) / reference.variance,
        )
    passed = mismatches == 0 and max_weight_gap < 1e-9
    directory = _resolve_out(out, "oracle-check", seed)
    write_json(
        directory / "oracle_report.json",
        {
            "p_max": p_max,
            "trials": trials,
            "seed": seed,
            "max_weight_discrepancy": max_weight_gap,
            "max_variance_rel_discrepancy": max_variance_gap,
            "active_set_mismatches": mismatches,
            "passed": passed,
        },
    )
    write_manifest(
        directory,
        "oracle-check",
        {"p_max": p_max, "trials": trials, "seed": seed},
        seed,
        ["oracle_report.json"],
        started,
    )
    click.echo(
        f"trials={trials} mismatches={mismatches} "
        f"max_weight_gap={max_weight_gap:.3g} -> {directory}"
    )
    if not passed:
        sys.exit(EXIT_VERIFICATION)


@main.command()
@click.argument("dist_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None)
def asymptote(dist_json, out):
    """Classify a beta distribution and locate its limiting active ratio."""
    started = utc_now()
    try:
        dist = dist_from_json(dist_json)
        report = classify_and_solve(dist)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(str(exc)) from exc

    finite_star = math.isfinite(report.beta_star)
    bound_payload = None
    if isinstance(dist, NormalDistribution) and dist.mean() > 0:
        constants = normal_family_constants(dist.mean(), dist.s)
        epsilon = dist.cdf(0.0)
        if 0.0 < epsilon < 1.0:
            bound_payload = {
                "mu_lower": constants.mu_lower,
                "second_moment": constants.second_moment,
                "neg_second_moment": constants.neg_second_moment,
                "concentration": constants.concentration,
                "theta": constants.theta,
                "epsilon": epsilon,
                "value": constants.bound(epsilon),
            }
    directory = _resolve_out(out, "asymptote", None)
    write_json(
        directory / "asymptote.json",
        {
            "case": report.case_label,
            "beta_star": report.beta_star if finite_star else None,
            "f_beta_star": dist.cdf(report.beta_star) if finite_star else None,
            "f_beta_star_left": dist.cdf_left(report.beta_star) if finite_star else None,
            "atom_mass": report.atom_at_beta_star,
            "limit": report.limit,
            "liminf": report.liminf,
            "limsup": report.limsup,
            "theta_bound": bound_payload,
        },
    )
    write_manifest(
        directory, "asymptote", {"dist_json": str(dist_json)}, None, ["asymptote.json"], started
    )
    star = f"{report.beta_star:.6g}" if finite_star else "inf"
    click.echo(f"case={report.case_label} beta*={star} limsup={report.limsup:.6g} -> {directory}")


def _delta_model_from_spec(spec):
    if isinstance(spec, (int, float)):
        return ConstantDelta(float(spec))
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "constant":
            return ConstantDelta(float(spec["delta2"]))
        if kind == "iid":
            return IidDelta(dist_from_json(spec["dist"]))
    raise ValueError(f"bad delta model spec: {spec!r}")


def _sim_config_from_json(path, overrides) -> SimConfig:
    payload = {}
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
        if not isinstance(payload, dict):
            raise ValueError("simulation config must be a JSON object")
    base_dir = Path(path).parent if path is not None else None

    dist_spec = overrides.get("dist") or payload.get("dist")
    if dist_spec is None:
        raise ValueError("missing 'dist' (distribution spec or JSON path)")
    if isinstance(dist_spec, (str, Path)):
        dist = dist_from_json(dist_spec)
    else:
        dist = dist_from_json(dist_spec, base_dir=base_dir)

    if overrides.get("delta2") is not None:
        delta_model = ConstantDelta(overrides["delta2"])
    elif "delta_model" in payload:
        delta_model = _delta_model_from_spec(payload["delta_model"])
    elif "delta2" in payload:
        delta_model = ConstantDelta(float(payload["delta2"]))
    else:
        raise ValueError("missing delta model: set 'delta2' or 'delta_model'")

    def pick(name, default=None):
        if overrides.get(name) is not None:
            return overrides[name]
        return payload.get(name, default)

    p = pick("p")
    trials = pick("trials")
    seed = pick("seed")
    if p is None or trials is None or seed is None:
        raise ValueError("p, trials, and seed are required")
    return SimConfig(
        dist=dist,
        delta_model=delta_model,
        p=int(p),
        trials=int(trials),
        seed=int(seed),
        sigma2=float(pick("sigma2", 1.0)),
        parallel=bool(pick("parallel", False)),
    )


@main.command()
@click.argument("config_json", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--dist", type=click.Path(exists=True, dir_okay=False), default=None, help="Distribution JSON path.")
@click.option("--delta2", type=float, default=None, help="Constant idiosyncratic variance.")
@click.option("--sigma2", type=float, default=None)
@click.option("--p", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--parallel", is_flag=True, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def simulate(config_json, dist, delta2, sigma2, p, trials, seed, parallel, out):
    """Run a seeded batch of trials; write trials.csv and summary.json."""
    started = utc_now()
    overrides = {
        "dist": dist,
        "delta2": delta2,
        "sigma2": sigma2,
        "p": p,
        "trials": trials,
        "seed": seed,
        "parallel": parallel,
    }
    try:
        config = _sim_config_from_json(config_json, overrides)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        raise click.UsageError(str(exc)) from exc

    report = classify_and_solve(config.dist)
    population_star = (
        report.beta_star
        if report.case_label == CASE_NEGATIVE_MASS_POSITIVE_MEAN
        and report.atom_at_beta_star > 0
        else None
    )
    batch = run_batch(config, population_beta_star=population_star)
    directory = _resolve_out(out, "simulate", config.seed)
    write_trials_csv(directory / "trials.csv", batch, config.p, config.seed)
    write_json(directory / "summary.json", summary_payload(batch, config, report))
    write_manifest(
        directory,
        "simulate",
        {
            "dist": config.dist.to_json(),
            "delta_model": config.delta_model.to_json(),
            "sigma2": config.sigma2,
            "p": config.p,
            "trials": config.trials,
            "seed": config.seed,
            "parallel": config.parallel,
        },
        config.seed,
        ["trials.csv", "summary.json"],
        started,
    )
    click.echo(
        f"p={config.p} trials={config.trials} mean={batch.summary.mean:.4f} "
        f"sd={batch.summary.sd:.4f} -> {directory}"
    )


def _write_cell(directory, name, cell):
    write_trials_csv(directory / f"{name}.csv", cell.batch, cell.p, cell.seed)
    config = SimConfig(
        dist=NormalDistribution(1.0, cell.s),
        delta_model=ConstantDelta(cell.delta2),
        p=cell.p,
        trials=cell.trials,
        seed=cell.seed,
    )
    report = classify_and_solve(config.dist)
    write_json(
        directory / f"{name}.summary.json", summary_payload(cell.batch, config, report)
    )


def _reproduce_grid(directory, seed, trials, delta2_values):
    cells = run_grid(seed, trials=trials, delta2_values=delta2_values)
    outputs = []
    for cell in cells:
        name = f"s{cell.s}_d{cell.delta2}_p{cell.p}"
        _write_cell(directory, name, cell)
        outputs += [f"{name}.csv", f"{name}.summary.json"]
    comparison = grid_comparison(cells)
    write_json(directory / "comparison.json", comparison)
    outputs.append("comparison.json")
    return outputs, comparison


def _reproduce_fig4(directory, seed, trials):
    report = classify_and_solve(FOUR_ATOM_EXAMPLE)
    outputs = []
    for pi, p in enumerate(GRID_P):
        config = SimConfig(
            dist=FOUR_ATOM_EXAMPLE,
            delta_model=ConstantDelta(0.1),
            p=p,
            trials=trials,
            seed=cell_seed(seed, pi),
        )
        batch = nonconvergence_experiment(config, beta_star=report.beta_star)
        name = f"nonconvergence_p{p}"
        write_trials_csv(directory / f"{name}.csv", batch, p, config.seed)
        write_json(
            directory / f"{name}.summary.json", summary_payload(batch, config, report)
        )
        outputs += [f"{name}.csv", f"{name}.summary.json"]
    grid = np.linspace(0.0, 6.0, 601)
    with open(directory / "g_curve.csv", "w", encoding="utf-8") as handle:
        handle.write("y,g\n")
        for y in grid:
            handle.write(f"{float(y)!r},{FOUR_ATOM_EXAMPLE.g(float(y))!r}\n")
    write_json(
        directory / "g_curve.summary.json",
        {
            "beta_star": report.beta_star,
            "liminf": report.liminf,
            "limsup": report.limsup,
            "atom_mass": report.atom_at_beta_star,
        },
    )
    outputs += ["g_curve.csv", "g_curve.summary.json"]
    return outputs


def _reproduce_fig1(directory, seed):
    result = run_weight_scatter(seed)
    model = result.model
    with open(directory / "weights_scatter.csv", "w", encoding="utf-8") as handle:
        handle.write("index,beta,lomv_weight,gmv_weight\n")
        for i in range(model.p):
            handle.write(
                f"{i},{float(model.betas[i])!r},"
                f"{float(result.lomv_weights[i])!r},{float(result.gmv_weights[i])!r}\n"
            )
    write_json(
        directory / "counts.json",
        {
            "p": model.p,
            "lomv_active": result.active_count,
            "lomv_active_fraction": result.active_count / model.p,
            "gmv_positive": result.gmv_positive_count,
            "gmv_positive_fraction": result.gmv_positive_count / model.p,
        },
    )
    return ["weights_scatter.csv", "counts.json"]


@main.command()
@click.argument("target", type=click.Choice(["table1", "fig1", "fig2", "fig3", "fig4"]))
@click.option("--seed", type=int, default=20241, show_default=True)
@click.option("--trials", type=int, default=400, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def reproduce(target, seed, trials, out):
    """Re-run a published experiment and compare against its reference values."""
    if trials <= 0:
        raise click.UsageError("trials must be >= 1")
    started = utc_now()
    directory = _resolve_out(out, f"reproduce-{target}", seed)
    if target == "table1":
        outputs, comparison = _reproduce_grid(directory, seed, trials, (0.5, 0.1))
        message = f"all_within_4se={comparison['all_within_4se']}"
    elif target in ("fig2", "fig3"):
        delta2 = 0.5 if target == "fig2" else 0.1
        outputs, comparison = _reproduce_grid(directory, seed, trials, (delta2,))
        message = f"all_within_4se={comparison['all_within_4se']}"
    elif target == "fig4":
        outputs = _reproduce_fig4(directory, seed, trials)
        message = "modes written"
    else:
        outputs = _reproduce_fig1(directory, seed)
        message = "scatter written"
    write_manifest(
        directory,
        f"reproduce-{target}",
        {"target": target, "seed": seed, "trials": trials},
        seed,
        outputs,
        started,
    )
    click.echo(f"{target}: {message} -> {directory}")


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), required=True)
def rerun(manifest, out):
    """Replay a manifest into a fresh directory.

    Deterministic commands reproduce their data files byte-identically.
    """

    try:
        record = load_manifest(manifest)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(str(exc)) from exc
    params = record.params
    runner = {
        "solve": lambda: main.main(
            [
                "solve",
                params["instance"],
                "--sigma2",
                str(params["sigma2"]),
                "--tolerance",
                str(params["tolerance"]),
                "--out",
                out,
            ],
            standalone_mode=False,
        ),
        "oracle-check": lambda: main.main(
            [
                "oracle-check",
                "--p-max",
                str(params["p_max"]),
                "--trials",
                str(params["trials"]),
                "--seed",
                str(params["seed"]),
                "--out",
                out,
            ],
            standalone_mode=False,
        ),
        "asymptote": lambda: main.main(
            ["asymptote", params["dist_json"], "--out", out], standalone_mode=False
        ),
    }
    command = record.command
    if command in runner:
        runner[command]()
        return
    if command == "simulate":
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        spec_file = out_dir / "_rerun_config.json"
        with open(spec_file, "w", encoding="utf-8") as handle:
            json.dump(
                {
                    key: params[key]
                    for key in ("dist", "delta_model", "sigma2", "p", "trials", "seed", "parallel")
                },
                handle,
            )
        main.main(["simulate", str(spec_file), "--out", out], standalone_mode=False)
        spec_file.unlink()
        return
    if command.startswith("reproduce-"):
        main.main(
            [
                "reproduce",
                params["target"],
                "--seed",
                str(params["seed"]),
                "--trials",
                str(params["trials"]),
                "--out",
                out,
            ],
            standalone_mode=False,
        )
        return
    raise click.UsageError(f"manifest command {command!r} is not replayable")


if __name__ == "__main__":
    main()
