"""Command-line surface.

Subcommands: simulate, fit, mc, lm-test, moment-region, transition-curve,
empirical.  Every subcommand writes a manifest JSON with the resolved
configuration and seed, and all data outputs are deterministic given the
seed.  Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import functools
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import io as aio
from .empirical import empirical_pipeline, render_report
from .errors import (
    DegenerateSeriesError,
    ExcessiveDiscardsError,
    InvalidConfigError,
    InvalidParameterError,
    NoConvergenceError,
    NonfiniteLikelihoodError,
    SingularMomentMatrixError,
)
from .estimate import FitOptions, fit, lm_constancy_test
from .likelihood import LikelihoodConfig, truncated_variance
from .model import (
    ErrorDist,
    ModelSpec,
    ParamVector,
    TransitionParams,
    logistic_g,
    moment_region_grid,
    time_varying_intercept,
)
from .montecarlo import dgp_theta, make_dgp, run_mc, standardized_estimates
from .simulate import SeriesFrame, SimConfig, simulate

EXIT_INVALID_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_CONFIG_ERRORS = (InvalidConfigError, InvalidParameterError, click.UsageError)
_NUMERICAL_ERRORS = (
    NonfiniteLikelihoodError,
    NoConvergenceError,
    ExcessiveDiscardsError,
    DegenerateSeriesError,
    SingularMomentMatrixError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _CONFIG_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INVALID_CONFIG)
        except _NUMERICAL_ERRORS as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except OSError as exc:
            click.echo(f"io failure: {exc}", err=True)
            sys.exit(EXIT_IO)

    return wrapper


def _apply_config(ctx: click.Context, config_path: str | None) -> None:
    """Fill defaults from a key = value config file; explicit flags win."""
    if not config_path:
        return
    allowed = {p.name for p in ctx.command.params if p.name != "config"}
    values = aio.load_config_file(config_path, allowed)
    for key, value in values.items():
        src = ctx.get_parameter_source(key)
        if src is not None and src.name == "DEFAULT":
            ctx.params[key] = value


def _parse_transition(text: str) -> dict:
    out: dict = {}
    for part in text.split(","):
        if "=" not in part:
            raise InvalidConfigError(f"transition spec {text!r}: expected key=value pairs")
        key, _, val = part.partition("=")
        key = key.strip()
        if key not in ("gamma", "c", "weight"):
            raise InvalidConfigError(f"transition spec: unknown key {key!r}")
        if key == "c":
            out["c"] = tuple(float(v) for v in val.split(":"))
        else:
            out[key] = float(val)
    if "gamma" not in out or "c" not in out:
        raise InvalidConfigError("transition spec needs at least gamma=... and c=...")
    out.setdefault("weight", 1.0)
    return out


def _build_theta(alpha0, alphas, betas, transitions) -> ParamVector:
    def _floats(text):
        return tuple(float(v) for v in str(text).split(",")) if str(text).strip() else ()

    trs = tuple(
        TransitionParams(gamma=t["gamma"], locations=t["c"], weight=t["weight"])
        for t in (_parse_transition(s) for s in transitions)
    )
    return ParamVector(float(alpha0), _floats(alphas), _floats(betas), trs)


def _theta_dict(theta: ParamVector) -> dict:
    return {
        "alpha0": theta.alpha0,
        "alphas": list(theta.alphas),
        "betas": list(theta.betas),
        "transitions": [
            {"weight": tr.weight, "gamma": tr.gamma, "c": list(tr.locations)}
            for tr in theta.transitions
        ],
    }


def _read_returns(input_path, column, kind) -> np.ndarray:
    from .empirical import log_returns

    if kind == "price":
        prices = aio.read_series_csv(input_path, column, require_positive=True)
        return log_returns(prices)
    return aio.read_series_csv(input_path, column)


@click.group()
@click.option("--output-dir", default=".", type=click.Path(file_okay=False), help="Directory for all output files.")
@click.option("--seed", default=0, type=int, help="Master RNG seed.")
@click.option("--threads", default=1, type=int, help="Worker processes for replication studies.")
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "json"]), help="Summary output format.")
@click.pass_context
def main(ctx, output_dir, seed, threads, fmt):
    """Simulation, estimation and diagnostics for time-varying-intercept GARCH."""
    ctx.ensure_object(dict)
    ctx.obj.update(output_dir=Path(output_dir), seed=seed, threads=threads, fmt=fmt)
    ctx.obj["output_dir"].mkdir(parents=True, exist_ok=True)


@main.command("simulate")
@click.option("--dgp", default=None, help="Registered DGP name (DGP1, DGP2, DGP3).")
@click.option("--alpha0", default=0.05, show_default=True)
@click.option("--alphas", default="0.1", show_default=True, help="Comma-separated ARCH weights.")
@click.option("--betas", default="0.8", show_default=True, help="Comma-separated GARCH weights.")
@click.option("--transition", "transitions", multiple=True, help="Repeatable: gamma=18,c=0.5,weight=0.15 (c may be colon-separated).")
@click.option("--t", "--T", "n_obs", default=1000, show_default=True, help="Sample length.")
@click.option("--burn-in", default=500, show_default=True)
@click.option("--student-dof", default=None, type=float, help="Use standardized Student-t errors with this dof.")
@click.option("--out", default="series", show_default=True, help="Output file stem.")
@click.option("--config", default=None, type=click.Path(exists=True))
@click.pass_context
@_guarded
def cmd_simulate(ctx, dgp, alpha0, alphas, betas, transitions, n_obs, burn_in, student_dof, out, config):
    """Write a simulated series CSV plus its manifest."""
    _apply_config(ctx, config)
    p = ctx.params
    t0 = time.time()
    theta = dgp_theta({"DGP1": 12.0, "DGP2": 18.0, "DGP3": 46.0}[p["dgp"].upper()]) if p["dgp"] else _build_theta(
        p["alpha0"], p["alphas"], p["betas"], p["transitions"]
    )
    dist = ErrorDist.student_t(p["student_dof"]) if p["student_dof"] else ErrorDist.gaussian()
    cfg = SimConfig(theta=theta, n_obs=int(p["n_obs"]), burn_in=int(p["burn_in"]), seed=ctx.obj["seed"], error_dist=dist)
    frame = simulate(cfg)
    outdir = ctx.obj["output_dir"]
    series_path = outdir / f"{p['out']}.csv"
    frame.to_csv(series_path)
    aio.write_manifest(
        outdir / f"{p['out']}_manifest.json",
        "simulate",
        {
            "dgp": p["dgp"],
            "theta": _theta_dict(theta),
            "n_obs": int(p["n_obs"]),
            "burn_in": int(p["burn_in"]),
            "seed": ctx.obj["seed"],
            "error_dist": {"kind": dist.kind, "dof": dist.dof},
        },
        time.time() - t0,
    )
    click.echo(f"wrote {series_path}")


@main.command("fit")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--column", default="x", show_default=True)
@click.option("--kind", default="return", type=click.Choice(["return", "price"]), show_default=True)
@click.option("--model", default="atv", type=click.Choice(["garch", "atv"]), show_default=True)
@click.option("--n-transitions", default=1, show_default=True)
@click.option("--p", "p_order", default=1, show_default=True)
@click.option("--q", "q_order", default=1, show_default=True)
@click.option("--truncation-lag", default=200, show_default=True)
@click.option("--out", default="fit", show_default=True)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.pass_context
@_guarded
def cmd_fit(ctx, input_path, column, kind, model, n_transitions, p_order, q_order, truncation_lag, out, config):
    """Fit the model to a CSV column; write the result JSON and fitted paths."""
    _apply_config(ctx, config)
    p = ctx.params
    t0 = time.time()
    x = _read_returns(p["input_path"], p["column"], p["kind"])
    frame = SeriesFrame.from_returns(x)
    n_tr = 0 if p["model"] == "garch" else int(p["n_transitions"])
    spec = ModelSpec(p=int(p["p_order"]), q=int(p["q_order"]), n_transitions=n_tr, k_orders=(1,) * n_tr)
    res = fit(frame, spec, FitOptions(truncation_lag=int(p["truncation_lag"]), seed=ctx.obj["seed"]))
    outdir = ctx.obj["output_dir"]
    aio.write_json(outdir / f"{p['out']}.json", res.to_json_dict())
    h_hat = truncated_variance(
        res.theta_hat, frame.x**2, frame.times, LikelihoodConfig(truncation_lag=int(p["truncation_lag"]))
    )
    g_hat = time_varying_intercept(res.theta_hat, frame.times) - res.theta_hat.alpha0
    aio.write_matrix_csv(
        outdir / f"{p['out']}_paths.csv",
        ["t", "time", "x", "h_hat", "g_hat"],
        (
            [t + 1, frame.times[t], frame.x[t], h_hat[t], g_hat[t]]
            for t in range(frame.n_obs)
        ),
    )
    aio.write_manifest(
        outdir / f"{p['out']}_manifest.json",
        "fit",
        {k: p[k] for k in ("input_path", "column", "kind", "model", "n_transitions", "p_order", "q_order", "truncation_lag")}
        | {"seed": ctx.obj["seed"]},
        time.time() - t0,
    )
    click.echo(f"loglik={res.loglik:.6f} converged={res.converged} persistence={res.persistence:.4f}")


@main.command("mc")
@click.option("--dgp", default="DGP2", show_default=True)
@click.option("--t", "--T", "n_obs", default=3000, show_default=True)
@click.option("--reps", default=500, show_default=True)
@click.option("--with-covariance", is_flag=True, default=False)
@click.option("--full", is_flag=True, default=False, help="Allow paper-scale replication counts (slow).")
@click.option("--out", default="mc", show_default=True)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.pass_context
@_guarded
def cmd_mc(ctx, dgp, n_obs, reps, with_covariance, full, out, config):
    """Replication study for one DGP; writes summary, raw estimates, manifest."""
    _apply_config(ctx, config)
    p = ctx.params
    if int(p["reps"]) > 2000 and not p["full"]:
        raise InvalidConfigError(
            "more than 2000 replications takes hours; pass --full to confirm"
        )
    if int(p["reps"]) > 2000:
        click.echo("warning: paper-scale replication count; expect a long runtime", err=True)
    t0 = time.time()
    spec = make_dgp(p["dgp"], int(p["n_obs"]), int(p["reps"]), seed=ctx.obj["seed"])
    result = run_mc(spec, with_covariance=p["with_covariance"], n_jobs=ctx.obj["threads"])
    outdir = ctx.obj["output_dir"]
    if ctx.obj["fmt"] == "json":
        aio.write_json(
            outdir / f"{p['out']}_summary.json",
            {
                "means": result.summary.means,
                "sds": result.summary.sds,
                "discard_rate": result.summary.discard_rate,
                "reps_used": result.summary.reps_used,
            },
        )
    else:
        aio.write_summary_csv(outdir / f"{p['out']}_summary.csv", result.summary.means, result.summary.sds)
    aio.write_matrix_csv(
        outdir / f"{p['out']}_raw.csv",
        result.columns + ["loglik", "converged", "gamma_stuck"],
        (
            list(result.raw[r]) + [result.logliks[r], int(result.converged[r]), int(result.gamma_stuck[r])]
            for r in range(result.raw.shape[0])
        ),
    )
    std = standardized_estimates(result)
    aio.write_matrix_csv(
        outdir / f"{p['out']}_standardized.csv",
        std.columns,
        (list(std.values[r]) for r in range(std.values.shape[0])),
    )
    aio.write_manifest(
        outdir / f"{p['out']}_manifest.json",
        "mc",
        {
            "dgp": p["dgp"],
            "theta_true": _theta_dict(spec.theta_true),
            "n_obs": int(p["n_obs"]),
            "reps": int(p["reps"]),
            "seed": ctx.obj["seed"],
            "with_covariance": p["with_covariance"],
            "discard_rate": result.summary.discard_rate,
        },
        time.time() - t0,
    )
    click.echo(
        f"{p['dgp']} T={p['n_obs']} reps={p['reps']}: discard_rate={result.summary.discard_rate:.4f}"
    )


@main.command("lm-test")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--column", default="x", show_default=True)
@click.option("--kind", default="return", type=click.Choice(["return", "price"]), show_default=True)
@click.option("--null", "null_model", default="garch", type=click.Choice(["garch", "atv"]), show_default=True)
@click.option("--order", default=3, show_default=True)
@click.option("--out", default="lm", show_default=True)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.pass_context
@_guarded
def cmd_lm(ctx, input_path, column, kind, null_model, order, out, config):
    """Intercept-constancy test against a smooth-transition alternative."""
    _apply_config(ctx, config)
    p = ctx.params
    t0 = time.time()
    x = _read_returns(p["input_path"], p["column"], p["kind"])
    n_tr = 0 if p["null_model"] == "garch" else 1
    spec = ModelSpec(p=1, q=1, n_transitions=n_tr, k_orders=(1,) * n_tr)
    res = lm_constancy_test(x, spec, taylor_order=int(p["order"]), fit_options=FitOptions(seed=ctx.obj["seed"], compute_covariance=False))
    outdir = ctx.obj["output_dir"]
    aio.write_json(
        outdir / f"{p['out']}.json",
        {
            "statistic": res.statistic,
            "robust_statistic": res.robust_statistic,
            "p_value": res.p_value,
            "robust_p_value": res.robust_p_value,
            "df": res.df,
            "null_model": p["null_model"],
        },
    )
    aio.write_manifest(
        outdir / f"{p['out']}_manifest.json",
        "lm-test",
        {k: p[k] for k in ("input_path", "column", "kind", "null_model", "order")} | {"seed": ctx.obj["seed"]},
        time.time() - t0,
    )
    click.echo(f"LM({res.df})={res.statistic:.3f} p={res.p_value:.4f} robust={res.robust_statistic:.3f} p={res.robust_p_value:.4f}")


@main.command("moment-region")
@click.option("--m2", default=1.0, show_default=True)
@click.option("--m4", default=3.0, show_default=True)
@click.option("--resolution", default=201, show_default=True)
@click.option("--out", default="moment_region", show_default=True)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.pass_context
@_guarded
def cmd_moment_region(ctx, m2, m4, resolution, out, config):
    """Fourth-moment existence region: boundary polyline and grid CSVs."""
    _apply_config(ctx, config)
    p = ctx.params
    t0 = time.time()
    region = moment_region_grid(float(p["m2"]), float(p["m4"]), int(p["resolution"]))
    outdir = ctx.obj["output_dir"]
    aio.write_matrix_csv(
        outdir / f"{p['out']}_boundary.csv",
        ["alpha1", "beta1"],
        (list(row) for row in region.boundary),
    )
    aio.write_matrix_csv(
        outdir / f"{p['out']}_grid.csv",
        ["alpha1", "beta1", "inside"],
        (
            [region.alpha_grid[i], region.beta_grid[j], int(region.inside[i, j])]
            for i in range(region.alpha_grid.shape[0])
            for j in range(region.beta_grid.shape[0])
        ),
    )
    aio.write_manifest(
        outdir / f"{p['out']}_manifest.json",
        "moment-region",
        {"m2": float(p["m2"]), "m4": float(p["m4"]), "resolution": int(p["resolution"])},
        time.time() - t0,
    )
    click.echo(f"wrote {outdir / (p['out'] + '_boundary.csv')}")


@main.command("transition-curve")
@click.option("--transition", "transitions", multiple=True, required=True, help="Repeatable: gamma=20,c=0.25,weight=1.")
@click.option("--points", default=401, show_default=True)
@click.option("--out", default="transition_curve", show_default=True)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.pass_context
@_guarded
def cmd_transition_curve(ctx, transitions, points, out, config):
    """Logistic transition curves and their weighted sum on a u grid."""
    _apply_config(ctx, config)
    p = ctx.params
    t0 = time.time()
    specs = [_parse_transition(s) for s in p["transitions"]]
    trs = [TransitionParams(gamma=s["gamma"], locations=s["c"], weight=s["weight"]) for s in specs]
    u = np.linspace(0.0, 1.0, int(p["points"]))
    curves = [logistic_g(u, tr) for tr in trs]
    combined = sum(tr.weight * c for tr, c in zip(trs, curves))
    outdir = ctx.obj["output_dir"]
    header = ["u", "g"] + [f"G{i+1}" for i in range(len(trs))]
    aio.write_matrix_csv(
        outdir / f"{p['out']}.csv",
        header,
        ([u[i], combined[i]] + [c[i] for c in curves] for i in range(u.shape[0])),
    )
    aio.write_manifest(
        outdir / f"{p['out']}_manifest.json",
        "transition-curve",
        {"transitions": specs, "points": int(p["points"])},
        time.time() - t0,
    )
    click.echo(f"wrote {outdir / (p['out'] + '.csv')}")


@main.command("empirical")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--column", default="price", show_default=True)
@click.option("--kind", default="price", type=click.Choice(["return", "price"]), show_default=True)
@click.option("--order", default=3, show_default=True)
@click.option("--truncation-lag", default=200, show_default=True)
@click.option("--out", default="report", show_default=True)
@click.option("--config", default=None, type=click.Path(exists=True))
@click.pass_context
@_guarded
def cmd_empirical(ctx, input_path, column, kind, order, truncation_lag, out, config):
    """Full workflow: stats, nested fits, test sequence; JSON + text report."""
    _apply_config(ctx, config)
    p = ctx.params
    t0 = time.time()
    if p["kind"] == "price":
        data = aio.read_series_csv(p["input_path"], p["column"], require_positive=True)
        returns_given = False
    else:
        data = aio.read_series_csv(p["input_path"], p["column"])
        returns_given = True
    if data.shape[0] < 1000:
        click.echo("warning: fewer than 1000 observations; estimates may be fragile", err=True)
    report = empirical_pipeline(
        data,
        is_prices=not returns_given,
        taylor_order=int(p["order"]),
        truncation_lag=int(p["truncation_lag"]),
        seed=ctx.obj["seed"],
    )
    outdir = ctx.obj["output_dir"]
    aio.write_json(outdir / f"{p['out']}.json", report.to_json_dict())
    text = render_report(report, label=Path(p["input_path"]).stem)
    (outdir / f"{p['out']}.txt").write_text(text + "\n")
    aio.write_manifest(
        outdir / f"{p['out']}_manifest.json",
        "empirical",
        {k: p[k] for k in ("input_path", "column", "kind", "order", "truncation_lag")} | {"seed": ctx.obj["seed"]},
        time.time() - t0,
    )
    click.echo(text)


if __name__ == "__main__":
    main()
