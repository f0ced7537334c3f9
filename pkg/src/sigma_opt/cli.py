"""Command-line harness: run solves and benchmarks, generate synthetic data.

Subcommands
-----------
solve    one solver on one dataset -> trace.csv + summary.json
bench    several solvers (or a p-sweep) on one dataset -> per-solver traces,
         comparison.csv, summary.md
datagen  synthetic dataset -> libsvm file + meta.json

Configuration comes from an optional YAML file (``--config``) plus flag
overrides; every effective parameter is echoed into summary.json so a run can
be reproduced exactly. Exit codes: 0 converged, 2 budget exhausted
(max-iter/timeout), 1 error.

``SIGMA_OPT_THREADS`` caps row-parallelism (BLAS and numba thread pools);
0 or unset leaves the automatic setting.
"""

import json
import os
import sys
from pathlib import Path

import click
import yaml

TRACE_HEADER = "iter,elapsed_s,f,grad_norm,lambda_hat,lambda,step,direction,backtracks"

_SOLVE_DEFAULTS = {
    "model": "gaussian",
    "data": None,
    "label_column": "last",
    "n_features": None,
    "standardize": False,
    "m": 100,
    "N": 50,
    "p": 10,
    "gap": 100.0,
    "labels": None,
    "noise": 0.0,
    "solver": "sigma",
    "n": None,
    "mu": 0.5,
    "nu": 1e-4,
    "epsilon": 1e-8,
    "alpha": 0.25,
    "beta": 0.5,
    "zeta": 2.0,
    "check_mode": "always_coarse",
    "freeze_operator": False,
    "rows": None,
    "rank": None,
    "batch": 1,
    "sgd_t": 1.0,
    "sgd_gamma": 1e-6,
    "xi1": 0.0,
    "xi2": 0.0,
    "huber_c": 1e-2,
    "max_iter": 200,
    "max_seconds": 60.0,
    "seed": 0,
    "out": "out",
}


def _fmt(v) -> str:
    return repr(float(v))


def write_trace(path, trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in trace:
            lam = "" if r.lam is None else _fmt(r.lam)
            fh.write(
                f"{r.iter},{_fmt(r.elapsed_s)},{_fmt(r.f)},{_fmt(r.grad_norm)},"
                f"{_fmt(r.lambda_hat)},{lam},{_fmt(r.step)},{r.direction},{r.backtracks}\n"
            )


def _apply_thread_cap() -> None:
    raw = os.environ.get("SIGMA_OPT_THREADS", "").strip()
    if not raw:
        return
    try:
        cap = int(raw)
    except ValueError:
        return
    if cap <= 0:  # 0 = auto
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(cap))
    try:
        from . import kernels

        kernels.set_num_threads(cap)
    except ImportError:
        pass


def _merge_config(ctx, defaults: dict, config_path) -> dict:
    """defaults <- config file <- flags that were explicitly passed."""
    merged = dict(defaults)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        unknown = set(loaded) - set(defaults) - {"solvers", "p_list"}
        if unknown:
            raise click.ClickException(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for name, value in ctx.params.items():
        if name in ("config",):
            continue
        src = ctx.get_parameter_source(name)
        if src is not None and src.name == "COMMANDLINE" and name in merged:
            merged[name] = value
    return merged


def _build_dataset(p: dict):
    """Returns (Dataset, x_true or None, data_meta dict)."""
    from . import data as data_mod
    from .objectives import Dataset
    from .rng import RngState

    src = p["data"]
    if src is None:
        raise click.ClickException("--data is required (a file path or 'synthetic')")
    if src == "synthetic":
        label_kind = p["labels"] or {"gaussian": "gaussian", "poisson": "poisson", "logistic": "logistic"}[p["model"]]
        spec = data_mod.SvdGapSpec(m=p["m"], N=p["N"], p=p["p"], gap=p["gap"], seed=p["seed"])
        lspec = data_mod.LabelSpec(kind=label_kind, sigma_noise=p["noise"], seed=p["seed"] + 1)
        A = data_mod.svd_gap_matrix(spec, RngState(spec.seed))
        b, x_true = data_mod.synth_labels(A, lspec, RngState(lspec.seed))
        meta = {"source": "synthetic", "m": spec.m, "N": spec.N, "p": spec.p,
                "gap": spec.gap, "labels": label_kind, "noise": p["noise"]}
        ds = Dataset(A, b)
    else:
        path = Path(src)
        if not path.exists():
            raise click.ClickException(f"data file not found: {path}")
        if path.suffix.lower() == ".csv":
            ds = data_mod.load_csv(path, label_column=p["label_column"])
        else:
            ds = data_mod.load_libsvm(path, n_features=p["n_features"])
        x_true, meta = None, {"source": str(path), "m": ds.m, "N": ds.N}
    if p["standardize"]:
        ds, _ = data_mod.standardize(ds)
        meta["standardize"] = True
    return ds, x_true, meta


def _build_model(p: dict, ds):
    from .objectives import Regularization, make_objective

    reg = Regularization(xi2=p["xi2"], xi1=p["xi1"], c=p["huber_c"])
    return make_objective(p["model"], ds, reg)


def _resolve_x0(model, x_true):
    from .errors import NoFeasibleStart
    from .objectives import feasible_start, positive_margin_start

    try:
        return feasible_start(model)
    except NoFeasibleStart:
        if x_true is not None and model.domain_status(x_true).feasible:
            return x_true
        return positive_margin_start(model.dataset)


def _run_one(p: dict, model, x0, name: str, seed: int):
    """Dispatch to the multilevel solver or a baseline; returns SolveResult."""
    from .baselines import BaselineConfig, baseline_solve
    from .solver import SigmaConfig, sigma_solve

    if name == "sigma":
        n = p["n"] if p["n"] is not None else max(1, model.dataset.N // 2)
        cfg = SigmaConfig(
            n=n, mu=p["mu"], nu=p["nu"], epsilon=p["epsilon"], alpha=p["alpha"],
            beta=p["beta"], zeta=p["zeta"], check_mode=p["check_mode"],
            row_sample=p["rows"], max_iter=p["max_iter"], max_seconds=p["max_seconds"],
            seed=seed, freeze_operator=p["freeze_operator"],
        )
        return sigma_solve(model, x0, cfg), cfg
    cfg = BaselineConfig(
        method=name, sgd_t=p["sgd_t"], sgd_gamma=p["sgd_gamma"], batch=p["batch"],
        rows=p["rows"], rank=p["rank"], alpha=p["alpha"], beta=p["beta"],
        epsilon=p["epsilon"], zeta=p["zeta"], max_iter=p["max_iter"],
        max_seconds=p["max_seconds"], seed=seed,
    )
    return baseline_solve(model, x0, cfg), cfg


def _summary_dict(result, model, effective: dict, cfg) -> dict:
    import dataclasses

    import numpy as np

    last = result.trace[-1] if result.trace else None
    out = {
        "status": result.status,
        "iterations": result.iterations,
        "message": result.message,
        "final_f": None if last is None else last.f,
        "final_grad_norm": None if last is None else last.grad_norm,
        "final_decrement_sq": (
            None if not np.isfinite(result.final_decrement_sq) else result.final_decrement_sq
        ),
        "elapsed_s": None if last is None else last.elapsed_s,
        "config": {k: (v if not isinstance(v, Path) else str(v)) for k, v in effective.items()},
        "solver_config": dataclasses.asdict(cfg),
    }
    if model.kind == "poisson" and last is not None:
        out["final_grad_norm_unscaled"] = last.grad_norm / model.scale
        out["poisson_scale"] = model.scale
    return out


_STATUS_EXIT = {"converged": 0, "max_iter": 2, "timeout": 2, "error": 1}


def _add_solve_options(fn):
    opts = [
        click.option("--config", type=click.Path(exists=True), default=None,
                     help="YAML config; flags override it."),
        click.option("--model", type=click.Choice(["gaussian", "poisson", "logistic"]),
                     default=_SOLVE_DEFAULTS["model"]),
        click.option("--data", default=None, help="'synthetic' or a libsvm/csv path."),
        click.option("--label-column", "label_column", default="last"),
        click.option("--n-features", "n_features", type=int, default=None),
        click.option("--standardize", is_flag=True, default=False),
        click.option("--m", type=int, default=_SOLVE_DEFAULTS["m"]),
        click.option("--N", "N", type=int, default=_SOLVE_DEFAULTS["N"]),
        click.option("--p", type=int, default=_SOLVE_DEFAULTS["p"]),
        click.option("--gap", type=float, default=_SOLVE_DEFAULTS["gap"]),
        click.option("--labels", type=click.Choice(["gaussian", "poisson", "logistic"]),
                     default=None, help="Synthetic label kind (defaults to the model kind)."),
        click.option("--noise", type=float, default=0.0),
        click.option("--n", type=int, default=None, help="Coarse dimension (default N/2)."),
        click.option("--mu", type=float, default=_SOLVE_DEFAULTS["mu"]),
        click.option("--nu", type=float, default=_SOLVE_DEFAULTS["nu"]),
        click.option("--epsilon", type=float, default=_SOLVE_DEFAULTS["epsilon"]),
        click.option("--alpha", type=float, default=_SOLVE_DEFAULTS["alpha"]),
        click.option("--beta", type=float, default=_SOLVE_DEFAULTS["beta"]),
        click.option("--zeta", type=float, default=_SOLVE_DEFAULTS["zeta"]),
        click.option("--check-mode", "check_mode",
                     type=click.Choice(["full_decrement", "euclidean_proxy", "nu_only", "always_coarse"]),
                     default=_SOLVE_DEFAULTS["check_mode"]),
        click.option("--freeze-operator", "freeze_operator", is_flag=True, default=False),
        click.option("--rows", type=int, default=None,
                     help="Row-sample size (sub-sampled solver / subnewton / newsamp)."),
        click.option("--rank", type=int, default=None, help="NewSamp truncation rank."),
        click.option("--batch", type=int, default=1),
        click.option("--sgd-t", "sgd_t", type=float, default=1.0),
        click.option("--sgd-gamma", "sgd_gamma", type=float, default=1e-6),
        click.option("--xi1", type=float, default=0.0),
        click.option("--xi2", type=float, default=0.0),
        click.option("--huber-c", "huber_c", type=float, default=1e-2),
        click.option("--max-iter", "max_iter", type=int, default=_SOLVE_DEFAULTS["max_iter"]),
        click.option("--max-seconds", "max_seconds", type=float, default=_SOLVE_DEFAULTS["max_seconds"]),
        click.option("--seed", type=int, default=0),
        click.option("--out", type=click.Path(), default="out"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def cli():
    """Multilevel randomized Newton solver and benchmark harness."""


@cli.command()
@_add_solve_options
@click.option("--solver", type=click.Choice(["sigma", "gd", "sgd", "newton", "subnewton", "newsamp"]),
              default="sigma")
@click.pass_context
def solve(ctx, config, **_kwargs):
    """Run one solver on one dataset; writes trace.csv and summary.json."""
    p = _merge_config(ctx, {**_SOLVE_DEFAULTS, "solver": "sigma"}, config)
    try:
        ds, x_true, data_meta = _build_dataset(p)
        model = _build_model(p, ds)
        x0 = _resolve_x0(model, x_true)
        result, cfg = _run_one(p, model, x0, p["solver"], p["seed"])
    except click.ClickException:
        raise
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_trace(out / "trace.csv", result.trace)
    summary = _summary_dict(result, model, {**p, "data_meta": data_meta}, cfg)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    click.echo(f"{p['solver']}: {result.status} after {result.iterations} iterations "
               f"-> {out / 'trace.csv'}")
    sys.exit(_STATUS_EXIT[result.status])


@cli.command()
@_add_solve_options
@click.option("--solvers", default="sigma,gd,newton",
              help="Comma-separated solver list (ignored when --p-list is given).")
@click.option("--p-list", "p_list", default=None,
              help="Comma-separated gap positions as fractions of N; runs the "
                   "multilevel solver once per value.")
@click.option("--gnuplot", is_flag=True, default=False, help="Also emit plot.gp.")
@click.pass_context
def bench(ctx, config, solvers, p_list, gnuplot, **_kwargs):
    """Compare solvers on one dataset; writes one trace per solver plus
    comparison.csv and summary.md."""
    defaults = {**_SOLVE_DEFAULTS, "solvers": solvers, "p_list": p_list}
    p = _merge_config(ctx, defaults, config)
    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)

    def _as_list(value, cast):
        if isinstance(value, (list, tuple)):
            return [cast(v) for v in value]
        return [cast(tok.strip()) for tok in str(value).split(",") if tok.strip()]

    entries = []  # (name, params dict)
    if p.get("p_list"):
        for frac in _as_list(p["p_list"], float):
            gap_pos = max(1, min(p["N"], round(frac * p["N"])))
            entries.append((f"sigma[p={frac:g}N]", {**p, "p": gap_pos, "solver": "sigma"}))
    else:
        for name in _as_list(p["solvers"], str):
            entries.append((name, {**p, "solver": name}))

    rows, summaries, failures = [], [], 0
    for idx, (name, ep) in enumerate(entries):
        seed = ep["seed"] + idx
        try:
            ds, x_true, _ = _build_dataset(ep)
            model = _build_model(ep, ds)
            x0 = _resolve_x0(model, x_true)
            result, _cfg = _run_one(ep, model, x0, ep["solver"], seed)
        except Exception as exc:
            failures += 1
            summaries.append({"solver": name, "status": "error", "iterations": 0,
                              "final_f": "", "final_grad_norm": "", "elapsed_s": "",
                              "message": str(exc)})
            continue
        safe = name.replace("/", "_").replace("[", "_").replace("]", "").replace("=", "")
        write_trace(out / f"trace_{safe}.csv", result.trace)
        last = result.trace[-1]
        summaries.append({"solver": name, "status": result.status,
                          "iterations": result.iterations, "final_f": last.f,
                          "final_grad_norm": last.grad_norm, "elapsed_s": last.elapsed_s,
                          "message": result.message, "trace": f"trace_{safe}.csv"})
        for r in result.trace:
            rows.append((name, r.iter, r.elapsed_s, r.grad_norm, r.f))

    with open(out / "comparison.csv", "w", encoding="utf-8") as fh:
        fh.write("solver,iter,elapsed_s,grad_norm,f\n")
        for name, it, el, gn, f in rows:
            fh.write(f"{name},{it},{_fmt(el)},{_fmt(gn)},{_fmt(f)}\n")

    lines = ["| solver | status | iterations | final f | final grad norm | elapsed s |",
             "|---|---|---|---|---|---|"]
    for s in summaries:
        lines.append(
            f"| {s['solver']} | {s['status']} | {s['iterations']} | {s['final_f']} "
            f"| {s['final_grad_norm']} | {s['elapsed_s']} |"
        )
    (out / "summary.md").write_text("\n".join(lines) + "\n")
    (out / "bench_summary.json").write_text(json.dumps(summaries, indent=2) + "\n")

    if gnuplot:
        traces = [s for s in summaries if "trace" in s]
        plot = ["set datafile separator ','", "set logscale y",
                "set xlabel 'seconds'", "set ylabel 'gradient norm'", "set key outside"]
        series = ", ".join(
            f"'{s['trace']}' using 2:4 skip 1 with linespoints title '{s['solver']}'"
            for s in traces
        )
        plot.append(f"plot {series}")
        (out / "plot.gp").write_text("\n".join(plot) + "\n")

    click.echo("\n".join(f"{s['solver']}: {s['status']}" for s in summaries))
    sys.exit(1 if entries and failures == len(entries) else 0)


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--N", "N", type=int, required=True)
@click.option("--p", type=int, required=True)
@click.option("--gap", type=float, default=100.0)
@click.option("--labels", type=click.Choice(["gaussian", "poisson", "logistic"]), required=True)
@click.option("--noise", type=float, default=0.0)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default="dataset")
def datagen(m, N, p, gap, labels, noise, seed, out, **_kwargs):
    """Generate a synthetic dataset; writes <out>/data.libsvm and meta.json."""
    from . import data as data_mod
    from .objectives import Dataset
    from .rng import RngState

    try:
        spec = data_mod.SvdGapSpec(m=m, N=N, p=p, gap=gap, seed=seed)
        lspec = data_mod.LabelSpec(kind=labels, sigma_noise=noise, seed=seed + 1)
        A = data_mod.svd_gap_matrix(spec, RngState(spec.seed))
        b, x_true = data_mod.synth_labels(A, lspec, RngState(lspec.seed))
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    data_mod.write_libsvm(Dataset(A, b), out / "data.libsvm")
    meta = data_mod.dataset_meta(A, spec)
    meta["labels"] = labels
    meta["noise"] = noise
    meta["x_true"] = x_true.tolist()
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    click.echo(f"wrote {out / 'data.libsvm'} ({m} x {N}) and meta.json")
    sys.exit(0)


def main():
    _apply_thread_cap()
    cli(prog_name="sigma-opt")


if __name__ == "__main__":
    main()
