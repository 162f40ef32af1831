"""Command-line interface: generate | estimate | bench | diagnose | ranks.

Data files are numpy ``.npz`` archives with keys ``p, q, r`` plus any of
``samples`` (n x d observations), ``sigma`` (d x d covariance), and the
ground-truth factor stacks ``a, b, c``. Spectra exports are CSV rows
``mode,index,value`` with mode in {sigma, m1, m3}.
"""

from __future__ import annotations

import json
import sys
import time

import click
import numpy as np

from .bench import load_bench_config, run_benchmark
from .diagnostics import effective_dims, recovery_condition_report
from .estimators import EstimatorSpec, estimate_covariance, sample_covariance, select_ranks
from .rearrange import FactorShape, rearrange
from .synthgen import SpectrumDecay, gen_ground_truth, sample_observations, true_covariance
from .tensor import unfold


def _load_npz(path):
    try:
        return np.load(path)
    except Exception as exc:
        raise click.ClickException(f"cannot read {path}: {exc}") from exc


def _shape_from(data) -> FactorShape:
    try:
        return FactorShape(int(data["p"]), int(data["q"]), int(data["r"]))
    except KeyError as exc:
        raise click.ClickException(f"data file lacks shape key {exc}") from exc


def _covariance_from(data) -> np.ndarray:
    if "sigma" in data:
        return np.asarray(data["sigma"], dtype=float)
    if "samples" in data:
        return sample_covariance(np.asarray(data["samples"], dtype=float))
    raise click.ClickException("data file has neither 'sigma' nor 'samples'")


@click.group()
def main():
    """Structured covariance estimation toolkit."""


@main.command()
@click.option("--p", type=int, required=True)
@click.option("--q", type=int, required=True)
@click.option("--r", type=int, required=True)
@click.option("--rank1", type=int, required=True, help="number of mode-1 factors")
@click.option("--rank3", type=int, required=True, help="number of mode-3 factors")
@click.option("--n", type=int, required=True, help="number of observations")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--decay", default="gaussian", show_default=True,
              type=click.Choice(["gaussian", "inverse_quadratic", "exponential", "linear"]))
@click.option("--sampler", default="spectral", show_default=True,
              type=click.Choice(["factor", "spectral"]))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def generate(p, q, r, rank1, rank3, n, seed, decay, sampler, out):
    """Draw a ground truth and a sample, write them to an npz file."""
    shape = FactorShape(p, q, r)
    ss = np.random.SeedSequence(seed)
    gt_seed, sample_seed = ss.spawn(2)
    gt = gen_ground_truth(shape, rank1, rank3, decay=SpectrumDecay(kind=decay),
                          seed=gt_seed)
    x = sample_observations(gt, n, seed=sample_seed, sampler=sampler)
    np.savez_compressed(
        out, p=p, q=q, r=r, a=gt.a, b=gt.b, c=gt.c,
        sigma=true_covariance(gt), samples=x, seed=seed,
    )
    click.echo(f"wrote {out}: {n} observations of dimension {shape.d}")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--method", required=True,
              type=click.Choice(["sample", "hardtth", "tt_hosvd", "tucker",
                                 "tucker_hooi", "prls"]))
@click.option("--rank1", type=int, default=None)
@click.option("--rank3", type=int, default=None)
@click.option("--rank2", type=int, default=None,
              help="middle Tucker rank (defaults to rank1*rank3)")
@click.option("--iters", type=int, default=10, show_default=True)
@click.option("--lambda1", type=float, default=None)
@click.option("--lambda2", type=float, default=None)
@click.option("--svd-method", default="exact", show_default=True,
              type=click.Choice(["exact", "randomized"]))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--psd/--no-psd", default=False, show_default=True,
              help="project the estimate onto the PSD cone")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write the estimate (npz with key 'estimate')")
def estimate(data, method, rank1, rank3, rank2, iters, lambda1, lambda2,
             svd_method, seed, psd, out):
    """Run one estimator on a sample file; print metrics as JSON."""
    blob = _load_npz(data)
    shape = _shape_from(blob)
    if "samples" not in blob:
        raise click.ClickException("estimate needs a 'samples' array")
    x = np.asarray(blob["samples"], dtype=float)
    if method in ("hardtth", "tt_hosvd") and (rank1 is None or rank3 is None):
        raise click.ClickException(f"{method} needs --rank1 and --rank3")
    if method in ("tucker", "tucker_hooi"):
        if rank1 is None or rank3 is None:
            raise click.ClickException(f"{method} needs --rank1 and --rank3")
        ranks = (rank1, rank2 if rank2 is not None else rank1 * rank3, rank3)
    elif method in ("hardtth", "tt_hosvd"):
        ranks = (rank1, rank3)
    else:
        ranks = ()
    if method == "prls" and (lambda1 is None or lambda2 is None):
        raise click.ClickException("prls needs --lambda1 and --lambda2")
    spec = EstimatorSpec(
        method=method, ranks=ranks, iters=iters, lambda1=lambda1,
        lambda2=lambda2, svd_method=svd_method, seed=seed, psd_projection=psd,
    )
    t0 = time.perf_counter()
    est = estimate_covariance(x, shape, spec)
    elapsed = time.perf_counter() - t0
    metrics = {"method": method, "n": int(x.shape[0]), "d": int(shape.d),
               "time_seconds": elapsed}
    if "sigma" in blob:
        sigma = np.asarray(blob["sigma"], dtype=float)
        metrics["rel_error"] = float(
            np.linalg.norm(est - sigma) / np.linalg.norm(sigma)
        )
    if out is not None:
        np.savez_compressed(out, estimate=est, p=shape.p, q=shape.q, r=shape.r)
        metrics["out"] = out
    click.echo(json.dumps(metrics, indent=2))


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "csv_path", required=True, type=click.Path(dir_okay=False))
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None,
              help="aggregate JSON path (default: --out with .json suffix)")
@click.option("--workers", type=int, default=None,
              help="worker threads (overrides config and TTCOV_WORKERS)")
def bench(config_path, csv_path, json_path, workers):
    """Run the benchmark described by a config file."""
    from dataclasses import replace as dc_replace

    try:
        config = load_bench_config(config_path)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    if workers is not None:
        config = dc_replace(config, workers=workers)
    if json_path is None:
        stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
        json_path = stem + ".json"
    records, aggregates = run_benchmark(config, csv_path=csv_path,
                                        json_path=json_path)
    click.echo(f"wrote {len(records)} records to {csv_path}")
    for cell in aggregates:
        label = f"n={cell['n']}" if cell["n"] is not None else f"sigma={cell['sigma']}"
        click.echo(
            f"{cell['method']:12s} {label:12s} "
            f"{cell['mean']:.4f} +- {cell['std']:.4f}  "
            f"({cell['mean_time']:.3f}s/trial)"
        )


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--n", "n_override", type=int, default=None,
              help="sample size for the condition check (default: rows of 'samples')")
@click.option("--rank1", type=int, required=True)
@click.option("--rank3", type=int, required=True)
@click.option("--omega", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--iters", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write the full report as JSON")
@click.option("--spectra", type=click.Path(dir_okay=False), default=None,
              help="export sigma/m1/m3 spectra as CSV (mode,index,value)")
def diagnose(data, n_override, rank1, rank3, omega, delta, iters, out, spectra):
    """Effective dimensions and recovery-condition report for a covariance."""
    blob = _load_npz(data)
    shape = _shape_from(blob)
    sigma = _covariance_from(blob)
    n = n_override
    if n is None:
        n = int(blob["samples"].shape[0]) if "samples" in blob else 1
    try:
        report = recovery_condition_report(
            sigma, shape, n=n, rank1=rank1, rank3=rank3, omega=omega,
            delta=delta, iters=iters,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    payload = {
        "effective_dims": list(report.effective.as_tuple()),
        "sigma_norm": report.sigma_norm,
        "singular1": report.singular1,
        "singular3": report.singular3,
        "condition1": report.condition1,
        "condition2": report.condition2,
        "leading_variance": report.leading_variance,
        "sample_gate": report.sample_gate,
        "sample_gate_passed": report.sample_gate_passed,
        "ancillary": report.ancillary,
        "n": n,
    }
    if spectra is not None:
        t = rearrange(sigma, shape)
        lines = ["mode,index,value"]
        for mode, vals in (
            ("sigma", np.linalg.svd(sigma, compute_uv=False)),
            ("m1", np.linalg.svd(unfold(t, 1), compute_uv=False)),
            ("m3", np.linalg.svd(unfold(t, 3), compute_uv=False)),
        ):
            lines += [f"{mode},{i + 1},{format(v, '.17g')}"
                      for i, v in enumerate(vals)]
        with open(spectra, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        payload["spectra"] = spectra
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    click.echo(json.dumps(payload, indent=2))


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--omega", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.05, show_default=True)
@click.option("--c-prime", type=float, required=True)
@click.option("--n", "n_override", type=int, default=None)
def ranks(data, omega, delta, c_prime, n_override):
    """Threshold-based matricization-rank selection on a sample file."""
    blob = _load_npz(data)
    shape = _shape_from(blob)
    sigma = _covariance_from(blob)
    n = n_override
    if n is None:
        if "samples" not in blob:
            raise click.ClickException("--n is required when no samples are stored")
        n = int(blob["samples"].shape[0])
    try:
        rank1, rank3 = select_ranks(sigma, shape, n=n, omega=omega,
                                    delta=delta, c_prime=c_prime)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps({"rank1": rank1, "rank3": rank3, "n": n}))


if __name__ == "__main__":
    sys.exit(main())
