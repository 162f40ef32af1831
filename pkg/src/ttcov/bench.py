"""Seeded multi-trial benchmark harness: config parsing, paired-trial
execution, metric aggregation, and CSV/JSON persistence.

Per-trial CSV schema (pinned; empty fields where a metric does not apply)::

    method,n,sigma,trial,rel_error,time_seconds,sin_theta_u0,sin_theta_uT,
    sin_theta_v0,sin_theta_vT,seed,data_hash

Floats are written with 17 significant digits. The aggregate JSON is a list
of cells ``{method, n, sigma, mean, std, count, mean_time}`` where ``std`` is
the sample standard deviation (ddof=1, 0.0 for a single trial).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import (
    METHODS,
    EstimatorSpec,
    estimate_covariance,
    hardtth,
    prls,
    tt_hosvd,
    tucker_hooi,
    tune_prls,
)
from .linalg import sin_theta, truncated_svd
from .rearrange import FactorShape, rearrange
from .synthgen import (
    SpectrumDecay,
    gen_ground_truth,
    gen_tensor_instance,
    sample_observations,
    true_covariance,
)

__all__ = [
    "BenchConfig",
    "TrialRecord",
    "parse_bench_config",
    "load_bench_config",
    "run_benchmark",
    "aggregate_records",
    "write_csv",
    "write_json",
    "read_csv_records",
    "CSV_HEADER",
]

CSV_HEADER = (
    "method,n,sigma,trial,rel_error,time_seconds,sin_theta_u0,sin_theta_uT,"
    "sin_theta_v0,sin_theta_vT,seed,data_hash"
)

SCHEMA_VERSION = 1
_TT_METHODS = ("hardtth", "tt_hosvd")
_TUCKER_METHODS = ("tucker", "tucker_hooi")


class ConfigError(ValueError):
    """Malformed or inconsistent benchmark configuration."""


@dataclass(frozen=True)
class BenchConfig:
    shape: FactorShape
    rank1: int
    rank3: int
    methods: tuple[str, ...]
    trials: int
    master_seed: int
    mode: str = "covariance"
    sample_sizes: tuple[int, ...] = ()
    noise_sigmas: tuple[float, ...] = ()
    iters: int = 10
    svd_method: str = "exact"
    oversample: int = 10
    power_iters: int = 2
    sampler: str = "spectral"
    sin_theta: bool = True
    diagnostics: bool = False
    psd_projection: bool = False
    prls_grid_points: int = 20
    tucker_baselines: bool = False
    workers: int = 0
    decay: SpectrumDecay = field(default_factory=SpectrumDecay)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.mode not in ("covariance", "tensor"):
            raise ConfigError(f"mode must be covariance or tensor, got {self.mode!r}")
        if self.mode == "covariance" and not self.sample_sizes:
            raise ConfigError("covariance mode needs sample_sizes")
        if self.mode == "tensor" and not self.noise_sigmas:
            raise ConfigError("tensor mode needs noise_sigmas")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
            if m in _TUCKER_METHODS and not self.tucker_baselines:
                raise ConfigError(
                    f"method {m!r} requires tucker_baselines = true (opt-in)"
                )
        if self.mode == "tensor" and "sample" in self.methods:
            raise ConfigError("method 'sample' does not apply in tensor mode")


_KEY_TYPES = {
    "schema_version": int,
    "mode": str,
    "p": int,
    "q": int,
    "r": int,
    "rank1": int,
    "rank3": int,
    "methods": "str_list",
    "trials": int,
    "master_seed": int,
    "sample_sizes": "int_list",
    "noise_sigmas": "float_list",
    "iters": int,
    "svd_method": str,
    "oversample": int,
    "power_iters": int,
    "sampler": str,
    "sin_theta": bool,
    "diagnostics": bool,
    "psd_projection": bool,
    "prls_grid_points": int,
    "tucker_baselines": bool,
    "workers": int,
    "decay": str,
    "decay_scale": float,
    "decay_rate": float,
}
_REQUIRED = ("schema_version", "p", "q", "r", "rank1", "rank3", "methods",
             "trials", "master_seed")


def _parse_value(key: str, raw: str):
    kind = _KEY_TYPES[key]
    raw = raw.strip()
    if kind == bool:
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if kind in (int, float):
        try:
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    if kind == str:
        return raw
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if kind == "str_list":
        return tuple(items)
    cast = int if kind == "int_list" else float
    try:
        return tuple(cast(s) for s in items)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_bench_config(text: str) -> BenchConfig:
    """Parse the key-value benchmark config format.

    One ``key = value`` pair per line, ``#`` comments, comma-separated lists.
    Unknown keys are errors; ``schema_version`` is mandatory.
    """
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEY_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    if values["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {values['schema_version']} "
            f"(expected {SCHEMA_VERSION})"
        )
    decay = SpectrumDecay(
        kind=values.pop("decay", "gaussian"),
        scale=values.pop("decay_scale", 1.0),
        rate=values.pop("decay_rate", 1.0),
    )
    shape = FactorShape(values.pop("p"), values.pop("q"), values.pop("r"))
    values.pop("schema_version")
    values.setdefault("workers", int(os.environ.get("TTCOV_WORKERS", "0")))
    return BenchConfig(shape=shape, decay=decay, **values)


def load_bench_config(path) -> BenchConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_bench_config(fh.read())


@dataclass(frozen=True)
class TrialRecord:
    """One estimator run on one generated dataset."""

    method: str
    n: int | None
    sigma: float | None
    trial: int
    rel_error: float
    time_seconds: float
    sin_theta_u0: float | None
    sin_theta_uT: float | None
    sin_theta_v0: float | None
    sin_theta_vT: float | None
    seed: int
    data_hash: str


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _record_row(rec: TrialRecord) -> str:
    return ",".join(
        _fmt(v)
        for v in (
            rec.method, rec.n, rec.sigma, rec.trial, rec.rel_error,
            rec.time_seconds, rec.sin_theta_u0, rec.sin_theta_uT,
            rec.sin_theta_v0, rec.sin_theta_vT, rec.seed, rec.data_hash,
        )
    )


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(records: list[TrialRecord], path) -> None:
    lines = [CSV_HEADER] + [_record_row(r) for r in records]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(aggregates: list[dict], path) -> None:
    _atomic_write(path, json.dumps(aggregates, indent=2) + "\n")


def read_csv_records(path) -> list[TrialRecord]:
    """Read a per-trial CSV written by :func:`write_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        records = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            f = line.split(",")
            opt_f = lambda s: float(s) if s else None
            records.append(TrialRecord(
                method=f[0],
                n=int(f[1]) if f[1] else None,
                sigma=float(f[2]) if f[2] else None,
                trial=int(f[3]),
                rel_error=float(f[4]),
                time_seconds=float(f[5]),
                sin_theta_u0=opt_f(f[6]),
                sin_theta_uT=opt_f(f[7]),
                sin_theta_v0=opt_f(f[8]),
                sin_theta_vT=opt_f(f[9]),
                seed=int(f[10]),
                data_hash=f[11],
            ))
    return records


def aggregate_records(records: list[TrialRecord]) -> list[dict]:
    """Per-(method, n, sigma) mean / sample std / count / mean wall time."""
    cells: dict = {}
    for rec in records:
        cells.setdefault((rec.method, rec.n, rec.sigma), []).append(rec)
    out = []
    for (method, n, sigma), recs in sorted(
        cells.items(),
        key=lambda kv: (kv[0][1] if kv[0][1] is not None else -1,
                        kv[0][2] if kv[0][2] is not None else -1.0,
                        kv[0][0]),
    ):
        errs = np.array([r.rel_error for r in recs])
        times = np.array([r.time_seconds for r in recs])
        out.append({
            "method": method,
            "n": n,
            "sigma": sigma,
            "mean": float(errs.mean()),
            "std": float(errs.std(ddof=1)) if errs.size > 1 else 0.0,
            "count": int(errs.size),
            "mean_time": float(times.mean()),
        })
    return out


def _trial_seed(master_seed: int, cell_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(cell_index), int(trial)])


def _estimator_spec(config: BenchConfig, method: str, seed: int) -> EstimatorSpec:
    if method in _TT_METHODS:
        iters = config.iters if method == "hardtth" else 0
        return EstimatorSpec(
            method=method, ranks=(config.rank1, config.rank3), iters=iters,
            svd_method=config.svd_method, oversample=config.oversample,
            power_iters=config.power_iters, seed=seed,
            psd_projection=config.psd_projection,
        )
    if method in _TUCKER_METHODS:
        ranks = (config.rank1, config.rank1 * config.rank3, config.rank3)
        return EstimatorSpec(
            method=method, ranks=ranks,
            iters=config.iters if method == "tucker_hooi" else 0,
            psd_projection=config.psd_projection,
        )
    if method == "prls":
        # placeholder thresholds; replaced by the tuned values per trial
        return EstimatorSpec(method=method, lambda1=0.0, lambda2=0.0,
                             psd_projection=config.psd_projection)
    return EstimatorSpec(method=method, psd_projection=config.psd_projection)


def _covariance_trial(config: BenchConfig, cell_index: int, n: int,
                      trial: int) -> list[TrialRecord]:
    ss = _trial_seed(config.master_seed, cell_index, trial)
    gt_seed, sample_seed, est_seed = ss.spawn(3)
    seed_repr = int(ss.generate_state(1)[0])
    gt = gen_ground_truth(config.shape, config.rank1, config.rank3,
                          decay=config.decay, seed=gt_seed)
    sigma = true_covariance(gt)
    sigma_norm = float(np.linalg.norm(sigma))
    x = sample_observations(gt, n, seed=sample_seed, sampler=config.sampler)
    data_hash = hashlib.sha1(x.tobytes()).hexdigest()[:12]

    t_true = rearrange(sigma, config.shape)
    u_star = v_star = None
    if config.sin_theta:
        from .tensor import unfold
        u_star = truncated_svd(unfold(t_true, 1), config.rank1).u
        v_star = truncated_svd(unfold(t_true, 3), config.rank3).u

    records = []
    for method in config.methods:
        spec = _estimator_spec(config, method, int(est_seed.generate_state(1)[0]))
        if method == "prls":
            from .estimators import sample_covariance
            y = rearrange(sample_covariance(x), config.shape)
            lam1, lam2, _ = tune_prls(y, t_true,
                                      grid_points=config.prls_grid_points)
            spec = replace(spec, lambda1=lam1, lambda2=lam2)
        t0 = time.perf_counter()
        est, details = estimate_covariance(x, config.shape, spec,
                                           return_details=True)
        elapsed = time.perf_counter() - t0
        rel = float(np.linalg.norm(est - sigma) / sigma_norm)
        angles = {}
        if config.sin_theta and method in _TT_METHODS:
            fact = details["factorization"]
            u0, v0 = details["initial_factors"]
            angles = {
                "sin_theta_u0": sin_theta(u_star, u0),
                "sin_theta_uT": sin_theta(u_star, fact.u),
                "sin_theta_v0": sin_theta(v_star, v0),
                "sin_theta_vT": sin_theta(v_star, fact.v),
            }
        records.append(TrialRecord(
            method=method, n=n, sigma=None, trial=trial, rel_error=rel,
            time_seconds=elapsed,
            sin_theta_u0=angles.get("sin_theta_u0"),
            sin_theta_uT=angles.get("sin_theta_uT"),
            sin_theta_v0=angles.get("sin_theta_v0"),
            sin_theta_vT=angles.get("sin_theta_vT"),
            seed=seed_repr, data_hash=data_hash,
        ))
    return records


def _tensor_trial(config: BenchConfig, cell_index: int, noise_sigma: float,
                  trial: int) -> list[TrialRecord]:
    ss = _trial_seed(config.master_seed, cell_index, trial)
    inst_seed, est_seed = ss.spawn(2)
    seed_repr = int(ss.generate_state(1)[0])
    inst = gen_tensor_instance(config.shape, config.rank1, config.rank3,
                               decay=config.decay, noise_sigma=noise_sigma,
                               seed=inst_seed)
    data_hash = hashlib.sha1(inst.y.tobytes()).hexdigest()[:12]
    t_norm = float(np.linalg.norm(inst.t_star))

    records = []
    for method in config.methods:
        angles = {}
        t0 = time.perf_counter()
        if method == "hardtth":
            fact, (u0, v0) = hardtth(
                inst.y, config.rank1, config.rank3, iters=config.iters,
                svd_method=config.svd_method, seed=int(est_seed.generate_state(1)[0]),
                oversample=config.oversample, power_iters=config.power_iters,
                with_initial=True,
            )
            t_hat = fact.reconstruct()
        elif method == "tt_hosvd":
            fact = tt_hosvd(
                inst.y, config.rank1, config.rank3,
                svd_method=config.svd_method,
                seed=int(est_seed.generate_state(1)[0]),
                oversample=config.oversample, power_iters=config.power_iters,
            )
            u0, v0 = fact.u, fact.v
            t_hat = fact.reconstruct()
        elif method in _TUCKER_METHODS:
            ranks = (config.rank1, config.rank1 * config.rank3, config.rank3)
            iters = config.iters if method == "tucker_hooi" else 0
            t_hat = tucker_hooi(inst.y, ranks, iters=iters).reconstruct()
            fact = None
        elif method == "prls":
            lam1, lam2, _ = tune_prls(inst.y, inst.t_star,
                                      grid_points=config.prls_grid_points)
            t0 = time.perf_counter()
            t_hat = prls(inst.y, lam1, lam2)
            fact = None
        else:
            raise ConfigError(f"method {method!r} not supported in tensor mode")
        elapsed = time.perf_counter() - t0
        if config.sin_theta and method in _TT_METHODS:
            angles = {
                "sin_theta_u0": sin_theta(inst.u_star, u0),
                "sin_theta_uT": sin_theta(inst.u_star, fact.u),
                "sin_theta_v0": sin_theta(inst.v_star, v0),
                "sin_theta_vT": sin_theta(inst.v_star, fact.v),
            }
        rel = float(np.linalg.norm(t_hat - inst.t_star) / t_norm)
        records.append(TrialRecord(
            method=method, n=None, sigma=noise_sigma, trial=trial,
            rel_error=rel, time_seconds=elapsed,
            sin_theta_u0=angles.get("sin_theta_u0"),
            sin_theta_uT=angles.get("sin_theta_uT"),
            sin_theta_v0=angles.get("sin_theta_v0"),
            sin_theta_vT=angles.get("sin_theta_vT"),
            seed=seed_repr, data_hash=data_hash,
        ))
    return records


def run_benchmark(
    config: BenchConfig,
    csv_path=None,
    json_path=None,
) -> tuple[list[TrialRecord], list[dict]]:
    """Run every (cell, trial) of the config and aggregate.

    Within a trial index all methods consume the identical generated data
    (paired comparison). Trials are independent and seeded from the master
    seed, so results do not depend on the worker count. Output files are
    written atomically once at the end.
    """
    if config.mode == "covariance":
        cells = list(enumerate(config.sample_sizes))
        runner = _covariance_trial
    else:
        cells = list(enumerate(config.noise_sigmas))
        runner = _tensor_trial
    tasks = [(idx, value, trial) for idx, value in cells
             for trial in range(config.trials)]

    workers = config.workers
    if workers <= 0:
        workers = int(os.environ.get("TTCOV_WORKERS", "1")) or 1
    if workers == 1:
        batches = [runner(config, idx, value, trial)
                   for idx, value, trial in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(
                lambda args: runner(config, *args), tasks
            ))
    records = [rec for batch in batches for rec in batch]
    records.sort(key=lambda r: (r.n if r.n is not None else -1,
                                r.sigma if r.sigma is not None else -1.0,
                                r.trial, config.methods.index(r.method)))
    aggregates = aggregate_records(records)
    if csv_path is not None:
        write_csv(records, csv_path)
    if json_path is not None:
        write_json(aggregates, json_path)
    return records, aggregates
