"""Shared fixtures: benchmark outputs produced through the ttcov CLI.

The plotting package consumes only files, so fixtures shell out to the
installed `ttcov` command-line interface to produce genuine CSV/JSON pairs.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

COV_CONFIG = """
schema_version = 1
mode = covariance
p = 2
q = 2
r = 2
rank1 = 2
rank3 = 2
methods = sample, hardtth
trials = 3
master_seed = 404
sample_sizes = 100, 300
iters = 4
sampler = spectral
"""

SWEEP_CONFIG = """
schema_version = 1
mode = tensor
p = 6
q = 6
r = 6
rank1 = 3
rank3 = 3
methods = tt_hosvd, hardtth
trials = 3
master_seed = 5
noise_sigmas = 0.05, 0.1, 0.5
iters = 10
decay = inverse_quadratic
"""


def run_ttcov(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "ttcov.cli", *args],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr or proc.stdout
    return proc.stdout


@pytest.fixture(scope="session")
def cov_bench(tmp_path_factory):
    root = tmp_path_factory.mktemp("covbench")
    cfg = root / "bench.cfg"
    cfg.write_text(COV_CONFIG)
    csv_path = root / "results.csv"
    json_path = root / "results.json"
    run_ttcov("bench", "--config", str(cfg), "--out", str(csv_path),
              "--json", str(json_path))
    return csv_path, json.loads(json_path.read_text())


@pytest.fixture(scope="session")
def sweep_bench(tmp_path_factory):
    root = tmp_path_factory.mktemp("sweep")
    cfg = root / "sweep.cfg"
    cfg.write_text(SWEEP_CONFIG)
    csv_path = root / "sweep.csv"
    json_path = root / "sweep.json"
    run_ttcov("bench", "--config", str(cfg), "--out", str(csv_path),
              "--json", str(json_path))
    return csv_path, json.loads(json_path.read_text())


@pytest.fixture(scope="session")
def spectra_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("spectra")
    data = root / "diag.npz"
    np.savez(data, p=3, q=1, r=1, sigma=np.diag([5.0, 3.0, 1.0]))
    out = root / "spectra.csv"
    run_ttcov("diagnose", "--data", str(data), "--rank1", "1", "--rank3", "1",
              "--n", "50", "--spectra", str(out))
    return out
