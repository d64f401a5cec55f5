"""Experiment orchestration: configs, runners, CSV emission, rate fitting.

Config files are flat `key = value` text with `#` comments and dotted keys
(e.g. ensemble.kind).  Every run is a pure function of (config, seed): the
per-trial seed is mix(root_seed, experiment-tag, n, trial) via the
documented splitmix64 chain, rows are emitted in deterministic (n, trial,
statistic) order, and floats are printed with 17 significant digits, so
identical runs produce byte-identical CSVs.  Matrix-level randomness is
derived under the shared tag "matrix" so that a sparse run at alpha = 1
reproduces the dense matrices exactly.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import gaps, inverse_lo, lsv, smallball, spectral
from .ensembles import (AtomDistribution, SparseSpec, bernoulli, complex_gaussian,
                        discrete, real_gaussian, sample_matrix, sample_sparse_matrix)
from .seeding import mix_seed

CSV_HEADER = ["experiment", "n", "trial", "seed", "statistic", "value",
              "stderr", "runtime_ms"]


class ConfigError(ValueError):
    pass


@dataclass
class ResultRow:
    experiment: str
    n: int
    trial: int
    seed: int
    statistic: str
    value: float
    stderr: float = 0.0
    runtime_ms: int = 0

    def as_record(self) -> list[str]:
        return [self.experiment, str(self.n), str(self.trial), str(self.seed),
                self.statistic, _fmt(self.value), _fmt(self.stderr),
                str(self.runtime_ms)]


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass
class ExperimentConfig:
    experiment: str = "circlaw"
    ensemble: AtomDistribution = field(default_factory=complex_gaussian)
    n_list: tuple = (64, 128)
    trials: int = 5
    seed: int = 0
    grid_spacing: float = 0.02
    grid_extent: float = 2.0
    sparse: Optional[SparseSpec] = None
    lsv_A: float = 1.0
    lsv_B: float = 3.0
    lsv_M: Optional[complex] = None
    mu: float = 1.0
    gap_L_list: tuple = (4, 8, 16, 32)
    invlo_eps: float = 0.2
    invlo_m: complex = 1.0
    invlo_d_max: int = 10
    char_points: tuple = ((1.0, 0.0), (0.0, 1.0), (2.0, 1.0))
    out: Optional[str] = None
    jobs: int = 1
    timings: bool = False
    quiet: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if len(self.n_list) == 0 or list(self.n_list) != sorted(set(self.n_list)):
            raise ConfigError("n_list must be nonempty, ascending, without repeats")
        if self.ensemble.variance <= 0:
            raise ConfigError("ensemble must have strictly positive variance")

    def grid(self) -> spectral.GridSpec:
        return spectral.default_grid(self.grid_spacing, self.grid_extent)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.ensemble.variance)


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key = value lines; # starts a comment; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_complex_list(text: str) -> list[complex]:
    return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]


def _ensemble_from_mapping(kv: dict[str, str]) -> AtomDistribution:
    kind = kv.get("ensemble.kind", "complex_gaussian")
    if kind == "bernoulli":
        return bernoulli()
    if kind == "real_gaussian":
        return real_gaussian()
    if kind == "complex_gaussian":
        return complex_gaussian()
    if kind == "discrete":
        try:
            values = _parse_complex_list(kv["ensemble.values"])
            probs = [float(p) for p in kv["ensemble.probs"].split(",") if p.strip()]
            return discrete(values, probs)
        except KeyError as exc:
            raise ConfigError(f"discrete ensemble needs {exc.args[0]}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown ensemble.kind {kind!r}")


def config_from_mapping(kv: dict[str, str]) -> ExperimentConfig:
    def geti(key, default):
        return int(kv[key]) if key in kv else default

    def getf(key, default):
        return float(kv[key]) if key in kv else default

    try:
        sparse = None
        if "sparse.alpha" in kv:
            try:
                sparse = SparseSpec(float(kv["sparse.alpha"]))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        lsv_m: Optional[complex] = None
        m_text = kv.get("lsv.M", "zero")
        if m_text not in ("zero", "0"):
            if m_text.startswith("scalar:"):
                m_text = m_text[len("scalar:"):]
            lsv_m = complex(m_text.replace(" ", ""))
        cfg = ExperimentConfig(
            experiment=kv.get("experiment", "circlaw"),
            ensemble=_ensemble_from_mapping(kv),
            n_list=tuple(int(x) for x in kv.get("n_list", "64,128").split(",") if x.strip()),
            trials=geti("trials", 5),
            seed=geti("seed", 0),
            grid_spacing=getf("grid.spacing", 0.02),
            grid_extent=getf("grid.extent", 2.0),
            sparse=sparse,
            lsv_A=getf("lsv.A", 1.0),
            lsv_B=getf("lsv.B", 3.0),
            lsv_M=lsv_m,
            mu=getf("mu", 1.0),
            gap_L_list=tuple(int(x) for x in kv.get("gap.L_list", "4,8,16,32").split(",") if x.strip()),
            invlo_eps=getf("invlo.eps", 0.2),
            invlo_m=complex(kv.get("invlo.m", "1").replace(" ", "")),
            invlo_d_max=geti("invlo.d_max", 10),
            out=kv.get("out"),
            jobs=geti("jobs", 1),
            timings=kv.get("timings", "false").lower() in ("1", "true", "yes"),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_mapping(parse_config_text(text))


def write_rows(path: str | Path, rows: list[ResultRow]) -> Path:
    """Emit rows in (experiment, n, trial, statistic-order-of-creation) order."""
    path = Path(path)
    seen = set()
    for r in rows:
        key = (r.experiment, r.n, r.trial, r.statistic)
        if key in seen:
            raise ValueError(f"duplicate result row key {key}")
        seen.add(key)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(r.as_record())
    return path


def read_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [dict(row) for row in reader]


def _run_trials(config: ExperimentConfig, tag: str,
                worker: Callable[[int, int, int], list[ResultRow]]) -> list[ResultRow]:
    """Run worker(n, trial, seed) over the (n, trial) grid, deterministically.

    Trials run concurrently up to the job limit; rows are buffered per
    trial and emitted in (n, trial) order regardless of completion order.
    A failing trial contributes an error row instead of aborting the run.
    """
    jobs = int(os.environ.get("CIRCLAW_JOBS", config.jobs))
    tasks = [(n, t) for n in config.n_list for t in range(config.trials)]

    def run_one(nt):
        n, t = nt
        seed_t = mix_seed(config.seed, tag, n, t)
        start = time.perf_counter()
        try:
            rows = worker(n, t, seed_t)
        except Exception as exc:   # crash isolation: record, keep going
            rows = [ResultRow(tag, n, t, seed_t, "error", math.nan, 0.0)]
            if not config.quiet:
                print(f"[{tag}] n={n} trial={t} failed: {exc}")
        if config.timings:
            ms = int((time.perf_counter() - start) * 1000)
            for r in rows:
                r.runtime_ms = ms
        return rows

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            buffered = list(pool.map(run_one, tasks))
    else:
        buffered = [run_one(nt) for nt in tasks]
    return [row for rows in buffered for row in rows]


def _spectral_rows(config, tag, n, trial, seed_t, sparse):
    matrix_seed = mix_seed(config.seed, "matrix", n, trial)
    if sparse is None:
        N = sample_matrix(config.ensemble, n, matrix_seed)
        esd = spectral.esd_of_matrix(N, config.sigma)
    else:
        N = sample_sparse_matrix(config.ensemble, n, sparse, matrix_seed)
        esd = spectral.esd_of_matrix(N, config.sigma, sparse_rho=sparse.rho(n))
    rows = [
        ResultRow(tag, n, trial, seed_t, "sup_distance",
                  spectral.sup_distance(esd, config.grid())),
        ResultRow(tag, n, trial, seed_t, "second_moment_ok",
                  1.0 if spectral.second_moment_check(N, esd, config.sigma) else 0.0),
    ]
    for (u, v) in config.char_points:
        c = spectral.char_fn_empirical(esd, u, v)
        rows.append(ResultRow(tag, n, trial, seed_t, f"cn_re_{u:g}_{v:g}", c.real))
        rows.append(ResultRow(tag, n, trial, seed_t, f"cn_im_{u:g}_{v:g}", c.imag))
    return rows


def run_circlaw(config: ExperimentConfig, out: Optional[str] = None) -> Path:
    """Dense circular-law run: ESD sup-distance, second-moment check, c_n values."""
    tag = "circlaw"
    rows = _run_trials(config, tag,
                       lambda n, t, s: _spectral_rows(config, tag, n, t, s, None))
    return write_rows(out or config.out or "circlaw.csv", rows)


def run_sparse_circlaw(config: ExperimentConfig, out: Optional[str] = None) -> Path:
    """Sparse variant with 1/(sigma sqrt(n rho)) scaling."""
    if config.sparse is None:
        raise ConfigError("sparse.alpha required for the sparse experiment")
    tag = "sparse"
    rows = _run_trials(config, tag,
                       lambda n, t, s: _spectral_rows(config, tag, n, t, s, config.sparse))
    return write_rows(out or config.out or "sparse.csv", rows)


def degenerate_alpha0_check(n: int, trials: int, seed: int,
                            dist: Optional[AtomDistribution] = None,
                            out: Optional[str] = None,
                            quiet: bool = True) -> Path:
    """alpha -> 0 limit (rho = 1/n): zero-row fraction and the origin atom.

    Expect the zero-row fraction near e^(-1) and at least as many
    eigenvalues at the origin as zero rows (rank deficiency).
    """
    if n < 50:
        raise ValueError("n must be >= 50 for the degenerate check")
    dist = dist or bernoulli()
    sigma = math.sqrt(dist.variance)
    config = ExperimentConfig(experiment="alpha0", ensemble=dist, n_list=(n,),
                              trials=trials, seed=seed, quiet=quiet)
    tag = "alpha0"

    def worker(n_, t, seed_t):
        matrix_seed = mix_seed(seed, "matrix", n_, t)
        from .ensembles import sparse_mask
        values = sample_matrix(dist, n_, matrix_seed).entries
        entries = values * sparse_mask(n_, 1.0 / n_, matrix_seed)
        zero_rows = float(np.mean(np.all(entries == 0, axis=1)))
        lam = spectral.Esd(np.linalg.eigvals(entries / sigma)).points
        origin = float(np.mean(np.abs(lam) < 1e-9))
        return [ResultRow(tag, n_, t, seed_t, "zero_row_fraction", zero_rows),
                ResultRow(tag, n_, t, seed_t, "origin_atom_fraction", origin)]

    rows = _run_trials(config, tag, worker)
    return write_rows(out or "alpha0.csv", rows)


class InsufficientDataError(ValueError):
    pass


def fit_rate(csv_path: str | Path) -> tuple[float, float]:
    """Least-squares slope of log(mean sup_distance) against log n.

    Returns (eta_prime, r_squared) with eta_prime = -slope.
    """
    rows = read_rows(csv_path)
    by_n: dict[int, list[float]] = {}
    for row in rows:
        if row["statistic"] == "sup_distance":
            val = float(row["value"])
            if math.isfinite(val):
                by_n.setdefault(int(row["n"]), []).append(val)
    if len(by_n) < 3:
        raise InsufficientDataError(
            f"need sup_distance rows for >= 3 distinct n, found {len(by_n)}")
    ns = np.array(sorted(by_n))
    means = np.array([np.mean(by_n[n]) for n in ns])
    if np.any(means <= 0):
        raise InsufficientDataError("nonpositive mean sup_distance")
    x = np.log(ns.astype(float))
    y = np.log(means)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(-slope), r2


# -- focused one-shot experiments for the CLI --------------------------------

def run_lsv(config: ExperimentConfig, out: Optional[str] = None) -> Path:
    """LSV tail rates over n_list at the configured (A, B, M)."""
    tag = "lsv"
    rows: list[ResultRow] = []
    for n in config.n_list:
        seed_t = mix_seed(config.seed, tag, n, 0)
        res = lsv.lsv_tail(config.ensemble, n, config.lsv_M, config.lsv_B,
                           config.trials, config.seed, sparse=config.sparse)
        rows.append(ResultRow(tag, n, -1, seed_t, "lsv_hit_rate", res.rate, res.stderr))
        rows.append(ResultRow(tag, n, -1, seed_t, "lsv_failures", float(res.failures)))
        for t, s in enumerate(res.statistics):
            rows.append(ResultRow(tag, n, t, seed_t, "sigma_min", float(s)))
    return write_rows(out or config.out or "lsv.csv", rows)


def run_smallball(config: ExperimentConfig, out: Optional[str] = None) -> Path:
    """Exact / Fourier / MC concentration probabilities for all-ones tuples."""
    tag = "smallball"
    rows: list[ResultRow] = []
    for n in config.n_list:
        seed_t = mix_seed(config.seed, tag, n, 0)
        v = np.ones(n)
        exact = smallball.conc_prob_exact(config.ensemble, config.mu, v)
        if exact is not None:
            rows.append(ResultRow(tag, n, -1, seed_t, "p_exact", exact.value))
        fr = smallball.conc_prob_fourier(config.ensemble, config.mu, v)
        rows.append(ResultRow(tag, n, -1, seed_t, "p_fourier", fr.value, fr.stderr))
        mc = smallball.conc_prob_mc(config.ensemble, config.mu, v,
                                    trials=max(config.trials, 10_000), seed=seed_t)
        rows.append(ResultRow(tag, n, -1, seed_t, "p_mc", mc.value, mc.stderr))
    return write_rows(out or config.out or "smallball.csv", rows)


def run_gap(config: ExperimentConfig, out: Optional[str] = None) -> Path:
    """Forward Littlewood-Offord family over rank-1 integer GAPs."""
    tag = "gap"
    rows: list[ResultRow] = []
    for L in config.gap_L_list:
        seed_t = mix_seed(config.seed, tag, L, 0)
        g = gaps.gap([1.0], [float(L)])
        p, disp = gaps.forward_lo_experiment(config.ensemble, config.mu, g,
                                             seed=seed_t)
        rows.append(ResultRow(tag, L, -1, seed_t, "conc_prob", p.value, p.stderr))
        rows.append(ResultRow(tag, L, -1, seed_t, "dispersion", disp))
    return write_rows(out or config.out or "gap.csv", rows)


def run_invlo(config: ExperimentConfig, out: Optional[str] = None) -> Path:
    """Structure search on a constant Gaussian-integer coefficient vector."""
    tag = "invlo"
    rows: list[ResultRow] = []
    for n in config.n_list:
        seed_t = mix_seed(config.seed, tag, n, 0)
        V = np.full(n, config.invlo_m, dtype=np.complex128)
        rep = inverse_lo.structure_search(config.ensemble, V, n, config.invlo_eps,
                                          d_max=config.invlo_d_max, seed=seed_t)
        rows.append(ResultRow(tag, n, -1, seed_t, "rank_r", float(rep.r)))
        rows.append(ResultRow(tag, n, -1, seed_t, "dispersion_final", rep.dispersion_final))
        rows.append(ResultRow(tag, n, -1, seed_t, "exceptional_count", float(rep.exceptional_count)))
        rows.append(ResultRow(tag, n, -1, seed_t, "terminated_normally",
                              1.0 if rep.terminated_normally else 0.0))
        for i, gen in enumerate(rep.generators):
            rows.append(ResultRow(tag, n, i, seed_t, "generator_re", float(gen.real)))
            rows.append(ResultRow(tag, n, i, seed_t, "generator_im", float(gen.imag)))
    return write_rows(out or config.out or "invlo.csv", rows)


def run_esd(config: ExperimentConfig, out: Optional[str] = None) -> Path:
    """Eigenvalue cloud of a single sample of the largest configured n."""
    tag = "esd"
    n = config.n_list[-1]
    seed_t = mix_seed(config.seed, tag, n, 0)
    matrix_seed = mix_seed(config.seed, "matrix", n, 0)
    if config.sparse is not None:
        N = sample_sparse_matrix(config.ensemble, n, config.sparse, matrix_seed)
        esd = spectral.esd_of_matrix(N, config.sigma, sparse_rho=config.sparse.rho(n))
    else:
        N = sample_matrix(config.ensemble, n, matrix_seed)
        esd = spectral.esd_of_matrix(N, config.sigma)
    rows = []
    for k, lam in enumerate(esd.points):
        rows.append(ResultRow(tag, n, k, seed_t, "eig_re", float(lam.real)))
        rows.append(ResultRow(tag, n, k, seed_t, "eig_im", float(lam.imag)))
    return write_rows(out or config.out or "esd.csv", rows)
