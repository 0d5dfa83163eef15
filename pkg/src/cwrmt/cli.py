"""Batch experiment runner.

`cwrmt run --config spec.json [overrides]` dispatches one of the tasks
{esd, moments, norm, correlations, oracle, graphcheck, laplace}, runs the
replicas in a thread pool (capped by CWRMT_THREADS), and writes summary.json
plus task-specific CSVs.  Exit status is nonzero iff validation or a
configured tolerance fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import circuits, correlations, definetti, ensembles, spectral
from .ensembles import EnsembleConfig
from .errors import ConfigError, CwrmtError, ResourceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_TOLERANCE = 4
EXIT_IO = 5

_TASKS = ("esd", "moments", "norm", "correlations", "oracle", "graphcheck",
          "laplace")

# Calibrated defaults; every value can be overridden via the config file's
# "tolerances" table.
_DEFAULT_TOLERANCES = {
    "ks_mean": 0.05,
    "m2_abs": 1e-10,
    "m4_range": [1.85, 2.15],
    "norm_dev": 0.07,
    "mc_sigmas": 3.0,
    "variance_max": 0.01,
    "laplace_ratio": 0.02,
}


@dataclass
class ExperimentSpec:
    task: str
    ensemble: dict
    replicas: int = 1
    k_max: int = 8
    N_grid: list = field(default_factory=list)
    scales: list = field(default_factory=lambda: [1e3, 1e4, 1e5, 1e6])
    K_list: list = field(default_factory=lambda: [2, 4])
    cells: list = field(default_factory=list)  # oracle: [[N, k], ...]
    gamma: float = 0.5
    output_dir: str = "."
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "task" not in d:
            raise ConfigError("config must set 'task'")
        spec = cls(**d)
        if spec.task not in _TASKS:
            raise ConfigError(
                f"unknown task {spec.task!r}; expected one of {_TASKS}")
        if spec.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if spec.task != "graphcheck" and not isinstance(spec.ensemble, dict):
            raise ConfigError("'ensemble' must be a mapping")
        tol = dict(_DEFAULT_TOLERANCES)
        tol.update(spec.tolerances)
        spec.tolerances = tol
        return spec

    def ensemble_config(self, N: int | None = None,
                        replica: int = 0) -> EnsembleConfig:
        e = dict(self.ensemble)
        if N is not None:
            e["N"] = N
        e.setdefault("seed", self.seed)
        try:
            return EnsembleConfig(replica_index=replica, **e)
        except TypeError as exc:
            raise ConfigError(f"bad ensemble config: {exc}") from None


def _pool_size(replicas: int) -> int:
    cap = os.environ.get("CWRMT_THREADS")
    workers = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(workers, replicas))


def _parallel_map(fn, args_list):
    """Run fn over args in a pool; results returned in input order so the
    aggregates are independent of thread count."""
    if len(args_list) == 1 or _pool_size(len(args_list)) == 1:
        return [fn(a) for a in args_list]
    with ThreadPoolExecutor(max_workers=_pool_size(len(args_list))) as pool:
        return list(pool.map(fn, args_list))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------

def _task_esd(spec: ExperimentSpec, out: Path) -> dict:
    tol = spec.tolerances

    def one(replica):
        cfg = spec.ensemble_config(replica=replica)
        X = ensembles.sample_matrix(cfg)
        return spectral.summarize(ensembles.scale(X, 0.5), k_max=spec.k_max)

    summaries = _parallel_map(one, list(range(spec.replicas)))
    eig_rows = [(r, i, float(lam))
                for r, s in enumerate(summaries)
                for i, lam in enumerate(s.eigenvalues)]
    _write_csv(out / "eigenvalues.csv", ["replica", "index", "lambda"],
               eig_rows)
    edges = np.arange(-3.0, 3.0 + 1e-12, 0.1)
    all_lam = np.concatenate([s.eigenvalues for s in summaries])
    hist, _ = np.histogram(all_lam, bins=edges)
    dens = hist / (len(all_lam) * 0.1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    _write_csv(out / "hist.csv",
               ["bin_left", "bin_right", "empirical_density",
                "semicircle_density"],
               [(float(edges[i]), float(edges[i + 1]), float(dens[i]),
                 float(spectral.semicircle_pdf(mids[i])))
                for i in range(len(mids))])
    ks = [s.ks_to_semicircle for s in summaries]
    mean_moments = np.mean([s.moments for s in summaries], axis=0)
    checks = {
        "ks_mean_below": float(np.mean(ks)) < tol["ks_mean"],
        "m2_exact": abs(mean_moments[1] - 1.0) < tol["m2_abs"],
    }
    if spec.k_max >= 4:
        lo, hi = tol["m4_range"]
        checks["m4_in_range"] = lo <= mean_moments[3] <= hi
    return {
        "ks_mean": float(np.mean(ks)),
        "ks_per_replica": [float(v) for v in ks],
        "esd_moments_mean": [float(v) for v in mean_moments],
        "checks": checks,
    }


def _task_moments(spec: ExperimentSpec, out: Path) -> dict:
    tol = spec.tolerances

    def one(replica):
        cfg = spec.ensemble_config(replica=replica)
        X = ensembles.sample_matrix(cfg)
        return spectral.summarize(ensembles.scale(X, 0.5), k_max=spec.k_max)

    summaries = _parallel_map(one, list(range(spec.replicas)))
    moments = np.array([s.moments for s in summaries])  # (R, k_max)
    means = moments.mean(axis=0)
    variances = moments.var(axis=0, ddof=1) if spec.replicas > 1 else \
        np.zeros(spec.k_max)
    ref = [spectral.semicircle_moment(k) for k in range(1, spec.k_max + 1)]
    _write_csv(out / "moments.csv",
               ["k", "mean", "variance", "semicircle"],
               [(k + 1, float(means[k]), float(variances[k]), float(ref[k]))
                for k in range(spec.k_max)])
    checks = {"m2_exact": abs(means[1] - 1.0) < tol["m2_abs"]}
    if spec.k_max >= 4:
        checks["var_tr_A4_below"] = float(variances[3]) < tol["variance_max"]
    return {
        "moment_means": [float(v) for v in means],
        "moment_variances": [float(v) for v in variances],
        "semicircle_moments": ref,
        "checks": checks,
    }


def _task_norm(spec: ExperimentSpec, out: Path) -> dict:
    tol = spec.tolerances
    grid = spec.N_grid or [spec.ensemble.get("N", 256)]
    beta = spec.ensemble.get("beta")
    rows = []
    per_N = {}
    for N in grid:
        def one(replica, N=N):
            cfg = spec.ensemble_config(N=N, replica=replica)
            X = ensembles.sample_matrix(cfg)
            lam = spectral.eigenvalues(ensembles.scale(X, 0.5))
            a_norm = float(max(abs(lam[0]), abs(lam[-1])))
            latent = X.latent_t if np.ndim(X.latent_t) == 0 else None
            return a_norm, a_norm / math.sqrt(N), latent

        res = _parallel_map(one, list(range(spec.replicas)))
        a_norms = [r[0] for r in res]
        b_norms = [r[1] for r in res]
        per_N[N] = {
            "a_norm_mean": float(np.mean(a_norms)),
            "a_norm_stderr": float(np.std(a_norms, ddof=1)
                                   / math.sqrt(len(a_norms)))
            if len(a_norms) > 1 else 0.0,
            "b_norm_mean": float(np.mean(b_norms)),
            "latents": [r[2] for r in res],
        }
        rows += [(N, r_i, a, b) for r_i, (a, b, _) in enumerate(res)]
    _write_csv(out / "norms.csv", ["N", "replica", "a_norm", "b_norm"], rows)
    checks = {}
    if beta is not None and beta > 1 and spec.ensemble.get("kind") == "full_cw":
        m_beta = definetti.magnetization(beta)
        N_big = max(grid)
        dev = abs(per_N[N_big]["b_norm_mean"] - m_beta)
        checks["b_norm_near_magnetization"] = dev < tol["norm_dev"]
    if beta is not None and beta < 1 and len(grid) > 1:
        b_means = [per_N[N]["b_norm_mean"] for N in sorted(grid)]
        checks["b_norm_decreasing"] = all(
            b_means[i] > b_means[i + 1] for i in range(len(b_means) - 1))
    return {"per_N": {str(N): v for N, v in per_N.items()}, "checks": checks}


def _task_correlations(spec: ExperimentSpec, out: Path) -> dict:
    tol = spec.tolerances
    beta = spec.ensemble.get("beta")
    if beta is None:
        raise ConfigError("correlations task requires ensemble.beta")
    pot = definetti.curie_weiss_potential(beta)
    expansion = definetti.find_minimum(pot)
    label = f"beta={beta:g}"
    rows, reports = [], []
    mc_cfg = spec.ensemble_config(replica=0)
    for K in spec.K_list:
        positions = [(2 * i + 1, 2 * i + 2) for i in range(K)]
        mc_est, mc_err = correlations.mc_correlation(
            mc_cfg, positions, max(spec.replicas, 100))
        for s in spec.scales:
            measure = definetti.DeFinettiMeasure(pot, float(s))
            rep = correlations.CorrelationReport(
                K=K,
                exact=correlations.exact_correlation(measure, K),
                asymptotic=definetti.laplace_moment_asymptotic(
                    expansion, K, float(s)),
                mc_estimate=mc_est, mc_stderr=mc_err,
                scale=float(s), beta_or_label=label)
            reports.append(rep)
            rows.append((label, K, float(s), rep.exact, rep.asymptotic,
                         mc_est, mc_err))
    _write_csv(out / "correlations.csv",
               ["label", "K", "scale", "exact", "asymptotic", "mc_estimate",
                "mc_stderr"], rows)
    largest = max(spec.scales)
    checks = {}
    for K in spec.K_list:
        rep = next(r for r in reports
                   if r.K == K and r.scale == float(largest))
        if rep.asymptotic != 0:
            checks[f"laplace_ratio_K{K}"] = (
                abs(rep.exact / rep.asymptotic - 1.0)
                < tol["laplace_ratio"] * 5)
    return {
        "reports": [r.__dict__ for r in reports],
        "checks": checks,
    }


def _task_oracle(spec: ExperimentSpec, out: Path) -> dict:
    tol = spec.tolerances
    cells = spec.cells or [[4, 2], [4, 4], [5, 4], [6, 6]]
    rows = []
    checks = {}
    for (N, k) in cells:
        cfg = spec.ensemble_config(N=N, replica=0)
        measure = ensembles.mixing_measure(cfg)
        exact = circuits.exact_trace_moment(measure, N, k, spec.gamma)
        mc, se = correlations.mc_trace_moment(
            cfg, k, spec.gamma, spec.replicas)
        z = abs(exact - mc) / se if se > 0 else 0.0
        rows.append((N, k, exact, mc, se, z))
        checks[f"cell_N{N}_k{k}"] = z < tol["mc_sigmas"]
    _write_csv(out / "oracle.csv",
               ["N", "k", "exact", "mc_estimate", "mc_stderr", "z"], rows)
    return {"cells": rows, "checks": checks}


def _task_graphcheck(spec: ExperimentSpec, out: Path) -> dict:
    report = circuits.verify_simple_edge_bound(spec.k_max)
    rows = []
    for k in range(1, spec.k_max + 1):
        rows.extend(circuits.classes_csv_rows(k))
    _write_csv(out / "classes.csv",
               ["k", "canonical", "rho", "sigma_simple",
                "sigma_simple_proper", "odd_edge_count"], rows)
    return {
        "classes_checked": report["classes_checked"],
        "violations": report["violations"],
        "checks": {"no_violations": not report["violations"]},
    }


def _task_laplace(spec: ExperimentSpec, out: Path) -> dict:
    tol = spec.tolerances
    beta = spec.ensemble.get("beta")
    if beta is None:
        raise ConfigError("laplace task requires ensemble.beta")
    pot = definetti.curie_weiss_potential(beta)
    expansion = definetti.find_minimum(pot)
    rows = []
    checks = {}
    for K in spec.K_list:
        ratios = []
        for s in spec.scales:
            exact = definetti.DeFinettiMeasure(pot, float(s)).moment(K)
            asym = definetti.laplace_moment_asymptotic(expansion, K, float(s))
            ratio = exact / asym if asym != 0 else float("nan")
            ratios.append(ratio)
            rows.append((beta, K, float(s), exact, asym, ratio))
        if not math.isnan(ratios[-1]):
            checks[f"ratio_converges_K{K}"] = (
                abs(ratios[-1] - 1.0) < tol["laplace_ratio"])
    _write_csv(out / "laplace.csv",
               ["beta", "K", "scale", "exact", "asymptotic", "ratio"], rows)
    return {"rows": rows, "checks": checks}


_TASK_FNS = {
    "esd": _task_esd,
    "moments": _task_moments,
    "norm": _task_norm,
    "correlations": _task_correlations,
    "oracle": _task_oracle,
    "graphcheck": _task_graphcheck,
    "laplace": _task_laplace,
}


def run(spec: ExperimentSpec) -> dict:
    """Execute one experiment; returns the report dict (also written to
    summary.json in the output directory)."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    body = _TASK_FNS[spec.task](spec, out)
    elapsed = time.perf_counter() - t0
    checks = body.get("checks", {})
    report = {
        "spec": _jsonable(spec.__dict__),
        "task": spec.task,
        "result": body,
        "passed": all(checks.values()) if checks else True,
        "wall_clock_seconds": elapsed,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(_jsonable(report), fh, indent=2)
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cwrmt")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", type=str, default=None,
                   help="path to the JSON experiment spec")
    r.add_argument("--task", choices=_TASKS)
    r.add_argument("--ensemble", type=str,
                   help="ensemble kind (full_cw|diagonal_cw|generalized|iid)")
    r.add_argument("--beta", type=float)
    r.add_argument("--alpha", type=float)
    r.add_argument("--n", type=int, help="matrix dimension")
    r.add_argument("--replicas", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--k-max", type=int, dest="k_max")
    r.add_argument("--out", type=str, dest="output_dir")
    return p


def _spec_from_args(args) -> ExperimentSpec:
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise OSError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    # flags win over file values
    for key in ("task", "replicas", "seed", "k_max", "output_dir"):
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = v
    ens = dict(raw.get("ensemble") or {})
    if args.ensemble is not None:
        ens["kind"] = args.ensemble
    if args.beta is not None:
        ens["beta"] = args.beta
    if args.alpha is not None:
        ens["alpha"] = args.alpha
    if args.n is not None:
        ens["N"] = args.n
    raw["ensemble"] = ens
    return ExperimentSpec.from_dict(raw)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        report = run(spec)
    except ResourceError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CwrmtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{spec.task}: {status} "
          f"({report['wall_clock_seconds']:.1f}s, out={spec.output_dir})")
    if spec.task == "graphcheck":
        print(f"violations: {len(report['result']['violations'])}")
    return EXIT_OK if report["passed"] else EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
