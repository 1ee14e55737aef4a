"""Replication engine: finite-sample simulations, asymptotic summaries and plot data.

Every replication draws from its own stream ``seed.child(n, r)``, so results
do not depend on how replications are split across worker processes, and the
final reduction runs over replications in index order.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import bias_lab, dgp, estimators, glm
from .errors import IpwBiasError, ParameterError, RunAbortedError
from .glm import Family
from .randgen import SeedSpec

MODELS = ("true", "false")

# purposes for streams derived from the master seed
_ORACLE, _REPLICATE, _DENSITY = 11, 12, 13


def _fmt(v) -> str:
    """Full-precision text for CSV cells."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Settings shared by the simulation and asymptotic runs."""

    design: Optional[str] = "designA"
    config_path: Optional[str] = None
    n_list: tuple = (500, 1000, 5000)
    reps: int = 1000
    seed: int = 1
    jobs: int = 1
    out_dir: Optional[str] = None
    N: int = 10**6
    tol_eq: float = 0.01
    tol_mc: float = 2.0
    nu: Optional[float] = 0.01
    max_fail_frac: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.reps < 1:
            raise ParameterError("reps must be at least 1")
        if not self.n_list or min(self.n_list) < 50:
            raise ParameterError("every n must be at least 50")
        if self.jobs < 1:
            raise ParameterError("jobs must be at least 1")
        if self.design is None and self.config_path is None:
            raise ParameterError("give a design or a config path")

    @property
    def seed_spec(self) -> SeedSpec:
        return SeedSpec(self.seed, 0)

    def load(self):
        """``(DgpSpec, MisspecSpec)`` for the configured design or file."""
        if self.config_path is not None:
            spec, mis = dgp.load_config(self.config_path)
            if mis is None:
                raise ParameterError("the config file needs a 'misspec' block")
            return spec, mis
        return dgp.preset(self.design)

    @property
    def label(self) -> str:
        if self.config_path is not None:
            return Path(self.config_path).stem
        return self.design


def fittable_truth(spec: dgp.DgpSpec) -> dgp.MisspecSpec:
    """Working models equal to the truth, with gamma outcomes fitted by least squares.

    Gamma likelihood fitting is not provided; a gaussian fit with the true
    link and terms has the same mean model and so is still correctly specified.
    """
    def wm(model):
        fam = model.family
        if fam.name == "gamma":
            fam = Family("gaussian")
        return dgp.WorkingModel(fam, model.link, model.terms)

    return dgp.MisspecSpec(wm(spec.ps), wm(spec.or1), wm(spec.or0))


def oracle_effect(spec: dgp.DgpSpec, seed: SeedSpec, N: int = 10**6) -> float:
    """``E[mu_1(X) - mu_0(X)]`` over a size-``N`` covariate sample."""
    from . import randgen
    x = spec.covariates.sample(randgen.make_stream(seed.child(_ORACLE)), N)
    return float(np.mean(dgp.true_or(spec, 1, x) - dgp.true_or(spec, 0, x)))


# --- one replication -----------------------------------------------------------

def fit_and_estimate(data: dgp.Dataset, models: dgp.MisspecSpec) -> np.ndarray:
    """Fit the three working models on ``data`` and return (IPW1, IPW2, DR) estimates."""
    ps = glm.fit(models.ps.terms, data.x, data.t, models.ps.family, models.ps.link)
    e = ps.predict(data.x)
    preds = {}
    for t, wm in ((1, models.or1), (0, models.or0)):
        arm = data.t == t
        if not arm.any():
            raise estimators.DegenerateSampleError(f"arm T={t} is empty")
        preds[t] = glm.fit(wm.terms, data.x[arm], data.y[arm], wm.family, wm.link).predict(data.x)
    return np.array([
        estimators.ipw1(data, e).delta_hat,
        estimators.ipw2(data, e).delta_hat,
        estimators.dr(data, e, preds[1], preds[0]).delta_hat,
    ])


def _replicate_chunk(args):
    spec, model_sets, n, seed, reps = args
    out = np.full((len(reps), len(model_sets), 3), np.nan)
    with threadpool_limits(1), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for i, r in enumerate(reps):
            data = dgp.sample_dataset(spec, n, seed.child(_REPLICATE, n, r), keep_oracle=False)
            for j, models in enumerate(model_sets):
                try:
                    out[i, j] = fit_and_estimate(data, models)
                except IpwBiasError:
                    pass
    return out


def _chunks(reps: int, jobs: int):
    size = max(1, math.ceil(reps / (4 * jobs)))
    return [range(lo, min(reps, lo + size)) for lo in range(0, reps, size)]


# --- simulation table ------------------------------------------------------------

@dataclass(frozen=True)
class SimRow:
    design: str
    n: int
    model: str
    estimator: str
    bias: float
    sd: float
    mse: float
    reps: int
    failures: int


SIM_COLUMNS = ("design", "n", "model", "estimator", "bias", "sd", "mse", "reps", "failures")


@dataclass(frozen=True)
class SimTable:
    rows: tuple
    delta: float

    def get(self, n: int, model: str, estimator: str) -> SimRow:
        for row in self.rows:
            if row.n == n and row.model == model and row.estimator == estimator:
                return row
        raise KeyError((n, model, estimator))

    def to_csv(self, path):
        return write_csv(path, SIM_COLUMNS, ([getattr(r, c) for c in SIM_COLUMNS] for r in self.rows))

    def render(self) -> str:
        lines = [f"{'n':>6} {'model':>5} {'est':>5} {'bias':>8} {'sd':>7} {'mse':>7} {'fail':>5}"]
        for r in self.rows:
            lines.append(f"{r.n:>6} {r.model:>5} {r.estimator:>5} {r.bias:>8.3f} {r.sd:>7.3f} "
                         f"{r.mse:>7.3f} {r.failures:>5}")
        return "\n".join(lines)


def summarize(estimates: np.ndarray, delta: float):
    """``(bias, sd, mse, reps)`` of finite replicate estimates around ``delta``."""
    ok = estimates[np.isfinite(estimates)]
    k = ok.size
    if k == 0:
        return float("nan"), float("nan"), float("nan"), 0
    bias = float(np.mean(ok) - delta)
    sd = float(np.std(ok, ddof=1)) if k > 1 else float("nan")
    mse = float(np.mean((ok - delta) ** 2))
    return bias, sd, mse, k


def run_design(cfg: RunConfig) -> SimTable:
    """Finite-sample bias, SD and MSE under true and misspecified working models.

    Raises
    ------
    RunAbortedError
        If more than ``cfg.max_fail_frac`` of the replications fail for any
        ``(n, model)`` cell.
    """
    spec, mis = cfg.load()
    seed = cfg.seed_spec
    model_sets = (fittable_truth(spec), mis)
    delta = oracle_effect(spec, seed, cfg.N)
    rows = []
    for n in cfg.n_list:
        tasks = [(spec, model_sets, n, seed, chunk) for chunk in _chunks(cfg.reps, cfg.jobs)]
        if cfg.jobs == 1:
            parts = [_replicate_chunk(t) for t in tasks]
        else:
            with ProcessPoolExecutor(cfg.jobs) as pool:
                parts = list(pool.map(_replicate_chunk, tasks))
        est = np.concatenate(parts, axis=0)
        for j, model in enumerate(MODELS):
            failed = int(np.count_nonzero(~np.isfinite(est[:, j, 0])))
            if failed > cfg.max_fail_frac * cfg.reps:
                raise RunAbortedError(
                    f"{failed} of {cfg.reps} replications failed for n={n}, {model} models")
            for k, tag in enumerate(bias_lab.ESTIMATORS):
                bias, sd, mse, used = summarize(est[:, j, k], delta)
                rows.append(SimRow(cfg.label, n, model, tag, bias, sd, mse, used, failed))
    table = SimTable(tuple(rows), delta)
    if cfg.out_dir is not None:
        table.to_csv(Path(cfg.out_dir) / "simulation.csv")
    return table


# --- asymptotic summary --------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticResult:
    pseudo_true: bias_lab.PseudoTrue
    bias: bias_lab.BiasReport
    table: bias_lab.ComponentTable
    conditions: bias_lab.ConditionReport

    def rows(self):
        return bias_lab.table_rows(self.bias, self.table)

    def value(self, label: str) -> float:
        for lab, v, _ in self.rows():
            if lab == label:
                return v
        raise KeyError(label)


def write_asymptotic(result: AsymptoticResult, out_dir):
    out = Path(out_dir)
    write_csv(out / "components.csv", ("parameter", "value", "mc_se"), result.rows())
    b = result.bias
    write_csv(out / "biases.csv",
              ("estimator", "total", "part1", "part2", "part2_analog", "se_total", "se_part1", "se_part2"),
              ([k, v.total, v.part1, v.part2, v.part2_analog, v.se_total, v.se_part1, v.se_part2]
               for k, v in b.estimators.items()))
    records = bias_lab.condition_rows(result.conditions)
    write_csv(out / "conditions.csv", tuple(records[0]), (list(r.values()) for r in records))


def run_asymptotic(cfg: RunConfig, pt: Optional[bias_lab.PseudoTrue] = None) -> AsymptoticResult:
    """Pseudo-true fit, bias limits, component table and condition checks for one design.

    The fit and the expectation sample both have size ``cfg.N`` and use
    different streams of ``cfg.seed``.
    """
    spec, mis = cfg.load()
    seed = cfg.seed_spec
    with threadpool_limits(1):
        if pt is None:
            pt = bias_lab.pseudo_true(spec, mis, cfg.N, seed)
        bias, table = bias_lab.evaluate(spec, pt, cfg.N, seed, nu=cfg.nu)
    conditions = bias_lab.check_conditions(table, cfg.tol_eq, cfg.tol_mc)
    result = AsymptoticResult(pt, bias, table, conditions)
    if cfg.out_dir is not None:
        write_asymptotic(result, cfg.out_dir)
    return result


# --- single-covariate example ------------------------------------------------------

@dataclass(frozen=True)
class Example2Report:
    montecarlo: AsymptoticResult
    quadrature: AsymptoticResult
    curves: dict

    def rows(self):
        """``(quantity, montecarlo, mc_se, quadrature)`` for every reported value."""
        out = []
        mc, qd = self.montecarlo, self.quadrature
        for name, attr in (("beta*", "beta_star"), ("alpha1*", "alpha1_star"), ("alpha0*", "alpha0_star")):
            a, b = getattr(mc.pseudo_true, attr), getattr(qd.pseudo_true, attr)
            for i in range(len(a)):
                out.append((f"{name}[{i}]", a[i], float("nan"), b[i]))
        for (label, v, se), (_, vq, _) in zip(mc.rows(), qd.rows()):
            out.append((label, v, se, vq))
        for cond, key in (("T4", "premise"), ("T4", "conclusion"), ("T6", "premise"), ("T6", "conclusion")):
            em, eq = mc.conditions.get(cond, 1), qd.conditions.get(cond, 1)
            for k in getattr(em, key):
                out.append((f"{cond}.{key}.{k}", getattr(em, key)[k], float("nan"), getattr(eq, key)[k]))
        return out


def run_example2(out_dir=None, N: int = 10**6, seed: int = 1, nodes: int = 256,
                 tol_eq: float = 0.01, tol_mc: float = 2.0) -> Example2Report:
    """Single-covariate example by Monte Carlo and by quadrature, plus curve data."""
    spec, mis = dgp.preset("example2")
    cfg = RunConfig("example2", N=N, seed=seed, tol_eq=tol_eq, tol_mc=tol_mc)
    mc = run_asymptotic(cfg)
    ptq = bias_lab.pseudo_true_quadrature(spec, mis, nodes)
    bias, table = bias_lab.evaluate(spec, ptq, method="quadrature", nodes=nodes, nu=cfg.nu)
    qd = AsymptoticResult(ptq, bias, table, bias_lab.check_conditions(table, tol_eq, tol_mc))
    curves = bias_lab.emit_curves(spec, ptq)
    report = Example2Report(mc, qd, curves)
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "example2_report.csv", ("quantity", "montecarlo", "montecarlo_se", "quadrature"),
                  report.rows())
        write_csv(out / "curves.csv", bias_lab.CURVE_COLUMNS,
                  zip(*(curves[c] for c in bias_lab.CURVE_COLUMNS)))
    return report


# --- propensity densities ---------------------------------------------------------

DENSITY_SERIES = ("ehat_treated", "ehat_control", "estar_treated", "estar_control")


def emit_ps_density(design: str, n: int = 10**5, seed: int = 1, bins: int = 100, out_dir=None) -> dict:
    """Histogram densities on [0, 1] of fitted propensities by treatment arm.

    ``ehat`` comes from the true-form model and ``estar`` from the working
    model, both fitted on the same sample.
    """
    if bins < 2:
        raise ParameterError("bins must be at least 2")
    spec, mis = dgp.preset(design)
    data = dgp.sample_dataset(spec, n, SeedSpec(seed, 0).child(_DENSITY), keep_oracle=False)
    truth = fittable_truth(spec)
    edges = np.linspace(0.0, 1.0, bins + 1)
    out = {"x": 0.5 * (edges[:-1] + edges[1:])}
    for label, wm in (("ehat", truth.ps), ("estar", mis.ps)):
        ps = glm.fit(wm.terms, data.x, data.t, wm.family, wm.link).predict(data.x)
        for arm, t in (("treated", 1), ("control", 0)):
            vals = ps[data.t == t]
            dens, _ = np.histogram(vals, bins=edges, density=vals.size > 0)
            out[f"{label}_{arm}"] = dens.astype(float)
    if out_dir is not None:
        cols = ("x",) + DENSITY_SERIES
        write_csv(Path(out_dir) / "psdensity.csv", cols, zip(*(out[c] for c in cols)))
    return out


def check_config(path, N: int = 10**6, seed: int = 1, out_dir=None, tol_eq=0.01, tol_mc=2.0,
                 nu=0.01) -> AsymptoticResult:
    """Condition report for a custom configuration file."""
    cfg = RunConfig(None, config_path=str(path), N=N, seed=seed, out_dir=out_dir,
                    tol_eq=tol_eq, tol_mc=tol_mc, nu=nu)
    return run_asymptotic(cfg)
