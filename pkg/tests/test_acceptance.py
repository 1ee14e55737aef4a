"""Exit criteria. Each test records one PASS/FAIL line shown in the terminal summary."""

import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from conftest import record_criterion
from ipwbias import bias_lab as bl, dgp, estimators as est, harness
from ipwbias.dgp import CovariateSpec, DgpSpec, GlmSpec, MisspecSpec, WorkingModel
from ipwbias.glm import Family, Link, TermSet
from ipwbias.randgen import Bernoulli, Poisson, SeedSpec, Uniform

pytestmark = [pytest.mark.acceptance, pytest.mark.filterwarnings("ignore:a single")]

# printed asymptotic summary: label -> (A, B, C)
SUMMARY = {
    "mu_1": (11.127, 11.127, 12.130), "mu*_1": (11.092, 11.098, 12.097),
    "mu_0": (8.628, 8.628, 9.633), "mu*_0": (8.578, 8.564, 9.582),
    "Bias(IPW1*)": (0.096, 0.264, 0.213), "Bias(IPW2*)": (0.007, 0.033, -0.057),
    "Bias(DR*)": (0.017, 0.025, 0.037),
    "Bias_1(IPW1*)": (0.024, 0.128, 0.130), "Bias_1(IPW2*)": (-0.028, 0.013, -0.089),
    "Bias_1(DR*)": (0.009, 0.009, 0.029),
    "E[e/e*]": (1.005, 1.010, 1.019),
    "cov[e/e*, mu_1]": (-0.029, 0.015, -0.095), "cov[e/e*, mu*_1]": (-0.040, 0.006, -0.121),
    "E[e/e*-1]mu_1": (0.060, 0.113, 0.224), "E[(e/e*-1)mu_1]": (0.030, 0.128, 0.130),
    "E[(e/e*-1)mu*_1]": (0.019, 0.119, 0.102),
    "Bias_2(IPW1*)": (0.076, 0.137, 0.083), "Bias_2(IPW2*)": (0.039, 0.022, 0.031),
    "Bias_2(DR*)": (0.011, 0.018, 0.008),
    "E[(1-e)/(1-e*)]": (0.995, 0.987, 0.995),
    "cov[(1-e)/(1-e*), mu_0]": (-0.037, -0.017, -0.033),
    "cov[(1-e)/(1-e*), mu*_0]": (-0.026, -0.004, -0.024),
    # design B entry is printed as +0.111; its own factors give (0.987 - 1) * 8.628 < 0
    "E[(1-e)/(1-e*)-1]mu_0": (-0.038, -0.111, -0.052),
    "E[((1-e)/(1-e*)-1)mu_0]": (-0.074, -0.128, -0.085),
    "E[((1-e)/(1-e*)-1)mu*_0]": (-0.065, -0.114, -0.075),
}

# printed simulation biases at n = 5000 with misspecified models: (IPW1, IPW2, DR)
SIM_FALSE_5000 = {"designA": (0.112, 0.013, 0.025), "designB": (0.260, 0.033, 0.025),
                  "designC": (0.226, -0.057, 0.040)}

DESIGNS = ("designA", "designB", "designC")


@pytest.fixture(scope="module")
def example2_runs():
    t0 = time.perf_counter()
    rep = harness.run_example2(None, N=10**6, seed=1)
    return rep, time.perf_counter() - t0


# --- 1 ---------------------------------------------------------------------------

def test_c01_example2_biases(example2_runs):
    rep, elapsed = example2_runs
    target = {"IPW1": -0.16, "IPW2": 0.05, "DR": -0.02}
    got = {m: {k: getattr(rep, m).bias[k].total for k in target} for m in ("montecarlo", "quadrature")}
    ok = all(abs(got[m][k] - v) <= 0.01 for m in got for k, v in target.items()) and elapsed < 30
    detail = "; ".join(f"{m}: " + ", ".join(f"{k}={v:+.4f}" for k, v in got[m].items()) for m in got)
    record_criterion(1, ok, f"{detail}; {elapsed:.1f}s")
    assert ok


# --- 2 ---------------------------------------------------------------------------

def test_c02_example2_pseudo_true(example2_runs):
    pt = example2_runs[0].montecarlo.pseudo_true
    pairs = [(pt.beta_star, (-0.81, 0.74)), (pt.alpha1_star, (10.06, 1.48)), (pt.alpha0_star, (4.14, 0.79))]
    worst = max(float(np.max(np.abs(np.asarray(a) - b))) for a, b in pairs)
    ok = worst <= 0.02
    record_criterion(2, ok, f"beta*={np.round(pt.beta_star, 4)}, alpha1*={np.round(pt.alpha1_star, 4)}, "
                            f"alpha0*={np.round(pt.alpha0_star, 4)}; max deviation {worst:.4f}")
    assert ok


# --- 3 ---------------------------------------------------------------------------

def test_c03_example2_conditions(example2_runs):
    rep = example2_runs[0]
    ok, parts = True, []
    for m in ("montecarlo", "quadrature"):
        cr = getattr(rep, m).conditions
        t4, t6 = cr.get("T4", 1), cr.get("T6", 1)
        v4 = (t4.premise["abs_dr_part"], t4.premise["abs_E_rm1_mu"],
              t4.conclusion["abs_E_rm1_mustar"], t4.conclusion["twice_abs_E_rm1_mu"])
        v6 = (t6.premise["abs_ipw2_part"], t6.conclusion["lower"], t6.conclusion["E_rm1_mustar"],
              t6.conclusion["upper"])
        ok &= np.allclose(v4, (0.01, 0.11, 0.10, 0.22), atol=0.01, rtol=0)
        ok &= np.allclose(v6, (0.06, -0.17, -0.10, -0.05), atol=0.01, rtol=0)
        ok &= all(x is True for x in (t4.premise_holds, t4.conclusion_holds, t6.premise_holds, t6.conclusion_holds))
        parts.append(f"{m}: T4 {np.round(v4, 3)} T6 {np.round(v6, 3)}")
    record_criterion(3, ok, "; ".join(parts))
    assert ok


# --- 4 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def summaries():
    out = {}
    for j, name in enumerate(DESIGNS):
        t0 = time.perf_counter()
        # overlap guard off so that the values are reported even though the
        # literal designs put e* within 1e-4 of one
        res = harness.run_asymptotic(harness.RunConfig(name, N=10**6, seed=1, nu=None))
        out[name] = (res, time.perf_counter() - t0)
    return out


def test_c04_summary_table(summaries):
    lines, ok = [], True
    for j, name in enumerate(DESIGNS):
        res, elapsed = summaries[name]
        tol = 0.02 if name == "designC" else 0.01
        vals = {lab: v for lab, v, _ in res.rows()}
        misses = [lab for lab, printed in SUMMARY.items() if abs(vals[lab] - printed[j]) > tol]
        ok &= not misses and elapsed < 120
        lines.append(f"{name}: {len(SUMMARY) - len(misses)}/{len(SUMMARY)} rows within {tol} "
                     f"(mu_1 {vals['mu_1']:.3f} vs {SUMMARY['mu_1'][j]}, "
                     f"Bias(IPW1*) {vals['Bias(IPW1*)']:.3f} vs {SUMMARY['Bias(IPW1*)'][j]}), {elapsed:.1f}s")
    record_criterion(4, ok, "; ".join(lines))
    assert ok


# --- 5 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def simulations():
    out = {}
    for name in DESIGNS:
        t0 = time.perf_counter()
        try:
            table = harness.run_design(harness.RunConfig(name, n_list=(5000,), reps=1000, seed=1, jobs=4))
        except harness.RunAbortedError as exc:
            table = exc
        out[name] = (table, time.perf_counter() - t0)
    return out


def test_c05_simulation_biases(simulations):
    lines, ok = [], True
    for name in DESIGNS:
        table, elapsed = simulations[name]
        if isinstance(table, Exception):
            ok = False
            lines.append(f"{name}: aborted ({table})")
            continue
        false = [table.get(5000, "false", k).bias for k in bl.ESTIMATORS]
        true = [table.get(5000, "true", k) for k in bl.ESTIMATORS]
        sd = {r.estimator: r.sd for r in true}
        good_false = np.allclose(false, SIM_FALSE_5000[name], atol=0.02, rtol=0)
        good_true = all(abs(r.bias) < 0.02 for r in true)
        good_sd = sd["DR"] <= sd["IPW2"] <= sd["IPW1"]
        good_mse = all(abs(r.mse - (r.bias**2 + r.sd**2 * (r.reps - 1) / r.reps)) <= 1e-9 * r.mse
                       for r in table.rows)
        ok &= good_false and good_true and good_sd and good_mse and elapsed < 300
        lines.append(f"{name}: false biases {np.round(false, 3)} vs {SIM_FALSE_5000[name]}, "
                     f"true biases {np.round([r.bias for r in true], 3)}, SD order {good_sd}, "
                     f"MSE identity {good_mse}, {elapsed:.0f}s")
    record_criterion(5, ok, "; ".join(lines))
    assert ok


# --- randomized DGPs ----------------------------------------------------------------

BINOMIAL_LINKS = ("logit", "probit", "cloglog", "cauchit")


def random_dgp(rng):
    """A small DGP with bounded overlap and misspecified working models."""
    two = rng.random() < 0.4
    lo = rng.uniform(-2, 0)
    marg = [Uniform(lo, lo + rng.uniform(1, 3))]
    if two:
        marg.append(Bernoulli(rng.uniform(0.2, 0.8)) if rng.random() < 0.5 else Poisson(rng.uniform(0.5, 2)))
    cov = CovariateSpec(tuple(marg))
    true_terms = TermSet(("1", "X1", "X1^2") + (("X2",) if two else ()))
    work_terms = TermSet(("1", "X1") + (("X2",) if two else ()))
    grid = cov.sample(np.random.default_rng(rng.integers(2**32)), 4000)
    while True:
        link = Link(BINOMIAL_LINKS[rng.integers(4)])
        beta = rng.uniform(-0.8, 0.8, len(true_terms))
        ps = GlmSpec(Family("binomial"), link, true_terms, beta)
        e = ps.mean(grid)
        if 0.08 < e.min() and e.max() < 0.92:
            break
    if rng.random() < 0.5:
        fam, olink = Family("gaussian"), Link("identity")
        make = lambda: np.concatenate([[rng.uniform(2, 8)], rng.uniform(-1.5, 1.5, len(true_terms) - 1)])
    else:
        fam, olink = Family("poisson"), Link("log")
        make = lambda: np.concatenate([[rng.uniform(0.5, 2)], rng.uniform(-0.4, 0.4, len(true_terms) - 1)])
    spec = DgpSpec(cov, ps, GlmSpec(fam, olink, true_terms, make()), GlmSpec(fam, olink, true_terms, make()))
    wlink = Link(BINOMIAL_LINKS[rng.integers(4)])
    gauss = Family("gaussian")
    mis = MisspecSpec(WorkingModel(Family("binomial"), wlink, work_terms),
                      WorkingModel(gauss, Link("identity"), work_terms),
                      WorkingModel(gauss, Link("identity"), work_terms))
    return spec, mis


def _adaptive_bias(spec, pt):
    """IPW functionals by adaptive integration for one uniform covariate."""
    d = spec.covariates.marginals[0]
    f = lambda g: integrate.quad(lambda x: g(np.array([[x]]))[0], d.low, d.high,
                                 epsabs=1e-12, epsrel=1e-12, limit=200)[0] / (d.high - d.low)
    e, es = (lambda x: dgp.true_ps(spec, x)), pt.e_star
    m1, m0 = (lambda x: dgp.true_or(spec, 1, x)), (lambda x: dgp.true_or(spec, 0, x))
    r1 = lambda x: e(x) / es(x)
    r0 = lambda x: (1 - e(x)) / (1 - es(x))
    E1, E0 = f(lambda x: r1(x) * m1(x)), f(lambda x: r0(x) * m0(x))
    mu1, mu0 = f(m1), f(m0)
    return {"IPW1": E1 - E0 - (mu1 - mu0), "IPW2": E1 / f(r1) - E0 / f(r0) - (mu1 - mu0)}


# --- 6 ---------------------------------------------------------------------------

def test_c06_double_robustness():
    rng = np.random.default_rng(606)
    n_dgp, bad, checks, notes = 24, 0, 0, []
    for i in range(n_dgp):
        spec, mis = random_dgp(rng)
        seed = SeedSpec(6, i)
        pt = bl.pseudo_true(spec, mis, 10**5, seed)
        for switch in (bl.with_true_ps, bl.with_true_or):
            rep = bl.bias_limit(spec, switch(pt, spec), N=2 * 10**5, seed=seed, nu=None)
            checks += 1
            if abs(rep["DR"].total) > 3 * rep["DR"].se_total + 1e-12:
                bad += 1
                notes.append(f"dgp {i} {switch.__name__}: DR {rep['DR'].total:.2e}")
        if spec.covariates.dim == 1:
            mc = bl.bias_limit(spec, pt, N=2 * 10**5, seed=seed, nu=None)
            qd = bl.bias_limit(spec, pt, method="quadrature", nu=None)
            oracle = _adaptive_bias(spec, pt)
            for k in ("IPW1", "IPW2"):
                checks += 2
                if abs(mc[k].total - qd[k].total) > 3 * mc[k].se_total:
                    bad += 1
                    notes.append(f"dgp {i} {k}: mc {mc[k].total:.4f} vs quadrature {qd[k].total:.4f}")
                if abs(qd[k].total - oracle[k]) > 1e-8:
                    bad += 1
                    notes.append(f"dgp {i} {k}: quadrature {qd[k].total:.6f} vs adaptive {oracle[k]:.6f}")
    ok = bad == 0
    record_criterion(6, ok, f"{n_dgp} DGPs, {checks} checks, {bad} failures " + "; ".join(notes[:3]))
    assert ok


# --- 7 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def theorem_suite():
    rng = np.random.default_rng(707)
    reports = []
    for i in range(120):
        spec, mis = random_dgp(rng)
        seed = SeedSpec(7, i)
        pt = bl.pseudo_true(spec, mis, 10**5, seed)
        tab = bl.components(spec, pt, N=2 * 10**5, seed=seed, nu=None)
        reports.append(bl.check_conditions(tab))
    return reports


def test_c07_theorem_implications(theorem_suite, summaries):
    counter = {}
    exercised = {}
    for rep in theorem_suite:
        for e in rep.entries:
            if e.applicable and e.premise_holds and e.premise_margin >= 5:
                exercised[e.condition] = exercised.get(e.condition, 0) + 1
            if e.is_counterexample(5.0):
                counter[e.condition] = counter.get(e.condition, 0) + 1
    gates = {}
    for name in ("designA", "designC"):
        cr = summaries[name][0].conditions
        gates[name] = (cr.get("T5b", 1).applicable, cr.get("T7b", 1).applicable)
    gates_ok = all(not a and not b for a, b in gates.values())
    ok = not counter and gates_ok
    record_criterion(7, ok, f"{len(theorem_suite)} DGPs; premises exercised {dict(sorted(exercised.items()))}; "
                            f"counterexamples {counter or 'none'}; (T5b, T7b) applicable on part 1: {gates}")
    assert ok


# --- 8 ---------------------------------------------------------------------------

def test_c08_variance_ordering():
    lines, ok = [], True
    for name in DESIGNS:
        v = est.asymptotic_variance(dgp.preset(name)[0], 10**6, SeedSpec(1))
        # d read as E[(.)^2], which makes sigma2_dr the semiparametric efficiency bound
        holds = v.ordering_holds("mean_of_sq") and v.sigma2_ipw2 <= v.sigma2_ipw1
        ok &= holds
        lines.append(f"{name}: {v.sigma2_dr_mean_of_sq:.6g} <= {v.sigma2_ipw2:.6g} <= {v.sigma2_ipw1:.6g} "
                     f"({holds}; square-of-mean reading {v.ordering_holds('sq_of_mean')})")
    record_criterion(8, ok, "; ".join(lines))
    assert ok


# --- 9 ---------------------------------------------------------------------------

def test_c09_micro_oracles():
    t = np.array([1.0, 0.0, 1.0, 0.0])
    data = dgp.Dataset(np.zeros((4, 1)), t, np.array([2.0, 1.0, 4.0, 3.0]))
    ps = np.array([0.5, 0.5, 0.8, 0.2])
    a, b = est.ipw1(data, ps), est.ipw2(data, ps)
    c = est.dr(data, ps, np.zeros(4), np.zeros(4))
    ok = (a.delta_hat == 0.8125 and abs(b.delta_hat - 1.0) < 1e-15
          and (c.mu1_hat, c.mu0_hat, c.delta_hat) == (a.mu1_hat, a.mu0_hat, a.delta_hat))
    record_criterion(9, ok, f"IPW1={a.delta_hat!r}, IPW2={b.delta_hat!r}, DR(0,0)={c.delta_hat!r}")
    assert ok


# --- 10 --------------------------------------------------------------------------

def test_c10_determinism(tmp_path):
    outs = []
    for jobs in (1, 4, 16):
        d = tmp_path / f"jobs{jobs}"
        subprocess.run([sys.executable, "-m", "ipwbias.cli", "simulate", "--design", "C", "--n", "500,1000",
                        "--reps", "64", "--seed", "123", "--jobs", str(jobs), "--out", str(d)],
                       check=True, capture_output=True)
        outs.append((d / "simulation.csv").read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    record_criterion(10, ok, f"simulate at jobs 1/4/16 byte-identical: {ok}")
    assert ok
