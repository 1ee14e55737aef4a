"""Large-sample bias of the three estimators when every working model is wrong.

The workflow is

1. :func:`pseudo_true` fits the working models on one large sample and keeps
   the limits ``e*(x)`` and ``mu*_t(x)``;
2. :func:`bias_limit` / :func:`bias_parts` evaluate the probability-limit
   bias of each estimator as expectations over a fresh covariate sample
   (or Gauss-Legendre nodes for one uniform covariate);
3. :func:`components` tabulates the ratio/covariance pieces the bias
   comparisons are built from;
4. :func:`check_conditions` evaluates the premises and conclusions of the
   DR-versus-IPW bias comparisons for each potential-outcome part.

Notation used in variable names: ``r`` is the propensity-model ratio
(``e/e*`` for the treated part, ``(1-e)/(1-e*)`` for the control part),
``m`` the true conditional mean and ``ms`` the working-model limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import dgp as _dgp
from . import glm
from .errors import DegenerateSampleError, OverlapError, ParameterError, UnsupportedError
from .randgen import SeedSpec, Uniform

ESTIMATORS = ("IPW1", "IPW2", "DR")

# stream purposes derived from the caller's seed
_FIT, _EVAL = 1, 2


# --- quadrature ------------------------------------------------------------

def gauss_legendre(dist, nodes: int = 256):
    """Nodes and probability weights for expectations under a uniform law."""
    if not isinstance(dist, Uniform):
        raise UnsupportedError(f"quadrature supports Uniform covariates only, got {type(dist).__name__}")
    if nodes < 32:
        raise ParameterError("use at least 32 quadrature nodes")
    xi, wi = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (dist.high - dist.low)
    return half * xi + 0.5 * (dist.high + dist.low), 0.5 * wi


def quadrature_expect(f: Callable, dist, nodes: int = 256) -> float:
    """Gauss-Legendre approximation of ``E[f(X)]`` for ``X ~ Uniform(a, b)``."""
    x, w = gauss_legendre(dist, nodes)
    return float(np.dot(w, f(x)))


# --- pseudo-true limits ------------------------------------------------------

@dataclass(frozen=True)
class PseudoTrue:
    """Limits of the working-model fits.

    ``mu1_star`` / ``mu0_star`` are ``E[mu*_t(X)]`` over the fitting sample.
    """

    ps_model: glm.FittedModel
    or1_model: glm.FittedModel
    or0_model: glm.FittedModel
    mu1_star: float
    mu0_star: float
    N: int
    seed: Optional[SeedSpec]
    method: str = "montecarlo"
    e_star_min: float = float("nan")
    e_star_max: float = float("nan")

    @property
    def beta_star(self):
        return self.ps_model.coefficients

    @property
    def alpha1_star(self):
        return self.or1_model.coefficients

    @property
    def alpha0_star(self):
        return self.or0_model.coefficients

    @property
    def converged(self) -> bool:
        return all(m.converged for m in (self.ps_model, self.or1_model, self.or0_model))

    def e_star(self, x):
        return self.ps_model.predict(x)

    def mu_star(self, t: int, x):
        return (self.or1_model if t == 1 else self.or0_model).predict(x)

    def overlap_holds(self, nu: float = 1e-4) -> bool:
        return self.e_star_min > nu and self.e_star_max < 1 - nu


def _as_rows(x):
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _frozen(model: _dgp.GlmSpec) -> glm.FittedModel:
    return glm.FittedModel(model.terms, model.link, model.family, np.array(model.coef))


def pseudo_true(spec: _dgp.DgpSpec, misspec: _dgp.MisspecSpec, N: int = 10**6,
                seed: SeedSpec = SeedSpec()) -> PseudoTrue:
    """Fit the working models on one size-``N`` sample drawn from ``spec``.

    The propensity model is fitted by binomial quasi-likelihood on all rows;
    each outcome model on its own arm only.
    """
    if N < 10**5:
        raise ParameterError("pseudo-true limits need N >= 1e5")
    data = _dgp.sample_dataset(spec, N, seed.child(_FIT), keep_oracle=False)
    ps = glm.fit(misspec.ps.terms, data.x, data.t, misspec.ps.family, misspec.ps.link)
    fits = {}
    for t, wm in ((1, misspec.or1), (0, misspec.or0)):
        arm = data.t == t
        if not arm.any():
            raise DegenerateSampleError(f"arm T={t} is empty in the fitting sample")
        fits[t] = glm.fit(wm.terms, data.x[arm], data.y[arm], wm.family, wm.link)
    es = ps.predict(data.x)
    return PseudoTrue(ps, fits[1], fits[0],
                      float(np.mean(fits[1].predict(data.x))),
                      float(np.mean(fits[0].predict(data.x))),
                      N, seed, "montecarlo", float(es.min()), float(es.max()))


def pseudo_true_quadrature(spec: _dgp.DgpSpec, misspec: _dgp.MisspecSpec,
                           nodes: int = 256) -> PseudoTrue:
    """Population limits for a single uniform covariate.

    Solves the working models' estimating equations with expectations taken
    by Gauss-Legendre quadrature: the propensity model is fitted to the
    response ``e(x)`` and each outcome model to ``mu_t(x)`` with arm weights
    ``e(x)`` or ``1 - e(x)``.
    """
    if spec.covariates.dim != 1:
        raise UnsupportedError("quadrature limits need a single covariate")
    x, w = gauss_legendre(spec.covariates.marginals[0], nodes)
    xr = x[:, None]
    e = _dgp.true_ps(spec, xr)
    ps = glm.fit(misspec.ps.terms, xr, e, misspec.ps.family, misspec.ps.link, weights=w)
    or1 = glm.fit(misspec.or1.terms, xr, _dgp.true_or(spec, 1, xr), misspec.or1.family,
                  misspec.or1.link, weights=w * e)
    or0 = glm.fit(misspec.or0.terms, xr, _dgp.true_or(spec, 0, xr), misspec.or0.family,
                  misspec.or0.link, weights=w * (1 - e))
    es = ps.predict(xr)
    return PseudoTrue(ps, or1, or0, float(w @ or1.predict(xr)), float(w @ or0.predict(xr)),
                      nodes, None, "quadrature", float(es.min()), float(es.max()))


def _refresh_means(pt: PseudoTrue, spec) -> PseudoTrue:
    if pt.method == "quadrature":
        x, w = gauss_legendre(spec.covariates.marginals[0], pt.N)
        x = x[:, None]
    else:
        from . import randgen
        stream = randgen.make_stream(pt.seed.child(_FIT))
        x = spec.covariates.sample(stream, pt.N)
        w = np.full(pt.N, 1.0 / pt.N)
    es = pt.ps_model.predict(x)
    return replace(pt, mu1_star=float(w @ pt.or1_model.predict(x)),
                   mu0_star=float(w @ pt.or0_model.predict(x)),
                   e_star_min=float(es.min()), e_star_max=float(es.max()))


def with_true_ps(pt: PseudoTrue, spec) -> PseudoTrue:
    """Replace the propensity limit by the true model, so ``e* == e`` exactly."""
    return _refresh_means(replace(pt, ps_model=_frozen(spec.ps)), spec)


def with_true_or(pt: PseudoTrue, spec) -> PseudoTrue:
    """Replace both outcome limits by the true models, so ``mu*_t == mu_t`` exactly."""
    return _refresh_means(replace(pt, or1_model=_frozen(spec.or1), or0_model=_frozen(spec.or0)), spec)


# --- functionals -------------------------------------------------------------

class _Sample:
    """True and limiting functions evaluated on an expectation sample.

    Monte Carlo samples carry equal weights and standard errors; quadrature
    nodes carry Gauss-Legendre weights and report zero error.
    """

    def __init__(self, spec, pt: PseudoTrue, method: str, N: int, seed: SeedSpec,
                 nodes: int, nu: Optional[float]):
        if method == "montecarlo":
            from . import randgen
            stream = randgen.make_stream(seed.child(_EVAL))
            self.x = spec.covariates.sample(stream, N)
            self.w = None
            self.n = N
        elif method == "quadrature":
            if spec.covariates.dim != 1:
                raise UnsupportedError("quadrature needs a single covariate")
            x, self.w = gauss_legendre(spec.covariates.marginals[0], nodes)
            self.x = x[:, None]
            self.n = nodes
        else:
            raise ParameterError(f"unknown method {method!r}")
        self.method = method
        x = self.x
        self.e = _dgp.true_ps(spec, x)
        self.es = pt.e_star(x)
        if nu is not None and (self.es.min() <= nu or self.es.max() >= 1 - nu):
            raise OverlapError(
                f"limiting propensity leaves [{nu}, {1 - nu}]: range "
                f"[{self.es.min():.3g}, {self.es.max():.3g}]")
        self.m = {1: _dgp.true_or(spec, 1, x), 0: _dgp.true_or(spec, 0, x)}
        self.ms = {1: pt.mu_star(1, x), 0: pt.mu_star(0, x)}
        self.r = {1: self.e / self.es, 0: (1 - self.e) / (1 - self.es)}

    def mean(self, a) -> float:
        if self.w is None:
            return float(np.mean(a))
        return float(np.dot(self.w, a))

    def se(self, influence) -> float:
        """Standard error of a mean-like statistic from its influence values."""
        if self.w is None:
            return float(np.std(influence) / math.sqrt(self.n))
        return 0.0

    def cov(self, a, b) -> float:
        return self.mean((a - self.mean(a)) * (b - self.mean(b)))


@dataclass(frozen=True)
class EstimatorBias:
    """Bias of one estimator; ``total == part1 + part2``.

    ``part2`` is the control-arm contribution to the total. ``part2_analog``
    is the same quantity written with the control-part substitution
    (``(1-e)/(1-e*)`` for ``e/e*`` and ``mu_0`` for ``mu_1``), which is the
    negative of ``part2``.
    """

    estimator: str
    total: float
    part1: float
    part2: float
    se_total: float
    se_part1: float
    se_part2: float

    @property
    def part2_analog(self) -> float:
        return -self.part2


@dataclass(frozen=True)
class BiasReport:
    estimators: dict
    method: str
    N: int

    def __getitem__(self, tag) -> EstimatorBias:
        return self.estimators[tag]

    def totals(self) -> dict:
        return {k: v.total for k, v in self.estimators.items()}


def _part_influences(s: _Sample, t: int):
    """Per-part bias values and influence arrays, written with the part-``t`` substitution."""
    r, m, ms = s.r[t], s.m[t], s.ms[t]
    Er = s.mean(r)
    Erm = s.mean(r * m)
    Em = s.mean(m)
    ipw1 = (r - 1) * m
    ratio = Erm / Er
    ipw2_infl = (r * m - ratio * r) / Er - (m - Em)
    dr_ = (r - 1) * (m - ms)
    return {
        "IPW1": (s.mean(ipw1), ipw1),
        "IPW2": (ratio - Em, ipw2_infl),
        "DR": (s.mean(dr_), dr_),
    }


def _bias_from_sample(s: _Sample, estimators) -> BiasReport:
    p1 = _part_influences(s, 1)
    p0 = _part_influences(s, 0)
    out = {}
    for tag in estimators:
        v1, i1 = p1[tag]
        v0, i0 = p0[tag]
        # the control-part analog enters the total with a minus sign
        out[tag] = EstimatorBias(tag, v1 - v0, v1, -v0, s.se(i1 - i0), s.se(i1), s.se(i0))
    return BiasReport(out, s.method, s.n)


def _estimator_list(estimator):
    if estimator is None:
        return ESTIMATORS
    tags = (estimator,) if isinstance(estimator, str) else tuple(estimator)
    for tag in tags:
        if tag not in ESTIMATORS:
            raise ParameterError(f"unknown estimator {tag!r}")
    return tags


def bias_limit(spec, pt: PseudoTrue, estimator=None, N: int = 10**6, seed: SeedSpec = SeedSpec(),
               method: str = "montecarlo", nodes: int = 256, nu: Optional[float] = 0.01) -> BiasReport:
    """Probability-limit bias of IPW1, IPW2 and/or DR.

    Only the true and limiting functions are needed (no outcome noise), so
    the expectations run over a covariate sample alone. ``nu`` is the
    overlap threshold for ``e*``; pass ``None`` to skip the check.

    Raises
    ------
    OverlapError
        If ``e*`` leaves ``[nu, 1 - nu]`` on the expectation sample.
    """
    s = _Sample(spec, pt, method, N, seed, nodes, nu)
    return _bias_from_sample(s, _estimator_list(estimator))


def bias_parts(spec, pt: PseudoTrue, N: int = 10**6, seed: SeedSpec = SeedSpec(),
               method: str = "montecarlo", nodes: int = 256, nu: Optional[float] = 0.01) -> dict:
    """``{estimator: (part1, part2)}`` where the parts sum to the total bias."""
    rep = bias_limit(spec, pt, None, N, seed, method, nodes, nu)
    return {k: (v.part1, v.part2) for k, v in rep.estimators.items()}


# --- component table -------------------------------------------------------

@dataclass(frozen=True)
class PartComponents:
    """Expectations and covariances for one potential-outcome part.

    Attributes mirror the quantities the bias comparisons use:
    ``E_ratio = E[r]``, ``cov_mu = cov(r, m)``, ``cov_mustar = cov(r, ms)``,
    ``scaled_mean = E[r - 1] * mu``, ``E_rm1_mu = E[(r-1) m]``,
    ``E_rm1_mustar = E[(r-1) ms]``, ``dr_part = E[(r-1)(m - ms)]`` and
    ``ipw2_part = cov(r, m) / E[r]``. ``se`` maps each name to its Monte Carlo
    standard error.
    """

    t: int
    E_ratio: float
    cov_mu: float
    cov_mustar: float
    scaled_mean: float
    E_rm1_mu: float
    E_rm1_mustar: float
    mu: float
    mu_star: float
    dr_part: float
    ipw2_part: float
    se: dict = field(default_factory=dict, compare=False)

    def covariance_identity_gap(self, which: str = "mu") -> float:
        """``E[(r-1)m] - cov(r, m) - (E[r]-1) E[m]``; zero up to rounding."""
        if which == "mu":
            return self.E_rm1_mu - self.cov_mu - (self.E_ratio - 1) * self.mu
        return self.E_rm1_mustar - self.cov_mustar - (self.E_ratio - 1) * self.mu_star


@dataclass(frozen=True)
class ComponentTable:
    parts: dict
    method: str
    N: int

    def __getitem__(self, t) -> PartComponents:
        return self.parts[t]


def _components_from_sample(s: _Sample) -> ComponentTable:
    parts = {}
    for t in (1, 0):
        r, m, ms = s.r[t], s.m[t], s.ms[t]
        Er, Em, Ems = s.mean(r), s.mean(m), s.mean(ms)
        rc, mc, msc = r - Er, m - Em, ms - Ems
        cov_m = s.mean(rc * mc)
        cov_ms = s.mean(rc * msc)
        vals = dict(
            E_ratio=(Er, r),
            cov_mu=(cov_m, rc * mc),
            cov_mustar=(cov_ms, rc * msc),
            scaled_mean=((Er - 1) * Em, rc * Em + (Er - 1) * mc),
            E_rm1_mu=(s.mean((r - 1) * m), (r - 1) * m),
            E_rm1_mustar=(s.mean((r - 1) * ms), (r - 1) * ms),
            mu=(Em, m),
            mu_star=(Ems, ms),
            dr_part=(s.mean((r - 1) * (m - ms)), (r - 1) * (m - ms)),
            ipw2_part=(cov_m / Er, (rc * mc) / Er - cov_m * r / Er**2),
        )
        parts[t] = PartComponents(t, **{k: v for k, (v, _) in vals.items()},
                                  se={k: s.se(i) for k, (_, i) in vals.items()})
    return ComponentTable(parts, s.method, s.n)


def components(spec, pt: PseudoTrue, N: int = 10**6, seed: SeedSpec = SeedSpec(),
               method: str = "montecarlo", nodes: int = 256, nu: Optional[float] = 0.01) -> ComponentTable:
    """Tabulate every ratio, covariance and scaled expectation for both parts."""
    return _components_from_sample(_Sample(spec, pt, method, N, seed, nodes, nu))


def evaluate(spec, pt: PseudoTrue, N: int = 10**6, seed: SeedSpec = SeedSpec(),
             method: str = "montecarlo", nodes: int = 256, nu: Optional[float] = 0.01):
    """``(BiasReport, ComponentTable)`` from one shared expectation sample."""
    s = _Sample(spec, pt, method, N, seed, nodes, nu)
    return _bias_from_sample(s, ESTIMATORS), _components_from_sample(s)


# --- conditions --------------------------------------------------------------

CONDITIONS = ("T4", "T5a", "T5b", "T6", "T7a", "T7b")
SUFFICIENT = ("T5a", "T5b", "T7a", "T7b")


def _lt(lhs, rhs, se, k):
    """Verdict for ``lhs < rhs`` with guard band ``k`` standard errors.

    Returns ``(verdict, margin_in_se)`` where verdict is True, False or None
    (inconclusive).
    """
    diff = rhs - lhs
    if se > 0:
        z = diff / se
    else:
        z = math.copysign(math.inf, diff) if diff != 0 else 0.0
    if z >= k:
        return True, z
    if z <= -k:
        return False, z
    return None, z


def _all(verdicts):
    vs = [v for v, _ in verdicts]
    z = min(m for _, m in verdicts)
    if all(v is True for v in vs):
        return True, z
    if any(v is False for v in vs):
        return False, z
    return None, z


@dataclass(frozen=True)
class ConditionEntry:
    condition: str
    part: int
    applicable: bool
    premise: dict
    premise_holds: Optional[bool]
    premise_margin: float
    conclusion: dict
    conclusion_holds: Optional[bool]
    conclusion_margin: float
    tolerance: float
    note: str = ""

    def is_counterexample(self, min_margin: float = 5.0) -> bool:
        """Premise clearly holds yet the conclusion clearly fails."""
        return (self.applicable and self.premise_holds is True
                and self.premise_margin >= min_margin and self.conclusion_holds is False)


@dataclass(frozen=True)
class ConditionReport:
    entries: tuple
    tol_eq: float
    tol_mc: float

    def get(self, condition: str, part: int = 1) -> ConditionEntry:
        for e in self.entries:
            if e.condition == condition and e.part == part:
                return e
        raise KeyError((condition, part))

    def counterexamples(self, min_margin: float = 5.0):
        return [e for e in self.entries if e.is_counterexample(min_margin)]


def _sign(v):
    return (v > 0) - (v < 0)


def check_conditions(table: ComponentTable, tol_eq: float = 0.01, tol_mc: float = 2.0) -> ConditionReport:
    """Evaluate premises and conclusions of the DR-versus-IPW bias comparisons.

    For each part ``t``, with ``A = E[(r-1)(m-ms)]`` (DR part),
    ``B = E[(r-1)m]`` (IPW1 part), ``C = E[(r-1)ms]`` and
    ``B2 = cov(r, m)/E[r]`` (IPW2 part):

    ========  ===============================================  ==========================
    key       premise                                          conclusion
    ========  ===============================================  ==========================
    T4        ``|A| < |B|``                                     ``|C| < 2|B|``
    T5a       ``mu = mu*`` and ``0 < E[r-1]mu < cov(r,ms)``      ``|A| < |B|``
              ``< cov(r,m)``
    T5b       ``|C| < 2|B|``, C and B share a sign              ``|A| < |B|``
    T6        ``|A| < |B2|``                                    ``B - |B2| < C < B + |B2|``
    T7a       ``mu = mu*`` and ``|cov(r,m) - cov(r,ms)|``       ``|A| < |B2|``
              ``< |B2|``
    T7b       ``|C| < |B + B2|``, B and cov(r,m) share a sign   ``|A| < |B2|``
    ========  ===============================================  ==========================

    ``mu = mu*`` is read as ``|mu - mu*| <= tol_eq * |mu|`` and gates
    ``applicable`` for T5a/T7a. T5b and T7b are applicable only when ``B``
    and ``cov(r, m)`` share a sign.
    Inequalities whose margin is within ``tol_mc`` standard errors are
    reported as inconclusive (``None``).
    """
    k = tol_mc
    out = []
    for t in (1, 0):
        p = table[t]
        se = p.se
        A, B, C, B2 = p.dr_part, p.E_rm1_mu, p.E_rm1_mustar, p.ipw2_part
        sA, sB, sC, sB2 = (se.get(n, 0.0) for n in ("dr_part", "E_rm1_mu", "E_rm1_mustar", "ipw2_part"))
        sCm, sCs, sS = se.get("cov_mu", 0.0), se.get("cov_mustar", 0.0), se.get("scaled_mean", 0.0)
        Er = p.E_ratio
        mean_equal = abs(p.mu - p.mu_star) <= tol_eq * abs(p.mu)

        dr_vs_ipw1 = _lt(abs(A), abs(B), sA + sB, k)
        dr_vs_ipw2 = _lt(abs(A), abs(B2), sA + sB2, k)
        double_bound = _lt(abs(C), 2 * abs(B), sC + 2 * sB, k)
        values_ipw1 = {"abs_dr_part": abs(A), "abs_E_rm1_mu": abs(B)}
        values_ipw2 = {"abs_dr_part": abs(A), "abs_ipw2_part": abs(B2)}

        out.append(ConditionEntry(
            "T4", t, True, values_ipw1, *dr_vs_ipw1,
            {"abs_E_rm1_mustar": abs(C), "twice_abs_E_rm1_mu": 2 * abs(B)}, *double_bound, k))

        prem = _all([_lt(0.0, p.scaled_mean, sS, k), _lt(p.scaled_mean, p.cov_mustar, sS + sCs, k),
                     _lt(p.cov_mustar, p.cov_mu, sCs + sCm, k)])
        out.append(ConditionEntry(
            "T5a", t, mean_equal,
            {"mu": p.mu, "mu_star": p.mu_star, "scaled_mean": p.scaled_mean,
             "cov_mustar": p.cov_mustar, "cov_mu": p.cov_mu},
            *prem, values_ipw1, *dr_vs_ipw1, k,
            "" if mean_equal else "mu and mu_star differ by more than tol_eq"))

        # the b) variants are gated on E[(r-1)m] and cov(r, m) sharing a sign
        same = _sign(B) == _sign(p.cov_mu) != 0
        s = _sign(B) or 1
        prem = _all([double_bound, _lt(0.0, s * C, sC, k), _lt(0.0, s * B, sB, k)])
        out.append(ConditionEntry(
            "T5b", t, same,
            {"E_rm1_mustar": C, "E_rm1_mu": B, "cov_mu": p.cov_mu, "twice_abs_E_rm1_mu": 2 * abs(B)},
            *prem, values_ipw1, *dr_vs_ipw1, k,
            "" if same else "E[(r-1)mu] and cov(r, mu) differ in sign"))

        half = abs(B2)
        lo, hi = B - half, B + half
        interval = _all([_lt(lo, C, sB + sB2 + sC, k), _lt(C, hi, sB + sB2 + sC, k)])
        out.append(ConditionEntry(
            "T6", t, True, values_ipw2, *dr_vs_ipw2,
            {"lower": lo, "E_rm1_mustar": C, "upper": hi}, *interval, k))

        band = abs(p.cov_mu / Er)
        prem = _all([_lt(p.cov_mu - band, p.cov_mustar, sCm + sB2 + sCs, k),
                     _lt(p.cov_mustar, p.cov_mu + band, sCm + sB2 + sCs, k)])
        out.append(ConditionEntry(
            "T7a", t, mean_equal,
            {"mu": p.mu, "mu_star": p.mu_star, "lower": p.cov_mu - band,
             "cov_mustar": p.cov_mustar, "upper": p.cov_mu + band},
            *prem, values_ipw2, *dr_vs_ipw2, k,
            "" if mean_equal else "mu and mu_star differ by more than tol_eq"))

        same = _sign(B) == _sign(p.cov_mu) != 0
        out.append(ConditionEntry(
            "T7b", t, same,
            {"E_rm1_mu": B, "cov_mu": p.cov_mu, "abs_E_rm1_mustar": abs(C), "abs_bound": abs(B + B2)},
            *_lt(abs(C), abs(B + B2), sC + sB + sB2, k), values_ipw2, *dr_vs_ipw2, k,
            "" if same else "E[(r-1)mu] and cov(r, mu) differ in sign"))
    return ConditionReport(tuple(out), tol_eq, tol_mc)


# --- curves -------------------------------------------------------------------

CURVE_COLUMNS = ("x", "e", "e_star", "ratio", "mu1", "mu1_star", "mu0", "mu0_star")


def emit_curves(spec, pt: PseudoTrue, grid: int = 201) -> dict:
    """Grid evaluation of the true and limiting functions of a one-covariate spec."""
    if spec.covariates.dim != 1:
        raise UnsupportedError("curves are only defined for a single covariate")
    dist = spec.covariates.marginals[0]
    if not isinstance(dist, Uniform):
        raise UnsupportedError("curves need a bounded (uniform) covariate")
    if grid < 2:
        raise ParameterError("grid needs at least two points")
    x = np.linspace(dist.low, dist.high, grid)
    xr = x[:, None]
    e = _dgp.true_ps(spec, xr)
    es = pt.e_star(xr)
    return {
        "x": x, "e": e, "e_star": es, "ratio": e / es,
        "mu1": _dgp.true_or(spec, 1, xr), "mu1_star": pt.mu_star(1, xr),
        "mu0": _dgp.true_or(spec, 0, xr), "mu0_star": pt.mu_star(0, xr),
    }


# --- tabular export -----------------------------------------------------------

def _ratio_label(t):
    return "e/e*" if t == 1 else "(1-e)/(1-e*)"


def table_rows(bias: BiasReport, table: ComponentTable):
    """``(label, value, se)`` rows in the order of the asymptotic summary table."""
    rows = []
    p1, p0 = table[1], table[0]
    for t, p in ((1, p1), (0, p0)):
        rows.append((f"mu_{t}", p.mu, p.se.get("mu", 0.0)))
        rows.append((f"mu*_{t}", p.mu_star, p.se.get("mu_star", 0.0)))
    for tag in ESTIMATORS:
        rows.append((f"Bias({tag}*)", bias[tag].total, bias[tag].se_total))
    for t, p in ((1, p1), (0, p0)):
        part = 1 if t == 1 else 2
        for tag in ESTIMATORS:
            b = bias[tag]
            value, se = (b.part1, b.se_part1) if t == 1 else (b.part2, b.se_part2)
            rows.append((f"Bias_{part}({tag}*)", value, se))
        ratio = _ratio_label(t)
        for label, name in ((f"E[{ratio}]", "E_ratio"),
                            (f"cov[{ratio}, mu_{t}]", "cov_mu"),
                            (f"cov[{ratio}, mu*_{t}]", "cov_mustar"),
                            (f"E[{ratio}-1]mu_{t}", "scaled_mean"),
                            (f"E[({ratio}-1)mu_{t}]", "E_rm1_mu"),
                            (f"E[({ratio}-1)mu*_{t}]", "E_rm1_mustar")):
            rows.append((label, getattr(p, name), p.se.get(name, 0.0)))
    return rows


def condition_rows(report: ConditionReport):
    """Flat records of a :class:`ConditionReport`, one per condition and part."""
    def verdict(v):
        return "inconclusive" if v is None else ("holds" if v else "fails")

    out = []
    for e in report.entries:
        out.append({
            "condition": e.condition, "part": e.part, "applicable": e.applicable,
            "premise": ";".join(f"{k}={v!r}" for k, v in e.premise.items()),
            "premise_verdict": verdict(e.premise_holds), "premise_margin_se": e.premise_margin,
            "conclusion": ";".join(f"{k}={v!r}" for k, v in e.conclusion.items()),
            "conclusion_verdict": verdict(e.conclusion_holds), "conclusion_margin_se": e.conclusion_margin,
            "tolerance_se": e.tolerance, "note": e.note,
        })
    return out
