"""Data-generating processes: presets, true functions, sampling and config files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import randgen
from .errors import DgpValidityError, ParameterError
from .glm import Family, Link, TermSet, linpred
from .randgen import Bernoulli, Poisson, SeedSpec, Uniform


@dataclass(frozen=True)
class CovariateSpec:
    """Independent covariate marginals, one per component."""

    marginals: tuple

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if not self.marginals:
            raise ParameterError("need at least one covariate")
        for m in self.marginals:
            m.validate()

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def sample(self, stream, n) -> np.ndarray:
        return np.column_stack([randgen.sample(stream, m, n) for m in self.marginals])


@dataclass(frozen=True)
class GlmSpec:
    """A fully parameterised GLM: family, link, terms and coefficients."""

    family: Family
    link: Link
    terms: TermSet
    coef: tuple

    def __post_init__(self):
        object.__setattr__(self, "coef", tuple(float(c) for c in self.coef))
        if len(self.coef) != len(self.terms):
            raise ParameterError(
                f"{len(self.terms)} terms {self.terms.terms} but {len(self.coef)} coefficients")

    def mean(self, x):
        return self.link.inverse(linpred(self.terms, self.coef, x))


@dataclass(frozen=True)
class WorkingModel:
    """A working model to be fitted: family, link and terms but no coefficients."""

    family: Family
    link: Link
    terms: TermSet


@dataclass(frozen=True)
class MisspecSpec:
    ps: WorkingModel
    or1: WorkingModel
    or0: WorkingModel


@dataclass(frozen=True)
class DgpSpec:
    covariates: CovariateSpec
    ps: GlmSpec
    or1: GlmSpec
    or0: GlmSpec
    name: str = "custom"

    def __post_init__(self):
        if self.ps.family.name != "binomial":
            raise ParameterError("the propensity model must be binomial")
        for model in (self.ps, self.or1, self.or0):
            if model.terms.n_covariates_required > self.covariates.dim:
                raise ParameterError(
                    f"terms {model.terms.terms} exceed {self.covariates.dim} covariates")

    def outcome_model(self, t: int) -> GlmSpec:
        if t not in (0, 1):
            raise ParameterError("arm must be 0 or 1")
        return self.or1 if t == 1 else self.or0

    def working_truth(self) -> MisspecSpec:
        """Working models identical to the truth (no misspecification)."""
        wm = lambda g: WorkingModel(g.family, g.link, g.terms)
        return MisspecSpec(wm(self.ps), wm(self.or1), wm(self.or0))


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    t: np.ndarray
    y: np.ndarray
    y0: Optional[np.ndarray] = None
    y1: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.t)

    def observational(self) -> "Dataset":
        return Dataset(self.x, self.t, self.y)


def _check_dim(spec: DgpSpec, x):
    x = np.asarray(x, dtype=float)
    k = x.shape[-1] if x.ndim else 1
    if k != spec.covariates.dim:
        raise ParameterError(f"expected {spec.covariates.dim} covariates, got {k}")
    return x


def true_ps(spec: DgpSpec, x):
    """True propensity score e(x), strictly inside (0, 1)."""
    return spec.ps.mean(_check_dim(spec, x))


def true_or(spec: DgpSpec, t: int, x):
    """True conditional mean of the arm-``t`` potential outcome."""
    model = spec.outcome_model(t)
    mu = model.mean(_check_dim(spec, x))
    if model.family.name in ("poisson", "gamma") and np.any(np.asarray(mu) <= 0):
        raise DgpValidityError(f"{model.family.name} outcome mean must be positive")
    return mu


def _draw_outcome(stream, model: GlmSpec, mu):
    fam = model.family
    n = len(mu)
    if fam.name == "gaussian":
        sd = fam.dispersion if fam.dispersion is not None else 1.0
        return mu + stream.normal(0.0, sd, size=n)
    if fam.name == "poisson":
        return randgen.sample(stream, Poisson(mu), n)
    if fam.name == "gamma":
        shape = fam.dispersion if fam.dispersion is not None else 2.0
        return randgen.sample(stream, randgen.Gamma(shape, mu), n)
    return randgen.sample(stream, Bernoulli(mu), n)


def sample_dataset(spec: DgpSpec, n: int, seed: SeedSpec, keep_oracle: bool = True) -> Dataset:
    """Draw ``n`` i.i.d. rows (X, T, Y) with optional potential-outcome columns.

    Draw order within the stream is fixed: covariates, treatment, Y(0), Y(1).
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    stream = randgen.make_stream(seed)
    x = spec.covariates.sample(stream, n)
    t = randgen.sample(stream, Bernoulli(true_ps(spec, x)), n)
    y0 = _draw_outcome(stream, spec.or0, true_or(spec, 0, x))
    y1 = _draw_outcome(stream, spec.or1, true_or(spec, 1, x))
    y = np.where(t == 1, y1, y0)
    if keep_oracle:
        return Dataset(x, t, y, y0, y1)
    return Dataset(x, t, y)


@dataclass(frozen=True)
class OverlapReport:
    min: float
    max: float
    violations: int
    eta: float


def overlap_report(ps_values, eta: float = 0.01) -> OverlapReport:
    """Range of propensity values and how many fall outside ``[eta, 1 - eta]``."""
    ps = np.asarray(ps_values, dtype=float).ravel()
    if ps.size == 0:
        raise ParameterError("overlap_report needs at least one value")
    if not 0 < eta < 0.5:
        raise ParameterError("eta must lie in (0, 0.5)")
    bad = int(np.count_nonzero((ps < eta) | (ps > 1 - eta)))
    return OverlapReport(float(ps.min()), float(ps.max()), bad, eta)


# --- presets -------------------------------------------------------------

_FULL = TermSet(("1", "X1", "X2", "X1^2", "X2^2", "X3"))
_BETA = (-1, 0.6, 0.1, 0.9, 0.1, 0.7)
_ALPHA0 = (3, 0.5, 0.2, 0.5, 0.2, 0.2)
_ALPHA1 = (4, 1.1, 0.1, 0.5, 0.3, 0.2)

DEFAULT_GAUSS_SD = 1.0
DEFAULT_GAMMA_SHAPE = 2.0

PRESETS = ("example2", "designA", "designB", "designC")


def _design_covariates():
    return CovariateSpec((Uniform(1.0, 4.0), Poisson(3.0), Bernoulli(0.4)))


def preset(name: str, gauss_sd: float = DEFAULT_GAUSS_SD,
           gamma_shape: float = DEFAULT_GAMMA_SHAPE):
    """Return ``(DgpSpec, MisspecSpec)`` for a named preset.

    ``example2`` has one Uniform(-2, 2) covariate, a logit propensity, Poisson
    outcomes with log links, and a cloglog / linear working pair. The three
    designs share covariates (Uniform(1,4), Poisson(3), Bernoulli(0.4)) and
    second-order true models, and differ in which terms and links the
    working models get wrong.
    """
    key = {"a": "designA", "b": "designB", "c": "designC"}.get(name.lower(), name)
    binom = Family("binomial")
    gauss = Family("gaussian", gauss_sd)
    ident = Link("identity")
    if key == "example2":
        cov = CovariateSpec((Uniform(-2.0, 2.0),))
        lin = TermSet(("1", "X1"))
        pois, log = Family("poisson"), Link("log")
        spec = DgpSpec(cov,
                       GlmSpec(binom, Link("logit"), lin, (-0.5, 1.0)),
                       GlmSpec(pois, log, lin, (2.3, 0.14)),
                       GlmSpec(pois, log, lin, (1.4, 0.20)),
                       name="example2")
        mis = MisspecSpec(WorkingModel(binom, Link("cloglog"), lin),
                          WorkingModel(gauss, ident, lin),
                          WorkingModel(gauss, ident, lin))
        return spec, mis
    if key not in ("designA", "designB", "designC"):
        raise ParameterError(f"unknown preset {name!r}; choose from {PRESETS}")

    if key == "designC":
        ps_link, out_family = Link("cauchit"), Family("gamma", gamma_shape)
    else:
        ps_link, out_family = Link("logit"), gauss
    spec = DgpSpec(_design_covariates(),
                   GlmSpec(binom, ps_link, _FULL, _BETA),
                   GlmSpec(out_family, ident, _FULL, _ALPHA1),
                   GlmSpec(out_family, ident, _FULL, _ALPHA0),
                   name=key)
    if key == "designA":
        work = TermSet(("1", "X1", "X2", "X2^2", "X3"))
    else:
        work = TermSet(("1", "X1", "X2", "X3"))
    mis = MisspecSpec(WorkingModel(binom, Link("logit"), work),
                      WorkingModel(gauss, ident, work),
                      WorkingModel(gauss, ident, work))
    return spec, mis


# --- config files ----------------------------------------------------------

def _glm_to_dict(model, coef_key=None):
    d = {"family": model.family.name, "link": model.link.name, "terms": list(model.terms.terms)}
    if coef_key:
        d[coef_key] = list(model.coef)
    return d


def to_config(spec: DgpSpec, misspec: Optional[MisspecSpec] = None) -> dict:
    noise = {}
    for m in (spec.or1, spec.or0):
        if m.family.name == "gaussian":
            noise["gauss_sd"] = m.family.dispersion if m.family.dispersion is not None else DEFAULT_GAUSS_SD
        if m.family.name == "gamma":
            noise["gamma_shape"] = m.family.dispersion if m.family.dispersion is not None else DEFAULT_GAMMA_SHAPE
    cfg = {
        "name": spec.name,
        "covariates": [randgen.dist_to_dict(m) for m in spec.covariates.marginals],
        "ps_true": _glm_to_dict(spec.ps, "beta"),
        "or_true": {"t0": _glm_to_dict(spec.or0, "alpha"), "t1": _glm_to_dict(spec.or1, "alpha")},
        "noise": noise,
    }
    if misspec is not None:
        cfg["misspec"] = {
            "ps": _glm_to_dict(misspec.ps),
            "or": {"t0": _glm_to_dict(misspec.or0), "t1": _glm_to_dict(misspec.or1)},
        }
    return cfg


def _family(name, noise):
    if name == "gaussian":
        return Family(name, float(noise.get("gauss_sd", DEFAULT_GAUSS_SD)))
    if name == "gamma":
        return Family(name, float(noise.get("gamma_shape", DEFAULT_GAMMA_SHAPE)))
    return Family(name)


def from_config(cfg: dict):
    """Build ``(DgpSpec, MisspecSpec or None)`` from a config dictionary."""
    try:
        noise = cfg.get("noise", {})
        cov = CovariateSpec(tuple(randgen.dist_from_dict(d) for d in cfg["covariates"]))

        def glm(d, key):
            return GlmSpec(_family(d["family"], noise), Link(d["link"]), TermSet(tuple(d["terms"])), d[key])

        spec = DgpSpec(cov, glm(cfg["ps_true"], "beta"), glm(cfg["or_true"]["t1"], "alpha"),
                       glm(cfg["or_true"]["t0"], "alpha"), name=cfg.get("name", "custom"))
        mis = None
        if "misspec" in cfg:
            m = cfg["misspec"]

            def wm(d):
                return WorkingModel(_family(d["family"], noise), Link(d["link"]), TermSet(tuple(d["terms"])))

            mis = MisspecSpec(wm(m["ps"]), wm(m["or"]["t1"]), wm(m["or"]["t0"]))
    except KeyError as exc:
        raise ParameterError(f"config is missing key {exc}") from None
    return spec, mis


def load_config(path):
    return from_config(json.loads(Path(path).read_text()))


def save_config(path, spec: DgpSpec, misspec: Optional[MisspecSpec] = None):
    Path(path).write_text(json.dumps(to_config(spec, misspec), indent=2) + "\n")
