"""Generalized linear models: links, families, design terms and IRLS fitting.

The same engine evaluates true data-generating models and fits (possibly
misspecified) working models by maximum quasi-likelihood.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import ConvergenceError, DataError, ParameterError, RankError, UnsupportedError

# Binomial means are saturated to the open unit interval at the last
# representable doubles instead of returning exact 0 or 1.
_MU_LO = np.finfo(float).tiny
_MU_HI = np.nextafter(1.0, 0.0)

BINOMIAL_LINKS = ("logit", "probit", "cloglog", "cauchit")
LINKS = BINOMIAL_LINKS + ("log", "identity")


@dataclass(frozen=True)
class Link:
    name: str

    def __post_init__(self):
        if self.name not in LINKS:
            raise ParameterError(f"unknown link {self.name!r}; choose from {LINKS}")

    @property
    def is_binomial(self) -> bool:
        return self.name in BINOMIAL_LINKS

    def inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        name = self.name
        if name == "identity":
            return eta.copy() if eta.ndim else float(eta)
        if name == "log":
            return np.exp(eta)
        if name == "logit":
            mu = special.expit(eta)
        elif name == "probit":
            mu = special.ndtr(eta)
        elif name == "cloglog":
            with np.errstate(over="ignore"):
                mu = -np.expm1(-np.exp(eta))
        else:  # cauchit; the lower tail uses arctan(-1/eta) to keep relative precision
            mu = np.where(eta < -1, np.arctan(-1.0 / np.minimum(eta, -1)) / np.pi,
                          0.5 + np.arctan(eta) / np.pi)
        return np.clip(mu, _MU_LO, _MU_HI)

    def __call__(self, mu):
        """Evaluate the link g(mu)."""
        mu = np.asarray(mu, dtype=float)
        name = self.name
        if name == "identity":
            return mu.copy() if mu.ndim else float(mu)
        if name == "log":
            return np.log(mu)
        if name == "logit":
            return special.logit(mu)
        if name == "probit":
            return special.ndtri(mu)
        if name == "cloglog":
            return np.log(-np.log1p(-mu))
        # tan(pi (mu - 1/2)) = -1/tan(pi mu), which is exact for small mu
        return np.where(mu < 0.25, -1.0 / np.tan(np.pi * np.maximum(mu, _MU_LO)),
                        np.tan(np.pi * (mu - 0.5)))

    def mu_eta(self, eta):
        """Derivative d mu / d eta."""
        eta = np.asarray(eta, dtype=float)
        name = self.name
        if name == "identity":
            return np.ones_like(eta)
        if name == "log":
            return np.exp(eta)
        if name == "logit":
            p = special.expit(eta)
            return p * (1 - p)
        if name == "probit":
            return np.exp(-0.5 * eta**2) / np.sqrt(2 * np.pi)
        if name == "cloglog":
            with np.errstate(over="ignore"):
                return np.exp(eta - np.exp(eta))
        return 1.0 / (np.pi * (1.0 + eta**2))


def inv_link(link, eta):
    """Mean corresponding to linear predictor ``eta``."""
    return _as_link(link).inverse(eta)


def _as_link(link) -> Link:
    return link if isinstance(link, Link) else Link(link)


FAMILIES = ("binomial", "gaussian", "poisson", "gamma")


@dataclass(frozen=True)
class Family:
    """Response family. ``dispersion`` is the gaussian error SD or the gamma shape."""

    name: str
    dispersion: Optional[float] = None

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise ParameterError(f"unknown family {self.name!r}; choose from {FAMILIES}")
        if self.dispersion is not None and not self.dispersion > 0:
            raise ParameterError("dispersion must be positive")

    def variance(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.name == "binomial":
            return mu * (1 - mu)
        if self.name == "gaussian":
            return np.ones_like(mu)
        if self.name == "poisson":
            return mu
        shape = self.dispersion if self.dispersion is not None else 1.0
        return mu**2 / shape

    def check_response(self, y):
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise DataError("response contains non-finite values")
        if self.name == "binomial" and not np.all((y >= 0) & (y <= 1)):
            raise DataError("binomial response must lie in [0, 1]")
        if self.name == "poisson" and not np.all(y >= 0):
            raise DataError("poisson response must be non-negative")
        if self.name == "gamma" and not np.all(y > 0):
            raise DataError("gamma response must be positive")

    def deviance(self, y, mu, w):
        if self.name == "binomial":
            dev = special.xlogy(y, y / mu) + special.xlogy(1 - y, (1 - y) / (1 - mu))
            return 2.0 * float(np.sum(w * dev))
        if self.name == "gaussian":
            return float(np.sum(w * (y - mu) ** 2))
        if self.name == "poisson":
            return 2.0 * float(np.sum(w * (special.xlogy(y, y / mu) - (y - mu))))
        return 2.0 * float(np.sum(w * (-np.log(y / mu) + (y - mu) / mu)))


_TERM_RE = re.compile(r"^X(\d+)(\^2)?$")


@dataclass(frozen=True)
class TermSet:
    """Ordered design columns built from a covariate vector.

    Columns are named ``"1"`` (intercept, always first), ``"Xj"`` and ``"Xj^2"``
    with 1-based covariate index ``j``; the design keeps the order given.
    """

    terms: tuple = ("1",)

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms or terms[0] != "1":
            terms = ("1",) + tuple(t for t in terms if t != "1")
        if "1" in terms[1:]:
            raise ParameterError("intercept may only appear once")
        for t in terms[1:]:
            if not _TERM_RE.match(t):
                raise ParameterError(f"bad term {t!r}; expected 'Xj' or 'Xj^2'")
        if len(set(terms)) != len(terms):
            raise ParameterError(f"duplicate terms in {terms}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, *terms: str) -> "TermSet":
        return cls(("1",) + terms)

    def __len__(self):
        return len(self.terms)

    @property
    def n_covariates_required(self) -> int:
        idx = [int(_TERM_RE.match(t).group(1)) for t in self.terms[1:]]
        return max(idx, default=0)

    def design(self, x) -> np.ndarray:
        """Design matrix for covariate rows ``x`` (shape ``(n, k)``, or ``(k,)`` for one row)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] < self.n_covariates_required:
            raise ParameterError(
                f"terms need {self.n_covariates_required} covariates, got {x.shape[1]}")
        cols = []
        for t in self.terms:
            if t == "1":
                cols.append(np.ones(x.shape[0]))
                continue
            m = _TERM_RE.match(t)
            col = x[:, int(m.group(1)) - 1]
            cols.append(col * col if m.group(2) else col)
        X = np.column_stack(cols)
        return X[0] if single else X


def linpred(terms: TermSet, coefficients, x):
    """Linear predictor ``c0 + sum_j c_j col_j(x)``."""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (len(terms),):
        raise ParameterError(
            f"{len(terms)} columns {terms.terms} but {coefficients.size} coefficients")
    return terms.design(x) @ coefficients


@dataclass(frozen=True)
class FittedModel:
    terms: TermSet
    link: Link
    family: Family
    coefficients: np.ndarray
    converged: bool = True
    iterations: int = 0
    deviance: float = float("nan")
    deviance_path: tuple = field(default=(), repr=False)

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float)
        if coef.shape != (len(self.terms),):
            raise ParameterError("coefficient length must equal the number of design columns")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    def linpred(self, x):
        return linpred(self.terms, self.coefficients, x)

    def predict(self, x):
        return self.link.inverse(self.linpred(x))


def predict(model: FittedModel, x):
    return model.predict(x)


def _solve_weighted(X, z, W):
    XtW = X.T * W
    A = XtW @ X
    b = XtW @ z
    d = np.sqrt(np.diag(A))
    if not np.all(d > 0) or not np.all(np.isfinite(A)):
        raise RankError("weighted design has an all-zero column")
    As = A / np.outer(d, d)
    if np.linalg.cond(As) > 1e13:
        raise RankError("weighted normal equations are singular")
    return np.linalg.solve(As, b / d) / d


def irls(X, y, family: Family, link: Link, weights=None, tol=1e-10, max_iter=100,
         max_halvings=20, coef_bound=1e3):
    """Iteratively reweighted least squares.

    Returns ``(coefficients, iterations, deviance_path)``. Convergence is a
    relative deviance change below ``tol``; a deviance increase triggers up to
    ``max_halvings`` step halvings toward the previous iterate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise ParameterError("response length must match design rows")
    if n <= p:
        raise ParameterError(f"need more rows than columns (n={n}, p={p})")
    family.check_response(y)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w < 0):
        raise ParameterError("weights must be non-negative with one per row")

    ybar = float(np.sum(w * y) / np.sum(w))
    if family.name == "binomial":
        ybar = min(max(ybar, 0.1), 0.9)
    eta = np.full(n, float(link(ybar)))
    if not np.all(np.isfinite(eta)):
        raise DataError(f"cannot initialise {link.name} link at mean response {ybar}")
    mu = link.inverse(eta)

    beta_old = None
    dev_old = np.inf
    path = []
    for it in range(1, max_iter + 1):
        dmu = link.mu_eta(eta)
        var = family.variance(mu)
        with np.errstate(divide="ignore", invalid="ignore"):
            W = np.where(var > 0, w * dmu**2 / var, 0.0)
            z = eta + np.where(dmu > 0, (y - mu) / dmu, 0.0)
        beta = _solve_weighted(X, z, W)

        eta = X @ beta
        mu = link.inverse(eta)
        dev = family.deviance(y, mu, w) if np.all(np.isfinite(mu)) else np.inf
        halvings = 0
        while beta_old is not None and not dev <= dev_old:
            if np.isfinite(dev) and dev - dev_old <= tol * (abs(dev_old) + 0.1):
                # increase is at rounding level: stop at the previous iterate
                eta = X @ beta_old
                return beta_old, it - 1, tuple(path)
            if halvings == max_halvings:
                raise ConvergenceError(
                    f"deviance increased after {max_halvings} step halvings", beta_old, it)
            beta = 0.5 * (beta + beta_old)
            eta = X @ beta
            mu = link.inverse(eta)
            dev = family.deviance(y, mu, w) if np.all(np.isfinite(mu)) else np.inf
            halvings += 1

        if np.any(np.abs(beta) > coef_bound):
            raise ConvergenceError(
                f"coefficient magnitude exceeded {coef_bound:g} (separation?)", beta, it)
        path.append(dev)
        if abs(dev - dev_old) < tol * (abs(dev) + 0.1):
            return beta, it, tuple(path)
        beta_old, dev_old = beta, dev
    raise ConvergenceError(f"no convergence in {max_iter} iterations", beta_old, max_iter)


def fit(terms: TermSet, x, y, family, link, weights=None, tol=1e-10, max_iter=100) -> FittedModel:
    """Fit a GLM by maximum quasi-likelihood.

    Parameters
    ----------
    terms : TermSet
        Design columns built from the covariates ``x``.
    x : array_like, shape (n, k)
        Covariate rows.
    y : array_like, shape (n,)
        Responses. Binomial responses may be proportions in [0, 1].
    family, link : Family or str, Link or str
    weights : array_like, optional
        Prior weights (e.g. quadrature weights for population fits).

    Raises
    ------
    ConvergenceError, RankError, DataError
    """
    family = family if isinstance(family, Family) else Family(family)
    link = _as_link(link)
    if family.name == "gamma":
        raise UnsupportedError("gamma fitting is not supported")
    if family.name == "binomial" and not link.is_binomial:
        raise ParameterError(f"link {link.name!r} does not map into (0, 1)")
    x = np.asarray(x, dtype=float)
    X = terms.design(x[:, None] if x.ndim == 1 else x)
    beta, iters, path = irls(X, y, family, link, weights=weights, tol=tol, max_iter=max_iter)
    return FittedModel(terms, link, family, beta, True, iters, path[-1] if path else float("nan"), path)
