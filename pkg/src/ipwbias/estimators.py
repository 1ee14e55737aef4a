"""Point estimators of the average causal effect and their asymptotic variances.

Three estimators share one report type:

* ``ipw1`` -- inverse-probability weighting with weights divided by ``n``;
* ``ipw2`` -- the same weights normalised to sum to one within each arm;
* ``dr``   -- IPW augmented with outcome-regression predictions.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import dgp as _dgp
from .errors import DegenerateSampleError, ParameterError, WeightError
from .randgen import SeedSpec

# A single weight above this share of its arm's total triggers a warning.
WEIGHT_WARN_SHARE = 0.05


@dataclass(frozen=True)
class EstimateReport:
    estimator: str
    delta_hat: float
    mu1_hat: float
    mu0_hat: float
    w1_min: float
    w1_max: float
    w1_sum: float
    w0_min: float
    w0_max: float
    w0_sum: float

    def as_dict(self):
        return asdict(self)


def _prepare(data, ps_hat):
    t = np.asarray(data.t, dtype=float)
    y = np.asarray(data.y, dtype=float)
    e = np.asarray(ps_hat, dtype=float)
    if e.shape != t.shape:
        raise ParameterError(f"ps_hat has length {e.size}, data has {t.size} rows")
    if np.any(e <= 0) or np.any(e >= 1):
        raise WeightError("propensity values must lie strictly inside (0, 1)")
    return t, y, e


def _weights(t, e):
    w1 = t / e
    w0 = (1 - t) / (1 - e)
    for w, arm in ((w1, "treated"), (w0, "control")):
        total = w.sum()
        if total > 0 and w.max() > WEIGHT_WARN_SHARE * total:
            warnings.warn(f"a single {arm} weight exceeds {WEIGHT_WARN_SHARE:.0%} of the arm total",
                          RuntimeWarning, stacklevel=3)
    return w1, w0


def _stats(w, t_mask):
    sel = w[t_mask]
    if sel.size == 0:
        return float("nan"), float("nan"), 0.0
    return float(sel.min()), float(sel.max()), float(w.sum())


def _report(tag, mu1, mu0, t, w1, w0):
    return EstimateReport(tag, mu1 - mu0, mu1, mu0,
                          *_stats(w1, t == 1), *_stats(w0, t == 0))


def ipw1(data, ps_hat) -> EstimateReport:
    """IPW estimator with weights ``T/e`` and ``(1-T)/(1-e)`` averaged over ``n``."""
    t, y, e = _prepare(data, ps_hat)
    w1, w0 = _weights(t, e)
    n = len(t)
    return _report("IPW1", float(np.dot(w1, y) / n), float(np.dot(w0, y) / n), t, w1, w0)


def ipw2(data, ps_hat) -> EstimateReport:
    """IPW estimator with arm weights normalised to sum to one."""
    t, y, e = _prepare(data, ps_hat)
    w1, w0 = _weights(t, e)
    s1, s0 = w1.sum(), w0.sum()
    if s1 == 0 or s0 == 0:
        raise DegenerateSampleError("normalised IPW needs both arms to be non-empty")
    return _report("IPW2", float(np.dot(w1, y) / s1), float(np.dot(w0, y) / s0), t, w1, w0)


def dr(data, ps_hat, mu1_hat, mu0_hat) -> EstimateReport:
    """Doubly robust (augmented IPW) estimator.

    ``mu1_hat`` and ``mu0_hat`` are per-row outcome-regression predictions.
    With both set to zero this is exactly :func:`ipw1`.
    """
    t, y, e = _prepare(data, ps_hat)
    m1 = np.asarray(mu1_hat, dtype=float)
    m0 = np.asarray(mu0_hat, dtype=float)
    if m1.shape != t.shape or m0.shape != t.shape:
        raise ParameterError("outcome predictions must have one value per row")
    w1, w0 = _weights(t, e)
    n = len(t)
    resid = t - e
    mu1 = float(np.dot(w1, y) / n - np.dot(resid / e, m1) / n)
    mu0 = float(np.dot(w0, y) / n + np.dot(resid / (1 - e), m0) / n)
    return _report("DR", mu1, mu0, t, w1, w0)


@dataclass(frozen=True)
class VarianceReport:
    """Large-sample variance components under correct specification.

    ``d`` is the square of a single expectation (``d_sq_of_mean``) and
    ``sigma2_dr = V_ipw2 - d``. ``d_mean_of_sq`` squares inside the expectation
    instead, which gives the semiparametric efficiency bound
    ``sigma2_dr_mean_of_sq``.
    """

    V_ipw1: float
    V_ipw2: float
    a: np.ndarray
    b: np.ndarray
    I: np.ndarray
    d: float
    d_mean_of_sq: float
    sigma2_ipw1: float
    sigma2_ipw2: float
    sigma2_dr: float
    sigma2_dr_mean_of_sq: float
    N: int

    @property
    def d_sq_of_mean(self):
        return self.d

    def ordering_holds(self, variant="sq_of_mean") -> bool:
        """Check ``sigma2_dr <= min(sigma2_ipw1, sigma2_ipw2)`` for one reading of ``d``."""
        dr_ = self.sigma2_dr if variant == "sq_of_mean" else self.sigma2_dr_mean_of_sq
        return bool(0 <= dr_ <= min(self.sigma2_ipw1, self.sigma2_ipw2))


def asymptotic_variance(spec, N: int = 10**6, seed: SeedSpec = SeedSpec()) -> VarianceReport:
    """Monte Carlo approximation of the correct-specification variance formulas.

    Uses the oracle potential outcomes of a size-``N`` sample. The propensity
    derivative is ``de/dbeta = h'(eta) * columns`` with ``h`` the inverse link,
    which reduces to ``e(1-e) * columns`` for the logit.
    """
    if N < 10**5:
        raise ParameterError("N must be at least 1e5")
    data = _dgp.sample_dataset(spec, N, seed, keep_oracle=True)
    x, y1, y0 = data.x, data.y1, data.y0
    e = _dgp.true_ps(spec, x)
    m1x = _dgp.true_or(spec, 1, x)
    m0x = _dgp.true_or(spec, 0, x)
    # E[Y(t)] via the conditional means: same target, less noise
    mu1, mu0 = m1x.mean(), m0x.mean()

    D = spec.ps.terms.design(x)
    eta = D @ np.asarray(spec.ps.coef)
    de = spec.ps.link.mu_eta(eta)[:, None] * D  # de/dbeta

    V1 = float(np.mean(y1**2 / e + y0**2 / (1 - e)) - (mu1 - mu0) ** 2)
    a = np.mean((y1 / e + y0 / (1 - e))[:, None] * de, axis=0)
    I = (de / (e * (1 - e))[:, None]).T @ de / N
    V2 = float(np.mean((y1 - mu1) ** 2 / e + (y0 - mu0) ** 2 / (1 - e)))
    b = np.mean(((y1 - mu1) / e + (y0 - mu0) / (1 - e))[:, None] * de, axis=0)
    inner = np.sqrt((1 - e) / e) * (m1x - mu1) + np.sqrt(e / (1 - e)) * (m0x - mu0)
    d_sq = float(np.mean(inner) ** 2)
    d_ms = float(np.mean(inner**2))

    s1 = float(V1 - a @ np.linalg.solve(I, a))
    s2 = float(V2 - b @ np.linalg.solve(I, b))
    return VarianceReport(V1, V2, a, b, I, d_sq, d_ms, s1, s2, V2 - d_sq, V2 - d_ms, N)
