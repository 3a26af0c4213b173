"""Bayesian polynomial fits to interventional-expectation sweeps.

Conjugate Gaussian weight posterior over monomial coefficients, closed-form
log evidence for order selection, predictive mean/variance, and the analytic
uniform-interval baseline.  Fitting pipelines rescale alpha to [-1, 1] before
basis expansion (raw powers of wide domains are numerically unusable at order
10); reported coefficients are mapped back to the raw domain.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    DomainError,
    EmptyDataError,
    HighVarianceWarning,
    ExtrapolationWarning,
    IllConditionedFitError,
    SerializationError,
    ShapeError,
)

__all__ = [
    "PolyBasis",
    "BayesPosterior",
    "CausalRegressor",
    "bayes_fit",
    "log_evidence",
    "select_order",
    "fit_regressor",
    "predict",
    "baseline",
    "save_regressor",
    "load_regressor",
]

# fallback hyperparameters when the evidence fixed point stalls
FALLBACK_A = 1e-4
FALLBACK_B = 1e2
_PRECISION_LIMITS = (1e-12, 1e12)


@dataclass(frozen=True)
class PolyBasis:
    """Monomial feature map alpha -> [1, alpha, ..., alpha^order]."""

    order: int

    def __post_init__(self):
        if self.order < 0:
            raise DomainError("polynomial order must be >= 0")

    def design(self, alphas: np.ndarray) -> np.ndarray:
        a = np.atleast_1d(np.asarray(alphas, dtype=np.float64))
        return np.vander(a, self.order + 1, increasing=True)


@dataclass(frozen=True)
class BayesPosterior:
    """Gaussian weight posterior N(m_n, s_n) with its hyperparameters."""

    m_n: np.ndarray
    s_n: np.ndarray
    a: float
    b: float
    log_evidence: float


def _check_xy(alphas, ys):
    x = np.asarray(alphas, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.shape != x.shape:
        raise ShapeError(f"alphas {x.shape} and values {y.shape} must be equal-length vectors")
    if x.size == 0:
        raise EmptyDataError("no points to fit")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("fit data contains non-finite entries")
    return x, y


def _solve_posterior(phi: np.ndarray, y: np.ndarray, a: float, b: float):
    if not (a > 0 and b > 0 and np.isfinite(a) and np.isfinite(b)):
        raise DomainError("precisions a and b must be positive and finite")
    m = phi.shape[1]
    gram = phi.T @ phi
    amat = a * np.eye(m) + b * gram
    evals = np.linalg.eigvalsh(amat)
    if evals[0] <= 0 or evals[-1] / max(evals[0], np.finfo(float).tiny) > 1e14:
        raise IllConditionedFitError(
            "normal matrix is numerically singular; rescale alpha to [-1, 1] "
            "or lower the order"
        )
    m_n = b * np.linalg.solve(amat, phi.T @ y)
    s_n = np.linalg.inv(amat)
    s_n = (s_n + s_n.T) / 2.0
    n = y.shape[0]
    resid = y - phi @ m_n
    e_mn = 0.5 * b * (resid @ resid) + 0.5 * a * (m_n @ m_n)
    sign, logdet = np.linalg.slogdet(amat)
    logev = (
        0.5 * m * np.log(a)
        + 0.5 * n * np.log(b)
        - e_mn
        - 0.5 * logdet
        - 0.5 * n * np.log(2.0 * np.pi)
    )
    return m_n, s_n, float(logev), float(resid @ resid)


def _optimize_precisions(phi: np.ndarray, y: np.ndarray, max_iter: int = 500):
    """Evidence fixed point for (a, b); falls back to constants on a stall."""
    n = y.shape[0]
    lo, hi = _PRECISION_LIMITS
    a = 1e-3
    b = 1.0 / max(float(np.var(y)), 1e-12)
    gram_evals = np.linalg.eigvalsh(phi.T @ phi)
    for _ in range(max_iter):
        lam = b * gram_evals
        gamma = float(np.sum(lam / (a + lam)))
        amat = a * np.eye(phi.shape[1]) + b * (phi.T @ phi)
        m_n = b * np.linalg.solve(amat, phi.T @ y)
        mm = float(m_n @ m_n)
        resid = y - phi @ m_n
        rss = float(resid @ resid)
        a_new = gamma / mm if mm > 0 else hi
        b_new = (n - gamma) / rss if rss > 0 and n > gamma else hi
        a_new = min(max(a_new, lo), hi)
        b_new = min(max(b_new, lo), hi)
        if not (np.isfinite(a_new) and np.isfinite(b_new)):
            return FALLBACK_A, FALLBACK_B
        if abs(np.log(a_new / a)) + abs(np.log(b_new / b)) < 1e-9:
            return a_new, b_new
        a, b = a_new, b_new
    return FALLBACK_A, FALLBACK_B


def bayes_fit(alphas, ys, order: int, a: float | None = None,
              b: float | None = None) -> BayesPosterior:
    """Conjugate posterior over the coefficients of a degree-`order` fit.

    Operates on the alphas as given (no internal rescaling); a and b default
    to evidence maximization.
    """
    x, y = _check_xy(alphas, ys)
    phi = PolyBasis(order).design(x)
    if a is None or b is None:
        a_opt, b_opt = _optimize_precisions(phi, y)
        a = a_opt if a is None else a
        b = b_opt if b is None else b
    m_n, s_n, logev, _ = _solve_posterior(phi, y, float(a), float(b))
    return BayesPosterior(m_n, s_n, float(a), float(b), logev)


def log_evidence(alphas, ys, order: int, a: float | None = None,
                 b: float | None = None) -> float:
    """Closed-form Gaussian log marginal likelihood of the degree-`order` model."""
    x, y = _check_xy(alphas, ys)
    phi = PolyBasis(order).design(x)
    if a is None or b is None:
        a_opt, b_opt = _optimize_precisions(phi, y)
        a = a_opt if a is None else a
        b = b_opt if b is None else b
    return _solve_posterior(phi, y, float(a), float(b))[2]


def _to_unit(alphas, low, high):
    return (2.0 * np.asarray(alphas, dtype=np.float64) - (low + high)) / (high - low)


def select_order(alphas, ys, max_order: int = 10, a: float | None = None,
                 b: float | None = None) -> int:
    """Highest-evidence polynomial order in 0..max_order (ties -> lowest).

    Evidence comparison runs on alpha rescaled to [-1, 1].  A selected order
    must not fit more than 10x worse (residual norm, with a machine-precision
    floor) than max_order; offenders are skipped in evidence order.
    """
    x, y = _check_xy(alphas, ys)
    if max_order < 0:
        raise DomainError("max_order must be >= 0")
    low, high = float(x.min()), float(x.max())
    s = _to_unit(x, low, high) if high > low else x - low  # degenerate: center
    stats = []
    last_err = None
    # orders above n-1 are unidentifiable; ill-conditioned candidates drop out
    for order in range(min(max_order, x.size - 1) + 1):
        phi = PolyBasis(order).design(s)
        if a is None or b is None:
            ao, bo = _optimize_precisions(phi, y)
            ao = ao if a is None else a
            bo = bo if b is None else b
        else:
            ao, bo = a, b
        try:
            _, _, logev, rss = _solve_posterior(phi, y, float(ao), float(bo))
        except IllConditionedFitError as exc:
            last_err = exc
            continue
        stats.append((order, logev, np.sqrt(rss)))
    if not stats:
        raise last_err
    guard = 10.0 * stats[-1][2] + 1e-10 * (1.0 + float(np.linalg.norm(y)))
    # evidence agrees only to roundoff when every order shrinks to the same
    # function; near-ties of the winner resolve to the lowest order
    best = max(logev for _, logev, _ in stats)
    tie = 1e-6 * (1.0 + abs(best))

    def rank(t):
        order, logev, _ = t
        if best - logev <= tie:
            return (0.0, float(order))
        return (best - logev, float(order))

    for order, _, res in sorted(stats, key=rank):
        if res <= guard:
            return order
    return stats[-1][0]


@dataclass(frozen=True)
class CausalRegressor:
    """Polynomial posterior over a sweep, with domain and analytic baseline.

    The posterior lives in the [-1, 1]-rescaled coordinate; `coefficients`
    maps the predictive-mean polynomial back to raw alpha powers.
    """

    basis: PolyBasis
    posterior: BayesPosterior
    domain: tuple[float, float]
    baseline: float

    def __post_init__(self):
        low, high = self.domain
        if not (np.isfinite(low) and np.isfinite(high) and high > low):
            raise DomainError(f"fit domain must satisfy low < high, got {self.domain}")
        object.__setattr__(self, "domain", (float(low), float(high)))

    @property
    def coefficients(self) -> np.ndarray:
        """Predictive-mean coefficients on raw alpha powers (ascending)."""
        low, high = self.domain
        c0 = -(low + high) / (high - low)
        c1 = 2.0 / (high - low)
        d = self.basis.order
        transform = np.zeros((d + 1, d + 1))
        for j in range(d + 1):
            transform[j, : j + 1] = npoly.polypow([c0, c1], j)[: j + 1]
        return transform.T @ self.posterior.m_n


def _analytic_baseline(m_n: np.ndarray) -> float:
    # uniform mean over s in [-1, 1]: odd powers vanish, even give 1/(j+1)
    j = np.arange(m_n.shape[0])
    weights = np.where(j % 2 == 0, 1.0 / (j + 1.0), 0.0)
    return float(m_n @ weights)


def fit_regressor(alphas, ys, max_order: int = 10, a: float | None = None,
                  b: float | None = None, order: int | None = None) -> CausalRegressor:
    """Fit a causal regressor to a sweep: select order, fit, store baseline.

    Warns when the maximum predictive standard deviation over the fitted grid
    exceeds 10% of the value range (more sweep points may be needed).
    """
    x, y = _check_xy(alphas, ys)
    low, high = float(x.min()), float(x.max())
    if not high > low:
        raise DomainError("fitting needs at least two distinct alpha values")
    if order is None:
        order = select_order(x, y, max_order=max_order, a=a, b=b)
    s = _to_unit(x, low, high)
    post = bayes_fit(s, y, order, a=a, b=b)
    reg = CausalRegressor(PolyBasis(order), post, (low, high),
                          _analytic_baseline(post.m_n))
    _, var = predict(reg, x)
    spread = float(y.max() - y.min())
    worst = float(np.sqrt(var.max()))
    if worst > 0.1 * spread and spread > 0:
        warnings.warn(
            f"max predictive std {worst:.3g} exceeds 10% of the sweep range "
            f"{spread:.3g}; consider more grid points",
            HighVarianceWarning,
            stacklevel=2,
        )
    return reg


def predict(reg: CausalRegressor, alpha):
    """Predictive mean and variance at alpha (scalar or array)."""
    a = np.asarray(alpha, dtype=np.float64)
    low, high = reg.domain
    if np.any(a < low) or np.any(a > high):
        warnings.warn(
            f"predicting outside the fit domain [{low:g}, {high:g}]",
            ExtrapolationWarning,
            stacklevel=2,
        )
    phi = reg.basis.design(_to_unit(a, low, high))
    mean = phi @ reg.posterior.m_n
    var = 1.0 / reg.posterior.b + np.einsum("ij,jk,ik->i", phi, reg.posterior.s_n, phi)
    if a.ndim == 0:
        return float(mean[0]), float(var[0])
    return mean, var


def baseline(reg: CausalRegressor) -> float:
    """Uniform-interval mean of the predictive-mean polynomial (closed form)."""
    return reg.baseline


# -- persistence ---------------------------------------------------------------


def save_regressor(reg: CausalRegressor, path):
    doc = {
        "order": reg.basis.order,
        "domain": list(reg.domain),
        "baseline": reg.baseline,
        "coefficients_raw": reg.coefficients.tolist(),
        "posterior_mean_scaled": reg.posterior.m_n.tolist(),
        "posterior_cov_scaled": reg.posterior.s_n.tolist(),
        "a": reg.posterior.a,
        "b": reg.posterior.b,
        "log_evidence": reg.posterior.log_evidence,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_regressor(path) -> CausalRegressor:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        post = BayesPosterior(
            np.asarray(doc["posterior_mean_scaled"], dtype=np.float64),
            np.asarray(doc["posterior_cov_scaled"], dtype=np.float64),
            float(doc["a"]),
            float(doc["b"]),
            float(doc["log_evidence"]),
        )
        return CausalRegressor(
            PolyBasis(int(doc["order"])),
            post,
            tuple(doc["domain"]),
            float(doc["baseline"]),
        )
    except OSError as exc:
        raise SerializationError(f"cannot read regressor file {path}: {exc}") from exc
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise SerializationError(f"malformed regressor document: {exc}") from exc
