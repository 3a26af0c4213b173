"""Interventional expectations, ACE curves, saliency maps, and the lookback
window estimator.

Exact path: second-order expansion around the intervened mean, using the
intervened covariance (exact for outputs quadratic in the inputs).  Approx
path: directional second differences along the scaled covariance eigenvectors,
never materializing a Hessian.  Both are validated against the enumeration
oracle; sweeps may parallelize over the alpha grid (ACE_THREADS).
"""
from __future__ import annotations

import csv
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    EmptyDataError,
    ExtrapolationWarning,
    SerializationError,
    ShapeError,
)
from .moments import (
    Dataset,
    Moments,
    SequenceDataset,
    eigendecompose,
    empirical_moments,
    intervene,
    moments_from_rows,
)
from .nets import (
    HESSIAN_CAP,
    EvalPoint,
    GruNetwork,
    Network,
    _jacobians_all_lags,
    forward,
    hessian,
    second_difference_quotients,
    simulate_interventions,
    unroll_window,
    unrolled_second_difference_quotients,
    unrolled_value_and_hessian,
)
from .oracle import enumerate_ie
from .regressor import CausalRegressor, fit_regressor, predict

__all__ = [
    "InterventionGrid",
    "InterventionSweep",
    "AceResult",
    "METHODS",
    "ie_exact",
    "ie_approx",
    "sweep_feedforward",
    "sweep_recurrent",
    "ace_at",
    "ice",
    "saliency",
    "tau",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_saliency_csv",
    "write_pgm",
]

METHODS = ("exact_taylor", "approx_directional", "oracle")
_ALIASES = {"exact": "exact_taylor", "approx": "approx_directional"}


def _resolve_method(method: str) -> str:
    m = _ALIASES.get(method, method)
    if m not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    return m


@dataclass(frozen=True)
class InterventionGrid:
    """Evenly spaced intervention values for one feature (and step, for
    sequences)."""

    feature_index: int
    alphas: np.ndarray
    step: int | None = None

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=np.float64)
        if a.ndim != 1 or a.shape[0] < 2:
            raise ShapeError("grid needs at least 2 alpha values")
        if np.any(np.diff(a) <= 0):
            raise DomainError("grid alphas must be strictly ascending")
        object.__setattr__(self, "alphas", a)

    @property
    def low(self) -> float:
        return float(self.alphas[0])

    @property
    def high(self) -> float:
        return float(self.alphas[-1])


def _make_grid(i: int, low: float, high: float, num: int, step=None) -> InterventionGrid:
    if num < 2:
        raise DomainError(f"num must be >= 2, got {num}")
    if not np.isfinite(low) or not np.isfinite(high):
        raise DomainError("grid endpoints must be finite")
    if high <= low:
        raise DomainError(
            f"degenerate domain [{low:g}, {high:g}]: a sweep needs low < high"
        )
    return InterventionGrid(i, np.linspace(low, high, num), step)


@dataclass(frozen=True)
class InterventionSweep:
    """Interventional expectations over a grid."""

    grid: InterventionGrid
    ie: np.ndarray
    method: str
    output_index: int = 0

    def __post_init__(self):
        ie = np.asarray(self.ie, dtype=np.float64)
        if ie.shape != self.grid.alphas.shape:
            raise ShapeError("one ie value per grid alpha required")
        if not np.all(np.isfinite(ie)):
            raise DomainError("sweep contains non-finite expectations")
        object.__setattr__(self, "ie", ie)


@dataclass(frozen=True)
class AceResult:
    alpha: float
    ie: float
    baseline: float
    ace: float
    predictive_variance: float | None = None


def ie_exact(net: Network, moments: Moments, i: int, alpha: float,
             output_index: int = 0, cap: int = HESSIAN_CAP) -> float:
    """E[y|do(x_i=alpha)] via the second-order expansion at the intervened mean."""
    if moments.intervened_on is not None:
        raise DomainError("moments are already intervened; pass the plain moments")
    m_do = intervene(moments, i, alpha)
    f_mu = float(forward(net, m_do.mu)[output_index])
    h = hessian(net, m_do.mu, output_index, cap=cap)
    return f_mu + 0.5 * float(np.sum(h * m_do.cov))


def ie_approx(net: Network, moments: Moments, i: int, alpha: float,
              eps: float = 1e-6, output_index: int = 0) -> float:
    """Same expansion with the trace term summed over eigendirections.

    Each direction costs one carried-difference pass instead of a Hessian
    entry; zero-eigenvalue directions are skipped.
    """
    if moments.intervened_on is not None:
        raise DomainError("moments are already intervened; pass the plain moments")
    m_do = intervene(moments, i, alpha)
    f_mu = float(forward(net, m_do.mu)[output_index])
    dirs = eigendecompose(m_do).scaled_directions()
    if dirs.shape[1] == 0:
        return f_mu
    quotients = second_difference_quotients(net, m_do.mu, dirs, eps, output_index)
    return f_mu + 0.5 * float(np.sum(quotients))


def _parallel_map(fn, items):
    try:
        threads = int(os.environ.get("ACE_THREADS", "1"))
    except ValueError:
        threads = 1
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sweep_feedforward(net: Network, data: Dataset, i, num: int = 50,
                      output_index: int = 0, method: str = "exact_taylor",
                      eps: float = 1e-6, low: float = None,
                      high: float = None) -> InterventionSweep:
    """Interventional expectations of feature i over its domain grid.

    Moments are computed once; each grid alpha then costs one expansion (or
    one enumeration for the oracle method).
    """
    if isinstance(i, str):
        i = data.feature_index(i)
    if not 0 <= i < data.k:
        raise DomainError(f"feature {i} outside 0..{data.k - 1}")
    method = _resolve_method(method)
    lo = data.domains[i, 0] if low is None else float(low)
    hi = data.domains[i, 1] if high is None else float(high)
    grid = _make_grid(i, lo, hi, num)
    if method == "exact_taylor" and net.input_dim > HESSIAN_CAP:
        warnings.warn(
            f"{net.input_dim} inputs exceed the exact-Hessian cap {HESSIAN_CAP}; "
            "switching to the directional approximation",
            UserWarning,
            stacklevel=2,
        )
        method = "approx_directional"
    if method == "oracle":
        fn = lambda alpha: enumerate_ie(net, data, i, alpha, output_index)
    else:
        mom = empirical_moments(data)
        if method == "exact_taylor":
            fn = lambda alpha: ie_exact(net, mom, i, alpha, output_index)
        else:
            fn = lambda alpha: ie_approx(net, mom, i, alpha, eps, output_index)
    ie = np.array(_parallel_map(fn, list(grid.alphas)))
    return InterventionSweep(grid, ie, method, output_index)


def _recurrent_ie(rnn, data, i, t_hat, t_out, alpha, method, eps, output_index):
    windows, outputs = simulate_interventions(
        rnn, data.sequences, i, t_hat, t_out, alpha
    )
    if method == "oracle":
        return float(np.mean(outputs[:, output_index]))
    n = windows.shape[0]
    mom = moments_from_rows(windows.reshape(n, -1))
    steps = t_out + 1
    mu_window = mom.mu.reshape(steps, rnn.input_dim)
    if method == "exact_taylor":
        value, hess = unrolled_value_and_hessian(rnn, mu_window, output_index)
        return value + 0.5 * float(np.sum(hess * mom.cov))
    dirs = eigendecompose(mom).scaled_directions()
    f_mu = unroll_window(rnn, mu_window, output_index)
    if dirs.shape[1] == 0:
        return f_mu
    quotients = unrolled_second_difference_quotients(
        rnn, mu_window, dirs, eps, output_index
    )
    return f_mu + 0.5 * float(np.sum(quotients))


def sweep_recurrent(rnn: GruNetwork, data: SequenceDataset, i, t_hat: int,
                    t_out: int, num: int = 50, output_index: int = 0,
                    method: str = "exact_taylor", eps: float = 1e-6,
                    low: float = None, high: float = None) -> InterventionSweep:
    """Interventional expectations for input slot (t_hat, i) on the step-t_out
    output.

    Every alpha replays all sequences with the override, re-estimates the
    window moments from the simulated trajectories, and expands the unrolled
    map around the window mean.
    """
    if isinstance(i, str):
        i = data.feature_index(i)
    if not 0 <= i < data.k:
        raise DomainError(f"feature {i} outside 0..{data.k - 1}")
    if not 0 <= t_hat <= t_out:
        raise DomainError(f"need 0 <= t_hat <= t_out, got {t_hat}, {t_out}")
    method = _resolve_method(method)
    if low is None or high is None:
        dlo, dhi = data.domain(i, t_hat)
        lo = dlo if low is None else float(low)
        hi = dhi if high is None else float(high)
    else:
        lo, hi = float(low), float(high)
    grid = _make_grid(i, lo, hi, num, step=t_hat)
    slots = (t_out + 1) * rnn.input_dim
    if method == "exact_taylor" and slots > HESSIAN_CAP:
        warnings.warn(
            f"{slots} unrolled slots exceed the exact-Hessian cap {HESSIAN_CAP}; "
            "switching to the directional approximation",
            UserWarning,
            stacklevel=2,
        )
        method = "approx_directional"
    fn = lambda alpha: _recurrent_ie(
        rnn, data, i, t_hat, t_out, alpha, method, eps, output_index
    )
    ie = np.array(_parallel_map(fn, list(grid.alphas)))
    return InterventionSweep(grid, ie, method, output_index)


def _sweep_baseline(sweep: InterventionSweep, weight=None) -> float:
    a, v = sweep.grid.alphas, sweep.ie
    if weight is None:
        return float(np.trapezoid(v, a) / (a[-1] - a[0]))
    w = np.asarray([weight(x) for x in a], dtype=np.float64)
    if np.any(w < 0) or not np.any(w > 0):
        raise DomainError("weight function must be nonnegative and not all zero")
    return float(np.trapezoid(v * w, a) / np.trapezoid(w, a))


def _regressor_baseline(reg: CausalRegressor, weight=None) -> float:
    if weight is None:
        return reg.baseline
    low, high = reg.domain
    a = np.linspace(low, high, 801)
    mean, _ = predict(reg, a)
    w = np.asarray([weight(x) for x in a], dtype=np.float64)
    if np.any(w < 0) or not np.any(w > 0):
        raise DomainError("weight function must be nonnegative and not all zero")
    return float(np.trapezoid(mean * w, a) / np.trapezoid(w, a))


def ace_at(source, alpha: float, weight=None) -> AceResult:
    """ACE at one alpha from a fitted regressor or a raw sweep.

    The baseline is the regressor's analytic interval mean, or the trapezoidal
    grid mean when only a sweep is available.  `weight` swaps the uniform
    intervention distribution for a custom nonnegative density over alpha.
    """
    alpha = float(alpha)
    if isinstance(source, CausalRegressor):
        mean, var = predict(source, alpha)
        base = _regressor_baseline(source, weight)
        return AceResult(alpha, mean, base, mean - base, var)
    if isinstance(source, InterventionSweep):
        a = source.grid.alphas
        if alpha < a[0] or alpha > a[-1]:
            warnings.warn(
                f"alpha {alpha:g} outside the sweep range [{a[0]:g}, {a[-1]:g}]",
                ExtrapolationWarning,
                stacklevel=2,
            )
        ie = float(np.interp(alpha, a, source.ie))
        base = _sweep_baseline(source, weight)
        return AceResult(alpha, ie, base, ie - base, None)
    raise DomainError(f"cannot compute ACE from {type(source).__name__}")


def ice(net: Network, u, i: int, alpha: float, output_index: int = 0) -> float:
    """Individual effect at one point: f(u with x_i := alpha) − f(u)."""
    p = u.x if isinstance(u, EvalPoint) else np.asarray(u, dtype=np.float64)
    if p.ndim != 1:
        raise ShapeError(f"u must be a vector, got shape {p.shape}")
    if not 0 <= i < p.shape[0]:
        raise DomainError(f"feature {i} outside 0..{p.shape[0] - 1}")
    q = p.copy()
    q[i] = alpha
    out = forward(net, np.stack([q, p]))
    return float(out[0, output_index] - out[1, output_index])


def saliency(model, data, instance, output_index: int = 0, num: int = 50,
             method: str = "exact_taylor", eps: float = 1e-6,
             max_order: int = 10, threshold: bool = False) -> np.ndarray:
    """Per-feature (or per step × feature) ACE of one input instance.

    Each entry fits a causal regressor to the feature's sweep and evaluates
    its ACE at the instance value; thresholding clips negatives to 0.
    """
    inst = np.asarray(instance, dtype=np.float64)
    if isinstance(model, Network):
        if inst.shape != (data.k,):
            raise ShapeError(f"instance must have shape ({data.k},), got {inst.shape}")
        out = np.empty(data.k)
        for j in range(data.k):
            sweep = sweep_feedforward(model, data, j, num, output_index, method, eps)
            reg = fit_regressor(sweep.grid.alphas, sweep.ie, max_order=max_order)
            out[j] = ace_at(reg, inst[j]).ace
    elif isinstance(model, GruNetwork):
        if inst.ndim != 2 or inst.shape[1] != data.k:
            raise ShapeError(f"instance must be (steps, {data.k}), got {inst.shape}")
        t_out = inst.shape[0] - 1
        out = np.empty(inst.shape)
        for t_hat in range(t_out + 1):
            for j in range(data.k):
                sweep = sweep_recurrent(
                    model, data, j, t_hat, t_out, num, output_index, method, eps
                )
                reg = fit_regressor(sweep.grid.alphas, sweep.ie, max_order=max_order)
                out[t_hat, j] = ace_at(reg, inst[t_hat, j]).ace
    else:
        raise DomainError(f"cannot build a saliency map for {type(model).__name__}")
    if threshold:
        out = np.maximum(out, 0.0)
    return out


def tau(rnn: GruNetwork, data: SequenceDataset, t: int, output_index=None,
        tol: float = 1e-8) -> int:
    """Expected lookback: rounded mean over sequences of the largest lag whose
    output/input Jacobian still registers dependence above tol.

    Dependence measure: sup-norm for scalar outputs, |det| for square
    Jacobians, smallest singular value otherwise.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if data.n == 0:
        raise EmptyDataError("no sequences")
    short = min(s.shape[0] for s in data.sequences)
    if not 0 <= t < short:
        raise DomainError(f"step t={t} not reached by every sequence (shortest {short})")

    def measure(jac: np.ndarray) -> float:
        if jac.ndim == 1 or 1 in jac.shape:
            return float(np.max(np.abs(jac)))
        if jac.shape[0] == jac.shape[1]:
            return float(abs(np.linalg.det(jac)))
        return float(np.linalg.svd(jac, compute_uv=False)[-1])

    lags = []
    for seq in data.sequences:
        jacs = _jacobians_all_lags(rnn, seq, t, output_index)
        best = 0
        for lag in range(t, -1, -1):
            if measure(jacs[lag]) > tol:
                best = lag
                break
        lags.append(best)
    return int(round(float(np.mean(lags))))


# -- artifact files ------------------------------------------------------------


def write_sweep_csv(path, sweep: InterventionSweep, regressor=None, weight=None):
    """Persist a sweep (optionally regressor-backed) as delimited text.

    The baseline appears once as a comment; the ace column is exactly
    interventional_expectation minus that baseline.
    """
    if regressor is not None:
        base = _regressor_baseline(regressor, weight)
        _, variances = predict(regressor, sweep.grid.alphas)
    else:
        base = _sweep_baseline(sweep, weight)
        variances = None
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# baseline={base!r}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["alpha", "interventional_expectation", "ace", "predictive_variance", "method"]
        )
        for idx, alpha in enumerate(sweep.grid.alphas):
            ie = float(sweep.ie[idx])
            var = "" if variances is None else repr(float(variances[idx]))
            writer.writerow([repr(float(alpha)), repr(ie), repr(ie - base), var, sweep.method])


def read_sweep_csv(path):
    """Read back a sweep CSV; returns (alphas, ie, ace, variances, baseline)."""
    base = None
    rows = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    if line.startswith("# baseline="):
                        base = float(line.split("=", 1)[1])
                    continue
                rows.append(line.rstrip("\n"))
    except OSError as exc:
        raise SerializationError(f"cannot read {path}: {exc}") from exc
    parsed = list(csv.reader(rows))
    if not parsed or parsed[0][:3] != ["alpha", "interventional_expectation", "ace"]:
        raise SerializationError(f"{path} is not a sweep CSV")
    data = parsed[1:]
    alphas = np.array([float(r[0]) for r in data])
    ie = np.array([float(r[1]) for r in data])
    ace = np.array([float(r[2]) for r in data])
    variances = np.array([float(r[3]) if r[3] else np.nan for r in data])
    return alphas, ie, ace, variances, base


def write_saliency_csv(path, saliency_map: np.ndarray, feature_names):
    m = np.atleast_2d(np.asarray(saliency_map, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(feature_names))
        for row in m:
            writer.writerow([repr(float(v)) for v in row])


def write_pgm(path, matrix: np.ndarray):
    """Plain-text graymap (P2) of a matrix, min-max scaled to 0..255."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lo, hi = float(m.min()), float(m.max())
    if hi > lo:
        scaled = np.rint((m - lo) / (hi - lo) * 255.0).astype(int)
    else:
        scaled = np.zeros(m.shape, dtype=int)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("P2\n")
        fh.write(f"{m.shape[1]} {m.shape[0]}\n255\n")
        for row in scaled:
            fh.write(" ".join(str(v) for v in row))
            fh.write("\n")
