"""Empirical input moments, intervention surgery on them, and the
eigendecomposition feeding the directional approximation."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    EmptyDataError,
    NotPSDError,
    NotSymmetricError,
    SerializationError,
    ShapeError,
)

__all__ = [
    "Dataset",
    "SequenceDataset",
    "Moments",
    "EigenPairs",
    "empirical_moments",
    "moments_from_rows",
    "intervene",
    "eigendecompose",
    "load_dataset",
    "save_dataset",
    "load_sequence_dataset",
    "save_sequence_dataset",
]


def _check_rows(rows) -> np.ndarray:
    r = np.asarray(rows, dtype=np.float64)
    if r.ndim != 2:
        raise ShapeError(f"rows must be (n, k), got shape {r.shape}")
    if r.shape[0] < 1:
        raise EmptyDataError("dataset has no rows")
    if not np.all(np.isfinite(r)):
        raise DomainError("rows contain non-finite entries")
    return r


def _default_names(k: int) -> list[str]:
    return [f"x{i}" for i in range(k)]


@dataclass(frozen=True)
class Dataset:
    """Observations (n × k) with feature names and per-feature domains.

    Domains default to the observed [min, max] per column and must cover it
    when supplied explicitly.
    """

    rows: np.ndarray
    feature_names: tuple[str, ...] = ()
    domains: np.ndarray = None

    def __post_init__(self):
        rows = _check_rows(self.rows)
        object.__setattr__(self, "rows", rows)
        k = rows.shape[1]
        names = tuple(self.feature_names) or tuple(_default_names(k))
        if len(names) != k:
            raise ShapeError(f"{len(names)} feature names for {k} columns")
        object.__setattr__(self, "feature_names", names)
        if self.domains is None:
            dom = np.stack([rows.min(axis=0), rows.max(axis=0)], axis=1)
        else:
            dom = np.asarray(self.domains, dtype=np.float64)
            if dom.shape != (k, 2):
                raise ShapeError(f"domains must be ({k}, 2), got {dom.shape}")
            if np.any(dom[:, 0] > rows.min(axis=0)) or np.any(dom[:, 1] < rows.max(axis=0)):
                raise DomainError("domains do not cover the observed data range")
        object.__setattr__(self, "domains", dom)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def k(self) -> int:
        return self.rows.shape[1]

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DomainError(
                f"unknown feature {name!r}; have {list(self.feature_names)}"
            ) from None


@dataclass(frozen=True)
class SequenceDataset:
    """Variable-length sequences sharing one feature axis.

    Domains are resolved per (feature, step): an explicit per-feature interval
    applies to every step; otherwise the observed range at that step is used.
    """

    sequences: tuple[np.ndarray, ...]
    feature_names: tuple[str, ...] = ()
    feature_domains: np.ndarray = None

    def __post_init__(self):
        seqs = tuple(np.asarray(s, dtype=np.float64) for s in self.sequences)
        if not seqs:
            raise EmptyDataError("dataset has no sequences")
        k = seqs[0].shape[1] if seqs[0].ndim == 2 else -1
        for s in seqs:
            if s.ndim != 2 or s.shape[1] != k or s.shape[0] < 1:
                raise ShapeError("all sequences must be (T_s, k) with shared k")
            if not np.all(np.isfinite(s)):
                raise DomainError("sequence contains non-finite entries")
        object.__setattr__(self, "sequences", seqs)
        names = tuple(self.feature_names) or tuple(_default_names(k))
        if len(names) != k:
            raise ShapeError(f"{len(names)} feature names for {k} features")
        object.__setattr__(self, "feature_names", names)
        if self.feature_domains is not None:
            dom = np.asarray(self.feature_domains, dtype=np.float64)
            if dom.shape != (k, 2):
                raise ShapeError(f"feature_domains must be ({k}, 2), got {dom.shape}")
            object.__setattr__(self, "feature_domains", dom)

    @property
    def n(self) -> int:
        return len(self.sequences)

    @property
    def k(self) -> int:
        return self.sequences[0].shape[1]

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DomainError(
                f"unknown feature {name!r}; have {list(self.feature_names)}"
            ) from None

    def step_values(self, i: int, step: int) -> np.ndarray:
        vals = np.array([s[step, i] for s in self.sequences if s.shape[0] > step])
        if vals.size == 0:
            raise DomainError(f"no sequence reaches step {step}")
        return vals

    def domain(self, i: int, step: int) -> tuple[float, float]:
        if self.feature_domains is not None:
            lo, hi = self.feature_domains[i]
            return float(lo), float(hi)
        vals = self.step_values(i, step)
        return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class Moments:
    """First and second moments, optionally carrying one applied intervention."""

    mu: np.ndarray
    cov: np.ndarray
    intervened_on: tuple[int, float] | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mu.ndim != 1 or cov.shape != (mu.shape[0], mu.shape[0]):
            raise ShapeError(
                f"mu {mu.shape} and cov {cov.shape} must be (k,) and (k, k)"
            )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "cov", cov)

    @property
    def k(self) -> int:
        return self.mu.shape[0]


def moments_from_rows(rows: np.ndarray) -> Moments:
    """Sample mean and 1/n covariance of a row matrix."""
    r = _check_rows(rows)
    mu = r.mean(axis=0)
    centered = r - mu
    cov = centered.T @ centered / r.shape[0]
    return Moments(mu, cov)


def empirical_moments(data: Dataset) -> Moments:
    return moments_from_rows(data.rows)


def intervene(moments: Moments, i: int, alpha: float) -> Moments:
    """Set coordinate i to alpha: mu[i] = alpha, covariance row/col i zeroed."""
    if moments.intervened_on is not None:
        raise DomainError(
            f"moments already carry intervention {moments.intervened_on}; "
            "one intervened neuron per sweep"
        )
    if not 0 <= i < moments.k:
        raise DomainError(f"feature {i} outside 0..{moments.k - 1}")
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise DomainError("alpha must be finite")
    mu = moments.mu.copy()
    cov = moments.cov.copy()
    mu[i] = alpha
    cov[i, :] = 0.0
    cov[:, i] = 0.0
    return Moments(mu, cov, intervened_on=(i, alpha))


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues (descending, clamped >= 0) and orthonormal eigenvectors
    (columns) of a covariance matrix."""

    eigvals: np.ndarray
    eigvecs: np.ndarray

    def scaled_directions(self) -> np.ndarray:
        """Columns sqrt(lambda_r) e_r for the strictly positive eigenvalues."""
        keep = self.eigvals > 0.0
        return self.eigvecs[:, keep] * np.sqrt(self.eigvals[keep])


def eigendecompose(moments: Moments) -> EigenPairs:
    """Symmetric eigendecomposition of the covariance with PSD repair.

    Eigenvalues within 1e-10·trace of zero (either side) are rounding debris
    and clamp to 0; anything below that band is a genuine PSD violation.
    Clamping the positive debris matters for rank-deficient covariances:
    it keeps hundreds of noise directions out of the directional sum.
    """
    cov = moments.cov
    asym = np.max(np.abs(cov - cov.T), initial=0.0)
    if asym > 1e-9:
        raise NotSymmetricError(f"covariance asymmetry {asym:.3g} exceeds 1e-9")
    sym = (cov + cov.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    vals, vecs = vals[::-1].copy(), vecs[:, ::-1].copy()
    debris = 1e-10 * max(np.trace(sym), 0.0)
    if np.any(vals < -debris):
        raise NotPSDError(
            f"covariance eigenvalue {vals.min():.3g} below PSD tolerance {-debris:.3g}"
        )
    vals[vals < debris] = 0.0
    return EigenPairs(vals, vecs)


# -- CSV / sidecar ingestion ---------------------------------------------------


def _read_domains_sidecar(path, names) -> np.ndarray | None:
    if path is None:
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SerializationError(f"cannot read domains file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SerializationError("domains document must map feature -> [low, high]")
    dom = None
    for feat, interval in doc.items():
        if feat not in names:
            raise SerializationError(f"domains name unknown feature {feat!r}")
        try:
            lo, hi = (float(v) for v in interval)
        except (TypeError, ValueError) as exc:
            raise SerializationError(f"bad interval for {feat!r}: {interval!r}") from exc
        if dom is None:
            dom = np.full((len(names), 2), np.nan)
        dom[names.index(feat)] = (lo, hi)
    return dom


def _parse_csv(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row and not row[0].startswith("#")]
    except OSError as exc:
        raise SerializationError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise SerializationError(f"{path}: need a header row and at least one data row")
    header, data = rows[0], rows[1:]
    try:
        values = [[float(cell) for cell in row] for row in data]
    except ValueError as exc:
        raise SerializationError(f"{path}: non-numeric cell: {exc}") from exc
    widths = {len(v) for v in values}
    if widths != {len(header)}:
        raise SerializationError(f"{path}: ragged rows (header has {len(header)} columns)")
    return [h.strip() for h in header], np.asarray(values, dtype=np.float64)


def load_dataset(path, domains_path=None) -> Dataset:
    """Read observations from a headered CSV, one row per observation."""
    names, values = _parse_csv(path)
    observed = np.stack([values.min(axis=0), values.max(axis=0)], axis=1)
    dom = _read_domains_sidecar(domains_path, names)
    if dom is not None:
        missing = np.isnan(dom[:, 0])
        dom[missing] = observed[missing]
    return Dataset(values, tuple(names), dom)


def save_dataset(data: Dataset, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.feature_names)
        for row in data.rows:
            writer.writerow([repr(float(v)) for v in row])


def load_sequence_dataset(path, domains_path=None) -> SequenceDataset:
    """Read sequences from a CSV with a leading seq_id, step column pair."""
    names, values = _parse_csv(path)
    if len(names) < 3 or names[0] != "seq_id" or names[1] != "step":
        raise SerializationError(
            f"{path}: sequence CSV must start with seq_id, step columns"
        )
    feature_names = tuple(names[2:])
    by_id: dict[int, list] = {}
    for row in values:
        by_id.setdefault(int(row[0]), []).append((int(row[1]), row[2:]))
    sequences = []
    for sid, steps in by_id.items():
        steps.sort(key=lambda x: x[0])
        if [s for s, _ in steps] != list(range(len(steps))):
            raise SerializationError(f"{path}: sequence {sid} has gaps in its steps")
        sequences.append(np.stack([v for _, v in steps]))
    dom = _read_domains_sidecar(domains_path, list(feature_names))
    if dom is not None and np.any(np.isnan(dom)):
        raise SerializationError("sequence domains sidecar must cover every feature")
    return SequenceDataset(tuple(sequences), feature_names, dom)


def save_sequence_dataset(data: SequenceDataset, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seq_id", "step", *data.feature_names])
        for sid, seq in enumerate(data.sequences):
            for step, row in enumerate(seq):
                writer.writerow([sid, step, *[repr(float(v)) for v in row]])
