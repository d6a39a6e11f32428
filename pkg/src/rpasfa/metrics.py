"""Evaluation metrics and multi-trial summaries."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateVariance, ShapeMismatch

__all__ = [
    "mse",
    "pearson",
    "autocorrelation",
    "innovation_whiteness",
    "MethodSummary",
    "MetricsReport",
    "trial_summary",
]


def _pair(truth, est) -> tuple[np.ndarray, np.ndarray]:
    truth = np.asarray(truth, dtype=float)
    est = np.asarray(est, dtype=float)
    if truth.ndim == 1:
        truth = truth[:, None]
    if est.ndim == 1:
        est = est[:, None]
    if truth.shape != est.shape:
        raise ShapeMismatch(truth.shape, est.shape)
    return truth, est


def mse(truth, est) -> np.ndarray:
    """Per-channel mean squared error."""
    truth, est = _pair(truth, est)
    if truth.shape[0] < 1:
        raise ShapeMismatch(truth.shape, est.shape)
    return np.mean((truth - est) ** 2, axis=0)


def pearson(truth, est) -> np.ndarray:
    """Per-channel sample Pearson correlation."""
    truth, est = _pair(truth, est)
    if truth.shape[0] < 2:
        raise ShapeMismatch(truth.shape, est.shape)
    a = truth - truth.mean(axis=0)
    b = est - est.mean(axis=0)
    na = np.sqrt(np.sum(a * a, axis=0))
    nb = np.sqrt(np.sum(b * b, axis=0))
    for j in range(a.shape[1]):
        if na[j] == 0 or nb[j] == 0:
            raise DegenerateVariance(j)
    return np.clip(np.sum(a * b, axis=0) / (na * nb), -1.0, 1.0)


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags ``1..max_lag``, shape ``(max_lag, channels)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    x = x - x.mean(axis=0)
    denom = np.sum(x * x, axis=0)
    return np.stack([np.sum(x[tau:] * x[:-tau], axis=0) / denom for tau in range(1, max_lag + 1)])


def innovation_whiteness(innovations, innovation_covs, max_lag: int = 5) -> dict:
    """Autocorrelation of innovations standardized by their reported covariance.

    Each ``nu[k]`` is whitened with the Cholesky factor of ``S[k]`` before
    the autocorrelation is taken. ``bound`` is the ``4 / sqrt(T)`` band.
    """
    nu = np.asarray(innovations, dtype=float)
    S = np.asarray(innovation_covs, dtype=float)
    Lk = np.linalg.cholesky(S)
    white = np.linalg.solve(Lk, nu[..., None])[..., 0]
    rho = autocorrelation(white, max_lag)
    T = nu.shape[0]
    bound = 4.0 / np.sqrt(T)
    return {
        "lags": list(range(1, max_lag + 1)),
        "rho": rho.tolist(),
        "max_abs_rho": float(np.max(np.abs(rho))),
        "bound": bound,
        "white": bool(np.max(np.abs(rho)) <= bound),
    }


@dataclass
class MethodSummary:
    """Mean (and std when there are >= 2 trials) per channel for one method."""

    method: str
    mse_mean: list[float]
    corr_mean: list[float]
    mse_std: list[float] | None = None
    corr_std: list[float] | None = None


@dataclass
class MetricsReport:
    trials: int
    seeds: list[int]
    methods: list[MethodSummary]
    label: str = "independent seeded trials"
    whiteness: dict | None = None
    extra: dict = field(default_factory=dict)

    def row(self, method: str) -> MethodSummary:
        for m in self.methods:
            if m.method == method:
                return m
        raise KeyError(method)

    def to_dict(self) -> dict:
        out = {
            "label": self.label,
            "trials": self.trials,
            "seeds": self.seeds,
            "methods": [],
        }
        for m in self.methods:
            entry = {"method": m.method, "mse_mean": m.mse_mean, "corr_mean": m.corr_mean}
            if m.mse_std is not None:
                entry["mse_std"] = m.mse_std
                entry["corr_std"] = m.corr_std
            out["methods"].append(entry)
        if self.whiteness is not None:
            out["innovation_whiteness"] = self.whiteness
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        """Aligned table: one row per method, std in brackets when available."""
        head = f"Evaluation metrics - {self.trials} {self.label}"
        if self.trials >= 2:
            head += " (standard deviation in brackets)"
        rows = [("Method", "Channel", "MSE", "Correlation Coefficient")]
        for m in self.methods:
            for j, (mu, rho) in enumerate(zip(m.mse_mean, m.corr_mean)):
                if m.mse_std is not None:
                    cell_mse = f"{mu:.4f} (± {m.mse_std[j]:.3f})"
                    cell_rho = f"{rho:.3f} (± {m.corr_std[j]:.3f})"
                else:
                    cell_mse = f"{mu:.4f}"
                    cell_rho = f"{rho:.3f}"
                rows.append((m.method, str(j + 1), cell_mse, cell_rho))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = [head]
        for i, r in enumerate(rows):
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def trial_summary(results: list[dict], seeds: list[int] | None = None) -> MetricsReport:
    """Aggregate per-trial metrics.

    ``results[t][method]`` is ``{"mse": per-channel, "corr": per-channel}``.
    Standard deviations are the sample (ddof=1) estimate and appear only
    for two or more trials.
    """
    if not results:
        raise ValueError("trial_summary needs at least one trial")
    n = len(results)
    methods = []
    for name in results[0]:
        m = np.array([np.atleast_1d(r[name]["mse"]) for r in results], dtype=float)
        c = np.array([np.atleast_1d(r[name]["corr"]) for r in results], dtype=float)
        summary = MethodSummary(name, m.mean(axis=0).tolist(), c.mean(axis=0).tolist())
        if n >= 2:
            summary.mse_std = m.std(axis=0, ddof=1).tolist()
            summary.corr_std = c.std(axis=0, ddof=1).tolist()
        methods.append(summary)
    return MetricsReport(trials=n, seeds=list(seeds or []), methods=methods)
