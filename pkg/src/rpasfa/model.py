"""Latent ARMA model with a linear Gaussian observation map.

Each latent channel ``j`` follows

    x_j[k] = sum_l a[j, l] x_j[k - l] + sum_l b[j, l] e_j[k - l] + e_j[k]

with ``e_j[k] ~ N(0, sigma_j^2)`` and all signals zero before ``k = 0``.
Observations are ``y[k] = C x[k] + eps[k]`` with ``eps[k] ~ N(0, r I)``.

User input arrives as :class:`ArmaSpec` / :class:`ObservationSpec` and is
turned into an immutable :class:`CheckedModel` by :func:`validate`. The
checked model stores full ``d x d`` matrices so everything downstream is
written for general (not only diagonal) coefficient matrices.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidLag, NonPositiveVariance, NonStationary

__all__ = [
    "ArmaSpec",
    "ObservationSpec",
    "CheckedModel",
    "validate",
    "impulse_response",
    "cross_cov_ex",
    "prior_cov",
    "stationary_cov",
    "load_model",
    "model_to_dict",
    "model_hash",
    "SYNTHETIC_ARMA11",
]

# Root moduli at or above this are rejected.
STATIONARITY_TOL = 1.0 - 1e-10


@dataclass
class ArmaSpec:
    """Per-channel ARMA coefficients.

    ``ar_coeffs`` has shape ``(latent_dim, L)`` and ``ma_coeffs`` shape
    ``(latent_dim, M)``; row ``j`` holds the coefficients of channel ``j``.
    """

    latent_dim: int
    ar_coeffs: np.ndarray
    ma_coeffs: np.ndarray
    process_noise_vars: np.ndarray

    @property
    def ar_order(self) -> int:
        return int(np.shape(self.ar_coeffs)[1]) if np.ndim(self.ar_coeffs) == 2 else 0

    @property
    def ma_order(self) -> int:
        return int(np.shape(self.ma_coeffs)[1]) if np.ndim(self.ma_coeffs) == 2 else 0


@dataclass
class ObservationSpec:
    C: np.ndarray
    meas_noise_var: float

    @property
    def obs_dim(self) -> int:
        return int(np.shape(self.C)[0])


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CheckedModel:
    """Validated model with coefficient matrices stacked by lag.

    Attributes
    ----------
    A : ndarray, shape (L, d, d)
        ``A[l - 1]`` multiplies ``x[k - l]``.
    B : ndarray, shape (M, d, d)
        ``B[l - 1]`` multiplies ``e[k - l]``.
    Sigma_e : ndarray, shape (d, d)
        Process-noise covariance.
    C : ndarray, shape (q, d)
        Observation matrix.
    meas_noise_var : float
        Measurement-noise variance ``r``; the noise covariance is ``r I``.
    """

    A: np.ndarray
    B: np.ndarray
    Sigma_e: np.ndarray
    C: np.ndarray
    meas_noise_var: float

    @classmethod
    def from_matrices(cls, A, B, Sigma_e, C, meas_noise_var: float) -> CheckedModel:
        """Build a model from general (possibly non-diagonal) matrices.

        Used by tests to exercise the estimators beyond the diagonal
        structure accepted by :func:`validate`. Stationarity is checked on
        the block companion matrix.
        """
        Sigma_e = np.atleast_2d(np.asarray(Sigma_e, dtype=float))
        d = Sigma_e.shape[0]
        A = np.asarray(A, dtype=float).reshape(-1, d, d)
        B = np.asarray(B, dtype=float).reshape(-1, d, d)
        C = np.atleast_2d(np.asarray(C, dtype=float))
        if C.shape[1] != d:
            raise DimensionMismatch(f"C has {C.shape[1]} columns, latent_dim is {d}")
        if not np.all(np.isfinite(C)):
            raise DimensionMismatch("C contains non-finite entries")
        if not meas_noise_var > 0:
            raise NonPositiveVariance("meas_noise_var", meas_noise_var)
        if np.any(np.linalg.eigvalsh((Sigma_e + Sigma_e.T) / 2) <= 0):
            raise NonPositiveVariance("Sigma_e eigenvalue", float(np.linalg.eigvalsh(Sigma_e).min()))
        rho = _spectral_radius(A)
        if rho >= STATIONARITY_TOL:
            raise NonStationary(0, rho)
        return cls(_frozen(A), _frozen(B), _frozen(Sigma_e), _frozen(C), float(meas_noise_var))

    @property
    def latent_dim(self) -> int:
        return self.Sigma_e.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.C.shape[0]

    @property
    def ar_order(self) -> int:
        return self.A.shape[0]

    @property
    def ma_order(self) -> int:
        return self.B.shape[0]

    @property
    def window(self) -> int:
        """Prediction depth ``N = max(L, M + 1)``."""
        return max(self.ar_order, self.ma_order + 1)

    @property
    def R(self) -> np.ndarray:
        return self.meas_noise_var * np.eye(self.obs_dim)

    @cached_property
    def is_diagonal(self) -> bool:
        mats = [*self.A, *self.B, self.Sigma_e]
        return all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for m in mats)


def _companion(coeffs: np.ndarray) -> np.ndarray:
    # coeffs: (L, d, d)
    L, d, _ = coeffs.shape
    comp = np.zeros((L * d, L * d))
    comp[:d, :] = np.concatenate(list(coeffs), axis=1)
    comp[d:, :-d] = np.eye((L - 1) * d)
    return comp


def _spectral_radius(A: np.ndarray) -> float:
    if A.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(_companion(A)))))


def validate(spec: ArmaSpec, obs: ObservationSpec) -> CheckedModel:
    """Check the model invariants and return an immutable handle.

    Raises
    ------
    DimensionMismatch
        Coefficient arrays, variances or ``C`` disagree with ``latent_dim``.
    NonPositiveVariance
        A process-noise variance or the measurement-noise variance is <= 0.
    NonStationary
        Some channel has an AR root with modulus >= 1 - 1e-10.
    """
    d = int(spec.latent_dim)
    if d < 1:
        raise DimensionMismatch(f"latent_dim must be positive, got {d}")
    ar = np.asarray(spec.ar_coeffs, dtype=float)
    ma = np.asarray(spec.ma_coeffs, dtype=float)
    if ar.size == 0:
        ar = ar.reshape(d, 0)
    if ma.size == 0:
        ma = ma.reshape(d, 0)
    if ar.ndim != 2 or ar.shape[0] != d:
        raise DimensionMismatch(f"ar_coeffs must have shape (latent_dim={d}, L), got {ar.shape}")
    if ma.ndim != 2 or ma.shape[0] != d:
        raise DimensionMismatch(f"ma_coeffs must have shape (latent_dim={d}, M), got {ma.shape}")
    var = np.asarray(spec.process_noise_vars, dtype=float).reshape(-1)
    if var.shape != (d,):
        raise DimensionMismatch(f"process_noise_vars must have {d} entries, got {var.shape[0]}")
    C = np.asarray(obs.C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, d) if C.size % d == 0 else C
    if C.ndim != 2 or C.shape[1] != d or C.shape[0] < 1:
        raise DimensionMismatch(f"C must have shape (obs_dim, {d}), got {C.shape}")
    for name, arr in (("ar_coeffs", ar), ("ma_coeffs", ma), ("C", C)):
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatch(f"{name} contains non-finite entries")

    for j, v in enumerate(var):
        if not v > 0:
            raise NonPositiveVariance(f"process_noise_vars[{j}]", float(v))
    r = float(obs.meas_noise_var)
    if not r > 0:
        raise NonPositiveVariance("meas_noise_var", r)

    L = ar.shape[1]
    if L:
        for j in range(d):
            # z^L - a_1 z^(L-1) - ... - a_L
            roots = np.roots(np.concatenate([[1.0], -ar[j]]))
            modulus = float(np.max(np.abs(roots))) if roots.size else 0.0
            if modulus >= STATIONARITY_TOL:
                raise NonStationary(j, modulus)

    A = np.stack([np.diag(ar[:, l]) for l in range(L)]) if L else np.zeros((0, d, d))
    M = ma.shape[1]
    B = np.stack([np.diag(ma[:, l]) for l in range(M)]) if M else np.zeros((0, d, d))
    return CheckedModel(_frozen(A), _frozen(B), _frozen(np.diag(var)), _frozen(C), r)


def impulse_response(model: CheckedModel, j_max: int) -> np.ndarray:
    """Coefficients ``h[0..j_max]`` of ``x[k] = sum_j h[j] e[k - j]``.

    Returns an array of shape ``(j_max + 1, d, d)``.
    """
    d = model.latent_dim
    L, M = model.ar_order, model.ma_order
    h = np.zeros((j_max + 1, d, d))
    h[0] = np.eye(d)
    for j in range(1, j_max + 1):
        acc = model.B[j - 1].copy() if j <= M else np.zeros((d, d))
        for i in range(1, min(j, L) + 1):
            acc += model.A[i - 1] @ h[j - i]
        h[j] = acc
    return h


def cross_cov_ex(model: CheckedModel, lag: int) -> np.ndarray:
    """``E[e[k] x[k - lag]^T]``; zero for positive lags by causality."""
    d = model.latent_dim
    if lag > 0:
        return np.zeros((d, d))
    h = impulse_response(model, -lag)[-lag]
    return model.Sigma_e @ h.T


def prior_cov(model: CheckedModel, k: int, lag: int) -> np.ndarray:
    """Transient second moment ``E[x[k] x[k - lag]^T]`` under zero initial conditions."""
    if lag < 0 or lag > k:
        raise InvalidLag(k, lag)
    h = impulse_response(model, k)
    Se = model.Sigma_e
    out = np.zeros_like(Se)
    for j in range(k - lag + 1):
        out += h[j + lag] @ Se @ h[j].T
    return out


def stationary_cov(model: CheckedModel, lag: int = 0, rtol: float = 1e-14, max_terms: int = 1 << 20) -> np.ndarray:
    """Limit of :func:`prior_cov` as ``k -> infinity``.

    The impulse-response sum is truncated once the trailing increments
    (one full AR/MA memory span) fall below ``rtol`` relative to the sum.
    """
    if lag < 0:
        raise InvalidLag(0, lag)
    span = max(model.ar_order, model.ma_order, 1) + 1
    n = 64
    while True:
        h = impulse_response(model, n + lag)
        terms = np.einsum("jab,bc,jdc->jad", h[lag:], model.Sigma_e, h[: n + 1])
        total = terms.sum(axis=0)
        tail = np.max(np.abs(terms[-span:]))
        if tail <= rtol * max(np.max(np.abs(total)), 1e-300) or n >= max_terms:
            return total
        n *= 2


# --- JSON model documents -------------------------------------------------


def _spec_from_dict(doc: dict) -> tuple[ArmaSpec, ObservationSpec]:
    missing = {"latent_dim", "ar_coeffs", "ma_coeffs", "process_noise_vars", "C", "meas_noise_var"} - set(doc)
    if missing:
        raise DimensionMismatch(f"model document lacks fields {sorted(missing)}")
    d = int(doc["latent_dim"])
    ar = np.asarray(doc["ar_coeffs"], dtype=float)
    ma = np.asarray(doc["ma_coeffs"], dtype=float)
    if ar.size == 0 and d > 0:
        ar = ar.reshape(d, 0)
    if ma.size == 0 and d > 0:
        ma = ma.reshape(d, 0)
    C = np.asarray(doc["C"], dtype=float)
    if C.ndim == 1:
        C = C.reshape(1, -1)
    spec = ArmaSpec(d, ar, ma, np.asarray(doc["process_noise_vars"], dtype=float))
    return spec, ObservationSpec(C, float(doc["meas_noise_var"]))


def load_model(source: str | Path | dict) -> CheckedModel:
    """Read and validate a JSON model document (path or parsed dict)."""
    if not isinstance(source, dict):
        source = json.loads(Path(source).read_text())
    return validate(*_spec_from_dict(source))


def model_to_dict(model: CheckedModel) -> dict:
    """Inverse of :func:`load_model` for diagonal models."""
    if not model.is_diagonal:
        raise DimensionMismatch("only diagonal models have a JSON representation")
    d = model.latent_dim
    return {
        "latent_dim": d,
        "ar_coeffs": [[float(model.A[l, j, j]) for l in range(model.ar_order)] for j in range(d)],
        "ma_coeffs": [[float(model.B[l, j, j]) for l in range(model.ma_order)] for j in range(d)],
        "process_noise_vars": [float(v) for v in np.diag(model.Sigma_e)],
        "C": model.C.tolist(),
        "meas_noise_var": model.meas_noise_var,
    }


def model_hash(model: CheckedModel) -> str:
    """SHA-256 over the matrices' float64 bytes, stable across runs."""
    digest = hashlib.sha256()
    for arr in (model.A, model.B, model.Sigma_e, model.C, np.array([model.meas_noise_var])):
        digest.update(np.asarray(arr.shape, dtype=np.int64).tobytes())
        digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return digest.hexdigest()


# Synthetic-experiment model: ARMA(1, 1) observed through a scalar gain.
SYNTHETIC_ARMA11 = {
    "latent_dim": 1,
    "ar_coeffs": [[0.0935]],
    "ma_coeffs": [[0.2416]],
    "process_noise_vars": [0.7577],
    "C": [[0.5253]],
    "meas_noise_var": 0.2955,
}
