"""Reference estimators the recursive filter is checked against.

``batch_filtered_mmse``
    Exact conditional mean from the joint Gaussian law of all states and
    observations; brute force, O(T^3).
``augmented_kalman``
    Classical route: stack lagged states and noises into one state vector
    and run a textbook Kalman filter.
``static_posterior``
    Per-sample posterior under the stationary prior, ignoring dynamics.
    Stand-in for the non-recursive PASFA inference baseline.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import CapExceeded
from .model import CheckedModel, impulse_response, stationary_cov

__all__ = [
    "BATCH_CAP",
    "batch_filtered_mmse",
    "augmented_matrices",
    "augmented_kalman",
    "static_gain",
    "static_posterior",
]

BATCH_CAP = 500


def _as_obs(model: CheckedModel, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, model.obs_dim)
    return y


def _state_covariance(model: CheckedModel, T: int) -> np.ndarray:
    # x = H e with H block lower-triangular Toeplitz in the impulse response.
    d = model.latent_dim
    h = impulse_response(model, T - 1)
    H = np.zeros((T * d, T * d))
    for i in range(T):
        for m in range(i + 1):
            H[i * d : (i + 1) * d, m * d : (m + 1) * d] = h[i - m]
    noise = np.kron(np.eye(T), model.Sigma_e)
    return H @ noise @ H.T


def batch_filtered_mmse(model: CheckedModel, y, cap: int = BATCH_CAP) -> np.ndarray:
    """``E[x[k] | y[0..k]]`` for every ``k`` by direct Gaussian conditioning.

    The observation covariance is factored once; the leading principal
    block of a Cholesky factor is the factor of the leading principal
    block, so every prefix reuses the same triangle.
    """
    y = _as_obs(model, y)
    T = y.shape[0]
    if T > cap:
        raise CapExceeded(T, cap)
    d, q = model.latent_dim, model.obs_dim
    Sxx = _state_covariance(model, T)
    Cbig = np.kron(np.eye(T), model.C)
    Sxy = Sxx @ Cbig.T  # Cov(x, Y)
    Syy = Cbig @ Sxy + model.meas_noise_var * np.eye(T * q)
    Lf = cholesky(Syy, lower=True)
    w = solve_triangular(Lf, y.reshape(-1), lower=True)

    out = np.zeros((T, d))
    for k in range(T):
        n = (k + 1) * q
        cross = Sxy[k * d : (k + 1) * d, :n]  # Cov(x[k], Y[0..k])
        z = solve_triangular(Lf[:n, :n], cross.T, lower=True)
        out[k] = z.T @ w[:n]
    return out


def augmented_matrices(model: CheckedModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Transition ``F``, noise injection ``G`` and observation ``H`` of the
    stacked state ``z[k] = [x[k], ..., x[k-L+1], e[k], ..., e[k-M+1]]``.

    With ``L = 0`` one state block is still kept so that ``x[k]`` is part of
    the vector.
    """
    d = model.latent_dim
    L, M = model.ar_order, model.ma_order
    Lx = max(L, 1)
    n = (Lx + M) * d
    F = np.zeros((n, n))
    G = np.zeros((n, d))
    for l in range(1, L + 1):
        F[:d, (l - 1) * d : l * d] = model.A[l - 1]
    for l in range(1, M + 1):
        col = (Lx + l - 1) * d
        F[:d, col : col + d] = model.B[l - 1]
    # shift the lag blocks down by one
    for blocks_start, count in ((0, Lx), (Lx, M)):
        for i in range(1, count):
            r = (blocks_start + i) * d
            F[r : r + d, r - d : r] = np.eye(d)
    G[:d] = np.eye(d)
    if M:
        G[Lx * d : (Lx + 1) * d] = np.eye(d)
    H = np.zeros((model.obs_dim, n))
    H[:, :d] = model.C
    return F, G, H


def augmented_kalman(model: CheckedModel, y, diagnostics: bool = False):
    """Textbook Kalman filter on the stacked state; returns the ``x[k]`` block.

    The prior at ``k = 0`` is ``z[0] = G e[0]`` (zero initial conditions).
    With ``diagnostics=True`` a second value is returned: a dict holding the
    innovations, their covariances, the posterior covariance of the
    ``x[k]`` block and the stacked dimension.
    """
    y = _as_obs(model, y)
    F, G, H = augmented_matrices(model)
    d = model.latent_dim
    T = y.shape[0]
    Q = G @ model.Sigma_e @ G.T
    R = model.R
    z = np.zeros(F.shape[0])
    P = Q.copy()
    eye = np.eye(len(z))
    out = np.zeros((T, d))
    innov = np.zeros((T, model.obs_dim))
    innov_cov = np.zeros((T, model.obs_dim, model.obs_dim))
    x_cov = np.zeros((T, d, d))
    for k, yk in enumerate(y):
        if k:
            z = F @ z
            P = F @ P @ F.T + Q
        S = H @ P @ H.T + R
        K = np.linalg.solve(S, H @ P).T
        innov[k] = yk - H @ z
        innov_cov[k] = S
        z = z + K @ innov[k]
        # Joseph form keeps P symmetric PSD
        IKH = eye - K @ H
        P = IKH @ P @ IKH.T + K @ R @ K.T
        out[k] = z[:d]
        x_cov[k] = P[:d, :d]
    if diagnostics:
        info = {"innovation": innov, "innovation_cov": innov_cov, "cov": x_cov, "dim": F.shape[0]}
        return out, info
    return out


def static_gain(model: CheckedModel) -> np.ndarray:
    """``Gamma C^T (C Gamma C^T + r I)^-1`` with ``Gamma`` the stationary state covariance."""
    gamma = stationary_cov(model, 0)
    S = model.C @ gamma @ model.C.T + model.R
    return np.linalg.solve(S, model.C @ gamma).T


def static_posterior(model: CheckedModel, y) -> np.ndarray:
    y = _as_obs(model, y)
    return y @ static_gain(model).T
