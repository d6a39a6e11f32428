"""Recursive MMSE estimation of ARMA latent states.

The filter never augments the state. It keeps a sliding window of the
``N = max(L, M + 1)`` next target times ``k, ..., k + N - 1`` together with
their estimates given ``y[0..k-1]`` and the joint error covariance of those
targets. Processing ``y[k]`` does three things:

1. innovate: every target in the window is corrected with the innovation
   ``y[k] - C xhat[k|k-1]`` through its own gain
   ``F[j, k] = P[j, k | k-1] C^T S[k]^-1``;
2. extend: target ``k + N`` is predicted from the AR terms of the window
   alone, since its MA noise terms are all later than ``k`` and so have zero
   conditional mean. Its error cross-covariances with the window follow
   from the AR recursion plus the noise/state cross-covariance ``gamma_ex``;
3. retire: target ``k`` leaves the window and its posterior is reported.

Per-step cost depends on ``N``, ``d`` and ``q`` only, never on ``T``.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonFinite, SingularInnovationCovariance
from .model import CheckedModel, cross_cov_ex, prior_cov

__all__ = ["FilterState", "StepOutput", "init", "step", "iterate", "run", "stack_outputs"]


@dataclass(frozen=True, eq=False)
class _Plan:
    """Time-invariant matrices used by the extend phase."""

    ar_row: np.ndarray  # (d, N*d): A_l placed at the slot of time k* - l
    noise_cross: np.ndarray  # (d, N*d): Cov(MA noise of k*, window errors)
    diag_const: np.ndarray  # (d, d)
    R: np.ndarray  # (q, q)


@lru_cache(maxsize=64)
def _plan(model: CheckedModel) -> _Plan:
    d, N = model.latent_dim, model.window
    L, M = model.ar_order, model.ma_order
    B = [np.eye(d), *model.B]  # B_0 = I carries e[k*] itself

    ar_row = np.zeros((d, N * d))
    for l in range(1, L + 1):
        s = N - l
        ar_row[:, s * d : (s + 1) * d] = model.A[l - 1]

    # Slot s holds time k* - l with l = N - s. Only noise terms e[k* - j]
    # with j >= l reach x[k* - l], so gamma_ex[l - j] vanishes for j < l.
    noise_cross = np.zeros((d, N * d))
    for s in range(N):
        l = N - s
        acc = np.zeros((d, d))
        for j in range(l, M + 1):
            acc += B[j] @ cross_cov_ex(model, l - j)
        noise_cross[:, s * d : (s + 1) * d] = acc

    noise_cov = sum(Bj @ model.Sigma_e @ Bj.T for Bj in B)
    diag_const = ar_row @ noise_cross.T + noise_cov
    return _Plan(ar_row, noise_cross, diag_const, model.R)


@dataclass(frozen=True, eq=False)
class FilterState:
    """Window of targets ``k, ..., k + N - 1`` conditioned on ``y[0..k-1]``.

    ``xhat[i]`` estimates ``x[k + i]``. ``block_cov`` is the ``N*d`` square
    joint error covariance; block ``(i, j)`` is
    ``E[(x[k+i] - xhat[i]) (x[k+j] - xhat[j])^T]``.
    """

    model: CheckedModel
    k: int
    xhat: np.ndarray
    block_cov: np.ndarray

    @property
    def targets(self) -> range:
        return range(self.k, self.k + self.model.window)

    @property
    def last_processed(self) -> int:
        return self.k - 1

    def block(self, i: int, j: int) -> np.ndarray:
        """Covariance block for absolute target times ``i`` and ``j``."""
        d = self.model.latent_dim
        a, b = i - self.k, j - self.k
        return self.block_cov[a * d : (a + 1) * d, b * d : (b + 1) * d]

    def estimate(self, j: int) -> np.ndarray:
        return self.xhat[j - self.k]

    def check(self, sym_tol: float = 1e-10, psd_rel: float = 1e-8) -> None:
        """Raise ``AssertionError`` if ``block_cov`` is not symmetric PSD."""
        P = self.block_cov
        asym = np.max(np.abs(P - P.T))
        assert asym <= sym_tol, f"block_cov asymmetry {asym:.3g}"
        lam = np.linalg.eigvalsh(P).min()
        assert lam >= -psd_rel * max(np.trace(P), 1.0), f"block_cov min eigenvalue {lam:.3g}"


@dataclass(frozen=True, eq=False)
class StepOutput:
    """Quantities reported when target ``k`` retires.

    Attributes
    ----------
    k : int
    xhat : (d,) filtered estimate ``xhat[k|k]``.
    cov : (d, d) posterior error covariance ``P[k|k]``.
    innovation : (q,) ``y[k] - C xhat[k|k-1]``.
    innovation_cov : (q, q) ``C P[k|k-1] C^T + r I``.
    gain : (d, q) gain ``F[k, k]`` applied to the innovation.
    xpred : (d,) one-step prediction ``xhat[k|k-1]``.
    pred_cov : (d, d) prediction error covariance ``P[k|k-1]``.
    window_gains : (N*d, q) gains applied to every window target.
    """

    k: int
    xhat: np.ndarray
    cov: np.ndarray
    innovation: np.ndarray
    innovation_cov: np.ndarray
    gain: np.ndarray
    xpred: np.ndarray
    pred_cov: np.ndarray
    window_gains: np.ndarray


def init(model: CheckedModel) -> FilterState:
    """Zero-mean prior over targets ``0..N-1`` with exact transient covariances."""
    d, N = model.latent_dim, model.window
    P = np.zeros((N * d, N * d))
    for i in range(N):
        for j in range(i + 1):
            blk = prior_cov(model, i, i - j)  # E[x[i] x[j]^T]
            P[i * d : (i + 1) * d, j * d : (j + 1) * d] = blk
            P[j * d : (j + 1) * d, i * d : (i + 1) * d] = blk.T
    return FilterState(model=model, k=0, xhat=np.zeros((N, d)), block_cov=P)


def step(state: FilterState, y_k) -> tuple[FilterState, StepOutput]:
    """Consume ``y[k]`` for ``k = state.k`` and slide the window by one."""
    model = state.model
    d, q, N = model.latent_dim, model.obs_dim, model.window
    C = model.C
    y_k = np.asarray(y_k, dtype=float).reshape(-1)
    if y_k.shape[0] != q:
        raise ValueError(f"observation at k = {state.k} has {y_k.shape[0]} entries, expected {q}")
    if not np.isfinite(y_k).all():
        raise NonFinite(f"observation at k = {state.k} is not finite")
    plan = _plan(model)

    P = state.block_cov
    x = state.xhat.reshape(-1)
    xpred = x[:d].copy()
    pred_cov = P[:d, :d].copy()

    # innovate
    nu = y_k - C @ xpred
    PCt = P[:, :d] @ C.T
    S = C @ PCt[:d] + plan.R
    # S >= r I whenever block_cov is PSD; the guard only trips on corrupted state.
    try:
        G = np.linalg.solve(S, PCt.T).T
    except np.linalg.LinAlgError:
        raise SingularInnovationCovariance(state.k) from None
    if not (np.diagonal(S) > 0).all():
        raise SingularInnovationCovariance(state.k)
    x = x + G @ nu
    P = P - G @ PCt.T

    # extend with target k + N
    row = plan.ar_row @ P + plan.noise_cross
    diag = row @ plan.ar_row.T + plan.diag_const
    x_new = plan.ar_row @ x

    # retire target k
    Nd = N * d
    P_next = np.empty((Nd, Nd))
    P_next[: Nd - d, : Nd - d] = P[d:, d:]
    P_next[Nd - d :, : Nd - d] = row[:, d:]
    P_next[: Nd - d, Nd - d :] = row[:, d:].T
    P_next[Nd - d :, Nd - d :] = diag
    P_next = 0.5 * (P_next + P_next.T)
    x_next = np.concatenate([x[d:], x_new]).reshape(N, d)

    post_cov = P[:d, :d]
    out = StepOutput(
        k=state.k,
        xhat=x[:d],
        cov=0.5 * (post_cov + post_cov.T),
        innovation=nu,
        innovation_cov=S,
        gain=G[:d],
        xpred=xpred,
        pred_cov=pred_cov,
        window_gains=G,
    )
    return FilterState(model=model, k=state.k + 1, xhat=x_next, block_cov=P_next), out


def iterate(model: CheckedModel, ys: Iterable) -> Iterator[StepOutput]:
    """Yield one :class:`StepOutput` per observation; memory stays O(window)."""
    state = init(model)
    for y_k in ys:
        state, out = step(state, y_k)
        yield out


def run(model: CheckedModel, y) -> list[StepOutput]:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, model.obs_dim)
    if y.shape[0] < 1:
        raise ValueError("need at least one observation")
    return list(iterate(model, y))


def stack_outputs(outputs: list[StepOutput]) -> dict[str, np.ndarray]:
    """Stack per-step fields into arrays with a leading time axis."""
    fields = ("xhat", "cov", "innovation", "innovation_cov", "gain", "xpred", "pred_cov")
    return {f: np.stack([getattr(o, f) for o in outputs]) for f in fields}
