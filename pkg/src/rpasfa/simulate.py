"""Seeded trajectory generation for the latent ARMA model.

Gaussian draws come from a counter-based generator so that draw ``k`` of a
stream is a pure function of ``(seed, stream, k)``:

* the Philox-4x64 bit generator is keyed with ``seed | stream << 64`` and
  started at counter 0;
* 64-bit word ``n`` of the keystream is mapped to a uniform on the open
  interval (0, 1) as ``((w >> 11) + 0.5) * 2**-53``;
* the uniform goes through the standard normal quantile function
  (``scipy.special.ndtri``).

Time step ``k`` of a ``d``-dimensional stream consumes words
``k*d .. k*d + d - 1``. This mapping is frozen; golden tests depend on it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtri

from .model import CheckedModel, model_hash

__all__ = [
    "PROCESS_STREAM",
    "MEASUREMENT_STREAM",
    "Trajectory",
    "gaussian_stream",
    "apply_dynamics",
    "simulate",
    "trial_seed",
    "write_trajectory",
    "read_trajectory",
]

PROCESS_STREAM = 0
MEASUREMENT_STREAM = 1

_MASK64 = (1 << 64) - 1


def gaussian_stream(seed: int, stream: int, start: int, count: int, dim: int = 1) -> np.ndarray:
    """Standard normal draws for time steps ``start .. start + count - 1``.

    Returns an array of shape ``(count, dim)``.
    """
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    first = start * dim
    n = count * dim
    bitgen = np.random.Philox(key=(seed & _MASK64) | (int(stream) << 64))
    bitgen.advance(first // 4)
    skip = first % 4
    words = bitgen.random_raw(n + skip)[skip:]
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u).reshape(count, dim)


def trial_seed(master_seed: int, trial: int) -> int:
    """Derive an independent 64-bit seed for trial ``trial``."""
    state = np.random.SeedSequence([master_seed, trial]).generate_state(1, np.uint64)
    return int(state[0])


@dataclass(frozen=True, eq=False)
class Trajectory:
    e: np.ndarray
    x: np.ndarray
    y: np.ndarray
    seed: int
    eps: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.x.shape[0]


def apply_dynamics(model: CheckedModel, e: np.ndarray) -> np.ndarray:
    """Run the ARMA recursion on a noise sequence with zero initial conditions.

    ``e`` has shape ``(T, d)`` or ``(n, T, d)`` for a batch of independent
    sequences. Diagonal models are filtered channel by channel; general
    models use the direct matrix recursion.
    """
    e = np.asarray(e, dtype=float)
    d = model.latent_dim
    if e.shape[-1] != d:
        raise ValueError(f"noise has {e.shape[-1]} channels, model has {d}")
    if model.is_diagonal:
        x = np.empty_like(e)
        for j in range(d):
            num = np.concatenate([[1.0], model.B[:, j, j]])
            den = np.concatenate([[1.0], -model.A[:, j, j]])
            x[..., j] = lfilter(num, den, e[..., j], axis=-1)
        return x

    L, M = model.ar_order, model.ma_order
    T = e.shape[-2]
    x = np.zeros_like(e)
    for k in range(T):
        acc = e[..., k, :].copy()
        for l in range(1, min(k, L) + 1):
            acc += x[..., k - l, :] @ model.A[l - 1].T
        for l in range(1, min(k, M) + 1):
            acc += e[..., k - l, :] @ model.B[l - 1].T
        x[..., k, :] = acc
    return x


def simulate(model: CheckedModel, T: int, seed: int) -> Trajectory:
    """Draw one trajectory of length ``T``; same seed gives identical arrays."""
    if T < 1:
        raise ValueError(f"horizon T must be >= 1, got {T}")
    d, q = model.latent_dim, model.obs_dim
    L_e = np.linalg.cholesky(model.Sigma_e)
    e = gaussian_stream(seed, PROCESS_STREAM, 0, T, d) @ L_e.T
    eps = np.sqrt(model.meas_noise_var) * gaussian_stream(seed, MEASUREMENT_STREAM, 0, T, q)
    x = apply_dynamics(model, e)
    y = x @ model.C.T + eps
    return Trajectory(e=e, x=x, y=y, seed=seed, eps=eps)


def _header(d: int, q: int) -> list[str]:
    return (
        ["k"]
        + [f"e_{i + 1}" for i in range(d)]
        + [f"x_{i + 1}" for i in range(d)]
        + [f"y_{i + 1}" for i in range(q)]
    )


def write_trajectory(traj: Trajectory, model: CheckedModel, path: str | Path) -> Path:
    """Write the CSV and a ``<path>.json`` sidecar; returns the sidecar path."""
    path = Path(path)
    d, q = traj.e.shape[1], traj.y.shape[1]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_header(d, q))
        for k in range(traj.T):
            row = [k, *traj.e[k], *traj.x[k], *traj.y[k]]
            writer.writerow([str(k)] + [repr(float(v)) for v in row[1:]])
    sidecar = path.with_name(path.name + ".json")
    meta = {"seed": traj.seed, "T": traj.T, "model_hash": model_hash(model)}
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar


def read_trajectory(path: str | Path, latent_dim: int, obs_dim: int) -> Trajectory:
    """Parse a trajectory CSV; ``y``-only files (header ``k, y_1..``) are accepted too."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader if r]
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    cols = {name: i for i, name in enumerate(header)}

    def take(prefix: str, n: int) -> np.ndarray | None:
        names = [f"{prefix}_{i + 1}" for i in range(n)]
        if not all(nm in cols for nm in names):
            return None
        return data[:, [cols[nm] for nm in names]]

    y = take("y", obs_dim)
    extra_y = f"y_{obs_dim + 1}" in cols
    if y is None or extra_y:
        n_y = sum(1 for h in header if h.startswith("y_"))
        raise ValueError(f"trajectory has {n_y} observation columns, model expects {obs_dim}")
    e = take("e", latent_dim)
    x = take("x", latent_dim)
    seed = 0
    sidecar = path.with_name(path.name + ".json")
    if sidecar.exists():
        seed = int(json.loads(sidecar.read_text()).get("seed", 0))
    return Trajectory(
        e=e if e is not None else np.full((len(rows), latent_dim), np.nan),
        x=x if x is not None else np.full((len(rows), latent_dim), np.nan),
        y=y,
        seed=seed,
    )
