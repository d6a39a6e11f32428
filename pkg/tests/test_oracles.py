import numpy as np
import pytest

from conftest import random_stable_model
from rpasfa import CapExceeded, CheckedModel, simulate
from rpasfa.metrics import mse
from rpasfa.model import stationary_cov
from rpasfa.oracles import (
    BATCH_CAP,
    augmented_kalman,
    augmented_matrices,
    batch_filtered_mmse,
    static_gain,
    static_posterior,
)

S2, C, R = 0.7577, 0.5253, 0.2955
GAMMA = S2 * (1 + 0.2416**2 + 2 * 0.0935 * 0.2416) / (1 - 0.0935**2)


class TestBatch:
    def test_first_coefficient(self, arma11_model):
        y = np.zeros((5, 1))
        y[0] = 1.0
        est = batch_filtered_mmse(arma11_model, y)
        assert est[0, 0] == pytest.approx(S2 * C / (C * C * S2 + R), rel=1e-12)
        assert est[0, 0] == pytest.approx(0.78882, abs=1e-5)

    def test_zero_observations(self, random_models):
        for m in random_models[:4]:
            assert np.all(batch_filtered_mmse(m, np.zeros((30, m.obs_dim))) == 0)

    def test_cap(self, arma11_model):
        with pytest.raises(CapExceeded):
            batch_filtered_mmse(arma11_model, np.zeros((BATCH_CAP + 1, 1)))
        batch_filtered_mmse(arma11_model, np.zeros((10, 1)), cap=10)

    def test_against_naive_conditioning(self, random_models):
        # Full re-solve per prefix, no shared factorization.
        from rpasfa.oracles import _state_covariance

        m = random_models[2]
        T, d, q = 15, m.latent_dim, m.obs_dim
        y = simulate(m, T, 4).y
        Sxx = _state_covariance(m, T)
        Cb = np.kron(np.eye(T), m.C)
        Syy = Cb @ Sxx @ Cb.T + m.meas_noise_var * np.eye(T * q)
        Sxy = Sxx @ Cb.T
        fast = batch_filtered_mmse(m, y)
        for k in range(T):
            n = (k + 1) * q
            ref = Sxy[k * d : (k + 1) * d, :n] @ np.linalg.solve(Syy[:n, :n], y[: k + 1].reshape(-1))
            np.testing.assert_allclose(fast[k], ref, rtol=1e-9, atol=1e-12)

    def test_state_covariance_matches_sample(self, arma11_model):
        from rpasfa.oracles import _state_covariance

        Sxx = _state_covariance(arma11_model, 3)
        n = 400_000
        from rpasfa import apply_dynamics

        e = np.random.default_rng(0).normal(scale=np.sqrt(S2), size=(n, 3, 1))
        x = apply_dynamics(arma11_model, e)[:, :, 0]
        emp = x.T @ x / n
        se = np.sqrt(np.var(x[:, :, None] * x[:, None, :], axis=0) / n)
        assert np.all(np.abs(emp - Sxx) <= 4 * se)


class TestAugmented:
    def test_dimension(self, arma11_model):
        F, G, H = augmented_matrices(arma11_model)
        assert F.shape == (2, 2)
        _, info = augmented_kalman(arma11_model, np.zeros((3, 1)), diagnostics=True)
        assert info["dim"] == 2

    def test_dimension_general(self):
        rng = np.random.default_rng(0)
        m = random_stable_model(rng, latent_dims=(3,), ar_orders=(2,), ma_orders=(3,))
        assert augmented_matrices(m)[0].shape == (15, 15)

    def test_degenerate_is_plain_kalman(self):
        a, q, r = 0.7, 1.3, 0.6
        m = CheckedModel.from_matrices([[[a]]], [], [[q]], [[1.0]], r)
        y = simulate(m, 40, 3).y[:, 0]
        x, P, out = 0.0, q, []
        for k, yk in enumerate(y):
            if k:
                x, P = a * x, a * a * P + q
            K = P / (P + r)
            x, P = x + K * (yk - x), (1 - K) * P
            out.append(x)
        np.testing.assert_allclose(augmented_kalman(m, y)[:, 0], out, atol=1e-12)

    def test_transition_reproduces_dynamics(self, random_models):
        from rpasfa import apply_dynamics

        for m in random_models[:6]:
            F, G, _ = augmented_matrices(m)
            e = np.random.default_rng(1).normal(size=(30, m.latent_dim))
            z = G @ e[0]
            xs = [z[: m.latent_dim]]
            for k in range(1, 30):
                z = F @ z + G @ e[k]
                xs.append(z[: m.latent_dim])
            np.testing.assert_allclose(np.array(xs), apply_dynamics(m, e), atol=1e-12)

    def test_agrees_with_batch(self, random_models):
        for i, m in enumerate(random_models[:8]):
            y = simulate(m, 150, i).y
            a, b = augmented_kalman(m, y), batch_filtered_mmse(m, y)
            assert np.max(np.linalg.norm(a - b, axis=1) / (1 + np.linalg.norm(b, axis=1))) < 1e-8


class TestStatic:
    def test_gain(self, arma11_model):
        g = static_gain(arma11_model)[0, 0]
        assert g == pytest.approx(GAMMA * C / (C * C * GAMMA + R), rel=1e-12)
        assert g == pytest.approx(0.83877, abs=1e-4)

    def test_theoretical_mse_by_simulation(self, arma11_model):
        theory = GAMMA * R / (C * C * GAMMA + R)
        assert theory == pytest.approx(0.47182, abs=1e-4)
        traj = simulate(arma11_model, 200_000, 99)
        assert mse(traj.x, static_posterior(arma11_model, traj.y))[0] == pytest.approx(theory, rel=0.02)

    def test_vanishing_snr(self):
        m = CheckedModel.from_matrices([[[0.5, 0], [0, 0.2]]], [], np.eye(2), np.eye(2), 1e12)
        est = static_posterior(m, np.ones((4, 2)))
        assert np.max(np.abs(est)) < 1e-10

    def test_uses_stationary_covariance(self, random_models):
        m = random_models[7]
        gamma = stationary_cov(m)
        ref = gamma @ m.C.T @ np.linalg.inv(m.C @ gamma @ m.C.T + m.R)
        np.testing.assert_allclose(static_gain(m), ref, rtol=1e-10)

    def test_no_better_than_batch(self, arma11_model):
        for seed in range(10):
            traj = simulate(arma11_model, 400, seed)
            batch = mse(traj.x, batch_filtered_mmse(arma11_model, traj.y))[0]
            static = mse(traj.x, static_posterior(arma11_model, traj.y))[0]
            assert static >= batch
