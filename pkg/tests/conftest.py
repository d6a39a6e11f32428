import numpy as np
import pytest

from rpasfa import SYNTHETIC_ARMA11, ArmaSpec, ObservationSpec, load_model, validate


def random_stable_model(rng, latent_dims=(1, 2, 3), ar_orders=(1, 2, 3), ma_orders=(0, 1, 2, 3), max_root=0.9, obs_dims=(1, 2, 3)):
    """Diagonal model with real or complex-pair AR roots of modulus <= max_root."""
    d = int(rng.choice(latent_dims))
    L = int(rng.choice(ar_orders))
    M = int(rng.choice(ma_orders))
    q = int(rng.choice(obs_dims))
    ar = np.zeros((d, L))
    for j in range(d):
        roots = []
        while len(roots) < L:
            if L - len(roots) >= 2 and rng.random() < 0.5:
                z = rng.uniform(0, max_root) * np.exp(1j * rng.uniform(0, np.pi))
                roots += [z, np.conj(z)]
            else:
                roots.append(rng.uniform(-max_root, max_root))
        if L:
            ar[j] = -np.real(np.poly(roots))[1:]
    ma = rng.uniform(-0.9, 0.9, size=(d, M))
    spec = ArmaSpec(d, ar, ma, rng.uniform(0.3, 2.0, size=d))
    obs = ObservationSpec(rng.normal(size=(q, d)), float(rng.uniform(0.1, 1.0)))
    return validate(spec, obs)


@pytest.fixture(scope="session")
def arma11_model():
    return load_model(SYNTHETIC_ARMA11)


@pytest.fixture(scope="session")
def random_models():
    rng = np.random.default_rng(20240611)
    return [random_stable_model(rng) for _ in range(24)]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
