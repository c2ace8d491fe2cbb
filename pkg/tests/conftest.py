import numpy as np
import pytest

from leonrs.config import ScenarioConfig
from leonrs.scenario import build_scene
from leonrs.sensing import AmbiguityTerm, SensingScene

# filled by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def desk_cfg():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def desk_scene(desk_cfg):
    return build_scene(desk_cfg, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_beams(rng, scene, scale=1.0):
    """Random complex (w, [v_m]) sized for ``scene``."""
    n = scene.N * scene.K
    cplx = lambda: (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * scale
    return cplx(), [cplx() for _ in range(scene.M)]


def unit(rng, n):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return x / np.linalg.norm(x)


def random_sensing_scene(rng, N=4, K=3, L=2):
    """Synthetic sensing scene with random steering, gains and ambiguities."""
    nav_dirs = np.zeros((N * K, K), complex)
    t = np.zeros(N * K, complex)
    for k in range(K):
        nav_dirs[k * N:(k + 1) * N, k] = unit(rng, N)
        g = 10 ** rng.uniform(-1, 1) * np.exp(2j * np.pi * rng.random())
        t[k * N:(k + 1) * N] = np.conj(g) * nav_dirs[k * N:(k + 1) * N, k]
    ambs = []
    for k in range(K):
        for _ in range(L):
            e = np.zeros(N * K, complex)
            e[k * N:(k + 1) * N] = unit(rng, N)
            ambs.append(AmbiguityTerm(k, float(10 ** rng.uniform(-2, 0)), e, unit(rng, N)))
    beta = complex(rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.random()))
    return SensingScene(a_r=unit(rng, N), t=t, beta=beta, nav_dirs=nav_dirs,
                        nav_coef=10 ** rng.uniform(-2, 0, K), ambiguities=ambs,
                        sigma_s2=10 ** rng.uniform(-2, 0))
