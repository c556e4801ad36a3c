import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lindblad_oscillator import oracle
from lindblad_oscillator.params import OscillatorParams

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CORPUS_SEED = 5
CORPUS_SIZE = 20
CORPUS_DIM = 60


def random_corpus(seed=CORPUS_SEED, size=CORPUS_SIZE):
    """Valid parameter sets alternating between the two damping regimes.

    Diffusion sits at most 30 % above the positivity bound, which keeps the
    stationary phonon number below one so 60 Fock levels suffice.
    """
    rng = np.random.default_rng(seed)
    params, alphas = [], []
    while len(params) < size:
        overdamped = len(params) % 2 == 1
        om = rng.uniform(0.6, 1.2)
        lam = rng.uniform(0.8, 1.5)
        if overdamped:
            hi = min(1.6 * om, np.sqrt(lam**2 + om**2) - 0.3)
            if hi <= 1.05 * om:
                continue
            mu = rng.uniform(1.05 * om, hi)
        else:
            mu = rng.uniform(0.0, 0.6 * om)
        d_pq = rng.uniform(-0.2, 0.2)
        d_pp = rng.uniform(0.5, 0.8)
        d_qq = (lam**2 / 4 + d_pq**2) / d_pp * rng.uniform(1.0, 1.3)
        params.append(OscillatorParams(1.0, 1.0, om, lam, mu, d_pp, d_qq, d_pq))
        alphas.append(rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform()))
    return params, alphas


class CorpusRun:
    def __init__(self):
        start = time.perf_counter()
        self.params, self.alphas = random_corpus()
        self.t_final = max(10 / p.lambda_ for p in self.params)
        dt = oracle.stable_dt(self.params, CORPUS_DIM)
        cfg = oracle.IntegratorConfig(t_final=self.t_final, dim=CORPUS_DIM, dt=dt, save_every=20)
        initial = [oracle.InitialState.coherent(a) for a in self.alphas]
        self.trajectory = oracle.evolve(initial, cfg, self.params)
        self.seconds = time.perf_counter() - start


@pytest.fixture(scope="session")
def corpus_run():
    """One batched oracle run over the random corpus, shared by several tests."""
    return CorpusRun()


@pytest.fixture
def gibbs():
    # lambda = 1, mu = 0.3, omega = 1, hbar omega / kT = 1
    return OscillatorParams.thermal(1.0, 0.3, 1.0)


@pytest.fixture
def generic():
    return OscillatorParams(1.0, 1.0, 1.1, 0.7, 0.4, 0.9, 0.8, 0.15)


@pytest.fixture
def overdamped():
    return OscillatorParams(1.0, 1.0, 0.8, 1.2, 1.0, 1.4, 1.3, -0.1)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; lines are echoed in the summary."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, passed, detail, seconds):
        line = f"acceptance {number:>2}: {'PASS' if passed else 'FAIL'}  ({seconds:.1f} s)  {detail}"
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, None)
    if store:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(store):
            terminalreporter.write_line(store[k])
