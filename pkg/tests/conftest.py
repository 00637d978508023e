import numpy as np
import pytest

from qflip import _kernels

# One line per acceptance criterion, filled in by test_acceptance.py and
# echoed after the run so the verdicts are visible without -s.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    """Run a test against every importable kernel backend."""
    return _kernels.get_backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density_matrix(rng):
    """A valid random qubit density matrix."""
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def ppo_gradcheck_worst(n_minibatches=10, seed=2024, coords_per_param=40,
                        batch_rows=32, h=1e-6):
    """Worst finite-difference error of the analytic policy-loss gradients.

    Builds random minibatches (observations, actions, stale log
    probabilities from a second network so the likelihood ratios stray
    from 1, plus random advantages and value targets), then compares
    every bias/head coordinate and a random sample of each weight matrix
    against central differences.  Returns the largest relative error
    max|analytic - fd| / max(1, |analytic|, |fd|) seen.
    """
    from qflip.ppo import (PolicyNetwork, PpoHyperparams, beta_log_pdf,
                           loss_and_grads)

    rng = np.random.default_rng(seed)
    hp = PpoHyperparams()
    worst = 0.0
    for _ in range(n_minibatches):
        policy = PolicyNetwork(seed=int(rng.integers(2 ** 31)))
        stale = PolicyNetwork(seed=int(rng.integers(2 ** 31)))
        obs = rng.normal(size=(batch_rows, 3))
        actions = rng.uniform(0.05, 0.95, size=batch_rows)
        a0, b0, _ = stale.forward(obs)
        old_lp = beta_log_pdf(actions, a0, b0)
        adv = rng.normal(size=batch_rows)
        rets = rng.normal(size=batch_rows)

        def loss_value():
            val, _, _ = loss_and_grads(policy, obs, actions, old_lp,
                                       adv, rets, hp)
            return val

        _, grads, _ = loss_and_grads(policy, obs, actions, old_lp,
                                     adv, rets, hp)
        for name, arr in policy.params.items():
            flat = arr.reshape(-1)
            if flat.size <= coords_per_param:
                idx = np.arange(flat.size)
            else:
                idx = rng.choice(flat.size, size=coords_per_param,
                                 replace=False)
            gflat = grads[name].reshape(-1)
            for j in idx:
                orig = flat[j]
                flat[j] = orig + h
                up = loss_value()
                flat[j] = orig - h
                down = loss_value()
                flat[j] = orig
                fd = (up - down) / (2.0 * h)
                err = abs(gflat[j] - fd) / max(1.0, abs(gflat[j]), abs(fd))
                worst = max(worst, err)
    return worst
