import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile("ci")


def ar1(T, phi, seed, sigma=0.01, burn=500):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(T + burn) * sigma
    x = np.zeros(T + burn)
    for t in range(1, T + burn):
        x[t] = phi * x[t - 1] + e[t]
    return x[burn:]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def grad_check(net, X, rng, entries=30, eps=1e-5):
    """Relative error between backprop and central differences on sampled parameters and inputs.

    The scalar objective is ``sum(U * net(X))`` for a fixed random ``U``.
    """
    from cgan_strategies.neuralnet import backward, forward

    acts = forward(net, X)
    U = rng.standard_normal(acts[-1].shape)
    grads, gx = backward(net, acts, U)

    def loss(n, x=X):
        return float(np.sum(U * forward(n, x)[-1]))

    analytic, numeric = [], []
    for layer, (W, b) in enumerate(zip(net.weights, net.biases)):
        for which, P, G in (("w", W, grads[layer][0]), ("b", b, grads[layer][1])):
            flat = rng.choice(P.size, size=min(entries, P.size), replace=False)
            for f in flat:
                idx = np.unravel_index(f, P.shape)
                vals = []
                for sign in (1, -1):
                    Q = P.copy()
                    Q[idx] += sign * eps
                    ws, bs = list(net.weights), list(net.biases)
                    (ws if which == "w" else bs)[layer] = Q
                    vals.append(loss(type(net)(tuple(ws), tuple(bs), net.hidden_activation,
                                                net.output_activation, net.weight_decay)))
                analytic.append(G[idx])
                numeric.append((vals[0] - vals[1]) / (2 * eps))
    for f in rng.choice(X.size, size=min(entries, X.size), replace=False):
        idx = np.unravel_index(f, X.shape)
        vals = []
        for sign in (1, -1):
            Y = X.copy()
            Y[idx] += sign * eps
            vals.append(loss(net, Y))
        analytic.append(gx[idx])
        numeric.append((vals[0] - vals[1]) / (2 * eps))
    a, n = np.array(analytic), np.array(numeric)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-300))


def write_asset(path, T, seed, phi=0.3):
    """Returns CSV on business days with an AR(1) series."""
    r = ar1(T, phi, seed)
    dates = np.busday_offset("2001-01-01", np.arange(T), roll="forward")
    with open(path, "w") as fh:
        fh.write("date,return\n")
        for d, v in zip(dates, r):
            fh.write(f"{d},{float(v)!r}\n")
    return path


SMALL_CONFIG = {
    "holdout": 150,
    "p": 5,
    "cgan": {"sizes": ["small"], "p": 5, "noise_dim": 5, "epochs": 100, "snap": 50,
             "eval_samples": 3, "learning_rate": 0.05},
    "case1": {"resamplers": ["stat_boot", "cgan_small"], "B": [2, 4], "learners": {"reg_tree": {"max_depth": 3}}},
    "case2": {"schemes": ["naive", "one_split", "kfold", "stat_boot", "cgan_small"], "one_split_val": 100,
              "kfold_k": 3, "bootstrap_B": 2, "cgan_B": 2, "cgan_val": 100,
              "grids": {"ridge": {"shrinkage": [0.01, 1.0]}}},
}


# one line per acceptance criterion, echoed in the terminal summary
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
