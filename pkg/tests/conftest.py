"""Shared fixtures and brute-force oracles.

The oracles here deliberately avoid the package's own algebra: fixed
effects are fitted by least squares on explicit entity dummies and random
effects by GLS with the full N*T error covariance matrix.
"""

import numpy as np
import pytest

from panelkit.dataset import PanelDataset, VariableSelection


def random_panel(seed, n_entities=None, n_periods=None, k=None, min_entities=3):
    """Seeded panel with entity effects and heteroskedastic noise."""
    rng = np.random.default_rng(seed)
    N = n_entities or int(rng.integers(min_entities, 11))
    T = n_periods or int(rng.integers(3, 16))
    k = k or int(rng.integers(1, 4))
    X = rng.normal(size=(N, T, k)) * rng.uniform(0.5, 3.0, size=k) + rng.normal(size=(N, 1, k))
    beta = rng.uniform(-3, 3, size=k)
    u = rng.normal(scale=rng.uniform(0.0, 2.0), size=N)
    y = 1.5 + X @ beta + u[:, None] + rng.normal(size=(N, T))
    entities = tuple(f"E{i}" for i in range(N))
    periods = tuple(str(2000 + t) for t in range(T))
    names = tuple(f"x{j + 1}" for j in range(k))
    ds = PanelDataset(entities, periods, {"y": y, **{n: X[:, :, j] for j, n in enumerate(names)}})
    return ds, VariableSelection("y", names)


def stacked(ds, sel):
    y = ds["y"].reshape(-1)
    X = np.column_stack([ds[n].reshape(-1) for n in sel.regressors])
    return y, X


def lsdv_oracle(y, X, N, T):
    """Slopes, slope covariance and entity intercepts from a dummy regression."""
    D = np.kron(np.eye(N), np.ones((T, 1)))
    Z = np.column_stack([X, D])
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    resid = y - Z @ coef
    s2 = resid @ resid / (N * T - Z.shape[1])
    V = s2 * np.linalg.inv(Z.T @ Z)
    k = X.shape[1]
    return coef[:k], V[:k, :k], coef[k:], resid


def gls_oracle(y, X, N, T):
    """Random-effects GLS with an explicit error covariance matrix.

    Variance components follow the within/between moment rules, computed
    here from the dummy and means regressions. The returned covariance is
    scaled by the residual variance of the whitened regression, which is
    what a quasi-demeaned OLS reports.
    """
    k = X.shape[1]
    _, _, _, e_w = lsdv_oracle(y, X, N, T)
    se2 = e_w @ e_w / (N * (T - 1) - k)
    ybar = y.reshape(N, T).mean(axis=1)
    Xbar = np.column_stack([X.reshape(N, T, k).mean(axis=1), np.ones(N)])
    b_b, *_ = np.linalg.lstsq(Xbar, ybar, rcond=None)
    e_b = ybar - Xbar @ b_b
    su2 = max(0.0, e_b @ e_b / (N - k - 1) - se2 / T)

    Omega = se2 * np.eye(N * T) + su2 * np.kron(np.eye(N), np.ones((T, T)))
    Oi = np.linalg.inv(Omega)
    Xc = np.column_stack([X, np.ones(N * T)])
    A = np.linalg.inv(Xc.T @ Oi @ Xc)
    coef = A @ Xc.T @ Oi @ y
    # whitened residuals: sigma_e * Omega^{-1/2} (y - Xc b)
    w, Q = np.linalg.eigh(Omega)
    half = Q @ np.diag(1.0 / np.sqrt(w)) @ Q.T
    r = np.sqrt(se2) * half @ (y - Xc @ coef)
    s2 = r @ r / (N * T - k - 1)
    V = s2 * A / se2
    return coef, V, se2, su2


def brute_hausman(bf, Vf, br, Vr):
    """Quadratic form written out term by term."""
    d = np.asarray(bf) - np.asarray(br)
    M = np.linalg.pinv(np.asarray(Vf) - np.asarray(Vr))
    return sum(d[i] * M[i, j] * d[j] for i in range(len(d)) for j in range(len(d)))


@pytest.fixture
def small_panel():
    return random_panel(7, n_entities=6, n_periods=8, k=2)


@pytest.fixture(scope="session")
def broadband():
    from panelkit.dataset import embedded_sample

    return embedded_sample("romania_broadband")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
