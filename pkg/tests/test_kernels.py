import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from ppgposture import kernels


def parse_oracle(buf):
    *tokens, rest = buf.split(b",")
    good, bad = [], 0
    for t in tokens:
        if t and t.isdigit() and int(t) < 2**32:
            good.append(int(t))
        else:
            bad += 1
    return good, bad, len(buf) - len(rest)


def onsets_oracle(x, base, spacing):
    cands = []
    i = 1
    n = len(x)
    while i < n - 1:
        if x[i] < x[i - 1]:
            j = i
            while j < n - 1 and x[j + 1] == x[i]:
                j += 1
            if j < n - 1 and x[j + 1] > x[i] and x[i] < base[i]:
                cands.append(i)
            i = j + 1
        else:
            i += 1
    out = []
    for c in cands:
        if not out or c - out[-1] > spacing:
            out.append(c)
        elif x[c] < x[out[-1]]:
            out[-1] = c
    return out


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in kernels.available_backends()


def test_parse_basic(backend):
    assert backend.parse_tokens(b"1234,2147483648,") == ([1234, 2**31], 0, 16)


def test_parse_keeps_partial(backend):
    vals, bad, used = backend.parse_tokens(b"12,34")
    assert vals == [12] and bad == 0 and used == 3


@pytest.mark.parametrize(
    "buf, vals, bad",
    [
        (b"abc,77,", [77], 1),
        (b",5,", [5], 1),
        (b"4294967296,4294967295,", [4294967295], 1),
        (b"-1,+2, 3,", [], 3),
        (b"000000000000042,", [42], 0),
        (b"99999999999999999999,1,", [1], 1),
    ],
)
def test_parse_malformed(backend, buf, vals, bad):
    got, nbad, used = backend.parse_tokens(buf)
    assert got == vals and nbad == bad and used == len(buf)


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=200) | st.lists(st.sampled_from([b"1", b"0", b"9", b",", b"x", b"42949672"])).map(b"".join))
def test_parse_matches_oracle(buf):
    for mod in kernels.available_backends().values():
        assert mod.parse_tokens(buf) == parse_oracle(buf)


def test_onsets_deeper_wins(backend):
    x = np.array([5, 1, 5, 5, 0, 5, 5, 5, 5, 5, 2, 5], dtype=float)
    base = np.full_like(x, 3.0)
    assert backend.select_onsets(x, base, 4.0).tolist() == [4, 10]


def test_onsets_plateau_leftmost(backend):
    x = np.array([3, 1, 1, 1, 3, 3], dtype=float)
    assert backend.select_onsets(x, np.full(6, 2.0), 1.0).tolist() == [1]


def test_onsets_edge_and_above_baseline(backend):
    x = np.array([0, 3, 1, 3, 0], dtype=float)
    assert backend.select_onsets(x, np.full(5, 0.5), 1.0).tolist() == []
    assert backend.select_onsets(x, np.full(5, 2.0), 1.0).tolist() == [2]
    assert backend.select_onsets(np.zeros(2), np.zeros(2), 1.0).tolist() == []


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.integers(-5, 5), min_size=0, max_size=120),
    st.floats(0.0, 20.0),
)
def test_onsets_match_oracle(vals, spacing):
    x = np.cumsum(np.array(vals, dtype=float)) if vals else np.zeros(0)
    base = np.convolve(x, np.ones(5) / 5, mode="same") if x.size >= 5 else x + 1.0
    expected = onsets_oracle(x, base, spacing)
    for mod in kernels.available_backends().values():
        got = mod.select_onsets(x, base, spacing).tolist()
        assert got == expected
        assert all(b - a > spacing for a, b in zip(got, got[1:]))
        assert all(x[i] < base[i] for i in got)


def _dual(alpha, K, y):
    Q = (y[:, None] * y[None, :]) * K
    return 0.5 * alpha @ Q @ alpha - alpha.sum()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_smo_matches_generic_qp(backend, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 2))
    y = np.where(X[:, 0] + 0.8 * rng.standard_normal(30) > 0, 1.0, -1.0)
    K = X @ X.T
    C = 1.0
    alpha, rho, it = backend.smo_solve(K, y, C, 1e-6, 100000)
    assert np.all(alpha >= -1e-12) and np.all(alpha <= C + 1e-12)
    assert abs(alpha @ y) < 1e-9
    ref = minimize(
        lambda a: _dual(a, K, y),
        np.zeros(30),
        jac=lambda a: ((y[:, None] * y[None, :]) * K) @ a - 1.0,
        bounds=[(0, C)] * 30,
        constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y}],
        method="SLSQP",
        options={"ftol": 1e-12, "maxiter": 1000},
    )
    assert _dual(alpha, K, y) <= ref.fun + 1e-6


def test_smo_separable_margin(backend):
    X = np.array([[-2.0, 0], [-1.0, 0], [1.0, 0], [2.0, 0]])
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    alpha, rho, _ = backend.smo_solve(X @ X.T, y, 100.0, 1e-8, 1000)
    w = (alpha * y) @ X
    # hard margin between x=-1 and x=1: w = 1, bias 0
    assert w[0] == pytest.approx(1.0, abs=1e-6)
    assert rho == pytest.approx(0.0, abs=1e-6)


def test_backends_agree_on_smo():
    mods = kernels.available_backends()
    if len(mods) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(5)
    X = rng.standard_normal((80, 4))
    y = np.where(X[:, 1] > 0, 1.0, -1.0)
    K = (X @ X.T + 1.0) ** 2
    a1, r1, i1 = mods["python"].smo_solve(K, y, 1.0, 1e-3, 4000)
    a2, r2, i2 = mods["cython"].smo_solve(K, y, 1.0, 1e-3, 4000)
    assert i1 == i2
    assert np.allclose(a1, a2, atol=1e-9) and r1 == pytest.approx(r2, abs=1e-9)
