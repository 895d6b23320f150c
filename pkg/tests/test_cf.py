import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from icsec.cf import (EffectiveMac, best_coefficients, build_effective_mac, combination_rates,
                      computation_rate, mmse_noise, own_message_rate, short_vectors)
from icsec.channel import ChannelMatrix, sample_channel
from icsec.power import PowerProfile, uniform_profile

from conftest import diag_dominant


def random_mac(rng, K=4, P=100.0):
    return EffectiveMac(rng.uniform(0.3, 1.5, K), rng.uniform(0.1, 1.0, K) * P)


def conditional_variance(mac, a, decoded=()):
    """Oracle: Var(a.x | y, decoded combinations) from the joint covariance."""
    K = mac.K
    D = np.diag(mac.P)
    A = np.asarray(decoded, float).reshape(-1, K)
    # observations: y = h.x + z, v_j = A_j.x ; target t = a.x
    C_yy = mac.h @ D @ mac.h + 1.0
    C_yv = A @ D @ mac.h
    C_vv = A @ D @ A.T
    C_oo = np.block([[np.array([[C_yy]]), C_yv[None, :]], [C_yv[:, None], C_vv]])
    c_to = np.concatenate([[a @ D @ mac.h], A @ D @ a])
    return float(a @ D @ a - c_to @ np.linalg.solve(C_oo, c_to))


def beta_grid_oracle(mac, a, lo=-5.0, hi=5.0):
    """Minimise sigma^2(beta) by repeated grid refinement."""
    a = np.asarray(a, float)

    def s2(b):
        return b ** 2 + ((b[:, None] * mac.h - a) ** 2 * mac.P).sum(axis=1)

    for _ in range(6):
        b = np.linspace(lo, hi, 1001)
        v = s2(b)
        k = int(np.argmin(v))
        step = b[1] - b[0]
        lo, hi = b[k] - step, b[k] + step
    return float(s2(np.array([b[k]]))[0]), float(b[k])


def test_mac_examples():
    g = np.ones((4, 4))
    H = ChannelMatrix(g)
    prof = PowerProfile(2.0, np.full((4, 1), 0.5), np.full((4, 1), 0.5))  # PJ = 1 -> h^2 PJ = 1
    mac = build_effective_mac(0, H, prof)
    assert np.allclose(mac.h[1:], 1 / math.sqrt(2))
    off = PowerProfile(2.0, np.full((4, 1), 0.5), np.zeros((4, 1)))
    H2 = ChannelMatrix(np.array([[1.3, .5, .6, .7], [.4, 1.1, .5, .6], [.5, .6, 1.2, .4], [.6, .5, .4, 1.4]]))
    mac2 = build_effective_mac(2, H2, off)
    assert np.allclose(mac2.h, [1.2, 1, 1, 1])
    prof3 = uniform_profile(H2, 30.0, 2)
    for i in range(4):
        m = build_effective_mac(i, H2, prof3)
        assert m.P[0] == pytest.approx(prof3.message_total[i])
        assert np.allclose(m.P, m.P_total * m.b_eff ** 2)


def test_mac_cap_enforced():
    H = ChannelMatrix(np.ones((4, 4)))
    prof = uniform_profile(H, 10.0, 1, cap=False)
    with pytest.raises(ValueError, match="cap"):
        build_effective_mac(0, H, prof)
    build_effective_mac(0, H, prof, enforce_cap=False)


def test_single_user_example():
    mac = EffectiveMac(np.array([1.0, 0, 0]), np.array([15.0, 0, 0]))
    R, s2, _ = computation_rate(mac, [1, 0, 0])
    assert s2 == pytest.approx(15 / 16, abs=1e-12)
    assert R == pytest.approx(2.0, abs=1e-12)


def test_two_user_example():
    mac = EffectiveMac(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
    R, s2, beta = computation_rate(mac, [1, 1])
    assert beta == pytest.approx(2 / 3, abs=1e-12)
    assert s2 == pytest.approx(2 / 3, abs=1e-12)
    assert R == pytest.approx(0.5 * math.log2(1.5), abs=1e-12)
    s_grid, b_grid = beta_grid_oracle(mac, [1, 1])
    assert abs(b_grid - beta) < 1e-6 and abs(s_grid - s2) < 1e-9


def test_errors():
    mac = EffectiveMac(np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        computation_rate(mac, [0, 0, 0])
    with pytest.raises(ValueError):
        computation_rate(mac, [2, 2, 0], decoded=[[1, 1, 0]])


@given(st.integers(0, 2**31), st.integers(0, 3))
def test_mmse_matches_covariance_oracle(seed, n_dec):
    rng = np.random.default_rng(seed)
    mac = random_mac(rng)
    A = rng.integers(-3, 4, size=(n_dec + 1, 4))
    if np.linalg.matrix_rank(A) < len(A):
        return
    s2, _, _ = mmse_noise(mac, A[-1], A[:-1])
    assert s2 == pytest.approx(conditional_variance(mac, A[-1], A[:-1]), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2**31))
def test_side_information_never_hurts(seed):
    rng = np.random.default_rng(seed)
    mac = random_mac(rng)
    A = rng.integers(-3, 4, size=(4, 4))
    if np.linalg.matrix_rank(A) < 4:
        return
    prev = math.inf
    for k in range(4):
        s2, _, _ = mmse_noise(mac, A[3], A[3 - k:3] if k else ())
        assert s2 <= prev * (1 + 1e-12)
        prev = s2


@given(st.integers(0, 2**31))
def test_closed_form_beats_grid(seed):
    rng = np.random.default_rng(seed)
    mac = random_mac(rng, K=3, P=50.0)
    a = rng.integers(-4, 5, size=3)
    if not a.any():
        return
    s2, beta, _ = mmse_noise(mac, a)
    grid = np.linspace(beta - 1, beta + 1, 1000)
    vals = grid ** 2 + ((grid[:, None] * mac.h - a) ** 2 * mac.P).sum(axis=1)
    assert np.all(vals >= s2 - 1e-9 * max(1, s2))
    assert float(beta ** 2 + ((beta * mac.h - a) ** 2 * mac.P).sum()) == pytest.approx(s2, rel=1e-9)
    assert a @ mac.gram() @ a == pytest.approx(s2, rel=1e-9, abs=1e-9)


def test_short_vectors_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(20):
        X = rng.normal(size=(3, 3))
        G = X @ X.T + 0.1 * np.eye(3)
        bound = rng.uniform(0.5, 6.0)
        got = {tuple(v) for v in short_vectors(G, bound, box=6)}
        want = {v for v in itertools.product(range(-6, 7), repeat=3)
                if any(v) and np.array(v) @ G @ np.array(v) <= bound}
        assert got == want


def test_single_informative_direction():
    mac = EffectiveMac(np.array([1.2, 0, 0, 0]), np.array([50.0, 1.0, 1.0, 1.0]))
    c = best_coefficients(mac)
    assert np.array_equal(c.A[0], [1, 0, 0, 0])


def test_first_step_is_exhaustive_optimum():
    rng = np.random.default_rng(9)
    for _ in range(10):
        mac = random_mac(rng, K=3, P=20.0)
        c = best_coefficients(mac, radius=3)
        best = max(computation_rate(mac, v)[0]
                   for v in itertools.product(range(-3, 4), repeat=3) if any(v))
        assert c.raw_rates[0] == pytest.approx(best, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_coefficient_set_invariants(seed):
    H = sample_channel(4, "uniform(0.5,1.5)", seed)
    prof = uniform_profile(H, 10.0 ** (1 + seed % 5), 1)
    mac = build_effective_mac(seed % 4, H, prof)
    c = best_coefficients(mac)
    assert np.linalg.matrix_rank(c.A) == 4
    assert np.all(np.diff(c.rates) <= 0) and np.all(np.diff(c.sigma2) >= 0)
    assert np.allclose(combination_rates(mac, c), c.rates)
    for k in range(4):
        R, s2, _ = computation_rate(mac, c.A[k], c.A[:k])
        assert R == pytest.approx(c.raw_rates[k]) and s2 == pytest.approx(c.raw_sigma2[k])
        rec = 0.5 * math.log2(mac.P[c.order[k]] / c.sigma2[k])
        assert c.rates[k] == pytest.approx(max(rec, 0.0), abs=1e-12)


def test_radius_doubling_agrees():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        H = ChannelMatrix(rng.uniform(0.5, 1.5, (4, 4)))
        mac = build_effective_mac(int(rng.integers(4)), H, uniform_profile(H, 100.0, 1))
        r = best_coefficients(mac).rates
        r2 = best_coefficients(mac, 2 * best_coefficients(mac).radius).rates
        assert np.allclose(r, r2, rtol=0, atol=1e-12)


def test_own_rate_bounds():
    H = sample_channel(4, "uniform(0.5,1.5)", 1)
    prof = uniform_profile(H, 1e3, 1)
    for i in range(4):
        mac = build_effective_mac(i, H, prof)
        c = best_coefficients(mac)
        R = own_message_rate(i, H, prof)
        assert 0 <= R <= 0.5 * math.log2(mac.P[0] / c.sigma2[0]) + 1e-12
    zero = prof.with_zero_message([2])
    assert own_message_rate(2, H, zero) == 0.0


def test_jamming_off_dof_oracle():
    P = 1e4
    ratios = []
    for seed in range(10):
        H = diag_dominant(seed)
        prof = PowerProfile(P, np.ones((4, 1)), np.zeros((4, 1)))
        ref = 0.25 * 0.5 * math.log2(P)
        ratios.append(np.mean([own_message_rate(i, H, prof) for i in range(4)]) / ref)
    assert 0.85 <= np.mean(ratios) <= 1.05
