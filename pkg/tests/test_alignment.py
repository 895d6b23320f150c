from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from icsec.alignment import (Monomial, PhiMapping, aligned_fraction, aligned_set, gain, phi,
                             phi_inv, precoder_f, precoder_g)
from icsec.channel import ChannelMatrix, sample_channel


def ones(K, v=1.0):
    return ChannelMatrix(np.full((K, K), v))


def test_phi_first_indices():
    mp = PhiMapping(4, 2)
    assert phi(1, mp) == (1, 1, 1, 1, 1, 1)
    assert phi(2, mp) == (2, 1, 1, 1, 1, 1)
    assert phi(mp.M, mp) == (2,) * 6


def test_phi_bijection_small():
    mp = PhiMapping(4, 2)
    assert [phi_inv(phi(m, mp), mp) for m in range(1, 65)] == list(range(1, 65))
    assert len({phi(m, mp) for m in range(1, 65)}) == 64
    assert np.array_equal(mp.table, np.array([phi(m, mp) for m in range(1, 65)]))


@given(st.sampled_from([4, 6]), st.integers(2, 5), st.data())
def test_phi_bijection(K, T, data):
    mp = PhiMapping(K, T)
    m = data.draw(st.integers(1, mp.M))
    assert phi_inv(phi(m, mp), mp) == m


def test_phi_range():
    with pytest.raises(ValueError):
        phi(0, PhiMapping(4, 2))
    with pytest.raises(ValueError):
        phi_inv((3, 1, 1, 1, 1, 1), PhiMapping(4, 2))


def test_precoders_unit_gains():
    H, mp = ones(4), PhiMapping(4, 2)
    for m in range(1, mp.M + 1):
        for u in range(4):
            assert precoder_f(m, u, H, mp)[0] == 1.0
            assert precoder_g(m, u, H, mp)[0] == 1.0


def test_precoder_gains_two():
    H, mp = ones(4, 2.0), PhiMapping(4, 3)
    for m in (1, 17, 300, mp.M):
        v, mono = precoder_f(m, 1, H, mp)
        assert v == 2.0 ** sum(phi(m, mp))
        assert len(mono.variables) == 6


@pytest.mark.parametrize("K", [4, 6])
def test_exclusions_and_variable_sets(K):
    mp = PhiMapping(K, 2)
    H = sample_channel(K, "uniform(0.5,1.5)", 1)
    for u in range(K):
        _, f = precoder_f(mp.M, u, H, mp)
        _, g = precoder_g(mp.M, u, H, mp)
        assert f.exponent(u, u) == 0
        assert g.exponent(u, K - 1 - u) == 0
        _, g_partner = precoder_g(mp.M, K - 1 - u, H, mp)
        expected = {(u, k) for k in range(K) if k != u} | {(K - 1 - u, k) for k in range(K) if k != u}
        assert f.variables == g_partner.variables == expected


def test_odd_K_rejected():
    with pytest.raises(ValueError):
        precoder_f(1, 0, ones(5), PhiMapping(5, 2))
    with pytest.raises(ValueError):
        aligned_fraction(5, 2)


def naive_aligned(user, receiver, K, T):
    """Oracle: compare Monomial objects pairwise."""
    mp = PhiMapping(K, T)
    H = ones(K)
    p = K - 1 - user
    jam = {}
    for m2 in range(1, mp.M + 1):
        jam[gain(p, receiver) * precoder_g(m2, p, H, mp)[1]] = m2
    out = []
    for m in range(1, mp.M + 1):
        key = gain(user, receiver) * precoder_f(m, user, H, mp)[1]
        if key in jam:
            out.append((m, jam[key]))
    return out


@pytest.mark.parametrize("T", [2, 3])
def test_aligned_set_matches_naive_oracle(T):
    mp = PhiMapping(4, T)
    for u in range(4):
        for i in range(4):
            if i == u:
                continue
            got = aligned_set(u, i, mp)
            assert [tuple(r) for r in got.pairs] == naive_aligned(u, i, 4, T)


def test_aligned_pairs_evaluate_equal():
    mp = PhiMapping(4, 2)
    H = sample_channel(4, "uniform(0.5,1.5)", 5)
    for u, i in [(0, 1), (1, 3), (2, 0)]:
        p = 3 - u
        for m, m2 in aligned_set(u, i, mp).pairs:
            lhs = H.gains[u, i] * precoder_f(int(m), u, H, mp)[0]
            rhs = H.gains[p, i] * precoder_g(int(m2), p, H, mp)[0]
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_aligned_set_examples():
    assert len(aligned_set(0, 1, PhiMapping(4, 2))) == 16
    assert aligned_set(0, 1, PhiMapping(4, 2)).fraction == Fraction(1, 4)
    assert aligned_set(2, 1, PhiMapping(4, 3)).fraction == Fraction(4, 9)
    with pytest.raises(ValueError):
        aligned_set(1, 1, PhiMapping(4, 2))


def test_closed_form_examples():
    assert aligned_fraction(4, 2) == Fraction(1, 4)
    assert aligned_fraction(6, 10) == Fraction(81, 100)
    fr = [aligned_fraction(4, T) for T in range(2, 9)]
    assert all(a < b for a, b in zip(fr, fr[1:]))
    assert 1 - aligned_fraction(4, 10**6) < 1e-5


def test_alignment_is_symbolic():
    # the aligned set depends only on exponents, never on channel values
    mp = PhiMapping(6, 2)
    a = aligned_set(1, 4, mp)
    assert a.pairs.dtype.kind == "i"
    assert np.array_equal(a.pairs, aligned_set(1, 4, PhiMapping(6, 2)).pairs)


def test_monomial_algebra():
    a = Monomial.from_map({(0, 1): 2, (1, 2): 1})
    b = Monomial.from_map({(0, 1): -2})
    assert (a * b).as_dict() == {(1, 2): 1}
    H = ones(3, 3.0)
    assert a.evaluate(H) == 27.0
