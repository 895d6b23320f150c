import numpy as np
import pytest
from hypothesis import given, strategies as st

from icsec.channel import (ChannelMatrix, ChannelSpec, even_channel, pad_dummy_user,
                           sample_channel)


def test_sampling_is_deterministic():
    a = sample_channel(4, "uniform(0.5,1.5)", 7)
    b = sample_channel(4, "uniform(0.5,1.5)", 7)
    assert np.array_equal(a.gains, b.gains)


def test_uniform_support():
    H = sample_channel(4, "uniform(0.5,1.5)", 7)
    assert np.all((H.gains >= 0.5) & (H.gains <= 1.5))


def test_small_K_rejected():
    with pytest.raises(ValueError, match="K must be ≥ 3"):
        sample_channel(2, "uniform(0.5,1.5)", 0)


def test_pad_preserves_block():
    H = sample_channel(5, "uniform(0.5,1.5)", 11)
    P = pad_dummy_user(H)
    assert P.K == 6 and P.dummy == (5,)
    assert np.array_equal(P.gains[:5, :5], H.gains)
    assert not np.array_equal(P.gains[5], H.gains[0, :])


def test_pad_even_rejected():
    with pytest.raises(ValueError):
        pad_dummy_user(sample_channel(4, "uniform(0.5,1.5)", 0))


def test_even_channel_passthrough():
    H = sample_channel(4, "uniform(0.5,1.5)", 0)
    assert even_channel(H) is H


def test_json_round_trip():
    H = pad_dummy_user(sample_channel(5, "gaussian-magnitude(1,0.3)", 2))
    back = ChannelMatrix.from_json(H.to_json())
    assert np.array_equal(back.gains, H.gains)
    assert (back.seed, back.spec, back.dummy) == (H.seed, H.spec, H.dummy)
    assert set(H.to_dict()) >= {"K", "gains", "seed", "spec"}


def test_bad_matrices():
    with pytest.raises(ValueError):
        ChannelMatrix(np.ones((3, 4)))
    with pytest.raises(ValueError):
        ChannelMatrix(np.array([[1, 0, 1], [1, 1, 1], [1, 1, 1]], float))
    with pytest.raises(ValueError):
        ChannelSpec.parse("laplace(1,2)")


@given(st.integers(3, 7), st.integers(0, 2**32 - 1))
def test_pure_function_of_inputs(K, seed):
    a = sample_channel(K, "gaussian-magnitude(1,0.5)", seed)
    b = sample_channel(K, "gaussian-magnitude(1,0.5)", seed)
    assert np.array_equal(a.gains, b.gains)
    assert np.all(a.gains > 0)
    padded = even_channel(a)
    assert padded.K % 2 == 0
    assert np.array_equal(padded.gains[:K, :K], a.gains)
