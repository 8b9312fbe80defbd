import pytest
from hypothesis import given
from hypothesis import strategies as st

from deixis.evaluation import frame_sample


def test_exact_fit():
    assert frame_sample(32, 32) == list(range(32))


def test_longer_clip_includes_endpoints():
    got = frame_sample(94, 32)
    assert len(got) == 32 and got[0] == 0 and got[-1] == 93
    assert all(a < b for a, b in zip(got, got[1:]))


def test_short_clip_dedups():
    assert frame_sample(10, 32) == list(range(10))


def test_accepts_clip(forged):
    clip = forged.clips[0]
    assert frame_sample(clip, 32) == frame_sample(clip.n_frames, 32)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        frame_sample(10, 0)
    with pytest.raises(ValueError):
        frame_sample(0, 4)


@given(n_frames=st.integers(1, 2000), n=st.integers(1, 64))
def test_sample_properties(n_frames, n):
    got = frame_sample(n_frames, n)
    assert len(got) == min(n, n_frames)
    assert got[0] == 0 and all(a < b for a, b in zip(got, got[1:]))
    assert got[-1] == (n_frames - 1 if n > 1 else 0)
