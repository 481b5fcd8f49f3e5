import numpy as np
import pytest

from thinlaw.streams import stream, stream_key


def test_same_labels_same_numbers():
    a = stream(42, "thin-numbers", 8, 0).random(5)
    b = stream(42, "thin-numbers", 8, 0).random(5)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("other", [(43, "thin-numbers", 8, 0), (42, "large-numbers", 8, 0),
                                   (42, "thin-numbers", 16, 0), (42, "thin-numbers", 8, 1)])
def test_any_label_change_gives_new_stream(other):
    base = stream(42, "thin-numbers", 8, 0).random(5)
    assert not np.array_equal(base, stream(*other).random(5))


def test_stream_key():
    assert stream_key(3, np.int64(4)) == (3, 4)
    assert stream_key("x") == stream_key("x")
    with pytest.raises(ValueError):
        stream_key(-1)
    with pytest.raises(TypeError):
        stream_key(1.5)


def test_seed_range():
    stream(0)
    stream(2**64 - 1)
    for bad in (-1, 2**64):
        with pytest.raises(ValueError):
            stream(bad)


def test_substreams_look_independent():
    x = stream(7, "a").standard_normal(50_000)
    y = stream(7, "b").standard_normal(50_000)
    # correlation of independent normals has sd 1/sqrt(N)
    assert abs(np.corrcoef(x, y)[0, 1]) < 5 / np.sqrt(50_000)
