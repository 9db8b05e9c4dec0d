import pytest
from hypothesis import given, strategies as st

from qsppricer import FixedPointFormat


def test_unsigned_codec_basics():
    fmt = FixedPointFormat(3, 0)
    assert fmt.resolution == 0.125
    assert fmt.decode(0) == 0.0
    assert fmt.decode(3) == 0.375
    assert fmt.encode(0.375) == 3


def test_signed_codec():
    fmt = FixedPointFormat(4, 2, signed=True)
    assert fmt.min_value == -2.0
    assert fmt.max_value == 2.0 - 0.25
    assert fmt.decode(fmt.encode(-1.5)) == -1.5
    # two's complement: -1.5 / 0.25 = -6 -> 16 - 6 = 10
    assert fmt.encode(-1.5) == 10


def test_shift_offsets_decoded_values():
    fmt = FixedPointFormat(4, 2, shift=1.0)
    assert fmt.decode(fmt.encode(-0.75)) == -0.75
    assert fmt.min_value == -1.0


def test_off_grid_rejected():
    fmt = FixedPointFormat(4, 2)
    with pytest.raises(ValueError):
        fmt.encode(0.3)
    with pytest.raises(ValueError):
        fmt.encode(4.0)


def test_invalid_layout_rejected():
    with pytest.raises(ValueError):
        FixedPointFormat(0, 0)
    with pytest.raises(ValueError):
        FixedPointFormat(4, 5)
    with pytest.raises(ValueError):
        FixedPointFormat(4, 2, shift=-1.0)


def test_snap_down():
    fmt = FixedPointFormat(4, 2, signed=True)
    assert fmt.snap_down(0.3) == 0.25
    assert fmt.snap_down(-0.3) == -0.5
    assert fmt.snap_down(0.25) == 0.25


@given(st.integers(min_value=1, max_value=10), st.data())
def test_codec_round_trips_every_code(n, data):
    p = data.draw(st.integers(min_value=0, max_value=n))
    signed = data.draw(st.booleans())
    fmt = FixedPointFormat(n, p, signed=signed)
    code = data.draw(st.integers(min_value=0, max_value=(1 << n) - 1))
    assert fmt.encode(fmt.decode(code)) == code
