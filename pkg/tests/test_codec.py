import io
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from oqc.codec import (
    DecodeError,
    GolombCode,
    elias_decode,
    elias_encode,
    elias_length,
    elias_length_bound,
    elias_length_bound_literal,
    expected_length,
    expected_length_closed_form,
    geometric_code,
    geometric_entropy,
    read_transcript,
    transcript_bytes,
    tuple_decode,
    tuple_encode,
    tuple_length,
    tuple_length_bound,
    write_transcript,
)


def test_elias_hand_values():
    assert elias_encode(1) == "1"
    assert elias_encode(2) == "0100"
    assert elias_encode(17) == "001010001"
    assert elias_length_bound(17) == 12


def test_elias_rejects_nonpositive():
    for bad in (0, -3):
        with pytest.raises(ValueError):
            elias_encode(bad)


def test_elias_length_formula_matches_encoder():
    for n in list(range(1, 3000)) + [2**20, 2**31 - 1, 10**12]:
        assert len(elias_encode(n)) == elias_length(n)


@settings(max_examples=200)
@given(st.integers(1, 10**18))
def test_elias_round_trip(n):
    word = elias_encode(n)
    assert elias_decode(word) == (n, len(word))


def test_elias_prefix_free():
    words = sorted(elias_encode(n) for n in range(1, 10_001))
    for a, b in zip(words, words[1:]):
        assert not b.startswith(a)


def test_random_concatenation_decodes_uniquely():
    rng = random.Random(4)
    nums = [rng.randint(1, 10**6) for _ in range(1000)]
    stream = "".join(elias_encode(n) for n in nums)
    out, pos = [], 0
    while pos < len(stream):
        n, used = elias_decode(stream, pos)
        out.append(n)
        pos += used
    assert out == nums


def test_elias_length_bound_range():
    assert all(elias_length(n) <= elias_length_bound(n) for n in range(2, 200_001))


def test_literal_bound_fails_only_at_two():
    # log2 log2 2 = 0 leaves a budget of 2 bits for the 4-bit word "0100"
    bad = [n for n in range(2, 100_001) if elias_length(n) > elias_length_bound_literal(n)]
    assert bad == [2]
    assert elias_length_bound(2) == 4


def test_elias_decode_errors_carry_offset():
    with pytest.raises(DecodeError) as exc:
        elias_decode("000")
    assert exc.value.offset == 3
    with pytest.raises(DecodeError):
        elias_decode("0010")  # length field cut short
    with pytest.raises(DecodeError):
        elias_decode("01")


def test_tuple_examples():
    assert tuple_encode((1, 1, 1)) == "111"
    assert tuple_length((2, 3)) == 8
    with pytest.raises(ValueError):
        tuple_encode(())


@settings(max_examples=100)
@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=6))
def test_tuple_round_trip_and_bound(t):
    word = tuple_encode(t)
    assert tuple_decode(word, len(t)) == (tuple(t), len(word))
    if math.prod(t) >= 2:
        assert len(word) <= tuple_length_bound(t) + 1e-9


def test_golomb_round_trip_and_prefix_free():
    for M in (1, 2, 3, 5, 8, 13):
        code = GolombCode(M)
        words = [code.encode(k) for k in range(1, 3000)]
        assert all(code.length(k) == len(w) for k, w in zip(range(1, 3000), words))
        assert all(code.decode(w) == (k, len(w)) for k, w in zip(range(1, 3000), words))
        s = sorted(words)
        assert all(not b.startswith(a) for a, b in zip(s, s[1:]))


def test_geometric_code_round_trip_large():
    code = geometric_code(0.25)
    for k in range(1, 100_001, 7):
        assert code.decode(code.encode(k))[0] == k


def test_geometric_code_parameter():
    assert geometric_code(0.5).M == 3
    with pytest.raises(ValueError):
        geometric_code(1.0)


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.5, 0.9])
def test_geometric_expected_length_bounds(delta):
    code = geometric_code(delta)
    el = expected_length(code, delta, tail=1e-13)
    assert el <= 2 * math.log2(4 / delta)
    assert el <= geometric_entropy(delta) + 1


def test_expected_length_matches_direct_sum():
    delta = 0.5
    code = geometric_code(delta)
    s = delta * delta
    direct = sum((1 - s) ** (k - 1) * s * code.length(k) for k in range(1, 400))
    assert expected_length(code, delta) == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.5])
def test_series_tail_below_threshold(delta):
    code = geometric_code(delta)
    exact = expected_length_closed_form(code, delta)
    assert 0 <= exact - expected_length(code, delta, tail=1e-12) <= 1e-12


def test_transcript_round_trip():
    msgs = ["", "1", "0100", "1" * 9, "01" * 37]
    blob = transcript_bytes(msgs)
    assert blob.startswith(b"OQC1")
    assert read_transcript(io.BytesIO(blob)) == msgs


def test_transcript_bad_magic_and_truncation():
    with pytest.raises(ValueError):
        read_transcript(io.BytesIO(b"XXXX"))
    blob = transcript_bytes(["1" * 20])
    with pytest.raises(ValueError):
        read_transcript(io.BytesIO(blob[:-1]))
    with pytest.raises(ValueError):
        write_transcript(io.BytesIO(), ["012"])
