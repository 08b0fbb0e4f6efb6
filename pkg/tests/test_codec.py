from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgacs import codec
from qgacs.codec import (Code, ElementaryMatrix, GaussianRational, Integer, Pair, SparseVector,
                         decode_object, encode_object, kraft_check, nat_length)

naturals = st.integers(min_value=0, max_value=10**6)
fractions = st.builds(Fraction, st.integers(-1000, 1000), st.integers(1, 1000))
gaussians = st.builds(GaussianRational, fractions, fractions)


@st.composite
def sparse_entries(draw, size):
    indices = sorted(draw(st.sets(st.integers(0, size - 1), max_size=min(size, 5))))
    values = [draw(gaussians.filter(lambda g: not g.is_zero())) for _ in indices]
    return tuple(zip(indices, values))


@st.composite
def vectors(draw):
    n = draw(st.integers(1, 3))
    return SparseVector(n, draw(sparse_entries(1 << n)))


@st.composite
def matrices(draw):
    n = draw(st.integers(1, 2))
    return ElementaryMatrix(n, draw(sparse_entries(1 << (2 * n))))


scalars = st.one_of(naturals, st.builds(Integer, st.integers(-10**6, 10**6)), fractions, gaussians)
objects = st.recursive(st.one_of(scalars, vectors(), matrices()),
                       lambda inner: st.builds(Pair, inner, inner), max_leaves=4)


def test_gamma_lengths():
    assert codec.gamma(1) == "1"
    assert codec.gamma(2) == "010"
    assert codec.gamma(5) == "00101"
    for k in range(200):
        assert nat_length(k) == len(codec.gamma(k + 1)) == 2 * (k + 1).bit_length() - 1


def test_zigzag_is_a_bijection():
    assert [codec.zigzag(z) for z in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
    for z in range(-50, 50):
        assert codec.unzigzag(codec.zigzag(z)) == z


@given(objects)
@settings(max_examples=300, deadline=None)
def test_object_round_trip(x):
    code = encode_object(x)
    assert decode_object(code) == x
    assert code.length == codec.code_length(x)


@given(vectors())
@settings(max_examples=200, deadline=None)
def test_vector_round_trip(v):
    assert codec.decode_vector(codec.encode_vector(v)) == v


@given(st.lists(objects, min_size=2, max_size=6, unique_by=lambda x: encode_object(x).bits))
@settings(max_examples=100, deadline=None)
def test_distinct_objects_are_prefix_free(xs):
    assert kraft_check(encode_object(x) for x in xs) <= 1


@given(objects, objects)
@settings(max_examples=100, deadline=None)
def test_pair_cost_is_monotone(a, b):
    assert codec.code_length(Pair(a, b)) >= codec.code_length(a) + codec.code_length(b)


def test_exhaustive_prefix_freedom_to_length_12():
    valid = []
    for length in range(1, 13):
        for word in range(1 << length):
            bits = format(word, f"0{length}b")
            try:
                decode_object(bits)
            except (codec.DecodeError, codec.NonCanonical):
                continue
            valid.append(bits)
    assert valid
    assert kraft_check(valid) <= 1


def test_rejects_non_canonical_input():
    with pytest.raises(codec.NonCanonical):
        SparseVector(1, ((1, GaussianRational.of(1)), (0, GaussianRational.of(1))))
    with pytest.raises(codec.NonCanonical):
        SparseVector(1, ((0, GaussianRational.of(0)),))
    with pytest.raises(codec.NonCanonical):
        SparseVector(1, ((2, GaussianRational.of(1)),))
    # 2/2 written unreduced: int(2) then nat(1)
    bits = codec._nat_bits(codec.zigzag(2)) + codec._nat_bits(1)
    with pytest.raises(codec.DecodeError):
        codec.decode_rational(bits)


def test_truncated_and_trailing_bits():
    bits = encode_object(Fraction(3, 7)).bits
    with pytest.raises(codec.Truncated):
        decode_object(bits[:-1])
    with pytest.raises(codec.DecodeError):
        decode_object(bits + "1")


def test_kraft_detects_collisions():
    with pytest.raises(codec.PrefixCollision):
        kraft_check(["01", "011"])
    assert kraft_check(["0", "10", "11"]) == 1.0


def test_hex_round_trip():
    code = encode_object(Pair(3, Fraction(-2, 5)))
    assert Code.from_hex(code.to_hex()) == code


def test_dimension_field_prefers_small_spaces():
    small = SparseVector(2, ((0, GaussianRational.of(1)),))
    big = SparseVector(4, ((0, GaussianRational.of(1)),))
    assert codec.encode_vector(big).length - codec.encode_vector(small).length >= 2
