"""Canonical self-delimiting binary codes for elementary objects.

Every code length here is a surrogate program length: the budgeted universal
matrix, the surrogate algorithmic probabilities and every transport charge are
read off these lengths, so the layout below is part of the model.

Layout (all payloads are prefix-free within their class)::

    natural k        gamma(k + 1)
    integer z        natural(zigzag(z))
    rational p/q     integer(p) natural(q - 1)            reduced, q > 0
    gaussian a+bi    rational(a) rational(b)
    sparse vector    natural(n - 1) natural(count) [natural(index) gaussian]*
    matrix           natural(n - 1) natural(count) [natural(flat index) gaussian]*
    pair             object(first) object(second)

Vectors live in the 2**n dimensional space of n qubits, matrices are
2**n x 2**n and are stored as a sparse row-major list.  Entries are strictly
increasing by index and never zero.  ``encode_object`` prefixes the payload
with 2-bit class tags: one at the root union (scalar, vector, matrix, pair) and
one more below the scalar node (natural, integer, rational, gaussian).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Union

import numpy as np

TAG_BITS = 2

_ROOT_TAGS = {"scalar": "00", "vector": "01", "matrix": "10", "pair": "11"}
_SCALAR_TAGS = {"natural": "00", "integer": "01", "rational": "10", "gaussian": "11"}


class DecodeError(ValueError):
    """Bits do not form a canonical code of the requested class."""


class Truncated(DecodeError):
    """The bit sequence ended before the code was complete."""


class NonCanonical(ValueError):
    """An object is not in canonical form and therefore has no code."""


class PrefixCollision(ValueError):
    def __init__(self, first: str, second: str):
        super().__init__(f"code {first!r} is a prefix of {second!r}")
        self.pair = (first, second)


class Integer(int):
    """Marks a signed integer for ``encode_object`` (a bare int is a natural)."""


class GaussianRational(NamedTuple):
    re: Fraction
    im: Fraction

    @classmethod
    def of(cls, re, im=0) -> "GaussianRational":
        return cls(Fraction(re), Fraction(im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    @property
    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0


def _check_entries(entries, size: int) -> None:
    last = -1
    for index, value in entries:
        if not isinstance(value, GaussianRational):
            raise NonCanonical(f"entry {index} is not a GaussianRational")
        if not 0 <= index < size:
            raise NonCanonical(f"index {index} outside [0, {size})")
        if index <= last:
            raise NonCanonical("sparse entries must be strictly increasing by index")
        if value.is_zero():
            raise NonCanonical(f"zero entry stored at index {index}")
        last = index


@dataclass(frozen=True)
class SparseVector:
    n_qubits: int
    entries: tuple

    def __post_init__(self):
        if self.n_qubits < 1:
            raise NonCanonical("vectors need at least one qubit")
        _check_entries(self.entries, self.dim)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def norm2(self) -> Fraction:
        return sum((v.abs2 for _, v in self.entries), Fraction(0))

    def to_numpy(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        for index, value in self.entries:
            out[index] = complex(value)
        return out

    @classmethod
    def from_dense(cls, values: Iterable) -> "SparseVector":
        values = [v if isinstance(v, GaussianRational) else GaussianRational.of(v) for v in values]
        n = len(values).bit_length() - 1
        if len(values) != 1 << n:
            raise NonCanonical("vector length must be a power of two")
        return cls(n, tuple((i, v) for i, v in enumerate(values) if not v.is_zero()))


@dataclass(frozen=True)
class ElementaryMatrix:
    n_qubits: int
    entries: tuple

    def __post_init__(self):
        if self.n_qubits < 1:
            raise NonCanonical("matrices need at least one qubit")
        _check_entries(self.entries, self.dim * self.dim)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def to_numpy(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for index, value in self.entries:
            out[divmod(index, self.dim)] = complex(value)
        return out

    def rows(self) -> list:
        zero = GaussianRational.of(0)
        out = [[zero] * self.dim for _ in range(self.dim)]
        for index, value in self.entries:
            r, c = divmod(index, self.dim)
            out[r][c] = value
        return out

    @classmethod
    def from_rows(cls, rows) -> "ElementaryMatrix":
        dim = len(rows)
        n = dim.bit_length() - 1
        if dim != 1 << n or any(len(r) != dim for r in rows):
            raise NonCanonical("matrix must be square with power-of-two size")
        entries = []
        for r, row in enumerate(rows):
            for c, v in enumerate(row):
                v = v if isinstance(v, GaussianRational) else GaussianRational.of(v)
                if not v.is_zero():
                    entries.append((r * dim + c, v))
        return cls(n, tuple(entries))


@dataclass(frozen=True)
class Pair:
    first: object
    second: object


Encodable = Union[int, Integer, Fraction, GaussianRational, SparseVector, ElementaryMatrix, Pair]


@dataclass(frozen=True)
class Code:
    bits: str

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def to_hex(self) -> dict:
        """Hex form; ``length`` disambiguates the zero padding of the last nibble."""
        if not self.bits:
            return {"length": 0, "hex": ""}
        pad = (-len(self.bits)) % 4
        padded = self.bits + "0" * pad
        return {"length": len(self.bits), "hex": f"{int(padded, 2):0{len(padded) // 4}x}"}

    @classmethod
    def from_hex(cls, doc: dict) -> "Code":
        length = int(doc["length"])
        if length == 0:
            return cls("")
        raw = bin(int(doc["hex"], 16))[2:].zfill(4 * len(doc["hex"]))
        return cls(raw[:length])


# -- payload encoders --------------------------------------------------------

def gamma(x: int) -> str:
    if x < 1:
        raise ValueError("gamma code is defined for x >= 1")
    b = bin(x)[2:]
    return "0" * (len(b) - 1) + b


def nat_length(k: int) -> int:
    return 2 * (k + 1).bit_length() - 1


def zigzag(z: int) -> int:
    return 2 * z if z >= 0 else -2 * z - 1


def unzigzag(k: int) -> int:
    return k // 2 if k % 2 == 0 else -(k + 1) // 2


def int_length(z: int) -> int:
    return nat_length(zigzag(z))


def rational_length(r: Fraction) -> int:
    return int_length(r.numerator) + nat_length(r.denominator - 1)


def gaussian_length(g: GaussianRational) -> int:
    return rational_length(g.re) + rational_length(g.im)


def _nat_bits(k: int) -> str:
    if k < 0:
        raise NonCanonical(f"natural numbers are non-negative, got {k}")
    return gamma(k + 1)


def _rational_bits(r: Fraction) -> str:
    return _nat_bits(zigzag(r.numerator)) + _nat_bits(r.denominator - 1)


def _gaussian_bits(g: GaussianRational) -> str:
    return _rational_bits(g.re) + _rational_bits(g.im)


def _sparse_bits(n_qubits: int, entries) -> str:
    parts = [_nat_bits(n_qubits - 1), _nat_bits(len(entries))]
    for index, value in entries:
        parts.append(_nat_bits(index))
        parts.append(_gaussian_bits(value))
    return "".join(parts)


def sparse_length(n_qubits: int, entries) -> int:
    return (nat_length(n_qubits - 1) + nat_length(len(entries))
            + sum(nat_length(i) + gaussian_length(v) for i, v in entries))


def encode_nat(k: int) -> Code:
    return Code(_nat_bits(k))


def encode_int(z: int) -> Code:
    return Code(_nat_bits(zigzag(z)))


def encode_rational(r: Fraction) -> Code:
    if not isinstance(r, Fraction):
        raise NonCanonical("rationals must be Fraction instances")
    return Code(_rational_bits(r))


def encode_gaussian(g: GaussianRational) -> Code:
    return Code(_gaussian_bits(g))


def encode_vector(v: SparseVector) -> Code:
    return Code(_sparse_bits(v.n_qubits, v.entries))


def encode_matrix(m: ElementaryMatrix) -> Code:
    return Code(_sparse_bits(m.n_qubits, m.entries))


def _object_bits(x) -> str:
    scalar = _ROOT_TAGS["scalar"]
    if isinstance(x, bool):
        raise NonCanonical("booleans are not encodable")
    if isinstance(x, Integer):
        return scalar + _SCALAR_TAGS["integer"] + _nat_bits(zigzag(int(x)))
    if isinstance(x, int):
        return scalar + _SCALAR_TAGS["natural"] + _nat_bits(x)
    if isinstance(x, Fraction):
        return scalar + _SCALAR_TAGS["rational"] + _rational_bits(x)
    if isinstance(x, GaussianRational):
        if not (isinstance(x.re, Fraction) and isinstance(x.im, Fraction)):
            raise NonCanonical("gaussian rational parts must be Fractions")
        return scalar + _SCALAR_TAGS["gaussian"] + _gaussian_bits(x)
    if isinstance(x, SparseVector):
        return _ROOT_TAGS["vector"] + _sparse_bits(x.n_qubits, x.entries)
    if isinstance(x, ElementaryMatrix):
        return _ROOT_TAGS["matrix"] + _sparse_bits(x.n_qubits, x.entries)
    if isinstance(x, Pair):
        return _ROOT_TAGS["pair"] + _object_bits(x.first) + _object_bits(x.second)
    raise NonCanonical(f"cannot encode {type(x).__name__}")


def encode_object(x: Encodable) -> Code:
    return Code(_object_bits(x))


def code_length(x: Encodable) -> int:
    return len(_object_bits(x))


# -- decoding ----------------------------------------------------------------

class BitReader:
    def __init__(self, bits: str):
        self.bits = bits
        self.pos = 0

    def read(self, k: int) -> str:
        if self.pos + k > len(self.bits):
            raise Truncated("ran out of bits")
        out = self.bits[self.pos:self.pos + k]
        self.pos += k
        return out

    def at_end(self) -> bool:
        return self.pos == len(self.bits)

    def nat(self) -> int:
        zeros = 0
        while True:
            if self.pos >= len(self.bits):
                raise Truncated("ran out of bits in gamma prefix")
            if self.bits[self.pos] == "1":
                break
            zeros += 1
            self.pos += 1
        return int(self.read(zeros + 1), 2) - 1

    def integer(self) -> int:
        return unzigzag(self.nat())

    def rational(self) -> Fraction:
        p = self.integer()
        q = self.nat() + 1
        r = Fraction(p, q)
        if r.numerator != p or r.denominator != q:
            raise DecodeError(f"rational {p}/{q} is not reduced")
        return r

    def gaussian(self) -> GaussianRational:
        return GaussianRational(self.rational(), self.rational())

    def sparse(self, square: bool):
        n = self.nat() + 1
        count = self.nat()
        size = (1 << n) ** (2 if square else 1)
        if count > size:
            raise DecodeError("more entries than the space holds")
        entries = []
        last = -1
        for _ in range(count):
            index = self.nat()
            if index <= last or index >= size:
                raise DecodeError("sparse indices must increase and stay in range")
            value = self.gaussian()
            if value.is_zero():
                raise DecodeError("zero entry in sparse code")
            entries.append((index, value))
            last = index
        return n, tuple(entries)

    def vector(self) -> SparseVector:
        return SparseVector(*self.sparse(square=False))

    def matrix(self) -> ElementaryMatrix:
        return ElementaryMatrix(*self.sparse(square=True))

    def obj(self):
        root = self.read(TAG_BITS)
        if root == _ROOT_TAGS["scalar"]:
            sub = self.read(TAG_BITS)
            if sub == _SCALAR_TAGS["natural"]:
                return self.nat()
            if sub == _SCALAR_TAGS["integer"]:
                return Integer(self.integer())
            if sub == _SCALAR_TAGS["rational"]:
                return self.rational()
            return self.gaussian()
        if root == _ROOT_TAGS["vector"]:
            return self.vector()
        if root == _ROOT_TAGS["matrix"]:
            return self.matrix()
        return Pair(self.obj(), self.obj())


def _decode_whole(bits: str, method: str):
    reader = BitReader(bits)
    value = getattr(reader, method)()
    if not reader.at_end():
        raise DecodeError(f"{len(bits) - reader.pos} trailing bits")
    return value


def decode_nat(code: Code | str) -> int:
    return _decode_whole(getattr(code, "bits", code), "nat")


def decode_int(code: Code | str) -> int:
    return _decode_whole(getattr(code, "bits", code), "integer")


def decode_rational(code: Code | str) -> Fraction:
    return _decode_whole(getattr(code, "bits", code), "rational")


def decode_vector(code: Code | str) -> SparseVector:
    return _decode_whole(getattr(code, "bits", code), "vector")


def decode_matrix(code: Code | str) -> ElementaryMatrix:
    return _decode_whole(getattr(code, "bits", code), "matrix")


def decode_object(code: Code | str):
    return _decode_whole(getattr(code, "bits", code), "obj")


# -- Kraft -------------------------------------------------------------------

def kraft_check(codes: Iterable[Code | str]) -> float:
    """Kraft sum of a prefix-free family; raises PrefixCollision otherwise."""
    bits = sorted(getattr(c, "bits", c) for c in codes)
    for a, b in zip(bits, bits[1:]):
        if b.startswith(a):
            raise PrefixCollision(a, b)
    if not bits:
        return 0.0
    longest = max(len(b) for b in bits)
    total = sum(1 << (longest - len(b)) for b in bits)
    if total > 1 << longest:
        raise AssertionError("Kraft sum exceeds 1 for a prefix-free family")
    return total / (1 << longest)
