"""Budgeted universal semi-density matrix, surrogate complexities and entropy.

The universal machine is replaced by the vector codec: an elementary state with
a code of length l carries weight 2**-l, and the budget B keeps every state
whose code fits in B bits.  Because the weights come from a prefix-free code
family the trace stays below one.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import codec
from .codec import Code, GaussianRational, SparseVector, nat_length
from .linalg import (check_semidensity, domination_bits, partial_trace, trace_product,
                     validate_psd)

DEFAULT_BUDGET = 30


@dataclass(frozen=True)
class ElementaryState:
    vector: SparseVector
    code: Code

    @property
    def n_qubits(self) -> int:
        return self.vector.n_qubits

    @property
    def length(self) -> int:
        return self.code.length

    @property
    def weight(self) -> float:
        return 2.0 ** -self.code.length

    @property
    def amplitudes(self) -> np.ndarray:
        return self.vector.to_numpy()

    @classmethod
    def of(cls, vector: SparseVector) -> "ElementaryState":
        norm2 = vector.norm2
        if not 0 < norm2 <= 1:
            raise ValueError(f"elementary states need 0 < |v|^2 <= 1, got {norm2}")
        return cls(vector, codec.encode_vector(vector))


def basis_vector(n_qubits: int, index: int) -> SparseVector:
    return SparseVector(n_qubits, ((index, GaussianRational.of(1)),))


# -- enumeration -------------------------------------------------------------

@lru_cache(maxsize=8)
def _rationals(max_cost: int) -> tuple:
    """Reduced rationals in [-1, 1] by code length, cheapest first."""
    out = [(codec.rational_length(Fraction(0)), Fraction(0))]
    q = 1
    while nat_length(q - 1) + 1 <= max_cost:
        room = max_cost - nat_length(q - 1)
        for p in range(1, q + 1):
            if math.gcd(p, q) != 1:
                continue
            if codec.int_length(-p) > room:
                break
            for r in (Fraction(-p, q), Fraction(p, q)):
                cost = codec.rational_length(r)
                if cost <= max_cost:
                    out.append((cost, r))
        q += 1
    out.sort(key=lambda t: (t[0], t[1]))
    return tuple(out)


@lru_cache(maxsize=8)
def _gaussians(max_cost: int) -> tuple:
    """Nonzero gaussian rationals with |z|^2 <= 1 and code length <= max_cost.

    Entries are (cost, value, |value|^2) sorted by cost.
    """
    rats = _rationals(max_cost)
    costs = [c for c, _ in rats]
    out = []
    for ca, a in rats:
        for cb, b in rats[:bisect_right(costs, max_cost - ca)]:
            if a == 0 and b == 0:
                continue
            n2 = a * a + b * b
            if n2 <= 1:
                out.append((ca + cb, GaussianRational(a, b), n2))
    out.sort(key=lambda t: t[0])
    return tuple(out)


def _search(n_qubits: int, budget: int):
    """Direct bounded search over sparse vectors with code length <= budget."""
    dim = 1 << n_qubits
    head = nat_length(n_qubits - 1)
    min_value = codec.gaussian_length(GaussianRational.of(1))
    values = _gaussians(max(budget - head - nat_length(1) - nat_length(0), min_value))
    value_costs = [c for c, _, _ in values]

    def rest_floor(start: int, k: int) -> int:
        return sum(nat_length(start + t) + min_value for t in range(k))

    def extend(start, k, remaining, norm2, entries):
        if k == 0:
            yield tuple(entries)
            return
        for index in range(start, dim - k + 1):
            index_cost = nat_length(index)
            if index_cost + min_value + rest_floor(index + 1, k - 1) > remaining:
                break
            room = remaining - index_cost - rest_floor(index + 1, k - 1)
            for cost, value, n2 in values[:bisect_right(value_costs, room)]:
                if norm2 + n2 > 1:
                    continue
                entries.append((index, value))
                yield from extend(index + 1, k - 1, remaining - index_cost - cost, norm2 + n2, entries)
                entries.pop()

    for count in range(1, dim + 1):
        remaining = budget - head - nat_length(count)
        if remaining < rest_floor(0, count):
            break
        yield from extend(0, count, remaining, Fraction(0), [])


def enumerate_states(n_qubits: int, budget: int) -> list:
    """All canonical states of n qubits with code length <= budget, sorted by (length, bits)."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    states = [ElementaryState(SparseVector(n_qubits, entries), Code(codec._sparse_bits(n_qubits, entries)))
              for entries in _search(n_qubits, budget)]
    states.sort(key=lambda s: (s.length, s.code.bits))
    return states


def minimal_state_length(n_qubits: int) -> int:
    return codec.encode_vector(basis_vector(n_qubits, 0)).length


def exhaustive_decode_states(n_qubits: int, budget: int) -> list:
    """Oracle: decode every bit string of length <= budget and keep the valid states."""
    found = []
    for length in range(1, budget + 1):
        for word in range(1 << length):
            bits = format(word, f"0{length}b")
            try:
                v = codec.decode_vector(bits)
            except (codec.DecodeError, codec.NonCanonical):
                continue
            if v.n_qubits == n_qubits and 0 < v.norm2 <= 1:
                found.append(bits)
    found.sort(key=lambda b: (len(b), b))
    return found


# -- the universal matrix ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class UniversalMatrix:
    n_qubits: int
    budget: int
    matrix: np.ndarray
    ledger: tuple
    amplitudes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def trace(self) -> float:
        return trace_product(self.matrix, np.eye(self.dim))

    def __len__(self) -> int:
        return len(self.ledger)

    def index_of(self, vector: SparseVector) -> int | None:
        return self._positions.get(vector)

    @property
    def _positions(self) -> dict:
        cached = self.__dict__.get("_pos_cache")
        if cached is None:
            cached = {s.vector: i for i, s in enumerate(self.ledger)}
            object.__setattr__(self, "_pos_cache", cached)
        return cached

    def expectations(self, rho) -> np.ndarray:
        """<phi|rho|phi> for every ledger state."""
        v = self.amplitudes
        return np.einsum("ki,ij,kj->k", v.conj(), rho, v).real

    def to_doc(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "budget": self.budget,
            "trace": self.trace,
            "ledger": [
                {"code": s.code.to_hex(), "length": s.length, "weight_log2": -s.length,
                 "entries": [[i, [v.re.numerator, v.re.denominator, v.im.numerator, v.im.denominator]]
                             for i, v in s.vector.entries]}
                for s in self.ledger
            ],
            "matrix": {"dim": self.dim,
                       "rows": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]},
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_doc()))

    @classmethod
    def from_doc(cls, doc: dict) -> "UniversalMatrix":
        n = doc["n_qubits"]
        ledger = []
        for item in doc["ledger"]:
            entries = tuple((i, GaussianRational(Fraction(a, b), Fraction(c, d)))
                            for i, (a, b, c, d) in item["entries"])
            state = ElementaryState.of(SparseVector(n, entries))
            if state.code != Code.from_hex(item["code"]):
                raise ValueError("ledger code does not match its state")
            ledger.append(state)
        mu = _assemble(n, doc["budget"], ledger)
        stored = np.array([[complex(a, b) for a, b in row] for row in doc["matrix"]["rows"]])
        if not np.array_equal(stored, mu.matrix):
            raise ValueError("stored matrix differs from the rebuilt ledger sum")
        return mu

    @classmethod
    def load(cls, path) -> "UniversalMatrix":
        return cls.from_doc(json.loads(Path(path).read_text()))


def _assemble(n_qubits: int, budget: int, ledger: list) -> UniversalMatrix:
    dim = 1 << n_qubits
    amps = np.zeros((len(ledger), dim), dtype=complex)
    for k, s in enumerate(ledger):
        for i, v in s.vector.entries:
            amps[k, i] = complex(v)
    weights = np.array([s.weight for s in ledger])
    matrix = (amps.T * weights) @ amps.conj() if ledger else np.zeros((dim, dim), dtype=complex)
    matrix = (matrix + matrix.conj().T) / 2
    return UniversalMatrix(n_qubits, budget, matrix, tuple(ledger), amps, weights)


@lru_cache(maxsize=16)
def build_mu(n_qubits: int, budget: int = DEFAULT_BUDGET) -> UniversalMatrix:
    return _assemble(n_qubits, budget, enumerate_states(n_qubits, budget))


def ledger_domination_ok(mu: UniversalMatrix, tol: float = 1e-10, limit: int | None = None) -> bool:
    """mu - 2**-l |phi><phi| is PSD for every ledger state (the first ``limit`` of them)."""
    for state in mu.ledger[:limit]:
        ok, _ = validate_psd(mu.matrix - state.weight * np.outer(state.amplitudes, state.amplitudes.conj()), tol)
        if not ok:
            return False
    return True


def subsystem_constants(mu_joint: UniversalMatrix, mu_part: UniversalMatrix, side: str = "second") -> dict:
    """Loewner constants between a marginal of the joint matrix and the small one.

    ``lower`` is the least c with mu_part <= 2**c Tr_side(mu_joint); ``upper`` the
    least c with Tr_side(mu_joint) <= 2**c mu_part.
    """
    kept = mu_part.dim
    traced = mu_joint.dim // kept
    marginal = partial_trace(mu_joint.matrix, kept, traced, side)
    return {"lower": domination_bits(mu_part.matrix, marginal),
            "upper": domination_bits(marginal, mu_part.matrix)}


# -- entropy and surrogate probabilities -------------------------------------

class InfiniteEntropy:
    """Entropy of a state outside the support of the universal matrix."""

    def __repr__(self) -> str:
        return "InfiniteEntropy()"

    def __eq__(self, other) -> bool:
        return isinstance(other, InfiniteEntropy)

    def __hash__(self) -> int:
        return hash("inf-entropy")


INFINITE_ENTROPY = InfiniteEntropy()


def entropy_of(weight_trace: float):
    if weight_trace <= 0:
        return INFINITE_ENTROPY
    return math.ceil(-math.log2(weight_trace))


def entropy(sigma, mu) -> int | InfiniteEntropy:
    """ceil(-log2 Tr mu sigma); ``mu`` is a UniversalMatrix or a plain matrix."""
    m = mu.matrix if isinstance(mu, UniversalMatrix) else np.asarray(mu)
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.ndim == 1:
        sigma = np.outer(sigma, sigma.conj())
    if sigma.shape != m.shape:
        raise ValueError(f"state {sigma.shape} does not match universal matrix {m.shape}")
    return entropy_of(trace_product(m, sigma))


def complexity(x) -> int:
    """K-hat: the object's code length (vectors use their untagged payload)."""
    if isinstance(x, SparseVector):
        return codec.encode_vector(x).length
    if isinstance(x, codec.ElementaryMatrix):
        return codec.encode_matrix(x).length
    if isinstance(x, int) and not isinstance(x, codec.Integer):
        return nat_length(x)
    return codec.code_length(x)


def surrogate_m(x) -> float:
    return 2.0 ** -complexity(x)


# -- conditional models ------------------------------------------------------

@dataclass
class ConditionRegistry:
    entries: dict = field(default_factory=dict)

    def register(self, key, candidate, weight: float = 1.0) -> None:
        candidate = check_semidensity(candidate, tol=1e-9)
        if not 0 < weight <= 1:
            raise ValueError("registration weight must lie in (0, 1]")
        bits = codec.encode_object(key).bits
        items = self.entries.setdefault(bits, [])
        if sum(w for _, w in items) + weight > 1 + 1e-12:
            raise ValueError("registered weights for a key may not exceed 1")
        items.append((candidate, weight))

    def candidates(self, key) -> list:
        return list(self.entries.get(codec.encode_object(key).bits, []))


def conditional_mu(key, registry: ConditionRegistry, base: UniversalMatrix) -> np.ndarray:
    """Half of the base matrix plus half of the weighted candidates registered for ``key``."""
    out = 0.5 * base.matrix
    for candidate, weight in registry.candidates(key):
        out = out + 0.5 * weight * candidate
    return out


# -- lower computable matrices -----------------------------------------------

@dataclass(frozen=True, eq=False)
class LowerComputableMatrix:
    approximants: tuple
    weight: float = 1.0

    @property
    def limit(self) -> np.ndarray:
        return self.approximants[-1]

    def verify(self, tol: float = 1e-12) -> bool:
        for lo, hi in zip(self.approximants, self.approximants[1:]):
            ok, _ = validate_psd(hi - lo, tol)
            if not ok:
                return False
        return True

    @classmethod
    def of_budgets(cls, n_qubits: int, budgets) -> "LowerComputableMatrix":
        """The universal matrices at increasing budgets, a monotone chain."""
        budgets = sorted(budgets)
        return cls(tuple(build_mu(n_qubits, b).matrix for b in budgets))
