"""Randomness deficiency, mutual information and test transport.

A test family is a list of blocks.  A block is a set of generator matrices
(rank-one ledger projectors plus a few dense matrices) followed by a chain of
transports.  Scores never materialize the transported tests: every transport
carries its adjoint under the trace pairing, so ``Tr T(G) X = Tr G T*(X)`` and
a block is scored by pulling the state back through the chain once.

Description costs (the surrogate of the lower algorithmic probability of a
test) use a 2-bit class tag followed by the payload code:

    00 identity      01 ledger projector      10 closed-form / POVM element
    11 transported test (transport payload, then the original description)

so every family built here has weights summing to at most one.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from math import comb
from typing import Callable

import numpy as np

from . import codec
from .codec import TAG_BITS, nat_length
from .linalg import (as_matrix, domination_bits, hermitize, m_reduce, partial_trace,
                     tensor, trace_product, validate_psd)
from .quantum import OutcomeSemimeasure, Povm, UnitaryTransform, exact_identity
from .universal import UniversalMatrix, complexity

ADMISSION_TOL = 1e-10
MAX_SCALE_BITS = 64
PAIR_TAG_BITS = TAG_BITS
SQUARE_TAG_BITS = TAG_BITS
NEG_INF = -math.inf


class InadmissibleTest(ValueError):
    """A transported test violates Tr nu rho <= 1 on its new target."""


# -- tests and transports ----------------------------------------------------

@dataclass(frozen=True)
class TransportRecord:
    kind: str
    label: str
    cost: float
    scale: float = 0.0

    @property
    def bits(self) -> float:
        """What this step adds to an inequality constant: weight cost plus matrix down-scaling."""
        return self.cost + self.scale

    def to_doc(self) -> dict:
        return {"kind": self.kind, "label": self.label, "cost": self.cost, "scale": self.scale}


@dataclass(frozen=True, eq=False)
class Test:
    __test__ = False  # not a pytest class

    matrix: np.ndarray = field(repr=False)
    initial_weight: float
    provenance: tuple = ()
    label: str = ""
    factors: tuple | None = field(default=None, repr=False)

    @property
    def weight(self) -> float:
        return self.initial_weight * 2.0 ** -sum(r.cost for r in self.provenance)

    def trace_with(self, rho) -> float:
        return trace_product(self.matrix, as_matrix(rho))


@dataclass(frozen=True, eq=False)
class Transport:
    record: TransportRecord
    forward: Callable = field(repr=False)
    adjoint: Callable = field(repr=False)

    def matrix(self, m) -> np.ndarray:
        return 2.0 ** -self.record.scale * self.forward(as_matrix(m))

    def apply(self, t: Test) -> Test:
        if t.factors is not None:
            raise ValueError("product tests are transported one factor at a time (apply_factor)")
        return Test(self.matrix(t.matrix), t.initial_weight, t.provenance + (self.record,), t.label)

    def apply_factor(self, t: Test, side: str) -> Test:
        if t.factors is None:
            raise ValueError("not a product test")
        a, b = t.factors
        a, b = (self.matrix(a), b) if side == "left" else (a, self.matrix(b))
        return Test(tensor(a, b), t.initial_weight, t.provenance + (self.record,), t.label, (a, b))


def conjugation_cost(u: UnitaryTransform, charge: bool = True) -> float:
    return TAG_BITS + (u.code_length if charge else 0)


def extension_cost(m_qubits: int, charge: bool = True) -> float:
    return TAG_BITS + (nat_length(m_qubits) if charge else 0)


def povm_cost(povm: Povm, charge: bool = True) -> float:
    if charge and povm.code_length is None:
        raise ValueError("charging a POVM needs its exact outcomes")
    return TAG_BITS + (povm.code_length if charge else 0)


REDUCTION_COST = TAG_BITS


def conjugation(u: UnitaryTransform, cost: float | None = None, scale: float = 0.0,
                charge: bool = True) -> Transport:
    """t -> U^dagger t U: carries a test for U rho U^dagger to a test for rho."""
    m = u.matrix
    md = m.conj().T
    cost = conjugation_cost(u, charge) if cost is None else cost
    return Transport(TransportRecord("conjugate", u.name, cost, scale),
                     lambda t: md @ t @ m, lambda x: m @ x @ md)


def extension(m_qubits: int, side: str = "second", cost: float | None = None, scale: float = 0.0,
              charge: bool = True) -> Transport:
    """t -> t (x) I_m (or I_m (x) t): carries a test for a marginal to the joint state."""
    cost = extension_cost(m_qubits, charge) if cost is None else cost
    extra = 1 << m_qubits
    eye = np.eye(extra)
    if side == "second":
        fwd = (lambda t: np.kron(t, eye))
    elif side == "first":
        fwd = (lambda t: np.kron(eye, t))
    else:
        raise ValueError(f"side must be 'first' or 'second', got {side!r}")

    def adj(x):
        kept = x.shape[0] // extra
        return partial_trace(x, kept, extra, side)

    return Transport(TransportRecord("extend", f"{side}+{m_qubits}", cost, scale), fwd, adj)


def reduction(nu, label: str = "nu", cost: float = REDUCTION_COST, scale: float = 0.0) -> Transport:
    """E -> M_{E nu}: carries a test on 2n qubits to one on the first n, for states sigma (x) nu."""
    nu = as_matrix(nu)
    d = nu.shape[0]
    return Transport(TransportRecord("m_reduce", label, cost, scale),
                     lambda e: m_reduce(e, nu, d), lambda c: np.kron(c, nu))


def transport_conjugate(t: Test, u: UnitaryTransform, cost: float | None = None,
                        charge: bool = True) -> Test:
    return conjugation(u, cost, charge=charge).apply(t)


def transport_extend(t: Test, m_qubits: int, cost: float | None = None, charge: bool = True) -> Test:
    if m_qubits == 0:
        return t
    return extension(m_qubits, "second", cost, charge=charge).apply(t)


def transport_povm(povm: Povm, rho, cost: float | None = None, charge: bool = True) -> Test:
    """nu = sum_k m(k)/Tr(E_k rho) E_k; outcomes with zero probability under rho are dropped."""
    rho = as_matrix(rho)
    probs = [trace_product(e, rho) for e in povm.outcomes]
    nu = np.zeros_like(povm.outcomes[0], dtype=complex)
    for k, (e, p) in enumerate(zip(povm.outcomes, probs)):
        if p > 0:
            nu = nu + (2.0 ** -nat_length(k) / p) * e
    cost = povm_cost(povm, charge) if cost is None else cost
    return Test(nu, 1.0, (TransportRecord("povm", povm.name, cost),), f"povm:{povm.name}")


def transport_m_reduce(t: Test, nu, xi, nu_length: int, xi_length: int,
                       scale_left: float = 0.0, scale_right: float = 0.0) -> Test:
    """Reduce both stored factors E, F of a product test to M_{E nu}, M_{F xi}.

    The weight pays m(nu) m(xi) (their code lengths) plus the fixed tag; the
    scales are the measured Loewner constants that keep the factors admissible.
    """
    if t.factors is None:
        raise ValueError("m-reduction needs a product test with stored factors")
    left = reduction(nu, "nu", 0.0, scale_left).matrix(t.factors[0])
    right = reduction(xi, "xi", 0.0, scale_right).matrix(t.factors[1])
    rec = TransportRecord("m_reduce", "nu,xi", REDUCTION_COST + nu_length + xi_length,
                          scale_left + scale_right)
    return Test(tensor(left, right), t.initial_weight, t.provenance + (rec,), t.label, (left, right))


# -- generators --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Generators:
    """Rank-one tests scale*|v><v| plus dense tests, with their weights."""
    dim: int
    vectors: np.ndarray = field(repr=False)
    scales: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    dense: tuple = field(default=(), repr=False)
    dense_weights: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    dense_labels: tuple = ()
    kind: str = "ledger"

    def __len__(self) -> int:
        return len(self.scales) + len(self.dense)

    @property
    def all_weights(self) -> np.ndarray:
        return np.concatenate([self.dense_weights, self.weights])

    def label(self, k: int) -> str:
        if k < len(self.dense):
            return self.dense_labels[k]
        return f"{self.kind}[{k - len(self.dense)}]"

    def matrix(self, k: int) -> np.ndarray:
        if k < len(self.dense):
            return self.dense[k]
        k -= len(self.dense)
        v = self.vectors[k]
        return self.scales[k] * np.outer(v, v.conj())

    def traces(self, x) -> np.ndarray:
        """Tr G x for every generator, dense ones first."""
        x = as_matrix(x)
        dense = np.array([trace_product(g, x) for g in self.dense])
        v = self.vectors
        rank_one = self.scales * np.einsum("ki,ij,kj->k", v.conj(), x, v, optimize=True).real
        return np.concatenate([dense, rank_one])

    def traces_pure(self, psis) -> np.ndarray:
        """Tr G |psi><psi| for a batch of pure states: shape (generators, samples)."""
        psis = np.asarray(psis, dtype=complex)
        dense = np.array([np.einsum("si,ij,sj->s", psis.conj(), g, psis).real for g in self.dense])
        dense = dense.reshape(len(self.dense), len(psis))
        overlaps = np.abs(self.vectors.conj() @ psis.T) ** 2
        return np.concatenate([dense, self.scales[:, None] * overlaps])

    def weighted_sum(self, weights=None) -> np.ndarray:
        w = self.all_weights if weights is None else weights
        nd = len(self.dense)
        out = sum((w[k] * g for k, g in enumerate(self.dense)), np.zeros((self.dim, self.dim), dtype=complex))
        v = self.vectors
        return out + (v.T * (w[nd:] * self.scales)) @ v.conj()

    def self_overlaps(self) -> np.ndarray:
        """Tr G^2 for every generator."""
        dense = np.array([trace_product(g, g) for g in self.dense])
        norms = np.sum(np.abs(self.vectors) ** 2, axis=1)
        return np.concatenate([dense, (self.scales * norms) ** 2])

    def fingerprint(self) -> bytes:
        h = hashlib.sha256()
        for arr in (self.vectors, self.scales, self.weights, self.dense_weights, *self.dense):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update("|".join(self.dense_labels).encode())
        return h.digest()


def _dyadic_scale(values: np.ndarray) -> np.ndarray:
    """Largest k in [0, MAX_SCALE_BITS] with 2**k * value <= 1."""
    with np.errstate(divide="ignore"):
        k = np.floor(-np.log2(np.where(values > 0, values, 0.0)))
    k = np.clip(np.nan_to_num(k, posinf=MAX_SCALE_BITS), 0, MAX_SCALE_BITS)
    k = k - (np.exp2(k) * values > 1.0)
    return np.maximum(k, 0).astype(np.int64)


def _ledger_lengths(mu: UniversalMatrix) -> np.ndarray:
    return np.array([s.length for s in mu.ledger], dtype=np.int64)


def identity_cost(n_qubits: int) -> int:
    return TAG_BITS + codec.encode_matrix(exact_identity(n_qubits)).length


# -- blocks and families -----------------------------------------------------

def _pull_back(transports, x):
    for tr in reversed(transports):
        x = tr.adjoint(x)
    return x


def _chain_bits(transports) -> tuple:
    return sum(t.record.cost for t in transports), sum(t.record.scale for t in transports)


@dataclass(frozen=True, eq=False)
class TestBlock:
    """Generators carried through a transport chain.

    ``records`` are costs already incurred when the generators were built
    (e.g. the POVM-derived test); they count like transport records.
    """
    generators: Generators
    transports: tuple = ()
    tag: str = "base"
    records: tuple = ()

    def __len__(self) -> int:
        return len(self.generators)

    @property
    def provenance(self) -> tuple:
        return self.records + tuple(t.record for t in self.transports)

    @property
    def weights(self) -> np.ndarray:
        return self.generators.all_weights * 2.0 ** -sum(r.cost for r in self.provenance)

    @property
    def factor(self) -> float:
        return 2.0 ** -sum(r.scale for r in self.provenance)

    def traces(self, x) -> np.ndarray:
        return self.factor * self.generators.traces(_pull_back(self.transports, as_matrix(x)))

    def label(self, k: int) -> str:
        return f"{self.tag}:{self.generators.label(k)}"

    def test(self, k: int) -> Test:
        scale = 2.0 ** -sum(r.scale for r in self.records)
        t = Test(scale * self.generators.matrix(k), float(self.generators.all_weights[k]),
                 self.records, self.label(k))
        for tr in self.transports:
            t = tr.apply(t)
        return t

    def then(self, transport: Transport) -> "TestBlock":
        return replace(self, transports=self.transports + (transport,))


def _check_admission(values: np.ndarray, what: str) -> float:
    top = float(np.max(values, initial=0.0))
    if top > 1 + ADMISSION_TOL:
        raise InadmissibleTest(f"{what}: a test reaches Tr nu rho = {top:.12g} > 1")
    return top


def _constant_ledger(blocks) -> dict:
    out: dict = {}
    for b in blocks:
        chain = getattr(b, "transports", ()) + getattr(b, "left", ()) + getattr(b, "right", ())
        for rec in tuple(t.record for t in chain) + b.records:
            key = f"{rec.kind}:{rec.label}"
            out[key] = max(out.get(key, -math.inf), rec.bits)
    return out


@dataclass(frozen=True, eq=False)
class TestFamily:
    target: np.ndarray = field(repr=False)
    blocks: tuple
    kind: str = "plain"

    def __len__(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([b.weights for b in self.blocks])

    @property
    def kraft_sum(self) -> float:
        return float(np.sum(self.weights))

    def traces(self, x) -> np.ndarray:
        return np.concatenate([b.traces(x) for b in self.blocks])

    def aggregate(self, sigma) -> float:
        return float(sum(np.sum(b.weights * b.traces(sigma)) for b in self.blocks))

    def tests(self):
        for b in self.blocks:
            for k in range(len(b)):
                yield b.test(k)

    def max_admission(self) -> float:
        return float(np.max(self.traces(self.target), initial=0.0))

    def check(self) -> "TestFamily":
        _check_admission(self.traces(self.target), "family")
        return self

    def union(self, other: "TestFamily") -> "TestFamily":
        if other.target.shape != self.target.shape or not np.allclose(other.target, self.target, atol=1e-12):
            raise ValueError("families test different targets")
        return TestFamily(self.target, self.blocks + other.blocks, self.kind)

    def transported(self, transport: Transport, target) -> "TestFamily":
        """Apply one transport to every test; the result tests ``target``."""
        fam = TestFamily(as_matrix(target), tuple(b.then(transport) for b in self.blocks), self.kind)
        _check_admission(fam.traces(fam.target), f"after {transport.record.kind}:{transport.record.label}")
        return fam

    @property
    def constant_ledger(self) -> dict:
        return _constant_ledger(self.blocks)

    @property
    def family_id(self) -> str:
        h = hashlib.sha256(np.ascontiguousarray(self.target).tobytes())
        for b in self.blocks:
            h.update(b.generators.fingerprint())
            h.update(repr(b.provenance).encode())
        return h.hexdigest()[:16]


def default_test_family(rho, mu: UniversalMatrix, rho_exact: codec.ElementaryMatrix | None = None,
                        charge: bool = True) -> TestFamily:
    """Identity, dyadically scaled ledger projectors and (if available) the closed-form test."""
    rho = as_matrix(rho)
    if rho.shape != mu.matrix.shape:
        raise ValueError(f"state {rho.shape} does not match the universal matrix {mu.matrix.shape}")
    n = mu.n_qubits
    dense = [np.eye(mu.dim, dtype=complex)]
    dense_w = [2.0 ** -identity_cost(n)]
    labels = ["identity"]
    if rho_exact is not None:
        evals, evecs = np.linalg.eigh(hermitize(rho))
        if evals[0] > ADMISSION_TOL:
            inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.conj().T
            dense.append(hermitize(inv_sqrt @ mu.matrix @ inv_sqrt))
            dense_w.append(2.0 ** -(TAG_BITS + codec.encode_matrix(rho_exact).length))
            labels.append("closed-form")
    ks = _dyadic_scale(mu.expectations(rho))
    lengths = _ledger_lengths(mu)
    k_costs = np.array([nat_length(int(k)) for k in range(MAX_SCALE_BITS + 1)])[ks]
    gens = Generators(mu.dim, mu.amplitudes, np.exp2(ks.astype(float)),
                      np.exp2(-(TAG_BITS + lengths + k_costs).astype(float)),
                      tuple(dense), np.array(dense_w), tuple(labels))
    fam = TestFamily(rho, (TestBlock(gens),))
    keep = fam.traces(rho) <= 1 + ADMISSION_TOL
    if not np.all(keep):  # only dense tests can fail; ledger scales are admissible by construction
        bad = [k for k in range(len(dense)) if not keep[k]]
        gens = replace(gens, dense=tuple(g for k, g in enumerate(dense) if k not in bad),
                       dense_weights=np.array([w for k, w in enumerate(dense_w) if k not in bad]),
                       dense_labels=tuple(s for k, s in enumerate(labels) if k not in bad))
        fam = TestFamily(rho, (TestBlock(gens),))
    return fam


def povm_family(povm: Povm, rho, cost: float | None = None, charge: bool = True) -> TestFamily:
    """The single POVM-derived test as a family for rho."""
    t = transport_povm(povm, rho, cost, charge)
    gens = Generators(povm.dim, np.zeros((0, povm.dim), dtype=complex), np.zeros(0), np.zeros(0),
                      (t.matrix,), np.array([t.weight]), (t.label,), "povm")
    gens = replace(gens, dense_weights=np.array([t.initial_weight]))
    return TestFamily(as_matrix(rho), (TestBlock(gens, (), "povm", t.provenance),)).check()


# -- scores ------------------------------------------------------------------

@dataclass(frozen=True)
class DeficiencyScore:
    value: float
    aggregate: float
    family_id: str
    constant_ledger: dict
    kind: str = "deficiency"
    ledger: tuple = ()

    @property
    def is_neg_inf(self) -> bool:
        return self.value == NEG_INF

    def to_doc(self) -> dict:
        return {"kind": self.kind, "score": None if self.is_neg_inf else self.value,
                "aggregate": self.aggregate, "family_id": self.family_id,
                "constant_ledger": dict(self.constant_ledger), "ledger": list(self.ledger)}


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else NEG_INF


def _top_entries(weights, traces, label_of, top: int) -> tuple:
    if top <= 0:
        return ()
    contrib = weights * traces
    order = np.argsort(-contrib, kind="stable")[:top]
    return tuple({"test_id": label_of(int(k)), "weight": float(weights[k]),
                  "trace_value": float(traces[k])} for k in order if contrib[k] > 0)


def deficiency(sigma, family: TestFamily, top: int = 0) -> DeficiencyScore:
    """log2 of sum over tests of weight * Tr(nu sigma)."""
    sigma = as_matrix(sigma)
    if sigma.shape != family.target.shape:
        raise ValueError(f"state {sigma.shape} does not match family {family.target.shape}")
    total = family.aggregate(sigma)
    ledger = ()
    if top:
        where = [(b, k) for b in family.blocks for k in range(len(b))]

        def entry(k):
            b, local = where[k]
            return {"test_id": b.label(local), "provenance": [r.to_doc() for r in b.provenance]}

        ledger = tuple({**entry(e["test_id"]), "weight": e["weight"], "trace_value": e["trace_value"]}
                       for e in _top_entries(family.weights, family.traces(sigma), lambda k: k, top))
    return DeficiencyScore(_log2(total), total, family.family_id, family.constant_ledger, "deficiency", ledger)


def classical_deficiency(gamma, p) -> float:
    """log2 sum_x gamma(x) m(x) / P(x) with m(x) = 2**-nat_length(x)."""
    gamma = gamma.probs if isinstance(gamma, OutcomeSemimeasure) else gamma
    p = p.probs if isinstance(p, OutcomeSemimeasure) else p
    gamma = dict(enumerate(gamma)) if not isinstance(gamma, dict) else gamma
    p = dict(enumerate(p)) if not isinstance(p, dict) else p
    total = 0.0
    for x, g in sorted(gamma.items()):
        if g <= 0:
            continue
        px = p.get(x, 0.0)
        if px <= 0:
            raise ZeroDivisionError(f"P({x}) = 0 where gamma({x}) = {g} > 0")
        total += g * 2.0 ** -nat_length(x) / px
    return _log2(total)


# -- product families --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProductBlock:
    """Pair tests 2^-2 w_a w_b G_a (x) G_b for all ordered pairs and square tests 2^-2 w_a G_a (x) G_a.

    Left and right factors may each be carried through their own transport chain;
    ``records`` hold costs charged to the whole block (e.g. m(nu) m(xi)).
    """
    generators: Generators
    left: tuple = ()
    right: tuple = ()
    records: tuple = ()
    tag: str = "base"

    def __len__(self) -> int:
        n = len(self.generators)
        return n * n + n

    @property
    def cost(self) -> float:
        return (sum(t.record.cost for t in self.left + self.right)
                + sum(r.cost for r in self.records))

    @property
    def scale(self) -> float:
        return (sum(t.record.scale for t in self.left + self.right)
                + sum(r.scale for r in self.records))

    @property
    def weight_sum(self) -> float:
        w = self.generators.all_weights
        s = float(np.sum(w))
        return 2.0 ** -self.cost * (2.0 ** -PAIR_TAG_BITS * s * s + 2.0 ** -SQUARE_TAG_BITS * s)

    def factor_traces(self, x, side: str) -> np.ndarray:
        chain = self.left if side == "left" else self.right
        _, scale = _chain_bits(chain)
        return 2.0 ** -scale * self.generators.traces(_pull_back(chain, as_matrix(x)))

    @property
    def multiplier(self) -> float:
        """Block-wide factor: every chain cost plus the scale of block-level records."""
        return 2.0 ** -(self.cost + sum(r.scale for r in self.records))

    def combine(self, tl: np.ndarray, tr: np.ndarray) -> float:
        """Aggregate from the two factor trace vectors; symmetric in (tl, tr) bit for bit."""
        w = self.generators.all_weights
        pair = float(np.sum(w * tl)) * float(np.sum(w * tr))
        square = float(np.sum(w * (tl * tr)))
        return self.multiplier * (2.0 ** -PAIR_TAG_BITS * pair + 2.0 ** -SQUARE_TAG_BITS * square)

    def aggregate(self, sigma, rho) -> float:
        return self.combine(self.factor_traces(sigma, "left"), self.factor_traces(rho, "right"))

    def weight_of(self, a: int, b: int) -> float:
        """Summed provenance weight of the product test G_a (x) G_b (pair plus square when a == b)."""
        w = self.generators.all_weights
        out = 2.0 ** -PAIR_TAG_BITS * w[a] * w[b]
        if a == b:
            out += 2.0 ** -SQUARE_TAG_BITS * w[a]
        return out * 2.0 ** -self.cost

    def factor_matrix(self, k: int, side: str) -> np.ndarray:
        chain = self.left if side == "left" else self.right
        m = self.generators.matrix(k)
        for tr in chain:
            m = tr.matrix(m)
        return m

    def test(self, a: int, b: int) -> Test:
        fa, fb = self.factor_matrix(a, "left"), self.factor_matrix(b, "right")
        extra = 2.0 ** -sum(r.scale for r in self.records)
        if extra != 1.0:
            fa = fa * extra
        recs = tuple(t.record for t in self.left + self.right) + self.records
        w0 = self.weight_of(a, b) * 2.0 ** sum(r.cost for r in recs)
        return Test(tensor(fa, fb), w0, recs,
                    f"{self.tag}:{self.generators.label(a)}x{self.generators.label(b)}", (fa, fb))

    def symmetric_expectation(self) -> float:
        """sum of weight * Tr (A (x) B) P / rank(P) with P the symmetric projector.

        Uses Tr (A (x) B) P = (Tr A Tr B + Tr AB) / 2; only for blocks without transports.
        """
        if self.left or self.right:
            raise NotImplementedError("symmetric expectation of transported blocks")
        g = self.generators
        w = g.all_weights
        d = g.dim
        tr_g = g.traces(np.eye(d))
        s = g.weighted_sum()
        pair = (float(np.sum(w * tr_g)) ** 2 + trace_product(s, s)) / 2
        square = float(np.sum(w * (tr_g * tr_g + g.self_overlaps()))) / 2
        total = self.multiplier * (2.0 ** -PAIR_TAG_BITS * pair + 2.0 ** -SQUARE_TAG_BITS * square)
        return total / comb(d + 1, 2)


@dataclass(frozen=True, eq=False)
class ProductTestFamily:
    mu_left: np.ndarray = field(repr=False)
    mu_right: np.ndarray = field(repr=False)
    blocks: tuple
    povm_slots: dict = field(default_factory=dict)
    kind: str = "product"

    def __len__(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def kraft_sum(self) -> float:
        return float(sum(b.weight_sum for b in self.blocks))

    def aggregate(self, sigma, rho) -> float:
        return float(sum(b.aggregate(sigma, rho) for b in self.blocks))

    def check(self) -> "ProductTestFamily":
        for b in self.blocks:
            _check_admission(b.factor_traces(self.mu_left, "left")
                             * 2.0 ** -sum(r.scale for r in b.records), "left factor")
            _check_admission(b.factor_traces(self.mu_right, "right"), "right factor")
        return self

    def union(self, other: "ProductTestFamily") -> "ProductTestFamily":
        if self.mu_left.shape != other.mu_left.shape or self.mu_right.shape != other.mu_right.shape:
            raise ValueError("families test different spaces")
        return ProductTestFamily(self.mu_left, self.mu_right, self.blocks + other.blocks,
                                 {**other.povm_slots, **self.povm_slots})

    def transported(self, left: Transport | None = None, right: Transport | None = None,
                    mu_left=None, mu_right=None, records: tuple = (),
                    shared: bool = True) -> "ProductTestFamily":
        """Apply a transport to the left and/or right factor of every test, then re-check admission.

        With ``shared`` a two-sided step is one description (the same transform or
        count applied to both factors), so the right factor's record carries no cost.
        """
        if shared and left is not None and right is not None:
            right = replace(right, record=replace(right.record, cost=0.0))
        blocks = tuple(ProductBlock(b.generators,
                                    b.left + ((left,) if left is not None else ()),
                                    b.right + ((right,) if right is not None else ()),
                                    b.records + tuple(records), b.tag)
                       for b in self.blocks)
        fam = ProductTestFamily(self.mu_left if mu_left is None else as_matrix(mu_left),
                                self.mu_right if mu_right is None else as_matrix(mu_right),
                                blocks, {})
        return fam.check()

    @property
    def constant_ledger(self) -> dict:
        return _constant_ledger(self.blocks)

    @property
    def family_id(self) -> str:
        h = hashlib.sha256(np.ascontiguousarray(self.mu_left).tobytes())
        h.update(np.ascontiguousarray(self.mu_right).tobytes())
        for b in self.blocks:
            h.update(b.generators.fingerprint())
            for tr in b.left + b.right:
                h.update(repr(tr.record).encode())
            h.update(repr(b.records).encode())
        return h.hexdigest()[:16]

    def symmetric_expectation(self) -> float:
        return float(sum(b.symmetric_expectation() for b in self.blocks))


def povm_scale(mu: UniversalMatrix, element) -> int:
    """Largest admissible dyadic scale of a POVM element against mu."""
    return int(_dyadic_scale(np.array([trace_product(mu.matrix, element)]))[0])


def product_generators(mu: UniversalMatrix, povm: Povm | None = None, charge: bool = True) -> Generators:
    """Admissible single-factor generators: scaled identity, scaled ledger projectors, POVM elements.

    Each generator G satisfies Tr G mu <= 1 with the largest dyadic scale allowed.
    The scale is a function of the generator and the (n, B) context, so it is not charged.
    """
    n = mu.n_qubits
    dense = [2.0 ** int(_dyadic_scale(np.array([mu.trace]))[0]) * np.eye(mu.dim, dtype=complex)]
    dense_w = [2.0 ** -identity_cost(n)]
    labels = ["identity"]
    if povm is not None:
        c_e = povm.code_length if charge else 0
        for k, e in enumerate(povm.outcomes):
            dense.append(2.0 ** int(povm_scale(mu, e)) * e)
            dense_w.append(2.0 ** -(TAG_BITS + c_e + nat_length(k)))
            labels.append(f"{povm.name}[{k}]")
    ks = _dyadic_scale(mu.expectations(mu.matrix))
    lengths = _ledger_lengths(mu)
    return Generators(mu.dim, mu.amplitudes, np.exp2(ks.astype(float)),
                      np.exp2(-(TAG_BITS + lengths).astype(float)),
                      tuple(dense), np.array(dense_w), tuple(labels))


def product_test_family(mu: UniversalMatrix, povm: Povm | None = None, charge: bool = True) -> ProductTestFamily:
    gens = product_generators(mu, povm, charge)
    slots = {}
    if povm is not None:
        c_e = povm.code_length if charge else 0
        slots = {(povm.name, k): (1 + k, povm_scale(mu, e), TAG_BITS + c_e + nat_length(k))
                 for k, e in enumerate(povm.outcomes)}
    return ProductTestFamily(mu.matrix, mu.matrix, (ProductBlock(gens),), slots).check()


def mutual_information(sigma, rho, family: ProductTestFamily) -> DeficiencyScore:
    """log2 sum weight * Tr A sigma * Tr B rho."""
    sigma, rho = as_matrix(sigma), as_matrix(rho)
    if sigma.shape != family.mu_left.shape or rho.shape != family.mu_right.shape:
        raise ValueError("states do not match the family")
    total = family.aggregate(sigma, rho)
    return DeficiencyScore(_log2(total), total, family.family_id, family.constant_ledger, "information")


def information_pure_batch(psis, family: ProductTestFamily) -> np.ndarray:
    """2**I(psi:psi) for a batch of pure states, for untransported families."""
    out = np.zeros(len(psis))
    for b in family.blocks:
        if b.left or b.right:
            raise NotImplementedError("batch scoring of transported blocks")
        t = b.generators.traces_pure(psis)
        wt = b.generators.all_weights[:, None] * t
        pair = np.sum(wt, axis=0) ** 2
        square = np.sum(wt * t, axis=0)
        out += b.multiplier * (2.0 ** -PAIR_TAG_BITS * pair + 2.0 ** -SQUARE_TAG_BITS * square)
    return out


def information_upper_bound(rho, sigma, family: ProductTestFamily, mu: UniversalMatrix) -> dict:
    """Bound I(rho:sigma) <= c_rho + c_sigma + I(mu:mu) where rho <= 2**c_rho mu.

    Holds because every product test is PSD and rho (x) sigma <= 2**(c_rho+c_sigma) mu (x) mu.
    """
    c_rho = domination_bits(as_matrix(rho), mu.matrix)
    c_sigma = domination_bits(as_matrix(sigma), mu.matrix)
    base = mutual_information(mu.matrix, mu.matrix, family).value
    return {"c_rho": c_rho, "c_sigma": c_sigma, "info_mu_mu": base, "bound": c_rho + c_sigma + base}


# -- two-measurement bound ---------------------------------------------------

def classical_information(i: int, j: int) -> int:
    """I(i:j) = K(i) + K(j) - K(pair(i, j)) with the codec surrogates."""
    return complexity(i) + complexity(j) - complexity(codec.Pair(i, j))


@dataclass(frozen=True)
class MeasurementBound:
    lhs: float
    rhs: float
    constant: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.rhs + self.constant - self.lhs


def _povm_witness(family: ProductTestFamily, povm: Povm, i: int, j: int) -> float:
    """log2 of (summed weight) * 2**(k_i + k_j) for the product test on scaled E_i, E_j.

    Computed from the exact description lengths, since charged POVM codes can be
    far longer than a float exponent.
    """
    (_, k_a, bits_a), (_, k_b, bits_b) = family.povm_slots[(povm.name, i)], family.povm_slots[(povm.name, j)]
    log_w = -PAIR_TAG_BITS - bits_a - bits_b
    if i == j:
        log_w = float(np.logaddexp2(log_w, -SQUARE_TAG_BITS - bits_a))
    return log_w - family.blocks[0].cost + k_a + k_b


def measurement_info_bound(povm: Povm, sigma, rho, i: int, j: int, family: ProductTestFamily,
                           information: float | None = None) -> MeasurementBound:
    """I(i:j) + log E sigma(i) E rho(j) - K(I(i:j)) <= I(sigma:rho) + c.

    The family must hold the POVM elements as generators; c is read off the
    witnessing test's weight and scales, so it does not depend on the states.
    ``information`` may pass in a precomputed I(sigma:rho) for this family.
    """
    if (povm.name, i) not in family.povm_slots or (povm.name, j) not in family.povm_slots:
        raise ValueError("family does not contain this POVM's elements")
    p_sigma = trace_product(povm.outcomes[i], as_matrix(sigma))
    p_rho = trace_product(povm.outcomes[j], as_matrix(rho))
    info = classical_information(i, j)
    rhs = mutual_information(sigma, rho, family).value if information is None else information
    constant = info - complexity(codec.Integer(info)) - _povm_witness(family, povm, i, j)
    if p_sigma <= 0 or p_rho <= 0:
        return MeasurementBound(NEG_INF, rhs, constant, True)
    lhs = info + math.log2(p_sigma) + math.log2(p_rho) - complexity(codec.Integer(info))
    return MeasurementBound(lhs, rhs, constant, lhs <= rhs + constant + 1e-9)


def measurement_info_sum(povm: Povm, sigma, rho, family: ProductTestFamily,
                         information: float | None = None) -> MeasurementBound:
    """Corollary form: log sum_ij 2**I(i:j) E sigma(i) E rho(j) <= I(sigma:rho) + c."""
    ps = [trace_product(e, as_matrix(sigma)) for e in povm.outcomes]
    pr = [trace_product(e, as_matrix(rho)) for e in povm.outcomes]
    total = 0.0
    constant = NEG_INF
    for i in range(len(povm)):
        for j in range(len(povm)):
            info = classical_information(i, j)
            constant = max(constant, info - _povm_witness(family, povm, i, j))
            if ps[i] > 0 and pr[j] > 0:
                total += 2.0 ** info * ps[i] * pr[j]
    lhs = _log2(total)
    rhs = mutual_information(sigma, rho, family).value if information is None else information
    return MeasurementBound(lhs, rhs, constant, lhs <= rhs + constant + 1e-9)
