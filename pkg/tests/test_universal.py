import math

import numpy as np
import pytest

from qgacs import codec
from qgacs.codec import GaussianRational, SparseVector
from qgacs.linalg import random_density, validate_psd
from qgacs.universal import (ConditionRegistry, INFINITE_ENTROPY, LowerComputableMatrix, UniversalMatrix,
                             basis_vector, build_mu, complexity, conditional_mu, entropy,
                             enumerate_states, exhaustive_decode_states, ledger_domination_ok,
                             minimal_state_length, subsystem_constants, surrogate_m)


@pytest.mark.parametrize("n,budget", [(1, 14), (2, 14), (1, 16)])
def test_enumeration_matches_exhaustive_decoder(n, budget):
    enumerated = [s.code.bits for s in enumerate_states(n, budget)]
    assert enumerated == exhaustive_decode_states(n, budget)


def test_minimal_state_length():
    assert minimal_state_length(1) == codec.encode_vector(basis_vector(1, 0)).length
    assert enumerate_states(1, minimal_state_length(1) - 1) == []


@pytest.mark.parametrize("n", [1, 2])
def test_mu_is_a_semidensity(n):
    mu = build_mu(n)
    assert 0 < mu.trace <= 1
    ok, min_eig = validate_psd(mu.matrix)
    assert ok and min_eig >= -1e-10
    assert np.allclose(mu.matrix, mu.matrix.conj().T)


def test_ledger_domination():
    assert ledger_domination_ok(build_mu(1), limit=200)


def test_ledger_is_canonical_and_budgeted():
    mu = build_mu(1, 20)
    lengths = [s.length for s in mu.ledger]
    assert lengths == sorted(lengths) and max(lengths) <= 20
    assert codec.kraft_check(s.code for s in mu.ledger) <= 1
    assert all(0 < s.vector.norm2 <= 1 for s in mu.ledger)


def test_save_load_round_trip(tmp_path):
    mu = build_mu(1, 18)
    path = tmp_path / "mu.json"
    mu.save(path)
    again = UniversalMatrix.load(path)
    assert np.array_equal(again.matrix, mu.matrix)
    assert [s.code for s in again.ledger] == [s.code for s in mu.ledger]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_entropy_of_maximally_mixed(n):
    mu = build_mu(n)
    assert entropy(np.eye(mu.dim) / mu.dim, mu) == n + math.ceil(-math.log2(mu.trace))


def test_entropy_of_zero_state_bounded_by_its_code():
    for n in (1, 2):
        mu = build_mu(n)
        zero = np.zeros(mu.dim)
        zero[0] = 1
        assert entropy(zero, mu) <= minimal_state_length(n)


def test_entropy_budget_monotone():
    rng = np.random.default_rng(0)
    small, large = build_mu(2, 22), build_mu(2, 30)
    for _ in range(50):
        sigma = random_density(4, rng)
        assert entropy(sigma, large) <= entropy(sigma, small)


def test_entropy_outside_support():
    assert entropy(np.eye(2) / 2, np.zeros((2, 2))) == INFINITE_ENTROPY
    with pytest.raises(ValueError):
        entropy(np.eye(4) / 4, build_mu(1))


def test_complexity_examples():
    assert complexity(0) == 1
    assert surrogate_m(0) == 0.5
    v = SparseVector(1, ((0, GaussianRational.of(1)),))
    assert complexity(v) == codec.encode_vector(v).length


def test_condition_registry():
    reg = ConditionRegistry()
    reg.register(3, np.eye(2) / 4, 0.5)
    reg.register(3, np.eye(2) / 4, 0.5)
    with pytest.raises(ValueError):
        reg.register(3, np.eye(2) / 4, 0.1)
    with pytest.raises(ValueError):
        reg.register(4, np.eye(2), 1.0)
    mu = build_mu(1)
    cond = conditional_mu(3, reg, mu)
    assert np.allclose(cond, 0.5 * mu.matrix + 0.5 * np.eye(2) / 4)
    assert np.allclose(conditional_mu(5, reg, mu), 0.5 * mu.matrix)


def test_lower_computable_chain():
    chain = LowerComputableMatrix.of_budgets(1, [16, 20, 24])
    assert chain.verify()
    reversed_chain = LowerComputableMatrix(tuple(reversed(chain.approximants)))
    assert not reversed_chain.verify()


def test_marginals_sit_below_the_small_matrix():
    """Tr_B mu_2n <= 2**c mu_n with c < -1: the n-qubit dimension field is cheaper."""
    for side in ("first", "second"):
        constants = subsystem_constants(build_mu(2), build_mu(1), side)
        assert constants["upper"] < -1
        assert math.isfinite(constants["lower"])
