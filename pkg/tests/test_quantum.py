from fractions import Fraction

import numpy as np
import pytest

from qgacs.linalg import partial_trace, projector, random_density
from qgacs.quantum import (HaarSampler, Povm, apply_povm, clone_pipeline, coarse_povm, computational_povm,
                           copy_unitary, exact_dagger, exact_matmul, exact_identity, identity_unitary,
                           povm_battery, rotated_povm, scrambler_unitary, second_moment,
                           symmetric_projector, unitary_battery)


def test_computational_povm():
    e = computational_povm(1)
    assert np.allclose(apply_povm(e, np.diag([1.0, 0.0])).probs, [1, 0])
    e2 = computational_povm(2)
    assert np.allclose(apply_povm(e2, np.eye(4) / 4).probs, 0.25)


@pytest.mark.parametrize("n", [1, 2])
def test_battery_is_complete_and_exact(n):
    rng = np.random.default_rng(n)
    for povm in povm_battery(n):
        sigma = random_density(1 << n, rng) * 0.7
        out = apply_povm(povm, sigma)
        assert abs(out.total - 0.7) < 1e-10
        assert all(0 <= p <= 1 for p in out.probs)
        assert povm.code_length is not None
    assert len(coarse_povm(n)) == 3


def test_povm_validation():
    with pytest.raises(ValueError):
        Povm("bad", (np.diag([1.0, 0.0]),))
    with pytest.raises(ValueError):
        Povm("neg", (np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])))
    with pytest.raises(ValueError):
        apply_povm(computational_povm(1), np.eye(4) / 4)


def test_single_outcome_povm():
    single = Povm("trivial", (np.eye(2, dtype=complex),))
    assert apply_povm(single, np.eye(2) / 2).probs.tolist() == [1.0]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_copy_unitary(n):
    c = copy_unitary(n)
    dim = 1 << n
    for i in range(dim):
        inp = np.zeros(dim * dim)
        inp[i * dim] = 1
        out = np.zeros(dim * dim)
        out[i * dim + i] = 1
        assert np.array_equal(c.matrix @ inp, out)
    assert np.array_equal(c.matrix @ c.matrix, np.eye(dim * dim))
    assert exact_matmul(c.exact, c.exact) == exact_identity(2 * n)


def test_copy_of_plus_state_is_ghz_like():
    n = 2
    plus = np.ones(4) / 2
    phi, varphi, joint = clone_pipeline(plus, copy_unitary(n))
    assert np.allclose(phi, np.eye(4) / 4) and np.allclose(varphi, np.eye(4) / 4)
    assert abs(np.trace(joint).real - 1) < 1e-10


def test_clone_pipeline_identity_and_basis():
    psi = HaarSampler(1, 5).sample(0)
    phi, varphi, _ = clone_pipeline(psi, identity_unitary(2))
    assert np.allclose(phi, projector(psi)) and np.allclose(varphi, np.diag([1, 0]))
    phi, varphi, joint = clone_pipeline(np.array([0, 0, 1, 0]), copy_unitary(2))
    assert np.array_equal(phi, np.diag([0, 0, 1, 0])) and np.array_equal(varphi, phi)
    assert np.allclose(joint, np.kron(phi, phi))


def test_unitaries_are_exact_and_unitary():
    for n in (1, 2):
        for u in unitary_battery(n) + [scrambler_unitary(1)]:
            assert exact_matmul(u.exact, exact_dagger(u.exact)) == exact_identity(u.n_qubits)
            assert u.code_length > 0


def test_haar_sampler_is_deterministic_and_normalized():
    s = HaarSampler(3, 42)
    a, b = s.sample(7), s.sample(7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, s.sample(8))
    assert not np.array_equal(a, HaarSampler(3, 43).sample(7))
    batch = s.batch(100)
    assert np.array_equal(batch[7], a)
    assert np.max(np.abs(np.linalg.norm(batch, axis=1) - 1)) <= 1e-12


def test_haar_moments():
    n, samples = 2, 20000
    psis = HaarSampler(n, 0).batch(samples)
    p2 = np.abs(psis[:, 0]) ** 2
    p4 = p2 ** 2
    for values, target in ((p2, 1 / 4), (p4, 2 / (4 * 5))):
        se = values.std(ddof=1) / np.sqrt(samples)
        assert abs(values.mean() - target) <= 3 * se


def test_symmetric_projector():
    p = symmetric_projector(3)
    assert np.allclose(p @ p, p)
    assert np.isclose(np.trace(p), 6)
    assert np.isclose(np.trace(second_moment(3)), 1)
    v = np.array([1, 2j, 0.5])
    vv = np.kron(v, v)
    assert np.allclose(p @ vv, vv)


def test_rotated_povm_entries_are_rational():
    e = rotated_povm(1)
    assert e.exact[0].rows()[0][0].re == Fraction(9, 25)
