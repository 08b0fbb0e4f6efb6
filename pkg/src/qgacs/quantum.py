"""POVMs, elementary unitaries and Haar sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from . import codec
from .codec import ElementaryMatrix, GaussianRational, nat_length
from .linalg import (IDENTITY_TOL, as_matrix, is_unitary, partial_trace, projector,
                     tensor, validate_psd)

ZERO = GaussianRational.of(0)
ONE = GaussianRational.of(1)


# -- exact gaussian-rational helpers ------------------------------------------

def gmul(a: GaussianRational, b: GaussianRational) -> GaussianRational:
    return GaussianRational(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def gadd(a: GaussianRational, b: GaussianRational) -> GaussianRational:
    return GaussianRational(a.re + b.re, a.im + b.im)


def gconj(a: GaussianRational) -> GaussianRational:
    return GaussianRational(a.re, -a.im)


def _as_dict(m: ElementaryMatrix) -> dict:
    return {divmod(i, m.dim): v for i, v in m.entries}


def _from_dict(n_qubits: int, d: dict) -> ElementaryMatrix:
    dim = 1 << n_qubits
    entries = tuple(sorted((r * dim + c, v) for (r, c), v in d.items() if not v.is_zero()))
    return ElementaryMatrix(n_qubits, entries)


def exact_matmul(a: ElementaryMatrix, b: ElementaryMatrix) -> ElementaryMatrix:
    if a.n_qubits != b.n_qubits:
        raise ValueError("size mismatch")
    rows_b: dict = {}
    for (k, j), v in _as_dict(b).items():
        rows_b.setdefault(k, []).append((j, v))
    out: dict = {}
    for (i, k), va in _as_dict(a).items():
        for j, vb in rows_b.get(k, ()):
            out[i, j] = gadd(out.get((i, j), ZERO), gmul(va, vb))
    return _from_dict(a.n_qubits, out)


def exact_kron(a: ElementaryMatrix, b: ElementaryMatrix) -> ElementaryMatrix:
    out = {}
    for (i, j), va in _as_dict(a).items():
        for (k, l), vb in _as_dict(b).items():
            out[i * b.dim + k, j * b.dim + l] = gmul(va, vb)
    return _from_dict(a.n_qubits + b.n_qubits, out)


def exact_dagger(a: ElementaryMatrix) -> ElementaryMatrix:
    return _from_dict(a.n_qubits, {(c, r): gconj(v) for (r, c), v in _as_dict(a).items()})


def exact_identity(n_qubits: int) -> ElementaryMatrix:
    return _from_dict(n_qubits, {(i, i): ONE for i in range(1 << n_qubits)})


def exact_sub(a: ElementaryMatrix, b: ElementaryMatrix) -> ElementaryMatrix:
    out = _as_dict(a)
    for key, v in _as_dict(b).items():
        out[key] = gadd(out.get(key, ZERO), GaussianRational(-v.re, -v.im))
    return _from_dict(a.n_qubits, out)


def exact_scale(a: ElementaryMatrix, s) -> ElementaryMatrix:
    s = GaussianRational.of(s) if not isinstance(s, GaussianRational) else s
    return _from_dict(a.n_qubits, {k: gmul(v, s) for k, v in _as_dict(a).items()})


def exact_power(a: ElementaryMatrix, k: int) -> ElementaryMatrix:
    out = a
    for _ in range(k - 1):
        out = exact_kron(out, a)
    return out


def exact_projector(vector) -> ElementaryMatrix:
    """|v><v| for a SparseVector."""
    out = {}
    for i, vi in vector.entries:
        for j, vj in vector.entries:
            out[i, j] = gmul(vi, gconj(vj))
    return _from_dict(vector.n_qubits, out)


# -- unitaries ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnitaryTransform:
    name: str
    exact: ElementaryMatrix
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not is_unitary(self.matrix):
            raise ValueError(f"{self.name} is not unitary")

    @classmethod
    def of(cls, name: str, exact: ElementaryMatrix) -> "UnitaryTransform":
        return cls(name, exact, exact.to_numpy())

    @property
    def n_qubits(self) -> int:
        return self.exact.n_qubits

    @property
    def code_length(self) -> int:
        return codec.encode_matrix(self.exact).length

    def dagger(self) -> "UnitaryTransform":
        return UnitaryTransform.of(self.name + "^dagger", exact_dagger(self.exact))

    def conjugate(self, rho) -> np.ndarray:
        return self.matrix @ as_matrix(rho) @ self.matrix.conj().T


def identity_unitary(n_qubits: int) -> UnitaryTransform:
    return UnitaryTransform.of(f"I{n_qubits}", exact_identity(n_qubits))


def copy_unitary(n_qubits: int) -> UnitaryTransform:
    """|i>|j> -> |i>|j xor i> on 2n qubits."""
    dim = 1 << n_qubits
    perm = {((i * dim) + (j ^ i), i * dim + j): ONE for i in range(dim) for j in range(dim)}
    return UnitaryTransform.of(f"copy{n_qubits}", _from_dict(2 * n_qubits, perm))


ROTATION = ElementaryMatrix.from_rows([[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]])
PHASE = ElementaryMatrix.from_rows([[ONE, ZERO], [ZERO, GaussianRational.of(0, 1)]])
FLIP = ElementaryMatrix.from_rows([[0, 1], [1, 0]])


def rotation_unitary(n_qubits: int) -> UnitaryTransform:
    """The rational 3-4-5 rotation on every qubit."""
    return UnitaryTransform.of(f"rot{n_qubits}", exact_power(ROTATION, n_qubits))


def phase_unitary(n_qubits: int) -> UnitaryTransform:
    return UnitaryTransform.of(f"phase{n_qubits}", exact_kron(PHASE, exact_identity(n_qubits - 1))
                               if n_qubits > 1 else PHASE)


def flip_unitary(n_qubits: int) -> UnitaryTransform:
    return UnitaryTransform.of(f"flip{n_qubits}", exact_power(FLIP, n_qubits))


def scrambler_unitary(n_qubits: int) -> UnitaryTransform:
    """Rotate every qubit, then copy: an entangling elementary unitary on 2n qubits."""
    rot = exact_power(ROTATION, 2 * n_qubits)
    return UnitaryTransform.of(f"scramble{n_qubits}", exact_matmul(copy_unitary(n_qubits).exact, rot))


def unitary_battery(n_qubits: int) -> list:
    out = [rotation_unitary(n_qubits), phase_unitary(n_qubits), flip_unitary(n_qubits)]
    if n_qubits % 2 == 0:
        out.append(copy_unitary(n_qubits // 2))
    return out


# -- POVMs -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Povm:
    name: str
    outcomes: tuple
    exact: tuple | None = None

    def __post_init__(self):
        if not self.outcomes:
            raise ValueError("a POVM needs at least one outcome")
        dim = self.outcomes[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for k, e in enumerate(self.outcomes):
            ok, min_eig = validate_psd(e)
            if not ok:
                raise ValueError(f"outcome {k} is not PSD (min eigenvalue {min_eig:.3e})")
            total = total + e
        if np.max(np.abs(total - np.eye(dim))) > IDENTITY_TOL:
            raise ValueError("POVM outcomes do not sum to the identity")

    @classmethod
    def of(cls, name: str, exact) -> "Povm":
        exact = tuple(exact)
        return cls(name, tuple(m.to_numpy() for m in exact), exact)

    @property
    def dim(self) -> int:
        return self.outcomes[0].shape[0]

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def code_length(self) -> int | None:
        """Length of natural(count) followed by the outcome matrix codes."""
        if self.exact is None:
            return None
        return nat_length(len(self.exact)) + sum(codec.encode_matrix(m).length for m in self.exact)


@dataclass(frozen=True)
class OutcomeSemimeasure:
    probs: np.ndarray

    def __getitem__(self, k: int) -> float:
        return float(self.probs[k])

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def total(self) -> float:
        return float(np.sum(self.probs))


def apply_povm(povm: Povm, sigma) -> OutcomeSemimeasure:
    sigma = as_matrix(sigma)
    if sigma.shape != (povm.dim, povm.dim):
        raise ValueError(f"state {sigma.shape} does not match POVM dimension {povm.dim}")
    probs = np.array([np.einsum("ij,ji->", e, sigma).real for e in povm.outcomes])
    return OutcomeSemimeasure(np.clip(probs, 0.0, None))


def computational_povm(n_qubits: int) -> Povm:
    dim = 1 << n_qubits
    return Povm.of(f"computational{n_qubits}", [_from_dict(n_qubits, {(k, k): ONE}) for k in range(dim)])


def rotated_povm(n_qubits: int) -> Povm:
    rot = exact_power(ROTATION, n_qubits)
    rot_d = exact_dagger(rot)
    outs = [exact_matmul(exact_matmul(rot, _from_dict(n_qubits, {(k, k): ONE})), rot_d)
            for k in range(1 << n_qubits)]
    return Povm.of(f"rotated{n_qubits}", outs)


def coarse_povm(n_qubits: int) -> Povm:
    """Three outcomes: half the first-qubit |0> projector, half its rotated copy, the rest.

    This is the coarse-graining of a four-outcome POVM that merges the two |1> halves.
    """
    half = Fraction(1, 2)
    zero_proj = ElementaryMatrix.from_rows([[1, 0], [0, 0]])
    rotated = exact_matmul(exact_matmul(ROTATION, zero_proj), exact_dagger(ROTATION))
    rest = exact_identity(n_qubits - 1) if n_qubits > 1 else None

    def lift(m):
        return exact_kron(m, rest) if rest is not None else m

    e0 = lift(exact_scale(zero_proj, half))
    e1 = lift(exact_scale(rotated, half))
    e2 = exact_sub(exact_sub(exact_identity(n_qubits), e0), e1)
    return Povm.of(f"coarse{n_qubits}", [e0, e1, e2])


def povm_battery(n_qubits: int) -> list:
    return [computational_povm(n_qubits), rotated_povm(n_qubits), coarse_povm(n_qubits)]


# -- Haar sampling -----------------------------------------------------------

@dataclass(frozen=True)
class HaarSampler:
    n_qubits: int
    seed: int = 0

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def sample(self, index: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, index]))
        z = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return z / np.linalg.norm(z)

    def batch(self, count: int, start: int = 0) -> np.ndarray:
        return np.array([self.sample(start + k) for k in range(count)])


def haar_sample(sampler: HaarSampler, index: int = 0) -> np.ndarray:
    return sampler.sample(index)


def symmetric_projector(dim: int) -> np.ndarray:
    """Projector onto the symmetric subspace of C^dim (x) C^dim."""
    swap = np.zeros((dim * dim, dim * dim))
    for i in range(dim):
        for j in range(dim):
            swap[j * dim + i, i * dim + j] = 1.0
    return (np.eye(dim * dim) + swap) / 2


def second_moment(dim: int) -> np.ndarray:
    """Haar average of |psi psi><psi psi|: the symmetric projector over its rank."""
    return symmetric_projector(dim) / comb(dim + 1, 2)


# -- cloning -----------------------------------------------------------------

def clone_pipeline(psi, unitary: UnitaryTransform) -> tuple:
    """Run C on |psi>|0^n>; return the two reduced states and the joint state."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    dim = psi.shape[0]
    if unitary.matrix.shape != (dim * dim, dim * dim):
        raise ValueError("the transform must act on both registers")
    blank = np.zeros(dim, dtype=complex)
    blank[0] = 1.0
    out = unitary.matrix @ np.kron(psi, blank)
    joint = projector(out)
    return partial_trace(joint, dim, dim, "second"), partial_trace(joint, dim, dim, "first"), joint
