"""The ten acceptance criteria, each timed against its runtime limit and reported as a PASS/FAIL line."""
import json
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from qgacs import codec, experiments as ex
from qgacs.codec import GaussianRational, Pair, SparseVector, decode_object, encode_object, kraft_check
from qgacs.linalg import m_reduce, random_density, validate_psd, block
from qgacs.universal import (basis_vector, build_mu, entropy, enumerate_states, exhaustive_decode_states,
                             ledger_domination_ok)


@pytest.fixture
def verdict(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(number, title, checks, elapsed, limit):
        failed = [name for name, ok in checks.items() if not ok]
        in_time = limit is None or elapsed < limit
        ok = not failed and in_time
        budget = "" if limit is None else f" / limit {limit:.0f} s"
        detail = "" if ok else " — failed: " + ", ".join(failed + ([] if in_time else ["runtime"]))
        with capman.global_and_fixture_disabled():
            print(f"\nCRITERION {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({elapsed:.1f} s{budget}){detail}")
        assert not failed, failed
        assert in_time, f"{elapsed:.1f} s exceeds {limit} s"
    return emit


def _green(report):
    return report.verdict == "pass", [c["name"] for c in report.checks if not c["passed"]]


def test_criterion_01_m_identity(verdict):
    start = time.perf_counter()
    worst = 0.0
    for n in (2, 4, 8):
        rng = np.random.default_rng(n)
        for _ in range(100):
            a = rng.standard_normal((n * n, n * n)) + 1j * rng.standard_normal((n * n, n * n))
            b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            worst = max(worst, abs(np.trace(a @ np.kron(c, b)) - np.trace(m_reduce(a, b, n) @ c)))
    a = np.arange(1, 17, dtype=complex).reshape(4, 4)
    blocks = (np.array_equal(block(a, 1, 2, 2), [[3, 4], [7, 8]])
              and np.array_equal(block(a, 2, 1, 2), [[9, 10], [13, 14]])
              and np.array_equal(m_reduce(a, np.eye(2), 2), [[7, 11], [23, 27]])
              and np.array_equal(m_reduce(a, np.diag([1, 0]), 2), [[1, 3], [9, 11]]))
    verdict(1, "M-identity on 300 random triples + worked 4x4 blocks",
            {"identity < 1e-9": worst < 1e-9, "worked 4x4 blocks": blocks}, time.perf_counter() - start, 1)


def test_criterion_02_codec(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    samples = []
    for _ in range(300):
        n = int(rng.integers(1, 4))
        idx = sorted(set(int(i) for i in rng.integers(0, 1 << n, size=int(rng.integers(0, 4)))))
        v = SparseVector(n, tuple((i, GaussianRational(Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50))),
                                                       Fraction(int(rng.integers(-9, 9)), 7))) for i in idx))
        samples += [v, Pair(int(rng.integers(0, 10**6)), v), Fraction(int(rng.integers(-99, 99)), int(rng.integers(1, 99)))]
    round_trip = all(decode_object(encode_object(x)) == x for x in samples)
    valid = []
    for length in range(1, 17):
        for word in range(1 << length):
            bits = format(word, f"0{length}b")
            try:
                decode_object(bits)
            except (codec.DecodeError, codec.NonCanonical):
                continue
            valid.append(bits)
    try:
        total = kraft_check(valid)  # raises PrefixCollision if any codeword prefixes another
        prefix_free = True
    except codec.PrefixCollision:
        total, prefix_free = math.inf, False
    verdict(2, f"codec round-trip, exhaustive prefix-freedom to 16 bits ({len(valid)} codewords, Kraft {total:.4f})",
            {"round-trip": round_trip, "prefix-free": prefix_free, "Kraft <= 1": total <= 1},
            time.perf_counter() - start, 5)


def test_criterion_03_mu_wellformed(verdict):
    build_mu.cache_clear()
    start = time.perf_counter()
    checks = {}
    for n in (1, 2):
        mu = build_mu(n)
        ok, min_eig = validate_psd(mu.matrix)
        checks[f"n={n} Tr <= 1"] = mu.trace <= 1
        checks[f"n={n} min eig >= -1e-10"] = ok and min_eig >= -1e-10
        checks[f"n={n} ledger domination"] = ledger_domination_ok(mu)
    for n, budget in ((1, 16), (2, 16)):
        checks[f"oracle n={n} B={budget}"] = ([s.code.bits for s in enumerate_states(n, budget)]
                                              == exhaustive_decode_states(n, budget))
    verdict(3, "mu well-formedness + exhaustive-decoder oracle at B=16", checks, time.perf_counter() - start, 30)


def test_criterion_04_entropy_identities(verdict):
    start = time.perf_counter()
    checks = {}
    for n in (1, 2, 3):
        mu = build_mu(n)
        checks[f"H(2^-n I) exact, n={n}"] = entropy(np.eye(mu.dim) / mu.dim, mu) == n + math.ceil(-math.log2(mu.trace))
        zero = basis_vector(n, 0)
        checks[f"H(|0^n>) <= l(|0^n>), n={n}"] = entropy(zero.to_numpy(), mu) <= codec.encode_vector(zero).length
    rng = np.random.default_rng(4)
    small, large = build_mu(2, 22), build_mu(2, 30)
    checks["budget monotone on 50 states"] = all(
        entropy(s, large) <= entropy(s, small) for s in (random_density(4, rng) for _ in range(50)))
    verdict(4, "entropy identities", checks, time.perf_counter() - start, 10)


def test_criterion_05_addition(verdict):
    start = time.perf_counter()
    checks = {}
    for n in (1, 2):
        ok, failed = _green(ex.exp_addition(n))
        checks[f"n={n}"] = ok
    verdict(5, "addition inequality with 2 bits of overhead, n in {1,2}", checks, time.perf_counter() - start, 60)


def test_criterion_06_conservation(verdict):
    start = time.perf_counter()
    rep = ex.exp_conservation((1, 2), instances=50)
    checks = {c["name"]: c["passed"] for c in rep.checks}
    verdict(6, "conservation of randomness/information under unitaries and partial trace, 50 instances",
            checks, time.perf_counter() - start, 300)


def test_criterion_07_haar_moments(verdict):
    start = time.perf_counter()
    checks = {}
    for n in (2, 3):
        rep = ex.exp_selfinfo(n, samples=20000)
        checks.update({f"n={n} {c['name']}": c["passed"] for c in rep.checks})
    verdict(7, "Haar first/second moments and mean 2^I(psi:psi), n in {2,3}, 20000 samples",
            checks, time.perf_counter() - start, 600)


def test_criterion_08_povm(verdict):
    start = time.perf_counter()
    rep = ex.exp_povm((1, 2), instances=50)
    verdict(8, "POVM deficiency non-increase and two-measurement bound, 50 pairs",
            {c["name"]: c["passed"] for c in rep.checks}, time.perf_counter() - start, 300)


def test_criterion_09_nocloning(verdict):
    start = time.perf_counter()
    rep = ex.exp_nocloning((2, 3), 2, samples=500)
    verdict(9, "no-cloning: basis copy at n=2,3 and 500 Haar chain inequalities at n=2",
            {c["name"]: c["passed"] for c in rep.checks}, time.perf_counter() - start, 900)


def _cli(tmp_path, tag, *argv):
    out = tmp_path / f"{tag}.out"
    proc = subprocess.run([sys.executable, "-m", "qgacs.cli", *argv, "--out", str(out)],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, out.read_bytes() if out.exists() else None


def test_criterion_10_determinism(verdict, tmp_path):
    start = time.perf_counter()
    commands = {
        "mu build": ["mu", "build", "--qubits", "2"],
        "entropy": ["entropy", "--qubits", "2", "--state", "random:3"],
        "deficiency": ["deficiency", "--qubits", "2", "--sigma", "haar:1:4", "--rho", "mixed", "--top", "5"],
        "mutual-info": ["mutual-info", "--qubits", "2", "--sigma", "random:1", "--rho", "random:2"],
        "addition": ["addition", "--qubits", "1", "--instances", "10"],
        "selfinfo (MC)": ["selfinfo", "--qubits", "2", "--samples", "1000", "--seed", "11"],
        "no-cloning (MC)": ["no-cloning", "--qubits", "2", "--samples", "10", "--seed", "11"],
        "povm csv": ["povm", "--qubits", "1", "--instances", "3", "--seed", "5", "--format", "csv"],
    }
    checks = {}
    for name, argv in commands.items():
        a = _cli(tmp_path, name.replace(" ", "_") + "_a", *argv)
        b = _cli(tmp_path, name.replace(" ", "_") + "_b", *argv)
        checks[name] = a[2] is not None and a == b
    verdict(10, "bit-identical output across two runs (deterministic and seeded MC commands)",
            checks, time.perf_counter() - start, None)
