import json
import math

import pytest

from qgacs import experiments as ex


def _assert_green(rep):
    failed = [c for c in rep.checks if not c["passed"]]
    assert not failed, failed
    assert rep.verdict == "pass"


def test_report_verdicts_and_audit():
    rep = ex.ExperimentReport("demo", {})
    rep.record(constant=3.0, ledger=[{"cost": 1.0, "scale": 1.0}, {"cost": 1.0, "scale": 0.0}])
    rep.check("ok", True)
    assert rep.finish().verdict == "pass"
    bad = ex.ExperimentReport("demo", {})
    bad.record(constant=5.0, ledger=[{"cost": 1.0, "scale": 0.0}])
    assert bad.finish().verdict == "fail"
    assert ex.ExperimentReport("d", {}, data_only=True).verdict == "data"


def test_infinities_serialize():
    rep = ex.ExperimentReport("demo", {})
    rep.record(lhs=-math.inf, rhs=math.inf)
    text = json.dumps(rep.to_doc())
    assert '"-inf"' in text and '"inf"' in text


def test_state_battery_is_exact():
    for n in (1, 2):
        for name, state in ex.state_battery(n):
            rho = state.to_numpy()
            assert abs(rho.trace().real - 1) < 1e-12, name


def test_small_addition():
    rep = ex.exp_addition(1, instances=10)
    _assert_green(rep)
    assert rep.measured_constants["marginal_upper_bits"] < -1


def test_small_conservation():
    rep = ex.exp_conservation((1,), instances=3)
    _assert_green(rep)
    theorems = {r["theorem"] for r in rep.records if "theorem" in r}
    assert set(ex.CONSERVATION_THEOREMS) <= theorems


def test_small_conservation_without_charges():
    _assert_green(ex.exp_conservation((1,), instances=2, charge=False))


def test_small_povm():
    _assert_green(ex.exp_povm((1,), instances=3))


def test_small_selfinfo():
    _assert_green(ex.exp_selfinfo(2, samples=2000))


def test_small_nocloning():
    _assert_green(ex.exp_nocloning((2,), 2, samples=10))


def test_explore_is_data_only():
    rep = ex.explore_conjectures(1, instances=5)
    assert rep.verdict == "data"


def test_reports_are_deterministic():
    a = json.dumps(ex.exp_povm((1,), instances=2, seed=3).to_doc())
    b = json.dumps(ex.exp_povm((1,), instances=2, seed=3).to_doc())
    assert a == b
    c = json.dumps(ex.exp_povm((1,), instances=2, seed=4).to_doc())
    assert a != c
