"""Command line entry point: ``qgacs <command> [flags]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .info import default_test_family, deficiency, mutual_information, product_test_family
from .linalg import matrix_from_doc, projector, random_density, validate_psd
from .quantum import HaarSampler
from .universal import DEFAULT_BUDGET, build_mu, entropy

EXPERIMENTS = ("addition", "conservation", "selfinfo", "povm", "no-cloning", "explore-conjectures")
SCORES = ("entropy", "deficiency", "mutual-info")


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def parse_state(spec: str, n: int, exact: bool = False):
    """Named states: zero, ones, mixed, basis:I, random:SEED, haar:SEED[:INDEX], or a JSON matrix file
    (an interchange document or a plain nested list of real entries).

    With ``exact`` returns (matrix, ElementaryMatrix or None).
    """
    dim = 1 << n
    battery = {name: m for name, m in ex.state_battery(n)}
    battery["mixed"] = battery["maximally-mixed"]
    kind, _, arg = spec.partition(":")
    elementary = None
    if kind in battery:
        elementary = battery[kind]
        m = elementary.to_numpy()
    elif kind == "basis":
        i = int(arg)
        if not 0 <= i < dim:
            raise ValueError(f"basis index {i} outside 0..{dim - 1}")
        elementary = ex._basis_projector(n, i)
        m = elementary.to_numpy()
    elif kind == "random":
        m = random_density(dim, np.random.default_rng(int(arg or 0)))
    elif kind == "haar":
        seed, _, index = arg.partition(":")
        m = projector(HaarSampler(n, int(seed or 0)).sample(int(index or 0)))
    else:
        if not Path(spec).is_file():
            raise ValueError(f"unknown state spec {spec!r} (not a named state and not a file)")
        doc = json.loads(Path(spec).read_text())
        loaded = np.array(doc, dtype=complex) if isinstance(doc, list) else matrix_from_doc(doc)
        if isinstance(loaded, np.ndarray):
            m = loaded
        else:
            elementary, m = loaded, loaded.to_numpy()
        if m.shape != (dim, dim):
            raise ValueError(f"{spec}: matrix is {m.shape[0]}x{m.shape[1]}, expected {dim}x{dim}")
    return (m, elementary) if exact else m


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgacs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, qubits_default, many=False):
        if many:
            sp.add_argument("--qubits", type=int, nargs="+", default=qubits_default)
        else:
            sp.add_argument("--qubits", type=int, default=qubits_default)
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path)
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    mu = sub.add_parser("mu", help="universal matrix operations")
    mu_sub = mu.add_subparsers(dest="action", required=True)
    build = mu_sub.add_parser("build", help="enumerate the ledger and write the matrix")
    common(build, 1)

    for name in SCORES:
        sp = sub.add_parser(name)
        common(sp, 1)
        if name == "entropy":
            sp.add_argument("--state", default="mixed")
        else:
            sp.add_argument("--sigma", default="random:1")
            sp.add_argument("--rho", default="mixed")
            sp.add_argument("--top", type=int, default=20, help="ledger entries to include")

    defaults = {"addition": [1, 2], "conservation": [1, 2], "selfinfo": [2, 3], "povm": [1, 2],
                "no-cloning": [2], "explore-conjectures": [2]}
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        common(sp, defaults[name], many=True)
        sp.add_argument("--samples", type=int, default=500 if name == "no-cloning" else 20000)
        sp.add_argument("--instances", type=int, default=100 if name == "addition" else 50)
        sp.add_argument("--charge-transforms", type=_bool, default=True, metavar="true|false")
    return p


def _run_experiment(args) -> list:
    n_values = args.qubits
    charge = args.charge_transforms
    if args.command == "addition":
        return [ex.exp_addition(n, args.budget, args.seed, args.instances) for n in n_values]
    if args.command == "conservation":
        return [ex.exp_conservation(tuple(n_values), args.budget, args.seed, args.instances, charge)]
    if args.command == "selfinfo":
        return [ex.exp_selfinfo(n, args.budget, args.samples, args.seed) for n in n_values]
    if args.command == "povm":
        return [ex.exp_povm(tuple(n_values), args.budget, args.seed, args.instances, charge)]
    if args.command == "no-cloning":
        return [ex.exp_nocloning((2, 3), n, args.budget, args.samples, args.seed, charge) for n in n_values]
    return [ex.explore_conjectures(n, args.budget, args.seed, args.instances) for n in n_values]


def _score(args) -> dict:
    n = args.qubits
    mu = build_mu(n, args.budget)
    params = {"n": n, "budget": args.budget}
    if args.command == "entropy":
        h = entropy(parse_state(args.state, n), mu)
        return {"command": "entropy", "parameters": {**params, "state": args.state},
                "result": {"entropy": ex._num(h), "trace_mu": mu.trace}}
    sigma = parse_state(args.sigma, n)
    params.update(sigma=args.sigma, rho=args.rho)
    if args.command == "deficiency":
        rho, rho_exact = parse_state(args.rho, n, exact=True)
        score = deficiency(sigma, default_test_family(rho, mu, rho_exact), top=args.top)
    else:
        score = mutual_information(sigma, parse_state(args.rho, n), product_test_family(mu))
    return {"command": args.command, "parameters": params, "result": ex._num(score.to_doc())}


def _build(args) -> tuple:
    mu = build_mu(args.qubits, args.budget)
    ok, min_eig = validate_psd(mu.matrix)
    doc = mu.to_doc()
    summary = {"command": "mu build", "parameters": {"n": args.qubits, "budget": args.budget},
               "states": len(mu), "trace": mu.trace, "min_eigenvalue": min_eig,
               "verdict": "pass" if ok and mu.trace <= 1 else "fail"}
    return doc, summary


def _csv(rows: list) -> str:
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "mu":
        doc, summary = _build(args)
        if args.format == "csv":
            rows = [{"code": s["code"]["hex"], "length": s["length"], "entries": json.dumps(s["entries"])}
                    for s in doc["ledger"]]
            _emit(_csv(rows), args.out)
        elif args.out is not None:
            _emit(json.dumps(doc), args.out)
        if args.out is not None or args.format == "json":
            sys.stdout.write(json.dumps(summary, indent=2) + "\n")
        return 0 if summary["verdict"] == "pass" else 1
    if args.command in SCORES:
        doc = _score(args)
        if args.format == "csv":
            _emit(_csv([{"command": doc["command"], **doc["parameters"],
                         **{k: v for k, v in doc["result"].items() if not isinstance(v, (list, dict))}}]),
                  args.out)
        else:
            _emit(json.dumps(doc, indent=2), args.out)
        return 0
    reports = _run_experiment(args)
    if args.format == "csv":
        _emit(_csv([row for r in reports for row in r.csv_rows()]), args.out)
    else:
        _emit(json.dumps([r.to_doc() for r in reports], indent=2), args.out)
    for r in reports:
        failed = [c["name"] for c in r.checks if not c["passed"]]
        line = f"{r.experiment_id}: {r.verdict}" + (f" (failed: {', '.join(failed)})" if failed else "")
        print(line, file=sys.stderr)
    return 0 if all(r.verdict in ("pass", "data") for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
