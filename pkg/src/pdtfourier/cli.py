"""Command-line front end. Exit codes: 0 ok, 1 a check failed, 2 usage or guard error."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import acceptance, noisy, pdt
from .cleanup import cleanup_tree, verify_clean
from .experiments.concentration import AZUMA_RULES, azuma_empirical, hypercontractivity_check
from .experiments.sweep import SWEEP_KINDS, SweepConfig, sweep
from .fourier import DEFAULT_KAPPA, bound_formulas, bound_report, spectrum_via_leaves

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_tree(path: str) -> pdt.ParityDecisionTree:
    try:
        return pdt.from_json(_read(path))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"{path}: not a tree document ({exc})") from exc


def _load_noisy(path: str) -> noisy.NoisyDecisionTree:
    try:
        return noisy.from_json(_read(path))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"{path}: not a noisy tree document ({exc})") from exc


def _check_valid(tree: pdt.ParityDecisionTree) -> None:
    rep = pdt.validate(tree)
    if not rep.ok:
        raise UsageError(f"invalid tree: {rep.violations[0]}")


def cmd_gen(a) -> int:
    tree = pdt.random_pdt(a.n, a.depth, a.policy, seed=a.seed)
    _write(pdt.to_json(tree), a.output)
    return EXIT_OK


def cmd_validate(a) -> int:
    tree = _load_tree(a.tree)
    rep = pdt.validate(tree)
    if rep.ok:
        print(f"valid: n={tree.n}, depth={tree.depth}, leaves={tree.size}")
        return EXIT_OK
    for v in rep.violations:
        print(f"violation: {v}")
    return EXIT_FAIL


def cmd_clean(a) -> int:
    tree = _load_tree(a.tree)
    _check_valid(tree)
    ct = cleanup_tree(tree, a.k)
    _write(ct.to_json(), a.output)
    rep = verify_clean(ct, original_depth=tree.depth)
    status = "PASS" if rep.ok else "FAIL"
    print(f"verify_clean: {status} (depth {ct.tree.depth}, bound {tree.depth * a.k})", file=sys.stderr)
    for v in rep.violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_spectrum(a) -> int:
    tree = _load_tree(a.tree)
    _check_valid(tree)
    _write(spectrum_via_leaves(tree).to_csv(), a.output)
    return EXIT_OK


def _levels(a, n: int):
    if not a.level:
        return None
    for ell in a.level:
        if not 0 <= ell <= n:
            raise UsageError(f"--level {ell} outside [0, {n}]")
    return a.level


def cmd_bounds(a) -> int:
    tree = _load_tree(a.tree)
    _check_valid(tree)
    rep = bound_report(tree, _levels(a, tree.n))
    _write(rep.to_csv(), a.output)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_formulas(a) -> int:
    vals = bound_formulas(a.D, a.d, a.k, a.level, a.t, a.eps, a.n, kappa=a.kappa)
    print("name,value")
    for name, v in vals.items():
        print(f"{name},{v:.12g}")
    return EXIT_OK


def cmd_noisy_gen(a) -> int:
    tree = noisy.random_noisy_tree(a.n, a.depth, a.cost, seed=a.seed)
    _write(noisy.to_json(tree), a.output)
    return EXIT_OK


def cmd_noisy_spectrum(a) -> int:
    tree = _load_noisy(a.tree)
    spec = noisy.exact_spectrum(tree, a.method)
    lines = ["mask,coefficient"]
    lines += [f"{s:#x},{float(c):.17g}" for s, c in enumerate(spec.coeffs) if abs(c) > noisy.NOISE_TOL]
    _write("\n".join(lines) + "\n", a.output)
    return EXIT_OK


def cmd_noisy_bounds(a) -> int:
    tree = _load_noisy(a.tree)
    rep = noisy.noisy_bound_report(tree, _levels(a, tree.n))
    _write(rep.to_csv(), a.output)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_experiment(a) -> int:
    if a.name in SWEEP_KINDS:
        doc = json.loads(_read(a.config)) if a.config else {}
        doc["kind"] = a.name
        if a.seed is not None:
            doc["master_seed"] = a.seed
        elif "master_seed" not in doc:
            raise UsageError("experiment needs --seed or master_seed in the config")
        for key in ("n", "depth", "levels"):
            if getattr(a, key):
                doc[key] = getattr(a, key)
        for key in ("instances", "policy", "k", "cost", "trials"):
            if getattr(a, key) is not None:
                doc[key] = getattr(a, key)
        text = sweep(SweepConfig.from_dict(doc), jobs=a.jobs)
    else:
        if a.seed is None:
            raise UsageError("experiment needs --seed")
        trials = a.trials or 10_000
        if a.name == "azuma":
            lines = ["rule,beta,threshold,tail,bound,sigma,check"]
            for rule in AZUMA_RULES:
                for r in azuma_empirical(a.D, rule, a.beta or (1.0, 2.0, 3.0), trials, a.seed):
                    lines.append(f"{rule},{r.beta:g},{r.threshold:.6g},{r.tail:.6g},{r.bound:.6g},"
                                 f"{r.sigma:.3g},{'PASS' if r.passed else 'FAIL'}")
        else:
            lines = ["q,degree,n,checked,failures,check"]
            for q in (4, 6):
                for deg in (1, 2, 3):
                    n = max(a.n[0] if a.n else 10, deg)
                    r = hypercontractivity_check(deg, q, n, trials, a.seed)
                    lines.append(f"{q},{deg},{n},{r.checked},{len(r.failures)},"
                                 f"{'PASS' if r.passed else 'FAIL'}")
        text = "\n".join(lines) + "\n"
    _write(text, a.output)
    return EXIT_FAIL if ",FAIL" in text else EXIT_OK


def cmd_selftest(a) -> int:
    results = acceptance.run_all(quick=a.quick, echo=print)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdtfourier", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def tree_cmd(name, help_, fn):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("tree", help="tree JSON file, or - for stdin")
        sp.add_argument("-o", "--output", help="write here instead of stdout")
        sp.set_defaults(fn=fn)
        return sp

    g = sub.add_parser("gen", help="random parity decision tree as JSON")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--policy", choices=pdt.QUERY_POLICIES, default="uniform")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("-o", "--output")
    g.set_defaults(fn=cmd_gen)

    tree_cmd("validate", "check tree structure and path accounting", cmd_validate)
    c = tree_cmd("clean", "k-cleanup plus verifier report", cmd_clean)
    c.add_argument("--k", type=int, required=True)
    tree_cmd("spectrum", "exact spectrum as CSV", cmd_spectrum)
    b = tree_cmd("bounds", "level-mass report as CSV", cmd_bounds)
    b.add_argument("--level", type=int, action="append", help="repeatable; default all levels")

    f = sub.add_parser("formulas", help="evaluate the R, M and S bound functions")
    for flag, typ in (("--D", float), ("--d", float), ("--k", int), ("--level", int),
                      ("--t", int), ("--eps", float), ("--n", int)):
        f.add_argument(flag, type=typ, required=True)
    f.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    f.set_defaults(fn=cmd_formulas)

    ng = sub.add_parser("noisy-gen", help="random noisy decision tree as JSON")
    ng.add_argument("--n", type=int, required=True)
    ng.add_argument("--depth", type=int, required=True)
    ng.add_argument("--cost", type=float, required=True)
    ng.add_argument("--seed", type=int, required=True)
    ng.add_argument("-o", "--output")
    ng.set_defaults(fn=cmd_noisy_gen)
    ns = tree_cmd("noisy-spectrum", "spectrum of the acceptance probability", cmd_noisy_spectrum)
    ns.add_argument("--method", choices=("bias", "wht"), default="bias")
    nb = tree_cmd("noisy-bounds", "noisy level-mass report as CSV", cmd_noisy_bounds)
    nb.add_argument("--level", type=int, action="append")

    e = sub.add_parser("experiment", help="run a sweep or a concentration experiment")
    e.add_argument("name", choices=SWEEP_KINDS + ("azuma", "hypercontractivity"))
    e.add_argument("--config", help="JSON sweep config")
    e.add_argument("--seed", type=int)
    e.add_argument("--n", type=int, action="append")
    e.add_argument("--depth", type=int, action="append")
    e.add_argument("--levels", type=int, action="append")
    e.add_argument("--instances", type=int)
    e.add_argument("--policy", choices=pdt.QUERY_POLICIES)
    e.add_argument("--k", type=int)
    e.add_argument("--cost", type=float)
    e.add_argument("--trials", type=int)
    e.add_argument("--D", type=int, default=100)
    e.add_argument("--beta", type=float, action="append")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("-o", "--output")
    e.set_defaults(fn=cmd_experiment)

    s = sub.add_parser("selftest", help="run the acceptance suite")
    s.add_argument("--quick", action="store_true")
    s.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)  # exits 2 on usage errors
    try:
        return a.fn(a)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
