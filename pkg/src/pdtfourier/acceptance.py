"""The acceptance suite, shared by the test-suite and ``pdtfourier selftest``."""

from __future__ import annotations

import math
import subprocess
import sys
import time
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction

import numpy as np

from . import gf2
from .cleanup import CleanTree, cleanup_tree, verify_clean
from .experiments.concentration import (
    azuma_empirical,
    hypercontractivity_check,
    kwise_moment_check,
    random_kwise_distribution,
    random_poly,
)
from .experiments.walks import (
    branch_exhaustive_check,
    level1_prefix_check,
    sign_pattern,
    walk_trace,
)
from .fourier import bound_report, spectrum_via_leaves, wht
from .noisy import (
    child_bias,
    exact_spectrum,
    noisy_bound_report,
    random_noisy_tree,
)
from .pdt import ParityDecisionTree, QUERY_POLICIES, equivalent, random_pdt, tree_from_nested, validate

CORPUS_SEED = 20240611
CLEAN_KS = (2, 3, 4)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:>2}: {self.name} ({self.seconds:.1f}s) {self.detail}"


@dataclass(frozen=True)
class Scale:
    trees: int = 200
    subspaces: int = 100
    martingale_trees: int = 50
    polys: int = 500
    codes: int = 24
    azuma_trials: int = 100_000
    noisy_trees: int = 100
    grid: int = 101


FULL = Scale()
QUICK = Scale(trees=40, subspaces=30, martingale_trees=12, polys=100, codes=20,
              azuma_trials=20_000, noisy_trees=25, grid=101)


@lru_cache(maxsize=4)
def corpus(size: int) -> tuple[tuple[ParityDecisionTree, int], ...]:
    """Random trees with n <= 12 and depth <= 6, cycling through the query policies."""
    rng = np.random.default_rng(CORPUS_SEED)
    out = []
    for i in range(size):
        n = int(rng.integers(3, 13))
        d = int(rng.integers(1, min(6, n) + 1))
        out.append((random_pdt(n, d, QUERY_POLICIES[i % 3], rng=rng), d))
    return tuple(out)


@lru_cache(maxsize=4)
def cleaned_corpus(size: int) -> tuple[tuple[ParityDecisionTree, int, int, CleanTree], ...]:
    return tuple((t, d, k, cleanup_tree(t, k)) for t, d in corpus(size) for k in CLEAN_KS)


def _timed(number: int, name: str, fn, budget: float | None = None) -> CriterionResult:
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed criterion, reported not raised
        ok, detail = False, f"error: {exc!r}"
    secs = time.perf_counter() - start
    if budget is not None and secs > budget:
        ok, detail = False, f"{detail}; over the {budget:.0f}s budget"
    return CriterionResult(number, name, ok, detail, secs)


def criterion_1(scale: Scale = FULL) -> CriterionResult:
    def run():
        bad = 0
        for tree, _ in corpus(scale.trees):
            if spectrum_via_leaves(tree) != wht(tree.truth_table()):
                bad += 1
        return bad == 0, f"{scale.trees} trees, {bad} mismatches"
    corpus(scale.trees)  # generation is not part of the transform budget
    return _timed(1, "spectrum via leaves equals transform of truth table", run, 30)


def criterion_2(scale: Scale = FULL) -> CriterionResult:
    def run():
        problems = []
        for tree, d, k, ct in cleaned_corpus(scale.trees):
            if not equivalent(tree, ct.tree):
                problems.append(f"k={k}: not equivalent")
            if ct.tree.depth > d * k:
                problems.append(f"k={k}: depth {ct.tree.depth} > {d * k}")
            rep = verify_clean(ct, original_depth=d)
            if not rep.ok:
                problems.append(f"k={k}: {rep.violations[0]}")
        return not problems, f"{scale.trees} trees x k in {CLEAN_KS}; {len(problems)} problems {problems[:2]}"
    corpus(scale.trees)
    return _timed(2, "cleanup is equivalent, shallow enough and clean", run, 60)


def criterion_3(scale: Scale = FULL) -> CriterionResult:
    def run():
        rng = np.random.default_rng(CORPUS_SEED + 3)
        bad = []
        for i in range(scale.subspaces):
            n = int(rng.integers(3, 13))
            r = int(rng.integers(1, min(6, n) + 1))
            k = int(rng.integers(2, 5))
            sub = gf2.F2Subspace.span(n, (int(v) for v in rng.integers(1, 1 << n, size=r)))
            rules = [gf2.minimal_set_rule, gf2.lowest_witness_rule, gf2.highest_witness_rule,
                     gf2.random_witness_rule(i), gf2.random_witness_rule(i + 10_000)]
            results = [gf2.clean_subspace(sub, k, rule) for rule in rules]
            finals = {res[0] for res in results}
            counts = {len(res[1]) for res in results}
            if len(finals) != 1 or len(counts) != 1:
                bad.append(f"subspace {i}: {len(finals)} distinct results")
            if results[0][0].rank > sub.rank * k:
                bad.append(f"subspace {i}: rank {results[0][0].rank} > {sub.rank}*{k}")
        return not bad, f"{scale.subspaces} subspaces x 5 rules; {bad[:2]}"
    return _timed(3, "subspace cleanup is order invariant with rank <= d*k", run)


def and_tree() -> ParityDecisionTree:
    return tree_from_nested(2, ([0], 0, ([1], 0, 1)))


def parity3_tree() -> ParityDecisionTree:
    return tree_from_nested(3, ([0, 1, 2], 0, 1))


def criterion_4(scale: Scale = FULL) -> CriterionResult:
    def run():
        bad = []
        levels = range(0, 5)
        for tree, d, k, ct in cleaned_corpus(scale.trees):
            ls = [ell for ell in levels if ell <= tree.n]
            base = bound_report(tree, ls)
            if k == CLEAN_KS[0] and not base.passed:
                bad.append(f"original tree fails: {base.to_csv()}")
            rep = bound_report(ct.tree, ls)
            if not rep.passed:
                bad.append(f"cleaned k={k} fails")
            if [r.mass for r in rep.rows] != [r.mass for r in base.rows]:
                bad.append(f"cleaned k={k} changes level masses")
        a = bound_report(and_tree(), [1]).rows[0]
        if not (a.mass == a.bound == Fraction(1, 2)):
            bad.append(f"AND tree not tight: {a}")
        par = bound_report(parity3_tree(), [3]).rows[0]
        if not (par.mass == par.bound == Fraction(1, 2)):
            bad.append(f"parity tree not tight: {par}")
        return not bad, f"{scale.trees} trees + {3 * scale.trees} cleanups, levels 0..4, tightness witnesses hit; {bad[:2]}"
    return _timed(4, "exact level-mass bounds and tightness witnesses", run)


def criterion_5(scale: Scale = FULL) -> CriterionResult:
    def run():
        bad = 0
        paths = 0
        for tree, _ in corpus(scale.trees):
            rep = validate(tree)
            paths += len(rep.path_j_sums)
            bad += not rep.ok
            ctx = tree.contexts
            for path in tree.paths():
                js = sum(ctx[u].newly_fixed.bit_count() for u in path[:-1])
                # equality: the J sets partition the coordinates fixed at the leaf
                bad += js != sum(1 for v in ctx[path[-1]].fixed if v)
        for _, d, _, ct in cleaned_corpus(scale.trees):
            rep = verify_clean(ct, original_depth=d)
            bad += any("J" in v for v in rep.violations)
            paths += ct.tree.size
        return bad == 0, f"{paths} paths checked, {bad} trees with violations"
    return _timed(5, "newly-fixed-coordinate accounting along paths", run)


def _chi_matrix(n: int, sets: list[int]) -> np.ndarray:
    pts = np.arange(1 << n, dtype=np.uint64)
    return np.stack([1 - 2 * (np.bitwise_count(pts & np.uint64(s)) & 1).astype(np.int64) for s in sets])


def node_points(tree: ParityDecisionTree) -> dict[int, np.ndarray]:
    """The points reaching each node, by pushing all 2^n points down the tree."""
    out = {}
    stack = [(tree.root, np.arange(1 << tree.n, dtype=np.uint64))]
    while stack:
        nid, pts = stack.pop()
        out[nid] = pts
        node = tree.nodes[nid]
        if not node.is_leaf:
            odd = np.bitwise_count(pts & np.uint64(node.query)) & 1
            stack.append((node.pos, pts[odd == 0]))
            stack.append((node.neg, pts[odd == 1]))
    return out


def criterion_6(scale: Scale = FULL) -> CriterionResult:
    def run():
        from itertools import combinations

        bad = 0
        checks = 0
        for tree, _ in corpus(scale.trees):
            if tree.n > 10:
                continue
            sets = [gf2.mask(c) for r in range(4) for c in combinations(range(tree.n), r)]
            chi = _chi_matrix(tree.n, sets)
            for nid, pts in node_points(tree).items():
                ctx = tree.contexts[nid]
                sums = chi[:, pts.astype(np.int64)].sum(axis=1)
                for s, tot in zip(sets, sums):
                    c = ctx.coset.sign(s)
                    checks += 1
                    if c not in (-1, 0, 1) or tot != c * len(pts):
                        bad += 1
        return bad == 0 and checks > 0, f"{checks} (node, S) pairs, {bad} mismatches"
    return _timed(6, "correlations are in {-1,0,1} and match exhaustive averages", run)


def criterion_7(scale: Scale = FULL) -> CriterionResult:
    def run():
        rng = np.random.default_rng(CORPUS_SEED + 7)
        bad = []
        steps = 0
        walks = 0
        for i in range(scale.martingale_trees):
            n = int(rng.integers(3, 11))
            d = int(rng.integers(1, min(5, n) + 1))
            k = int(rng.integers(2, 5))
            ct = cleanup_tree(random_pdt(n, d, QUERY_POLICIES[i % 3], rng=rng), k)
            spec = spectrum_via_leaves(ct.tree)
            for ell in range(1, min(k, 3) + 1):
                patterns = [sign_pattern(spec, ell),
                            {s: int(rng.choice((-1, 1))) for s in range(1 << n) if s.bit_count() == ell}]
                for signs in patterns:
                    for t in {0, *(gf2.mask(rng.choice(n, size=m, replace=False)) for m in range(ell + 1))}:
                        rep = branch_exhaustive_check(ct, ell, t, signs)
                        steps += rep.steps
                        bad += rep.violations[:1]
                        tr = walk_trace(ct, ell, t, signs, rng, pad_to=d * k)
                        walks += 1
                        if not (tr.telescopes() and tr.reconciles()):
                            bad.append(f"tree {i}: walk does not reconcile")
            level1 = [sign_pattern(spec, 1),
                      {1 << j: int(rng.choice((-1, 1))) for j in range(n)}]
            for signs in level1:
                bad += level1_prefix_check(ct.tree, signs)[:1]
        return not bad, f"{scale.martingale_trees} cleaned trees, {steps} branch steps, {walks} walks; {bad[:2]}"
    return _timed(7, "martingale step structure, branch-exhaustive", run)


def criterion_8(scale: Scale = FULL) -> CriterionResult:
    def run():
        rng = np.random.default_rng(CORPUS_SEED + 8)
        bad = []
        per = scale.polys // 6
        count = 0
        for q in (4, 6):
            for deg in (1, 2, 3):
                n = int(rng.integers(max(deg, 4), 13))
                rep = hypercontractivity_check(deg, q, n, per, int(rng.integers(1 << 31)))
                count += rep.checked
                bad += rep.failures[:1]
        # leftover polynomials so the total reaches the requested count
        if count < scale.polys:
            rep = hypercontractivity_check(2, 4, 10, scale.polys - count, int(rng.integers(1 << 31)))
            count += rep.checked
            bad += rep.failures[:1]
        codes = 0
        for i in range(scale.codes):
            n = int(rng.integers(6, 13))
            dist = random_kwise_distribution(n, rng, min_order=2 if i % 2 else 4)
            k = dist.k // 2
            d = int(rng.integers(1, k + 1))
            ell = int(rng.integers(1, k // d + 1))
            rep = kwise_moment_check(dist, random_poly(n, d, rng), d, ell)
            codes += 1
            if not rep.passed:
                bad.append(f"code {i}: {rep}")
        azuma = []
        for rule in ("constant", "adaptive", "uniform"):
            rows = azuma_empirical(100, rule, (1, 2, 3), scale.azuma_trials, int(rng.integers(1 << 31)))
            azuma += rows
            bad += [f"{rule} beta={r.beta}: tail {r.tail} > {r.bound}" for r in rows if not r.passed]
        tails = ", ".join(f"{r.tail:.4f}" for r in azuma)
        return not bad, f"{count} polynomials, {codes} codes, Azuma tails [{tails}]; {bad[:2]}"
    return _timed(8, "hypercontractivity, k-wise moments, adaptive Azuma", run, 120)


def criterion_9(scale: Scale = FULL) -> CriterionResult:
    def run():
        bad = []
        grid = np.linspace(-1.0, 1.0, scale.grid)
        worst_mean = 0.0
        for a in grid:
            for g in grid:
                (bp, pp), (bm, pm) = child_bias(float(a), float(g))
                mean = pp * (bp - a) + pm * (bm - a)
                worst_mean = max(worst_mean, abs(mean))
                if abs(mean) > 1e-14 or abs(bp - a) > 2 * abs(g) or abs(bm - a) > 2 * abs(g):
                    bad.append(f"alpha={a}, gamma={g}")
        rng = np.random.default_rng(CORPUS_SEED + 9)
        worst = 0.0
        for _ in range(scale.noisy_trees):
            n = int(rng.integers(1, 11))
            depth = int(rng.integers(1, 9))
            tree = random_noisy_tree(n, depth, 2.0, rng=rng)
            a = exact_spectrum(tree, "bias")
            b = exact_spectrum(tree, "wht")
            worst = max(worst, float(np.abs(a.coeffs - b.coeffs).max()))
            if not noisy_bound_report(tree, spec=a).passed:
                bad.append("noisy report check failed")
        if worst > 1e-10:
            bad.append(f"spectra differ by {worst}")
        return not bad, (f"{scale.grid}x{scale.grid} grid (worst mean {worst_mean:.1e}), "
                         f"{scale.noisy_trees} trees (worst gap {worst:.1e}); {bad[:2]}")
    return _timed(9, "noisy bias update and spectrum cross-check", run)


def criterion_10(scale: Scale = FULL) -> CriterionResult:
    def run():
        ratios = 0
        bad = 0
        for tree, _ in corpus(scale.trees):
            rep = bound_report(tree)
            text = rep.to_csv()
            for r in rep.rows:
                ratios += 1
                vals = [r.ratio] + ([r.candidate_ratio] if r.candidate_ratio is not None else [])
                bad += not all(math.isfinite(v) for v in vals)
            bad += "inf" in text or "nan" in text
        rng = np.random.default_rng(CORPUS_SEED + 10)
        for _ in range(scale.noisy_trees):
            tree = random_noisy_tree(int(rng.integers(1, 9)), int(rng.integers(1, 7)), 2.0, rng=rng)
            rep = noisy_bound_report(tree)
            for r in rep.rows:
                ratios += 1
                bad += not math.isfinite(r.ratio)
        return bad == 0, f"{ratios} ratio cells logged, {bad} non-finite"
    return _timed(10, "informational ratio columns are finite", run)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10)


def run_all(quick: bool = False, echo=None) -> list[CriterionResult]:
    """Criteria 1-10, then 11 as the total wall time of this run."""
    scale = QUICK if quick else FULL
    start = time.perf_counter()
    out = []
    for fn in CRITERIA:
        res = fn(scale)
        out.append(res)
        if echo:
            echo(res.line())
    total = time.perf_counter() - start
    budget = 60 if quick else 300
    ok = all(r.passed for r in out) and total <= budget
    res = CriterionResult(11, "end-to-end self test", ok,
                          f"{sum(r.passed for r in out)}/10 passed in {total:.1f}s (budget {budget}s)", total)
    out.append(res)
    if echo:
        echo(res.line())
    return out


def criterion_11() -> CriterionResult:
    """Run ``selftest`` in a fresh interpreter and check exit code and wall time."""
    def run():
        proc = subprocess.run([sys.executable, "-m", "pdtfourier", "selftest"],
                              capture_output=True, text=True, timeout=600)
        lines = proc.stdout.strip().splitlines()
        return proc.returncode == 0, f"exit {proc.returncode}; {lines[-1] if lines else proc.stderr[-200:]}"
    return _timed(11, "selftest subprocess exits 0", run, 300)
