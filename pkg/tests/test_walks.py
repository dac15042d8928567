import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdtfourier.cleanup import CleanTree, cleanup_tree
from pdtfourier.experiments.walks import (
    branch_exhaustive_check,
    level1_prefix_check,
    level_mass_via_walks,
    sign_pattern,
    step_decomposition,
    walk_trace,
    x_value,
)
from pdtfourier.fourier import spectrum_via_leaves
from pdtfourier.gf2 import mask
from pdtfourier.pdt import random_pdt, tree_from_nested

CHAIN = ([0, 1], ([0, 2], ([0, 3], ([0], 1, 0), 0), 0), 0)

clean_params = st.tuples(st.integers(2, 7), st.integers(1, 4), st.sampled_from(["singleton", "uniform", "small"]),
                         st.integers(0, 2**31), st.integers(2, 3))


def make_clean(params):
    n, d, policy, seed, k = params
    return cleanup_tree(random_pdt(n, min(d, n), policy, seed), k)


def all_pairs(n, rng):
    return {mask(c): int(rng.choice([-1, 1])) for c in combinations(range(n), 2)}


def test_x_value_examples():
    signs = {mask([0, 1]): 1, mask([1, 2]): -1}
    fixed = (1, -1, 0)
    assert x_value(signs, 0, fixed) == -1
    assert x_value(signs, mask([1]), fixed) == 1
    assert x_value(signs, mask([0, 1]), fixed) == 1


def test_singleton_tree_has_no_y_term():
    ct = cleanup_tree(tree_from_nested(4, ([0], ([1], 0, 1), ([2], 1, ([3], 0, 1)))), 2)
    signs = all_pairs(4, np.random.default_rng(1))
    for t in (0, mask([0]), mask([2])):
        rep = branch_exhaustive_check(ct, 2, t, signs)
        assert rep.ok and rep.steps == 4


def test_full_level_set_gives_constant_walk():
    ct = make_clean((6, 3, "uniform", 5, 2))
    signs = all_pairs(6, np.random.default_rng(2))
    t = mask([1, 4])
    tr = walk_trace(ct, 2, t, signs, np.random.default_rng(0))
    assert set(tr.x) == {signs[t]}


def test_raw_chain_has_even_term_at_wide_step():
    # four coordinates get fixed in one step; cleaning would split that step up
    ct = CleanTree.from_tree(tree_from_nested(5, CHAIN), 4)
    signs = {mask([0, 1]): 1, mask([2, 3]): 1}
    ctx = ct.tree.contexts
    last = [nid for nid, n in ct.tree.nodes.items() if n.query == 1][0]
    assert ctx[last].newly_fixed == mask([0, 1, 2, 3])
    node = ct.tree.nodes[last]
    parts = [step_decomposition(signs, 0, ctx[last].fixed, ctx[ch].fixed, ctx[last].newly_fixed)
             for ch in (node.pos, node.neg)]
    assert parts[0].y == parts[1].y == 2
    assert parts[0].z == -parts[1].z
    assert branch_exhaustive_check(ct, 2, 0, signs).ok


@given(clean_params, st.integers(0, 2**31))
def test_branch_checks_hold_on_cleaned_trees(params, seed):
    ct = make_clean(params)
    rng = np.random.default_rng(seed)
    ell = int(rng.integers(1, min(ct.k, ct.tree.n) + 1))
    signs = {mask(c): int(rng.choice([-1, 1])) for c in combinations(range(ct.tree.n), ell)}
    for size in range(ell + 1):
        t = mask(rng.choice(ct.tree.n, size=size, replace=False).tolist())
        rep = branch_exhaustive_check(ct, ell, t, signs)
        assert rep.ok, rep.violations


@given(clean_params, st.integers(0, 2**31))
def test_walk_traces_reconcile(params, seed):
    ct = make_clean(params)
    rng = np.random.default_rng(seed)
    signs = all_pairs(ct.tree.n, rng)
    tr = walk_trace(ct, 2, 0, signs, rng, pad_to=ct.tree.depth + 3)
    assert tr.telescopes() and tr.reconciles()
    assert len(tr.x) == ct.tree.depth + 4


@given(clean_params)
def test_exact_walk_mass_equals_level_mass(params):
    ct = make_clean(params)
    spec = spectrum_via_leaves(ct.tree)
    for ell in range(min(ct.k, ct.tree.n) + 1):
        assert level_mass_via_walks(ct, ell).value == spec.level_mass(ell)


def test_monte_carlo_within_four_sigma():
    ct = cleanup_tree(random_pdt(10, 5, "uniform", 17), 3)
    exact = level_mass_via_walks(ct, 2).value
    est = level_mass_via_walks(ct, 2, trials=20_000, seed=3)
    assert abs(est.value - float(exact)) <= 4 * est.stderr + 1e-12
    assert est.trials == 20_000 and math.isfinite(est.stderr)


def test_level_above_k_is_rejected():
    ct = cleanup_tree(random_pdt(6, 3, "uniform", 2), 2)
    with pytest.raises(ValueError):
        level_mass_via_walks(ct, 3)
    with pytest.raises(ValueError):
        branch_exhaustive_check(ct, 3, 0, {})
    with pytest.raises(ValueError):
        level_mass_via_walks(ct, 1, trials=10)


def test_sign_pattern_guard():
    ct = cleanup_tree(random_pdt(4, 2, "uniform", 2), 2)
    with pytest.raises(ValueError):
        branch_exhaustive_check(ct, 2, 0, {mask([0]): 1})
    with pytest.raises(ValueError):
        branch_exhaustive_check(ct, 1, mask([0, 1]), {})


@given(st.tuples(st.integers(1, 8), st.integers(0, 5), st.sampled_from(["uniform", "small"]),
                 st.integers(0, 2**31)))
def test_level1_prefix_bounded_by_depth(params):
    n, d, policy, seed = params
    t = random_pdt(n, min(d, n), policy, seed)
    signs = sign_pattern(spectrum_via_leaves(t), 1) or {1: 1}
    assert level1_prefix_check(t, signs) == []
