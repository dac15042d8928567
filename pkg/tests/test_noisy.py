import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdtfourier.fourier import spectrum_via_leaves
from pdtfourier.noisy import (
    NoisyDecisionTree,
    NoisyNode,
    acceptance_probability,
    acceptance_table,
    bias_states,
    child_bias,
    exact_spectrum,
    from_json,
    from_pdt,
    noisy_bound_report,
    noisy_growth_ratio,
    random_noisy_tree,
    reach_by_depth,
    sample,
    to_json,
    to_pdt,
)
from pdtfourier.pdt import equivalent, random_pdt, tree_from_nested

noisy_params = st.tuples(st.integers(1, 6), st.integers(0, 4), st.floats(0.0, 3.0), st.integers(0, 2**31))


def make(params):
    n, d, cost, seed = params
    return random_noisy_tree(n, d, cost, seed=seed)


def one_read(gamma, q=0, n=1, accept_on=-1):
    pos_label, neg_label = (0, 1) if accept_on == -1 else (1, 0)
    return NoisyDecisionTree(n, {0: NoisyNode(0, q, gamma, 1, 2), 1: NoisyNode(1, label=pos_label),
                                 2: NoisyNode(2, label=neg_label)})


def brute_acceptance(tree, b):
    x = [(-1 if b >> i & 1 else 1) for i in range(tree.n)]

    def walk(nid):
        node = tree.nodes[nid]
        if node.is_leaf:
            return Fraction(node.label)
        t = Fraction(node.gamma) * x[node.q]
        return (1 + t) / 2 * walk(node.pos) + (1 - t) / 2 * walk(node.neg)
    return walk(tree.root)


def test_child_bias_examples():
    assert child_bias(0.0, 0.5) == ((0.5, 0.5), (-0.5, 0.5))
    (bp, pp), (bm, pm) = child_bias(Fraction(1, 2), Fraction(1, 2))
    assert bp == Fraction(4, 5) and pp == Fraction(5, 8)
    assert bm == 0 and pm == Fraction(3, 8)
    # a zero-probability branch keeps the old bias
    assert child_bias(1.0, 1.0)[1] == (1.0, 0.0)


def test_acceptance_examples():
    t = one_read(0.5)
    assert acceptance_probability(t, [1]) == pytest.approx(0.25)
    assert acceptance_probability(t, [-1]) == pytest.approx(0.75)
    assert acceptance_table(t).tolist() == pytest.approx([0.25, 0.75])
    with pytest.raises(ValueError):
        acceptance_probability(t, [1, 1])


def test_zero_correlation_read_is_a_coin():
    spec = exact_spectrum(one_read(0.0, n=2), exact=True)
    assert spec.coeffs == [Fraction(1, 2), 0, 0, 0]


def test_depth_one_report():
    t = one_read(1.0)
    rep = noisy_bound_report(t)
    assert rep.passed and rep.rows[1].mass == pytest.approx(0.5)
    assert rep.rows[1].mass / math.sqrt(t.cost()) == pytest.approx(0.5)
    assert rep.rows[0].ratio == pytest.approx(1.0)
    assert "level,mass,p,cost" in rep.to_csv()


def test_node_validation():
    with pytest.raises(ValueError):
        one_read(1.5)
    with pytest.raises(ValueError):
        one_read(0.5, q=3, n=2)
    with pytest.raises(ValueError):
        NoisyDecisionTree(1, {0: NoisyNode(0, label=2)})
    with pytest.raises(ValueError):
        NoisyDecisionTree(1, one_read(1.0).nodes, declared_cost=0.5)


def test_cost_is_max_path_sum():
    nodes = {0: NoisyNode(0, 0, 0.5, 1, 2), 1: NoisyNode(1, 1, 1.0, 3, 4),
             2: NoisyNode(2, label=0), 3: NoisyNode(3, label=1), 4: NoisyNode(4, label=0)}
    t = NoisyDecisionTree(2, nodes)
    assert t.cost() == pytest.approx(1.25) and t.depth == 2


def test_sample_agrees_with_exact_probability():
    t = random_noisy_tree(4, 3, 2.0, seed=4)
    rng = np.random.default_rng(9)
    x = [1, -1, -1, 1]
    trials = 20_000
    hits = sum(sample(t, x, rng) for _ in range(trials))
    p = acceptance_probability(t, x)
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(hits / trials - p) <= 4 * sigma + 1e-9


@given(noisy_params)
def test_acceptance_table_matches_exact_recursion(params):
    t = make(params)
    table = acceptance_table(t)
    for b in range(1 << t.n):
        assert table[b] == pytest.approx(float(brute_acceptance(t, b)), abs=1e-12)


@given(noisy_params)
def test_bias_route_matches_table_transform(params):
    t = make(params)
    a = exact_spectrum(t, "bias")
    b = exact_spectrum(t, "wht")
    assert np.allclose(a.coeffs, b.coeffs, atol=1e-12)


@given(st.tuples(st.integers(1, 4), st.integers(0, 3), st.floats(0.0, 2.0), st.integers(0, 2**31)))
def test_exact_mode_matches_rational_definition(params):
    t = make(params)
    spec = exact_spectrum(t, exact=True)
    n = t.n
    for s in range(1 << n):
        total = sum(brute_acceptance(t, b) * (-1) ** ((s & b).bit_count() & 1) for b in range(1 << n))
        assert spec.coeff(s) == total / (1 << n)


@given(noisy_params)
def test_report_checks_hold(params):
    t = make(params)
    rep = noisy_bound_report(t)
    assert rep.passed
    assert t.cost() <= params[2] + 1e-12
    assert all(r.ratio >= 0 for r in rep.rows)


@given(noisy_params)
def test_reach_probabilities_sum_to_one(params):
    t = make(params)
    assert reach_by_depth(t) == pytest.approx([1.0] * (t.depth + 1))
    for st_ in bias_states(t):
        assert all(-1 <= a <= 1 for a in st_.alpha)


@given(st.tuples(st.integers(1, 7), st.integers(0, 5), st.just("singleton"), st.integers(0, 2**31)))
def test_noiseless_embedding_round_trip(params):
    n, d, policy, seed = params
    t = random_pdt(n, min(d, n), policy, seed)
    nt = from_pdt(t)
    assert nt.cost() == t.depth
    spec = exact_spectrum(nt)
    assert np.allclose(spec.coeffs, [float(c) for c in map(spectrum_via_leaves(t).coeff, range(1 << n))])
    assert equivalent(to_pdt(nt), t)


def test_from_pdt_rejects_parities():
    with pytest.raises(ValueError):
        from_pdt(tree_from_nested(3, ([0, 1], 0, 1)))


def test_to_pdt_splices_repeated_and_flipped_reads():
    nodes = {0: NoisyNode(0, 0, -1.0, 1, 2), 1: NoisyNode(1, 0, 1.0, 3, 4), 2: NoisyNode(2, label=1),
             3: NoisyNode(3, label=0), 4: NoisyNode(4, label=1)}
    t = NoisyDecisionTree(1, nodes)
    d = to_pdt(t)
    assert d.depth == 1
    for b in range(2):
        assert d.truth_table()[b] == round(acceptance_table(t)[b])
    with pytest.raises(ValueError):
        to_pdt(one_read(0.5))


def test_growth_ratio_edge_cases():
    assert noisy_growth_ratio(0.0, 0.5, 1.0, 2, 8) == 0.0
    assert noisy_growth_ratio(0.3, 0.3, 1.0, 0, 8) == pytest.approx(1.0)
    assert noisy_growth_ratio(0.3, 1.0, 1.0, 1, 8) == math.inf


def test_generator_guards_and_determinism():
    with pytest.raises(ValueError):
        random_noisy_tree(0, 2, 1.0, seed=1)
    with pytest.raises(ValueError):
        random_noisy_tree(3, 2, 1.0)
    assert to_json(random_noisy_tree(5, 4, 2.0, seed=7)) == to_json(random_noisy_tree(5, 4, 2.0, seed=7))


def test_method_guards():
    t = one_read(0.5)
    with pytest.raises(ValueError):
        exact_spectrum(t, "fft")
    with pytest.raises(ValueError):
        exact_spectrum(t, "wht", exact=True)


@given(noisy_params)
def test_json_round_trip(params):
    t = make(params)
    text = to_json(t)
    back = from_json(text)
    assert to_json(back) == text and back.declared_cost == params[2]
