import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdtfourier.cleanup import cleanup_tree
from pdtfourier.fourier import (
    Spectrum,
    bound_formulas,
    bound_report,
    exact_level_bound,
    fwht,
    growth_ratio,
    inverse,
    level1_candidate_ratio,
    m_bound,
    mass_after_truncation,
    r_bound,
    s_bound,
    spectrum_via_leaves,
    wht,
)
from pdtfourier.pdt import random_pdt, tree_from_nested

AND2 = ([0], 0, ([1], 0, 1))

tree_params = st.tuples(st.integers(1, 9), st.integers(0, 5), st.sampled_from(["singleton", "uniform", "small"]),
                        st.integers(0, 2**31))


def make(params):
    n, d, policy, seed = params
    return random_pdt(n, min(d, n), policy, seed)


def brute_coeff(table, n, s):
    total = sum(int(table[b]) * (-1) ** ((s & b).bit_count() & 1) for b in range(1 << n))
    return Fraction(total, 1 << n)


def test_constant_function():
    spec = wht(np.ones(8, dtype=np.int64))
    assert spec.coeff(0) == 1 and spec.l1() == 1
    assert all(spec.coeff(s) == 0 for s in range(1, 8))


def test_dictator():
    # f = (1 - x_0) / 2, i.e. 1 exactly when x_0 = -1
    table = np.array([b & 1 for b in range(8)])
    spec = wht(table)
    assert spec.coeff(0) == Fraction(1, 2) and spec.coeff(1) == Fraction(-1, 2)
    assert spec.level_masses() == [Fraction(1, 2), Fraction(1, 2), 0, 0]


def test_and_of_two():
    spec = spectrum_via_leaves(tree_from_nested(2, AND2))
    assert [spec.coeff(s) for s in range(4)] == [Fraction(1, 4), Fraction(-1, 4), Fraction(-1, 4), Fraction(1, 4)]
    assert spec.level_mass(1) == Fraction(1, 2) and spec.level_mass(2) == Fraction(1, 4)


def test_level_mass_guard_and_table_guard():
    with pytest.raises(ValueError):
        wht(np.ones(3))
    with pytest.raises(ValueError):
        wht(np.ones(8)).level_mass(4)


def test_fwht_is_an_involution_up_to_scale():
    v = np.arange(16, dtype=np.int64) - 5
    assert np.array_equal(fwht(fwht(v)), 16 * v)


@given(st.integers(1, 7), st.data())
def test_wht_matches_definition(n, data):
    table = np.array(data.draw(st.lists(st.integers(0, 1), min_size=1 << n, max_size=1 << n)))
    spec = wht(table)
    for s in range(1 << n):
        assert spec.coeff(s) == brute_coeff(table, n, s)
    assert np.array_equal(inverse(spec), table)
    assert spec.parseval_sum() == Fraction(int(table.sum()), 1 << n)


@given(tree_params)
def test_leaf_spectrum_matches_truth_table(params):
    t = make(params)
    spec = spectrum_via_leaves(t)
    assert spec == wht(t.truth_table())
    assert spec.parseval_sum() == spec.coeff(0)


@given(tree_params)
def test_l1_bounded_by_size_and_exact_caps(params):
    t = make(params)
    rep = bound_report(t)
    assert rep.km_pass and rep.l1 <= t.size
    assert rep.passed
    for row in rep.rows:
        if row.bound is not None:
            assert row.mass <= row.bound


@given(tree_params, st.integers(2, 4))
def test_level_masses_survive_cleanup(params, k):
    t = make(params)
    assert spectrum_via_leaves(cleanup_tree(t, k).tree) == spectrum_via_leaves(t)


@given(tree_params, tree_params, st.integers(0, 4))
def test_level_mass_is_convex_in_the_table(p1, p2, ell):
    # the table of a mixture is a convex combination, so mass is convex in the table
    a, b = make(p1), make((p1[0],) + p2[1:])
    ell = min(ell, a.n)
    ta, tb = a.truth_table(), b.truth_table()
    mix = wht(ta).num + wht(tb).num
    half = Fraction(int(np.abs(mix[np.bitwise_count(np.arange(1 << a.n)) == ell]).sum()), 2 << a.n)
    assert half <= (wht(ta).level_mass(ell) + wht(tb).level_mass(ell)) / 2


def test_bound_formula_examples():
    assert m_bound(10, 2, 2, 1, 0, 0.25, 8) == 1.0
    assert s_bound(2, 2, 0, 0.25, 8) == 1.0
    assert r_bound(0, 1, 1, 0.5) == pytest.approx(math.sqrt(2))
    vals = bound_formulas(10, 2, 2, 2, 1, 0.25, 8)
    assert set(vals) == {"R", "M", "S"}
    assert vals["S"] == pytest.approx(math.sqrt(32 * 2 * math.log2(8 / 0.25)))


@pytest.mark.parametrize("bad", [0.0, 0.6, -1.0])
def test_eps_guard(bad):
    with pytest.raises(ValueError):
        r_bound(1, 1, 2, bad)
    with pytest.raises(ValueError):
        m_bound(1, 1, 2, 1, 1, bad, 4)


def test_s_bound_guard():
    with pytest.raises(ValueError):
        s_bound(1, 2, 3, 0.1, 4)


@given(st.integers(1, 6), st.integers(2, 5), st.floats(0.01, 0.5))
def test_bounds_grow_with_t(ell, k, eps):
    ms = [m_bound(50, 3, k, ell, t, eps, 16) for t in range(ell + 1)]
    ss = [s_bound(3, ell, t, eps, 16) for t in range(ell + 1)]
    assert ms == sorted(ms) and ss == sorted(ss)


def test_exact_level_bound_examples():
    p = Fraction(1, 4)
    assert exact_level_bound(p, 3, 0) == p
    assert exact_level_bound(p, 3, 1) == Fraction(3, 4)
    assert exact_level_bound(p, 3, 2) == p * 7
    assert exact_level_bound(p, 1, 2) == p


def test_ratio_examples():
    assert growth_ratio(Fraction(0), Fraction(1, 2), 3, 1, 8) == 0.0
    assert growth_ratio(Fraction(1, 2), Fraction(1, 4), 1, 1, 2) == 0.5
    assert level1_candidate_ratio(Fraction(1, 2), Fraction(1, 4), 2) == pytest.approx(
        0.5 / (0.25 * math.sqrt(4)))
    assert level1_candidate_ratio(Fraction(1, 2), Fraction(1), 2) == math.inf


def test_report_csv_for_and():
    rep = bound_report(tree_from_nested(2, AND2), [1])
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("level,mass,p,d,size")
    assert lines[1].startswith("1,1/2,1/4,2,3,1/2,PASS")


def test_spectrum_csv_is_reduced():
    text = spectrum_via_leaves(tree_from_nested(2, AND2)).to_csv()
    assert text.splitlines() == ["mask,numerator,log2denominator", "0x0,1,2", "0x1,-1,2", "0x2,-1,2", "0x3,1,2"]


def test_truncation_example():
    t = random_pdt(10, 6, "uniform", 8)
    for d in range(7):
        for ell in range(3):
            res = mass_after_truncation(t, d, ell)
            assert res.ok
    assert mass_after_truncation(t, 6, 1).disagreement == 0


@given(st.tuples(st.integers(1, 8), st.integers(0, 5), st.sampled_from(["uniform", "small"]),
                 st.integers(0, 2**31)), st.integers(0, 5), st.integers(0, 3))
def test_truncation_drift_property(params, d, ell):
    t = make(params)
    res = mass_after_truncation(t, d, min(ell, t.n))
    assert res.ok


def test_exhaustive_small_spaces_match_definition():
    # depth-2 singleton trees over every ordering of three variables
    for a, b, c in permutations(range(3)):
        t = tree_from_nested(3, ([a], ([b], 0, 1), ([c], 1, 1)))
        table = t.truth_table()
        spec = spectrum_via_leaves(t)
        assert all(spec.coeff(s) == brute_coeff(table, 3, s) for s in range(8))
    assert isinstance(spec, Spectrum)
