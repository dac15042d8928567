"""Exact Fourier spectra of trees, level masses, and bound evaluators.

A spectrum over n variables stores integer numerators over the common
denominator 2^n, indexed by subset mask.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, log2

import numpy as np

from .pdt import EXHAUSTIVE_MAX_N, ParityDecisionTree, truncate_depth

WHT_MAX_N = 24
DEFAULT_KAPPA = 1.0
TAU_M = 10**4
TAU_S = 32
EXACT_BOUND_MAX_LEVEL = 4


def _popcounts(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Spectrum:
    n: int
    num: np.ndarray  # int64 numerators over 2^n

    def coeff(self, s: int) -> Fraction:
        return Fraction(int(self.num[s]), 1 << self.n)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Spectrum) and self.n == other.n
                and bool(np.array_equal(self.num, other.num)))

    def level_mass(self, ell: int) -> Fraction:
        if not 0 <= ell <= self.n:
            raise ValueError(f"level {ell} outside [0, {self.n}]")
        w = _popcounts(self.n)
        return Fraction(int(np.abs(self.num[w == ell]).sum()), 1 << self.n)

    def level_masses(self) -> list[Fraction]:
        w = _popcounts(self.n)
        out = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(out, w, np.abs(self.num))
        return [Fraction(int(v), 1 << self.n) for v in out]

    def l1(self) -> Fraction:
        return Fraction(int(np.abs(self.num).sum()), 1 << self.n)

    def parseval_sum(self) -> Fraction:
        sq = sum(int(v) * int(v) for v in self.num[self.num != 0])
        return Fraction(sq, 1 << (2 * self.n))

    def to_csv(self) -> str:
        """Non-zero coefficients as ``mask,numerator,log2denominator`` in lowest terms."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mask", "numerator", "log2denominator"])
        for s in np.flatnonzero(self.num):
            num, e = int(self.num[s]), self.n
            while e and num % 2 == 0:
                num //= 2
                e -= 1
            w.writerow([f"{int(s):#x}", num, e])
        return buf.getvalue()


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterfly: out[S] = sum_x values[x] * chi_S(x)."""
    a = np.array(values, copy=True)
    size = a.shape[0]
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < size:
        v = a.reshape(size // (2 * h), 2, h)
        lo, hi = v[:, 0, :].copy(), v[:, 1, :]
        v[:, 0, :] += hi
        v[:, 1, :] = lo - hi
        h *= 2
    return a


def wht(table) -> Spectrum:
    """Exact spectrum of an integer-valued table indexed by point mask."""
    arr = np.asarray(table)
    size = arr.shape[0]
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ValueError("truth table length must be a power of two")
    if n > WHT_MAX_N:
        raise ValueError(f"n={n} exceeds transform guard {WHT_MAX_N}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.round(arr)):
            raise ValueError("exact transform needs integer table values")
        arr = arr.astype(np.int64)
    return Spectrum(n, fwht(arr.astype(np.int64)))


def inverse(spec: Spectrum) -> np.ndarray:
    """Table values f(x) = sum_S fhat(S) chi_S(x), recovered exactly."""
    out = fwht(spec.num)  # 2^n * f(x)
    q, r = np.divmod(out, 1 << spec.n)
    if np.any(r):
        raise ValueError("spectrum does not invert to an integer table")
    return q


def spectrum_via_leaves(tree: ParityDecisionTree) -> Spectrum:
    """Sum over accepting leaves of 2^-depth times the leaf coset's correlations."""
    n = tree.n
    num = np.zeros(1 << n, dtype=np.int64)
    for nid, ctx in tree.contexts.items():
        node = tree.nodes[nid]
        if not node.is_leaf or node.label == 0:
            continue
        members, signs = ctx.coset.signed_member_arrays()
        np.add.at(num, members, signs << (n - ctx.depth))
    return Spectrum(n, num)


def level_mass(spec: Spectrum, ell: int) -> Fraction:
    return spec.level_mass(ell)


def r_bound(D: float, d: float, k: int, eps: float, kappa: float = DEFAULT_KAPPA) -> float:
    _check_eps(eps)
    if k < 1:
        raise ValueError("k must be >= 1")
    return kappa * math.sqrt((D + d * k * (1 / eps) ** (1 / k)) * log2(1 / eps))


def m_bound(D: float, d: float, k: int, ell: int, t: int, eps: float, n: int) -> float:
    _check_eps(eps)
    if k < 1 or t < 0 or n < 1 or ell < 0:
        raise ValueError("need k >= 1, t >= 0, n >= 1, ell >= 0")
    if t == 0:
        return 1.0
    x = n**ell / eps
    return (TAU_M * (D + d * k) * x ** (6 / k) * log2(x)) ** (t / 2)


def s_bound(d: float, ell: int, t: int, eps: float, n: int) -> float:
    _check_eps(eps)
    if t < 0 or t > ell or n < 1:
        raise ValueError("need 0 <= t <= ell and n >= 1")
    if t == 0:
        return 1.0
    prod = 1.0
    for j in range(ell - t, ell):
        prod *= log2(n**j / eps)
    return math.sqrt((TAU_S * d) ** t * prod)


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps={eps} outside (0, 1/2]")


def bound_formulas(D, d, k, ell, t, eps, n, kappa: float = DEFAULT_KAPPA) -> dict[str, float]:
    return {
        "R": r_bound(D, d, k, eps, kappa),
        "M": m_bound(D, d, k, ell, t, eps, n),
        "S": s_bound(d, ell, t, eps, n),
    }


def exact_level_bound(p: Fraction, d: int, ell: int) -> Fraction:
    """Constant-free cap on L_{1,ell} for a depth-d tree with acceptance p."""
    if ell == 0:
        return p
    if ell == 1:
        return p * d
    return p * min(comb(d * ell, ell), 2**d - 1)


def growth_ratio(mass: Fraction, p: Fraction, d: int, ell: int, n: int) -> float:
    """mass / (d^(ell/2) * (ell * log n)^ell), using n >= 2 inside the log."""
    if mass == 0:
        return 0.0
    denom = d ** (ell / 2) * (ell * log2(max(n, 2))) ** ell
    return float(mass) / denom if denom else math.inf


def level1_candidate_ratio(mass: Fraction, p: Fraction, d: int) -> float:
    """mass / (p* sqrt(d log(1/p*))), p* = min(p, 1-p)."""
    ps = min(p, 1 - p)
    if mass == 0:
        return 0.0
    if ps == 0 or d == 0:
        return math.inf
    denom = float(ps) * math.sqrt(d * log2(1 / float(ps)))
    return float(mass) / denom


@dataclass(frozen=True)
class LevelRow:
    level: int
    mass: Fraction
    bound: Fraction | None
    passed: bool | None
    ratio: float
    candidate_ratio: float | None


@dataclass(frozen=True)
class LevelMassReport:
    n: int
    p: Fraction
    d: int
    s: int
    l1: Fraction
    km_pass: bool
    rows: tuple[LevelRow, ...]

    @property
    def passed(self) -> bool:
        return self.km_pass and all(r.passed is not False for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "mass", "p", "d", "size", "exact_bound", "exact_pass",
                    "l1", "km_bound", "km_pass", "growth_ratio", "level1_candidate_ratio"])
        for r in self.rows:
            w.writerow([
                r.level, str(r.mass), str(self.p), self.d, self.s,
                "" if r.bound is None else str(r.bound),
                "" if r.passed is None else ("PASS" if r.passed else "FAIL"),
                str(self.l1), self.s, "PASS" if self.km_pass else "FAIL",
                f"{r.ratio:.6g}",
                "" if r.candidate_ratio is None else f"{r.candidate_ratio:.6g}",
            ])
        return buf.getvalue()


def bound_report(tree: ParityDecisionTree, levels=None, spec: Spectrum | None = None) -> LevelMassReport:
    """Level masses of the tree checked against the constant-free caps.

    Exact caps apply to levels up to EXACT_BOUND_MAX_LEVEL; higher levels only
    get the informational growth ratio.
    """
    spec = spec if spec is not None else spectrum_via_leaves(tree)
    p = spec.coeff(0)
    d = tree.depth
    s = tree.size
    masses = spec.level_masses()
    levels = range(tree.n + 1) if levels is None else levels
    rows = []
    for ell in levels:
        if not 0 <= ell <= tree.n:
            raise ValueError(f"level {ell} outside [0, {tree.n}]")
        m = masses[ell]
        if ell <= EXACT_BOUND_MAX_LEVEL:
            b = exact_level_bound(p, d, ell)
            ok = m <= b
        else:
            b, ok = None, None
        rows.append(LevelRow(
            ell, m, b, ok, growth_ratio(m, p, d, ell, tree.n),
            level1_candidate_ratio(m, p, d) if ell == 1 else None,
        ))
    l1 = spec.l1()
    return LevelMassReport(tree.n, p, d, s, l1, l1 <= s, tuple(rows))


@dataclass(frozen=True)
class TruncationResult:
    mass: Fraction
    original_mass: Fraction
    disagreement: Fraction
    drift_bound: Fraction
    depth_bound: Fraction

    @property
    def ok(self) -> bool:
        return (abs(self.mass - self.original_mass) <= self.drift_bound
                and self.disagreement <= self.depth_bound)


def mass_after_truncation(tree: ParityDecisionTree, d: int, ell: int) -> TruncationResult:
    """Level mass after cutting at depth d, with the exact drift allowance."""
    if tree.n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"n={tree.n} exceeds exhaustive guard {EXHAUSTIVE_MAX_N}")
    cut = truncate_depth(tree, d)
    t1, t2 = tree.truth_table(), cut.truth_table()
    dis = Fraction(int(np.count_nonzero(t1 != t2)), 1 << tree.n)
    at_depth = sum(1 for c in tree.contexts.values() if c.depth == d)
    return TruncationResult(
        mass=wht(t2).level_mass(ell),
        original_mass=wht(t1).level_mass(ell),
        disagreement=dis,
        drift_bound=comb(tree.n, ell) * dis,
        depth_bound=Fraction(at_depth, 1 << d),
    )
