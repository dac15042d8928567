"""Empirical and exact checks of concentration inequalities.

* Maximal Azuma tails for martingales with history-dependent step sizes.
* The (q, 2) hypercontractive norm bound for low-degree polynomials.
* Central moment bounds under k-wise independent distributions built as the
  uniform distribution over a linear code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..fourier import fwht
from ..gf2 import F2Subspace, dual, min_weight

HYPER_MAX_N = 14
KWISE_MAX_N = 14
AZUMA_RULES = ("constant", "adaptive", "uniform")


@dataclass(frozen=True)
class AzumaRow:
    beta: float
    threshold: float
    tail: float
    bound: float
    sigma: float

    @property
    def passed(self) -> bool:
        return self.tail <= self.bound + 3 * self.sigma


def azuma_empirical(
    D: int, rule: str, betas, trials: int, seed: int, U: float | None = None,
) -> list[AzumaRow]:
    """Tail of max_i |X_i| against 2 exp(-beta^2 / 2) at threshold beta * sqrt(2U).

    Rules: ``constant`` takes fair ±1 steps; ``adaptive`` picks magnitude 1.5
    after an up-step and 0.5 otherwise; ``uniform`` scales a Uniform[-1, 1]
    sign by magnitude 1. Magnitudes are clipped so sum Delta^2 <= U always.
    """
    if rule not in AZUMA_RULES:
        raise ValueError(f"unknown step rule {rule!r}; use one of {AZUMA_RULES}")
    if D < 1 or trials < 2:
        raise ValueError("need D >= 1 and trials >= 2")
    U = float(D) if U is None else float(U)
    rng = np.random.default_rng(seed)
    x = np.zeros(trials)
    peak = np.zeros(trials)
    used = np.zeros(trials)
    last_up = np.ones(trials, dtype=bool)
    for _ in range(D):
        if rule == "adaptive":
            mag = np.where(last_up, 1.5, 0.5)
        else:
            mag = np.ones(trials)
        mag = np.minimum(mag, np.sqrt(np.maximum(U - used, 0.0)))
        if rule == "uniform":
            z = rng.uniform(-1.0, 1.0, trials)
        else:
            z = rng.choice((-1.0, 1.0), size=trials)
        used += mag**2
        x += mag * z
        last_up = z > 0
        np.maximum(peak, np.abs(x), out=peak)
    assert np.all(used <= U * (1 + 1e-12))
    rows = []
    for beta in betas:
        thr = beta * math.sqrt(2 * U)
        tail = float(np.mean(peak >= thr))
        bound = 2 * math.exp(-beta * beta / 2)
        q = min(bound, 1.0)
        rows.append(AzumaRow(float(beta), thr, tail, bound, math.sqrt(q * (1 - q) / trials)))
    return rows


def poly_values(n: int, coeffs: dict[int, int]) -> np.ndarray:
    """Values at all 2^n points of sum_S c_S chi_S, indexed by point mask."""
    vec = np.zeros(1 << n, dtype=np.int64)
    for s, c in coeffs.items():
        vec[s] = c
    return fwht(vec)


def random_poly(n: int, degree: int, rng: np.random.Generator, max_terms: int = 20) -> dict[int, int]:
    """Random integer multilinear polynomial of degree exactly ``degree``."""
    support = [s for s in range(1 << n) if s.bit_count() <= degree]
    top = [s for s in support if s.bit_count() == degree]
    terms = int(rng.integers(1, min(max_terms, len(support)) + 1))
    chosen = {int(top[int(rng.integers(len(top)))])}
    chosen.update(int(s) for s in rng.choice(support, size=terms - 1, replace=False))
    out = {}
    for s in chosen:
        c = 0
        while c == 0:
            c = int(rng.integers(-3, 4))
        out[s] = c
    return out


def poly_degree(coeffs: dict[int, int]) -> int:
    return max((s.bit_count() for s, c in coeffs.items() if c), default=0)


@dataclass
class HyperReport:
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def hypercontractive_holds(values: np.ndarray, n: int, q: int, d: int) -> bool:
    """Exact test of ||f||_q <= (q-1)^(d/2) ||f||_2.

    Both sides raised to the power 2q and scaled by 2^(nq):
    (sum f^q)^2 * 2^(n(q-2)) <= (q-1)^(dq) * (sum f^2)^q.
    """
    vals = [int(v) for v in values]
    sq = sum(v * v for v in vals)
    sqq = sum(v**q for v in vals)
    return sqq * sqq * (1 << (n * (q - 2))) <= (q - 1) ** (d * q) * sq**q


def hypercontractivity_check(degree: int, q: int, n: int, trials: int, seed: int) -> HyperReport:
    if q not in (4, 6, 8):
        raise ValueError("q must be 4, 6 or 8")
    if n > HYPER_MAX_N or n < 1:
        raise ValueError(f"n={n} outside [1, {HYPER_MAX_N}]")
    if not 0 <= degree <= n:
        raise ValueError("degree must lie in [0, n]")
    rng = np.random.default_rng(seed)
    rep = HyperReport()
    for i in range(trials):
        f = random_poly(n, degree, rng)
        d = poly_degree(f)
        rep.checked += 1
        if not hypercontractive_holds(poly_values(n, f), n, q, d):
            rep.failures.append(f"trial {i}: {f}")
    return rep


@dataclass(frozen=True)
class KWiseDistribution:
    """Uniform distribution on the point masks of a linear code.

    ``checks`` spans the dual; the code is every point orthogonal to it.
    """

    checks: F2Subspace
    k: int

    @property
    def n(self) -> int:
        return self.checks.n

    @property
    def code(self) -> F2Subspace:
        return dual(self.checks)

    @classmethod
    def from_checks(cls, checks: F2Subspace) -> "KWiseDistribution":
        w = min_weight(checks)
        return cls(checks, checks.n if w is None else w - 1)

    def points(self) -> np.ndarray:
        return self.code.member_array()


def independence_order(dist: KWiseDistribution) -> int:
    """Largest K with E[x_S] = 0 for all 1 <= |S| <= K, found by transforming the support."""
    if dist.n > KWISE_MAX_N:
        raise ValueError(f"n={dist.n} exceeds guard {KWISE_MAX_N}")
    ind = np.zeros(1 << dist.n, dtype=np.int64)
    ind[dist.points().astype(np.int64)] = 1
    corr = fwht(ind)
    w = np.bitwise_count(np.arange(1 << dist.n, dtype=np.uint64))
    biased = w[(corr != 0) & (w > 0)]
    return int(biased.min()) - 1 if biased.size else dist.n


def random_kwise_distribution(n: int, rng: np.random.Generator, min_order: int = 2,
                              max_checks: int = 3) -> KWiseDistribution:
    """Code with random parity checks, redrawn until it is min_order-wise independent."""
    for _ in range(1000):
        r = int(rng.integers(1, max_checks + 1))
        checks = F2Subspace.span(n, (int(v) for v in rng.integers(1, 1 << n, size=r)))
        dist = KWiseDistribution.from_checks(checks)
        if dist.k >= min_order:
            return dist
    raise RuntimeError("could not draw a code with the requested independence")


@dataclass(frozen=True)
class MomentReport:
    lhs: Fraction
    rhs: Fraction
    moments_match: bool
    order_verified: bool

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs and self.moments_match and self.order_verified


def _moments(values, count: int, mu: Fraction, top: int) -> list[Fraction]:
    """Central moments 0..top of equally weighted values, in exact arithmetic."""
    # scale by mu's denominator so the inner sums stay in integers
    num, den = mu.numerator, mu.denominator
    centered = [int(v) * den - num for v in values]
    return [Fraction(sum(c**j for c in centered), count * den**j) for j in range(top + 1)]


def kwise_moment_check(dist: KWiseDistribution, coeffs: dict[int, int], d: int, ell: int) -> MomentReport:
    """E[(f - mu)^(2 ell)] <= sigma^(2 ell) (2 ell - 1)^(d ell) under ``dist``, exactly.

    Requires 2k-wise independence with d * ell <= k; also compares the first
    2 ell central moments with those under the uniform distribution.
    """
    k = dist.k // 2
    if d < 0 or ell < 1 or d * ell > k:
        raise ValueError(f"need d * ell <= k = {k} (independence order {dist.k})")
    if poly_degree(coeffs) > d:
        raise ValueError("polynomial degree exceeds d")
    order_ok = independence_order(dist) == dist.k
    n = dist.n
    table = poly_values(n, coeffs)
    pts = dist.points().astype(np.int64)
    on_code = table[pts]
    mu = Fraction(sum(int(v) for v in on_code), len(on_code))
    mom = _moments(on_code, len(on_code), mu, 2 * ell)
    uni = _moments(table, len(table), Fraction(coeffs.get(0, 0)), 2 * ell)
    var = mom[2]
    rhs = var**ell * (2 * ell - 1) ** (d * ell)
    return MomentReport(mom[2 * ell], rhs, mom == uni, order_ok)
