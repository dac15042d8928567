"""Noisy decision trees: each query returns x_q correlated with correlation gamma.

At a node (q, gamma) the answer b in {±1} comes out with probability
(1 + gamma * b * x_q) / 2. The query costs gamma^2 and a tree's cost is the
largest cost along a root-to-leaf path.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .fourier import fwht
from .pdt import EXHAUSTIVE_MAX_N, Node, ParityDecisionTree, dump_doc

COST_SLACK = 1e-12
NOISE_TOL = 1e-12


@dataclass(frozen=True)
class NoisyNode:
    id: int
    q: int | None = None
    gamma: float | Fraction = 0.0
    pos: int | None = None
    neg: int | None = None
    label: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.q is None


@dataclass(frozen=True, eq=False)
class NoisyDecisionTree:
    n: int
    nodes: dict[int, NoisyNode]
    root: int = 0
    declared_cost: float | None = None

    def __post_init__(self):
        for node in self.nodes.values():
            if node.is_leaf:
                if node.label not in (0, 1):
                    raise ValueError(f"leaf {node.id} has label {node.label!r}")
            else:
                if not 0 <= node.q < self.n:
                    raise ValueError(f"node {node.id} queries index {node.q} outside [0, {self.n})")
                if not -1 <= node.gamma <= 1:
                    raise ValueError(f"node {node.id} has correlation {node.gamma} outside [-1, 1]")
        if self.declared_cost is not None and self.cost() > self.declared_cost + COST_SLACK:
            raise ValueError(f"tree cost {self.cost()} exceeds declared cost {self.declared_cost}")

    def cost(self):
        """Largest sum of gamma^2 over root-to-leaf paths."""
        def walk(nid):
            node = self.nodes[nid]
            if node.is_leaf:
                return 0
            return node.gamma**2 + max(walk(node.pos), walk(node.neg))
        return walk(self.root)

    @property
    def depth(self) -> int:
        def walk(nid):
            node = self.nodes[nid]
            return 0 if node.is_leaf else 1 + max(walk(node.pos), walk(node.neg))
        return walk(self.root)


def child_bias(alpha, gamma):
    """((bias, prob) on edge +1, (bias, prob) on edge -1) after one noisy read.

    A branch with zero probability keeps the old bias.
    """
    out = []
    for b in (1, -1):
        prob = (1 + b * gamma * alpha) / 2
        bias = (alpha + b * gamma) / (1 + b * gamma * alpha) if prob != 0 else alpha
        out.append((bias, prob))
    return tuple(out)


@dataclass(frozen=True)
class BiasState:
    node: int
    depth: int
    alpha: tuple
    reach_prob: float | Fraction


def bias_states(tree: NoisyDecisionTree, exact: bool = False) -> Iterator[BiasState]:
    """Preorder walk carrying each node's product-distribution bias vector."""
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    stack = [(tree.root, 0, (zero,) * tree.n, one)]
    while stack:
        nid, depth, alpha, reach = stack.pop()
        yield BiasState(nid, depth, alpha, reach)
        node = tree.nodes[nid]
        if node.is_leaf:
            continue
        g = Fraction(node.gamma) if exact else float(node.gamma)
        (bp, pp), (bm, pm) = child_bias(alpha[node.q], g)
        for child, bias, prob in ((node.neg, bm, pm), (node.pos, bp, pp)):
            a = list(alpha)
            a[node.q] = bias
            stack.append((child, depth + 1, tuple(a), reach * prob))


def acceptance_probability(tree: NoisyDecisionTree, x) -> float:
    """Pr[tree outputs 1 on x], summing over all paths."""
    if len(x) != tree.n:
        raise ValueError(f"point has dimension {len(x)}, tree has n={tree.n}")
    total = 0.0
    stack = [(tree.root, 1.0)]
    while stack:
        nid, p = stack.pop()
        node = tree.nodes[nid]
        if node.is_leaf:
            total += p * node.label
            continue
        t = node.gamma * x[node.q]
        stack.append((node.pos, p * (1 + t) / 2))
        stack.append((node.neg, p * (1 - t) / 2))
    return float(total)


def acceptance_table(tree: NoisyDecisionTree) -> np.ndarray:
    """Acceptance probability at every point, indexed by point mask."""
    if tree.n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"n={tree.n} exceeds exhaustive guard {EXHAUSTIVE_MAX_N}")
    pts = np.arange(1 << tree.n, dtype=np.uint64)
    table = np.zeros(1 << tree.n)
    stack = [(tree.root, np.ones(1 << tree.n))]
    while stack:
        nid, reach = stack.pop()
        node = tree.nodes[nid]
        if node.is_leaf:
            if node.label:
                table += reach
            continue
        xq = 1.0 - 2.0 * ((pts >> np.uint64(node.q)) & np.uint64(1)).astype(float)
        t = float(node.gamma) * xq
        stack.append((node.pos, reach * (1 + t) / 2))
        stack.append((node.neg, reach * (1 - t) / 2))
    return table


def sample(tree: NoisyDecisionTree, x, rng: np.random.Generator) -> int:
    nid = tree.root
    while not (node := tree.nodes[nid]).is_leaf:
        up = rng.random() < (1 + float(node.gamma) * x[node.q]) / 2
        nid = node.pos if up else node.neg
    return node.label


@dataclass(frozen=True, eq=False)
class RealSpectrum:
    n: int
    coeffs: np.ndarray | list  # float array, or list of Fractions in exact mode

    def coeff(self, s: int):
        return self.coeffs[s]

    def level_mass(self, ell: int):
        if not 0 <= ell <= self.n:
            raise ValueError(f"level {ell} outside [0, {self.n}]")
        return sum(abs(c) for s, c in enumerate(self.coeffs) if s.bit_count() == ell)

    def level_masses(self) -> list:
        return [self.level_mass(ell) for ell in range(self.n + 1)]

    def parseval_sum(self):
        return sum(c * c for c in self.coeffs)


def _product_moments(alpha) -> np.ndarray:
    # entry S is prod_{j in S} alpha_j, with bit j of S selecting alpha_j
    out = np.ones(1)
    for a in alpha:
        out = np.concatenate([out, out * a])
    return out


def _product_moments_exact(alpha) -> list:
    out = [Fraction(1)]
    for a in alpha:
        out = out + [v * a for v in out]
    return out


def exact_spectrum(tree: NoisyDecisionTree, method: str = "bias", exact: bool = False) -> RealSpectrum:
    """Fourier spectrum of the acceptance probability.

    ``bias`` sums reach_prob * prod alpha_j over accepting leaves; ``wht``
    transforms the acceptance table. ``exact`` runs the bias route in
    rational arithmetic.
    """
    if tree.n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"n={tree.n} exceeds enumeration guard {EXHAUSTIVE_MAX_N}")
    if method == "wht":
        if exact:
            raise ValueError("exact mode uses the bias route")
        return RealSpectrum(tree.n, fwht(acceptance_table(tree)) / (1 << tree.n))
    if method != "bias":
        raise ValueError(f"unknown method {method!r}")
    if exact:
        acc = [Fraction(0)] * (1 << tree.n)
        for st in bias_states(tree, exact=True):
            if tree.nodes[st.node].is_leaf and tree.nodes[st.node].label:
                for s, m in enumerate(_product_moments_exact(st.alpha)):
                    acc[s] += st.reach_prob * m
        return RealSpectrum(tree.n, acc)
    acc = np.zeros(1 << tree.n)
    for st in bias_states(tree):
        if tree.nodes[st.node].is_leaf and tree.nodes[st.node].label:
            acc += st.reach_prob * _product_moments(st.alpha)
    return RealSpectrum(tree.n, acc)


def reach_by_depth(tree: NoisyDecisionTree) -> list[float]:
    """Total reach probability per depth, carrying shallow leaves forward."""
    depth = tree.depth
    sums = [0.0] * (depth + 1)
    for st in bias_states(tree):
        if tree.nodes[st.node].is_leaf:
            for j in range(st.depth, depth + 1):
                sums[j] += st.reach_prob
        else:
            sums[st.depth] += st.reach_prob
    return sums


def random_noisy_tree(
    n: int, depth: int, max_cost: float, seed: int | None = None,
    rng: np.random.Generator | None = None, zero_prob: float = 0.1,
) -> NoisyDecisionTree:
    """Full-depth tree with random indices (repeats allowed) and cost <= max_cost.

    Correlations are uniform on [-g, g] with g = min(1, sqrt(max_cost / depth)),
    and each query is zero-correlation with probability ``zero_prob``.
    """
    if n < 1 or depth < 0 or max_cost < 0:
        raise ValueError("need n >= 1, depth >= 0, max_cost >= 0")
    if rng is None:
        if seed is None:
            raise ValueError("random_noisy_tree needs a seed or a generator")
        rng = np.random.default_rng(seed)
    g = min(1.0, math.sqrt(max_cost / depth)) if depth else 0.0
    nodes: dict[int, NoisyNode] = {}

    def grow(left: int) -> int:
        nid = len(nodes)
        if left == 0:
            nodes[nid] = NoisyNode(nid, label=int(rng.integers(2)))
            return nid
        nodes[nid] = None
        q = int(rng.integers(n))
        gamma = 0.0 if rng.random() < zero_prob else float(rng.uniform(-g, g))
        p = grow(left - 1)
        m = grow(left - 1)
        nodes[nid] = NoisyNode(nid, q, gamma, p, m)
        return nid

    grow(depth)
    return NoisyDecisionTree(n, nodes, 0, declared_cost=max_cost)


def from_pdt(tree: ParityDecisionTree) -> NoisyDecisionTree:
    """Embed a singleton-query tree as a noiseless noisy tree."""
    nodes = {}
    for nid, node in tree.nodes.items():
        if node.is_leaf:
            nodes[nid] = NoisyNode(nid, label=node.label)
        else:
            if node.query.bit_count() != 1:
                raise ValueError("only singleton queries embed as noisy reads")
            nodes[nid] = NoisyNode(nid, node.query.bit_length() - 1, 1.0, node.pos, node.neg)
    return NoisyDecisionTree(tree.n, nodes, tree.root)


def to_pdt(tree: NoisyDecisionTree) -> ParityDecisionTree:
    """Deterministic tree for a noiseless noisy tree; repeated reads are spliced out."""
    out: dict[int, Node] = {}

    def walk(nid: int, known: dict[int, int]) -> int:
        node = tree.nodes[nid]
        while not node.is_leaf:
            if abs(node.gamma) != 1:
                raise ValueError(f"node {node.id} has |gamma| != 1")
            if node.q not in known:
                break
            ans = known[node.q] * (1 if node.gamma > 0 else -1)
            node = tree.nodes[node.pos if ans == 1 else node.neg]
        new = len(out)
        if node.is_leaf:
            out[new] = Node(new, label=node.label)
            return new
        out[new] = None
        # answer b means x_q = b * sign(gamma)
        s = 1 if node.gamma > 0 else -1
        p = walk(node.pos, {**known, node.q: s})
        m = walk(node.neg, {**known, node.q: -s})
        out[new] = Node(new, query=1 << node.q, pos=p, neg=m)
        return new

    walk(tree.root, {})
    return ParityDecisionTree(tree.n, out, 0)


def _ratio_mass_tol(mass) -> bool:
    return abs(mass) <= NOISE_TOL


def noisy_growth_ratio(mass, p, cost, ell: int, n: int) -> float:
    """mass / (p* d^(ell/2) sqrt(log(1/p*) log(n^ell/p*)^(ell-1))), p* = min(p, 1-p).

    Levels >= 1 have the same mass for f and 1 - f, hence p*.
    """
    mass, p, cost = float(mass), float(p), float(cost)
    if _ratio_mass_tol(mass):
        return 0.0
    if ell == 0:
        # the normalizer collapses to p at level 0
        return mass / p
    ps = min(p, 1 - p)
    if ps <= 0 or cost <= 0:
        return math.inf
    ne = max(n, 2)
    inner = math.log2(1 / ps) * math.log2(ne**ell / ps) ** (ell - 1)
    return mass / (ps * cost ** (ell / 2) * math.sqrt(inner))


@dataclass(frozen=True)
class NoisyLevelRow:
    level: int
    mass: float
    ratio: float


@dataclass(frozen=True)
class NoisyReport:
    n: int
    p: float
    cost: float
    parseval: float
    level0_ok: bool
    parseval_ok: bool
    rows: tuple[NoisyLevelRow, ...]

    @property
    def passed(self) -> bool:
        return self.level0_ok and self.parseval_ok

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "mass", "p", "cost", "parseval_sum", "level0_check",
                    "parseval_check", "growth_ratio"])
        for r in self.rows:
            w.writerow([r.level, f"{float(r.mass):.17g}", f"{float(self.p):.17g}",
                        f"{float(self.cost):.17g}", f"{float(self.parseval):.17g}",
                        "PASS" if self.level0_ok else "FAIL",
                        "PASS" if self.parseval_ok else "FAIL", f"{r.ratio:.6g}"])
        return buf.getvalue()


def noisy_bound_report(tree: NoisyDecisionTree, levels=None, spec: RealSpectrum | None = None) -> NoisyReport:
    spec = spec if spec is not None else exact_spectrum(tree)
    p = spec.coeff(0)
    cost = tree.cost()
    levels = range(tree.n + 1) if levels is None else levels
    masses = spec.level_masses()
    rows = tuple(
        NoisyLevelRow(ell, masses[ell], noisy_growth_ratio(masses[ell], p, cost, ell, tree.n))
        for ell in levels
    )
    pars = spec.parseval_sum()
    return NoisyReport(
        tree.n, p, cost, pars,
        level0_ok=abs(masses[0] - abs(p)) <= NOISE_TOL,
        parseval_ok=pars <= p + NOISE_TOL,
        rows=rows,
    )


def to_json(tree: NoisyDecisionTree) -> str:
    nodes = []
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        if node.is_leaf:
            nodes.append({"id": nid, "leaf": node.label})
        else:
            nodes.append({"id": nid, "q": node.q, "gamma": float(node.gamma),
                          "pos_child": node.pos, "neg_child": node.neg})
    doc = {"n": tree.n, "root": tree.root}
    if tree.declared_cost is not None:
        doc["cost"] = tree.declared_cost
    doc["nodes"] = nodes
    return dump_doc(doc)


def from_json(text: str) -> NoisyDecisionTree:
    doc = json.loads(text)
    nodes = {}
    for nd in doc["nodes"]:
        nid = int(nd["id"])
        if "leaf" in nd:
            nodes[nid] = NoisyNode(nid, label=nd["leaf"])
        else:
            nodes[nid] = NoisyNode(nid, int(nd["q"]), nd["gamma"], nd["pos_child"], nd["neg_child"])
    return NoisyDecisionTree(int(doc["n"]), nodes, int(doc["root"]), doc.get("cost"))
