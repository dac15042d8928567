"""Random walks down clean trees and the martingale X_T along them.

For a sign pattern a_S on level-ell sets and a set T,
X_T(v) = sum over S containing T, |S| = ell, of a_S * prod_{j in S \\ T} v_j,
where v is the partial assignment at node v. One step from a parent to a
child changes X_T by sum over non-empty J inside the newly fixed set (and
outside T) of x_J * X_{T+J}(parent); even |J| terms form Y and odd ones Z.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..cleanup import CleanTree
from ..fourier import Spectrum, spectrum_via_leaves
from ..gf2 import coords, mask
from ..pdt import ParityDecisionTree

Signs = dict[int, int]  # level-ell mask -> sign in {-1, 0, +1}


def sign_pattern(spec: Spectrum, ell: int) -> Signs:
    """a_S = sgn(fhat(S)) on the non-zero level-ell coefficients."""
    out = {}
    for s in np.flatnonzero(spec.num):
        s = int(s)
        if s.bit_count() == ell:
            out[s] = 1 if spec.num[s] > 0 else -1
    return out


def x_value(signs: Signs, t: int, fixed) -> int:
    """X_T at a node with partial assignment ``fixed``, from scratch."""
    total = 0
    for s, a in signs.items():
        if s & t != t or a == 0:
            continue
        prod = a
        rest = s & ~t
        while rest and prod:
            low = rest & -rest
            prod *= fixed[low.bit_length() - 1]
            rest ^= low
        total += prod
    return total


@dataclass(frozen=True)
class StepParts:
    delta: int
    y: int
    z: int


def step_decomposition(signs: Signs, t: int, parent_fixed, child_fixed, newly: int) -> StepParts:
    """Y and Z of one step, built from X_{T+J} at the parent and x_J at the child."""
    free = coords(newly & ~t)
    y = z = 0
    for size in range(1, len(free) + 1):
        for js in itertools.combinations(free, size):
            xj = math.prod(child_fixed[j] for j in js)
            term = xj * x_value(signs, t | mask(js), parent_fixed)
            if size % 2:
                z += term
            else:
                y += term
    delta = x_value(signs, t, child_fixed) - x_value(signs, t, parent_fixed)
    return StepParts(delta, y, z)


@dataclass
class WalkTrace:
    path: list[int]
    t: int
    x: list[int]  # X_T at v_0 .. v_D (padded)
    y: list[int] = field(default_factory=list)
    z: list[int] = field(default_factory=list)
    signs: Signs = field(default_factory=dict)

    def telescopes(self) -> bool:
        return self.x[-1] - self.x[0] == sum(b - a for a, b in zip(self.x, self.x[1:]))

    def reconciles(self) -> bool:
        return all(b - a == y + z for a, b, y, z in zip(self.x, self.x[1:], self.y, self.z))


def _check_level(ct: CleanTree, ell: int, t: int, signs: Signs) -> None:
    if not 0 <= ell <= ct.k:
        raise ValueError(f"level {ell} must lie in [0, k={ct.k}]")
    if t.bit_count() > ell:
        raise ValueError("|T| must not exceed ell")
    if any(s.bit_count() != ell for s, a in signs.items() if a):
        raise ValueError("sign pattern must be supported on level-ell sets")


def walk_trace(
    ct: CleanTree, ell: int, t: int, signs: Signs,
    rng: np.random.Generator, pad_to: int | None = None,
) -> WalkTrace:
    """One uniformly random root-to-leaf walk with per-step X, Y, Z."""
    _check_level(ct, ell, t, signs)
    tree = ct.tree
    ctx = tree.contexts
    path = [tree.root]
    while not tree.nodes[path[-1]].is_leaf:
        node = tree.nodes[path[-1]]
        path.append(node.pos if rng.random() < 0.5 else node.neg)
    tr = WalkTrace(path, t, [x_value(signs, t, ctx[path[0]].fixed)], signs=signs)
    for parent, child in zip(path, path[1:]):
        parts = step_decomposition(signs, t, ctx[parent].fixed, ctx[child].fixed,
                                   ctx[parent].newly_fixed)
        tr.x.append(x_value(signs, t, ctx[child].fixed))
        tr.y.append(parts.y)
        tr.z.append(parts.z)
    for _ in range(len(path) - 1, pad_to or 0):
        tr.path.append(path[-1])
        tr.x.append(tr.x[-1])
        tr.y.append(0)
        tr.z.append(0)
    return tr


@dataclass
class BranchReport:
    steps: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def branch_exhaustive_check(ct: CleanTree, ell: int, t: int, signs: Signs) -> BranchReport:
    """At every internal node compare both children's step parts.

    Checks: increment = Y + Z, the two Z values cancel (each child has
    probability 1/2), and the two Y values agree. On trees of singleton
    queries Y must vanish.
    """
    _check_level(ct, ell, t, signs)
    tree = ct.tree
    ctx = tree.contexts
    singleton_tree = all(n.is_leaf or n.query.bit_count() == 1 for n in tree.nodes.values())
    rep = BranchReport()
    for nid, node in tree.nodes.items():
        if node.is_leaf:
            continue
        c = ctx[nid]
        parts = [step_decomposition(signs, t, c.fixed, ctx[ch].fixed, c.newly_fixed)
                 for ch in (node.pos, node.neg)]
        rep.steps += 1
        for p in parts:
            if p.delta != p.y + p.z:
                rep.violations.append(f"node {nid}: increment {p.delta} != Y + Z = {p.y + p.z}")
        if parts[0].z + parts[1].z != 0:
            rep.violations.append(f"node {nid}: Z has conditional mean {Fraction(parts[0].z + parts[1].z, 2)}")
        if parts[0].y != parts[1].y:
            rep.violations.append(f"node {nid}: Y differs across siblings ({parts[0].y} vs {parts[1].y})")
        if singleton_tree and any(p.y for p in parts):
            rep.violations.append(f"node {nid}: Y is non-zero in a singleton-query tree")
    return rep


def level1_prefix_check(tree: ParityDecisionTree, signs: Signs) -> list[str]:
    """|sum_j a_j v_j| <= depth at every node, for level-1 signs a_j."""
    bad = []
    for nid, c in tree.contexts.items():
        val = sum(a * c.fixed[coords(s)[0]] for s, a in signs.items())
        if abs(val) > c.depth:
            bad.append(f"node {nid}: |sum a_j v_j| = {abs(val)} > depth {c.depth}")
    return bad


@dataclass(frozen=True)
class WalkEstimate:
    value: Fraction | float
    stderr: float = 0.0
    trials: int = 0


def _leaf_value(tree: ParityDecisionTree, nid: int, signs: Signs) -> int:
    node = tree.nodes[nid]
    if node.label == 0:
        return 0
    return x_value(signs, 0, tree.contexts[nid].fixed)


def level_mass_via_walks(
    ct: CleanTree, ell: int, trials: int | None = None, seed: int | None = None,
    signs: Signs | None = None,
) -> WalkEstimate:
    """E[T(leaf) * sum_S a_S v_S(leaf)] over a uniform walk.

    With ``trials=None`` the expectation is an exact sum over leaves; it
    equals the level-ell mass when a_S = sgn(That(S)) and ell <= k.
    """
    if not 0 <= ell <= ct.k:
        raise ValueError(f"level {ell} exceeds k={ct.k}: leaves need not be {ell}-clean")
    tree = ct.tree
    if signs is None:
        signs = sign_pattern(spectrum_via_leaves(tree), ell) if ell else {0: 1}
    leaves = tree.leaves()
    ctx = tree.contexts
    if trials is None:
        total = sum(Fraction(_leaf_value(tree, v, signs), 1 << ctx[v].depth) for v in leaves)
        return WalkEstimate(total)
    if seed is None:
        raise ValueError("Monte-Carlo estimate needs a seed")
    rng = np.random.default_rng(seed)
    probs = np.array([2.0 ** -ctx[v].depth for v in leaves])
    vals = np.array([_leaf_value(tree, v, signs) for v in leaves], dtype=float)
    draws = vals[rng.choice(len(leaves), size=trials, p=probs / probs.sum())]
    return WalkEstimate(float(draws.mean()), float(draws.std(ddof=1) / math.sqrt(trials)), trials)
