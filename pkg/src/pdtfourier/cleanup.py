"""Rewrite a parity decision tree into a k-clean one, and check cleanness."""

from __future__ import annotations

from dataclasses import dataclass, field

from .gf2 import (
    AffineCoset,
    WitnessRule,
    clean_subspace,
    coords,
    is_k_clean,
    mess_witnesses,
)
from .pdt import ParityDecisionTree, ValidationReport, tree_from_nested, validate

CLEAN = "clean"
CLEANING = "cleaning"
MESSY = "messy"  # neither clean nor a valid cleaning node


@dataclass(frozen=True, eq=False)
class CleanTree:
    tree: ParityDecisionTree
    k: int
    node_flags: dict[int, str]
    clean_ancestor: dict[int, int]
    block_len: dict[int, int]

    @classmethod
    def from_tree(cls, tree: ParityDecisionTree, k: int) -> "CleanTree":
        """Tag each node by the definitions and derive C(v) and block lengths."""
        ctx = tree.contexts
        flags: dict[int, str] = {}
        for nid, node in tree.nodes.items():
            sub = ctx[nid].subspace
            if is_k_clean(sub, k).clean:
                flags[nid] = CLEAN
            elif (not node.is_leaf and node.query.bit_count() == 1
                  and node.query & mess_witnesses(sub, k)):
                flags[nid] = CLEANING
            else:
                flags[nid] = MESSY
        ancestor: dict[int, int] = {}
        for nid in tree.preorder():
            if flags[nid] == CLEAN:
                ancestor[nid] = nid
            else:
                parent = ctx[nid].parent
                ancestor[nid] = ancestor[parent] if parent is not None else nid
        blocks = {}
        for nid, node in tree.nodes.items():
            if flags[nid] == CLEAN and not node.is_leaf:
                blocks[nid] = _first_clean_level(tree, flags, nid)
        return cls(tree, k, flags, ancestor, blocks)

    def to_json(self) -> str:
        from .pdt import to_json

        return to_json(self.tree, {"k": self.k,
                                   "flags": [self.node_flags[i] for i in sorted(self.tree.nodes)]})


def _levels(tree: ParityDecisionTree, nid: int):
    """Yield the node lists at relative depths 1, 2, ... below ``nid``."""
    level = [nid]
    while True:
        nxt = []
        for u in level:
            node = tree.nodes[u]
            if not node.is_leaf:
                nxt += [node.pos, node.neg]
        if not nxt:
            return
        yield nxt
        level = nxt


def _first_clean_level(tree, flags, nid) -> int:
    for depth, level in enumerate(_levels(tree, nid), start=1):
        if any(flags[u] == CLEAN for u in level):
            return depth
    return 0  # unreachable for valid trees: leaves below are always tagged


def cleanup_tree(
    tree: ParityDecisionTree, k: int, witness_rule: WitnessRule | None = None
) -> CleanTree:
    """Equivalent k-clean tree of depth at most depth(tree) * k.

    After each simulated original query, the batch that makes the span
    k-clean is queried as a non-adaptive block of singletons. Original
    queries already implied by the current span are skipped.
    """
    if k < 2:
        raise ValueError("cleanup needs k >= 2")
    report = validate(tree)
    if not report.ok:
        raise ValueError(f"invalid tree: {report.violations[0]}")

    def from_clean(u: int, coset: AffineCoset):
        node = tree.nodes[u]
        while not node.is_leaf:
            s = coset.sign(node.query)
            if s == 0:
                break
            node = tree.nodes[node.child(s)]
        if node.is_leaf:
            return node.label
        sub, _ = coset.subspace.insert(node.query)
        _, batch = clean_subspace(sub, k, witness_rule)
        return (node.query,
                block(node.pos, coset.insert(node.query, 1), batch),
                block(node.neg, coset.insert(node.query, -1), batch))

    def block(u: int, coset: AffineCoset, batch: list[int]):
        if not batch:
            return from_clean(u, coset)
        q = 1 << batch[0]
        rest = batch[1:]
        return (q, block(u, coset.insert(q, 1), rest), block(u, coset.insert(q, -1), rest))

    out = tree_from_nested(tree.n, from_clean(tree.root, AffineCoset.full(tree.n)))
    return CleanTree.from_tree(out, k)


@dataclass
class CleanReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def clean_nodes_on_path(ct: CleanTree, path: list[int]) -> int:
    """Number of k-clean internal nodes on a root-to-leaf path."""
    return sum(1 for u in path[:-1] if ct.node_flags[u] == CLEAN)


def verify_clean(ct: CleanTree, original_depth: int | None = None) -> CleanReport:
    """Check every clean-tree condition plus the per-path J accounting.

    Flags are re-derived from the definitions, so a stale or forged flag
    array is reported rather than trusted.
    """
    rep = CleanReport()
    base: ValidationReport = validate(ct.tree)
    rep.violations += base.violations
    if not base.ok:
        return rep
    tree, k = ct.tree, ct.k
    truth = CleanTree.from_tree(tree, k)
    for nid, node in tree.nodes.items():
        flag = truth.node_flags[nid]
        if ct.node_flags.get(nid) != flag:
            rep.violations.append(f"node {nid}: flag {ct.node_flags.get(nid)!r}, expected {flag!r}")
        if node.is_leaf and flag != CLEAN:
            rep.violations.append(f"leaf {nid}: subspace is not {k}-clean")
        elif flag == MESSY:
            rep.violations.append(
                f"node {nid}: not {k}-clean and query {coords(node.query)} is not a singleton mess-witness")
    for nid, ell in truth.block_len.items():
        for depth, level in enumerate(_levels(tree, nid), start=1):
            if depth > ell:
                break
            tags = {truth.node_flags[u] for u in level}
            if depth < ell:
                queries = {tree.nodes[u].query for u in level}
                if len(queries) != 1:
                    rep.violations.append(
                        f"clean node {nid}: block depth {depth} mixes {len(queries)} different queries")
                if tags != {CLEANING}:
                    rep.violations.append(f"clean node {nid}: block depth {depth} has non-cleaning nodes")
            elif tags != {CLEAN}:
                rep.violations.append(f"clean node {nid}: not every node at block end {depth} is clean")
    ctx = tree.contexts
    for path in tree.paths():
        js = [ctx[u].newly_fixed.bit_count() for u in path[:-1]]
        if sum(js) > len(js):
            rep.violations.append(f"path to {path[-1]}: sum |J| = {sum(js)} > length {len(js)}")
        c = clean_nodes_on_path(truth, path)
        heavy = sum(j for j in js if j > 1)
        if heavy > 2 * c:
            rep.violations.append(f"path to {path[-1]}: heavy J sum {heavy} > 2 * {c} clean nodes")
        if original_depth is not None:
            if c > original_depth:
                rep.violations.append(f"path to {path[-1]}: {c} clean nodes > depth {original_depth}")
            if heavy > 2 * original_depth:
                rep.violations.append(f"path to {path[-1]}: heavy J sum {heavy} > 2 * {original_depth}")
    return rep


def clean_ancestor_map(ct: CleanTree) -> dict[int, tuple[int, int]]:
    """Per node: (C(v), L(v)), with L(v) the coordinates fixed since C(v).

    Asserts that every node of a block level shares L and J, which is what
    lets later steps treat them as functions of C(v) alone.
    """
    ctx = ct.tree.contexts
    out: dict[int, tuple[int, int]] = {}
    for nid in ct.tree.preorder():
        c = ct.clean_ancestor[nid]
        if c == nid:
            out[nid] = (nid, 0)
        else:
            parent = ctx[nid].parent
            out[nid] = (c, out[parent][1] | ctx[parent].newly_fixed)
    for nid, ell in ct.block_len.items():
        for depth, level in enumerate(_levels(ct.tree, nid), start=1):
            if depth >= ell:
                break
            ls = {out[u][1] for u in level}
            js = {ctx[u].newly_fixed for u in level}
            assert len(ls) == 1 and len(js) == 1, f"block of {nid} differs at depth {depth}"
    return out

