"""Parity decision trees: model, contexts, evaluation, generators, JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .gf2 import AffineCoset, F2Subspace, check_vector, coords, fixed_coordinates, mask

EXHAUSTIVE_MAX_N = 20
QUERY_POLICIES = ("singleton", "uniform", "small")
SMALL_SUPPORT = 3
MAX_QUERY_TRIES = 1000


@dataclass(frozen=True)
class Node:
    id: int
    query: int | None = None
    pos: int | None = None
    neg: int | None = None
    label: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.query is None

    def child(self, value: int) -> int:
        return self.pos if value == 1 else self.neg


@dataclass(frozen=True)
class NodeContext:
    depth: int
    parent: int | None
    coset: AffineCoset
    fixed: tuple[int, ...]
    newly_fixed: int = 0

    @property
    def subspace(self) -> F2Subspace:
        return self.coset.subspace


@dataclass(frozen=True, eq=False)
class ParityDecisionTree:
    n: int
    nodes: dict[int, Node]
    root: int = 0

    @cached_property
    def contexts(self) -> dict[int, NodeContext]:
        """Per-node S_v, P_v, partial assignment and J(v); needs a valid tree."""
        out: dict[int, NodeContext] = {}
        root_coset = AffineCoset.full(self.n)
        stack = [(self.root, None, root_coset, 0)]
        while stack:
            nid, parent, coset, depth = stack.pop()
            if nid in out or nid not in self.nodes:
                raise ValueError("malformed tree: run validate() for details")
            node = self.nodes[nid]
            fixed = coset.fixed_values()
            if node.is_leaf:
                out[nid] = NodeContext(depth, parent, coset, fixed)
                continue
            if coset.sign(node.query) != 0:
                raise ValueError(f"malformed tree: node {nid} repeats an implied query")
            pos = coset.insert(node.query, 1)
            newly = fixed_coordinates(pos.subspace) & ~fixed_coordinates(coset.subspace)
            out[nid] = NodeContext(depth, parent, coset, fixed, newly)
            stack.append((node.neg, nid, coset.insert(node.query, -1), depth + 1))
            stack.append((node.pos, nid, pos, depth + 1))
        return out

    @property
    def depth(self) -> int:
        return max(c.depth for c in self.contexts.values())

    @property
    def size(self) -> int:
        """Number of leaves."""
        return sum(1 for n in self.nodes.values() if n.is_leaf)

    def leaves(self) -> list[int]:
        return [i for i, n in self.nodes.items() if n.is_leaf]

    def preorder(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            nid = stack.pop()
            out.append(nid)
            node = self.nodes[nid]
            if not node.is_leaf:
                stack.append(node.neg)
                stack.append(node.pos)
        return out

    def paths(self) -> list[list[int]]:
        """Every root-to-leaf path as a list of node ids."""
        out = []
        stack = [[self.root]]
        while stack:
            path = stack.pop()
            node = self.nodes[path[-1]]
            if node.is_leaf:
                out.append(path)
            else:
                stack.append(path + [node.neg])
                stack.append(path + [node.pos])
        return out

    def truth_table(self) -> np.ndarray:
        """Labels indexed by point mask (bit i set iff x_i = -1)."""
        if self.n > EXHAUSTIVE_MAX_N:
            raise ValueError(f"n={self.n} exceeds exhaustive guard {EXHAUSTIVE_MAX_N}")
        table = np.zeros(1 << self.n, dtype=np.int64)
        stack = [(self.root, np.arange(1 << self.n, dtype=np.uint64))]
        while stack:
            nid, pts = stack.pop()
            node = self.nodes[nid]
            if node.is_leaf:
                table[pts] = node.label
                continue
            odd = np.bitwise_count(pts & np.uint64(node.query)) & 1
            stack.append((node.pos, pts[odd == 0]))
            stack.append((node.neg, pts[odd == 1]))
        return table


def point_to_mask(x: Sequence[int]) -> int:
    m = 0
    for i, xi in enumerate(x):
        if xi == -1:
            m |= 1 << i
        elif xi != 1:
            raise ValueError("points must have ±1 entries")
    return m


def parity_value(query: int, point: int) -> int:
    return -1 if (query & point).bit_count() & 1 else 1


def evaluate(tree: ParityDecisionTree, x: Sequence[int] | int) -> tuple[int, list[int]]:
    """Label reached by ``x`` and the node-id path taken."""
    if isinstance(x, (int, np.integer)):
        point = int(x)
        check_vector(tree.n, point)
    else:
        if len(x) != tree.n:
            raise ValueError(f"point has dimension {len(x)}, tree has n={tree.n}")
        point = point_to_mask(x)
    path = [tree.root]
    node = tree.nodes[tree.root]
    while not node.is_leaf:
        nid = node.child(parity_value(node.query, point))
        if nid not in tree.nodes:
            raise ValueError(f"malformed tree: missing child {nid}")
        path.append(nid)
        if len(path) > len(tree.nodes):
            raise ValueError("malformed tree: cycle")
        node = tree.nodes[nid]
    return node.label, path


def node_context(tree: ParityDecisionTree, node: int) -> NodeContext:
    if node not in tree.nodes:
        raise KeyError(f"unknown node id {node}")
    return tree.contexts[node]


def correlation(context: NodeContext, s: int) -> int:
    return context.coset.sign(s)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    path_j_sums: list[tuple[int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(tree: ParityDecisionTree) -> ValidationReport:
    """Structure, non-redundant queries, and sum |J| <= path length per path."""
    rep = ValidationReport()
    if tree.root not in tree.nodes:
        rep.violations.append(f"root {tree.root} missing")
        return rep
    seen: set[int] = set()
    full = (1 << tree.n) - 1
    # (node, subspace, J-sum so far, depth)
    stack = [(tree.root, F2Subspace(tree.n), 0, 0)]
    while stack:
        nid, sub, jsum, depth = stack.pop()
        if nid not in tree.nodes:
            rep.violations.append(f"missing node {nid}")
            continue
        if nid in seen:
            rep.violations.append(f"node {nid} reached twice")
            continue
        seen.add(nid)
        node = tree.nodes[nid]
        if node.is_leaf:
            if node.label not in (0, 1):
                rep.violations.append(f"leaf {nid} has label {node.label!r}")
            if jsum > depth:
                rep.violations.append(f"path to leaf {nid}: sum |J| = {jsum} > {depth}")
            rep.path_j_sums.append((jsum, depth))
            continue
        if node.label is not None:
            rep.violations.append(f"internal node {nid} also carries a label")
        if node.query == 0 or node.query & ~full:
            rep.violations.append(f"node {nid} has query outside non-empty subsets of [n]")
            continue
        if node.pos is None or node.neg is None:
            rep.violations.append(f"internal node {nid} lacks a child")
            continue
        new, grew = sub.insert(node.query)
        if not grew:
            rep.violations.append(f"node {nid}: redundant query {coords(node.query)}")
        j = (fixed_coordinates(new) & ~fixed_coordinates(sub)).bit_count()
        for child in (node.neg, node.pos):
            stack.append((child, new, jsum + j, depth + 1))
    for nid in tree.nodes:
        if nid not in seen:
            rep.violations.append(f"node {nid} unreachable from root")
    return rep


# Nested form used by builders: a leaf is 0/1, an internal node is
# (query_coords, pos_subtree, neg_subtree).
def tree_from_nested(n: int, nested: Any) -> ParityDecisionTree:
    nodes: dict[int, Node] = {}

    def walk(sub) -> int:
        nid = len(nodes)
        if isinstance(sub, (int, np.integer)):
            nodes[nid] = Node(nid, label=int(sub))
            return nid
        q, pos, neg = sub
        nodes[nid] = None  # reserve id in preorder
        p = walk(pos)
        m = walk(neg)
        qmask = q if isinstance(q, int) else mask(q)
        nodes[nid] = Node(nid, query=qmask, pos=p, neg=m)
        return nid

    walk(nested)
    return ParityDecisionTree(n, nodes, 0)


def to_nested(tree: ParityDecisionTree, nid: int | None = None) -> Any:
    nid = tree.root if nid is None else nid
    node = tree.nodes[nid]
    if node.is_leaf:
        return node.label
    return (coords(node.query), to_nested(tree, node.pos), to_nested(tree, node.neg))


def _sample_query(sub: F2Subspace, policy: str, rng: np.random.Generator) -> int:
    n = sub.n
    for _ in range(MAX_QUERY_TRIES):
        if policy == "singleton":
            free = [i for i in range(n) if not sub.reduce(1 << i) == 0]
            q = 1 << free[int(rng.integers(len(free)))]
        elif policy == "uniform":
            q = int(rng.integers(1, 1 << n))
        elif policy == "small":
            w = int(rng.integers(1, min(SMALL_SUPPORT, n) + 1))
            q = mask(int(c) for c in rng.choice(n, size=w, replace=False))
        else:
            raise ValueError(f"unknown query policy {policy!r}; use one of {QUERY_POLICIES}")
        if sub.reduce(q) != 0:
            return q
    raise RuntimeError(f"no non-redundant query found after {MAX_QUERY_TRIES} tries")


def random_pdt(
    n: int, depth: int, policy: str = "uniform", seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> ParityDecisionTree:
    """Full-depth random tree with uniformly random 0/1 leaf labels."""
    if depth > n:
        raise ValueError(f"depth {depth} exceeds rank budget n={n}")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if policy not in QUERY_POLICIES:
        raise ValueError(f"unknown query policy {policy!r}; use one of {QUERY_POLICIES}")
    if rng is None:
        if seed is None:
            raise ValueError("random_pdt needs a seed or a generator")
        rng = np.random.default_rng(seed)

    def grow(sub: F2Subspace, left: int):
        if left == 0:
            return int(rng.integers(2))
        q = _sample_query(sub, policy, rng)
        new, _ = sub.insert(q)
        return (q, grow(new, left - 1), grow(new, left - 1))

    return tree_from_nested(n, grow(F2Subspace(n), depth))


def truncate_depth(tree: ParityDecisionTree, d: int) -> ParityDecisionTree:
    """Replace every node at depth d by a 0-leaf."""
    if d < 0:
        raise ValueError("truncation depth must be >= 0")

    def cut(nid: int, depth: int):
        node = tree.nodes[nid]
        if node.is_leaf:
            return node.label
        if depth >= d:
            return 0
        return (node.query, cut(node.pos, depth + 1), cut(node.neg, depth + 1))

    return tree_from_nested(tree.n, cut(tree.root, 0))


def nodes_at_depth(tree: ParityDecisionTree, d: int) -> int:
    return sum(1 for c in tree.contexts.values() if c.depth == d)


def equivalent(t1: ParityDecisionTree, t2: ParityDecisionTree) -> bool:
    if t1.n != t2.n:
        raise ValueError("trees have different n")
    return bool(np.array_equal(t1.truth_table(), t2.truth_table()))


def to_json(tree: ParityDecisionTree, extra: dict | None = None) -> str:
    nodes = []
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        if node.is_leaf:
            nodes.append({"id": nid, "leaf": node.label})
        else:
            nodes.append({"id": nid, "query": coords(node.query),
                          "pos_child": node.pos, "neg_child": node.neg})
    doc = {"n": tree.n, "root": tree.root, "nodes": nodes}
    if extra:
        doc.update(extra)
    return dump_doc(doc)


def dump_doc(doc: dict) -> str:
    # One node per line keeps files diffable and the round trip byte-exact.
    head = {k: v for k, v in doc.items() if k != "nodes"}
    lines = ["{"]
    for k, v in head.items():
        lines.append(f"  {json.dumps(k)}: {json.dumps(v)},")
    lines.append('  "nodes": [')
    body = [f"    {json.dumps(nd)}" for nd in doc["nodes"]]
    lines.append(",\n".join(body))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_doc(doc: dict) -> ParityDecisionTree:
    n = int(doc["n"])
    nodes = {}
    for nd in doc["nodes"]:
        nid = int(nd["id"])
        if nid in nodes:
            raise ValueError(f"duplicate node id {nid}")
        if "leaf" in nd:
            nodes[nid] = Node(nid, label=nd["leaf"])
        else:
            q = mask(nd["query"])
            check_vector(n, q)
            nodes[nid] = Node(nid, query=q, pos=nd["pos_child"], neg=nd["neg_child"])
    return ParityDecisionTree(n, nodes, int(doc["root"]))


def from_json(text: str) -> ParityDecisionTree:
    return parse_doc(json.loads(text))
