"""Bit-packed GF(2) linear algebra.

Vectors are plain ``int`` masks: bit ``i`` set means coordinate ``i`` is in
the set. Subspaces keep their basis in reduced row-echelon form where the
pivot of a row is its lowest set bit, so two subspaces are equal iff their
bases are equal tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Callable, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

MAX_DIM = 64
FULL_ENUM_RANK = 20
WEIGHT_COUNT_MAX_RANK = 24


def mask(coords: Iterable[int]) -> int:
    m = 0
    for c in coords:
        m |= 1 << int(c)
    return m


def coords(m: int) -> list[int]:
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


def weight(m: int) -> int:
    return m.bit_count()


def check_vector(n: int, vec: int) -> None:
    if vec < 0 or vec >> n:
        raise ValueError(f"vector {vec:#x} has coordinates outside [0, {n})")


def _pivot(row: int) -> int:
    return row & -row


@dataclass(frozen=True)
class F2Subspace:
    """Row space of ``basis`` inside GF(2)^n, stored canonically."""

    n: int
    basis: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.n <= MAX_DIM:
            raise ValueError(f"ambient dimension {self.n} outside [0, {MAX_DIM}]")

    @classmethod
    def span(cls, n: int, vectors: Iterable[int]) -> "F2Subspace":
        sub = cls(n)
        for v in vectors:
            sub, _ = sub.insert(v)
        return sub

    @property
    def rank(self) -> int:
        return len(self.basis)

    def reduce(self, vec: int) -> int:
        for row in self.basis:
            if vec & _pivot(row):
                vec ^= row
        return vec

    def __contains__(self, vec: int) -> bool:
        return contains(self, vec)

    def insert(self, vec: int) -> tuple["F2Subspace", bool]:
        return insert(self, vec)

    def members(self) -> Iterator[int]:
        """All 2^rank members, in Gray-code order starting from 0."""
        cur = 0
        yield cur
        for i in range(1, 1 << self.rank):
            cur ^= self.basis[(i & -i).bit_length() - 1]
            yield cur

    def member_array(self) -> np.ndarray:
        out = np.zeros(1, dtype=np.uint64)
        for row in self.basis:
            out = np.concatenate([out, out ^ np.uint64(row)])
        return out

    def singleton_mask(self) -> int:
        return fixed_coordinates(self)

    def to_lists(self) -> list[list[int]]:
        return [coords(r) for r in self.basis]


def insert(subspace: F2Subspace, vec: int) -> tuple[F2Subspace, bool]:
    """Span of ``subspace`` plus ``vec``; the flag says whether the rank grew."""
    check_vector(subspace.n, vec)
    r = subspace.reduce(vec)
    if r == 0:
        return subspace, False
    p = _pivot(r)
    rows = [row ^ r if row & p else row for row in subspace.basis]
    rows.append(r)
    rows.sort(key=_pivot)
    return F2Subspace(subspace.n, tuple(rows)), True


def contains(subspace: F2Subspace, vec: int) -> bool:
    check_vector(subspace.n, vec)
    return subspace.reduce(vec) == 0


def fixed_coordinates(subspace: F2Subspace) -> int:
    """Mask of the coordinates ``i`` with ``{i}`` in the span.

    In reduced echelon form a singleton is a member iff it is a basis row.
    """
    m = 0
    for row in subspace.basis:
        if row & (row - 1) == 0:
            m |= row
    return m


def _free_rows(subspace: F2Subspace) -> list[int]:
    # Non-singleton rows carry no fixed coordinate (their pivot columns are
    # cleared elsewhere), so their span is exactly {S \ fixed : S in span}.
    return [row for row in subspace.basis if row & (row - 1)]


def _low_weight_members(rows: Sequence[int], k: int) -> Iterator[int]:
    """Non-zero members of span(rows) with weight <= k."""
    if len(rows) <= FULL_ENUM_RANK:
        cur = 0
        for i in range(1, 1 << len(rows)):
            cur ^= rows[(i & -i).bit_length() - 1]
            if cur.bit_count() <= k:
                yield cur
        return
    # A combination of m echelon rows has weight >= m.
    for m in range(1, k + 1):
        for combo in itertools.combinations(rows, m):
            v = 0
            for row in combo:
                v ^= row
            if v.bit_count() <= k:
                yield v


def _lex_key(m: int) -> tuple[int, tuple[int, ...]]:
    return m.bit_count(), tuple(coords(m))


class CleanCheck(NamedTuple):
    clean: bool
    witness: int | None
    violating_set: int | None


def minimal_violating_set(subspace: F2Subspace, k: int) -> int | None:
    """Lightest member of weight <= k holding a non-fixed coordinate.

    Such a member never contains a fixed coordinate, since removing those keeps
    it in the span. Ties go to the lexicographically smallest coordinate list.
    """
    best = None
    for m in _low_weight_members(_free_rows(subspace), k):
        if best is None or _lex_key(m) < _lex_key(best):
            best = m
    return best


def mess_witnesses(subspace: F2Subspace, k: int) -> int:
    out = 0
    for m in _low_weight_members(_free_rows(subspace), k):
        out |= m
    return out


def is_k_clean(subspace: F2Subspace, k: int) -> CleanCheck:
    if k < 1:
        raise ValueError("k must be >= 1")
    s = minimal_violating_set(subspace, k)
    if s is None:
        return CleanCheck(True, None, None)
    return CleanCheck(False, coords(s)[0], s)


# Witness rules map (subspace, k) to an ordered batch of coordinates to add.
WitnessRule = Callable[[F2Subspace, int], list[int]]


def minimal_set_rule(subspace: F2Subspace, k: int) -> list[int]:
    """Take the minimal violating set {i1<...<is} and add all but i_s."""
    s = minimal_violating_set(subspace, k)
    return coords(s)[:-1]


def lowest_witness_rule(subspace: F2Subspace, k: int) -> list[int]:
    return [coords(mess_witnesses(subspace, k))[0]]


def highest_witness_rule(subspace: F2Subspace, k: int) -> list[int]:
    return [coords(mess_witnesses(subspace, k))[-1]]


def random_witness_rule(seed: int) -> WitnessRule:
    rng = np.random.default_rng(seed)

    def rule(subspace: F2Subspace, k: int) -> list[int]:
        w = coords(mess_witnesses(subspace, k))
        return [w[int(rng.integers(len(w)))]]

    return rule


def clean_subspace(
    subspace: F2Subspace, k: int, witness_rule: WitnessRule | None = None
) -> tuple[F2Subspace, list[int]]:
    """Add singleton mess-witnesses until the subspace is k-clean.

    Returns the cleaned subspace and the coordinates added, in order.
    """
    if k < 2:
        raise ValueError("cleanup needs k >= 2")
    rule = witness_rule or minimal_set_rule
    added: list[int] = []
    cur = subspace
    while not is_k_clean(cur, k).clean:
        batch = rule(cur, k)
        if not batch:
            raise RuntimeError("witness rule returned an empty batch")
        for i in batch:
            cur, grew = cur.insert(1 << i)
            if not grew:
                raise RuntimeError(f"witness {i} was already fixed")
            added.append(i)
    assert cur.rank <= subspace.rank * k
    return cur, added


def weight_members(subspace: F2Subspace, ell: int) -> int:
    """Number of span members of weight exactly ``ell`` (the empty set excluded)."""
    d = subspace.rank
    if d > WEIGHT_COUNT_MAX_RANK:
        raise ValueError(f"rank {d} exceeds enumeration guard {WEIGHT_COUNT_MAX_RANK}")
    if ell <= 0:
        return 0
    w = np.bitwise_count(subspace.member_array())
    count = int(np.count_nonzero(w == ell))
    assert count <= min(comb(d * ell, ell), 2**d - 1)
    return count


def dual(subspace: F2Subspace) -> F2Subspace:
    """Orthogonal complement under the dot product mod 2."""
    n = subspace.n
    pivots = {_pivot(r).bit_length() - 1: r for r in subspace.basis}
    out = []
    for j in range(n):
        if j in pivots:
            continue
        # x_j = 1 on a free column forces x_p = row_p[j] on each pivot column p.
        v = 1 << j
        for p, row in pivots.items():
            if row >> j & 1:
                v |= 1 << p
        out.append(v)
    return F2Subspace.span(n, out)


def min_weight(subspace: F2Subspace) -> int | None:
    """Smallest weight of a non-zero member, or None for the zero space."""
    if subspace.rank == 0:
        return None
    if subspace.rank <= FULL_ENUM_RANK:
        return int(np.bitwise_count(subspace.member_array()[1:]).min())
    for k in range(1, subspace.n + 1):
        if next(_low_weight_members(list(subspace.basis), k), None) is not None:
            return k
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class AffineCoset:
    """Points x in {±1}^n with chi_Q(x) = sign for each basis row Q.

    Points use the F2 view: bit i of a point mask is set iff x_i = -1.
    """

    subspace: F2Subspace
    signs: tuple[int, ...] = ()

    @classmethod
    def full(cls, n: int) -> "AffineCoset":
        return cls(F2Subspace(n))

    @property
    def n(self) -> int:
        return self.subspace.n

    @property
    def rank(self) -> int:
        return self.subspace.rank

    @property
    def size(self) -> int:
        return 1 << (self.n - self.rank)

    def _reduce(self, vec: int) -> tuple[int, int]:
        s = 1
        for row, sg in zip(self.subspace.basis, self.signs):
            if vec & _pivot(row):
                vec ^= row
                s *= sg
        return vec, s

    def sign(self, vec: int) -> int:
        """E[x_S] over the coset: ±1 if S is in the span, else 0."""
        check_vector(self.n, vec)
        r, s = self._reduce(vec)
        return s if r == 0 else 0

    def insert(self, vec: int, value: int) -> "AffineCoset":
        """Restrict to points with chi_vec(x) = value."""
        check_vector(self.n, vec)
        if value not in (1, -1):
            raise ValueError("parity value must be +1 or -1")
        r, s = self._reduce(vec)
        s *= value
        if r == 0:
            if s != 1:
                raise ValueError("constraint contradicts the coset (empty set)")
            return self
        p = _pivot(r)
        pairs = []
        for row, sg in zip(self.subspace.basis, self.signs):
            if row & p:
                pairs.append((row ^ r, sg * s))
            else:
                pairs.append((row, sg))
        pairs.append((r, s))
        pairs.sort(key=lambda t: _pivot(t[0]))
        return AffineCoset(
            F2Subspace(self.n, tuple(t[0] for t in pairs)), tuple(t[1] for t in pairs)
        )

    def signed_members(self) -> Iterator[tuple[int, int]]:
        """Each span member with the value chi takes on the coset."""
        basis, signs = self.subspace.basis, self.signs
        cur, s = 0, 1
        yield cur, s
        for i in range(1, 1 << len(basis)):
            j = (i & -i).bit_length() - 1
            cur ^= basis[j]
            s *= signs[j]
            yield cur, s

    def signed_member_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Span members (as int64 indices) and their signs, built by doubling."""
        members = np.zeros(1, dtype=np.int64)
        signs = np.ones(1, dtype=np.int64)
        for row, sg in zip(self.subspace.basis, self.signs):
            members = np.concatenate([members, members ^ row])
            signs = np.concatenate([signs, signs * sg])
        return members, signs

    def contains_point(self, point: int) -> bool:
        for row, sg in zip(self.subspace.basis, self.signs):
            if (-1) ** ((row & point).bit_count() & 1) != sg:
                return False
        return True

    def points(self) -> list[int]:
        """Brute-force enumeration; for small n only."""
        return [b for b in range(1 << self.n) if self.contains_point(b)]

    def fixed_values(self) -> tuple[int, ...]:
        """Per-coordinate E[x_j]: the partial assignment in {-1, 0, +1}^n."""
        out = [0] * self.n
        for row, sg in zip(self.subspace.basis, self.signs):
            if row & (row - 1) == 0:
                out[row.bit_length() - 1] = sg
        return tuple(out)
