"""Testers for the four locality notions, disjoint-swap machinery on
strings, and query arity reduction.

All testers take the query as an already-evaluated relation (a set of
tuples); formula evaluation lives in `logic`.  Violation lists are returned
in lexicographic anchor order, capped, with the total count preserved, and
every returned witness is re-verified directly before being reported.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

from .structures import (
    AnchoredNeighborhood,
    Structure,
    canonical_form,
    isomorphic,
    neighborhood,
)
from .logic import Embedding, Formula, eval_formula
from .generators import gen_string_structure

DEFAULT_CAP = 16

Anchor = tuple[int, ...]


@dataclass(frozen=True)
class LocalityReport:
    notion: str
    radius: int
    violations: tuple
    total: int
    t: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.total == 0


def _infer_k(q: Iterable[tuple], k: Optional[int]) -> int:
    if k is not None:
        return k
    for tup in q:
        return len(tup)
    raise ValueError("cannot infer arity from an empty query; pass k explicitly")


def _anchor_classes(s: Structure, r: int, k: int):
    """Group all k-tuples by the canonical form of their anchored
    r-neighborhood; also return each tuple's ball."""
    if k < 1:
        raise ValueError(
            "anchored locality notions need arity k >= 1; use hanf_equivalent for sentences"
        )
    classes: dict[bytes, list[Anchor]] = {}
    balls: dict[Anchor, frozenset[int]] = {}
    nbhds: dict[Anchor, AnchoredNeighborhood] = {}
    for a in itertools.product(range(s.size), repeat=k):
        nb = neighborhood(s, a, r)
        nbhds[a] = nb
        balls[a] = frozenset(nb.index_map)
        classes.setdefault(canonical_form(nb), []).append(a)
    return classes, balls, nbhds


def gaifman_violations(
    q: Iterable[Anchor], s: Structure, r: int, k: Optional[int] = None, cap: int = DEFAULT_CAP
) -> LocalityReport:
    """Pairs with isomorphic anchored r-neighborhoods but differing query
    membership.  One witness pair per violating neighborhood class: the
    lexicographically least member and least non-member."""
    q = frozenset(q)
    k = _infer_k(q, k)
    classes, _, nbhds = _anchor_classes(s, r, k)
    found = []
    for key in sorted(classes):
        members = classes[key]
        ins = sorted(a for a in members if a in q)
        outs = sorted(a for a in members if a not in q)
        if ins and outs:
            pair = (ins[0], outs[0])
            assert isomorphic(nbhds[pair[0]], nbhds[pair[1]])
            assert (pair[0] in q) and (pair[1] not in q)
            found.append(pair)
    found.sort()
    return LocalityReport("gaifman", r, tuple(found[:cap]), len(found))


def weak_gaifman_violations(
    q: Iterable[Anchor], s: Structure, r: int, k: Optional[int] = None, cap: int = DEFAULT_CAP
) -> LocalityReport:
    """Gaifman violations restricted to pairs whose r-neighborhoods are
    disjoint; per violating class the lexicographically least such pair."""
    q = frozenset(q)
    k = _infer_k(q, k)
    classes, balls, nbhds = _anchor_classes(s, r, k)
    found = []
    for key in sorted(classes):
        members = classes[key]
        ins = sorted(a for a in members if a in q)
        outs = sorted(a for a in members if a not in q)
        pair = next(
            (
                (a, b)
                for a in ins
                for b in outs
                if not (balls[a] & balls[b])
            ),
            None,
        )
        if pair is not None:
            assert isomorphic(nbhds[pair[0]], nbhds[pair[1]])
            assert not (balls[pair[0]] & balls[pair[1]])
            assert (pair[0] in q) and (pair[1] not in q)
            found.append(pair)
    found.sort()
    return LocalityReport("weak_gaifman", r, tuple(found[:cap]), len(found))


def shift_violations(
    q: Iterable[tuple],
    s: Structure,
    r: int,
    t: int,
    k: int,
    cap: int = DEFAULT_CAP,
) -> LocalityReport:
    """Families (a_0..a_{t-1}) of k-tuples with pairwise isomorphic and
    disjoint r-neighborhoods whose membership changes under rotation by one."""
    if t < 2:
        raise ValueError("shift locality needs t >= 2")
    q = frozenset(q)
    classes, balls, nbhds = _anchor_classes(s, r, k)
    found = []
    for key in sorted(classes):
        members = sorted(classes[key])
        for combo in itertools.combinations(members, t):
            if any(
                balls[a] & balls[b] for a, b in itertools.combinations(combo, 2)
            ):
                continue
            for family in itertools.permutations(combo):
                flat = tuple(e for a in family for e in a)
                rotated = tuple(e for a in family[1:] + family[:1] for e in a)
                if (flat in q) != (rotated in q):
                    found.append(family)
    found.sort()
    for family in found[:cap]:
        for a, b in itertools.combinations(family, 2):
            assert isomorphic(nbhds[a], nbhds[b])
            assert not (balls[a] & balls[b])
        flat = tuple(e for a in family for e in a)
        rotated = tuple(e for a in family[1:] + family[:1] for e in a)
        assert (flat in q) != (rotated in q)
    return LocalityReport("shift", r, tuple(found[:cap]), len(found), t=t)


def hanf_equivalent(
    s1: Structure,
    anchor1: Sequence[int],
    s2: Structure,
    anchor2: Sequence[int],
    r: int,
) -> bool:
    """True iff the multisets of anchored r-neighborhood types, extending the
    anchors by each element in turn, agree; this is equivalent to the
    existence of a type-preserving bijection."""
    if s1.size != s2.size:
        raise ValueError("hanf equivalence needs equal cardinalities")
    if s1.signature != s2.signature:
        raise ValueError("hanf equivalence needs equal signatures")
    if len(anchor1) != len(anchor2):
        raise ValueError("anchor tuples must have equal length")
    a1, a2 = tuple(anchor1), tuple(anchor2)
    types1 = Counter(
        canonical_form(neighborhood(s1, a1 + (c,), r)) for c in range(s1.size)
    )
    types2 = Counter(
        canonical_form(neighborhood(s2, a2 + (c,), r)) for c in range(s2.size)
    )
    return types1 == types2


# ---------------------------------------------------------------------------
# Disjoint swaps on strings

# Positions in this section are 1-based, matching the string-structure
# universe {1..n}; the cut positions sit just before the swapped blocks.


def _position_type(w: str, p: int, r: int) -> tuple[int, int, str]:
    """Anchored r-neighborhood type of a string position: in a successor
    structure this is exactly (left extent, right extent, letters)."""
    n = len(w)
    left = min(r, p - 1)
    right = min(r, n - p)
    return (left, right, w[p - 1 - left : p + right])


def _ball(w: str, p: int, r: int) -> tuple[int, int]:
    n = len(w)
    return (max(1, p - r), min(n, p + r))


def disjoint_swap(
    w: str, i: int, j: int, i2: int, j2: int, r: int
) -> Optional[str]:
    """Swap blocks u = w(i..j] and v = w(i2..j2] if the r-neighborhoods of
    the four cut positions are pairwise disjoint with matching types at
    (i, i2) and (j, j2); otherwise None.

    Cut positions are 1-based; i = 0 (empty prefix) never validates since
    position 0 does not exist.
    """
    n = len(w)
    if not (0 <= i < j < i2 < j2 <= n):
        raise ValueError(f"malformed cut positions {(i, j, i2, j2)} for |w| = {n}")
    if i == 0:
        return None
    if _position_type(w, i, r) != _position_type(w, i2, r):
        return None
    if _position_type(w, j, r) != _position_type(w, j2, r):
        return None
    intervals = [_ball(w, p, r) for p in (i, j, i2, j2)]
    for (lo1, hi1), (lo2, hi2) in itertools.combinations(intervals, 2):
        if lo1 <= hi2 and lo2 <= hi1:
            return None
    x, u, y, v, z = w[:i], w[i:j], w[j:i2], w[i2:j2], w[j2:]
    return x + v + y + u + z


Acceptor = Union[Formula, Callable[[str], bool]]


def _as_predicate(acceptor: Acceptor, alphabet: str) -> Callable[[str], bool]:
    if isinstance(acceptor, Formula):
        def predicate(word: str) -> bool:
            s = gen_string_structure(word, alphabet)
            return eval_formula(s, Embedding.identity(s.size), acceptor)

        return predicate
    return acceptor


def swap_closure_violations(
    acceptor: Acceptor, alphabet: str, n: int, r: int, cap: int = DEFAULT_CAP
) -> LocalityReport:
    """All pairs (w, w') of length-n strings with w accepted, w' rejected,
    and w' a disjoint r-swap of w."""
    accept = _as_predicate(acceptor, alphabet)
    pairs = set()
    for letters in itertools.product(sorted(alphabet), repeat=n):
        w = "".join(letters)
        if not accept(w):
            continue
        for i, j, i2, j2 in itertools.combinations(range(1, n + 1), 4):
            w2 = disjoint_swap(w, i, j, i2, j2, r)
            if w2 is not None and w2 != w and not accept(w2):
                pairs.add((w, w2))
    found = sorted(pairs)
    return LocalityReport("swap_closure", r, tuple(found[:cap]), len(found))


# ---------------------------------------------------------------------------
# Arity reduction

ExtLetter = tuple[str, frozenset]
StringQuery = Callable[[str], Iterable[Anchor]]


def extended_alphabet(alphabet: str, k: int) -> tuple[ExtLetter, ...]:
    """Letters of the assignment alphabet: (letter, variable index set)."""
    subsets = []
    for size in range(k + 1):
        subsets.extend(frozenset(c) for c in itertools.combinations(range(k), size))
    return tuple((a, X) for a in sorted(alphabet) for X in subsets)


def arity_reduce(q: StringQuery, alphabet: str, k: int) -> Callable[[Sequence[ExtLetter]], bool]:
    """Language acceptor over (letter, index set) strings: reject unless
    every variable index occurs exactly once; otherwise project the letters
    and test whether the occurrence positions (0-based) satisfy the query."""
    if k < 1:
        raise ValueError("arity reduction needs k >= 1")

    def acceptor(word: Sequence[ExtLetter]) -> bool:
        occurrences: dict[int, list[int]] = {i: [] for i in range(k)}
        for pos, (letter, indices) in enumerate(word):
            for i in indices:
                if i not in occurrences:
                    raise ValueError(f"variable index {i} outside [0,{k})")
                occurrences[i].append(pos)
        if any(len(occurrences[i]) != 1 for i in range(k)):
            return False
        projected = "".join(letter for letter, _ in word)
        anchors = tuple(occurrences[i][0] for i in range(k))
        return anchors in frozenset(q(projected))

    return acceptor
