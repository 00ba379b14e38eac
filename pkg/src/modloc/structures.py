"""Finite relational structures over {0..n-1}: Gaifman graphs, distances,
anchored neighborhoods, isomorphism, and canonical forms.

Everything here is immutable and pure; values are safe to share across
threads and to use as dictionary keys.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

#: Sentinel for unreachable elements in distance maps.
INFINITY = math.inf


class StructureError(ValueError):
    """Raised for malformed signatures, structures, or structure files."""


@dataclass(frozen=True)
class Signature:
    """An ordered list of (relation name, arity) pairs.

    Order is significant: it fixes the bit layout of relation encodings.
    """

    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.relations]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate relation names in signature: {names}")
        for name, arity in self.relations:
            if arity < 1:
                raise StructureError(f"relation {name!r} has arity {arity} < 1")

    @classmethod
    def from_spec(cls, text: str) -> "Signature":
        """Build a signature from a spec string like ``"E/2 P0/1"``."""
        pairs = []
        for token in text.split():
            if "/" not in token:
                raise StructureError(f"bad relation token {token!r} (want NAME/ARITY)")
            name, _, arity = token.rpartition("/")
            if not name or not arity.isdigit():
                raise StructureError(f"bad relation token {token!r}")
            pairs.append((name, int(arity)))
        return cls(tuple(pairs))

    def spec(self) -> str:
        return " ".join(f"{name}/{arity}" for name, arity in self.relations)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def arity(self, name: str) -> int:
        for rname, arity in self.relations:
            if rname == name:
                return arity
        raise StructureError(f"unknown relation {name!r}")

    def index(self, name: str) -> int:
        for i, (rname, _) in enumerate(self.relations):
            if rname == name:
                return i
        raise StructureError(f"unknown relation {name!r}")


@dataclass(frozen=True)
class Structure:
    """A finite relational structure with universe {0..size-1}.

    ``relations`` is aligned with ``signature.relations``.
    """

    signature: Signature
    size: int
    relations: tuple[frozenset[tuple[int, ...]], ...]

    def __post_init__(self):
        if self.size < 1:
            raise StructureError("universe must be non-empty")
        if len(self.relations) != len(self.signature.relations):
            raise StructureError("relations not aligned with signature")
        for (name, arity), tuples in zip(self.signature.relations, self.relations):
            for t in tuples:
                if len(t) != arity:
                    raise StructureError(f"tuple {t} has wrong arity for {name}/{arity}")
                if any(not (0 <= e < self.size) for e in t):
                    raise StructureError(f"tuple {t} of {name} out of range [0,{self.size})")

    def relation(self, name: str) -> frozenset[tuple[int, ...]]:
        return self.relations[self.signature.index(name)]


def make_structure(
    signature: Signature,
    size: int,
    relations: Optional[Mapping[str, Iterable]] = None,
) -> Structure:
    """Build a structure from a name->tuples mapping; missing names are empty.

    Bare ints are accepted for unary relation members.
    """
    relations = dict(relations or {})
    unknown = set(relations) - set(signature.names)
    if unknown:
        raise StructureError(f"unknown relation symbols: {sorted(unknown)}")
    table = []
    for name, arity in signature.relations:
        tuples = set()
        for t in relations.get(name, ()):
            if isinstance(t, int):
                t = (t,)
            tuples.add(tuple(t))
        table.append(frozenset(tuples))
    return Structure(signature, size, tuple(table))


def relabel(s: Structure, perm: Sequence[int]) -> Structure:
    """Rename every element e to perm[e]; perm must be a bijection."""
    if sorted(perm) != list(range(s.size)):
        raise StructureError("relabeling is not a bijection")
    table = tuple(
        frozenset(tuple(perm[e] for e in t) for t in rel) for rel in s.relations
    )
    return Structure(s.signature, s.size, table)


def reduct(s: Structure, names: Sequence[str]) -> Structure:
    """Restrict the signature to the given relation names (in the given order)."""
    sig = Signature(tuple((n, s.signature.arity(n)) for n in names))
    table = tuple(s.relation(n) for n in names)
    return Structure(sig, s.size, table)


def with_relation(s: Structure, name: str, arity: int, tuples: Iterable) -> Structure:
    """Expand the structure by one additional relation."""
    sig = Signature(s.signature.relations + ((name, arity),))
    extra = frozenset(tuple(t) if not isinstance(t, int) else (t,) for t in tuples)
    return Structure(sig, s.size, s.relations + (extra,))


# ---------------------------------------------------------------------------
# Gaifman graph, distances, neighborhoods


def gaifman_graph(s: Structure) -> tuple[frozenset[int], ...]:
    """Symmetric adjacency of the Gaifman graph: a != b are adjacent iff they
    co-occur in some relation tuple."""
    adj: list[set[int]] = [set() for _ in range(s.size)]
    for rel in s.relations:
        for t in rel:
            for a, b in itertools.combinations(set(t), 2):
                adj[a].add(b)
                adj[b].add(a)
    return tuple(frozenset(x) for x in adj)


def distances_from(s: Structure, anchor: Sequence[int]) -> dict[int, float]:
    """BFS distance from the anchor tuple in the Gaifman graph.

    Unreachable elements map to INFINITY.
    """
    if len(anchor) == 0:
        raise StructureError("anchor tuple must be non-empty")
    if any(not (0 <= a < s.size) for a in anchor):
        raise StructureError(f"anchor {tuple(anchor)} out of range")
    adj = gaifman_graph(s)
    dist: dict[int, float] = {e: INFINITY for e in range(s.size)}
    queue = deque()
    for a in anchor:
        if dist[a] != 0:
            dist[a] = 0
            queue.append(a)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] == INFINITY:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


@dataclass(frozen=True)
class AnchoredNeighborhood:
    """An induced substructure re-indexed to {0..|N|-1} plus an anchor tuple.

    ``index_map[local]`` recovers the original element.
    """

    structure: Structure
    anchor: tuple[int, ...]
    radius: int
    index_map: tuple[int, ...]

    def __post_init__(self):
        if any(not (0 <= a < self.structure.size) for a in self.anchor):
            raise StructureError("anchor components are not valid local indices")


def neighborhood(s: Structure, anchor: Sequence[int], r: int) -> AnchoredNeighborhood:
    """The r-neighborhood of the anchor: induced substructure on all elements
    at Gaifman distance <= r, re-indexed, anchor preserved."""
    if r < 0:
        raise StructureError("radius must be >= 0")
    dist = distances_from(s, anchor)
    ball = sorted(e for e, d in dist.items() if d <= r)
    local = {e: i for i, e in enumerate(ball)}
    ball_set = set(ball)
    table = tuple(
        frozenset(
            tuple(local[e] for e in t) for t in rel if all(e in ball_set for e in t)
        )
        for rel in s.relations
    )
    sub = Structure(s.signature, len(ball), table)
    return AnchoredNeighborhood(sub, tuple(local[a] for a in anchor), r, tuple(ball))


# ---------------------------------------------------------------------------
# Color refinement (shared by isomorphism and canonical forms)


def _refined_colors(s: Structure, anchor: Sequence[int]) -> list[int]:
    """Iteratively refined, isomorphism-invariant colors with the anchor pinned.

    Colors are canonical ranks: two anchored structures related by an
    anchor-preserving isomorphism get identical color multisets, matched
    pointwise by any such isomorphism.
    """
    n = s.size
    anchor = tuple(anchor)
    anchor_pattern = {
        e: tuple(i for i, a in enumerate(anchor) if a == e) for e in range(n)
    }
    dists = [distances_from(s, (a,)) for a in anchor] if anchor else []
    incidence: list[list[tuple[int, int, tuple[int, ...]]]] = [[] for _ in range(n)]
    for ri, rel in enumerate(s.relations):
        for t in rel:
            for pos, e in enumerate(t):
                incidence[e].append((ri, pos, t))

    init = []
    for e in range(n):
        counts = tuple(
            tuple(
                sum(1 for t in rel if len(t) > pos and t[pos] == e)
                for pos in range(arity)
            )
            for rel, (_, arity) in zip(s.relations, s.signature.relations)
        )
        dvec = tuple(d[e] for d in dists)
        init.append((anchor_pattern[e], dvec, counts))
    order = sorted(set(init))
    colors = [order.index(c) for c in init]

    while True:
        sigs = []
        for e in range(n):
            nbr = sorted(
                (ri, pos, tuple(colors[x] for x in t)) for ri, pos, t in incidence[e]
            )
            sigs.append((colors[e], tuple(nbr)))
        order = sorted(set(sigs))
        new = [order.index(x) for x in sigs]
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


# ---------------------------------------------------------------------------
# Isomorphism (anchor-preserving backtracking)


def find_isomorphism(
    s1: Structure,
    anchor1: Sequence[int],
    s2: Structure,
    anchor2: Sequence[int],
) -> Optional[dict[int, int]]:
    """Anchor-preserving isomorphism s1 -> s2, or None.

    Backtracking with color pruning; colors combine unary labels, per-position
    degrees, and distances to the anchor.
    """
    anchor1, anchor2 = tuple(anchor1), tuple(anchor2)
    if s1.signature != s2.signature:
        return None
    if len(anchor1) != len(anchor2):
        raise StructureError("anchor tuples have different lengths")
    if s1.size != s2.size:
        return None
    if any(len(r1) != len(r2) for r1, r2 in zip(s1.relations, s2.relations)):
        return None

    c1 = _refined_colors(s1, anchor1)
    c2 = _refined_colors(s2, anchor2)
    if sorted(c1) != sorted(c2):
        return None

    by_color: dict[int, list[int]] = {}
    for e in range(s2.size):
        by_color.setdefault(c2[e], []).append(e)

    tuples_at1: list[list[tuple[int, tuple[int, ...]]]] = [[] for _ in range(s1.size)]
    tuples_at2: list[list[tuple[int, tuple[int, ...]]]] = [[] for _ in range(s2.size)]
    for ri in range(len(s1.relations)):
        for t in s1.relations[ri]:
            for e in set(t):
                tuples_at1[e].append((ri, t))
        for t in s2.relations[ri]:
            for e in set(t):
                tuples_at2[e].append((ri, t))

    mapping: dict[int, int] = {}
    reverse: dict[int, int] = {}

    def assign_ok(u: int, v: int) -> bool:
        for ri, t in tuples_at1[u]:
            if all(x in mapping for x in t):
                if tuple(mapping[x] for x in t) not in s2.relations[ri]:
                    return False
        for ri, t in tuples_at2[v]:
            if all(x in reverse for x in t):
                if tuple(reverse[x] for x in t) not in s1.relations[ri]:
                    return False
        return True

    # Anchors are forced first.
    for a, b in zip(anchor1, anchor2):
        if a in mapping:
            if mapping[a] != b:
                return None
            continue
        if b in reverse or c1[a] != c2[b]:
            return None
        mapping[a] = b
        reverse[b] = a
        if not assign_ok(a, b):
            return None

    rest = sorted(
        (e for e in range(s1.size) if e not in mapping),
        key=lambda e: (len(by_color[c1[e]]), -len(tuples_at1[e]), e),
    )

    def backtrack(i: int) -> bool:
        if i == len(rest):
            return True
        u = rest[i]
        for v in by_color[c1[u]]:
            if v in reverse:
                continue
            mapping[u] = v
            reverse[v] = u
            if assign_ok(u, v) and backtrack(i + 1):
                return True
            del mapping[u]
            del reverse[v]
        return False

    return dict(mapping) if backtrack(0) else None


def isomorphic(n1: AnchoredNeighborhood, n2: AnchoredNeighborhood) -> bool:
    """True iff an anchor-preserving isomorphism between the neighborhoods exists."""
    return find_isomorphism(n1.structure, n1.anchor, n2.structure, n2.anchor) is not None


# ---------------------------------------------------------------------------
# Canonical forms

_CANON_LIMIT = 1_000_000


def canonical_form(n: AnchoredNeighborhood) -> bytes:
    """Canonical byte code: equal codes iff anchor-preserving isomorphic.

    Minimizes the relation encoding over relabelings that respect the refined
    color classes (anchor components are pinned by their colors); restricting
    to class-respecting relabelings is sound because the colors are
    isomorphism-invariant.
    """
    s = n.structure
    anchor = n.anchor
    colors = _refined_colors(s, anchor)
    classes: dict[int, list[int]] = {}
    for e in range(s.size):
        classes.setdefault(colors[e], []).append(e)
    ordered = [classes[c] for c in sorted(classes)]

    count = 1
    for cls in ordered:
        count *= math.factorial(len(cls))
        if count > _CANON_LIMIT:
            raise RuntimeError(
                f"canonical_form: {count} candidate labelings exceed the desk-scale limit"
            )

    slots: list[range] = []
    start = 0
    for cls in ordered:
        slots.append(range(start, start + len(cls)))
        start += len(cls)

    best = None
    for perms in itertools.product(*(itertools.permutations(cls) for cls in ordered)):
        lab = [0] * s.size
        for cls_perm, slot in zip(perms, slots):
            for e, sl in zip(cls_perm, slot):
                lab[e] = sl
        enc = (
            tuple(tuple(sorted(tuple(lab[e] for e in t) for t in rel)) for rel in s.relations),
            tuple(lab[a] for a in anchor),
        )
        if best is None or enc < best:
            best = enc
    header = (s.size, s.signature.spec(), len(anchor))
    return repr((header, best)).encode("utf-8")


# ---------------------------------------------------------------------------
# Disjoint union


def disjoint_union(s1: Structure, s2: Structure) -> Structure:
    """Universe {0..n1+n2-1} with s2's elements shifted by n1."""
    if s1.signature != s2.signature:
        raise StructureError("disjoint_union requires equal signatures")
    n1 = s1.size
    table = tuple(
        r1 | frozenset(tuple(e + n1 for e in t) for t in r2)
        for r1, r2 in zip(s1.relations, s2.relations)
    )
    return Structure(s1.signature, n1 + s2.size, table)


# ---------------------------------------------------------------------------
# Text format

_TUPLE_RE = re.compile(r"\(([^()]*)\)")


def parse_structure(text: str) -> Structure:
    """Parse the line-based structure format.

    ::

        signature: E/2 P0/1
        universe: 5
        E: (0,1) (1,2)

    Unlisted relations are empty; '#'-lines are comments; unknown symbols
    are errors.
    """
    lines = [
        (i + 1, line.strip())
        for i, line in enumerate(text.splitlines())
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines or not lines[0][1].startswith("signature:"):
        raise StructureError("line 1: expected 'signature: NAME/ARITY ...'")
    sig = Signature.from_spec(lines[0][1][len("signature:"):].strip())
    if len(lines) < 2 or not lines[1][1].startswith("universe:"):
        raise StructureError("expected 'universe: N' after the signature line")
    utext = lines[1][1][len("universe:"):].strip()
    if not utext.isdigit():
        raise StructureError(f"bad universe size {utext!r}")
    size = int(utext)

    relations: dict[str, set] = {}
    for lineno, line in lines[2:]:
        name, sep, rest = line.partition(":")
        name = name.strip()
        if not sep:
            raise StructureError(f"line {lineno}: expected 'NAME: (tuples)'")
        if name not in sig.names:
            raise StructureError(f"line {lineno}: unknown relation symbol {name!r}")
        if name in relations:
            raise StructureError(f"line {lineno}: duplicate relation line for {name!r}")
        leftover = _TUPLE_RE.sub("", rest).strip()
        if leftover:
            raise StructureError(f"line {lineno}: stray text {leftover!r}")
        tuples = set()
        for m in _TUPLE_RE.finditer(rest):
            parts = [p.strip() for p in m.group(1).split(",") if p.strip()]
            if len(parts) != sig.arity(name) or not all(
                p.lstrip("-").isdigit() for p in parts
            ):
                raise StructureError(f"line {lineno}: bad tuple ({m.group(1)})")
            tuples.add(tuple(int(p) for p in parts))
        relations[name] = tuples
    return make_structure(sig, size, relations)


def format_structure(s: Structure) -> str:
    """Inverse of parse_structure; relations in signature order, tuples sorted,
    empty relations omitted."""
    out = [f"signature: {s.signature.spec()}", f"universe: {s.size}"]
    for (name, _), rel in zip(s.signature.relations, s.relations):
        if rel:
            body = " ".join("(" + ",".join(str(e) for e in t) + ")" for t in sorted(rel))
            out.append(f"{name}: {body}")
    return "\n".join(out) + "\n"
