"""Constructors for the worked example families and their formulas:
disjoint cycle unions, tori and hoses, string structures, the Hanf witness
pair, subdivision-based shift-locality families, and the concrete
FO+MOD formulas they are tested with.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .structures import (
    Signature,
    Structure,
    StructureError,
    distances_from,
    make_structure,
)
from .logic import (
    And,
    Atom,
    Equal,
    Exists,
    Forall,
    Formula,
    ModExists,
    Not,
    NumAtom,
    Or,
)

SIG_E = Signature.from_spec("E/2")
SIG_TORUS = Signature.from_spec("E1/2 E2/2")
SIG_HOSE = Signature.from_spec("R/1 E1/2 E2/2")


def string_signature(alphabet: str) -> Signature:
    return Signature.from_spec(" ".join(["E/2"] + [f"P{a}/1" for a in sorted(alphabet)]))


# ---------------------------------------------------------------------------
# Structure families


def gen_cycles(lengths: Sequence[int]) -> Structure:
    """Disjoint directed cycles of the given lengths over {E/2}."""
    if not lengths or any(length < 1 for length in lengths):
        raise StructureError("cycle lengths must be positive")
    edges = []
    base = 0
    for length in lengths:
        for i in range(length):
            edges.append((base + i, base + (i + 1) % length))
        base += length
    return make_structure(SIG_E, base, {"E": edges})


@dataclass(frozen=True)
class TorusSpec:
    h: int
    w: int
    k: int

    def __post_init__(self):
        if self.h < 2 or self.w < 2 or not (0 <= self.k < self.h):
            raise StructureError(f"bad torus spec h={self.h} w={self.w} k={self.k}")


def gen_torus(spec: TorusSpec) -> Structure:
    """Torus of height h, width w, twist k; node (i,j) is element i*w+j."""
    h, w, k = spec.h, spec.w, spec.k
    node = lambda i, j: i * w + j
    e1 = [(node(i, j), node((i + 1) % h, j)) for i in range(h) for j in range(w)]
    e2 = [(node(i, j), node(i, j + 1)) for i in range(h) for j in range(w - 1)]
    e2 += [(node(i, w - 1), node((i + k) % h, 0)) for i in range(h)]
    return make_structure(SIG_TORUS, h * w, {"E1": e1, "E2": e2})


def _successor_map(s: Structure, rel: str) -> dict[int, int]:
    succ: dict[int, int] = {}
    for u, v in s.relation(rel):
        if u in succ:
            raise StructureError(f"{rel} is not functional at {u}")
        succ[u] = v
    return succ


def torus_twist(s: Structure, h: int, w: int) -> int:
    """Read the twist off the wrap-around edge of row 0 (indexing i*w+j)."""
    succ = _successor_map(s, "E2")
    target = succ[w - 1]  # E2-successor of (0, w-1)
    if target % w != 0:
        raise StructureError("wrap edge does not land in column 0")
    return target // w


def torus_turn(s: Structure, h: int, w: int, reps: Sequence[int]) -> int:
    """Sum of turn-path lengths for one representative per column.

    The j-th turn path runs along E1 from reps[j] to the E2-successor of
    reps[j-1 mod w]; its length is in [h].  Wrap edges must be present.
    """
    if len(reps) != w or any(reps[j] % w != j for j in range(w)):
        raise StructureError("need one representative per column, in column order")
    e1 = _successor_map(s, "E1")
    e2 = _successor_map(s, "E2")
    total = 0
    for j in range(w):
        target = e2[reps[(j - 1) % w]]
        cur = reps[j]
        for steps in range(h):
            if cur == target:
                total += steps
                break
            cur = e1[cur]
        else:
            raise StructureError(f"turn path of column {j} does not close within {h} steps")
    return total


def gen_hose(h: int, w: int) -> tuple[Structure, int, int]:
    """Torus minus the wrap-around E2-edges, with (0,w-1) marked by R.

    Returns (structure, a, b) for the witness elements a=(0,0), b=(1,0).
    """
    torus = gen_torus(TorusSpec(h, w, 0))
    node = lambda i, j: i * w + j
    inner = frozenset(
        (node(i, j), node(i, j + 1)) for i in range(h) for j in range(w - 1)
    )
    s = make_structure(
        SIG_HOSE,
        h * w,
        {"R": [node(0, w - 1)], "E1": torus.relation("E1"), "E2": inner},
    )
    return s, node(0, 0), node(1, 0)


def gen_string_structure(word: str, alphabet: Optional[str] = None) -> Structure:
    """Successor structure of a non-empty word; position p (1-based) is
    element p-1.  Pass an explicit alphabet to fix the signature across
    words."""
    if not word:
        raise StructureError("word must be non-empty")
    if alphabet is None:
        alphabet = "".join(sorted(set(word)))
    if set(word) - set(alphabet):
        raise StructureError(f"word uses letters outside alphabet {alphabet!r}")
    rel = {"E": [(i, i + 1) for i in range(len(word) - 1)]}
    for a in alphabet:
        rel[f"P{a}"] = [(i,) for i, c in enumerate(word) if c == a]
    return make_structure(string_signature(alphabet), len(word), rel)


def weak_gaifman_word(ell: int) -> tuple[str, int, int]:
    """The word 1^l 0^l 1^l 0^l with the two witness positions (0-based
    elements; the 1-based positions are l and 3l)."""
    if ell < 1:
        raise StructureError("scale must be >= 1")
    word = "1" * ell + "0" * ell + "1" * ell + "0" * ell
    return word, ell - 1, 3 * ell - 1


@dataclass(frozen=True)
class HanfWitness:
    u: str
    v: str
    beta: tuple[int, ...]  # position bijection, 0-based: u-position -> v-position


def gen_hanf_witness(ell: int) -> HanfWitness:
    """The block-swap pair u = x y1 y2 y3 z, v = x y3 y2 y1 z with
    x=1^l, y1=1^l 2 0^l, y2=0^l 1^l, y3=1^l 0^l, z=0^l, and the
    block-positional bijection beta."""
    if ell < 1:
        raise StructureError("scale must be >= 1")
    x = "1" * ell
    y1 = "1" * ell + "2" + "0" * ell
    y2 = "0" * ell + "1" * ell
    y3 = "1" * ell + "0" * ell
    z = "0" * ell
    u = x + y1 + y2 + y3 + z
    v = x + y3 + y2 + y1 + z
    beta = list(range(len(u)))
    # u block offsets
    u_y1, u_y2, u_y3 = ell, 3 * ell + 1, 5 * ell + 1
    # v block offsets
    v_y3, v_y2, v_y1 = ell, 3 * ell, 5 * ell
    for s in range(len(y1)):
        beta[u_y1 + s] = v_y1 + s
    for s in range(len(y2)):
        beta[u_y2 + s] = v_y2 + s
    for s in range(len(y3)):
        beta[u_y3 + s] = v_y3 + s
    return HanfWitness(u, v, tuple(beta))


_LEFT_RE = re.compile(r"1+20+1+0+")
_RIGHT_RE = re.compile(r"1+0+1+20+")


def in_language_M(word: str) -> bool:
    return bool(_LEFT_RE.fullmatch(word) or _RIGHT_RE.fullmatch(word))


def in_language_L(word: str) -> bool:
    """Membership in L = L_odd u L_even by the direct definition."""
    ones = word.count("1")
    if _LEFT_RE.fullmatch(word):
        return ones % 2 == 1
    if _RIGHT_RE.fullmatch(word):
        return ones % 2 == 0
    return False


def gen_subdivided(
    size: int,
    edges: Sequence[tuple[int, int]],
    marked: Iterable[tuple[int, int]],
    ell: int,
) -> Structure:
    """ell-fold subdivision of the marked edges: (u,v) becomes a directed
    path through ell fresh nodes.  Fresh nodes are appended in edge order."""
    if ell < 0:
        raise StructureError("subdivision factor must be >= 0")
    marked = set(marked)
    unknown = marked - set(edges)
    if unknown:
        raise StructureError(f"marked edges not in the edge list: {sorted(unknown)}")
    out = []
    nxt = size
    for u, v in edges:
        if (u, v) in marked and ell > 0:
            chain = [u] + list(range(nxt, nxt + ell)) + [v]
            nxt += ell
            out.extend(zip(chain, chain[1:]))
        else:
            out.append((u, v))
    return make_structure(SIG_E, nxt, {"E": out})


# ---------------------------------------------------------------------------
# Shift-locality application families


@dataclass(frozen=True)
class ShiftFamily:
    name: str
    structure: Structure
    anchors: tuple[tuple[int, ...], ...]  # t anchor k-tuples; the violating family
    query: frozenset[tuple[int, ...]]  # the kt-ary relation
    radius: int
    k: int
    t: int


def _directed_reach(s: Structure) -> dict[int, set[int]]:
    """Reflexive directed reachability in the E-graph."""
    adj: dict[int, list[int]] = {e: [] for e in range(s.size)}
    for u, v in s.relation("E"):
        adj[u].append(v)
    reach = {}
    for start in range(s.size):
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        reach[start] = seen
    return reach


def _cycle_nodes(s: Structure) -> set[int]:
    reach = _directed_reach(s)
    succ: dict[int, list[int]] = {e: [] for e in range(s.size)}
    for u, v in s.relation("E"):
        succ[u].append(v)
    return {u for u in range(s.size) if any(u in reach[v] for v in succ[u])}


def gen_reach_family(t: int, ell: int) -> ShiftFamily:
    """Directed path on t(2l+1) nodes; anchor i sits at the center of its
    fifth of the path; the query chains reachability along the anchors."""
    if t < 2 or ell < 1:
        raise StructureError("need t >= 2 and ell >= 1")
    n = t * (2 * ell + 1)
    s = make_structure(SIG_E, n, {"E": [(i, i + 1) for i in range(n - 1)]})
    anchors = tuple((i * (2 * ell + 1) + ell,) for i in range(t))
    reach = _directed_reach(s)
    query = frozenset(
        tup
        for tup in itertools.product(range(n), repeat=t)
        if all(tup[i + 1] in reach[tup[i]] for i in range(t - 1))
    )
    return ShiftFamily("reach", s, anchors, query, ell, 1, t)


def gen_cycle_family(t: int, ell: int) -> ShiftFamily:
    """2-cycle plus a path, everything ell-fold subdivided; the query asks
    whether the first anchor lies on a cycle."""
    if t < 2 or ell < 1:
        raise StructureError("need t >= 2 and ell >= 1")
    edges = [(0, 1), (1, 0)] + [(2 + i, 3 + i) for i in range(t)]
    s = gen_subdivided(t + 3, edges, edges, ell)
    anchors = ((0,),) + tuple((2 + i,) for i in range(1, t))
    on_cycle = _cycle_nodes(s)
    query = frozenset(
        tup for tup in itertools.product(range(s.size), repeat=t) if tup[0] in on_cycle
    )
    # consecutive path anchors sit at distance ell+1, so radius ell//2 is the
    # largest with pairwise disjoint balls
    return ShiftFamily("cycle", s, anchors, query, ell // 2, 1, t)


def gen_triangle_reach_family(t: int, ell: int) -> ShiftFamily:
    """Path into a triangle with a tail, all but the triangle subdivided;
    the query asks whether the last anchor is reachable from the triangle."""
    if t < 2 or ell < 1:
        raise StructureError("need t >= 2 and ell >= 1")
    path = [(i, i + 1) for i in range(t)]
    triangle = [(t, t + 1), (t + 1, t + 2), (t + 2, t)]
    tail = [(t + 2, t + 3), (t + 3, t + 4)]
    edges = path + triangle + tail
    s = gen_subdivided(t + 5, edges, path + tail, ell)
    anchors = tuple((i + 1,) for i in range(t - 1)) + ((t + 3,),)
    reach = _directed_reach(s)
    triangle_reachable = set().union(*(reach[u] for u in _cycle_nodes(s)))
    query = frozenset(
        tup
        for tup in itertools.product(range(s.size), repeat=t)
        if tup[t - 1] in triangle_reachable
    )
    return ShiftFamily("triangle-reach", s, anchors, query, ell // 2, 1, t)


def gen_same_distance_family(t: int, ell: int) -> ShiftFamily:
    """Star with one lengthened ray; the query compares the Gaifman distances
    of the last three anchors."""
    if t < 3 or ell < 1:
        raise StructureError("need t >= 3 and ell >= 1")
    spokes = [(0, 1 + i) for i in range(t)]
    edges = spokes + [(t, t + 1)]
    s = gen_subdivided(t + 2, edges, spokes, ell)
    anchors = tuple((1 + i,) for i in range(t - 1)) + ((t + 1,),)
    dist = {e: distances_from(s, (e,)) for e in range(s.size)}
    query = frozenset(
        tup
        for tup in itertools.product(range(s.size), repeat=t)
        if dist[tup[t - 3]][tup[t - 1]] == dist[tup[t - 2]][tup[t - 1]]
    )
    return ShiftFamily("same-distance", s, anchors, query, ell, 1, t)


# ---------------------------------------------------------------------------
# Anchored-paths family for the rotation-substitution transformation


@dataclass(frozen=True)
class AnchoredPaths:
    structure: Structure
    anchors: tuple[tuple[int], ...]
    formula: Formula  # free variables x0..x{t-1}, satisfied by the anchors in order
    t: int
    m: int


def gen_anchored_paths(t: int, m: int) -> AnchoredPaths:
    """t disjoint directed paths with centered anchors.  All anchors have
    isomorphic, disjoint m-neighborhoods, but path j continues for m+j steps
    past its anchor, so the formula (each x_j reaches a sink in exactly m+j
    steps) accepts only the unrotated anchor tuple."""
    if t < 2 or m < 1:
        raise StructureError("need t >= 2 and m >= 1")
    edges = []
    anchors = []
    base = 0
    for j in range(t):
        length = 2 * m + j
        edges.extend((base + i, base + i + 1) for i in range(length))
        anchors.append((base + m,))
        base += length + 1
    s = make_structure(SIG_E, base, {"E": edges})

    def sink(v: str) -> Formula:
        return Not(Exists(f"{v}_out", Atom("E", (v, f"{v}_out"))))

    def chain_exact(v: str, steps: int, tag: str) -> Formula:
        names = [f"{tag}_{i}" for i in range(1, steps + 1)]

        def build(i: int) -> Formula:
            prev = names[i - 1] if i > 0 else v
            if i == steps - 1:
                return Exists(names[i], _and(Atom("E", (prev, names[i])), sink(names[i])))
            return Exists(names[i], _and(Atom("E", (prev, names[i])), build(i + 1)))

        return build(0)

    parts = tuple(chain_exact(f"x{j}", m + j, f"c{j}") for j in range(t))
    return AnchoredPaths(s, tuple(anchors), And(parts), t, m)


# ---------------------------------------------------------------------------
# Formula construction helpers


def _and(*subs: Formula) -> Formula:
    return subs[0] if len(subs) == 1 else And(tuple(subs))


def _or(*subs: Formula) -> Formula:
    return subs[0] if len(subs) == 1 else Or(tuple(subs))


def _implies(a: Formula, b: Formula) -> Formula:
    return Or((Not(a), b))


def _lt(x: str, y: str) -> Formula:
    return NumAtom("num<", (x, y))


def relativize(phi: Formula, guard: Callable[[str], Formula]) -> Formula:
    """Restrict every quantifier (including counting quantifiers) to the
    elements satisfying the guard."""
    if isinstance(phi, (Equal, Atom, NumAtom)):
        return phi
    if isinstance(phi, Not):
        return Not(relativize(phi.sub, guard))
    if isinstance(phi, And):
        return And(tuple(relativize(f, guard) for f in phi.subs))
    if isinstance(phi, Or):
        return Or(tuple(relativize(f, guard) for f in phi.subs))
    if isinstance(phi, Exists):
        return Exists(phi.var, _and(guard(phi.var), relativize(phi.sub, guard)))
    if isinstance(phi, Forall):
        return Forall(phi.var, _implies(guard(phi.var), relativize(phi.sub, guard)))
    if isinstance(phi, ModExists):
        return ModExists(phi.i, phi.p, phi.var, _and(guard(phi.var), relativize(phi.sub, guard)))
    raise TypeError(f"unknown node {phi!r}")


def rewrite_atoms(
    phi: Formula, rel: str, fn: Callable[[tuple[str, ...]], Formula]
) -> Formula:
    """Replace every atom of the given relation by fn(vars)."""
    if isinstance(phi, Atom):
        return fn(phi.vars) if phi.rel == rel else phi
    if isinstance(phi, (Equal, NumAtom)):
        return phi
    if isinstance(phi, Not):
        return Not(rewrite_atoms(phi.sub, rel, fn))
    if isinstance(phi, And):
        return And(tuple(rewrite_atoms(f, rel, fn) for f in phi.subs))
    if isinstance(phi, Or):
        return Or(tuple(rewrite_atoms(f, rel, fn) for f in phi.subs))
    if isinstance(phi, Exists):
        return Exists(phi.var, rewrite_atoms(phi.sub, rel, fn))
    if isinstance(phi, Forall):
        return Forall(phi.var, rewrite_atoms(phi.sub, rel, fn))
    if isinstance(phi, ModExists):
        return ModExists(phi.i, phi.p, phi.var, rewrite_atoms(phi.sub, rel, fn))
    raise TypeError(f"unknown node {phi!r}")


def _permutation_graph(rel: str, p: str) -> Formula:
    """Every element has exactly one rel-successor and one rel-predecessor."""
    x, y, z = f"{p}px", f"{p}py", f"{p}pz"
    out_one = Forall(
        x,
        Exists(y, _and(Atom(rel, (x, y)), Forall(z, _implies(Atom(rel, (x, z)), Equal(z, y))))),
    )
    in_one = Forall(
        x,
        Exists(y, _and(Atom(rel, (y, x)), Forall(z, _implies(Atom(rel, (z, x)), Equal(z, y))))),
    )
    return _and(out_one, in_one)


def _cycles_formula(prefix: str = "") -> Formula:
    return _permutation_graph("E", prefix)


def _inversions_formula(prefix: str = "") -> Formula:
    """Even number of order inversions of the successor permutation."""
    x, y, xs, ys = f"{prefix}ix", f"{prefix}iy", f"{prefix}ixs", f"{prefix}iys"
    succ_swapped = Exists(
        xs, _and(Atom("E", (x, xs)), Exists(ys, _and(Atom("E", (y, ys)), _lt(ys, xs))))
    )
    return ModExists(0, 2, x, ModExists(1, 2, y, _and(_lt(x, y), succ_swapped)))


def _even_cycles_formula(prefix: str = "") -> Formula:
    return _and(_cycles_formula(prefix), _inversions_formula(prefix))


def _col_formula(x: str, y: str, h: int, p: str) -> Formula:
    """x and y lie on the same E1-cycle (of length h)."""
    names = [f"{p}u{i}" for i in range(1, h)]
    out = Equal(names[-1], y) if names else Equal(x, y)
    for i in range(h - 2, -1, -1):
        prev = names[i - 1] if i > 0 else x
        inner = Exists(names[i], _and(Atom("E1", (prev, names[i])), out))
        out = _or(Equal(prev, y), inner) if i > 0 else inner
    return _or(Equal(x, y), out) if h > 1 else Equal(x, y)


def _between_formula(a: str, b: str, c: str, h: int, p: str) -> Formula:
    """b != a lies on the E1-path of length <= h-1 from a to c (c included)."""
    options = []
    for length in range(1, h):
        names = [f"{p}q{length}_{i}" for i in range(1, length)]
        hits = [Equal(q, b) for q in names] + [Equal(c, b)]
        body: Formula = _and(
            Atom("E1", (names[-1] if names else a, c)), _or(*hits)
        )
        for i in range(len(names) - 1, -1, -1):
            prev = names[i - 1] if i > 0 else a
            body = Exists(names[i], _and(Atom("E1", (prev, names[i])), body))
        options.append(body)
    return _or(*options)


def _torus_theta(h: int) -> Formula:
    """FO sentence for disjoint unions of tori of height h: E1 and E2 are
    permutations, E1-cycles have length exactly h, E2 has no fixed points,
    and E2 maps E1-edges to E1-edges (columns to isomorphic columns)."""
    x, y, u, v = "tcx", "tcy", "tcu", "tcv"
    names = [f"tl{i}" for i in range(1, h)]

    def cycle_step(i: int) -> Formula:
        prev = names[i - 1] if i > 0 else x
        guards = [Atom("E1", (prev, names[i])), Not(Equal(names[i], x))]
        if i == h - 2:
            guards.append(Atom("E1", (names[i], x)))
            return Exists(names[i], _and(*guards))
        return Exists(names[i], _and(*guards, cycle_step(i + 1)))

    column_h = Forall(x, cycle_step(0))
    no_fixed_e2 = Forall(x, Not(Atom("E2", (x, x))))
    commute = Forall(
        x,
        Forall(
            y,
            _implies(
                Atom("E1", (x, y)),
                Forall(
                    u,
                    _implies(
                        Atom("E2", (x, u)),
                        Forall(v, _implies(Atom("E2", (y, v)), Atom("E1", (u, v)))),
                    ),
                ),
            ),
        ),
    )
    return _and(
        _permutation_graph("E1", "t1"),
        _permutation_graph("E2", "t2"),
        column_h,
        no_fixed_e2,
        commute,
    )


def _torus_on_turn_path(h: int, x: str = "x") -> Formula:
    """x lies (strictly past the representative) on some column's turn path,
    where representatives are the <-least elements of their columns."""
    y, z, z2 = "ty", "tz", "tz2"

    def least_in_column(v: str, p: str) -> Formula:
        u = f"{p}lu"
        return Forall(
            u, _implies(_col_formula(v, u, h, p), _or(Equal(u, v), _lt(v, u)))
        )

    return Exists(
        y,
        _and(
            least_in_column(y, "ta"),
            Exists(
                z,
                _and(
                    least_in_column(z, "tb"),
                    Exists(
                        z2,
                        _and(Atom("E2", (z, z2)), _between_formula(y, x, z2, h, "tw")),
                    ),
                ),
            ),
        ),
    )


def _torus_psi(h: int) -> Formula:
    return ModExists(0, h, "tc", _torus_on_turn_path(h, "tc"))


def _torus_twist_formula(h: int) -> Formula:
    return _and(_torus_theta(h), _torus_psi(h))


def _hose_query(h: int) -> Formula:
    """Unary hose query: close the E1-cycle through the R-marked node onto
    the E1-cycle through x with simulated wrap edges, then run the torus
    sentence on the augmented E2."""
    ys = [f"hy{i}" for i in range(h)]
    xs = [f"hx{i}" for i in range(h)]
    z = "hz"

    def wrap(vars: tuple[str, ...]) -> Formula:
        u, v = vars
        sims = [_and(Equal(u, yi), Equal(v, xi)) for yi, xi in zip(ys, xs)]
        return _or(Atom("E2", (u, v)), *sims)

    body = rewrite_atoms(_torus_twist_formula(h), "E2", wrap)

    # x-cycle: innermost to outermost, with the closing edge at the deepest level.
    core: Formula = _and(Atom("E1", (xs[-2], xs[-1])), Atom("E1", (xs[-1], xs[0])), body)
    out = Exists(xs[-1], core)
    for i in range(h - 2, 0, -1):
        out = Exists(xs[i], _and(Atom("E1", (xs[i - 1], xs[i])), out))
    out = Exists(xs[0], _and(Equal(xs[0], "x"), out))

    # y-cycle around the unique R-marked node.
    core = _and(Atom("E1", (ys[-2], ys[-1])), Atom("E1", (ys[-1], ys[0])), out)
    out = Exists(ys[-1], core)
    for i in range(h - 2, 0, -1):
        out = Exists(ys[i], _and(Atom("E1", (ys[i - 1], ys[i])), out))
    unique_r = Forall(z, _implies(Atom("R", (z,)), Equal(z, ys[0])))
    return Exists(ys[0], _and(Atom("R", (ys[0],)), unique_r, out))


def _string_swap_query() -> Formula:
    """Unary query on {0,1}-strings: splice the two 1-blocks into cycles and
    run the even-cycles sentence on the 1-positions."""
    x, xp, y, yp, z = "x", "sxp", "sy", "syp", "sz"

    def right0(v: str, tag: str) -> Formula:
        w = f"sr{tag}"
        return Exists(w, _and(Atom("E", (v, w)), Atom("P0", (w,))))

    def left0(v: str, tag: str) -> Formula:
        w = f"sl{tag}"
        return Exists(w, _and(Atom("E", (w, v)), Atom("P0", (w,))))

    def indeg0(v: str, tag: str) -> Formula:
        w = f"si{tag}"
        return Not(Exists(w, Atom("E", (w, v))))

    def splice(vars: tuple[str, ...]) -> Formula:
        u, v = vars
        return _or(
            Atom("E", (u, v)),
            _and(Equal(u, x), Equal(v, y)),
            _and(Equal(u, xp), Equal(v, yp)),
        )

    body = rewrite_atoms(
        relativize(_even_cycles_formula("c"), lambda v: Atom("P1", (v,))),
        "E",
        splice,
    )

    xp_cond = lambda v, tag: _and(Not(Equal(v, x)), Atom("P1", (v,)), right0(v, tag))
    y_cond = lambda v, tag: indeg0(v, tag)
    yp_cond = lambda v, tag: _and(Atom("P1", (v,)), left0(v, tag))

    return Exists(
        xp,
        _and(
            xp_cond(xp, "a"),
            Forall(z, _implies(xp_cond(z, "b"), Equal(z, xp))),
            Exists(
                y,
                _and(
                    y_cond(y, "c"),
                    Atom("P1", (y,)),
                    Forall(z, _implies(y_cond(z, "d"), Equal(z, y))),
                    Exists(
                        yp,
                        _and(
                            yp_cond(yp, "e"),
                            Forall(z, _implies(yp_cond(z, "f"), Equal(z, yp))),
                            body,
                        ),
                    ),
                ),
            ),
        ),
    )


def _language_m_formula() -> Formula:
    """FO sentence for M over {0,1,2}: block shape with unique 1-0, 1-2 and
    0-1 boundaries and a unique 2 followed by 0."""
    x, x2, y, y2, z, z2, w = "mx", "mx2", "my", "my2", "mz", "mz2", "mw"

    def first(v: str, tag: str) -> Formula:
        return Not(Exists(f"mf{tag}", Atom("E", (f"mf{tag}", v))))

    def last(v: str, tag: str) -> Formula:
        return Not(Exists(f"mg{tag}", Atom("E", (v, f"mg{tag}"))))

    def boundary(pa: str, pb: str, v: str, tag: str) -> Formula:
        """v carries pa and its right neighbour carries pb."""
        nb = f"mb{tag}"
        return _and(
            Atom(f"P{pa}", (v,)), Exists(nb, _and(Atom("E", (v, nb)), Atom(f"P{pb}", (nb,))))
        )

    def unique(cond: Callable[[str, str], Formula], tag: str) -> Formula:
        a, b = f"mu{tag}", f"mv{tag}"
        return Exists(
            a, _and(cond(a, tag + "1"), Forall(b, _implies(cond(b, tag + "2"), Equal(b, a))))
        )

    ends = _and(
        Forall(x, _implies(first(x, "s"), Atom("P1", (x,)))),
        Forall(x, _implies(last(x, "e"), Atom("P0", (x,)))),
    )
    after_one = Forall(
        x,
        _implies(
            Atom("P1", (x,)),
            Forall(
                x2,
                _implies(
                    Atom("E", (x, x2)),
                    _or(Atom("P0", (x2,)), Atom("P1", (x2,)), Atom("P2", (x2,))),
                ),
            ),
        ),
    )
    after_zero = Forall(
        y,
        _implies(
            Atom("P0", (y,)),
            Forall(
                y2,
                _implies(Atom("E", (y, y2)), _or(Atom("P0", (y2,)), Atom("P1", (y2,)))),
            ),
        ),
    )
    two_block = _and(
        unique(lambda v, tag: Atom("P2", (v,)), "t"),
        Forall(z, _implies(Atom("P2", (z,)), boundary("2", "0", z, "u"))),
    )
    return _and(
        ends,
        after_one,
        unique(lambda v, tag: boundary("1", "0", v, tag), "a"),
        unique(lambda v, tag: boundary("1", "2", v, tag), "b"),
        after_zero,
        unique(lambda v, tag: boundary("0", "1", v, tag), "c"),
        two_block,
    )


def _language_l_formula() -> Formula:
    """Order-invariant sentence for L: the shape sentence for M plus the
    even-cycles sentence run on the 1/2-positions with simulated cycle-closing
    edges."""

    def first(v: str, tag: str) -> Formula:
        return Not(Exists(f"lf{tag}", Atom("E", (f"lf{tag}", v))))

    def close(vars: tuple[str, ...]) -> Formula:
        u, v = vars
        r0 = Exists("lr", _and(Atom("E", (u, "lr")), Atom("P0", ("lr",))))
        l0 = Exists("ll", _and(Atom("E", ("ll", v)), Atom("P0", ("ll",))))
        return _or(
            Atom("E", (u, v)),
            _and(Atom("P2", (u,)), first(v, "w")),
            _and(Atom("P1", (u,)), Atom("P1", (v,)), r0, l0),
        )

    body = rewrite_atoms(
        relativize(
            _even_cycles_formula("c"),
            lambda v: _or(Atom("P1", (v,)), Atom("P2", (v,))),
        ),
        "E",
        close,
    )
    return _and(_language_m_formula(), body)


def _reach_shift_formula(t: int, rho_rel: str = "Reach") -> Formula:
    if t < 2:
        raise StructureError("need t >= 2")
    parts = tuple(Atom(rho_rel, (f"x{i}", f"x{i+1}")) for i in range(t - 1))
    return _and(*parts)


def paper_formula(name: str, **params) -> Formula:
    """Closed-form ASTs of the worked formulas.

    Names: even_cycles, cycles, inversions, torus_theta(h), torus_psi(h),
    torus_on_turn_path(h), torus_twist(h), hose_query(h), string_swap_query,
    language_M, language_L, reach_shift(t).
    """
    builders: dict[str, Callable[..., Formula]] = {
        "even_cycles": lambda: _even_cycles_formula(),
        "cycles": lambda: _cycles_formula(),
        "inversions": lambda: _inversions_formula(),
        "torus_theta": lambda h: _torus_theta(h),
        "torus_psi": lambda h: _torus_psi(h),
        "torus_on_turn_path": lambda h: _torus_on_turn_path(h),
        "torus_twist": lambda h: _torus_twist_formula(h),
        "hose_query": lambda h: _hose_query(h),
        "string_swap_query": lambda: _string_swap_query(),
        "language_M": lambda: _language_m_formula(),
        "language_L": lambda: _language_l_formula(),
        "reach_shift": lambda t: _reach_shift_formula(t),
    }
    if name not in builders:
        raise ValueError(f"unknown paper formula {name!r}")
    return builders[name](**params)
