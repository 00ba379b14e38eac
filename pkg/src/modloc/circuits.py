"""MOD_p circuits: DAG representation, evaluation, the formula-to-circuit
compiler, and the two circuit transformations (anchor-rotation substitution
and exact-residue conversion).

Circuit conventions: internal gates are AND / OR / MOD(p) of unbounded
fan-in; leaves are (possibly negated) input bits and constants.  A MOD(p)
gate outputs 1 iff the number of 1-valued inputs (with multiplicity) is
congruent 0 mod p.  Size counts internal gates only; depth is the longest
leaf-to-output path.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .structures import Signature, Structure, neighborhood, find_isomorphism
from .logic import (
    And,
    Atom,
    BUILTIN_NUMERIC,
    Embedding,
    Equal,
    Exists,
    Forall,
    Formula,
    ModExists,
    Not,
    NumAtom,
    Or,
    free_vars,
)


class CircuitError(ValueError):
    pass


_LEAF_KINDS = ("IN", "NIN", "C0", "C1")
_GATE_KINDS = ("AND", "OR", "MOD")


@dataclass(frozen=True)
class Gate:
    kind: str
    children: tuple[int, ...] = ()
    p: int = 0
    index: int = 0


@dataclass(frozen=True)
class Circuit:
    input_width: int
    gates: tuple[Gate, ...]
    output: int

    def __post_init__(self):
        if not (0 <= self.output < len(self.gates)):
            raise CircuitError("output id out of range")
        for gid, g in enumerate(self.gates):
            if g.kind in _LEAF_KINDS:
                if g.children:
                    raise CircuitError(f"leaf gate {gid} has children")
                if g.kind in ("IN", "NIN") and not (1 <= g.index <= self.input_width):
                    raise CircuitError(f"gate {gid} reads input {g.index} outside 1..{self.input_width}")
            elif g.kind in _GATE_KINDS:
                if any(not (0 <= ch < gid) for ch in g.children):
                    raise CircuitError(f"gate {gid} has a forward or dangling edge")
                if g.kind == "MOD" and g.p < 2:
                    raise CircuitError(f"MOD gate {gid} needs p >= 2")
            else:
                raise CircuitError(f"unknown gate kind {g.kind!r}")


class CircuitBuilder:
    """Hash-consing builder.  and_/or_ fold constants; raw_gate does not."""

    def __init__(self, input_width: int):
        self.input_width = input_width
        self.gates: list[Gate] = []
        self._memo: dict[tuple, int] = {}

    def _node(self, gate: Gate, cons: bool = True) -> int:
        key = (gate.kind, gate.children, gate.p, gate.index)
        if cons and key in self._memo:
            return self._memo[key]
        self.gates.append(gate)
        gid = len(self.gates) - 1
        if cons:
            self._memo[key] = gid
        return gid

    def const(self, bit: int) -> int:
        return self._node(Gate("C1" if bit else "C0"))

    def input(self, nu: int) -> int:
        if not (1 <= nu <= self.input_width):
            raise CircuitError(f"input index {nu} outside 1..{self.input_width}")
        return self._node(Gate("IN", index=nu))

    def neg_input(self, nu: int) -> int:
        if not (1 <= nu <= self.input_width):
            raise CircuitError(f"input index {nu} outside 1..{self.input_width}")
        return self._node(Gate("NIN", index=nu))

    def _is_const(self, gid: int, bit: int) -> bool:
        return self.gates[gid].kind == ("C1" if bit else "C0")

    def and_(self, children: Iterable[int]) -> int:
        kept = []
        for ch in children:
            if self._is_const(ch, 0):
                return self.const(0)
            if not self._is_const(ch, 1):
                kept.append(ch)
        if not kept:
            return self.const(1)
        return self._node(Gate("AND", tuple(sorted(kept))))

    def or_(self, children: Iterable[int]) -> int:
        kept = []
        for ch in children:
            if self._is_const(ch, 1):
                return self.const(1)
            if not self._is_const(ch, 0):
                kept.append(ch)
        if not kept:
            return self.const(0)
        return self._node(Gate("OR", tuple(sorted(kept))))

    def mod(self, p: int, children: Iterable[int]) -> int:
        return self._node(Gate("MOD", tuple(sorted(children)), p=p))

    def raw_gate(self, kind: str, children: Iterable[int] = (), p: int = 0, index: int = 0) -> int:
        return self._node(Gate(kind, tuple(children), p=p, index=index), cons=False)

    def finish(self, output: int) -> Circuit:
        """Prune to the nodes reachable from the output and relabel."""
        live = set()
        stack = [output]
        while stack:
            gid = stack.pop()
            if gid in live:
                continue
            live.add(gid)
            stack.extend(self.gates[gid].children)
        order = sorted(live)
        remap = {old: new for new, old in enumerate(order)}
        gates = tuple(
            Gate(g.kind, tuple(remap[ch] for ch in g.children), g.p, g.index)
            for g in (self.gates[old] for old in order)
        )
        return Circuit(self.input_width, gates, remap[output])


def eval_circuit(c: Circuit, bits: str) -> bool:
    """Topological evaluation on a '0'/'1' string of length input_width."""
    if len(bits) != c.input_width:
        raise CircuitError(f"got {len(bits)} input bits, circuit wants {c.input_width}")
    if any(b not in "01" for b in bits):
        raise CircuitError("input bits must be '0'/'1'")
    values = [False] * len(c.gates)
    for gid, g in enumerate(c.gates):
        kind = g.kind
        if kind == "AND":
            values[gid] = all(values[ch] for ch in g.children)
        elif kind == "OR":
            values[gid] = any(values[ch] for ch in g.children)
        elif kind == "MOD":
            values[gid] = sum(values[ch] for ch in g.children) % g.p == 0
        elif kind == "IN":
            values[gid] = bits[g.index - 1] == "1"
        elif kind == "NIN":
            values[gid] = bits[g.index - 1] == "0"
        else:
            values[gid] = kind == "C1"
    return values[c.output]


def circuit_stats(c: Circuit) -> tuple[int, int]:
    """(depth, size): longest leaf-to-output path length, internal gate count."""
    depth = [0] * len(c.gates)
    for gid, g in enumerate(c.gates):
        if g.children:
            depth[gid] = 1 + max(depth[ch] for ch in g.children)
        elif g.kind in _GATE_KINDS:
            depth[gid] = 1  # childless internal gate still occupies a level
    size = sum(1 for g in c.gates if g.kind in _GATE_KINDS)
    return depth[c.output], size


# ---------------------------------------------------------------------------
# Circuit text format


def format_circuit(c: Circuit) -> str:
    lines = []
    for gid, g in enumerate(c.gates):
        if g.kind == "MOD":
            head = f"MOD{g.p}"
        elif g.kind == "IN":
            head = f"IN{g.index}"
        elif g.kind == "NIN":
            head = f"NIN{g.index}"
        else:
            head = g.kind
        parts = [str(gid), head] + [str(ch) for ch in g.children]
        lines.append(" ".join(parts))
    lines.append(f"output {c.output}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str, input_width: Optional[int] = None) -> Circuit:
    """Parse the one-gate-per-line format.  Width is taken from the largest
    referenced input when not given explicitly."""
    gates: list[Gate] = []
    ids: dict[int, int] = {}
    output = None
    max_input = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "output":
            if len(parts) != 2 or not parts[1].isdigit() or output is not None:
                raise CircuitError(f"line {lineno}: bad output line")
            if int(parts[1]) not in ids:
                raise CircuitError(f"line {lineno}: output references undefined gate")
            output = ids[int(parts[1])]
            continue
        if output is not None:
            raise CircuitError(f"line {lineno}: gate line after output line")
        if len(parts) < 2 or not parts[0].isdigit():
            raise CircuitError(f"line {lineno}: expected 'gid KIND args...'")
        gid, kind = int(parts[0]), parts[1]
        if gid in ids:
            raise CircuitError(f"line {lineno}: duplicate gate id {gid}")
        args = parts[2:]
        if kind in ("AND", "OR") or kind.startswith("MOD"):
            children = []
            for a in args:
                if not a.isdigit() or int(a) not in ids:
                    raise CircuitError(f"line {lineno}: child {a!r} not yet defined")
                children.append(ids[int(a)])
            if kind.startswith("MOD"):
                ptext = kind[3:]
                if not ptext.isdigit() or int(ptext) < 2:
                    raise CircuitError(f"line {lineno}: bad modulus in {kind!r}")
                gates.append(Gate("MOD", tuple(children), p=int(ptext)))
            else:
                gates.append(Gate(kind, tuple(children)))
        elif kind.startswith("IN") or kind.startswith("NIN"):
            k = "NIN" if kind.startswith("NIN") else "IN"
            itext = kind[len(k):]
            if args or not itext.isdigit() or int(itext) < 1:
                raise CircuitError(f"line {lineno}: bad input gate {kind!r}")
            max_input = max(max_input, int(itext))
            gates.append(Gate(k, index=int(itext)))
        elif kind in ("C0", "C1"):
            if args:
                raise CircuitError(f"line {lineno}: constant gate takes no args")
            gates.append(Gate(kind))
        else:
            raise CircuitError(f"line {lineno}: unknown gate kind {kind!r}")
        ids[gid] = len(gates) - 1
    if output is None:
        raise CircuitError("missing final 'output gid' line")
    width = input_width if input_width is not None else max_input
    if width < max_input:
        raise CircuitError(f"explicit width {width} below referenced input {max_input}")
    return Circuit(width, tuple(gates), output)


# ---------------------------------------------------------------------------
# Rep encoding


@dataclass(frozen=True)
class RepLayout:
    """Bit layout of Rep(structure, K-tuple): one block of n^arity bits per
    relation in signature order (tuple-lexicographic by numeric position),
    then K one-hot anchor blocks of width n."""

    signature: Signature
    n: int
    k: int

    @property
    def length(self) -> int:
        return sum(self.n ** arity for _, arity in self.signature.relations) + self.k * self.n

    def relation_offset(self, name: str) -> int:
        off = 0
        for rname, arity in self.signature.relations:
            if rname == name:
                return off
            off += self.n ** arity
        raise CircuitError(f"unknown relation {name!r}")

    def relation_bit(self, name: str, positions: Sequence[int]) -> int:
        """0-based bit index for the tuple with the given numeric positions."""
        arity = self.signature.arity(name)
        if len(positions) != arity:
            raise CircuitError(f"tuple arity mismatch for {name!r}")
        rank = 0
        for p in positions:
            if not (0 <= p < self.n):
                raise CircuitError(f"position {p} out of range")
            rank = rank * self.n + p
        return self.relation_offset(name) + rank

    def anchor_bit(self, i: int, position: int) -> int:
        if not (0 <= i < self.k and 0 <= position < self.n):
            raise CircuitError("anchor bit out of range")
        base = sum(self.n ** arity for _, arity in self.signature.relations)
        return base + i * self.n + position


def rep_encoding(s: Structure, iota: Embedding, anchors: Sequence[int] = ()) -> str:
    """Bitstring Rep(s, anchors) of length layout.length under iota."""
    layout = RepLayout(s.signature, s.size, len(anchors))
    bits = ["0"] * layout.length
    for (name, _), rel in zip(s.signature.relations, s.relations):
        for t in rel:
            bits[layout.relation_bit(name, tuple(iota.mapping[e] for e in t))] = "1"
    for i, a in enumerate(anchors):
        bits[layout.anchor_bit(i, iota.mapping[a])] = "1"
    return "".join(bits)


# ---------------------------------------------------------------------------
# Formula -> circuit compiler


DEFAULT_GATE_LIMIT = 2_000_000


def compile_formula(
    phi: Formula,
    n: int,
    signature: Signature,
    K: Optional[int] = None,
    numpreds=None,
    var_order: Optional[Sequence[str]] = None,
    gate_limit: int = DEFAULT_GATE_LIMIT,
) -> Circuit:
    """Compile phi into a circuit over Rep inputs for universe size n.

    One gate per (subformula, assignment of its free variables to numeric
    positions), hash-consed.  Quantifiers become OR/AND over the n positions;
    a counting quantifier for residue i mod p becomes a MOD(p) gate over the
    n child gates padded with (p - i) mod p constant-1 gates.  Equalities and
    numerical atoms are constant-folded (positions are compile-time
    constants); negation is pushed to the leaves, with negated counting
    quantifiers expanded over the complementary residues.  Free variables are
    read from the one-hot anchor blocks by OR-of-AND selection.

    Gate count grows like n^(max live variables); compilation aborts with a
    clear error beyond gate_limit instead of thrashing.
    """
    preds = dict(BUILTIN_NUMERIC)
    preds.update(numpreds or {})
    fv = free_vars(phi)
    if var_order is None:
        var_order = tuple(sorted(fv))
    elif set(var_order) != fv:
        raise CircuitError("var_order must list exactly the free variables")
    if K is not None and K != len(var_order):
        raise CircuitError(f"K={K} but the formula has {len(var_order)} free variables")
    k = len(var_order)
    layout = RepLayout(signature, n, k)
    builder = CircuitBuilder(layout.length)

    freecache: dict[int, tuple[str, ...]] = {}

    def freeof(node: Formula) -> tuple[str, ...]:
        got = freecache.get(id(node))
        if got is None:
            got = tuple(sorted(free_vars(node)))
            freecache[id(node)] = got
        return got

    memo: dict[tuple, int] = {}

    def gate(node: Formula, env: dict[str, int], negated: bool) -> int:
        if isinstance(node, Equal):
            return builder.const((env[node.x] == env[node.y]) != negated)
        if isinstance(node, NumAtom):
            pred = preds.get(node.pred)
            if pred is None:
                raise CircuitError(f"unknown numerical predicate {node.pred!r}")
            value = bool(pred.holds(*(env[v] for v in node.vars)))
            return builder.const(value != negated)
        if isinstance(node, Atom):
            bit = layout.relation_bit(node.rel, tuple(env[v] for v in node.vars)) + 1
            return builder.neg_input(bit) if negated else builder.input(bit)
        if isinstance(node, Not):
            return gate(node.sub, env, not negated)

        key = (id(node), negated) + tuple(env[v] for v in freeof(node))
        got = memo.get(key)
        if got is not None:
            return got
        if len(memo) + len(builder.gates) > gate_limit:
            raise CircuitError(
                f"compilation exceeds {gate_limit} gates at n={n}: "
                "too many simultaneously live variables for this universe size"
            )

        if isinstance(node, (And, Or)):
            children = [gate(sub, env, negated) for sub in node.subs]
            conj = isinstance(node, And) != negated
            out = builder.and_(children) if conj else builder.or_(children)
        elif isinstance(node, (Exists, Forall)):
            children = []
            for a in range(n):
                env2 = dict(env)
                env2[node.var] = a
                children.append(gate(node.sub, env2, negated))
            disj = isinstance(node, Exists) != negated
            out = builder.or_(children) if disj else builder.and_(children)
        elif isinstance(node, ModExists):
            children = []
            for a in range(n):
                env2 = dict(env)
                env2[node.var] = a
                children.append(gate(node.sub, env2, False))
            if not negated:
                pads = [builder.const(1)] * ((node.p - node.i) % node.p)
                out = builder.mod(node.p, children + pads)
            else:
                alts = []
                for j in range(node.p):
                    if j == node.i:
                        continue
                    pads = [builder.const(1)] * ((node.p - j) % node.p)
                    alts.append(builder.mod(node.p, children + pads))
                out = builder.or_(alts)
        else:
            raise CircuitError(f"unknown formula node {node!r}")
        memo[key] = out
        return out

    if k == 0:
        return builder.finish(gate(phi, {}, False))

    selections = []
    for values in itertools.product(range(n), repeat=k):
        env = dict(zip(var_order, values))
        sels = [
            builder.input(layout.anchor_bit(i, v) + 1) for i, v in enumerate(values)
        ]
        selections.append(builder.and_(sels + [gate(phi, env, False)]))
    return builder.finish(builder.or_(selections))


# ---------------------------------------------------------------------------
# Input substitution (transformation 1 machinery)

SubstEntry = tuple  # ("const", 0|1) | ("var", nu) | ("nvar", nu)


def _negate_entry(entry: SubstEntry) -> SubstEntry:
    tag, value = entry
    if tag == "const":
        return ("const", 1 - value)
    if tag == "var":
        return ("nvar", value)
    if tag == "nvar":
        return ("var", value)
    raise CircuitError(f"bad substitution entry {entry!r}")


def substitute_inputs(c: Circuit, subst: Sequence[SubstEntry], new_width: int) -> Circuit:
    """Rewrite every input leaf through the substitution; the internal gate
    DAG is copied verbatim, so depth and size are unchanged."""
    if len(subst) != c.input_width:
        raise CircuitError(f"substitution covers {len(subst)} of {c.input_width} inputs")

    builder = CircuitBuilder(new_width)

    def render(entry: SubstEntry) -> int:
        tag, value = entry
        if tag == "const":
            return builder.raw_gate("C1" if value else "C0")
        if tag == "var":
            if not (1 <= value <= new_width):
                raise CircuitError(f"substituted input {value} outside 1..{new_width}")
            return builder.raw_gate("IN", index=value)
        if tag == "nvar":
            if not (1 <= value <= new_width):
                raise CircuitError(f"substituted input {value} outside 1..{new_width}")
            return builder.raw_gate("NIN", index=value)
        raise CircuitError(f"bad substitution entry {entry!r}")

    mapping = {}
    for gid, g in enumerate(c.gates):
        if g.kind == "IN":
            mapping[gid] = render(subst[g.index - 1])
        elif g.kind == "NIN":
            mapping[gid] = render(_negate_entry(subst[g.index - 1]))
        elif g.kind in ("C0", "C1"):
            mapping[gid] = builder.raw_gate(g.kind)
        else:
            mapping[gid] = builder.raw_gate(
                g.kind, tuple(mapping[ch] for ch in g.children), p=g.p
            )
    return builder.finish(mapping[c.output])


# ---------------------------------------------------------------------------
# Transformation 1: rotation-of-anchors substitution


class NeighborhoodPreconditionError(CircuitError):
    pass


def _flat(anchors: Sequence[Sequence[int]]) -> tuple[int, ...]:
    return tuple(e for a in anchors for e in a)


def _shells_and_isos(s: Structure, anchors, m):
    """Shell map {element: (anchor index, distance)} for distances <= m plus
    the anchor-to-next-anchor neighborhood isomorphisms; validates that the
    m-neighborhoods are pairwise disjoint and isomorphic."""
    from .structures import distances_from

    t = len(anchors)
    nbhds = [neighborhood(s, a, m) for a in anchors]
    shell: dict[int, tuple[int, int]] = {}
    for j, (a, nb) in enumerate(zip(anchors, nbhds)):
        dist = distances_from(s, a)
        for e in nb.index_map:
            if e in shell:
                raise NeighborhoodPreconditionError(
                    f"element {e} lies in the {m}-neighborhoods of anchors {shell[e][0]} and {j}"
                )
            shell[e] = (j, int(dist[e]))
    pis = []
    for j in range(t):
        nb1, nb2 = nbhds[j], nbhds[(j + 1) % t]
        local = find_isomorphism(nb1.structure, nb1.anchor, nb2.structure, nb2.anchor)
        if local is None:
            raise NeighborhoodPreconditionError(
                f"{m}-neighborhoods of anchors {j} and {(j + 1) % t} are not isomorphic"
            )
        pis.append({nb1.index_map[a]: nb2.index_map[b] for a, b in local.items()})
    return shell, pis


def _classify_tuple(tpl, shell, m):
    """None if the tuple is unaffected; else (anchor index j, straddled shell
    boundary nu) meaning the tuple spans shells nu-1 and nu of anchor j."""
    spots = [shell.get(e) for e in tpl]
    if any(x is None for x in spots):
        return None
    dists = {d for _, d in spots}
    if len(dists) == 1:
        return None
    lo, hi = min(dists), max(dists)
    if hi != lo + 1 or hi > m:
        raise CircuitError(f"tuple {tpl} spans non-adjacent shells {sorted(dists)}")
    js = {j for j, _ in spots}
    if len(js) != 1:
        raise CircuitError(f"straddling tuple {tpl} touches two anchor neighborhoods")
    return js.pop(), hi


def lemma1_shifted_structure(
    s: Structure, anchors: Sequence[Sequence[int]], w: str
) -> Structure:
    """The rewired structure A_w: every relation tuple straddling shells
    nu-1, nu of some anchor has its nu-shell components pushed through the
    anchor-to-next-anchor isomorphism whenever bit nu of w is 1; all other
    tuples are unchanged.  If the number of 1-bits is i mod t, the result
    with the original anchor tuple is isomorphic to the original structure
    with the anchors rotated by i."""
    anchors = [tuple(a) for a in anchors]
    m = len(w)
    shell, pis = _shells_and_isos(s, anchors, m)
    table = []
    for rel in s.relations:
        new_rel = set()
        for tpl in rel:
            spot = _classify_tuple(tpl, shell, m)
            if spot is None:
                new_rel.add(tpl)
                continue
            j, nu = spot
            if w[nu - 1] == "1":
                pi = pis[j]
                new_rel.add(tuple(pi[e] if shell[e][1] == nu else e for e in tpl))
            else:
                new_rel.add(tpl)
        table.append(frozenset(new_rel))
    return Structure(s.signature, s.size, tuple(table))


def lemma1_substitution(
    s: Structure, anchors: Sequence[Sequence[int]], m: int
) -> list[SubstEntry]:
    """Input substitution turning a Rep-input circuit into an m-bit circuit
    that simulates it on Rep(A_w, original anchors) under the identity
    embedding: bits of straddling tuples become the negated w-bit of their
    shell boundary, bits of their rewired images become the w-bit itself,
    and every remaining bit is frozen to its value in Rep(A, anchors)."""
    anchors = [tuple(a) for a in anchors]
    shell, pis = _shells_and_isos(s, anchors, m)
    k = len(anchors[0])
    if any(len(a) != k for a in anchors):
        raise CircuitError("anchor tuples must share one width")
    layout = RepLayout(s.signature, s.size, k * len(anchors))
    identity = Embedding.identity(s.size)
    rep0 = rep_encoding(s, identity, _flat(anchors))
    subst: list[SubstEntry] = [("const", int(b)) for b in rep0]
    for (name, _), rel in zip(s.signature.relations, s.relations):
        for tpl in rel:
            spot = _classify_tuple(tpl, shell, m)
            if spot is None:
                continue
            j, nu = spot
            image = tuple(pis[j][e] if shell[e][1] == nu else e for e in tpl)
            subst[layout.relation_bit(name, tpl)] = ("nvar", nu)
            subst[layout.relation_bit(name, image)] = ("var", nu)
    return subst


def lemma1_transform(
    c: Circuit,
    s: Structure,
    anchors: Sequence[Sequence[int]],
    m: int,
    spot_check: bool = True,
    spot_check_samples: int = 3,
    seed: int = 0,
) -> Circuit:
    """Collapse a Rep-input circuit to an m-bit circuit whose answer depends
    only on the 1-count of its input mod t (t = number of anchor tuples),
    accepting count 0 and rejecting count 1.

    The circuit hypotheses (embedding-independence on the anchor rotations;
    accept rotation 0, reject rotation 1) are spot-checked on the identity
    embedding plus a few seeded samples.
    """
    anchors = [tuple(a) for a in anchors]
    t = len(anchors)
    if t < 2:
        raise CircuitError("need at least two anchor tuples")
    k = len(anchors[0])
    layout = RepLayout(s.signature, s.size, k * t)
    if c.input_width != layout.length:
        raise CircuitError(
            f"circuit width {c.input_width} does not match Rep length {layout.length}"
        )
    if spot_check:
        rng = random.Random(seed)
        embeddings = [Embedding.identity(s.size)]
        for _ in range(spot_check_samples):
            perm = list(range(s.size))
            rng.shuffle(perm)
            embeddings.append(Embedding(tuple(perm)))
        for i in range(t):
            rotated = _flat(anchors[i:] + anchors[:i])
            values = {
                eval_circuit(c, rep_encoding(s, e, rotated)) for e in embeddings
            }
            if len(values) != 1:
                raise CircuitError(
                    f"hypothesis (1) fails: rotation {i} is embedding-dependent"
                )
            value = values.pop()
            if i == 0 and not value:
                raise CircuitError("hypothesis (2) fails: rotation 0 rejected")
            if i == 1 and value:
                raise CircuitError("hypothesis (2) fails: rotation 1 accepted")
    return substitute_inputs(c, lemma1_substitution(s, anchors, m), m)


# ---------------------------------------------------------------------------
# Transformation 2: exact residue counter


def primitive_root(b: str) -> tuple[str, int]:
    """Shortest z with b = z^s; returns (z, s)."""
    if not b:
        raise CircuitError("primitive_root of the empty word")
    n = len(b)
    for d in range(1, n + 1):
        if n % d == 0 and b[:d] * (n // d) == b:
            return b[:d], n // d
    raise AssertionError("unreachable")


class Lemma2PreconditionError(CircuitError):
    pass


def zero_fill_rails(
    builder: CircuitBuilder, j: int, ins: Sequence[int], nins: Sequence[int]
) -> tuple[list[int], list[int]]:
    """Gate rails computing w with its first j zeros replaced by ones.

    Returns (positive rail, negated rail) node ids per position; correct on
    inputs with at least j zeros.  Position i stays 0 only when at least j
    zeros occur strictly before it.
    """
    m = len(ins)
    pos_rail, neg_rail = [], []
    for i in range(m):
        before = range(i)
        few = []
        for size in range(j):
            for I in itertools.combinations(before, size):
                chosen = set(I)
                few.append(
                    builder.and_(
                        [nins[x] for x in I]
                        + [ins[x] for x in before if x not in chosen]
                    )
                )
        pos_rail.append(
            builder.or_([ins[i], builder.and_([nins[i], builder.or_(few)])])
        )
        at_least = [
            builder.and_([nins[x] for x in I])
            for I in itertools.combinations(before, j)
        ]
        neg_rail.append(builder.and_([nins[i], builder.or_(at_least)]))
    return pos_rail, neg_rail


def zero_fill_circuits(m: int, j: int) -> tuple[list[Circuit], list[Circuit]]:
    """Single-output circuits for each rail position (test convenience)."""
    builder = CircuitBuilder(m)
    ins = [builder.input(i + 1) for i in range(m)]
    nins = [builder.neg_input(i + 1) for i in range(m)]
    pos, neg = zero_fill_rails(builder, j, ins, nins)
    return [builder.finish(g) for g in pos], [builder.finish(g) for g in neg]


def _instantiate(builder: CircuitBuilder, c: Circuit, pos, neg) -> int:
    """Copy c into the builder with its input leaves replaced by gate rails."""
    mapping = {}
    for gid, g in enumerate(c.gates):
        if g.kind == "IN":
            mapping[gid] = pos[g.index - 1]
        elif g.kind == "NIN":
            mapping[gid] = neg[g.index - 1]
        elif g.kind in ("C0", "C1"):
            mapping[gid] = builder.const(g.kind == "C1")
        elif g.kind == "AND":
            mapping[gid] = builder.and_(mapping[ch] for ch in g.children)
        elif g.kind == "OR":
            mapping[gid] = builder.or_(mapping[ch] for ch in g.children)
        else:
            mapping[gid] = builder.mod(g.p, (mapping[ch] for ch in g.children))
    return mapping[c.output]


def lemma2_transform(
    ctilde: Circuit, t: int, m: int, verify_hypothesis: bool = True
) -> tuple[Circuit, int]:
    """Convert a residue-dependent circuit into one accepting exactly the
    inputs whose 1-count is divisible by r, for the factor r of t determined
    by the circuit's residue signature.

    The signature b (acceptance per 1-count residue) is computed by
    evaluating the circuit on the canonical strings 1^j 0^(m-j); its
    primitive root z gives r = |z|.  The output is the disjunction of

    * an all-residues branch: at least t-1 zeros present, and for every j
      with b_j = 1 the circuit accepts after the first j zeros are replaced
      by ones (the replaced-zeros pattern is always a rotation of b, so
      covering the 1-positions of b already forces pattern = b), and
    * a few-zeros branch: exactly j zeros for some j < t-1 with m - j
      divisible by r.

    Depth grows by at most 6 and size to at most t*size + 2*m^t.
    """
    if m <= 9:
        raise Lemma2PreconditionError("m > 9 required")
    if not (2 <= t <= m):
        raise Lemma2PreconditionError(f"need 2 <= t <= m, got t={t}, m={m}")
    if ctilde.input_width != m:
        raise CircuitError(f"circuit width {ctilde.input_width}, expected {m}")

    b = "".join(
        "1" if eval_circuit(ctilde, "1" * j + "0" * (m - j)) else "0" for j in range(t)
    )
    if not b.startswith("10"):
        raise Lemma2PreconditionError(
            f"residue signature {b!r} violates the accept-0/reject-1 hypothesis"
        )
    if verify_hypothesis:
        if m > 20:
            raise Lemma2PreconditionError(
                "exhaustive hypothesis check infeasible; pass verify_hypothesis=False"
            )
        for x in range(2 ** m):
            w = format(x, f"0{m}b")
            if eval_circuit(ctilde, w) != (b[w.count("1") % t] == "1"):
                raise Lemma2PreconditionError(
                    f"acceptance of {w} is not determined by its 1-count mod {t}"
                )

    z, _ = primitive_root(b)
    r = len(z)

    builder = CircuitBuilder(m)
    ins = [builder.input(i + 1) for i in range(m)]
    nins = [builder.neg_input(i + 1) for i in range(m)]

    branches = [
        builder.or_(
            builder.and_([nins[x] for x in I])
            for I in itertools.combinations(range(m), t - 1)
        )
    ]
    for j in range(t):
        if b[j] == "0":
            continue
        if j == 0:
            branches.append(_instantiate(builder, ctilde, ins, nins))
        else:
            pos, neg = zero_fill_rails(builder, j, ins, nins)
            branches.append(_instantiate(builder, ctilde, pos, neg))
    c_one = builder.and_(branches)

    exact_terms = []
    for j in range(t - 1):
        if (m - j) % r != 0:
            continue
        for I in itertools.combinations(range(m), j):
            chosen = set(I)
            exact_terms.append(
                builder.and_(
                    [nins[x] for x in I]
                    + [ins[x] for x in range(m) if x not in chosen]
                )
            )
    c_two = builder.or_(exact_terms)

    chat = builder.finish(builder.or_([c_one, c_two]))

    d, size = circuit_stats(ctilde)
    dhat, shat = circuit_stats(chat)
    if dhat > d + 6 or shat > t * size + 2 * m ** t:
        raise AssertionError(
            f"stats bound violated: depth {dhat} vs {d + 6}, size {shat} vs {t * size + 2 * m ** t}"
        )
    return chat, r
