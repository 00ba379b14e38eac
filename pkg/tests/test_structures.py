import itertools
import random

import pytest

from modloc import (
    INFINITY,
    Signature,
    StructureError,
    canonical_form,
    disjoint_union,
    distances_from,
    find_isomorphism,
    format_structure,
    gaifman_graph,
    gen_cycles,
    gen_hose,
    gen_string_structure,
    gen_torus,
    isomorphic,
    make_structure,
    neighborhood,
    parse_structure,
    relabel,
    TorusSpec,
    weak_gaifman_word,
)

SIG_E = Signature.from_spec("E/2")


def undirected_edges(s):
    adj = gaifman_graph(s)
    return {frozenset((a, b)) for a in range(s.size) for b in adj[a]}


def random_structure(rng, n, sig=None):
    sig = sig or Signature.from_spec("E/2 P/1")
    rel = {}
    for name, arity in sig.relations:
        tuples = [
            t
            for t in itertools.product(range(n), repeat=arity)
            if rng.random() < (0.3 if arity > 1 else 0.5)
        ]
        rel[name] = tuples
    return make_structure(sig, n, rel)


# ---------------------------------------------------------------------------
# signatures and construction


def test_signature_validation():
    with pytest.raises(StructureError):
        Signature((("E", 2), ("E", 1)))
    with pytest.raises(StructureError):
        Signature((("E", 0),))
    assert Signature.from_spec("E/2 P0/1").names == ("E", "P0")


def test_structure_validation():
    with pytest.raises(StructureError):
        make_structure(SIG_E, 2, {"E": [(0, 2)]})
    with pytest.raises(StructureError):
        make_structure(SIG_E, 2, {"E": [(0,)]})
    with pytest.raises(StructureError):
        make_structure(SIG_E, 0, {})
    with pytest.raises(StructureError):
        make_structure(SIG_E, 2, {"Q": [(0, 0)]})


# ---------------------------------------------------------------------------
# gaifman graph


def test_gaifman_graph_directed_cycle_symmetrizes():
    s = gen_cycles([3])
    assert undirected_edges(s) == {
        frozenset((0, 1)),
        frozenset((1, 2)),
        frozenset((0, 2)),
    }


def test_gaifman_graph_empty():
    s = make_structure(SIG_E, 3, {})
    assert undirected_edges(s) == set()


def test_gaifman_graph_hose_adjacency():
    # brute-force from the generated tuple list: (0,0)=0 and (1,0)=4 are
    # adjacent because ((0,0),(1,0)) is an E1-edge
    s, a, b = gen_hose(3, 4)
    cooccur = set()
    for rel in s.relations:
        for t in rel:
            for x, y in itertools.combinations(set(t), 2):
                cooccur.add(frozenset((x, y)))
    assert frozenset((a, b)) in cooccur
    assert undirected_edges(s) == cooccur


# ---------------------------------------------------------------------------
# distances


def test_distances_path():
    s = make_structure(SIG_E, 3, {"E": [(0, 1), (1, 2)]})
    assert distances_from(s, (0,)) == {0: 0, 1: 1, 2: 2}


def test_distances_disconnected():
    s = gen_cycles([3, 3])
    d = distances_from(s, (0,))
    assert all(d[e] == INFINITY for e in range(3, 6))


def test_distances_torus_diameter():
    s = gen_torus(TorusSpec(3, 4, 0))
    d = distances_from(s, (0,))
    finite = [v for v in d.values() if v != INFINITY]
    assert len(finite) == 12
    assert max(finite) <= 3  # floor(h/2) + floor(w/2)


def test_distances_matrix_power_oracle():
    # elements at distance <= r are exactly the nonzero entries of (I+A)^r
    rng = random.Random(5)
    for _ in range(25):
        n = rng.randint(1, 6)
        s = random_structure(rng, n)
        adj = gaifman_graph(s)
        mat = [[1 if i == j or j in adj[i] else 0 for j in range(n)] for i in range(n)]
        anchor = (rng.randrange(n),)
        reach = {anchor[0]}
        cur = [1 if i == anchor[0] else 0 for i in range(n)]
        d = distances_from(s, anchor)
        for r in range(n + 1):
            ball = {e for e, dist in d.items() if dist <= r}
            assert ball == {i for i in range(n) if cur[i]}
            assert set(neighborhood(s, anchor, r).index_map) == ball
            cur = [
                1 if any(cur[k] and mat[k][i] for k in range(n)) else 0
                for i in range(n)
            ]


def test_distances_validation():
    s = gen_cycles([3])
    with pytest.raises(StructureError):
        distances_from(s, ())
    with pytest.raises(StructureError):
        distances_from(s, (7,))


# ---------------------------------------------------------------------------
# neighborhoods


def test_neighborhood_radius_zero():
    s = make_structure(SIG_E, 4, {})
    nb = neighborhood(s, (2,), 0)
    assert nb.structure.size == 1
    assert nb.anchor == (0,)
    assert nb.index_map == (2,)


def test_string_witness_neighborhoods_disjoint_and_isomorphic():
    # 1-based positions l and 3l; radius l-1
    ell = 3
    word, a, b = weak_gaifman_word(ell)
    s = gen_string_structure(word, "01")
    na = neighborhood(s, (a,), ell - 1)
    nb = neighborhood(s, (b,), ell - 1)
    assert not (set(na.index_map) & set(nb.index_map))
    assert isomorphic(na, nb)


@pytest.mark.parametrize("h,w", [(2, 3), (3, 4)])
def test_hose_neighborhoods_isomorphic(h, w):
    s, a, b = gen_hose(h, w)
    na = neighborhood(s, (a,), w - 2)
    nb = neighborhood(s, (b,), w - 2)
    assert isomorphic(na, nb)
    assert find_isomorphism(na.structure, na.anchor, nb.structure, nb.anchor)


# ---------------------------------------------------------------------------
# isomorphism


def test_isomorphic_identity_and_size_mismatch():
    s = make_structure(SIG_E, 3, {"E": [(0, 1), (1, 2)]})
    nb = neighborhood(s, (0,), 5)
    assert isomorphic(nb, nb)
    s4 = make_structure(SIG_E, 4, {"E": [(0, 1), (1, 2), (2, 3)]})
    assert not isomorphic(nb, neighborhood(s4, (0,), 5))


def test_isomorphic_respects_anchor():
    s = make_structure(SIG_E, 3, {"E": [(0, 1), (1, 2)]})
    n0 = neighborhood(s, (0,), 5)
    n2 = neighborhood(s, (2,), 5)
    n1 = neighborhood(s, (1,), 5)
    assert not isomorphic(n0, n2)  # source vs sink anchor on a directed path
    assert not isomorphic(n0, n1)


def test_isomorphic_is_equivalence_relation():
    rng = random.Random(11)
    samples = []
    for _ in range(12):
        n = rng.randint(2, 6)
        s = random_structure(rng, n)
        samples.append(neighborhood(s, (rng.randrange(n),), rng.randint(0, 3)))
    for na in samples:
        assert isomorphic(na, na)
    for na, nb in itertools.combinations(samples, 2):
        ab = isomorphic(na, nb)
        assert ab == isomorphic(nb, na)
    for na, nb, nc in itertools.combinations(samples, 3):
        if isomorphic(na, nb) and isomorphic(nb, nc):
            assert isomorphic(na, nc)


def test_find_isomorphism_returns_valid_map():
    s1 = gen_cycles([4])
    s2 = relabel(s1, [2, 3, 0, 1])
    mapping = find_isomorphism(s1, (0,), s2, (2,))
    assert mapping is not None
    for u, v in s1.relation("E"):
        assert (mapping[u], mapping[v]) in s2.relation("E")


# ---------------------------------------------------------------------------
# canonical form


def test_canonical_form_relabel_invariance():
    s = make_structure(SIG_E, 4, {"E": [(0, 1), (1, 2), (2, 3)]})
    code = canonical_form(neighborhood(s, (1,), 4))
    s2 = relabel(s, [3, 1, 0, 2])
    code2 = canonical_form(neighborhood(s2, (1,), 4))
    assert code == code2


def test_canonical_form_path_vs_cycle():
    path = make_structure(SIG_E, 4, {"E": [(0, 1), (1, 2), (2, 3)]})
    cyc = gen_cycles([4])
    assert canonical_form(neighborhood(path, (0,), 4)) != canonical_form(
        neighborhood(cyc, (0,), 4)
    )


def test_canonical_form_matches_backtracking_exhaustively_small():
    # all {E/2}-structures with n <= 2, every anchor, cross-checked pairwise
    anchored = []
    for n in (1, 2):
        pairs = list(itertools.product(range(n), repeat=2))
        for bits in itertools.product([0, 1], repeat=len(pairs)):
            s = make_structure(SIG_E, n, {"E": [t for t, b in zip(pairs, bits) if b]})
            for a in range(n):
                anchored.append(neighborhood(s, (a,), 2))
    codes = [canonical_form(nb) for nb in anchored]
    for (na, ca), (nb, cb) in itertools.combinations(zip(anchored, codes), 2):
        assert (ca == cb) == isomorphic(na, nb)


def test_canonical_form_matches_backtracking_random():
    rng = random.Random(23)
    anchored = []
    for _ in range(40):
        n = rng.randint(1, 6)
        s = random_structure(rng, n)
        k = rng.randint(0, 2)
        anchor = tuple(rng.randrange(n) for _ in range(k))
        if anchor:
            anchored.append(neighborhood(s, anchor, rng.randint(0, 2)))
        else:
            anchored.append(neighborhood(s, (rng.randrange(n),), n))
    codes = [canonical_form(nb) for nb in anchored]
    for (na, ca), (nb, cb) in itertools.combinations(zip(anchored, codes), 2):
        if len(na.anchor) != len(nb.anchor):
            continue
        assert (ca == cb) == isomorphic(na, nb)


# ---------------------------------------------------------------------------
# disjoint union


def test_disjoint_union_two_2cycles():
    s = disjoint_union(gen_cycles([2]), gen_cycles([2]))
    assert s.size == 4
    assert s.relation("E") == gen_cycles([2, 2]).relation("E")


def test_disjoint_union_isolated_point():
    s = gen_cycles([3])
    u = disjoint_union(s, make_structure(SIG_E, 1, {}))
    assert u.size == 4
    assert u.relation("E") == s.relation("E")


def test_disjoint_union_torus_twists_add():
    from modloc import torus_twist

    u = disjoint_union(gen_torus(TorusSpec(3, 4, 0)), gen_torus(TorusSpec(3, 4, 1)))
    # twist of the union is the sum of the parts' twists mod h
    t1 = torus_twist(gen_torus(TorusSpec(3, 4, 0)), 3, 4)
    t2 = torus_twist(gen_torus(TorusSpec(3, 4, 1)), 3, 4)
    assert (t1 + t2) % 3 == 1
    assert u.size == 24


def test_disjoint_union_keeps_parts_infinitely_far():
    rng = random.Random(3)
    for _ in range(10):
        s1 = random_structure(rng, rng.randint(1, 4))
        s2 = random_structure(rng, rng.randint(1, 4))
        u = disjoint_union(s1, s2)
        for a in range(s1.size):
            d = distances_from(u, (a,))
            assert all(d[b] == INFINITY for b in range(s1.size, u.size))


# ---------------------------------------------------------------------------
# text format


def test_parse_format_round_trip():
    s, _, _ = gen_hose(3, 4)
    text = format_structure(s)
    assert format_structure(parse_structure(text)) == text
    assert parse_structure(text) == s


def test_parse_missing_relation_is_empty():
    s = parse_structure("signature: E/2 P0/1\nuniverse: 3\nE: (0,1)\n")
    assert s.relation("P0") == frozenset()


def test_parse_errors():
    with pytest.raises(StructureError):
        parse_structure("universe: 3\n")
    with pytest.raises(StructureError):
        parse_structure("signature: E/2\nuniverse: 2\nQ: (0,1)\n")
    with pytest.raises(StructureError):
        parse_structure("signature: E/2\nuniverse: 2\nE: (0,1,2)\n")
    with pytest.raises(StructureError):
        parse_structure("signature: E/2\nuniverse: 2\nE: (0,1)\nE: (1,0)\n")
