"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured scope; stated runtime budgets are asserted directly."""

import io
import itertools
import random
import time

import pytest

from modloc import (
    CircuitBuilder,
    Embedding,
    Signature,
    TorusSpec,
    check_invariance,
    circuit_stats,
    cli,
    compile_formula,
    disjoint_union,
    eval_circuit,
    eval_formula,
    find_isomorphism,
    format_formula,
    format_structure,
    free_vars,
    gaifman_violations,
    gen_anchored_paths,
    gen_cycle_family,
    gen_cycles,
    gen_hanf_witness,
    gen_hose,
    gen_reach_family,
    gen_same_distance_family,
    gen_string_structure,
    gen_torus,
    gen_triangle_reach_family,
    hanf_equivalent,
    in_language_L,
    isomorphic,
    lemma1_shifted_structure,
    lemma1_transform,
    lemma2_transform,
    make_structure,
    neighborhood,
    paper_formula,
    parse_formula,
    primitive_root,
    query_eval,
    rep_encoding,
    shift_violations,
    torus_turn,
    torus_twist,
    weak_gaifman_violations,
    weak_gaifman_word,
)

SIG_E = Signature.from_spec("E/2")
IDENT = Embedding.identity


def partitions(n, largest=None):
    largest = largest or n
    if n == 0:
        yield []
        return
    for p in range(min(n, largest), 0, -1):
        for rest in partitions(n - p, p):
            yield [p] + rest


def flat(anchors):
    return tuple(e for a in anchors for e in a)


# ---------------------------------------------------------------------------


def test_c01_even_cycles_sentence_and_invariance():
    start = time.time()
    phi = paper_formula("even_cycles")
    evaluated = 0
    for n in range(1, 9):
        for part in partitions(n):
            s = gen_cycles(part)
            want = sum(1 for L in part if L % 2 == 0) % 2 == 0
            assert eval_formula(s, IDENT(n), phi) == want, part
            evaluated += 1
    checked = 0
    for n in range(1, 7):
        for part in partitions(n):
            verdict = check_invariance(gen_cycles(part), phi)
            assert verdict.invariant, part
            checked += 1
    elapsed = time.time() - start
    assert elapsed < 30.0
    print(
        f"PASS criterion 1: even-cycles agrees on {evaluated} cycle unions (n<=8), "
        f"invariant on {checked} unions (n<=6) in {elapsed:.1f}s"
    )


def test_c02_inversion_parity_law():
    start = time.time()
    total = 0
    for n in range(1, 8):
        for perm in itertools.permutations(range(n)):
            inversions = sum(
                1 for x, y in itertools.combinations(range(n), 2) if perm[y] < perm[x]
            )
            seen, even_cycles = set(), 0
            for v in range(n):
                if v in seen:
                    continue
                length = 0
                while v not in seen:
                    seen.add(v)
                    v = perm[v]
                    length += 1
                even_cycles += length % 2 == 0
            assert (inversions % 2) == (even_cycles % 2), perm
            total += 1
    elapsed = time.time() - start
    assert elapsed < 5.0
    print(f"PASS criterion 2: inversion parity law on {total} permutations in {elapsed:.1f}s")


def test_c03_torus_turn_claim():
    checked = 0
    for h in (2, 3):
        for w in (2, 3, 4):
            for k in range(h):
                s = gen_torus(TorusSpec(h, w, k))
                assert torus_twist(s, h, w) == k
                for combo in itertools.product(range(h), repeat=w):
                    reps = [i * w + j for j, i in enumerate(combo)]
                    assert torus_turn(s, h, w, reps) % h == k
                    checked += 1
    rng = random.Random(0xC0FFEE)
    for k in range(4):
        s = gen_torus(TorusSpec(4, 5, k))
        for _ in range(200):
            reps = [rng.randrange(4) * 5 + j for j in range(5)]
            assert torus_turn(s, 4, 5, reps) % 4 == k
            checked += 200
    print(f"PASS criterion 3: turn = twist mod h on {checked} representative lists, zero violations")


def _five_non_tori():
    base = gen_torus(TorusSpec(3, 2, 0))
    sig = base.signature
    e1, e2 = set(base.relation("E1")), set(base.relation("E2"))

    missing_e1 = make_structure(sig, 6, {"E1": e1 - {(0, 2)}, "E2": e2})
    wrong_height = gen_torus(TorusSpec(2, 2, 0))
    e2_identity = make_structure(sig, 6, {"E1": e1, "E2": [(v, v) for v in range(6)]})
    # wrap edges permuted between rows: E2 stays a fixed-point-free
    # permutation but no longer maps columns isomorphically
    twisted_wrap = (e2 - {(1, 0), (3, 2), (5, 4)}) | {(1, 0), (3, 4), (5, 2)}
    non_commuting = make_structure(sig, 6, {"E1": e1, "E2": twisted_wrap})
    double_out = make_structure(sig, 6, {"E1": e1, "E2": e2 | {(0, 3)}})
    return [missing_e1, wrong_height, e2_identity, non_commuting, double_out]


def test_c04_torus_sentence():
    phi3 = paper_formula("torus_twist", h=3)
    theta3 = paper_formula("torus_theta", h=3)
    for w in (2, 3, 4):
        s = gen_torus(TorusSpec(3, w, 0))
        assert eval_formula(s, IDENT(s.size), phi3), w
        for k in (1, 2):
            sk = gen_torus(TorusSpec(3, w, k))
            assert not eval_formula(sk, IDENT(sk.size), phi3), (w, k)
    unions = [
        disjoint_union(gen_torus(TorusSpec(3, 2, 1)), gen_torus(TorusSpec(3, 2, 2))),
        disjoint_union(gen_torus(TorusSpec(3, 3, 0)), gen_torus(TorusSpec(3, 2, 0))),
    ]
    for u in unions:
        assert eval_formula(u, IDENT(u.size), phi3)
    rejected = 0
    for s in _five_non_tori():
        assert not eval_formula(s, IDENT(s.size), theta3)
        rejected += 1
    assert rejected == 5
    print("PASS criterion 4: phi_3 accepts twist-0 tori/unions, rejects twists 1,2; theta_3 rejects 5 non-tori")


def test_c05_hose_gaifman_witness():
    s, a, b = gen_hose(3, 4)
    assert s.size == 12
    psi = paper_formula("hose_query", h=3)
    q = query_eval(s, psi)
    report = gaifman_violations(q, s, 2)
    assert report.violations == (((a,), (b,)),)
    # independent re-verification of the two sub-claims
    na, nb = neighborhood(s, (a,), 2), neighborhood(s, (b,), 2)
    assert isomorphic(na, nb)
    assert eval_formula(s, IDENT(12), psi, {"x": a})
    assert not eval_formula(s, IDENT(12), psi, {"x": b})
    print("PASS criterion 5: hose(3,4) Gaifman violation at r=2 is exactly ((0,0),(1,0)); sub-claims re-verified")


def test_c06_string_weak_gaifman_witness():
    psi = paper_formula("string_swap_query")
    for ell in (2, 3):
        word, a, b = weak_gaifman_word(ell)
        s = gen_string_structure(word, "01")
        q = query_eval(s, psi)
        report = weak_gaifman_violations(q, s, ell - 1)
        assert ((a,), (b,)) in report.violations, ell
        na, nb = neighborhood(s, (a,), ell - 1), neighborhood(s, (b,), ell - 1)
        assert not (set(na.index_map) & set(nb.index_map))
        assert isomorphic(na, nb)
    print("PASS criterion 6: S_w_l weak Gaifman violation (a_l, b_l) at r=l-1 for l in {2,3}")


def _members_of_M(n):
    for i in range(1, n):
        for j in range(1, n - i):
            for a in range(1, n - i - j):
                b = n - 1 - i - j - a
                if b >= 1:
                    yield "1" * i + "2" + "0" * j + "1" * a + "0" * b
                    yield "1" * i + "0" * j + "1" * a + "2" + "0" * b


def test_c07_hanf_witness_and_language():
    phi = paper_formula("language_L")
    for ell in (1, 2, 3):
        wit = gen_hanf_witness(ell)
        su = gen_string_structure(wit.u, "012")
        sv = gen_string_structure(wit.v, "012")
        assert hanf_equivalent(su, (), sv, (), ell), ell
        assert not in_language_L(wit.u)
        assert in_language_L(wit.v)
        assert not eval_formula(su, IDENT(su.size), phi)
        assert eval_formula(sv, IDENT(sv.size), phi)
    agreed = 0
    for n in range(5, 13):
        for word in _members_of_M(n):
            s = gen_string_structure(word, "012")
            assert eval_formula(s, IDENT(n), phi) == in_language_L(word), word
            agreed += 1
    print(
        f"PASS criterion 7: S_u <->_l S_v and u/v membership for l in {{1,2,3}}; "
        f"sentence = direct membership on {agreed} strings of M (length <= 12)"
    )


COMPILER_SUITE = [
    "(exists x (E x x))",
    "(forall x (not (E x x)))",
    "(exists x (and (E x z) (not (= x z))))",
    "(forall x (or (E x x) (not (E x x))))",
    "(mod 2 0 x (E x x))",
    "(mod 3 1 x (exists y (E x y)))",
    "(and (E z w) (num< z w))",
    "(exists x (num+ x x x))",
    "(exists x (exists y (and (num* x y y) (E x y))))",
    "(exists x (and (numbit x x) (E x x)))",
    "(mod 2 1 x (mod 2 1 y (E x y)))",
    "(not (mod 3 2 x (not (E x x))))",
]


def test_c08_compiler_equivalence():
    start = time.time()
    assert len(COMPILER_SUITE) == 12
    comparisons = 0
    pairs3 = {n: list(itertools.product(range(n), repeat=2)) for n in (1, 2, 3)}
    for text in COMPILER_SUITE:
        phi = parse_formula(text, SIG_E)
        fv = tuple(sorted(free_vars(phi)))
        for n in (1, 2, 3):
            circuit = compile_formula(phi, n, SIG_E)
            for bits in itertools.product([0, 1], repeat=n * n):
                s = make_structure(
                    SIG_E, n, {"E": [t for t, bit in zip(pairs3[n], bits) if bit]}
                )
                for perm in itertools.permutations(range(n)):
                    iota = Embedding(perm)
                    for values in itertools.product(range(n), repeat=len(fv)):
                        want = eval_formula(s, iota, phi, dict(zip(fv, values)))
                        got = eval_circuit(circuit, rep_encoding(s, iota, values))
                        assert want == got, (text, n, bits, perm, values)
                        comparisons += 1
    elapsed = time.time() - start
    assert elapsed < 120.0
    print(f"PASS criterion 8: compiler = evaluator on {comparisons} cases (12 formulas, n<=3, all embeddings) in {elapsed:.1f}s")


def test_c09_lemma1():
    m = 4
    for t in (2, 3):
        fam = gen_anchored_paths(t, m)
        s, anchors = fam.structure, fam.anchors
        for x in range(2 ** m):
            w = format(x, f"0{m}b")
            shifted = lemma1_shifted_structure(s, anchors, w)
            i = w.count("1") % t
            rotated = anchors[i:] + anchors[:i]
            assert find_isomorphism(shifted, flat(anchors), s, flat(rotated)) is not None, (t, w)
        circuit = compile_formula(
            fam.formula, s.size, s.signature, var_order=[f"x{j}" for j in range(t)]
        )
        transformed = lemma1_transform(circuit, s, anchors, m)
        d0, s0 = circuit_stats(circuit)
        d1, s1 = circuit_stats(transformed)
        assert d1 == d0
        assert s1 <= s0
        by_residue = {}
        for x in range(2 ** m):
            w = format(x, f"0{m}b")
            value = eval_circuit(transformed, w)
            sim = eval_circuit(
                circuit,
                rep_encoding(lemma1_shifted_structure(s, anchors, w), IDENT(s.size), flat(anchors)),
            )
            assert value == sim, (t, w)
            by_residue.setdefault(w.count("1") % t, set()).add(value)
        assert all(len(v) == 1 for v in by_residue.values())  # property (b)
        assert by_residue[0] == {True} and by_residue[1] == {False}  # property (c)
    print("PASS criterion 9: anchored-paths family t in {2,3}, m=4: rotation isomorphism, properties (a),(b),(c)")


def test_c10_lemma2():
    for t in (2, 3):
        for m in (10, 11, 12):
            start = time.time()
            builder = CircuitBuilder(m)
            counter = builder.finish(builder.mod(t, [builder.input(i + 1) for i in range(m)]))
            transformed, r = lemma2_transform(counter, t, m)
            assert r == t
            d, size = circuit_stats(counter)
            dh, sh = circuit_stats(transformed)
            assert dh <= d + 6
            assert sh <= t * size + 2 * m ** t
            for x in range(2 ** m):
                w = format(x, f"0{m}b")
                assert eval_circuit(transformed, w) == (w.count("1") % r == 0), (t, m, w)
            elapsed = time.time() - start
            assert elapsed < 60.0, (t, m, elapsed)
    print("PASS criterion 10: exact mod-t counters t in {2,3}, m in {10,11,12}: r=t, exact residue acceptance, bounds hold")


def test_c11_commuting_words():
    checked = 0
    for total in range(2, 13):
        for la in range(1, total):
            lb = total - la
            for xa in itertools.product("01", repeat=la):
                x = "".join(xa)
                zx, _ = primitive_root(x)
                for yb in itertools.product("01", repeat=lb):
                    y = "".join(yb)
                    commute = x + y == y + x
                    # oracle: direct search for a common power base
                    common = any(
                        x == x[:d] * (len(x) // d) and y == x[:d] * (len(y) // d)
                        for d in range(1, min(len(x), len(y)) + 1)
                        if len(x) % d == 0 and len(y) % d == 0
                    )
                    assert commute == common, (x, y)
                    assert common == (zx == primitive_root(y)[0]), (x, y)
                    checked += 1
    print(f"PASS criterion 11: xy=yx iff common primitive root on {checked} pairs (|x|+|y| <= 12)")


def _brute_force_hanf(s1, s2, r):
    n = s1.size
    cache = {}

    def pair_ok(c, d):
        if (c, d) not in cache:
            n1 = neighborhood(s1, (c,), r)
            n2 = neighborhood(s2, (d,), r)
            cache[(c, d)] = (
                find_isomorphism(n1.structure, n1.anchor, n2.structure, n2.anchor)
                is not None
            )
        return cache[(c, d)]

    return any(
        all(pair_ok(c, beta[c]) for c in range(n))
        for beta in itertools.permutations(range(n))
    )


def test_c12_hanf_multiset_oracle():
    sig = Signature.from_spec("E/2 P0/1 P1/1")
    rng = random.Random(2024)

    def random_structure(n):
        rel = {"E": [], "P0": [], "P1": []}
        for t in itertools.product(range(n), repeat=2):
            if rng.random() < 0.3:
                rel["E"].append(t)
        for name in ("P0", "P1"):
            rel[name] = [(e,) for e in range(n) if rng.random() < 0.5]
        return make_structure(sig, n, rel)

    pairs = []
    for _ in range(250):
        n = rng.randint(1, 5)
        pairs.append((random_structure(n), random_structure(n)))
    for _ in range(250):
        n = rng.randint(1, 5)
        s = random_structure(n)
        perm = list(range(n))
        rng.shuffle(perm)
        from modloc import relabel

        pairs.append((s, relabel(s, perm)))

    agreements = 0
    for s1, s2 in pairs:
        r = rng.randint(0, 2)
        assert hanf_equivalent(s1, (), s2, (), r) == _brute_force_hanf(s1, s2, r)
        agreements += 1

    for n in range(1, 5):
        words = ["".join(bits) for bits in itertools.product("01", repeat=n)]
        for u, v in itertools.product(words, repeat=2):
            su = gen_string_structure(u, "01")
            sv = gen_string_structure(v, "01")
            for r in (0, 1, 2):
                assert hanf_equivalent(su, (), sv, (), r) == _brute_force_hanf(su, sv, r)
                agreements += 1
    print(f"PASS criterion 12: type-multiset test = bijection search on {agreements} instances")


def test_c13_shift_application_witnesses():
    families = [
        gen_reach_family(3, 2),
        gen_cycle_family(3, 2),
        gen_triangle_reach_family(3, 2),
        gen_same_distance_family(3, 2),
    ]
    for fam in families:
        report = shift_violations(fam.query, fam.structure, fam.radius, fam.t, fam.k)
        assert fam.anchors in report.violations, fam.name
    print("PASS criterion 13: reach/cycle/triangle-reach/same-distance exhibit their proof witnesses (t=3, l=2)")


def test_c14_cli_determinism(tmp_path):
    c22 = tmp_path / "c22.struct"
    c22.write_text(format_structure(gen_cycles([2, 2])))
    ec = tmp_path / "ec.formula"
    ec.write_text(format_formula(paper_formula("even_cycles")) + "\n")
    word, _, _ = weak_gaifman_word(2)
    ws = tmp_path / "w2.struct"
    ws.write_text(format_structure(gen_string_structure(word, "01")))
    swapq = tmp_path / "swap.formula"
    swapq.write_text(format_formula(paper_formula("string_swap_query")) + "\n")
    counter = tmp_path / "mod3.circ"
    lines = [f"{i} IN{i+1}" for i in range(10)]
    lines.append("10 MOD3 " + " ".join(str(i) for i in range(10)))
    counter.write_text("\n".join(lines) + "\noutput 10\n")
    some1 = tmp_path / "one.formula"
    some1.write_text("(exists x (P1 x))\n")

    invocations = [
        ["gen", "torus", "--height", "3", "--width", "4", "--twist", "1", "--deterministic"],
        ["eval", "--structure", str(c22), "--formula", str(ec), "--deterministic"],
        ["invariance", "--structure", str(c22), "--formula", str(ec),
         "--mode", "sampled", "--count", "50", "--seed", "5", "--deterministic"],
        ["locality", "weak-gaifman", "--structure", str(ws), "--formula", str(swapq),
         "--radius", "1", "--deterministic"],
        ["compile", "--formula", str(ec), "--signature", "E/2", "--n", "3", "--deterministic"],
        ["transform", "lemma2", "--circuit", str(counter), "--t", "3", "--m", "10", "--deterministic"],
        ["swap-check", "--formula", str(some1), "--alphabet", "01", "--n", "5",
         "--radius", "0", "--deterministic"],
    ]
    for argv in invocations:
        runs = []
        for _ in range(3):
            out = io.StringIO()
            code = cli.main(argv, out=out)
            runs.append((code, out.getvalue().encode("utf-8")))
        assert runs[0] == runs[1] == runs[2], argv
    print(f"PASS criterion 14: {len(invocations)} CLI commands byte-identical across 3 runs each")
