"""FO+MOD_p: abstract syntax, s-expression parsing, evaluation under an
embedding, invariance checking, and query evaluation.

Numerical predicates apply to the numeric positions that an embedding
(a bijection universe -> {0..n-1}) assigns to elements; structural atoms
ignore the embedding entirely.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .structures import Signature, Structure, relabel

DEFAULT_SAMPLE_COUNT = 1000
DEFAULT_SAMPLE_SEED = 0xC0FFEE
EXHAUSTIVE_LIMIT = 8  # n! embeddings beyond this are refused


class LogicError(ValueError):
    pass


class FormulaSyntaxError(LogicError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class EvalError(LogicError):
    pass


class SizeOverflowError(LogicError):
    pass


class InvarianceViolation(LogicError):
    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Equal(Formula):
    x: str
    y: str


@dataclass(frozen=True)
class Atom(Formula):
    rel: str
    vars: tuple[str, ...]


@dataclass(frozen=True)
class NumAtom(Formula):
    pred: str
    vars: tuple[str, ...]


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    subs: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    subs: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    sub: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    sub: Formula


@dataclass(frozen=True)
class ModExists(Formula):
    i: int
    p: int
    var: str
    sub: Formula

    def __post_init__(self):
        if self.p < 2 or not (0 <= self.i < self.p):
            raise LogicError(f"mod quantifier requires p >= 2 and 0 <= i < p, got i={self.i} p={self.p}")


def free_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Equal):
        return frozenset((phi.x, phi.y))
    if isinstance(phi, (Atom, NumAtom)):
        return frozenset(phi.vars)
    if isinstance(phi, Not):
        return free_vars(phi.sub)
    if isinstance(phi, (And, Or)):
        out: frozenset[str] = frozenset()
        for sub in phi.subs:
            out |= free_vars(sub)
        return out
    if isinstance(phi, (Exists, Forall, ModExists)):
        return free_vars(phi.sub) - {phi.var}
    raise LogicError(f"unknown formula node {phi!r}")


# ---------------------------------------------------------------------------
# Numerical predicates


@dataclass(frozen=True)
class NumericalPredicate:
    """A total decidable relation on r-tuples of naturals."""

    name: str
    arity: int
    holds: Callable[..., bool]


BUILTIN_NUMERIC: dict[str, NumericalPredicate] = {
    "num<": NumericalPredicate("num<", 2, lambda a, b: a < b),
    "num+": NumericalPredicate("num+", 3, lambda a, b, c: a + b == c),
    "num*": NumericalPredicate("num*", 3, lambda a, b, c: a * b == c),
    "numbit": NumericalPredicate("numbit", 2, lambda i, j: (i >> j) & 1 == 1),
}


def table_predicate(name: str, arity: int, tuples: Iterable[tuple[int, ...]]) -> NumericalPredicate:
    table = frozenset(tuple(t) for t in tuples)
    return NumericalPredicate(name, arity, lambda *args: tuple(args) in table)


# ---------------------------------------------------------------------------
# Embeddings and assignments


@dataclass(frozen=True)
class Embedding:
    """A bijection universe -> {0..n-1}; mapping[element] = numeric position."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise LogicError(f"embedding {self.mapping} is not a bijection")

    @classmethod
    def identity(cls, n: int) -> "Embedding":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.mapping)


Assignment = Mapping[str, int]


# ---------------------------------------------------------------------------
# Parsing

_KEYWORDS = {"=", "not", "and", "or", "exists", "forall", "mod"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


def parse_formula(
    text: str,
    signature: Optional[Signature] = None,
    numpreds: Optional[Mapping[str, NumericalPredicate]] = None,
) -> Formula:
    """Parse the s-expression grammar:

    ``(= x y)  (R x ...)  (num< x y)  (not f)  (and f ...)  (or f ...)
    (exists x f)  (forall x f)  (mod p i x f)``

    Arities are checked against the signature (if given) and the numerical
    vocabulary (builtins plus ``numpreds``).
    """
    preds = dict(BUILTIN_NUMERIC)
    preds.update(numpreds or {})
    tokens = _tokenize(text)
    pos = 0

    def fail(msg, at):
        raise FormulaSyntaxError(msg, at)

    def peek():
        return tokens[pos] if pos < len(tokens) else (None, len(text))

    def take(expected=None):
        nonlocal pos
        tok, at = peek()
        if tok is None:
            fail("unexpected end of input", at)
        if expected is not None and tok != expected:
            fail(f"expected {expected!r}, got {tok!r}", at)
        pos += 1
        return tok, at

    def variable():
        tok, at = take()
        if tok in "()" or tok in _KEYWORDS or tok.isdigit():
            fail(f"expected a variable, got {tok!r}", at)
        return tok

    def number(at_least=0):
        tok, at = take()
        if not tok.isdigit() or int(tok) < at_least:
            fail(f"expected an integer >= {at_least}, got {tok!r}", at)
        return int(tok)

    def form() -> Formula:
        _, start = take("(")
        head, at = take()
        if head == "=":
            node: Formula = Equal(variable(), variable())
        elif head == "not":
            node = Not(form())
        elif head in ("and", "or"):
            subs = []
            while peek()[0] != ")":
                subs.append(form())
            if not subs:
                fail(f"empty ({head})", start)
            node = And(tuple(subs)) if head == "and" else Or(tuple(subs))
            take(")")
            return node
        elif head in ("exists", "forall"):
            v = variable()
            body = form()
            node = Exists(v, body) if head == "exists" else Forall(v, body)
        elif head == "mod":
            p = number(2)
            i = number(0)
            if i >= p:
                fail(f"mod residue {i} must be < modulus {p}", at)
            node = ModExists(i, p, variable(), form())
        elif head in ("(", ")", None):
            fail("expected an operator or relation symbol", at)
        else:
            args = []
            while peek()[0] != ")":
                args.append(variable())
            if head in preds:
                if len(args) != preds[head].arity:
                    fail(f"numerical predicate {head!r} expects {preds[head].arity} arguments", at)
                node = NumAtom(head, tuple(args))
            else:
                if signature is not None:
                    if head not in signature.names:
                        fail(f"unknown symbol {head!r}", at)
                    if len(args) != signature.arity(head):
                        fail(f"relation {head!r} expects {signature.arity(head)} arguments", at)
                node = Atom(head, tuple(args))
            take(")")
            return node
        take(")")
        return node

    node = form()
    if pos != len(tokens):
        fail("trailing input after formula", tokens[pos][1])
    return node


def format_formula(phi: Formula) -> str:
    """Inverse of parse_formula."""
    if isinstance(phi, Equal):
        return f"(= {phi.x} {phi.y})"
    if isinstance(phi, Atom):
        return "(" + " ".join((phi.rel,) + phi.vars) + ")"
    if isinstance(phi, NumAtom):
        return "(" + " ".join((phi.pred,) + phi.vars) + ")"
    if isinstance(phi, Not):
        return f"(not {format_formula(phi.sub)})"
    if isinstance(phi, And):
        return "(and " + " ".join(format_formula(f) for f in phi.subs) + ")"
    if isinstance(phi, Or):
        return "(or " + " ".join(format_formula(f) for f in phi.subs) + ")"
    if isinstance(phi, Exists):
        return f"(exists {phi.var} {format_formula(phi.sub)})"
    if isinstance(phi, Forall):
        return f"(forall {phi.var} {format_formula(phi.sub)})"
    if isinstance(phi, ModExists):
        return f"(mod {phi.p} {phi.i} {phi.var} {format_formula(phi.sub)})"
    raise LogicError(f"unknown formula node {phi!r}")


def parse_formula_file(
    text: str, signature: Optional[Signature] = None
) -> tuple[Formula, dict[str, NumericalPredicate]]:
    """Parse a formula file: optional ``table: NAME/r (tuples...)`` header
    lines defining extra numerical predicates, then one formula."""
    tables: dict[str, NumericalPredicate] = {}
    body_lines = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("table:"):
            rest = stripped[len("table:"):].strip()
            headspec, _, tuptext = rest.partition(" ")
            name, _, arity = headspec.rpartition("/")
            if not name or not arity.isdigit():
                raise FormulaSyntaxError(f"bad table header {headspec!r}", 0)
            arity = int(arity)
            tuples = []
            for chunk in tuptext.replace("(", " (").split():
                if not (chunk.startswith("(") and chunk.endswith(")")):
                    raise FormulaSyntaxError(f"bad table tuple {chunk!r}", 0)
                parts = [p for p in chunk[1:-1].split(",") if p]
                if len(parts) != arity or not all(p.isdigit() for p in parts):
                    raise FormulaSyntaxError(f"bad table tuple {chunk!r}", 0)
                tuples.append(tuple(int(p) for p in parts))
            tables[name] = table_predicate(name, arity, tuples)
        elif stripped.startswith("#") or not stripped:
            continue
        else:
            body_lines.append(line)
    phi = parse_formula("\n".join(body_lines), signature, tables)
    return phi, tables


# ---------------------------------------------------------------------------
# Evaluation


_UNBOUND = object()


class _Evaluator:
    """Evaluates formulas over one (structure, embedding) pair.

    Composite subformulas are memoized on (node, assignment restricted to the
    node's free variables); reusing one evaluator across assignments shares
    all work that does not depend on the changed variables.
    """

    def __init__(self, s: Structure, iota: Embedding, numpreds=None):
        if iota.size != s.size:
            raise EvalError("embedding size does not match the structure")
        self.s = s
        self.pos = iota.mapping
        self.rels = {name: s.relation(name) for name in s.signature.names}
        self.preds = dict(BUILTIN_NUMERIC)
        self.preds.update(numpreds or {})
        self._free: dict[int, tuple[str, ...]] = {}
        self._memo: dict[tuple, bool] = {}

    def free(self, node: Formula) -> tuple[str, ...]:
        got = self._free.get(id(node))
        if got is None:
            got = tuple(sorted(free_vars(node)))
            self._free[id(node)] = got
        return got

    def run(self, node: Formula, env: dict[str, int]) -> bool:
        if isinstance(node, Atom):
            rel = self.rels.get(node.rel)
            if rel is None:
                raise EvalError(f"relation {node.rel!r} not in the structure's signature")
            return tuple(env[v] for v in node.vars) in rel
        if isinstance(node, Equal):
            return env[node.x] == env[node.y]
        if isinstance(node, NumAtom):
            pred = self.preds.get(node.pred)
            if pred is None:
                raise EvalError(f"unknown numerical predicate {node.pred!r}")
            return bool(pred.holds(*(self.pos[env[v]] for v in node.vars)))
        if isinstance(node, Not):
            return not self.run(node.sub, env)

        key = (id(node),) + tuple(env[v] for v in self.free(node))
        got = self._memo.get(key)
        if got is not None:
            return got

        if isinstance(node, And):
            value = all(self.run(sub, env) for sub in node.subs)
        elif isinstance(node, Or):
            value = any(self.run(sub, env) for sub in node.subs)
        elif isinstance(node, (Exists, Forall)):
            want = isinstance(node, Exists)
            value = not want
            shadowed = env.get(node.var, _UNBOUND)
            for a in range(self.s.size):
                env[node.var] = a
                if self.run(node.sub, env) == want:
                    value = want
                    break
            if shadowed is _UNBOUND:
                env.pop(node.var, None)
            else:
                env[node.var] = shadowed
        elif isinstance(node, ModExists):
            count = 0
            shadowed = env.get(node.var, _UNBOUND)
            for a in range(self.s.size):
                env[node.var] = a
                if self.run(node.sub, env):
                    count += 1
            if shadowed is _UNBOUND:
                env.pop(node.var, None)
            else:
                env[node.var] = shadowed
            value = count % node.p == node.i
        else:
            raise EvalError(f"unknown formula node {node!r}")
        self._memo[key] = value
        return value


def eval_formula(
    s: Structure,
    iota: Embedding,
    phi: Formula,
    assignment: Optional[Assignment] = None,
    numpreds=None,
) -> bool:
    """Truth of phi in the structure expanded by iota's numerical predicates."""
    env = dict(assignment or {})
    missing = free_vars(phi) - set(env)
    if missing:
        raise EvalError(f"unbound variables: {sorted(missing)}")
    if any(not (0 <= v < s.size) for v in env.values()):
        raise EvalError("assignment values out of range")
    return _Evaluator(s, iota, numpreds).run(phi, env)


# ---------------------------------------------------------------------------
# Invariance checking


@dataclass(frozen=True)
class InvarianceVerdict:
    invariant: bool
    tested: int
    mode: str
    witness: Optional[tuple[Embedding, Embedding]] = None
    seed: Optional[int] = None

    def __bool__(self):
        return self.invariant


def check_invariance(
    s: Structure,
    phi: Formula,
    assignment: Optional[Assignment] = None,
    mode: str = "exhaustive",
    count: int = DEFAULT_SAMPLE_COUNT,
    seed: int = DEFAULT_SAMPLE_SEED,
    numpreds=None,
) -> InvarianceVerdict:
    """Check that phi's truth is independent of the embedding.

    Exhaustive mode enumerates all n! embeddings in lexicographic order
    (refused for n > 8); sampled mode fixes the identity and draws embeddings
    from a seeded PRNG.  The counterexample, if any, is the lexicographically
    first failing pair of embeddings in exhaustive mode.
    """
    env = dict(assignment or {})
    n = s.size
    cache: dict[tuple, bool] = {}

    def value(perm: tuple[int, ...]) -> bool:
        # A^iota |= phi[a]  iff  relabel(A, iota) |= phi[iota(a)] under the
        # identity embedding; caching by the relabeled image collapses
        # automorphic embeddings.
        image = relabel(s, perm)
        mapped = {v: perm[e] for v, e in env.items()}
        key = (image.relations, tuple(sorted(mapped.items())))
        got = cache.get(key)
        if got is None:
            got = eval_formula(image, Embedding.identity(n), phi, mapped, numpreds)
            cache[key] = got
        return got

    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise SizeOverflowError(
                f"exhaustive invariance over {n}! embeddings refused (n > {EXHAUSTIVE_LIMIT})"
            )
        first = tuple(range(n))
        v0 = value(first)
        tested = 1
        for perm in itertools.islice(itertools.permutations(range(n)), 1, None):
            tested += 1
            if value(perm) != v0:
                return InvarianceVerdict(
                    False, tested, "exhaustive",
                    witness=(Embedding(first), Embedding(perm)),
                )
        return InvarianceVerdict(True, tested, "exhaustive")

    if mode == "sampled":
        identity = tuple(range(n))
        v0 = value(identity)
        rng = random.Random(seed)
        for k in range(count):
            perm = list(range(n))
            rng.shuffle(perm)
            if value(tuple(perm)) != v0:
                return InvarianceVerdict(
                    False, k + 1, "sampled",
                    witness=(Embedding(identity), Embedding(tuple(perm))),
                    seed=seed,
                )
        return InvarianceVerdict(True, count, "sampled", seed=seed)

    raise LogicError(f"unknown invariance mode {mode!r}")


# ---------------------------------------------------------------------------
# Query evaluation


def query_eval(
    s: Structure,
    phi: Formula,
    policy: str = "identity-embedding",
    var_order: Optional[Sequence[str]] = None,
    numpreds=None,
) -> frozenset[tuple[int, ...]]:
    """The k-ary relation defined by phi (k = number of free variables,
    ordered by ``var_order`` or sorted names; k = 0 yields {()} or {}).

    Under ``assert-invariant`` every candidate tuple must pass
    check_invariance (exhaustive when n <= 8, else sampled defaults);
    a violation raises InvarianceViolation with the witness embeddings.
    """
    fv = free_vars(phi)
    if var_order is None:
        var_order = tuple(sorted(fv))
    elif set(var_order) != fv:
        raise LogicError("var_order must list exactly the free variables")
    if policy not in ("identity-embedding", "assert-invariant"):
        raise LogicError(f"unknown policy {policy!r}")

    evaluator = _Evaluator(s, Embedding.identity(s.size), numpreds)
    result = set()
    for values in itertools.product(range(s.size), repeat=len(var_order)):
        assignment = dict(zip(var_order, values))
        if policy == "assert-invariant":
            mode = "exhaustive" if s.size <= EXHAUSTIVE_LIMIT else "sampled"
            verdict = check_invariance(s, phi, assignment, mode=mode, numpreds=numpreds)
            if not verdict:
                raise InvarianceViolation(
                    f"invariance violated at tuple {values}", verdict.witness
                )
        if evaluator.run(phi, dict(assignment)):
            result.add(values)
    return frozenset(result)
