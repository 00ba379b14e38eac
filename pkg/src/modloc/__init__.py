"""modloc: a desk-scale workbench for first-order logic with modulo
counting quantifiers over finite structures.

Evaluates FO+MOD_p formulas with numerical predicates under explicit
embeddings, checks order/arb-invariance, tests Gaifman / weak Gaifman /
shift / Hanf locality of evaluated queries, compiles formulas to circuits
with MOD gates, and implements two circuit transformations with exact
size and depth accounting.
"""

from .structures import (
    INFINITY,
    AnchoredNeighborhood,
    Signature,
    Structure,
    StructureError,
    canonical_form,
    disjoint_union,
    distances_from,
    find_isomorphism,
    format_structure,
    gaifman_graph,
    isomorphic,
    make_structure,
    neighborhood,
    parse_structure,
    reduct,
    relabel,
    with_relation,
)
from .logic import (
    And,
    Atom,
    Embedding,
    Equal,
    EvalError,
    Exists,
    Forall,
    Formula,
    FormulaSyntaxError,
    InvarianceViolation,
    ModExists,
    Not,
    NumAtom,
    NumericalPredicate,
    Or,
    SizeOverflowError,
    check_invariance,
    eval_formula,
    format_formula,
    free_vars,
    parse_formula,
    parse_formula_file,
    query_eval,
)
from .circuits import (
    Circuit,
    CircuitBuilder,
    CircuitError,
    Lemma2PreconditionError,
    NeighborhoodPreconditionError,
    RepLayout,
    circuit_stats,
    compile_formula,
    eval_circuit,
    format_circuit,
    lemma1_shifted_structure,
    lemma1_substitution,
    lemma1_transform,
    lemma2_transform,
    parse_circuit,
    primitive_root,
    rep_encoding,
    substitute_inputs,
    zero_fill_circuits,
)
from .generators import (
    AnchoredPaths,
    HanfWitness,
    ShiftFamily,
    TorusSpec,
    gen_anchored_paths,
    gen_cycle_family,
    gen_cycles,
    gen_hanf_witness,
    gen_hose,
    gen_reach_family,
    gen_same_distance_family,
    gen_string_structure,
    gen_subdivided,
    gen_torus,
    gen_triangle_reach_family,
    in_language_L,
    in_language_M,
    paper_formula,
    relativize,
    rewrite_atoms,
    string_signature,
    torus_turn,
    torus_twist,
    weak_gaifman_word,
)
from .locality import (
    LocalityReport,
    arity_reduce,
    disjoint_swap,
    extended_alphabet,
    gaifman_violations,
    hanf_equivalent,
    shift_violations,
    swap_closure_violations,
    weak_gaifman_violations,
)

__version__ = "0.1.0"
