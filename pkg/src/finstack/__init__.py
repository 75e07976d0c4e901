"""finstack: finite sites, indexed categories, descent, and stackification.

Everything is finite and explicit: categories are composition tables,
topologies are enumerated sets of sieves, indexed categories carry their
compositors and unitors as data, and every structural theorem in the library
is checked by exhaustive search rather than trusted.
"""

from .caps import Caps, CapExceeded, DEFAULT
from .fincat import (
    Check,
    FinCat,
    Functor,
    InternalError,
    NatIso,
    NatTrans,
    all_functors,
    all_nat_trans,
    compose_functors,
    discrete_cat,
    find_natiso,
    identity_functor,
    is_equivalence,
    is_essentially_surjective,
    is_fully_faithful,
    iso_classes,
    poset_cat,
    product_cat,
    terminal_cat,
    validate_fincat,
)
from .site import (
    Sieve,
    SiteError,
    Topology,
    generate_sieve,
    intersect_sieves,
    maximal_sieve,
    minimal_cover,
    pullback_sieve,
    saturate,
    sieves_on,
    slice_cat,
    slice_site,
    validate_sieve,
    validate_topology,
)
from .indexed import (
    IndexedCat,
    IndexedFun,
    IndexedNat,
    Presheaf,
    all_indexed_funs,
    compose_indexed_funs,
    const_indexed,
    embed_discrete,
    embed_mor,
    find_indexed_natiso,
    identity_indexed_fun,
    is_indexed_equivalence,
    is_indexed_iso,
    nu,
    path_cell,
    precompose_indexed,
    precompose_indexed_fun,
    product_indexed,
    strict_indexed,
    strict_indexed_fun,
    validate_indexed,
    validate_indexed_fun,
    validate_indexed_nat,
    validate_presheaf,
    validate_presheaf_mor,
)
from .descent import (
    DescentDatum,
    comparison,
    comparison_datum,
    desc_cat,
    desc_hom,
    enumerate_data,
    is_prestack,
    is_stack,
    push_datum,
    restrict_datum,
    validate_datum,
)
from .stackify import (
    PlusResult,
    Reflection,
    StackifyResult,
    discrete_stackify_witness,
    is_sheaf_presheaf,
    matching_families,
    plus,
    plus_fun,
    plus_presheaf,
    reflect_through_unit,
    sheafify_oracle,
    sheafify_with_unit,
    stackify,
)
from .groth import (
    Cleavage,
    CriterionReport,
    GirTopology,
    GrothCat,
    canonical_cleavage,
    check_lemma_3_1,
    essential_fibre,
    essential_fibre_classes,
    fiber_transport,
    fibre_inclusion,
    giraud_topology,
    grothendieck,
    is_cartesian,
)
from .fibadj import (
    FibMor,
    IndexedFibration,
    LResult,
    L_D,
    R_D,
    as_fibration,
    cartesian_lift,
    check_thm_4_2_i,
    check_thm_4_2_ii,
    counit_eps,
    essential_fibre_cat,
    flat,
    groth_map,
    is_cartesian_over,
    is_fibration_functor,
    is_indexed_fibration,
    l_d_mor,
    r_d_mor,
    sharp,
    unit_eta,
    validate_fib_mor,
)
from .dsl import (
    Diagnostic,
    Elaborated,
    SiteDoc,
    digest_text,
    elaborate,
    load_input,
    load_interchange,
    parse,
    serialize_blocks,
    serialize_env,
)

__version__ = "0.1.0"
