"""The total category of an indexed category, with its fibration structure.

`grothendieck` flattens an indexed category D over C into one finite
category: objects are pairs (X, U) with U in the fibre over X, morphisms are
pairs of a base morphism y : X -> X' and a fibre morphism a : U -> D(y)(U'),
and composition corrects the nesting with D's compositors.  The projection
onto the first component is a fibration in the concrete sense used here:
every (y, U') has a cartesian lift, chosen by `canonical_cleavage`, and the
cartesian morphisms are exactly those whose fibre component is invertible
(`is_cartesian` cross-checks that claim against the universal property by
exhaustive factorization search).

`giraud_topology` transfers a topology on the base to the total category: a
sieve covers (X, U) when it absorbs the cartesian lifts of some covering
sieve of X.  Concretely the lift families are generated into sieves and then
saturated.  `fiber_transport` sends each object of the slice over X to the
domain of its cleavage lift, and `check_lemma_3_1` tests the fiberwise stack
criterion: an indexed category over the total category is a stack for the
transferred topology exactly when all of its transported restrictions are
stacks over the slice sites.
"""

from dataclasses import dataclass

from . import caps as _caps
from .descent import is_stack
from .fincat import Check, FinCat, Functor, InternalError, validate_fincat
from .indexed import IndexedCat, precompose_indexed
from .site import SiteError, Topology, saturate, slice_cat, slice_site
from .util import fmt, stable_sorted


@dataclass
class GrothCat:
    total: FinCat
    proj: Functor
    source: IndexedCat


# The transferred topology is an ordinary Topology on the total category.
GirTopology = Topology


def grothendieck(D: IndexedCat, caps: _caps.Caps = _caps.DEFAULT, name="") -> GrothCat:
    """Flatten an indexed category into its total category and projection.

    Morphism ids are triples (y, a, U') recording the base morphism, the
    fibre component a : U -> D(y)(U'), and the target fibre object (needed
    because D(y) may identify objects).
    """
    base = D.base
    objects = tuple((X, U) for X in base.objects for U in D.fib[X].objects)
    mor = {}
    for y, (Xd, Xc) in base.mor.items():
        fib = D.fib[Xd]
        ry = D.res[y]
        for U2 in D.fib[Xc].objects:
            tgt = ry.ob(U2)
            for U1 in fib.objects:
                for a in fib.hom(U1, tgt):
                    mor[(y, a, U2)] = ((Xd, U1), (Xc, U2))
        _caps.check(len(mor), caps.max_descent, "total category size")

    ident = {
        (X, U): (base.ident[X], D.unit(X, U), U)
        for X in base.objects
        for U in D.fib[X].objects
    }

    by_dom = {}
    for m, (d, _) in mor.items():
        by_dom.setdefault(d, []).append(m)
    table = {}
    for m1, (d1, c1) in mor.items():
        y1, a1, _ = m1
        fib1 = D.fib[d1[0]]
        for m2 in by_dom.get(c1, ()):
            y2, a2, U3 = m2
            a = fib1.compose(
                D.gamma(y2, y1, U3), fib1.compose(D.res[y1].mo(a2), a1)
            )
            h = (base.compose(y2, y1), a, U3)
            if h not in mor:
                raise InternalError("composite escapes the total category")
            table[(m2, m1)] = h

    total = FinCat(objects, mor, ident, table, name=name or f"groth({D.name or '?'})")
    errs = validate_fincat(total, caps)
    if errs:
        raise InternalError(f"total category invalid: {errs[0]}")
    proj = Functor(
        total,
        base,
        {o: o[0] for o in objects},
        {m: m[0] for m in mor},
        name="proj",
    )
    errs = proj.validate()
    if errs:
        raise InternalError(f"projection invalid: {errs[0]}")
    return GrothCat(total, proj, D)


def fibre_inclusion(G: GrothCat, X) -> Functor:
    """D(X) -> total, U ↦ (X, U), with vertical morphisms over the identity."""
    D = G.source
    fx = D.fib[X]
    omap = {U: (X, U) for U in fx.objects}
    mmap = {}
    for m, (_, W) in fx.mor.items():
        mmap[m] = (D.base.ident[X], fx.compose(D.unit(X, W), m), W)
    F = Functor(fx, G.total, omap, mmap, name=f"incl({fmt(X)})")
    errs = F.validate()
    if errs:
        raise InternalError(f"fibre inclusion at {fmt(X)}: {errs[0]}")
    return F


def _cartesian_universal(G: GrothCat, m) -> bool:
    """Universal property by brute force: every compatible morphism factors
    uniquely through m over the prescribed base factorization."""
    total, proj, base = G.total, G.proj, G.source.base
    E1, E2 = total.mor[m]
    y0 = proj.mo(m)
    for E0 in total.objects:
        for h in total.hom(E0, E2):
            for w in base.hom(proj.ob(E0), proj.ob(E1)):
                if base.compose(y0, w) != proj.mo(h):
                    continue
                lifts = [
                    t
                    for t in total.hom(E0, E1)
                    if proj.mo(t) == w and total.compose(m, t) == h
                ]
                if len(lifts) != 1:
                    return False
    return True


def is_cartesian(G: GrothCat, m) -> bool:
    """True when the fibre component of m is invertible.

    The characterization is cross-checked against the universal property;
    disagreement would mean the construction itself is broken, so it raises.
    """
    y, a, _ = m
    d = G.total.dom(m)
    quick = G.source.fib[d[0]].is_iso(a)
    univ = _cartesian_universal(G, m)
    if quick != univ:
        raise InternalError(
            f"cartesian characterizations disagree on {fmt(m)}: "
            f"component {'iso' if quick else 'not iso'}, universal property "
            f"{'holds' if univ else 'fails'}"
        )
    return quick


@dataclass
class Cleavage:
    groth: GrothCat
    lifts: dict  # (y, U in fibre over cod y) -> cartesian morphism into (cod y, U)

    def lift(self, y, U):
        return self.lifts[(y, U)]


def canonical_cleavage(G: GrothCat) -> Cleavage:
    """Deterministic choice of cartesian lifts.

    The identity-component lift (y, id, U) always exists for a flattened
    indexed category and is preferred; if a caller has somehow removed it,
    the stable-least invertible component is chosen instead.
    """
    D = G.source
    base = D.base
    total = G.total
    lifts = {}
    for y, (Yd, Yc) in base.mor.items():
        fib = D.fib[Yd]
        for U in D.fib[Yc].objects:
            cand = (y, fib.ident[D.res[y].ob(U)], U)
            if cand in total.mor:
                lifts[(y, U)] = cand
                continue
            found = None
            for m in total.into((Yc, U)):
                my, ma, _ = m
                if my == y and fib.is_iso(ma):
                    found = m
                    break
            if found is None:
                raise InternalError(
                    f"no cartesian lift of {fmt(y)} at {fmt(U)}"
                )
            lifts[(y, U)] = found
    return Cleavage(G, lifts)


def giraud_topology(G: GrothCat, J: Topology, caps: _caps.Caps = _caps.DEFAULT) -> Topology:
    """Transfer J to the total category: generate from cartesian lifts of
    covering sieves, then saturate."""
    if J.base != G.source.base:
        raise SiteError("topology does not live on the base of the total category")
    cl = canonical_cleavage(G)
    coverage = {}
    for (X, U) in G.total.objects:
        coverage[(X, U)] = [
            [cl.lifts[(f, U)] for f in R.members()] for R in J.covers_of(X)
        ]
    return saturate(G.total, coverage, caps)


def essential_fibre(G: GrothCat, X):
    """All (A, alpha) with A a total object and alpha : X -> proj(A)
    invertible in the base, in stable order."""
    base = G.source.base
    out = []
    for A in stable_sorted(G.total.objects):
        for alpha in base.hom(X, G.proj.ob(A)):
            if base.is_iso(alpha):
                out.append((A, alpha))
    return out


def _ess_iso(G: GrothCat, one, two) -> bool:
    # (A, alpha) ~ (B, beta) when an invertible m : A -> B has proj(m)∘alpha = beta.
    (A, alpha), (B, beta) = one, two
    total, base = G.total, G.source.base
    for m in total.hom(A, B):
        if total.is_iso(m) and base.compose(G.proj.mo(m), alpha) == beta:
            return True
    return False


def essential_fibre_classes(G: GrothCat, X):
    """Partition of the essential fibre at X into isomorphism classes."""
    classes = []
    for item in essential_fibre(G, X):
        for cls in classes:
            if _ess_iso(G, cls[0], item):
                cls.append(item)
                break
        else:
            classes.append([item])
    return classes


def fiber_transport(G: GrothCat, A_alpha, cl: Cleavage) -> Functor:
    """The slice over X into the total category, through the cleavage.

    An object g : Y -> X goes to the domain of the chosen lift of alpha∘g at
    the fibre part of A; a slice morphism goes to the structural comparison
    between the lift domains, which is strictly functorial because the
    correction isos compose through the compositor identities.
    """
    A, alpha = A_alpha
    D = G.source
    base = D.base
    total = G.total
    X = base.dom(alpha)
    UA = A[1]
    sl, _ = slice_cat(base, X)

    lift_of = {g: cl.lifts[(base.compose(alpha, g), UA)] for g in sl.objects}
    omap = {g: total.dom(lift_of[g]) for g in sl.objects}
    mmap = {}
    for (f, h) in sl.mor:
        g = base.compose(f, h)
        sf = lift_of[f][1]
        sg = lift_of[g][1]
        Vf = omap[f][1]
        fy = D.fib[base.dom(h)]
        gamma = D.gamma(base.compose(alpha, f), h, UA)
        comp = fy.compose(
            D.res[h].mo(D.fib[base.dom(f)].inverse(sf)),
            fy.compose(fy.inverse(gamma), sg),
        )
        mmap[(f, h)] = (h, comp, Vf)
    F = Functor(sl, total, omap, mmap, name=f"transport({fmt(X)})")
    errs = F.validate()
    if errs:
        raise InternalError(f"fiber transport not a functor: {errs[0]}")
    return F


@dataclass
class CriterionReport:
    """Outcome of the fiberwise stack criterion: the global side, the
    fiberwise side, and one boolean per checked essential-fibre object."""

    agree: bool
    total_side: Check
    fiber_side: Check
    instances: list  # (X, (A, alpha), bool)

    def __bool__(self):
        return self.agree


def check_lemma_3_1(
    E: IndexedCat,
    G: GrothCat,
    J: Topology,
    caps: _caps.Caps = _caps.DEFAULT,
    per_iso_class: bool = True,
) -> CriterionReport:
    """Test the fiberwise stack criterion on one instance.

    Computes both sides independently: is_stack of E over the transferred
    topology on the total category, and is_stack of every transported
    restriction E∘F over the slice site at every base object, one F per
    essential-fibre object (per isomorphism class by default; isomorphic
    essential-fibre objects give equivalent restrictions).
    """
    if E.base != G.total:
        raise ValueError("indexed category does not live over the total category")
    JD = giraud_topology(G, J, caps)
    total_side = is_stack(E, JD, caps)

    cl = canonical_cleavage(G)
    base = G.source.base
    fiber_side = Check(True, "all transported restrictions are stacks")
    instances = []
    for X in stable_sorted(base.objects):
        sl, JX, _ = slice_site(J, X, caps)
        if per_iso_class:
            reps = [cls[0] for cls in essential_fibre_classes(G, X)]
        else:
            reps = essential_fibre(G, X)
        for (A, alpha) in reps:
            F = fiber_transport(G, (A, alpha), cl)
            c = is_stack(precompose_indexed(E, F), JX, caps)
            instances.append((X, (A, alpha), bool(c)))
            if not c and fiber_side.ok:
                fiber_side = Check(
                    False,
                    f"transported restriction at {fmt(X)} via {fmt(A)} is "
                    f"not a stack: {c.reason}",
                    witness=(X, (A, alpha), c.witness),
                )
    agree = bool(total_side) == bool(fiber_side)
    return CriterionReport(agree, total_side, fiber_side, instances)
