"""Plus construction, stackification, reflection, and the discrete oracle.

The plus construction realizes each fibre D⁺(X) as the descent category over
the least covering sieve of X.  A finite saturated topology is closed under
intersections of covers, so the refinement diagram of covering sieves has a
terminal stage and the pseudocolimit over refinements collapses to that stage;
"locally equal" morphisms become equal on the nose after restriction to the
least cover.  Restriction of descent data along y is then literal reindexing
(g ↦ y∘g), which is strictly functorial, so D⁺ carries identity compositors.

`sheafify_oracle` re-implements the set-level special case from scratch
(matching families, twice) so the categorical pipeline can be audited against
it on discrete embeddings without sharing any machinery.
"""

from dataclasses import dataclass

from . import caps as _caps
from .descent import (
    DescentDatum,
    comparison,
    comparison_datum,
    desc_cat,
    desc_hom,
    mor_components,
    mor_id,
    push_datum,
    push_mor,
    restrict_datum,
)
from .fincat import Check, Functor, InternalError
from .indexed import (
    IndexedCat,
    IndexedFun,
    IndexedNat,
    Presheaf,
    compose_indexed_funs,
    strict_indexed,
    strict_indexed_fun,
    validate_indexed_nat,
)
from .site import Sieve, Topology, minimal_cover
from .util import fmt, stable_sorted


@dataclass
class PlusResult:
    input: IndexedCat
    output: IndexedCat
    unit: IndexedFun
    minimal: dict  # object -> Sieve actually used


@dataclass
class StackifyResult:
    input: IndexedCat
    stack: IndexedCat
    unit: IndexedFun
    once: PlusResult
    twice: PlusResult


def plus(D: IndexedCat, J: Topology, caps: _caps.Caps = _caps.DEFAULT) -> PlusResult:
    base = D.base
    minimal = {X: minimal_cover(J, X) for X in base.objects}
    fib = {X: desc_cat(D, minimal[X], caps) for X in base.objects}

    res = {}
    for y, (Y, X) in base.mor.items():
        MX, MY = minimal[X], minimal[Y]
        for g in MY.mors:
            if base.compose(y, g) not in MX.mors:
                raise InternalError(
                    f"least cover of {fmt(Y)} does not refine the pullback "
                    f"of the least cover of {fmt(X)} along {fmt(y)}"
                )
        omap = {a: restrict_datum(D, a, y, MY) for a in fib[X].objects}
        mmap = {}
        for mid, (a, b) in fib[X].mor.items():
            comps = mor_components(mid)
            rcomps = {g: comps[base.compose(y, g)] for g in MY.mors}
            rid = mor_id(omap[a], omap[b], rcomps)
            if rid not in fib[Y].mor:
                raise InternalError(
                    f"restricted descent morphism missing along {fmt(y)}"
                )
            mmap[mid] = rid
        res[y] = Functor(fib[X], fib[Y], omap, mmap, name=f"⁺({fmt(y)})")

    out = strict_indexed(base, fib, res, name=f"{D.name or 'D'}⁺")

    ucomp = {X: comparison(D, minimal[X], fib[X], caps) for X in base.objects}
    ucell = {}
    for y, (Y, X) in base.mor.items():
        MY = minimal[Y]
        cy = {}
        for V in D.fib[X].objects:
            src = comparison_datum(D, MY, D.res[y].ob(V))
            dst = restrict_datum(D, comparison_datum(D, minimal[X], V), y, MY)
            comps = {g: D.gamma(y, g, V) for g in MY.mors}
            mid = mor_id(src, dst, comps)
            if mid not in fib[Y].mor:
                raise InternalError(
                    f"unit cell along {fmt(y)} is not a descent morphism"
                )
            cy[V] = mid
        ucell[y] = cy
    unit = IndexedFun(D, out, ucomp, ucell, name="η")
    return PlusResult(D, out, unit, minimal)


def stackify(D: IndexedCat, J: Topology, caps: _caps.Caps = _caps.DEFAULT) -> StackifyResult:
    once = plus(D, J, caps)
    twice = plus(once.output, J, caps)
    unit = compose_indexed_funs(twice.unit, once.unit)
    return StackifyResult(D, twice.output, unit, once, twice)


def plus_fun(F: IndexedFun, plus_src: PlusResult, plus_dst: PlusResult) -> IndexedFun:
    """Induced functor F⁺ : D⁺ -> E⁺ for F : D -> E over the same topology.

    Pushing a datum forward commutes with reindexing restriction on the nose,
    so the induced functor is strict."""
    D = plus_src.output
    E = plus_dst.output
    base = D.base
    comp = {}
    for X in base.objects:
        M = plus_src.minimal[X]
        if plus_dst.minimal[X].mors != M.mors:
            raise InternalError("plus structures disagree on least covers")
        omap = {a: push_datum(F, M, a) for a in D.fib[X].objects}
        mmap = {}
        for mid, (a, b) in D.fib[X].mor.items():
            pc = push_mor(F, mor_components(mid))
            pid = mor_id(omap[a], omap[b], pc)
            if pid not in E.fib[X].mor:
                raise InternalError("pushed descent morphism missing")
            mmap[mid] = pid
        comp[X] = Functor(D.fib[X], E.fib[X], omap, mmap, name=f"{F.name}⁺")
    return strict_indexed_fun(D, E, comp, name=f"{F.name}⁺")


def _glue(F: IndexedCat, M: Sieve, b: DescentDatum, caps) -> tuple:
    """Find (V, iso) with an invertible descent morphism comparison(V) -> b.
    Deterministic: first fibre object in stable order that matches."""
    X = M.target
    base = F.base
    for V in stable_sorted(F.fib[X].objects):
        cv = comparison_datum(F, M, V)
        for dm in desc_hom(F, M, cv, b, caps):
            if all(F.fib[base.dom(f)].is_iso(m) for f, m in dm.items()):
                return V, dm
    raise InternalError(
        f"descent datum over {fmt(X)} does not glue in a category that "
        f"claimed to be a stack"
    )


def _unique_preimage(F: IndexedCat, M: Sieve, V, W, delta):
    """The unique m : V -> W in F(X) whose comparison components equal delta;
    exists and is unique because the comparison is fully faithful."""
    X = M.target
    fx = F.fib[X]
    found = None
    for m in fx.hom(V, W):
        if all(F.res[f].mo(m) == delta[f] for f in M.mors):
            if found is not None:
                raise InternalError("comparison not faithful during factorization")
            found = m
    if found is None:
        raise InternalError("comparison not full during factorization")
    return found


def _factor_once(phi: IndexedFun, pres: PlusResult, caps) -> tuple:
    """psi : D⁺ -> F with an invertible modification psi ∘ unit => phi.

    Every step is canonical: glue the pushed datum, transport morphisms
    through the fully faithful comparison, and assemble cells from the
    compositors of F.  The witness modification comes out of the same
    gluing isos."""
    D = phi.D
    F = phi.E
    Dp = pres.output
    base = D.base

    glue_obj = {}
    glue_iso = {}  # (X, a) -> descent morphism components comparison(V) -> push(a)
    comp = {}
    for X in base.objects:
        M = pres.minimal[X]
        fx = F.fib[X]
        omap = {}
        for a in Dp.fib[X].objects:
            b = push_datum(phi, M, a)
            V, dm = _glue(F, M, b, caps)
            omap[a] = V
            glue_obj[(X, a)] = V
            glue_iso[(X, a)] = dm
        mmap = {}
        for mid, (a, a2) in Dp.fib[X].mor.items():
            pc = push_mor(phi, mor_components(mid))
            ia, ia2 = glue_iso[(X, a)], glue_iso[(X, a2)]
            delta = {}
            for f in M.mors:
                fib = F.fib[base.dom(f)]
                delta[f] = fib.compose(
                    fib.inverse(ia2[f]), fib.compose(pc[f], ia[f])
                )
            mmap[mid] = _unique_preimage(F, M, omap[a], omap[a2], delta)
        comp[X] = Functor(Dp.fib[X], fx, omap, mmap, name=f"ψ({fmt(X)})")

    cell = {}
    for y, (Y, X) in base.mor.items():
        MY = pres.minimal[Y]
        cy = {}
        for a in Dp.fib[X].objects:
            ar = Dp.res[y].ob(a)  # = restrict_datum(a, y, MY)
            Vp = glue_obj[(Y, ar)]
            W = glue_obj[(X, a)]
            ia = glue_iso[(X, a)]
            iar = glue_iso[(Y, ar)]
            delta = {}
            for g in MY.mors:
                fib = F.fib[base.dom(g)]
                yg = base.compose(y, g)
                delta[g] = fib.compose(
                    fib.inverse(F.gamma(y, g, W)),
                    fib.compose(fib.inverse(ia[yg]), iar[g]),
                )
            cy[a] = _unique_preimage(F, MY, Vp, F.res[y].ob(W), delta)
        cell[y] = cy
    psi = IndexedFun(Dp, F, comp, cell, name=f"{phi.name}~" if phi.name else "ψ")

    # Witness: at V ∈ D(X), the glued object of push(comparison(V)) maps to
    # phi(V) by transporting the cell-corrected comparison through glue_iso.
    wit = {}
    for X in base.objects:
        M = pres.minimal[X]
        wx = {}
        for V in D.fib[X].objects:
            a = pres.unit.comp[X].ob(V)
            ia = glue_iso[(X, a)]
            delta = {}
            for f in M.mors:
                fib = F.fib[base.dom(f)]
                delta[f] = fib.compose(fib.inverse(phi.cell[f][V]), ia[f])
            wx[V] = _unique_preimage(
                F, M, glue_obj[(X, a)], phi.comp[X].ob(V), delta
            )
        wit[X] = wx
    witness = IndexedNat(compose_indexed_funs(psi, pres.unit), phi, wit)
    return psi, witness


@dataclass
class Reflection:
    psi: IndexedFun
    witness: IndexedNat
    stackified: StackifyResult


def reflect_through_unit(phi: IndexedFun, F_is_stack, J: Topology,
                         caps: _caps.Caps = _caps.DEFAULT,
                         sres: StackifyResult = None) -> Reflection:
    """Factor phi : D -> F through the stackification unit, F a stack.

    Returns psi : s_J(D) -> F together with the invertible modification
    psi ∘ unit => phi."""
    if not F_is_stack:
        raise ValueError("reflection requires the target to be a stack")
    if sres is None:
        sres = stackify(phi.D, J, caps)
    psi1, w1 = _factor_once(phi, sres.once, caps)
    psi, w2 = _factor_once(psi1, sres.twice, caps)

    total = compose_indexed_funs(psi, sres.unit)
    comp = {}
    for X in phi.D.base.objects:
        cx = {}
        fx = phi.E.fib[X]
        for V in phi.D.fib[X].objects:
            u1 = sres.once.unit.comp[X].ob(V)
            cx[V] = fx.compose(w1.comp[X][V], w2.comp[X][u1])
        comp[X] = cx
    witness = IndexedNat(total, phi, comp)
    bad = validate_indexed_nat(witness)
    if bad:
        raise InternalError(f"reflection witness invalid: {bad[0]}")
    return Reflection(psi, witness, sres)


# ---------------------------------------------------------------------------
# Discrete oracle: matching families on sets, implemented independently of
# the categorical machinery above.


def matching_families(P: Presheaf, R: Sieve, caps: _caps.Caps = _caps.DEFAULT):
    """All compatible assignments f ↦ s_f ∈ P(dom f) over the sieve, as
    canonical ("mf", ((f, s_f), ...)) tuples in stable order."""
    base = P.base
    members = R.members()
    order = {f: i for i, f in enumerate(members)}
    constraints = {}
    for f in members:
        for g in base.into(base.dom(f)):
            fg = base.compose(f, g)
            constraints.setdefault(max(order[f], order[fg]), []).append((f, g, fg))

    out = []
    budget = [caps.max_descent]
    fam = {}

    def go(i):
        budget[0] -= 1
        if budget[0] < 0:
            raise _caps.CapExceeded("matching family enumeration budget exhausted")
        if i == len(members):
            out.append(tuple(fam[f] for f in members))
            return
        f = members[i]
        for s in P.els[base.dom(f)]:
            fam[f] = s
            ok = True
            for (cf, cg, cfg) in constraints.get(i, ()):
                if P.act[cg][fam[cf]] != fam[cfg]:
                    ok = False
                    break
            if ok:
                go(i + 1)
        fam.pop(members[i], None)

    go(0)
    return [
        ("mf", tuple(zip(members, vals))) for vals in sorted(out)
    ]


def _family_value(el, f):
    return dict(el[1])[f]


def plus_presheaf(P: Presheaf, J: Topology, caps: _caps.Caps = _caps.DEFAULT):
    """One application of the set-level plus: sections over X become matching
    families on the least cover.  Returns (P⁺, unit components)."""
    base = P.base
    minimal = {X: minimal_cover(J, X) for X in base.objects}
    els = {X: tuple(matching_families(P, minimal[X], caps)) for X in base.objects}
    act = {}
    for y, (Y, X) in base.mor.items():
        ay = {}
        for el in els[X]:
            ay[el] = ("mf", tuple(
                (g, _family_value(el, base.compose(y, g)))
                for g in minimal[Y].members()
            ))
        act[y] = ay
    Pp = Presheaf(base, els, act, name=f"{P.name}⁺" if P.name else "P⁺")
    unit = {
        X: {
            e: ("mf", tuple((f, P.act[f][e]) for f in minimal[X].members()))
            for e in P.els[X]
        }
        for X in base.objects
    }
    for X in base.objects:
        for e in P.els[X]:
            if unit[X][e] not in set(els[X]):
                raise InternalError("unit of the set-level plus escapes the image")
    return Pp, unit


def sheafify_with_unit(P: Presheaf, J: Topology, caps: _caps.Caps = _caps.DEFAULT):
    """Plus twice, with the composite unit P -> P⁺⁺."""
    P1, u1 = plus_presheaf(P, J, caps)
    P2, u2 = plus_presheaf(P1, J, caps)
    unit = {
        X: {e: u2[X][u1[X][e]] for e in P.els[X]} for X in P.base.objects
    }
    sheaf = is_sheaf_presheaf(P2, J, caps)
    if not sheaf:
        raise InternalError(f"double plus did not produce a sheaf: {sheaf.reason}")
    return P2, unit


def sheafify_oracle(P: Presheaf, J: Topology, caps: _caps.Caps = _caps.DEFAULT) -> Presheaf:
    return sheafify_with_unit(P, J, caps)[0]


def is_sheaf_presheaf(P: Presheaf, J: Topology, caps: _caps.Caps = _caps.DEFAULT) -> Check:
    """Sections are in bijection with matching families, for every cover."""
    base = P.base
    for X in stable_sorted(base.objects):
        for R in J.covers_of(X):
            fams = matching_families(P, R, caps)
            seen = {}
            members = R.members()
            for e in P.els[X]:
                key = ("mf", tuple((f, P.act[f][e]) for f in members))
                if key in seen:
                    return Check(
                        False,
                        f"not separated over {fmt(X)}: two sections restrict "
                        f"identically",
                        witness=(X, R, seen[key], e),
                    )
                seen[key] = e
            for fam in fams:
                if fam not in seen:
                    return Check(
                        False,
                        f"matching family over {fmt(X)} has no section",
                        witness=(X, R, fam),
                    )
    return Check(True, "sheaf")


# ---------------------------------------------------------------------------
# Discrete compatibility: the categorical pipeline against the set oracle.


def _is_discrete(cat) -> bool:
    return all(cat.is_id(m) for m in cat.mor)


def _translate_datum(a: DescentDatum, depth):
    members = stable_sorted(a.obj)
    if depth == 1:
        return ("mf", tuple((f, a.obj[f]) for f in members))
    return ("mf", tuple((f, _translate_datum(a.obj[f], depth - 1)) for f in members))


def discrete_stackify_witness(P: Presheaf, J: Topology,
                              caps: _caps.Caps = _caps.DEFAULT):
    """Build the comparison between stackify∘embed_discrete and
    embed_discrete∘sheafify_oracle.

    Returns (W, intertwine, sres, sheaf, unit) where W is a strict indexed
    functor stackify(embed(P)).stack -> embed(sheafify(P)) translating nested
    descent data to nested matching families, and `intertwine` is the
    invertible modification W ∘ stackify-unit => embed(oracle unit)."""
    from .indexed import embed_discrete, embed_mor

    D = embed_discrete(P)
    sres = stackify(D, J, caps)
    sheaf, unit = sheafify_with_unit(P, J, caps)
    E = embed_discrete(sheaf)
    base = P.base

    if not all(_is_discrete(sres.stack.fib[X]) for X in base.objects):
        raise InternalError("double plus of a discrete embedding is not discrete")

    comp = {}
    for X in base.objects:
        omap = {}
        for a in sres.stack.fib[X].objects:
            omap[a] = _translate_datum(a, 2)
            if omap[a] not in set(sheaf.els[X]):
                raise InternalError(
                    "nested descent datum translates outside the oracle sheaf"
                )
        mmap = {
            mid: ("id", omap[ab[0]]) for mid, ab in sres.stack.fib[X].mor.items()
        }
        comp[X] = Functor(sres.stack.fib[X], E.fib[X], omap, mmap, name="W")
    W = strict_indexed_fun(sres.stack, E, comp, name="W")

    oracle_unit = embed_mor(P, sheaf, unit, D, E, name="η_oracle")
    left = compose_indexed_funs(W, sres.unit)
    wit = {
        X: {
            V: E.fib[X].ident[left.comp[X].ob(V)]
            for V in D.fib[X].objects
        }
        for X in base.objects
    }
    intertwine = IndexedNat(left, oracle_unit, wit)
    bad = validate_indexed_nat(intertwine)
    if bad:
        raise InternalError(f"oracle units not intertwined: {bad[0]}")
    return W, intertwine, sres, sheaf, unit
