"""Cloven fibrations over the fibres of an indexed category, and the
round-trip between indexed categories over a flattened total category and
indexed fibrations over the original base.

The two directions:

  - `R_D` turns an indexed fibration p : E -> D (componentwise cloven
    fibrations, restrictions preserving cartesian arrows) into an indexed
    category over the total category of D.  Its fibre at (X, U) is the
    essential fibre of p at U: pairs (A, alpha) with alpha : U -> p_X(A)
    invertible, with triangle-compatible morphisms.  Reindexing picks a
    cartesian lift through the cleavage; compositors and unitors fall out of
    the uniqueness part of the lifting property.
  - `L_D` turns an indexed category A over the total category into an
    indexed fibration: the fibre over X is the flattening of A restricted to
    the vertical slice at X, with the evident projection.

`unit_eta` and `counit_eps` compare the round trips and are componentwise
equivalences on valid input; `sharp` and `flat` transpose morphisms across
the two directions and are mutually quasi-inverse up to invertible
transformation.  `check_thm_4_2_i` and `check_thm_4_2_ii` run the two
localization conformance checks: local-to-global lifting survives the plus
construction, and the localized fibration satisfies descent over the
transferred topology.
"""

from dataclasses import dataclass, field

from . import caps as _caps
from .descent import is_stack
from .fincat import (
    Check,
    FinCat,
    Functor,
    InternalError,
    validate_fincat,
)
from .groth import GrothCat, fibre_inclusion, canonical_cleavage, giraud_topology, grothendieck
from .indexed import (
    IndexedCat,
    IndexedFun,
    IndexedNat,
    compose_indexed_funs,
    path_cell,
    precompose_indexed,
    precompose_indexed_fun,
    strict_indexed_fun,
    validate_indexed,
    validate_indexed_fun,
    validate_indexed_nat,
)
from .stackify import plus_fun, stackify
from .util import fmt, stable_sorted


# ---------------------------------------------------------------------------
# cartesian structure of a single functor


def is_cartesian_over(F: Functor, m) -> bool:
    """Universal-property test: m is F-cartesian when every h into cod(m)
    whose projection factors through F(m) factors uniquely through m over
    the given base factorization."""
    E0, B0 = F.src, F.dst
    A1, A2 = E0.mor[m]
    u = F.mo(m)
    for Z in E0.objects:
        for h in E0.hom(Z, A2):
            fh = F.mo(h)
            for w in B0.hom(F.ob(Z), F.ob(A1)):
                if B0.compose(u, w) != fh:
                    continue
                ts = [
                    t
                    for t in E0.hom(Z, A1)
                    if F.mo(t) == w and E0.compose(m, t) == h
                ]
                if len(ts) != 1:
                    return False
    return True


def cartesian_lift(F: Functor, u, A):
    """Stable-least cartesian m into A with F(m) == u, or None."""
    E0, B0 = F.src, F.dst
    if B0.cod(u) != F.ob(A):
        raise ValueError("lift target does not project to the codomain of u")
    for m in E0.into(A):
        if F.mo(m) == u and is_cartesian_over(F, m):
            return m
    return None


def is_fibration_functor(F: Functor) -> Check:
    """Every (u, A) must admit a cartesian lift; the witness on success is
    the deterministic cleavage {(u, A): lift}."""
    E0, B0 = F.src, F.dst
    cleav = {}
    for A in stable_sorted(E0.objects):
        for u in B0.into(F.ob(A)):
            m = cartesian_lift(F, u, A)
            if m is None:
                return Check(
                    False,
                    f"no cartesian lift of {fmt(u)} at {fmt(A)}",
                    witness=(u, A),
                )
            cleav[(u, A)] = m
    return Check(True, "fibration", witness=cleav)


# ---------------------------------------------------------------------------
# indexed fibrations


@dataclass
class IndexedFibration:
    """A componentwise-fibration indexed functor with chosen cleavages.

    cleavages[X] maps (u, A) to the chosen p_X-cartesian morphism into A
    with projection exactly u.
    """

    p: IndexedFun
    cleavages: dict

    @property
    def source(self) -> IndexedCat:
        return self.p.D

    @property
    def target(self) -> IndexedCat:
        return self.p.E


def is_indexed_fibration(p: IndexedFun, caps: _caps.Caps = _caps.DEFAULT) -> Check:
    """Both invariants, exhaustively: each component is a fibration and each
    restriction of the source sends cartesian arrows to cartesian arrows.
    Witness on success: an IndexedFibration with deterministic cleavages."""
    bad = validate_indexed_fun(p)
    if bad:
        return Check(False, f"not an indexed functor: {bad[0]}")
    EE = p.D
    cleav = {}
    for X in stable_sorted(EE.base.objects):
        c = is_fibration_functor(p.comp[X])
        if not c:
            return Check(
                False, f"component at {fmt(X)}: {c.reason}", witness=(X, c.witness)
            )
        cleav[X] = c.witness
    for y, (Y, X) in EE.base.mor.items():
        ry = EE.res[y]
        for m in EE.fib[X].mor:
            if is_cartesian_over(p.comp[X], m) and not is_cartesian_over(
                p.comp[Y], ry.mo(m)
            ):
                return Check(
                    False,
                    f"restriction along {fmt(y)} does not preserve the "
                    f"cartesian arrow {fmt(m)}",
                    witness=(y, m),
                )
    return Check(True, "indexed fibration", witness=IndexedFibration(p, cleav))


def as_fibration(p: IndexedFun, caps: _caps.Caps = _caps.DEFAULT) -> IndexedFibration:
    c = is_indexed_fibration(p, caps)
    if not c:
        raise ValueError(f"not an indexed fibration: {c.reason}")
    return c.witness


# ---------------------------------------------------------------------------
# essential fibres


def essential_fibre_cat(
    F: Functor, U, caps: _caps.Caps = _caps.DEFAULT, name=""
) -> FinCat:
    """Objects (A, alpha) with alpha : U -> F(A) invertible; a morphism
    (alpha, beta, w) is w : A -> B with F(w)∘alpha == beta."""
    E0, B0 = F.src, F.dst
    objects = []
    for A in stable_sorted(E0.objects):
        for alpha in B0.hom(U, F.ob(A)):
            if B0.is_iso(alpha):
                objects.append((A, alpha))
    _caps.check(len(objects), caps.max_descent, "essential fibre size")
    mor = {}
    for (A, alpha) in objects:
        for (B, beta) in objects:
            for w in E0.hom(A, B):
                if B0.compose(F.mo(w), alpha) == beta:
                    mor[(alpha, beta, w)] = ((A, alpha), (B, beta))
    _caps.check(len(mor), caps.max_descent, "essential fibre size")
    ident = {(A, alpha): (alpha, alpha, E0.ident[A]) for (A, alpha) in objects}
    table = {}
    for m2, (d2, _) in mor.items():
        for m1, (_, c1) in mor.items():
            if c1 == d2:
                table[(m2, m1)] = (m1[0], m2[1], E0.compose(m2[2], m1[2]))
    cat = FinCat(
        tuple(objects), mor, ident, table, name=name or f"ess({fmt(U)})"
    )
    errs = validate_fincat(cat, caps)
    if errs:
        raise InternalError(f"essential fibre malformed: {errs[0]}")
    return cat


def _cart_factor(fe: FinCat, pX: Functor, cart, h, w):
    """The unique t with pX(t) == w and cart∘t == h."""
    cands = [
        t
        for t in fe.hom(fe.dom(h), fe.dom(cart))
        if pX.mo(t) == w and fe.compose(cart, t) == h
    ]
    if len(cands) != 1:
        raise InternalError(
            f"cartesian factorization through {fmt(cart)} over {fmt(w)} "
            f"has {len(cands)} solutions"
        )
    return cands[0]


def _ess_restriction(fib: IndexedFibration, G: GrothCat, m, src: FinCat, dst: FinCat):
    """Reindexing between essential fibres along one total morphism.

    Returns the functor together with the cartesian lift chosen per source
    object; compositors and unitors later reuse those lifts.
    """
    p = fib.p
    EE, DD = p.D, p.E
    (Y, V), _ = G.total.mor[m]
    y, a, _ = m
    re, rd = EE.res[y], DD.res[y]
    fe, fd = EE.fib[Y], DD.fib[Y]
    pY = p.comp[Y]
    omap, lifts = {}, {}
    for (A, alpha) in src.objects:
        x = fd.compose(
            fd.inverse(p.cell[y][A]), fd.compose(rd.mo(alpha), a)
        )
        lam = fib.cleavages[Y][(x, re.ob(A))]
        lifts[(A, alpha)] = lam
        omap[(A, alpha)] = (fe.dom(lam), fd.ident[V])
    mmap = {}
    for (alpha, beta, w), ((A, _), (B, _)) in src.mor.items():
        la, lb = lifts[(A, alpha)], lifts[(B, beta)]
        t = _cart_factor(fe, pY, lb, fe.compose(re.mo(w), la), fd.ident[V])
        mmap[(alpha, beta, w)] = (fd.ident[V], fd.ident[V], t)
    F = Functor(src, dst, omap, mmap, name=f"ess({fmt(m)})")
    errs = F.validate()
    if errs:
        raise InternalError(f"essential reindexing along {fmt(m)}: {errs[0]}")
    return F, lifts


def R_D(
    fib: IndexedFibration, G: GrothCat = None, caps: _caps.Caps = _caps.DEFAULT
) -> IndexedCat:
    """Indexed category over the total category of the fibration's target.

    Fibres are essential fibres; reindexing along (y, a, U') lifts the
    composite of a, the restricted comparison iso, and the inverse
    projection cell through the cleavage.  All coherence components are the
    unique cartesian comparison morphisms, and the result is validated."""
    p = fib.p
    EE, DD = p.D, p.E
    if G is None:
        G = grothendieck(DD, caps)
    elif G.source is not DD and G.source != DD:
        raise ValueError("total category was built from a different indexed category")
    total = G.total
    fibc = {
        (X, U): essential_fibre_cat(p.comp[X], U, caps, name=f"ess({fmt(X)},{fmt(U)})")
        for (X, U) in total.objects
    }
    res, lifts = {}, {}
    for m, ((Y, V), (X, U2)) in total.mor.items():
        F, lf = _ess_restriction(fib, G, m, fibc[(X, U2)], fibc[(Y, V)])
        res[m] = F
        lifts[m] = lf
    compositor = {}
    for (m2, m1), h in total.table.items():
        (Y1, V1) = total.mor[m1][0]
        (X3, U3) = total.mor[m2][1]
        y1, y2 = m1[0], m2[0]
        fe1, fd1 = EE.fib[Y1], DD.fib[Y1]
        pY1 = p.comp[Y1]
        comp = {}
        for obj in fibc[(X3, U3)].objects:
            A = obj[0]
            ob2 = res[m2].ob(obj)
            c = fe1.compose(
                EE.gamma(y2, y1, A),
                fe1.compose(EE.res[y1].mo(lifts[m2][obj]), lifts[m1][ob2]),
            )
            t = _cart_factor(fe1, pY1, lifts[h][obj], c, fd1.ident[V1])
            comp[obj] = (fd1.ident[V1], fd1.ident[V1], t)
        compositor[(m2, m1)] = comp
    unitor = {}
    for (X, U) in total.objects:
        idm = total.ident[(X, U)]
        fe, fd = EE.fib[X], DD.fib[X]
        un = {}
        for obj in fibc[(X, U)].objects:
            A, alpha = obj
            t = _cart_factor(
                fe, p.comp[X], lifts[idm][obj], EE.unit(X, A), fd.inverse(alpha)
            )
            un[obj] = (alpha, fd.ident[U], t)
        unitor[(X, U)] = un
    R = IndexedCat(
        total, fibc, res, compositor, unitor, name=f"R({p.name or '?'})"
    )
    errs = validate_indexed(R)
    if errs:
        raise InternalError(f"essential-fibre reindexing incoherent: {errs[0]}")
    return R


# ---------------------------------------------------------------------------
# the other direction: flattening the vertical slices


@dataclass
class LResult:
    """Fibration built from an indexed category over a total category.

    per_x[X] is the triple (vertical slice of the source at X, its
    flattening, the fibre inclusion functor into the total category)."""

    source: IndexedCat
    groth: GrothCat
    fib: IndexedFibration
    per_x: dict = field(repr=False)


def _canonical_lift(DD: IndexedCat, y, U):
    """Identity-component cartesian morphism (y, id, U) of the flattening."""
    return (y, DD.fib[DD.base.dom(y)].ident[DD.res[y].ob(U)], U)


def L_D(A: IndexedCat, G: GrothCat, caps: _caps.Caps = _caps.DEFAULT) -> LResult:
    """Indexed fibration whose fibre over X flattens the vertical slice of A
    at X; restriction reindexes along the canonical cartesian lifts.

    Compositors and unitors are canonical path cells, so the construction
    needs no choices beyond the cleavage of the flattening."""
    if A.base is not G.total and A.base != G.total:
        raise ValueError("source is not indexed over the given total category")
    DD = G.source
    C = DD.base
    per_x = {}
    for X in C.objects:
        incl = fibre_inclusion(G, X)
        AX = precompose_indexed(A, incl, name=f"slice({fmt(X)})")
        GX = grothendieck(AX, caps, name=f"L({fmt(X)})")
        per_x[X] = (AX, GX, incl)
    fib = {X: per_x[X][1].total for X in C.objects}

    res = {}
    for y, (Y, X) in C.mor.items():
        _, GX, inclX = per_x[X]
        _, GY, inclY = per_x[Y]
        rd = DD.res[y]
        omap, mmap = {}, {}
        for (U, x) in GX.total.objects:
            omap[(U, x)] = (rd.ob(U), A.res[_canonical_lift(DD, y, U)].ob(x))
        for (m, b, x2), ((U1, _), (U2, _)) in GX.total.mor.items():
            l1 = _canonical_lift(DD, y, U1)
            l2 = _canonical_lift(DD, y, U2)
            pc = path_cell(
                A, (X, U2), [inclX.mo(m), l1], [l2, inclY.mo(rd.mo(m))], x2
            )
            fa = A.fib[(Y, rd.ob(U1))]
            bp = fa.compose(pc, A.res[l1].mo(b))
            mmap[(m, b, x2)] = (rd.mo(m), bp, A.res[l2].ob(x2))
        F = Functor(GX.total, GY.total, omap, mmap, name=f"L({fmt(y)})")
        errs = F.validate()
        if errs:
            raise InternalError(f"slice reindexing along {fmt(y)}: {errs[0]}")
        res[y] = F

    compositor = {}
    for (y2, y1), y21 in C.table.items():
        X3 = C.cod(y2)
        Y1 = C.dom(y1)
        _, GX3, _ = per_x[X3]
        _, _, inclY1 = per_x[Y1]
        comp = {}
        for (U, x) in GX3.total.objects:
            l2 = _canonical_lift(DD, y2, U)
            l1p = _canonical_lift(DD, y1, DD.res[y2].ob(U))
            l21 = _canonical_lift(DD, y21, U)
            g = DD.gamma(y2, y1, U)
            bg = path_cell(A, (X3, U), [l2, l1p], [l21, inclY1.mo(g)], x)
            comp[(U, x)] = (g, bg, A.res[l21].ob(x))
        compositor[(y2, y1)] = comp
    unitor = {}
    for X in C.objects:
        _, GX, inclX = per_x[X]
        un = {}
        for (U, x) in GX.total.objects:
            lid = _canonical_lift(DD, C.ident[X], U)
            u = DD.unit(X, U)
            bu = path_cell(A, (X, U), [], [lid, inclX.mo(u)], x)
            un[(U, x)] = (u, bu, A.res[lid].ob(x))
        unitor[X] = un

    EL = IndexedCat(C, fib, res, compositor, unitor, name=f"L({A.name or '?'})")
    errs = validate_indexed(EL)
    if errs:
        raise InternalError(f"flattened slices incoherent: {errs[0]}")

    pL = strict_indexed_fun(
        EL, DD, {X: per_x[X][1].proj for X in C.objects}, name=f"pL({A.name or '?'})"
    )
    cleav = {}
    for X in C.objects:
        _, GX, _ = per_x[X]
        cl = canonical_cleavage(GX)
        fdx = DD.fib[X]
        cleav[X] = {
            (u, (fdx.cod(u), x2)): lam for (u, x2), lam in cl.lifts.items()
        }
    return LResult(A, G, IndexedFibration(pL, cleav), per_x)


def groth_map(Fm: IndexedFun, GA: GrothCat, GB: GrothCat) -> Functor:
    """Total functor induced between flattenings by an indexed functor."""
    omap = {(U, x): (U, Fm.comp[U].ob(x)) for (U, x) in GA.total.objects}
    mmap = {}
    for (m, b, x2), ((U1, _), (U2, _)) in GA.total.mor.items():
        fb = Fm.E.fib[U1]
        mmap[(m, b, x2)] = (
            m,
            fb.compose(Fm.cell[m][x2], Fm.comp[U1].mo(b)),
            Fm.comp[U2].ob(x2),
        )
    F = Functor(GA.total, GB.total, omap, mmap, name=f"G({Fm.name or '?'})")
    errs = F.validate()
    if errs:
        raise InternalError(f"flattened functor malformed: {errs[0]}")
    return F


# ---------------------------------------------------------------------------
# unit and counit of the round trip


def unit_eta(
    A: IndexedCat,
    G: GrothCat,
    caps: _caps.Caps = _caps.DEFAULT,
    L: LResult = None,
    R: IndexedCat = None,
) -> IndexedFun:
    """A -> R_D(L_D(A)): send x to ((U, x), identity comparison).

    The returned functor's target is the computed round trip, available as
    `.E`.  Componentwise an equivalence on valid input."""
    DD = G.source
    L = L if L is not None else L_D(A, G, caps)
    R = R if R is not None else R_D(L.fib, G, caps)
    comps = {}
    for (X, U) in G.total.objects:
        _, GX, _ = L.per_x[X]
        fd = DD.fib[X]
        iU = fibre_inclusion(GX, U)
        omap = {x: ((U, x), fd.ident[U]) for x in A.fib[(X, U)].objects}
        mmap = {
            f: (fd.ident[U], fd.ident[U], iU.mo(f)) for f in A.fib[(X, U)].mor
        }
        F = Functor(A.fib[(X, U)], R.fib[(X, U)], omap, mmap, name=f"eta({fmt(X)},{fmt(U)})")
        errs = F.validate()
        if errs:
            raise InternalError(f"unit component at {fmt((X, U))}: {errs[0]}")
        comps[(X, U)] = F
    cells = {}
    for m, ((Y, V), (X, U2)) in G.total.mor.items():
        y, a, _ = m
        _, _, inclY = L.per_x[Y]
        fdY = DD.fib[Y]
        l2 = _canonical_lift(DD, y, U2)
        iYa = inclY.mo(a)
        cm = {}
        for x in A.fib[(X, U2)].objects:
            tgt = A.res[iYa].ob(A.res[l2].ob(x))
            pc = path_cell(A, (X, U2), [m], [l2, iYa], x)
            fa = A.fib[(Y, V)]
            bt = fa.compose(A.unitor[(Y, V)][tgt], pc)
            t = (fdY.ident[V], bt, tgt)
            cm[x] = (fdY.ident[V], fdY.ident[V], t)
        cells[m] = cm
    eta = IndexedFun(A, R, comps, cells, name="eta")
    errs = validate_indexed_fun(eta)
    if errs:
        raise InternalError(f"unit not pseudonatural: {errs[0]}")
    return eta


def counit_eps(
    fib: IndexedFibration,
    G: GrothCat,
    caps: _caps.Caps = _caps.DEFAULT,
    R: IndexedCat = None,
    LR: LResult = None,
) -> IndexedFun:
    """L_D(R_D(p)) -> source of p: project an essential-fibre point to its
    carrier, transporting morphisms along the recorded cartesian lifts.

    Also validates the comparison square against the two projections; the
    components are equivalences on valid input."""
    p = fib.p
    EE, DD = p.D, p.E
    C = DD.base
    R = R if R is not None else R_D(fib, G, caps)
    LR = LR if LR is not None else L_D(R, G, caps)
    comps = {}
    for X in C.objects:
        _, GX, _ = LR.per_x[X]
        fe, fd = EE.fib[X], DD.fib[X]
        idX = C.ident[X]
        reI = EE.res[idX]
        omap = {(U, oA): oA[0] for (U, oA) in GX.total.objects}
        mmap = {}
        for (m, b, obj2), _ends in GX.total.mor.items():
            A2, alpha2 = obj2
            am = fd.compose(DD.unit(X, fd.cod(m)), m)
            x = fd.compose(
                fd.inverse(p.cell[idX][A2]),
                fd.compose(DD.res[idX].mo(alpha2), am),
            )
            lam = fib.cleavages[X][(x, reI.ob(A2))]
            mmap[(m, b, obj2)] = fe.compose(
                fe.inverse(EE.unit(X, A2)), fe.compose(lam, b[2])
            )
        F = Functor(GX.total, fe, omap, mmap, name=f"eps({fmt(X)})")
        errs = F.validate()
        if errs:
            raise InternalError(f"counit component at {fmt(X)}: {errs[0]}")
        comps[X] = F
    cells = {}
    for y, (Y, X) in C.mor.items():
        fdY = DD.fib[Y]
        re, rd = EE.res[y], DD.res[y]
        cm = {}
        for (U, oA) in LR.per_x[X][1].total.objects:
            A, alpha = oA
            x = fdY.compose(fdY.inverse(p.cell[y][A]), rd.mo(alpha))
            cm[(U, oA)] = fib.cleavages[Y][(x, re.ob(A))]
        cells[y] = cm
    eps = IndexedFun(LR.fib.p.D, EE, comps, cells, name="eps")
    errs = validate_indexed_fun(eps)
    if errs:
        raise InternalError(f"counit not pseudonatural: {errs[0]}")
    square = IndexedNat(
        compose_indexed_funs(p, eps),
        LR.fib.p,
        {
            X: {
                (U, oA): DD.fib[X].inverse(oA[1])
                for (U, oA) in LR.per_x[X][1].total.objects
            }
            for X in C.objects
        },
    )
    errs = validate_indexed_nat(square)
    if errs:
        raise InternalError(f"counit projection square broken: {errs[0]}")
    return eps


# ---------------------------------------------------------------------------
# morphisms of fibrations and the two transposes


@dataclass
class FibMor:
    """Morphism of indexed fibrations over one base: a functor F between the
    sources and an invertible comparison phi : dst.p ∘ F => src.p."""

    src: IndexedFibration
    dst: IndexedFibration
    F: IndexedFun
    phi: IndexedNat


def validate_fib_mor(fm: FibMor) -> list:
    errs = validate_indexed_fun(fm.F)
    if errs:
        return [f"functor part: {errs[0]}"]
    errs = validate_indexed_nat(fm.phi)
    if errs:
        return [f"comparison: {errs[0]}"]
    out = []
    DD = fm.src.p.E
    for X in DD.base.objects:
        fd = DD.fib[X]
        for V, c in fm.phi.comp[X].items():
            if not fd.is_iso(c):
                out.append(f"comparison not invertible at {fmt(X)}, {fmt(V)}")
    for X in DD.base.objects:
        p1, p2 = fm.src.p.comp[X], fm.dst.p.comp[X]
        for m in fm.src.p.D.fib[X].mor:
            if is_cartesian_over(p1, m) and not is_cartesian_over(
                p2, fm.F.comp[X].mo(m)
            ):
                out.append(
                    f"cartesian arrow {fmt(m)} at {fmt(X)} not preserved"
                )
    return out


def r_d_mor(
    fm: FibMor,
    G: GrothCat,
    caps: _caps.Caps = _caps.DEFAULT,
    R_src: IndexedCat = None,
    R_dst: IndexedCat = None,
) -> IndexedFun:
    """Functor between the essential-fibre indexed categories induced by a
    fibration morphism; cells are the unique cartesian comparisons."""
    p1, p2 = fm.src, fm.dst
    E1, E2 = p1.p.D, p2.p.D
    DD = p1.p.E
    R1 = R_src if R_src is not None else R_D(p1, G, caps)
    R2 = R_dst if R_dst is not None else R_D(p2, G, caps)
    comps = {}
    for (X, U) in G.total.objects:
        fd = DD.fib[X]
        FX = fm.F.comp[X]
        phiX = fm.phi.comp[X]
        omap = {}
        for (B, alpha) in R1.fib[(X, U)].objects:
            omap[(B, alpha)] = (FX.ob(B), fd.compose(fd.inverse(phiX[B]), alpha))
        mmap = {}
        for (alpha, beta, w), ((B, _), (B2, _)) in R1.fib[(X, U)].mor.items():
            mmap[(alpha, beta, w)] = (
                omap[(B, alpha)][1],
                omap[(B2, beta)][1],
                FX.mo(w),
            )
        F = Functor(R1.fib[(X, U)], R2.fib[(X, U)], omap, mmap)
        errs = F.validate()
        if errs:
            raise InternalError(f"induced component at {fmt((X, U))}: {errs[0]}")
        comps[(X, U)] = F
    cells = {}
    for m, ((Y, V), (X, U2)) in G.total.mor.items():
        y, a, _ = m
        fdY = DD.fib[Y]
        feY = E2.fib[Y]
        rd = DD.res[y]
        cm = {}
        for (B, alpha) in R1.fib[(X, U2)].objects:
            x1 = fdY.compose(
                fdY.inverse(p1.p.cell[y][B]), fdY.compose(rd.mo(alpha), a)
            )
            l1 = p1.cleavages[Y][(x1, E1.res[y].ob(B))]
            B1p = E1.fib[Y].dom(l1)
            FXB = fm.F.comp[X].ob(B)
            alpha2 = comps[(X, U2)].ob((B, alpha))[1]
            x2 = fdY.compose(
                fdY.inverse(p2.p.cell[y][FXB]), fdY.compose(rd.mo(alpha2), a)
            )
            l2 = p2.cleavages[Y][(x2, E2.res[y].ob(FXB))]
            c = feY.compose(fm.F.cell[y][B], fm.F.comp[Y].mo(l1))
            t = _cart_factor(feY, p2.p.comp[Y], l2, c, fm.phi.comp[Y][B1p])
            cm[(B, alpha)] = (
                fdY.compose(fdY.inverse(fm.phi.comp[Y][B1p]), fdY.ident[V]),
                fdY.ident[V],
                t,
            )
        cells[m] = cm
    out = IndexedFun(R1, R2, comps, cells, name=f"R({fm.F.name or '?'})")
    errs = validate_indexed_fun(out)
    if errs:
        raise InternalError(f"induced essential-fibre functor: {errs[0]}")
    return out


def l_d_mor(H: IndexedFun, LA: LResult, LR: LResult) -> IndexedFun:
    """Functor between flattened vertical slices induced fibrewise by H."""
    G = LA.groth
    DD = G.source
    C = DD.base
    comps = {}
    for X in C.objects:
        AX, GAX, incl = LA.per_x[X]
        RX, GRX, _ = LR.per_x[X]
        HX = precompose_indexed_fun(H, incl, DF=AX, EF=RX)
        comps[X] = groth_map(HX, GAX, GRX)
    cells = {}
    for y, (Y, X) in C.mor.items():
        fdY = DD.fib[Y]
        rd = DD.res[y]
        cm = {}
        for (U, x) in LA.per_x[X][1].total.objects:
            l2 = _canonical_lift(DD, y, U)
            V2 = rd.ob(U)
            tgt = H.E.res[l2].ob(H.comp[(X, U)].ob(x))
            fr = H.E.fib[(Y, V2)]
            b0 = fr.compose(H.E.unitor[(Y, V2)][tgt], H.cell[l2][x])
            cm[(U, x)] = (fdY.ident[V2], b0, tgt)
        cells[y] = cm
    out = IndexedFun(
        LA.fib.p.D, LR.fib.p.D, comps, cells, name=f"L({H.name or '?'})"
    )
    errs = validate_indexed_fun(out)
    if errs:
        raise InternalError(f"induced slice functor: {errs[0]}")
    return out


def sharp(
    fm: FibMor,
    LA: LResult,
    G: GrothCat,
    caps: _caps.Caps = _caps.DEFAULT,
    R_src: IndexedCat = None,
    R_dst: IndexedCat = None,
) -> IndexedFun:
    """Transpose a fibration morphism out of a flattened slice fibration to
    an indexed functor into the essential-fibre indexed category."""
    if fm.src is not LA.fib:
        raise ValueError("transpose source must be the given flattening")
    R_src = R_src if R_src is not None else R_D(LA.fib, G, caps)
    R_dst = R_dst if R_dst is not None else R_D(fm.dst, G, caps)
    eta = unit_eta(LA.source, G, caps, L=LA, R=R_src)
    rm = r_d_mor(fm, G, caps, R_src=R_src, R_dst=R_dst)
    return compose_indexed_funs(rm, eta)


def flat(
    H: IndexedFun,
    fib: IndexedFibration,
    G: GrothCat,
    caps: _caps.Caps = _caps.DEFAULT,
    LA: LResult = None,
    LR: LResult = None,
) -> FibMor:
    """Transpose an indexed functor into the essential-fibre indexed
    category to a fibration morphism out of the flattened slices."""
    A, R = H.D, H.E
    DD = G.source
    LA = LA if LA is not None else L_D(A, G, caps)
    LR = LR if LR is not None else L_D(R, G, caps)
    lm = l_d_mor(H, LA, LR)
    eps = counit_eps(fib, G, caps, R=R, LR=LR)
    F = compose_indexed_funs(eps, lm)
    phi = IndexedNat(
        compose_indexed_funs(fib.p, F),
        LA.fib.p,
        {
            X: {
                (U, x): DD.fib[X].inverse(H.comp[(X, U)].ob(x)[1])
                for (U, x) in LA.per_x[X][1].total.objects
            }
            for X in DD.base.objects
        },
    )
    errs = validate_indexed_nat(phi)
    if errs:
        raise InternalError(f"transpose comparison square broken: {errs[0]}")
    return FibMor(LA.fib, fib, F, phi)


# ---------------------------------------------------------------------------
# localization conformance checks


def check_thm_4_2_i(
    fib: IndexedFibration, J, caps: _caps.Caps = _caps.DEFAULT
) -> Check:
    """The induced functor on plus (and double plus) outputs must still be an
    indexed fibration."""
    p = fib.p
    se = stackify(p.D, J, caps)
    sd = stackify(p.E, J, caps)
    p1 = plus_fun(p, se.once, sd.once)
    c1 = is_indexed_fibration(p1, caps)
    if not c1:
        return Check(False, f"after plus: {c1.reason}", witness=(c1, None))
    p2 = plus_fun(p1, se.twice, sd.twice)
    c2 = is_indexed_fibration(p2, caps)
    if not c2:
        return Check(False, f"after double plus: {c2.reason}", witness=(c1, c2))
    return Check(
        True, "plus and double plus preserve the fibration property", witness=(c1, c2)
    )


def _iso_comma_fibration(
    sp: IndexedFun, unit: IndexedFun, caps: _caps.Caps = _caps.DEFAULT
) -> IndexedFun:
    """Fibrewise iso-comma of the localization unit against a localized
    fibration, with its strict projection to the unit's source."""
    DD = unit.D
    DDpp = unit.E
    EEpp = sp.D
    C = DD.base
    fib = {}
    for X in C.objects:
        fd, fdp, fe = DD.fib[X], DDpp.fib[X], EEpp.fib[X]
        uX, sX = unit.comp[X], sp.comp[X]
        objs = [
            (V, B, xi)
            for V in fd.objects
            for B in fe.objects
            for xi in fdp.hom(uX.ob(V), sX.ob(B))
            if fdp.is_iso(xi)
        ]
        _caps.check(len(objs), caps.max_descent, "iso-comma size")
        mor = {}
        for o1 in objs:
            V, B, xi = o1
            for o2 in objs:
                V2, B2, xi2 = o2
                for v in fd.hom(V, V2):
                    uv = uX.mo(v)
                    for b in fe.hom(B, B2):
                        if fdp.compose(sX.mo(b), xi) == fdp.compose(xi2, uv):
                            mor[(o1, o2, v, b)] = (o1, o2)
        _caps.check(len(mor), caps.max_descent, "iso-comma size")
        ident = {
            (V, B, xi): ((V, B, xi), (V, B, xi), fd.ident[V], fe.ident[B])
            for (V, B, xi) in objs
        }
        table = {}
        for m2, (d2, c2) in mor.items():
            for m1, (d1, c1) in mor.items():
                if c1 == d2:
                    table[(m2, m1)] = (
                        d1,
                        c2,
                        fd.compose(m2[2], m1[2]),
                        fe.compose(m2[3], m1[3]),
                    )
        cat = FinCat(tuple(objs), mor, ident, table, name=f"comma({fmt(X)})")
        errs = validate_fincat(cat, caps)
        if errs:
            raise InternalError(f"iso-comma fibre at {fmt(X)}: {errs[0]}")
        fib[X] = cat

    res = {}
    for y, (Y, X) in C.mor.items():
        fdpY = DDpp.fib[Y]
        rd, rdp, re = DD.res[y], DDpp.res[y], EEpp.res[y]
        omap = {}
        for (V, B, xi) in fib[X].objects:
            xi_y = fdpY.compose(
                fdpY.inverse(sp.cell[y][B]),
                fdpY.compose(rdp.mo(xi), unit.cell[y][V]),
            )
            omap[(V, B, xi)] = (rd.ob(V), re.ob(B), xi_y)
        mmap = {}
        for (o1, o2, v, b) in fib[X].mor:
            mmap[(o1, o2, v, b)] = (omap[o1], omap[o2], rd.mo(v), re.mo(b))
        F = Functor(fib[X], fib[Y], omap, mmap)
        errs = F.validate()
        if errs:
            raise InternalError(f"iso-comma reindexing along {fmt(y)}: {errs[0]}")
        res[y] = F
    compositor = {}
    for (y2, y1), y21 in C.table.items():
        X3 = C.cod(y2)
        comp = {}
        for o in fib[X3].objects:
            V, B, _ = o
            comp[o] = (
                res[y1].ob(res[y2].ob(o)),
                res[y21].ob(o),
                DD.gamma(y2, y1, V),
                EEpp.gamma(y2, y1, B),
            )
        compositor[(y2, y1)] = comp
    unitor = {}
    for X in C.objects:
        un = {}
        for o in fib[X].objects:
            V, B, _ = o
            un[o] = (o, res[C.ident[X]].ob(o), DD.unit(X, V), EEpp.unit(X, B))
        unitor[X] = un
    H = IndexedCat(C, fib, res, compositor, unitor, name="comma")
    errs = validate_indexed(H)
    if errs:
        raise InternalError(f"iso-comma incoherent: {errs[0]}")
    q = strict_indexed_fun(
        H,
        DD,
        {
            X: Functor(
                fib[X],
                DD.fib[X],
                {o: o[0] for o in fib[X].objects},
                {mid: mid[2] for mid in fib[X].mor},
            )
            for X in C.objects
        },
        name="q",
    )
    return q


def check_thm_4_2_ii(
    fib: IndexedFibration,
    J,
    G: GrothCat = None,
    caps: _caps.Caps = _caps.DEFAULT,
) -> Check:
    """Localize the fibration, pull it back along the localization unit, and
    test descent of its essential-fibre indexed category over the
    transferred topology."""
    p = fib.p
    if G is None:
        G = grothendieck(p.E, caps)
    se = stackify(p.D, J, caps)
    sd = stackify(p.E, J, caps)
    p1 = plus_fun(p, se.once, sd.once)
    sp = plus_fun(p1, se.twice, sd.twice)
    q = _iso_comma_fibration(sp, sd.unit, caps)
    cq = is_indexed_fibration(q, caps)
    if not cq:
        return Check(
            False, f"pullback projection not a fibration: {cq.reason}", witness=cq
        )
    Rq = R_D(cq.witness, G, caps)
    JD = giraud_topology(G, J, caps)
    st = is_stack(Rq, JD, caps)
    if not st:
        return Check(False, f"descent fails upstairs: {st.reason}", witness=st)
    return Check(
        True,
        "localized fibration satisfies descent over the transferred topology",
        witness=st,
    )
