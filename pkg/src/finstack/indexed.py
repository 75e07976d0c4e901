"""Indexed categories: contravariant pseudofunctors into categories.

An `IndexedCat` D over a base C assigns a finite category D(X) to each object,
a restriction functor D(y) : D(X) -> D(Y) to each y : Y -> X, and carries the
coherence data explicitly: a compositor iso for every composable pair and a
unitor iso per object.  Nothing is assumed strict; strictness is just the
special case where all coherence components are identities
(`strict_indexed`).

Conventions, fixed once and used everywhere:

  - compositor keys mirror composition-table keys: for a table entry (g, f)
    (meaning g∘f), compositor[(g, f)][V] : D(f)(D(g)(V)) -> D(g∘f)(V).
  - unitor[X][V] : V -> D(id_X)(V).
  - an indexed functor F : D -> E over the same base has a component functor
    per object and, for y : Y -> X, a cell
    cell[y][V] : F_Y(D(y)(V)) -> E(y)(F_X(V)).

`nu` folds compositors along a composable path, giving the canonical iso from
an iterated restriction to the restriction along the composite.  Every
structural isomorphism in the later modules is built from it rather than by
hand.
"""

from itertools import product as iproduct

from . import caps as _caps
from .fincat import (
    Check,
    FinCat,
    Functor,
    InternalError,
    all_nat_trans,
    compose_functors,
    discrete_cat,
    identity_functor,
    is_equivalence,
    product_cat,
    validate_fincat,
)
from .util import fmt, stable_sorted


class IndexedCat:
    __slots__ = ("name", "base", "fib", "res", "compositor", "unitor")

    def __init__(self, base, fib, res, compositor, unitor, name=""):
        self.name = name
        self.base = base
        self.fib = dict(fib)
        self.res = dict(res)
        self.compositor = {k: dict(v) for k, v in compositor.items()}
        self.unitor = {k: dict(v) for k, v in unitor.items()}

    def __repr__(self):
        return f"<IndexedCat {self.name or '?'} over {self.base!r}>"

    def fiber(self, X) -> FinCat:
        return self.fib[X]

    def r(self, y) -> Functor:
        return self.res[y]

    def gamma(self, g, f, V):
        """Component D(f)(D(g)(V)) -> D(g∘f)(V)."""
        return self.compositor[(g, f)][V]

    def unit(self, X, V):
        """Component V -> D(id_X)(V)."""
        return self.unitor[X][V]


def strict_indexed(base, fib, res, name="") -> IndexedCat:
    """Wrap strictly functorial data with identity coherence.

    Requires res[id] to be the identity functor and iterated restriction to
    agree with restriction along composites on the nose; checked here so a
    bad caller fails at construction, not during some later validation.
    """
    for X in base.objects:
        rid = res[base.ident[X]]
        for V in fib[X].objects:
            if rid.ob(V) != V:
                raise InternalError(f"res[id_{fmt(X)}] moves object {fmt(V)}")
        for m in fib[X].mor:
            if rid.mo(m) != m:
                raise InternalError(f"res[id_{fmt(X)}] moves morphism {fmt(m)}")
    for (g, f), h in base.table.items():
        for V in fib[base.cod(g)].objects:
            if res[f].ob(res[g].ob(V)) != res[h].ob(V):
                raise InternalError(
                    f"restriction not strict on ({fmt(g)},{fmt(f)}) at {fmt(V)}"
                )
        for m in fib[base.cod(g)].mor:
            if res[f].mo(res[g].mo(m)) != res[h].mo(m):
                raise InternalError(
                    f"restriction not strict on ({fmt(g)},{fmt(f)}) at morphism"
                )
    compositor = {
        (g, f): {V: fib[base.dom(f)].ident[res[h].ob(V)] for V in fib[base.cod(g)].objects}
        for (g, f), h in base.table.items()
    }
    unitor = {
        X: {V: fib[X].ident[V] for V in fib[X].objects} for X in base.objects
    }
    return IndexedCat(base, fib, res, compositor, unitor, name=name)


def validate_indexed(D: IndexedCat, caps: _caps.Caps = _caps.DEFAULT) -> list:
    """All pseudofunctor-axiom violations, as strings."""
    errs = []
    base = D.base
    for X in base.objects:
        if X not in D.fib:
            return [f"no fibre over {fmt(X)}"]
        bad = validate_fincat(D.fib[X], caps)
        if bad:
            return [f"fibre over {fmt(X)} invalid: {bad[0]}"]
    for y, (Y, X) in base.mor.items():
        F = D.res.get(y)
        if F is None:
            return [f"no restriction along {fmt(y)}"]
        if F.src is not D.fib[X] and F.src != D.fib[X]:
            return [f"restriction along {fmt(y)} has wrong source"]
        if F.dst is not D.fib[Y] and F.dst != D.fib[Y]:
            return [f"restriction along {fmt(y)} has wrong target"]
        bad = F.validate()
        if bad:
            return [f"restriction along {fmt(y)} not a functor: {bad[0]}"]

    for X in base.objects:
        fx = D.fib[X]
        rid = D.res[base.ident[X]]
        u = D.unitor.get(X)
        if u is None:
            return [f"no unitor at {fmt(X)}"]
        for V in fx.objects:
            m = u.get(V)
            if m is None or m not in fx.mor or fx.mor[m] != (V, rid.ob(V)):
                errs.append(f"unitor at {fmt(X)} malformed at {fmt(V)}")
            elif not fx.is_iso(m):
                errs.append(f"unitor at {fmt(X)} not invertible at {fmt(V)}")
        if errs:
            return errs
        for m, (V, W) in fx.mor.items():
            if fx.compose(u[W], m) != fx.compose(rid.mo(m), u[V]):
                errs.append(f"unitor at {fmt(X)} not natural at {fmt(m)}")

    for (g, f), h in base.table.items():
        comp = D.compositor.get((g, f))
        if comp is None:
            return [f"no compositor for ({fmt(g)},{fmt(f)})"]
        src_fib = D.fib[base.cod(g)]
        tgt_fib = D.fib[base.dom(f)]
        for V in src_fib.objects:
            m = comp.get(V)
            want = (D.res[f].ob(D.res[g].ob(V)), D.res[h].ob(V))
            if m is None or m not in tgt_fib.mor or tgt_fib.mor[m] != want:
                errs.append(f"compositor ({fmt(g)},{fmt(f)}) malformed at {fmt(V)}")
            elif not tgt_fib.is_iso(m):
                errs.append(f"compositor ({fmt(g)},{fmt(f)}) not invertible at {fmt(V)}")
        if errs:
            return errs
        for m, (V, W) in src_fib.mor.items():
            lhs = tgt_fib.compose(comp[W], D.res[f].mo(D.res[g].mo(m)))
            rhs = tgt_fib.compose(D.res[h].mo(m), comp[V])
            if lhs != rhs:
                errs.append(f"compositor ({fmt(g)},{fmt(f)}) not natural at {fmt(m)}")
    if errs:
        return errs

    # Associativity: for composable y∘z∘w the two ways of collapsing agree.
    for (y, z) in base.table:
        for w in base.into(base.dom(z)):
            yz = base.table[(y, z)]
            zw = base.table[(z, w)]
            fw = D.fib[base.dom(w)]
            for V in D.fib[base.cod(y)].objects:
                lhs = fw.compose(D.gamma(yz, w, V), D.res[w].mo(D.gamma(y, z, V)))
                rhs = fw.compose(D.gamma(y, zw, V), D.gamma(z, w, D.res[y].ob(V)))
                if lhs != rhs:
                    errs.append(
                        f"associativity fails for ({fmt(y)},{fmt(z)},{fmt(w)}) at {fmt(V)}"
                    )
                    break
    # Unit: composing with an identity is absorbed by the unitor.
    for y, (Y, X) in base.mor.items():
        fy = D.fib[Y]
        for V in D.fib[X].objects:
            ry_V = D.res[y].ob(V)
            right = fy.compose(D.gamma(y, base.ident[Y], V), D.unit(Y, ry_V))
            if right != fy.ident[ry_V]:
                errs.append(f"right unit fails for {fmt(y)} at {fmt(V)}")
            left = fy.compose(D.gamma(base.ident[X], y, V), D.res[y].mo(D.unit(X, V)))
            if left != fy.ident[ry_V]:
                errs.append(f"left unit fails for {fmt(y)} at {fmt(V)}")
    return errs


def apply_path(D: IndexedCat, V, path):
    """Object image of V under D(path[-1])∘...∘D(path[0])."""
    for y in path:
        V = D.res[y].ob(V)
    return V


def path_composite(base: FinCat, X, path):
    """Composite in the base of a left-to-right composable path out of X."""
    if not path:
        return base.ident[X]
    c = path[0]
    for z in path[1:]:
        c = base.compose(c, z)
    return c


def nu(D: IndexedCat, X, path, V):
    """Canonical iso (D(p_n)∘...∘D(p_1))(V) -> D(p_1∘...∘p_n)(V).

    `path` is composable left to right starting at X: cod(path[0]) == X and
    cod(path[i+1]) == dom(path[i]).  Empty path gives the unitor at X.
    """
    if not path:
        return D.unitor[X][V]
    comp = path[0]
    m = D.fib[D.base.dom(comp)].ident[D.res[comp].ob(V)]
    for z in path[1:]:
        fz = D.fib[D.base.dom(z)]
        m = fz.compose(D.gamma(comp, z, V), D.res[z].mo(m))
        comp = D.base.compose(comp, z)
    return m


def path_cell(D: IndexedCat, X, p, q, V):
    """Canonical iso between two iterated restrictions with equal composite."""
    cp = path_composite(D.base, X, p)
    cq = path_composite(D.base, X, q)
    if cp != cq:
        raise InternalError(f"paths compose to {fmt(cp)} vs {fmt(cq)}")
    fib = D.fib[D.base.dom(cp)]
    return fib.compose(fib.inverse(nu(D, X, q, V)), nu(D, X, p, V))


class IndexedFun:
    """Pseudonatural functor between indexed categories over one base."""

    __slots__ = ("name", "D", "E", "comp", "cell")

    def __init__(self, D, E, comp, cell, name=""):
        self.name = name
        self.D = D
        self.E = E
        self.comp = dict(comp)
        self.cell = {y: dict(c) for y, c in cell.items()}

    def __repr__(self):
        return f"<IndexedFun {self.name or '?'}>"

    def at(self, X) -> Functor:
        return self.comp[X]


def validate_indexed_fun(F: IndexedFun) -> list:
    errs = []
    D, E = F.D, F.E
    base = D.base
    if E.base != base:
        return ["indexed functor endpoints live over different bases"]
    for X in base.objects:
        G = F.comp.get(X)
        if G is None:
            return [f"no component at {fmt(X)}"]
        if G.src != D.fib[X] or G.dst != E.fib[X]:
            return [f"component at {fmt(X)} has wrong endpoints"]
        bad = G.validate()
        if bad:
            return [f"component at {fmt(X)} not a functor: {bad[0]}"]

    for y, (Y, X) in base.mor.items():
        cy = F.cell.get(y)
        if cy is None:
            return [f"no cell along {fmt(y)}"]
        fy = E.fib[Y]
        for V in D.fib[X].objects:
            m = cy.get(V)
            want = (
                F.comp[Y].ob(D.res[y].ob(V)),
                E.res[y].ob(F.comp[X].ob(V)),
            )
            if m is None or m not in fy.mor or fy.mor[m] != want:
                errs.append(f"cell along {fmt(y)} malformed at {fmt(V)}")
            elif not fy.is_iso(m):
                errs.append(f"cell along {fmt(y)} not invertible at {fmt(V)}")
        if errs:
            return errs
        for m, (V, W) in D.fib[X].mor.items():
            lhs = fy.compose(cy[W], F.comp[Y].mo(D.res[y].mo(m)))
            rhs = fy.compose(E.res[y].mo(F.comp[X].mo(m)), cy[V])
            if lhs != rhs:
                errs.append(f"cell along {fmt(y)} not natural at {fmt(m)}")
    if errs:
        return errs

    for X in base.objects:
        fy = E.fib[X]
        for V in D.fib[X].objects:
            lhs = fy.compose(F.cell[base.ident[X]][V], F.comp[X].mo(D.unit(X, V)))
            if lhs != E.unit(X, F.comp[X].ob(V)):
                errs.append(f"unit coherence fails at {fmt(X)}, {fmt(V)}")

    for (g, f) in base.table:
        X = base.cod(g)
        Z = base.dom(f)
        fz = E.fib[Z]
        for V in D.fib[X].objects:
            one = fz.compose(
                F.cell[base.table[(g, f)]][V], F.comp[Z].mo(D.gamma(g, f, V))
            )
            two = fz.compose(
                E.gamma(g, f, F.comp[X].ob(V)),
                fz.compose(
                    E.res[f].mo(F.cell[g][V]),
                    F.cell[f][D.res[g].ob(V)],
                ),
            )
            if one != two:
                errs.append(
                    f"composition coherence fails for ({fmt(g)},{fmt(f)}) at {fmt(V)}"
                )
    return errs


def strict_indexed_fun(D, E, comp, name="") -> IndexedFun:
    """Indexed functor with identity cells; components must commute with
    restriction on the nose."""
    cell = {}
    for y, (Y, X) in D.base.mor.items():
        cy = {}
        for V in D.fib[X].objects:
            left = comp[Y].ob(D.res[y].ob(V))
            right = E.res[y].ob(comp[X].ob(V))
            if left != right:
                raise InternalError(
                    f"components not strict along {fmt(y)} at {fmt(V)}"
                )
            cy[V] = E.fib[Y].ident[left]
        cell[y] = cy
    return IndexedFun(D, E, comp, cell, name=name)


def identity_indexed_fun(D: IndexedCat) -> IndexedFun:
    return strict_indexed_fun(
        D, D, {X: identity_functor(D.fib[X]) for X in D.base.objects}, name="Id"
    )


def compose_indexed_funs(G: IndexedFun, F: IndexedFun) -> IndexedFun:
    """G after F; cells paste in the usual way."""
    if F.E is not G.D and F.E != G.D:
        raise InternalError("indexed functors not composable")
    comp = {
        X: compose_functors(G.comp[X], F.comp[X]) for X in F.D.base.objects
    }
    cell = {}
    for y, (Y, X) in F.D.base.mor.items():
        cy = {}
        for V in F.D.fib[X].objects:
            cy[V] = G.E.fib[Y].compose(
                G.cell[y][F.comp[X].ob(V)],
                G.comp[Y].mo(F.cell[y][V]),
            )
        cell[y] = cy
    return IndexedFun(F.D, G.E, comp, cell, name=f"{G.name}∘{F.name}" if G.name and F.name else "")


class IndexedNat:
    """Transformation between parallel indexed functors: a natural
    transformation per object, coherent with the cells."""

    __slots__ = ("F", "G", "comp")

    def __init__(self, F, G, comp):
        self.F = F
        self.G = G
        self.comp = {X: dict(c) for X, c in comp.items()}


def validate_indexed_nat(t: IndexedNat) -> list:
    F, G = t.F, t.G
    D, E = F.D, F.E
    errs = []
    for X in D.base.objects:
        cx = t.comp.get(X)
        if cx is None:
            return [f"no component at {fmt(X)}"]
        fx = E.fib[X]
        for V in D.fib[X].objects:
            m = cx.get(V)
            if m is None or m not in fx.mor or fx.mor[m] != (
                F.comp[X].ob(V),
                G.comp[X].ob(V),
            ):
                errs.append(f"component at {fmt(X)} malformed at {fmt(V)}")
        if errs:
            return errs
        for m, (V, W) in D.fib[X].mor.items():
            if fx.compose(cx[W], F.comp[X].mo(m)) != fx.compose(G.comp[X].mo(m), cx[V]):
                errs.append(f"component at {fmt(X)} not natural at {fmt(m)}")
    if errs:
        return errs
    for y, (Y, X) in D.base.mor.items():
        fy = E.fib[Y]
        for V in D.fib[X].objects:
            lhs = fy.compose(G.cell[y][V], t.comp[Y][D.res[y].ob(V)])
            rhs = fy.compose(E.res[y].mo(t.comp[X][V]), F.cell[y][V])
            if lhs != rhs:
                errs.append(f"cell coherence fails along {fmt(y)} at {fmt(V)}")
    return errs


def is_indexed_iso(t: IndexedNat) -> bool:
    E = t.F.E
    return all(
        E.fib[X].is_iso(m) for X, cx in t.comp.items() for m in cx.values()
    )


def find_indexed_natiso(F: IndexedFun, G: IndexedFun, caps: _caps.Caps = _caps.DEFAULT):
    """Invertible transformation F => G, by backtracking search; None if none.

    Per-object candidates are the natural isos between the components; the
    search prunes with the cell-coherence condition as soon as both endpoints
    of a base morphism are assigned.
    """
    D, E = F.D, F.E
    base = D.base
    objs = stable_sorted(base.objects)
    cand = {}
    for X in objs:
        cand[X] = [t.comp for t in all_nat_trans(F.comp[X], G.comp[X], iso_only=True)]
        if not cand[X]:
            return None

    edges = {}  # X -> base morphisms whose endpoints are both <= X in order
    seen = set()
    for i, X in enumerate(objs):
        seen.add(X)
        edges[X] = [
            y
            for y, (Yd, Yc) in base.mor.items()
            if (Yd == X or Yc == X) and Yd in seen and Yc in seen
        ]

    budget = [caps.max_descent]
    assigned = {}

    def coherent(y):
        Y, X = base.mor[y]
        fy = E.fib[Y]
        for V in D.fib[X].objects:
            lhs = fy.compose(G.cell[y][V], assigned[Y][D.res[y].ob(V)])
            rhs = fy.compose(E.res[y].mo(assigned[X][V]), F.cell[y][V])
            if lhs != rhs:
                return False
        return True

    def go(i):
        if i == len(objs):
            return True
        X = objs[i]
        for c in cand[X]:
            budget[0] -= 1
            if budget[0] < 0:
                raise _caps.CapExceeded("indexed iso search budget exhausted")
            assigned[X] = c
            if all(coherent(y) for y in edges[X]) and go(i + 1):
                return True
            del assigned[X]
        return False

    if go(0):
        return IndexedNat(F, G, dict(assigned))
    return None


def all_indexed_funs(D: IndexedCat, E: IndexedCat, caps: _caps.Caps = _caps.DEFAULT):
    """Yield every indexed functor D -> E (components and cells exhausted).

    A cell along y is exactly a natural iso comp_Y ∘ D(y) => E(y) ∘ comp_X,
    so per-morphism candidates come from nat-trans enumeration, then the two
    coherence axioms prune the combinations.  Strictly desk-scale; used for
    bounded uniqueness checks."""
    from .fincat import all_functors

    base = D.base
    objs = stable_sorted(base.objects)
    mors = stable_sorted(base.mor)
    budget = [caps.max_descent]

    def cells_ok(comp, cell, y):
        # unit coherence as soon as an identity cell is placed
        Y, X = base.mor[y]
        if base.is_id(y):
            fy = E.fib[X]
            for V in D.fib[X].objects:
                lhs = fy.compose(cell[y][V], comp[X].mo(D.unit(X, V)))
                if lhs != E.unit(X, comp[X].ob(V)):
                    return False
        # composition coherence for every fully assigned pair
        for (g, f), h in base.table.items():
            if g not in cell or f not in cell or h not in cell:
                continue
            if y not in (g, f, h):
                continue
            Xc = base.cod(g)
            Z = base.dom(f)
            fz = E.fib[Z]
            for V in D.fib[Xc].objects:
                one = fz.compose(cell[h][V], comp[Z].mo(D.gamma(g, f, V)))
                two = fz.compose(
                    E.gamma(g, f, comp[Xc].ob(V)),
                    fz.compose(
                        E.res[f].mo(cell[g][V]), cell[f][D.res[g].ob(V)]
                    ),
                )
                if one != two:
                    return False
        return True

    def cell_search(comp, i, cell):
        budget[0] -= 1
        if budget[0] < 0:
            raise _caps.CapExceeded("indexed functor enumeration budget exhausted")
        if i == len(mors):
            yield IndexedFun(D, E, dict(comp), {y: dict(c) for y, c in cell.items()})
            return
        y = mors[i]
        Y, X = base.mor[y]
        left = compose_functors(comp[Y], D.res[y])
        right = compose_functors(E.res[y], comp[X])
        for t in all_nat_trans(left, right, iso_only=True):
            cell[y] = t.comp
            if cells_ok(comp, cell, y):
                yield from cell_search(comp, i + 1, cell)
            del cell[y]

    pools = [list(all_functors(D.fib[X], E.fib[X], caps)) for X in objs]
    for combo in iproduct(*pools):
        comp = dict(zip(objs, combo))
        yield from cell_search(comp, 0, {})


def is_indexed_equivalence(F: IndexedFun) -> Check:
    """Componentwise test: each fibre component must be an equivalence."""
    bad = validate_indexed_fun(F)
    if bad:
        return Check(False, f"not an indexed functor: {bad[0]}")
    for X in stable_sorted(F.D.base.objects):
        c = is_equivalence(F.comp[X])
        if not c:
            return Check(False, f"component at {fmt(X)}: {c.reason}", witness=(X, c.witness))
    return Check(True, "componentwise equivalence")


def const_indexed(base: FinCat, K: FinCat, name="") -> IndexedCat:
    ident = identity_functor(K)
    return strict_indexed(
        base,
        {X: K for X in base.objects},
        {y: ident for y in base.mor},
        name=name or f"Δ{K.name}",
    )


def precompose_indexed(E: IndexedCat, F: Functor, name="") -> IndexedCat:
    """E∘F for a strict functor F between bases: fibre over k is E(F(k)).

    Because F preserves identities and composites on the nose, the coherence
    data of E transports verbatim.
    """
    base = F.src
    fib = {k: E.fib[F.ob(k)] for k in base.objects}
    res = {m: E.res[F.mo(m)] for m in base.mor}
    compositor = {
        (g, f): dict(E.compositor[(F.mo(g), F.mo(f))]) for (g, f) in base.table
    }
    unitor = {k: dict(E.unitor[F.ob(k)]) for k in base.objects}
    return IndexedCat(base, fib, res, compositor, unitor, name=name)


def precompose_indexed_fun(H, F: Functor, DF=None, EF=None, name=""):
    """H∘F on an indexed functor: components and cells transport along the
    strict base functor F.  Pass prebuilt precomposed endpoints to land
    between existing IndexedCat values."""
    DF = DF if DF is not None else precompose_indexed(H.D, F)
    EF = EF if EF is not None else precompose_indexed(H.E, F)
    comp = {k: H.comp[F.ob(k)] for k in F.src.objects}
    cell = {m: dict(H.cell[F.mo(m)]) for m in F.src.mor}
    return IndexedFun(DF, EF, comp, cell, name=name)


def product_indexed(D: IndexedCat, E: IndexedCat, name=""):
    """Fibrewise product with componentwise coherence, plus the two
    projections (both strict).  Returns (product, pr1, pr2)."""
    base = D.base
    if E.base != base:
        raise InternalError("product factors live over different bases")
    fib = {}
    for X in base.objects:
        fib[X] = product_cat([D.fib[X], E.fib[X]]).cat
    res = {}
    for y, (Y, X) in base.mor.items():
        res[y] = Functor(
            fib[X],
            fib[Y],
            {(V, W): (D.res[y].ob(V), E.res[y].ob(W)) for (V, W) in fib[X].objects},
            {(m, n): (D.res[y].mo(m), E.res[y].mo(n)) for (m, n) in fib[X].mor},
        )
    compositor = {
        (g, f): {
            (V, W): (D.gamma(g, f, V), E.gamma(g, f, W))
            for (V, W) in fib[base.cod(g)].objects
        }
        for (g, f) in base.table
    }
    unitor = {
        X: {(V, W): (D.unit(X, V), E.unit(X, W)) for (V, W) in fib[X].objects}
        for X in base.objects
    }
    P = IndexedCat(base, fib, res, compositor, unitor, name=name or "prod")
    pr1 = strict_indexed_fun(
        P,
        D,
        {
            X: Functor(
                fib[X],
                D.fib[X],
                {o: o[0] for o in fib[X].objects},
                {m: m[0] for m in fib[X].mor},
            )
            for X in base.objects
        },
        name="pr1",
    )
    pr2 = strict_indexed_fun(
        P,
        E,
        {
            X: Functor(
                fib[X],
                E.fib[X],
                {o: o[1] for o in fib[X].objects},
                {m: m[1] for m in fib[X].mor},
            )
            for X in base.objects
        },
        name="pr2",
    )
    return P, pr1, pr2


class Presheaf:
    """Set-valued contravariant functor: elements per object, restriction
    maps per morphism (act[y] : els[cod y] -> els[dom y])."""

    __slots__ = ("name", "base", "els", "act")

    def __init__(self, base, els, act, name=""):
        self.name = name
        self.base = base
        self.els = {X: tuple(v) for X, v in els.items()}
        self.act = {y: dict(a) for y, a in act.items()}

    def __repr__(self):
        return f"<Presheaf {self.name or '?'}>"


def validate_presheaf(P: Presheaf) -> list:
    errs = []
    base = P.base
    for X in base.objects:
        if X not in P.els:
            return [f"no elements over {fmt(X)}"]
    for y, (Y, X) in base.mor.items():
        a = P.act.get(y)
        if a is None:
            return [f"no action for {fmt(y)}"]
        for e in P.els[X]:
            if e not in a:
                errs.append(f"action of {fmt(y)} undefined on {fmt(e)}")
            elif a[e] not in set(P.els[Y]):
                errs.append(f"action of {fmt(y)} leaves the presheaf on {fmt(e)}")
    if errs:
        return errs
    for X in base.objects:
        for e in P.els[X]:
            if P.act[base.ident[X]][e] != e:
                errs.append(f"identity action moves {fmt(e)} over {fmt(X)}")
    for (g, f), h in base.table.items():
        for e in P.els[base.cod(g)]:
            if P.act[f][P.act[g][e]] != P.act[h][e]:
                errs.append(f"action not functorial on ({fmt(g)},{fmt(f)})")
    return errs


def embed_discrete(P: Presheaf, name="") -> IndexedCat:
    """Indexed category with discrete fibres P(X); strict by presheaf laws."""
    fib = {X: discrete_cat(P.els[X], name=f"{P.name}({fmt(X)})") for X in P.base.objects}
    res = {}
    for y, (Y, X) in P.base.mor.items():
        res[y] = Functor(
            fib[X],
            fib[Y],
            dict(P.act[y]),
            {("id", e): ("id", P.act[y][e]) for e in P.els[X]},
        )
    return strict_indexed(P.base, fib, res, name=name or f"disc({P.name})")


def validate_presheaf_mor(P: Presheaf, Q: Presheaf, t) -> list:
    """t : X -> (els[X] -> els'[X]) natural in X."""
    errs = []
    for X in P.base.objects:
        tx = t.get(X)
        if tx is None:
            return [f"no component at {fmt(X)}"]
        for e in P.els[X]:
            if e not in tx or tx[e] not in set(Q.els[X]):
                errs.append(f"component at {fmt(X)} malformed on {fmt(e)}")
    if errs:
        return errs
    for y, (Y, X) in P.base.mor.items():
        for e in P.els[X]:
            if t[Y][P.act[y][e]] != Q.act[y][t[X][e]]:
                errs.append(f"not natural along {fmt(y)} at {fmt(e)}")
    return errs


def embed_mor(P: Presheaf, Q: Presheaf, t, DP=None, DQ=None, name="") -> IndexedFun:
    """Discrete embedding of a presheaf morphism; strict by naturality.

    Pass prebuilt embeddings to make the result land between existing
    IndexedCat values instead of fresh structurally-equal copies.
    """
    DP = DP if DP is not None else embed_discrete(P)
    DQ = DQ if DQ is not None else embed_discrete(Q)
    comp = {}
    for X in P.base.objects:
        comp[X] = Functor(
            DP.fib[X],
            DQ.fib[X],
            dict(t[X]),
            {("id", e): ("id", t[X][e]) for e in P.els[X]},
        )
    return strict_indexed_fun(DP, DQ, comp, name=name)
