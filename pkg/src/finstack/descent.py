"""Descent data over a sieve and the stack/prestack predicates.

A descent datum over a sieve R on X in an indexed category D picks an object
U_f of D(dom f) for every member f, together with coherence isos
coh[(f, g)] : D(g)(U_f) -> U_{f∘g} for every member f and every g into dom f,
subject to a cocycle identity and a normalization identity tying coh at
identities to the unitor.  Descent morphisms are member-wise fibre morphisms
compatible with the coherences.

`desc_cat` enumerates the whole descent category by backtracking;
`comparison` is the canonical functor D(X) -> Desc(R, D).  A prestack is an
indexed category whose comparison functors are all fully faithful, a stack
one whose comparison functors are all equivalences.
"""

from . import caps as _caps
from .fincat import Check, FinCat, Functor, InternalError
from .indexed import IndexedCat, IndexedFun
from .site import Sieve, Topology
from .util import ckey, fmt, stable_sorted


class DescentDatum:
    __slots__ = ("obj", "coh", "_key", "_hash")

    def __init__(self, obj, coh):
        self.obj = dict(obj)
        self.coh = dict(coh)
        self._key = (
            tuple((f, self.obj[f]) for f in stable_sorted(self.obj)),
            tuple((p, self.coh[p]) for p in stable_sorted(self.coh)),
        )
        self._hash = hash(self._key)

    def __eq__(self, other):
        if not isinstance(other, DescentDatum):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return self._hash

    def _ckey(self):
        return ckey(self._key)

    def __repr__(self):
        parts = ", ".join(f"{fmt(f)}↦{fmt(o)}" for f, o in self._key[0][:4])
        more = "…" if len(self._key[0]) > 4 else ""
        return f"<DescentDatum {parts}{more}>"


def coh_pairs(D: IndexedCat, R: Sieve):
    """All (f, g) with f a member and g into dom f, in stable order."""
    base = D.base
    out = []
    for f in R.members():
        for g in base.into(base.dom(f)):
            out.append((f, g))
    return out


def validate_datum(D: IndexedCat, R: Sieve, a: DescentDatum) -> list:
    base = D.base
    errs = []
    for f in R.mors:
        if f not in a.obj:
            return [f"no object assigned at {fmt(f)}"]
        if a.obj[f] not in set(D.fib[base.dom(f)].objects):
            return [f"object at {fmt(f)} not in its fibre"]
    for (f, g) in coh_pairs(D, R):
        y = base.dom(g)
        fg = base.compose(f, g)
        fib = D.fib[y]
        m = a.coh.get((f, g))
        want = (D.res[g].ob(a.obj[f]), a.obj[fg])
        if m is None or m not in fib.mor or fib.mor[m] != want:
            errs.append(f"coherence at ({fmt(f)},{fmt(g)}) malformed")
        elif not fib.is_iso(m):
            errs.append(f"coherence at ({fmt(f)},{fmt(g)}) not invertible")
    if errs:
        return errs

    # Normalization: coh at an identity inverts the unitor.
    for f in R.mors:
        y = base.dom(f)
        u = D.unit(y, a.obj[f])
        if a.coh[(f, base.ident[y])] != D.fib[y].inverse(u):
            errs.append(f"normalization fails at {fmt(f)}")

    # Cocycle: restricting a coherence and composing agrees with coherence
    # along the composite, mediated by the compositor.
    for f in R.members():
        for g in base.into(base.dom(f)):
            fg = base.compose(f, g)
            for h in base.into(base.dom(g)):
                fib = D.fib[base.dom(h)]
                gh = base.compose(g, h)
                lhs = fib.compose(a.coh[(f, gh)], D.gamma(g, h, a.obj[f]))
                rhs = fib.compose(a.coh[(fg, h)], D.res[h].mo(a.coh[(f, g)]))
                if lhs != rhs:
                    errs.append(
                        f"cocycle fails at ({fmt(f)},{fmt(g)},{fmt(h)})"
                    )
    return errs


def enumerate_data(D: IndexedCat, R: Sieve, caps: _caps.Caps = _caps.DEFAULT):
    """All descent data over R, by backtracking over member objects and then
    coherence isos, pruning with normalization and the cocycle."""
    base = D.base
    members = R.members()
    pairs = coh_pairs(D, R)
    pair_index = {p: i for i, p in enumerate(pairs)}

    # Cocycle triples, each tagged with the position after which all of its
    # three coherence keys are assigned.
    triples = []
    for f in members:
        for g in base.into(base.dom(f)):
            fg = base.compose(f, g)
            for h in base.into(base.dom(g)):
                gh = base.compose(g, h)
                keys = [(f, gh), (fg, h), (f, g)]
                triples.append((f, g, h, fg, gh, max(pair_index[k] for k in keys)))
    by_pos = {}
    for t in triples:
        by_pos.setdefault(t[5], []).append(t)

    out = []
    budget = [caps.max_descent]

    def close(obj):
        coh = {}

        def go(i):
            budget[0] -= 1
            if budget[0] < 0:
                raise _caps.CapExceeded("descent enumeration budget exhausted")
            if i == len(pairs):
                out.append(DescentDatum(obj, coh))
                return
            (f, g) = pairs[i]
            y = base.dom(g)
            fib = D.fib[y]
            src = D.res[g].ob(obj[f])
            dst = obj[base.compose(f, g)]
            if base.is_id(g):
                cands = [fib.inverse(D.unit(y, obj[f]))]
                if cands[0] is None or fib.mor[cands[0]] != (src, dst):
                    return
            else:
                cands = [m for m in fib.hom(src, dst) if fib.is_iso(m)]
            for m in cands:
                coh[pairs[i]] = m
                ok = True
                for (tf, tg, th, tfg, tgh, _) in by_pos.get(i, ()):
                    fibh = D.fib[base.dom(th)]
                    lhs = fibh.compose(coh[(tf, tgh)], D.gamma(tg, th, obj[tf]))
                    rhs = fibh.compose(coh[(tfg, th)], D.res[th].mo(coh[(tf, tg)]))
                    if lhs != rhs:
                        ok = False
                        break
                if ok:
                    go(i + 1)
            coh.pop(pairs[i], None)

        go(0)

    def assign(j, obj):
        if j == len(members):
            close(dict(obj))
            return
        f = members[j]
        for U in D.fib[base.dom(f)].objects:
            obj[f] = U
            assign(j + 1, obj)
        obj.pop(members[j], None)

    assign(0, {})
    _caps.check(len(out), caps.max_descent, "descent data count")
    return out


def desc_hom(D: IndexedCat, R: Sieve, a: DescentDatum, b: DescentDatum,
             caps: _caps.Caps = _caps.DEFAULT):
    """All descent morphisms a -> b, as dicts member -> fibre morphism."""
    base = D.base
    members = R.members()
    order = {f: i for i, f in enumerate(members)}
    pairs = coh_pairs(D, R)
    # Constraint (f, g) can fire once comp[f] and comp[f∘g] are both known.
    ready = {}
    for (f, g) in pairs:
        fg = base.compose(f, g)
        ready.setdefault(max(order[f], order[fg]), []).append((f, g, fg))

    out = []
    budget = [caps.max_descent]
    comp = {}

    def go(j):
        budget[0] -= 1
        if budget[0] < 0:
            raise _caps.CapExceeded("descent hom enumeration budget exhausted")
        if j == len(members):
            out.append(dict(comp))
            return
        f = members[j]
        fib = D.fib[base.dom(f)]
        for m in fib.hom(a.obj[f], b.obj[f]):
            comp[f] = m
            ok = True
            for (cf, cg, cfg) in ready.get(j, ()):
                fibg = D.fib[base.dom(cg)]
                lhs = fibg.compose(b.coh[(cf, cg)], D.res[cg].mo(comp[cf]))
                rhs = fibg.compose(comp[cfg], a.coh[(cf, cg)])
                if lhs != rhs:
                    ok = False
                    break
            if ok:
                go(j + 1)
        comp.pop(f, None)

    go(0)
    return out


def mor_id(a: DescentDatum, b: DescentDatum, comp):
    return (a, b, tuple((f, comp[f]) for f in stable_sorted(comp)))


def mor_components(mid):
    return dict(mid[2])


def desc_cat(D: IndexedCat, R: Sieve, caps: _caps.Caps = _caps.DEFAULT) -> FinCat:
    """The descent category Desc(R, D), enumerated in full and validated by
    construction: composition is member-wise in the fibres."""
    base = D.base
    data = enumerate_data(D, R, caps)
    members = R.members()
    mor = {}
    homs = {}
    for a in data:
        for b in data:
            for comp in desc_hom(D, R, a, b, caps):
                mid = mor_id(a, b, comp)
                mor[mid] = (a, b)
                homs.setdefault((a, b), []).append(mid)
    ident = {}
    for a in data:
        comp = {f: D.fib[base.dom(f)].ident[a.obj[f]] for f in members}
        mid = mor_id(a, a, comp)
        if mid not in mor:
            raise InternalError("identity descent morphism not enumerated")
        ident[a] = mid
    table = {}
    for (a, b), ms1 in homs.items():
        for (b2, c), ms2 in homs.items():
            if b2 != b:
                continue
            for m1 in ms1:
                c1 = mor_components(m1)
                for m2 in ms2:
                    c2 = mor_components(m2)
                    comp = {
                        f: D.fib[base.dom(f)].compose(c2[f], c1[f])
                        for f in members
                    }
                    mid = mor_id(a, c, comp)
                    if mid not in mor:
                        raise InternalError("descent morphisms do not compose")
                    table[(m2, m1)] = mid
    name = f"Desc({fmt(R.target)})"
    return FinCat(tuple(data), mor, ident, table, name=name)


def comparison_datum(D: IndexedCat, R: Sieve, V) -> DescentDatum:
    """Image of V ∈ D(X) under the comparison: restrict along every member,
    with coherence given by the compositors."""
    base = D.base
    obj = {f: D.res[f].ob(V) for f in R.mors}
    coh = {}
    for (f, g) in coh_pairs(D, R):
        coh[(f, g)] = D.gamma(f, g, V)
    return DescentDatum(obj, coh)


def comparison(D: IndexedCat, R: Sieve, desc: FinCat,
               caps: _caps.Caps = _caps.DEFAULT) -> Functor:
    """Canonical functor D(X) -> Desc(R, D) into an already-built descent
    category."""
    base = D.base
    X = R.target
    fx = D.fib[X]
    omap = {V: comparison_datum(D, R, V) for V in fx.objects}
    mmap = {}
    for m, (V, W) in fx.mor.items():
        comp = {f: D.res[f].mo(m) for f in R.mors}
        mid = mor_id(omap[V], omap[W], comp)
        if mid not in desc.mor:
            raise InternalError("comparison image is not a descent morphism")
        mmap[m] = mid
    return Functor(fx, desc, omap, mmap, name=f"cmp({fmt(X)})")


def restrict_datum(D: IndexedCat, a: DescentDatum, y, S: Sieve) -> DescentDatum:
    """Pull a datum over R on X back to one over S ⊆ y*(R) on Y = dom y."""
    base = D.base
    obj = {}
    coh = {}
    for g in S.mors:
        yg = base.compose(y, g)
        if yg not in a.obj:
            raise InternalError(
                f"restriction escapes the datum: {fmt(y)}∘{fmt(g)} not a member"
            )
        obj[g] = a.obj[yg]
    for (g, h) in coh_pairs(D, S):
        coh[(g, h)] = a.coh[(base.compose(y, g), h)]
    return DescentDatum(obj, coh)


def push_datum(F: IndexedFun, R: Sieve, a: DescentDatum) -> DescentDatum:
    """Image of a datum under an indexed functor; coherences are corrected by
    the (inverted) pseudonaturality cells."""
    D, E = F.D, F.E
    base = D.base
    obj = {f: F.comp[base.dom(f)].ob(a.obj[f]) for f in a.obj}
    coh = {}
    for (f, g) in coh_pairs(D, R):
        y = base.dom(g)
        fib = E.fib[y]
        cell = F.cell[g][a.obj[f]]
        coh[(f, g)] = fib.compose(
            F.comp[y].mo(a.coh[(f, g)]), fib.inverse(cell)
        )
    return DescentDatum(obj, coh)


def push_mor(F: IndexedFun, comp):
    """Member-wise image of a descent morphism's components."""
    base = F.D.base
    return {f: F.comp[base.dom(f)].mo(m) for f, m in comp.items()}


def _comparison_ff_at(D, J, X, R, caps) -> Check:
    base = D.base
    fx = D.fib[X]
    for V in fx.objects:
        a = comparison_datum(D, R, V)
        for W in fx.objects:
            b = comparison_datum(D, R, W)
            image = {}
            for m in fx.hom(V, W):
                comp = tuple(
                    (f, D.res[f].mo(m)) for f in stable_sorted(R.mors)
                )
                if comp in image:
                    return Check(
                        False,
                        f"comparison not faithful on hom({fmt(V)},{fmt(W)}) "
                        f"over {fmt(X)}",
                        witness=(X, R, image[comp], m),
                    )
                image[comp] = m
            for dm in desc_hom(D, R, a, b, caps):
                key = tuple((f, dm[f]) for f in stable_sorted(R.mors))
                if key not in image:
                    return Check(
                        False,
                        f"comparison not full on hom({fmt(V)},{fmt(W)}) over "
                        f"{fmt(X)}: a descent morphism has no preimage",
                        witness=(X, R, dm),
                    )
    return Check(True, "comparison fully faithful")


def is_prestack(D: IndexedCat, J: Topology, caps: _caps.Caps = _caps.DEFAULT) -> Check:
    """Comparison fully faithful for every covering sieve."""
    for X in stable_sorted(D.base.objects):
        for R in J.covers_of(X):
            c = _comparison_ff_at(D, J, X, R, caps)
            if not c:
                return c
    return Check(True, "prestack")


def _iso_matching(D, R, a, b, caps) -> bool:
    base = D.base
    for dm in desc_hom(D, R, a, b, caps):
        if all(D.fib[base.dom(f)].is_iso(m) for f, m in dm.items()):
            return True
    return False


def is_stack(D: IndexedCat, J: Topology, caps: _caps.Caps = _caps.DEFAULT) -> Check:
    """Comparison an equivalence for every covering sieve: fully faithful and
    every descent datum isomorphic to a restriction."""
    pre = is_prestack(D, J, caps)
    if not pre:
        return pre
    for X in stable_sorted(D.base.objects):
        fx = D.fib[X]
        for R in J.covers_of(X):
            for a in enumerate_data(D, R, caps):
                hit = False
                for V in fx.objects:
                    if _iso_matching(D, R, comparison_datum(D, R, V), a, caps):
                        hit = True
                        break
                if not hit:
                    return Check(
                        False,
                        f"a descent datum over {fmt(X)} does not glue",
                        witness=(X, R, a),
                    )
    return Check(True, "stack")
