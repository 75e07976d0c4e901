"""Finite categories presented by total composition tables.

A `FinCat` is four pieces of data: a tuple of object ids, a dict mapping each
morphism id to its (dom, cod) pair, a dict giving the identity morphism of
each object, and a dict giving the composite of every composable pair.
Object and morphism ids are arbitrary hashable values; builders in this
package use strings for hand-written input and nested tuples for constructed
artifacts.

All predicates (`is_fully_faithful`, `is_essentially_surjective`,
`is_equivalence`) run by exhaustive search and return a `Check` carrying a
human-readable reason and a witness, never a bare bool.
"""

from dataclasses import dataclass
from itertools import product as iproduct

from . import caps as _caps
from .util import ckey, fmt, stable_sorted


class InternalError(AssertionError):
    """A constructed artifact violated an invariant the library guarantees."""


@dataclass
class Check:
    ok: bool
    reason: str = ""
    witness: object = None

    def __bool__(self):
        return self.ok


class FinCat:
    __slots__ = ("name", "objects", "mor", "ident", "table", "_hom", "_into", "_inv")

    def __init__(self, objects, mor, ident, table, name=""):
        self.name = name
        self.objects = tuple(objects)
        self.mor = dict(mor)
        self.ident = dict(ident)
        self.table = dict(table)
        self._hom = None
        self._into = None
        self._inv = {}

    def __repr__(self):
        label = self.name or "FinCat"
        return f"<{label}: {len(self.objects)} objects, {len(self.mor)} morphisms>"

    def __eq__(self, other):
        if not isinstance(other, FinCat):
            return NotImplemented
        return (
            set(self.objects) == set(other.objects)
            and self.mor == other.mor
            and self.ident == other.ident
            and self.table == other.table
        )

    __hash__ = None

    def dom(self, m):
        return self.mor[m][0]

    def cod(self, m):
        return self.mor[m][1]

    def id_of(self, x):
        return self.ident[x]

    def is_id(self, m):
        d, c = self.mor[m]
        return d == c and self.ident[d] == m

    def compose(self, g, f):
        """Composite g after f.  Requires cod(f) == dom(g)."""
        try:
            return self.table[(g, f)]
        except KeyError:
            raise InternalError(
                f"no composite for {fmt(g)} after {fmt(f)} in {self.name or 'category'}"
            ) from None

    def compose_path(self, path):
        """Composite of a left-to-right composable path [f1, ..., fn]: fn∘...∘f1."""
        if not path:
            raise ValueError("empty path has no composite without an object")
        m = path[0]
        for f in path[1:]:
            m = self.compose(f, m)
        return m

    def _build_hom(self):
        h = {}
        into = {x: [] for x in self.objects}
        for m in stable_sorted(self.mor):
            d, c = self.mor[m]
            h.setdefault((d, c), []).append(m)
            into[c].append(m)
        self._hom = {k: tuple(v) for k, v in h.items()}
        self._into = {x: tuple(v) for x, v in into.items()}

    def hom(self, x, y):
        if self._hom is None:
            self._build_hom()
        return self._hom.get((x, y), ())

    def into(self, x):
        """All morphisms with codomain x, in stable order."""
        if self._into is None:
            self._build_hom()
        return self._into[x]

    def inverse(self, m):
        """Two-sided inverse of m, or None."""
        if m in self._inv:
            return self._inv[m]
        d, c = self.mor[m]
        found = None
        for n in self.hom(c, d):
            if self.table.get((n, m)) == self.ident[d] and self.table.get((m, n)) == self.ident[c]:
                found = n
                break
        self._inv[m] = found
        return found

    def is_iso(self, m):
        return self.inverse(m) is not None

    def iso_between(self, x, y):
        """Some isomorphism x -> y, or None."""
        for m in self.hom(x, y):
            if self.is_iso(m):
                return m
        return None


def validate_fincat(c: FinCat, caps: _caps.Caps = _caps.DEFAULT) -> list:
    """All category-axiom violations, as strings.  Empty list means valid.

    Hom-set sizes are checked against caps.max_homset and raise CapExceeded,
    since an oversized table would make every later search intractable.
    """
    errs = []
    obset = set(c.objects)
    if len(obset) != len(c.objects):
        errs.append("duplicate object ids")
    for m, (d, co) in c.mor.items():
        if d not in obset:
            errs.append(f"morphism {fmt(m)} has unknown dom {fmt(d)}")
        if co not in obset:
            errs.append(f"morphism {fmt(m)} has unknown cod {fmt(co)}")
    for x in c.objects:
        i = c.ident.get(x)
        if i is None:
            errs.append(f"no identity for object {fmt(x)}")
        elif i not in c.mor:
            errs.append(f"identity of {fmt(x)} is not a morphism")
        elif c.mor[i] != (x, x):
            errs.append(f"identity of {fmt(x)} is not an endomorphism of it")
    if errs:
        return errs

    for x in c.objects:
        for y in c.objects:
            _caps.check(len(c.hom(x, y)), caps.max_homset, f"hom({fmt(x)},{fmt(y)})")

    mids = set(c.mor)
    for (g, f), h in c.table.items():
        if g not in mids or f not in mids:
            errs.append(f"table entry ({fmt(g)},{fmt(f)}) names unknown morphisms")
            continue
        if c.cod(f) != c.dom(g):
            errs.append(f"table entry ({fmt(g)},{fmt(f)}) is not composable")
            continue
        if h not in mids:
            errs.append(f"composite of ({fmt(g)},{fmt(f)}) is unknown morphism {fmt(h)}")
        elif c.mor[h] != (c.dom(f), c.cod(g)):
            errs.append(f"composite {fmt(h)} of ({fmt(g)},{fmt(f)}) has wrong dom/cod")
    if errs:
        return errs

    for f in c.mor:
        for g in c.mor:
            if c.cod(f) == c.dom(g) and (g, f) not in c.table:
                errs.append(f"missing composite for {fmt(g)} after {fmt(f)}")
    if errs:
        return errs

    for m in c.mor:
        d, co = c.mor[m]
        if c.table[(m, c.ident[d])] != m:
            errs.append(f"{fmt(m)} ∘ id ≠ {fmt(m)}")
        if c.table[(c.ident[co], m)] != m:
            errs.append(f"id ∘ {fmt(m)} ≠ {fmt(m)}")

    # Associativity over all composable triples.
    by_dom = {}
    for m, (d, _) in c.mor.items():
        by_dom.setdefault(d, []).append(m)
    for f in c.mor:
        for g in by_dom.get(c.cod(f), ()):
            gf = c.table[(g, f)]
            for h in by_dom.get(c.cod(g), ()):
                if c.table[(h, gf)] != c.table[(c.table[(h, g)], f)]:
                    errs.append(
                        f"associativity fails on ({fmt(h)},{fmt(g)},{fmt(f)})"
                    )
    return errs


def require_valid(c: FinCat, label: str = "") -> FinCat:
    errs = validate_fincat(c)
    if errs:
        raise InternalError(f"{label or c.name or 'category'}: " + "; ".join(errs[:3]))
    return c


class Functor:
    __slots__ = ("name", "src", "dst", "omap", "mmap")

    def __init__(self, src, dst, omap, mmap, name=""):
        self.name = name
        self.src = src
        self.dst = dst
        self.omap = dict(omap)
        self.mmap = dict(mmap)

    def __repr__(self):
        return f"<Functor {self.name or '?'}>"

    def __eq__(self, other):
        if not isinstance(other, Functor):
            return NotImplemented
        return (
            self.src == other.src
            and self.dst == other.dst
            and self.omap == other.omap
            and self.mmap == other.mmap
        )

    __hash__ = None

    def ob(self, x):
        return self.omap[x]

    def mo(self, m):
        return self.mmap[m]

    def validate(self) -> list:
        errs = []
        for x in self.src.objects:
            if x not in self.omap:
                errs.append(f"no image for object {fmt(x)}")
            elif self.omap[x] not in set(self.dst.objects):
                errs.append(f"object image of {fmt(x)} not in target")
        for m, (d, c) in self.src.mor.items():
            if m not in self.mmap:
                errs.append(f"no image for morphism {fmt(m)}")
                continue
            n = self.mmap[m]
            if n not in self.dst.mor:
                errs.append(f"image of {fmt(m)} not in target")
            elif self.dst.mor[n] != (self.omap.get(d), self.omap.get(c)):
                errs.append(f"image of {fmt(m)} has wrong dom/cod")
        if errs:
            return errs
        for x in self.src.objects:
            if self.mmap[self.src.ident[x]] != self.dst.ident[self.omap[x]]:
                errs.append(f"identity of {fmt(x)} not preserved")
        for (g, f), h in self.src.table.items():
            if self.dst.table[(self.mmap[g], self.mmap[f])] != self.mmap[h]:
                errs.append(f"composition not preserved on ({fmt(g)},{fmt(f)})")
        return errs


def identity_functor(c: FinCat) -> Functor:
    return Functor(c, c, {x: x for x in c.objects}, {m: m for m in c.mor}, name="Id")


def compose_functors(g: Functor, f: Functor) -> Functor:
    """g after f."""
    return Functor(
        f.src,
        g.dst,
        {x: g.omap[f.omap[x]] for x in f.src.objects},
        {m: g.mmap[f.mmap[m]] for m in f.src.mor},
        name=f"{g.name}∘{f.name}" if (g.name and f.name) else "",
    )


class NatTrans:
    """Natural transformation F => G given by a component per source object."""

    __slots__ = ("F", "G", "comp", "name")

    def __init__(self, F, G, comp, name=""):
        self.F = F
        self.G = G
        self.comp = dict(comp)
        self.name = name

    def at(self, x):
        return self.comp[x]

    def validate(self) -> list:
        errs = []
        F, G = self.F, self.G
        dst = F.dst
        if F.src is not G.src and F.src != G.src:
            return ["source functors disagree on domain"]
        for x in F.src.objects:
            a = self.comp.get(x)
            if a is None:
                errs.append(f"no component at {fmt(x)}")
            elif a not in dst.mor or dst.mor[a] != (F.omap[x], G.omap[x]):
                errs.append(f"component at {fmt(x)} is not F({fmt(x)}) -> G({fmt(x)})")
        if errs:
            return errs
        for m, (d, c) in F.src.mor.items():
            lhs = dst.compose(self.comp[c], F.mmap[m])
            rhs = dst.compose(G.mmap[m], self.comp[d])
            if lhs != rhs:
                errs.append(f"naturality fails at {fmt(m)}")
        return errs

    def is_iso(self):
        return all(self.F.dst.is_iso(a) for a in self.comp.values())


class NatIso(NatTrans):
    def validate(self) -> list:
        errs = super().validate()
        if errs:
            return errs
        for x, a in self.comp.items():
            if not self.F.dst.is_iso(a):
                errs.append(f"component at {fmt(x)} is not invertible")
        return errs


def all_nat_trans(F: Functor, G: Functor, iso_only: bool = False):
    """Yield every natural transformation F => G (components chosen exhaustively)."""
    dst = F.dst
    objects = list(F.src.objects)
    pools = []
    for x in objects:
        pool = list(dst.hom(F.omap[x], G.omap[x]))
        if iso_only:
            pool = [a for a in pool if dst.is_iso(a)]
        if not pool:
            return
        pools.append(pool)
    for combo in iproduct(*pools):
        t = NatTrans(F, G, dict(zip(objects, combo)))
        if not t.validate():
            yield t


def find_natiso(F: Functor, G: Functor):
    """Some natural isomorphism F => G, or None."""
    for t in all_nat_trans(F, G, iso_only=True):
        return NatIso(F, G, t.comp)
    return None


def all_functors(src: FinCat, dst: FinCat, caps: _caps.Caps = _caps.DEFAULT):
    """Yield every functor src -> dst, by backtracking with incremental
    composition checks.  Only reasonable for desk-scale categories; guarded
    by the caps budget."""
    objs = list(stable_sorted(src.objects))
    non_id = [m for m in stable_sorted(src.mor) if not src.is_id(m)]
    budget = [caps.max_descent]

    def mor_search(omap):
        mmap = {src.ident[x]: dst.ident[omap[x]] for x in objs}
        assigned = set(mmap)

        def consistent(m):
            for (g, f), h in src.table.items():
                if g in assigned and f in assigned and h in assigned:
                    if m not in (g, f, h):
                        continue
                    if dst.table[(mmap[g], mmap[f])] != mmap[h]:
                        return False
            return True

        def go(i):
            budget[0] -= 1
            if budget[0] < 0:
                raise _caps.CapExceeded("functor enumeration budget exhausted")
            if i == len(non_id):
                yield Functor(src, dst, dict(omap), dict(mmap))
                return
            m = non_id[i]
            d, c = src.mor[m]
            for n in dst.hom(omap[d], omap[c]):
                mmap[m] = n
                assigned.add(m)
                if consistent(m):
                    yield from go(i + 1)
                assigned.discard(m)
                del mmap[m]

        yield from go(0)

    for combo in iproduct(*(list(stable_sorted(dst.objects)) for _ in objs)):
        yield from mor_search(dict(zip(objs, combo)))


def is_fully_faithful(F: Functor) -> Check:
    src, dst = F.src, F.dst
    for x in src.objects:
        for y in src.objects:
            image = {}
            for m in src.hom(x, y):
                n = F.mmap[m]
                if n in image:
                    return Check(
                        False,
                        f"not faithful: {fmt(image[n])} and {fmt(m)} in "
                        f"hom({fmt(x)},{fmt(y)}) share image {fmt(n)}",
                        witness=(x, y, image[n], m),
                    )
                image[n] = m
            for n in dst.hom(F.omap[x], F.omap[y]):
                if n not in image:
                    return Check(
                        False,
                        f"not full: {fmt(n)} has no preimage in hom({fmt(x)},{fmt(y)})",
                        witness=(x, y, n),
                    )
    return Check(True, "fully faithful")


def is_essentially_surjective(F: Functor) -> Check:
    hits = {}
    for t in F.dst.objects:
        found = None
        for x in F.src.objects:
            iso = F.dst.iso_between(F.omap[x], t)
            if iso is not None:
                found = (x, iso)
                break
        if found is None:
            return Check(False, f"object {fmt(t)} is not hit up to iso", witness=t)
        hits[t] = found
    return Check(True, "essentially surjective", witness=hits)


def is_equivalence(F: Functor) -> Check:
    ff = is_fully_faithful(F)
    if not ff:
        return Check(False, ff.reason, witness=("fully_faithful", ff.witness))
    es = is_essentially_surjective(F)
    if not es:
        return Check(False, es.reason, witness=("essentially_surjective", es.witness))
    return Check(True, "equivalence", witness=es.witness)


@dataclass
class Product:
    cat: FinCat
    projections: list


def product_cat(cats) -> Product:
    """Finite product of categories; ids are tuples of component ids."""
    cats = list(cats)
    objects = list(iproduct(*(c.objects for c in cats)))
    mor = {}
    for combo in iproduct(*(list(c.mor) for c in cats)):
        dom = tuple(c.dom(m) for c, m in zip(cats, combo))
        cod = tuple(c.cod(m) for c, m in zip(cats, combo))
        mor[combo] = (dom, cod)
    ident = {
        x: tuple(c.ident[xi] for c, xi in zip(cats, x)) for x in objects
    }
    table = {}
    for g in mor:
        for f in mor:
            if all(c.cod(fi) == c.dom(gi) for c, gi, fi in zip(cats, g, f)):
                table[(g, f)] = tuple(
                    c.table[(gi, fi)] for c, gi, fi in zip(cats, g, f)
                )
    prod = FinCat(objects, mor, ident, table, name="×".join(c.name or "?" for c in cats))
    projections = [
        Functor(
            prod,
            c,
            {x: x[i] for x in objects},
            {m: m[i] for m in mor},
            name=f"pr{i}",
        )
        for i, c in enumerate(cats)
    ]
    return Product(prod, projections)


def terminal_cat(obj="*", name="1") -> FinCat:
    i = ("id", obj)
    return FinCat((obj,), {i: (obj, obj)}, {obj: i}, {(i, i): i}, name=name)


def discrete_cat(objects, name="") -> FinCat:
    objects = tuple(objects)
    ident = {x: ("id", x) for x in objects}
    mor = {i: (x, x) for x, i in ident.items()}
    table = {(i, i): i for i in mor}
    return FinCat(objects, mor, ident, table, name=name)


def poset_cat(objects, leq, name="") -> FinCat:
    """Category of a preorder: morphism ("le", a, b) whenever a <= b.

    `leq` is any iterable of (a, b) pairs; reflexive and transitive closure is
    taken here, so generators may pass a bare covering relation.
    """
    objects = tuple(objects)
    rel = {(a, a) for a in objects}
    rel.update((a, b) for a, b in leq)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(rel):
            for (b2, c) in list(rel):
                if b2 == b and (a, c) not in rel:
                    rel.add((a, c))
                    changed = True
    mor = {("le", a, b): (a, b) for (a, b) in rel}
    ident = {x: ("le", x, x) for x in objects}
    table = {}
    for (a, b) in rel:
        for (b2, c) in rel:
            if b2 == b:
                table[(("le", b, c), ("le", a, b))] = ("le", a, c)
    return FinCat(objects, mor, ident, table, name=name)


def iso_classes(c: FinCat) -> list:
    """Partition of objects into isomorphism classes (stable order)."""
    rest = list(stable_sorted(c.objects))
    out = []
    while rest:
        x = rest.pop(0)
        cls = [x]
        keep = []
        for y in rest:
            if c.iso_between(x, y) is not None:
                cls.append(y)
            else:
                keep.append(y)
        rest = keep
        out.append(cls)
    return out
