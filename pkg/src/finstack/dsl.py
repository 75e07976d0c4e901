"""Site-description language and the canonical interchange serialization.

The text format is line-oriented with braces-delimited blocks:

    category C {
      objects: a, b;
      morphisms: f: a -> b, g: b -> a;
      compose: g . f = id(a);
    }
    poset P { r <= p; p <= X; }
    coverage J on P { X: [p <= X]; }
    functor F : C -> C { obj a = a; mor f = f; }
    presheaf S over P { X = {s0}; p <= X: s0 -> t0; }
    indexed D over C { fiber a = C; restrict f = F; strict; }
    fibration Q : D -> D2 { component a = F; }

Comments start with //.  Input may use LF or CRLF; everything emitted uses
LF.  `parse` turns text into a SiteDoc, `elaborate` resolves names and
builds validated core values, and `serialize_blocks`/`load_interchange`
convert elaborated values to and from a canonical JSON form with a sha256
digest over the canonical bytes.

Category blocks list generating morphisms; composites are closed over the
stated relations, so the composite of two generators need not be declared
unless a relation names it.  The closure is bounded by the max_closure cap
and fails loudly when the quotient will not close within it.

Morphisms are referenced uniformly: a generator name, a dotted composite
`g . f` (meaning g after f), a poset pair `a <= b`, or `id(x)`.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field

from . import caps as _caps
from .caps import CapExceeded
from .descent import DescentDatum
from .fincat import (
    FinCat,
    Functor,
    InternalError,
    compose_functors,
    identity_functor,
    poset_cat,
    validate_fincat,
)
from .indexed import (
    IndexedCat,
    IndexedFun,
    Presheaf,
    validate_indexed,
    validate_indexed_fun,
    validate_presheaf,
)
from .site import Topology, saturate, validate_topology
from .util import fmt, stable_sorted

FORMAT = "finstack/1"

RESERVED = {
    "category", "poset", "coverage", "functor", "presheaf", "indexed",
    "fibration", "objects", "morphisms", "compose", "on", "over", "fiber",
    "restrict", "compositor", "unitor", "strict", "component", "cell",
    "obj", "mor", "at", "id",
}


@dataclass
class Diagnostic:
    line: int
    col: int
    msg: str
    hint: str = ""

    def __str__(self):
        tail = f" (hint: {self.hint})" if self.hint else ""
        return f"line {self.line}:{self.col}: {self.msg}{tail}"


# ---------------------------------------------------------------------------
# tokens and parsing


@dataclass
class Token:
    kind: str  # name, punct, eof
    val: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"->|<=|[A-Za-z_][A-Za-z0-9_']*|[0-9]+|[{}()\[\],;:=.]|\S")


def _tokens(text):
    toks = []
    diags = []
    for ln, line in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        body = line.split("//", 1)[0]
        for m in _TOKEN_RE.finditer(body):
            v = m.group(0)
            col = m.start() + 1
            if v == "->" or v == "<=" or v in "{}()[],;:=.":
                toks.append(Token("punct", v, ln, col))
            elif re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*|[0-9]+", v):
                toks.append(Token("name", v, ln, col))
            else:
                diags.append(Diagnostic(ln, col, f"unexpected character {v!r}"))
    last = toks[-1] if toks else None
    toks.append(Token("eof", "", last.line if last else 1, last.col if last else 1))
    return toks, diags


@dataclass
class Entry:
    kind: str
    data: tuple
    line: int
    col: int


@dataclass
class Block:
    kind: str
    name: str
    refs: tuple
    entries: list
    line: int
    col: int


@dataclass
class SiteDoc:
    blocks: list


class _ParseError(Exception):
    def __init__(self, diag):
        self.diag = diag


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, ahead=0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self):
        t = self.peek()
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, t, msg, hint=""):
        raise _ParseError(Diagnostic(t.line, t.col, msg, hint))

    def expect(self, val, hint=""):
        t = self.next()
        if t.val != val or (t.kind == "eof"):
            self.fail(t, f"expected {val!r}, found {t.val!r}", hint)
        return t

    def ident(self, what="name"):
        t = self.next()
        if t.kind != "name":
            self.fail(t, f"expected {what}, found {t.val!r}")
        if t.val in RESERVED:
            self.fail(t, f"{t.val!r} is a keyword and cannot be used as a {what}")
        return t

    def namelist(self, closer):
        out = []
        if self.peek().val != closer:
            out.append(self.ident().val)
            while self.peek().val == ",":
                self.next()
                out.append(self.ident().val)
        return out

    def morref(self):
        """name | name.name... | a <= b | id(x); returns a tagged tuple."""
        t = self.peek()
        if t.val == "id" and self.peek(1).val == "(":
            self.next()
            self.next()
            x = self.ident("object name")
            self.expect(")")
            return ("id", x.val)
        first = self.ident("morphism name")
        if self.peek().val == "<=":
            self.next()
            b = self.ident("object name")
            return ("le", first.val, b.val)
        names = [first.val]
        while self.peek().val == ".":
            self.next()
            names.append(self.ident("morphism name").val)
        return ("path", tuple(names))

    def doc(self):
        blocks = []
        while self.peek().kind != "eof":
            blocks.append(self.block())
        return SiteDoc(blocks)

    def block(self):
        t = self.next()
        if t.val == "category":
            return self.category(t)
        if t.val == "poset":
            return self.poset(t)
        if t.val == "coverage":
            return self.coverage(t)
        if t.val == "functor":
            return self.functor(t)
        if t.val == "presheaf":
            return self.presheaf(t)
        if t.val == "indexed":
            return self.indexed(t)
        if t.val == "fibration":
            return self.fibration(t)
        self.fail(t, f"unknown block kind {t.val!r}",
                  "expected category, poset, coverage, functor, presheaf, "
                  "indexed, or fibration")

    def category(self, t):
        name = self.ident("category name").val
        self.expect("{")
        entries = []
        while self.peek().val != "}":
            h = self.next()
            if h.val == "objects":
                self.expect(":")
                objs = self.namelist(";")
                self.expect(";")
                entries.append(Entry("objects", tuple(objs), h.line, h.col))
            elif h.val == "morphisms":
                self.expect(":")
                while True:
                    m = self.ident("morphism name")
                    self.expect(":")
                    a = self.ident("object name")
                    self.expect("->")
                    b = self.ident("object name")
                    entries.append(Entry("gen", (m.val, a.val, b.val), m.line, m.col))
                    if self.peek().val != ",":
                        break
                    self.next()
                self.expect(";")
            elif h.val == "compose":
                self.expect(":")
                lhs = self.morref()
                if lhs[0] != "path" or len(lhs[1]) < 2:
                    self.fail(h, "compose left side must be a dotted composite",
                              "write compose: g . f = h;")
                self.expect("=")
                rhs = self.morref()
                self.expect(";")
                entries.append(Entry("rel", (lhs[1], rhs), h.line, h.col))
            else:
                self.fail(h, f"unknown category entry {h.val!r}",
                          "expected objects, morphisms, or compose")
        self.expect("}")
        return Block("category", name, (), entries, t.line, t.col)

    def poset(self, t):
        name = self.ident("poset name").val
        self.expect("{")
        entries = []
        while self.peek().val != "}":
            a = self.ident("object name")
            self.expect("<=")
            b = self.ident("object name")
            self.expect(";")
            entries.append(Entry("le", (a.val, b.val), a.line, a.col))
        self.expect("}")
        return Block("poset", name, (), entries, t.line, t.col)

    def coverage(self, t):
        if self.peek().val == "on":
            name = "J"
        else:
            name = self.ident("coverage name").val
        self.expect("on")
        cat = self.ident("category name").val
        self.expect("{")
        entries = []
        while self.peek().val != "}":
            x = self.ident("object name")
            self.expect(":")
            fams = []
            while True:
                self.expect("[")
                fam = []
                if self.peek().val != "]":
                    fam.append(self.morref())
                    while self.peek().val == ",":
                        self.next()
                        fam.append(self.morref())
                self.expect("]")
                fams.append(tuple(fam))
                if self.peek().val != ",":
                    break
                self.next()
            self.expect(";")
            entries.append(Entry("cover", (x.val, tuple(fams)), x.line, x.col))
        self.expect("}")
        return Block("coverage", name, (cat,), entries, t.line, t.col)

    def functor(self, t):
        name = self.ident("functor name").val
        self.expect(":")
        src = self.ident("category name").val
        self.expect("->")
        dst = self.ident("category name").val
        self.expect("{")
        entries = []
        while self.peek().val != "}":
            h = self.next()
            if h.val == "obj":
                a = self.ident("object name")
                self.expect("=")
                b = self.ident("object name")
                self.expect(";")
                entries.append(Entry("obj", (a.val, b.val), h.line, h.col))
            elif h.val == "mor":
                m = self.morref()
                self.expect("=")
                v = self.morref()
                self.expect(";")
                entries.append(Entry("mor", (m, v), h.line, h.col))
            else:
                self.fail(h, f"unknown functor entry {h.val!r}",
                          "expected obj or mor")
        self.expect("}")
        return Block("functor", name, (src, dst), entries, t.line, t.col)

    def presheaf(self, t):
        name = self.ident("presheaf name").val
        self.expect("over")
        cat = self.ident("category name").val
        self.expect("{")
        entries = []
        while self.peek().val != "}":
            start = self.peek()
            ref = self.morref()
            if ref[0] == "path" and len(ref[1]) == 1 and self.peek().val == "=":
                self.next()
                self.expect("{")
                els = self.namelist("}")
                self.expect("}")
                self.expect(";")
                entries.append(Entry("els", (ref[1][0], tuple(els)),
                                     start.line, start.col))
            else:
                self.expect(":", "element sets use X = {..}; actions use f: s -> t")
                maps = []
                while True:
                    a = self.ident("element name")
                    self.expect("->")
                    b = self.ident("element name")
                    maps.append((a.val, b.val))
                    if self.peek().val != ",":
                        break
                    self.next()
                self.expect(";")
                entries.append(Entry("act", (ref, tuple(maps)), start.line, start.col))
        self.expect("}")
        return Block("presheaf", name, (cat,), entries, t.line, t.col)

    def indexed(self, t):
        name = self.ident("indexed name").val
        self.expect("over")
        cat = self.ident("category name").val
        self.expect("{")
        entries = []
        while self.peek().val != "}":
            h = self.next()
            if h.val == "fiber":
                x = self.ident("object name")
                self.expect("=")
                c = self.ident("category name")
                self.expect(";")
                entries.append(Entry("fiber", (x.val, c.val), h.line, h.col))
            elif h.val == "restrict":
                m = self.morref()
                self.expect("=")
                f = self.ident("functor name")
                self.expect(";")
                entries.append(Entry("restrict", (m, f.val), h.line, h.col))
            elif h.val == "compositor":
                self.expect("(")
                g = self.morref()
                self.expect(",")
                f2 = self.morref()
                self.expect(")")
                self.expect("at")
                v = self.ident("fibre object name")
                self.expect("=")
                m = self.morref()
                self.expect(";")
                entries.append(Entry("compositor", (g, f2, v.val, m), h.line, h.col))
            elif h.val == "unitor":
                x = self.ident("object name")
                self.expect("at")
                v = self.ident("fibre object name")
                self.expect("=")
                m = self.morref()
                self.expect(";")
                entries.append(Entry("unitor", (x.val, v.val, m), h.line, h.col))
            elif h.val == "strict":
                self.expect(";")
                entries.append(Entry("strict", (), h.line, h.col))
            else:
                self.fail(h, f"unknown indexed entry {h.val!r}",
                          "expected fiber, restrict, compositor, unitor, or strict")
        self.expect("}")
        return Block("indexed", name, (cat,), entries, t.line, t.col)

    def fibration(self, t):
        name = self.ident("fibration name").val
        self.expect(":")
        src = self.ident("indexed name").val
        self.expect("->")
        dst = self.ident("indexed name").val
        self.expect("{")
        entries = []
        while self.peek().val != "}":
            h = self.next()
            if h.val == "component":
                x = self.ident("object name")
                self.expect("=")
                f = self.ident("functor name")
                self.expect(";")
                entries.append(Entry("component", (x.val, f.val), h.line, h.col))
            elif h.val == "cell":
                y = self.morref()
                self.expect("at")
                v = self.ident("fibre object name")
                self.expect("=")
                m = self.morref()
                self.expect(";")
                entries.append(Entry("cell", (y, v.val, m), h.line, h.col))
            else:
                self.fail(h, f"unknown fibration entry {h.val!r}",
                          "expected component or cell")
        self.expect("}")
        return Block("fibration", name, (src, dst), entries, t.line, t.col)


def parse(text):
    """Parse DSL text; returns (SiteDoc or None, diagnostics)."""
    toks, diags = _tokens(text)
    if diags:
        return None, diags
    p = _Parser(toks)
    try:
        return p.doc(), []
    except _ParseError as e:
        return None, [e.diag]


# ---------------------------------------------------------------------------
# elaboration


@dataclass
class Elaborated:
    cats: dict = field(default_factory=dict)
    functors: dict = field(default_factory=dict)
    topologies: dict = field(default_factory=dict)
    presheaves: dict = field(default_factory=dict)
    indexed: dict = field(default_factory=dict)
    indexedfuns: dict = field(default_factory=dict)
    order: list = field(default_factory=list)
    gens: dict = field(default_factory=dict)  # cat name -> {mor: generator word}
    aliases: dict = field(default_factory=dict)  # cat name -> {gen name: mor id}
    findings: list = field(default_factory=list)  # (kind, name, message)

    def kinds_of(self, kind):
        return {
            "category": self.cats,
            "functor": self.functors,
            "topology": self.topologies,
            "presheaf": self.presheaves,
            "indexed": self.indexed,
            "fibration": self.indexedfuns,
        }[kind]


class _Elab:
    def __init__(self, caps):
        self.caps = caps
        self.env = Elaborated()
        self.diags = []
        self.names = {}  # any block name -> kind

    def err(self, line, col, msg, hint=""):
        self.diags.append(Diagnostic(line, col, msg, hint))

    def declare(self, block, kind_key, value):
        if block.name in self.names:
            self.err(block.line, block.col,
                     f"duplicate name {block.name!r} "
                     f"(already a {self.names[block.name]})")
            return
        self.names[block.name] = block.kind
        self.env.kinds_of(kind_key)[block.name] = value
        self.env.order.append((kind_key, block.name))

    def lookup(self, table, name, what, line, col):
        if name not in table:
            self.err(line, col, f"unknown {what} {name!r}")
            return None
        return table[name]

    # -- morphism references ------------------------------------------------

    def resolve_mor(self, catname, cat, ref, line, col):
        if ref[0] == "id":
            if ref[1] not in cat.ident:
                self.err(line, col, f"no object {ref[1]!r} in {catname!r}")
                return None
            return cat.ident[ref[1]]
        if ref[0] == "le":
            m = ("le", ref[1], ref[2])
            if m not in cat.mor:
                self.err(line, col,
                         f"no relation {ref[1]} <= {ref[2]} in {catname!r}")
                return None
            return m
        alias = self.env.aliases.get(catname, {})
        parts = []
        for nm in ref[1]:
            m = alias.get(nm, nm if nm in cat.mor else None)
            if m is None:
                self.err(line, col, f"unknown morphism {nm!r} in {catname!r}")
                return None
            parts.append(m)
        out = parts[0]
        for nxt in parts[1:]:
            if cat.dom(out) != cat.cod(nxt):
                self.err(line, col,
                         f"composite not defined: {fmt(out)} . {fmt(nxt)}",
                         "dom of the left factor must equal cod of the right")
                return None
            out = cat.compose(out, nxt)
        return out

    # -- category closure ----------------------------------------------------

    def _close_category(self, block, objects, gens, rels):
        """Quotient of composable generator words by the stated relations.

        Words are tuples in composition order: (g, f) stands for g after f.
        Rules rewrite a contiguous slice to the right side; every irreducible
        form reachable from a word is identified with it, so non-confluent
        relation sets still produce a well-defined quotient."""
        cap = self.caps.max_closure
        steps = [50 * cap + 1000]
        dom = {g: d for g, (d, _) in gens.items()}
        cod = {g: c for g, (_, c) in gens.items()}

        def wdom(w, obj=None):
            return dom[w[-1]] if w else obj

        def wcod(w, obj=None):
            return cod[w[0]] if w else obj

        rules = []
        for (lhs, rhs), (line, col) in rels:
            if rhs[0] == "le":
                self.err(line, col, "relations in category blocks use "
                         "generator names, not <=")
                return None
            if rhs[0] == "id":
                rw, robj = (), rhs[1]
                if robj not in objects:
                    self.err(line, col, f"no object {rhs[1]!r}")
                    return None
            else:
                rw, robj = rhs[1], None
                for nm in rw:
                    if nm not in gens:
                        self.err(line, col, f"unknown morphism {nm!r} in relation")
                        return None
            for nm in lhs:
                if nm not in gens:
                    self.err(line, col, f"unknown morphism {nm!r} in relation")
                    return None
            for a, b in zip(lhs, lhs[1:]):
                if dom[a] != cod[b]:
                    self.err(line, col, f"relation left side is not composable "
                             f"at {a!r} . {b!r}")
                    return None
            for a, b in zip(rw, rw[1:]):
                if dom[a] != cod[b]:
                    self.err(line, col, "relation right side is not composable")
                    return None
            if robj is None:
                ok = wdom(rw) == wdom(lhs) and wcod(rw) == wcod(lhs)
            else:
                ok = wdom(lhs) == robj and wcod(lhs) == robj
            if not ok:
                self.err(line, col, "relation sides have different endpoints")
                return None
            rules.append((lhs, rw))

        parent = {}

        def find(w):
            r = w
            while parent.get(r, r) != r:
                r = parent[r]
            while parent.get(w, w) != w:
                parent[w], w = r, parent[w]
            return r

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            lo, hi = sorted((ra, rb), key=lambda w: (len(w), w))
            parent[hi] = lo
            return True

        red_memo = {}

        def irreducibles(w):
            if w in red_memo:
                return red_memo[w]
            steps[0] -= 1
            if steps[0] <= 0:
                raise CapExceeded("composition closure budget exhausted; "
                                  "raise --max-closure")
            nexts = []
            for lhs, rw in rules:
                k = len(lhs)
                for i in range(len(w) - k + 1):
                    if w[i:i + k] == lhs:
                        nexts.append(w[:i] + rw + w[i + k:])
            if not nexts:
                out = frozenset([w])
            else:
                acc = set()
                for n in nexts:
                    acc |= irreducibles(n)
                out = frozenset(acc)
            red_memo[w] = out
            return out

        def normal(w):
            irr = irreducibles(w)
            for a in irr:
                for b in irr:
                    union(a, b)
            return find(min(irr, key=lambda v: (len(v), v)))

        classes = {(): True}
        for g in gens:
            classes[normal((g,))] = True

        pairs_budget = 50 * cap
        changed = True
        while changed:
            changed = False
            reps = [w for w in classes if find(w) == w]
            for w2 in reps:
                for w1 in reps:
                    if not w1 or not w2:
                        continue
                    if wdom(w2) != wcod(w1):
                        continue
                    pairs_budget -= 1
                    if pairs_budget <= 0:
                        raise CapExceeded(
                            "composition closure budget exhausted; "
                            "raise --max-closure")
                    r = normal(w2 + w1)
                    if r not in classes:
                        classes[r] = True
                        changed = True
                    if len(classes) > cap:
                        raise CapExceeded(
                            "composition closure exceeded --max-closure "
                            f"({cap}); the category may be infinite")
            pruned = {w: True for w in classes if find(w) == w}
            if len(pruned) != len(classes):
                changed = True
            classes = pruned

        def mor_name(w):
            if not w:
                return None
            if len(w) == 1:
                return w[0]
            return ".".join(w)

        mor = {}
        ident = {x: ("id", x) for x in objects}
        words = {}
        for x in objects:
            mor[("id", x)] = (x, x)
            words[("id", x)] = ()
        rep_name = {}
        for w in classes:
            if not w:
                continue
            n = mor_name(w)
            rep_name[w] = n
            mor[n] = (wdom(w), wcod(w))
            words[n] = w

        alias = {}
        for g in gens:
            r = normal((g,))
            alias[g] = ("id", dom[g]) if not r else rep_name[r]

        table = {}
        for n2, w2 in words.items():
            for n1, w1 in words.items():
                d2 = mor[n2]
                d1 = mor[n1]
                if d2[0] != d1[1]:
                    continue
                w = w2 + w1
                if not w:
                    table[(n2, n1)] = ("id", d1[0])
                else:
                    r = normal(w)
                    table[(n2, n1)] = ("id", d1[0]) if not r else rep_name[r]
        c = FinCat(tuple(objects), mor, ident, table, name=block.name)
        errs = validate_fincat(c, self.caps)
        if errs:
            raise InternalError(f"closure produced a non-category: {errs[0]}")
        return c, words, alias

    def do_category(self, block):
        before = len(self.diags)
        objects = []
        gens = {}
        rels = []
        for e in block.entries:
            if e.kind == "objects":
                for x in e.data:
                    if x in objects:
                        self.err(e.line, e.col, f"duplicate object {x!r}")
                    else:
                        objects.append(x)
            elif e.kind == "gen":
                nm, a, b = e.data
                if nm in gens:
                    self.err(e.line, e.col, f"duplicate morphism {nm!r}")
                    continue
                if a not in objects or b not in objects:
                    self.err(e.line, e.col,
                             f"morphism {nm!r} uses undeclared objects",
                             "declare objects before morphisms")
                    continue
                gens[nm] = (a, b)
            elif e.kind == "rel":
                rels.append((e.data, (e.line, e.col)))
        if len(self.diags) > before:
            return
        try:
            out = self._close_category(block, objects, gens, rels)
        except RecursionError:
            raise CapExceeded("composition closure rewrites nest too deeply; "
                              "simplify the relations") from None
        if out is None:
            return
        c, words, alias = out
        self.declare(block, "category", c)
        self.env.gens[block.name] = words
        self.env.aliases[block.name] = alias

    def do_poset(self, block):
        edges = []
        seen_obj = []
        for e in block.entries:
            a, b = e.data
            edges.append((a, b))
            for x in (a, b):
                if x not in seen_obj:
                    seen_obj.append(x)
        c = poset_cat(tuple(seen_obj), edges, name=block.name)
        # decompose each relation into declared covering edges for later
        # derivation of presheaf actions and strict restrictions
        adj = {}
        for a, b in edges:
            if a != b:
                adj.setdefault(a, []).append(b)
        words = {}
        for m, (a, b) in c.mor.items():
            if a == b:
                words[m] = ()
                continue
            prev = {a: None}
            queue = [a]
            while queue and b not in prev:
                cur = queue.pop(0)
                for nxt in stable_sorted(adj.get(cur, ())):
                    if nxt not in prev:
                        prev[nxt] = cur
                        queue.append(nxt)
            path = []
            node = b
            while prev[node] is not None:
                path.append(("le", prev[node], node))
                node = prev[node]
            words[m] = tuple(path)
        self.declare(block, "category", c)
        self.env.gens[block.name] = words
        self.env.aliases[block.name] = {}

    def do_coverage(self, block):
        catname = block.refs[0]
        cat = self.lookup(self.env.cats, catname, "category", block.line, block.col)
        if cat is None:
            return
        coverage = {}
        bad = False
        for e in block.entries:
            x, fams = e.data
            if x not in cat.ident:
                self.err(e.line, e.col, f"no object {x!r} in {catname!r}")
                bad = True
                continue
            out_fams = coverage.setdefault(x, [])
            for fam in fams:
                resolved = []
                for ref in fam:
                    m = self.resolve_mor(catname, cat, ref, e.line, e.col)
                    if m is None:
                        bad = True
                        continue
                    if cat.cod(m) != x:
                        self.err(e.line, e.col,
                                 f"{fmt(m)} does not land in {x!r}",
                                 "covering families consist of morphisms into "
                                 "the covered object")
                        bad = True
                        continue
                    resolved.append(m)
                out_fams.append(resolved)
        if bad:
            return
        j = saturate(cat, coverage, self.caps)
        self.declare(block, "topology", j)

    def _derive_map(self, catname, given, word, line, col, compose_pair,
                    identity_at, what):
        """Fold images of a word's letters, contravariantly.

        `word` is in composition order (last letter applied first); the fold
        applies the image of the last letter first, so it suits presheaf
        actions and restrictions.  Covariant callers reverse the word.
        Letters are generator names; `given` is keyed by resolved morphism
        ids, so letters pass through the category's alias map."""
        alias = self.env.aliases.get(catname, {})
        out = None
        for g in word:
            img = given.get(g)
            if img is None and g in alias:
                img = given.get(alias[g])
            if img is None:
                self.err(line, col,
                         f"{what} for {fmt(g)} in {catname!r} is required "
                         "to derive composites")
                return None
            out = img if out is None else compose_pair(img, out)
        if out is None:
            return identity_at
        return out

    def do_functor(self, block):
        srcname, dstname = block.refs
        src = self.lookup(self.env.cats, srcname, "category", block.line, block.col)
        dst = self.lookup(self.env.cats, dstname, "category", block.line, block.col)
        if src is None or dst is None:
            return
        omap = {}
        given = {}
        bad = False
        for e in block.entries:
            if e.kind == "obj":
                a, b = e.data
                if a not in src.ident:
                    self.err(e.line, e.col, f"no object {a!r} in {srcname!r}")
                    bad = True
                    continue
                if b not in dst.ident:
                    self.err(e.line, e.col, f"no object {b!r} in {dstname!r}")
                    bad = True
                    continue
                omap[a] = b
            else:
                m = self.resolve_mor(srcname, src, e.data[0], e.line, e.col)
                v = self.resolve_mor(dstname, dst, e.data[1], e.line, e.col)
                if m is None or v is None:
                    bad = True
                    continue
                given[m] = v
        for x in src.objects:
            if x not in omap:
                self.err(block.line, block.col,
                         f"functor {block.name!r} has no image for object {x!r}")
                bad = True
        if bad:
            return
        words = self.env.gens.get(srcname, {m: (m,) for m in src.mor})
        mmap = {}
        for m, (a, b) in src.mor.items():
            if m in given:
                mmap[m] = given[m]
                continue
            # functor images compose covariantly, so fold the reversed word
            w = words.get(m, (m,))[::-1]
            v = self._derive_map(srcname, given, w,
                                 block.line, block.col,
                                 lambda g, f: dst.compose(g, f),
                                 dst.ident.get(omap.get(a)), "mor image")
            if v is None:
                return
            mmap[m] = v
        f = Functor(src, dst, omap, mmap, name=block.name)
        errs = f.validate()
        for msg in errs[:3]:
            self.env.findings.append(("functor", block.name, msg))
        self.declare(block, "functor", f)

    def do_presheaf(self, block):
        catname = block.refs[0]
        cat = self.lookup(self.env.cats, catname, "category", block.line, block.col)
        if cat is None:
            return
        els = {}
        given = {}
        bad = False
        for e in block.entries:
            if e.kind == "els":
                x, vals = e.data
                if x not in cat.ident:
                    self.err(e.line, e.col, f"no object {x!r} in {catname!r}")
                    bad = True
                    continue
                els[x] = tuple(vals)
            else:
                ref, pairs = e.data
                m = self.resolve_mor(catname, cat, ref, e.line, e.col)
                if m is None:
                    bad = True
                    continue
                given[m] = (dict(pairs), e.line, e.col)
        for x in cat.objects:
            if x not in els:
                self.err(block.line, block.col,
                         f"presheaf {block.name!r} has no element set for "
                         f"object {x!r}", f"add '{x} = {{}};'")
                bad = True
        if bad:
            return
        for m, (mp, line, col) in given.items():
            a, b = cat.mor[m]
            for s, t in mp.items():
                if s not in els.get(b, ()):
                    self.err(line, col, f"{s!r} is not an element at {fmt(b)}")
                    bad = True
                if t not in els.get(a, ()):
                    self.err(line, col, f"{t!r} is not an element at {fmt(a)}")
                    bad = True
            missing = [s for s in els.get(b, ()) if s not in mp]
            if missing:
                self.err(line, col,
                         f"action along {fmt(m)} misses element {missing[0]!r}")
                bad = True
        if bad:
            return
        words = self.env.gens.get(catname, {m: (m,) for m in cat.mor})
        acts = {m: mp for m, (mp, _, _) in given.items()}
        act = {}
        for m, (a, b) in cat.mor.items():
            if m in acts:
                act[m] = dict(acts[m])
                continue
            w = words.get(m, (m,))
            mp = self._derive_map(catname, acts, w,
                                  block.line, block.col,
                                  lambda g, f: {e2: g[f[e2]] for e2 in f},
                                  {e2: e2 for e2 in els[a]}, "action")
            if mp is None:
                return
            act[m] = dict(mp)
        p = Presheaf(cat, els, act, name=block.name)
        for msg in validate_presheaf(p)[:3]:
            self.env.findings.append(("presheaf", block.name, msg))
        self.declare(block, "presheaf", p)

    def do_indexed(self, block):
        catname = block.refs[0]
        cat = self.lookup(self.env.cats, catname, "category", block.line, block.col)
        if cat is None:
            return
        fib = {}
        given_res = {}
        comp_entries = []
        unit_entries = []
        strict = False
        bad = False
        for e in block.entries:
            if e.kind == "fiber":
                x, cn = e.data
                if x not in cat.ident:
                    self.err(e.line, e.col, f"no object {x!r} in {catname!r}")
                    bad = True
                    continue
                k = self.lookup(self.env.cats, cn, "category", e.line, e.col)
                if k is None:
                    bad = True
                    continue
                fib[x] = k
            elif e.kind == "restrict":
                m = self.resolve_mor(catname, cat, e.data[0], e.line, e.col)
                f = self.lookup(self.env.functors, e.data[1], "functor",
                                e.line, e.col)
                if m is None or f is None:
                    bad = True
                    continue
                given_res[m] = (f, e.line, e.col)
            elif e.kind == "compositor":
                comp_entries.append(e)
            elif e.kind == "unitor":
                unit_entries.append(e)
            elif e.kind == "strict":
                strict = True
        for x in cat.objects:
            if x not in fib:
                self.err(block.line, block.col,
                         f"indexed {block.name!r} has no fiber at {x!r}",
                         f"add 'fiber {x} = SOMECAT;'")
                bad = True
        if bad:
            return
        if strict and (comp_entries or unit_entries):
            e = (comp_entries + unit_entries)[0]
            self.err(e.line, e.col,
                     "strict indexed blocks take no compositor or unitor cells")
            return
        for m, (f, line, col) in given_res.items():
            a, b = cat.mor[m]
            if f.src != fib[b] or f.dst != fib[a]:
                self.err(line, col,
                         f"restriction along {fmt(m)} must map the fiber at "
                         f"{fmt(b)} to the fiber at {fmt(a)}")
                bad = True
        if bad:
            return

        res = {}
        if strict:
            words = self.env.gens.get(catname, {m: (m,) for m in cat.mor})
            gens_given = {m: f for m, (f, _, _) in given_res.items()}
            for m, (a, b) in cat.mor.items():
                if m in gens_given:
                    res[m] = gens_given[m]
                    continue
                w = words.get(m, (m,))
                f = self._derive_map(catname, gens_given, w,
                                     block.line, block.col,
                                     lambda g, fn: compose_functors(g, fn),
                                     identity_functor(fib[a]), "restriction")
                if f is None:
                    return
                res[m] = f
            try:
                from .indexed import strict_indexed
                d = strict_indexed(cat, fib, res, name=block.name)
            except InternalError as ex:
                self.env.findings.append(("indexed", block.name, str(ex)))
                return
            for msg in validate_indexed(d, self.caps)[:3]:
                self.env.findings.append(("indexed", block.name, msg))
            self.declare(block, "indexed", d)
            return

        for m in cat.mor:
            if m in given_res:
                res[m] = given_res[m][0]
            elif m in cat.ident.values():
                x = cat.dom(m)
                res[m] = identity_functor(fib[x])
            else:
                self.err(block.line, block.col,
                         f"indexed {block.name!r} has no restriction along "
                         f"{fmt(m)}",
                         "non-strict blocks need a restrict entry per morphism")
                bad = True
        if bad:
            return
        compositor = {}
        for g, (gy, gx) in cat.mor.items():
            for f, (fy, fx) in cat.mor.items():
                if fx != gy:
                    continue
                cell = {}
                fibd = fib[fy]
                gf = cat.compose(g, f)
                for v in fib[gx].objects:
                    left = res[f].ob(res[g].ob(v))
                    right = res[gf].ob(v)
                    if left == right:
                        cell[v] = fibd.ident[left]
                    else:
                        cell[v] = None
                compositor[(g, f)] = cell
        unitor = {}
        for x in cat.objects:
            ux = {}
            idm = cat.ident[x]
            for v in fib[x].objects:
                tgt = res[idm].ob(v)
                ux[v] = fib[x].ident[v] if tgt == v else None
            unitor[x] = ux
        for e in comp_entries:
            gref, fref, v, mref = e.data
            g = self.resolve_mor(catname, cat, gref, e.line, e.col)
            f = self.resolve_mor(catname, cat, fref, e.line, e.col)
            if g is None or f is None:
                return
            if (g, f) not in compositor:
                self.err(e.line, e.col, "the pair is not composable")
                return
            if v not in compositor[(g, f)]:
                self.err(e.line, e.col, f"no fibre object {v!r} at {fmt(cat.cod(g))}")
                return
            m = self.resolve_mor(f"fiber {fmt(cat.dom(f))}", fib[cat.dom(f)],
                                 mref, e.line, e.col)
            if m is None:
                return
            compositor[(g, f)][v] = m
        for e in unit_entries:
            x, v, mref = e.data
            if x not in cat.ident or v not in unitor.get(x, {}):
                self.err(e.line, e.col, f"no unitor slot at {x!r}, {v!r}")
                return
            m = self.resolve_mor(f"fiber {x}", fib[x], mref, e.line, e.col)
            if m is None:
                return
            unitor[x][v] = m
        holes = [(g, f, v) for (g, f), cell in compositor.items()
                 for v, m in cell.items() if m is None]
        holes += [(x, None, v) for x, ux in unitor.items()
                  for v, m in ux.items() if m is None]
        if holes:
            self.err(block.line, block.col,
                     f"indexed {block.name!r} needs an explicit coherence cell "
                     f"at {fmt(holes[0])}",
                     "restrictions do not compose on the nose there")
            return
        d = IndexedCat(cat, fib, res, compositor, unitor, name=block.name)
        for msg in validate_indexed(d, self.caps)[:3]:
            self.env.findings.append(("indexed", block.name, msg))
        self.declare(block, "indexed", d)

    def do_fibration(self, block):
        srcname, dstname = block.refs
        src = self.lookup(self.env.indexed, srcname, "indexed category",
                          block.line, block.col)
        dst = self.lookup(self.env.indexed, dstname, "indexed category",
                          block.line, block.col)
        if src is None or dst is None:
            return
        if src.base != dst.base:
            self.err(block.line, block.col,
                     f"{srcname!r} and {dstname!r} live over different bases")
            return
        cat = src.base
        comp = {}
        cells_given = {}
        bad = False
        for e in block.entries:
            if e.kind == "component":
                x, fn = e.data
                f = self.lookup(self.env.functors, fn, "functor", e.line, e.col)
                if x not in cat.ident:
                    self.err(e.line, e.col, f"no object {x!r} in the base")
                    bad = True
                    continue
                if f is None:
                    bad = True
                    continue
                if f.src != src.fib[x] or f.dst != dst.fib[x]:
                    self.err(e.line, e.col,
                             f"component at {x!r} must map the source fiber "
                             "to the target fiber")
                    bad = True
                    continue
                comp[x] = f
            else:
                yref, v, mref = e.data
                y = self.resolve_mor("base", cat, yref, e.line, e.col)
                if y is None:
                    bad = True
                    continue
                cells_given[(y, v)] = (mref, e.line, e.col)
        for x in cat.objects:
            if x not in comp:
                self.err(block.line, block.col,
                         f"fibration {block.name!r} has no component at {x!r}")
                bad = True
        if bad:
            return
        cell = {}
        for y, (yy, yx) in cat.mor.items():
            cy = {}
            fibt = dst.fib[yy]
            for v in src.fib[yx].objects:
                left = comp[yy].ob(src.res[y].ob(v))
                right = dst.res[y].ob(comp[yx].ob(v))
                if (y, v) in cells_given:
                    mref, line, col = cells_given[(y, v)]
                    m = self.resolve_mor(f"fiber {fmt(yy)}", fibt, mref, line, col)
                    if m is None:
                        return
                    cy[v] = m
                elif left == right:
                    cy[v] = fibt.ident[left]
                else:
                    self.err(block.line, block.col,
                             f"fibration {block.name!r} needs an explicit cell "
                             f"along {fmt(y)} at {fmt(v)}",
                             "components do not commute with restriction on "
                             "the nose there")
                    return
            cell[y] = cy
        p = IndexedFun(src, dst, comp, cell, name=block.name)
        for msg in validate_indexed_fun(p)[:3]:
            self.env.findings.append(("fibration", block.name, msg))
        self.declare(block, "fibration", p)

    def run(self, doc):
        for block in doc.blocks:
            before = len(self.diags)
            if block.kind == "category":
                self.do_category(block)
            elif block.kind == "poset":
                self.do_poset(block)
            elif block.kind == "coverage":
                self.do_coverage(block)
            elif block.kind == "functor":
                self.do_functor(block)
            elif block.kind == "presheaf":
                self.do_presheaf(block)
            elif block.kind == "indexed":
                self.do_indexed(block)
            elif block.kind == "fibration":
                self.do_fibration(block)
            if len(self.diags) > before and len(self.diags) > 20:
                break
        return self.env, self.diags


def elaborate(doc, caps: _caps.Caps = _caps.DEFAULT):
    """Resolve names, close compositions, and build validated core values.

    Returns (Elaborated or None, diagnostics).  Validator complaints about
    well-formed but law-breaking declarations land in Elaborated.findings,
    not in the diagnostics list."""
    e = _Elab(caps)
    env, diags = e.run(doc)
    if diags:
        return None, diags
    return env, []


# ---------------------------------------------------------------------------
# interchange serialization


def _cjson(v):
    return json.dumps(v, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _enc(v):
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return {"b": v}
    if isinstance(v, int):
        return {"i": v}
    if v is None:
        return {"n": 0}
    if isinstance(v, tuple):
        return [_enc(x) for x in v]
    if isinstance(v, frozenset):
        return {"fs": sorted((_enc(x) for x in v), key=_cjson)}
    if isinstance(v, DescentDatum):
        return {"dd": [_enc(v._key[0]), _enc(v._key[1])]}
    raise InternalError(f"value of type {type(v).__name__} has no "
                        f"interchange encoding: {v!r}")


def _dec(v):
    if isinstance(v, str):
        return v
    if isinstance(v, list):
        return tuple(_dec(x) for x in v)
    if isinstance(v, dict):
        if "b" in v:
            return bool(v["b"])
        if "i" in v:
            return int(v["i"])
        if "n" in v:
            return None
        if "fs" in v:
            return frozenset(_dec(x) for x in v["fs"])
        if "dd" in v:
            obj, coh = _dec(v["dd"][0]), _dec(v["dd"][1])
            return DescentDatum(dict(obj), dict(coh))
    raise ValueError(f"malformed interchange value: {v!r}")


def _kv(d, order=None):
    keys = order if order is not None else stable_sorted(d)
    return [[_enc(k), _enc(d[k])] for k in keys]

def _unkv(rows):
    return {_dec(k): _dec(v) for k, v in rows}


def _cat_json(c: FinCat):
    return {
        "name": c.name,
        "objects": [_enc(x) for x in stable_sorted(c.objects)],
        "morphisms": [[_enc(m), _enc(c.dom(m)), _enc(c.cod(m))]
                      for m in stable_sorted(c.mor)],
        "identities": _kv(c.ident),
        "table": [[[_enc(g), _enc(f)], _enc(h)]
                  for (g, f), h in sorted(c.table.items(),
                                          key=lambda it: _cjson([_enc(it[0][0]),
                                                                 _enc(it[0][1])]))],
    }


def _cat_unjson(d):
    mor = {_dec(m): (_dec(a), _dec(b)) for m, a, b in d["morphisms"]}
    return FinCat(
        tuple(_dec(x) for x in d["objects"]),
        mor,
        _unkv(d["identities"]),
        {(_dec(g), _dec(f)): _dec(h) for (g, f), h in d["table"]},
        name=d.get("name", ""),
    )


def _fun_json(f: Functor):
    return {"omap": _kv(f.omap), "mmap": _kv(f.mmap)}


def _fun_unjson(d, src, dst, name=""):
    return Functor(src, dst, _unkv(d["omap"]), _unkv(d["mmap"]), name=name)


def _top_json(j: Topology, basename):
    covers = []
    for x in stable_sorted(j.covers):
        fams = sorted(
            (sorted((_enc(m) for m in mors), key=_cjson) for mors in j.covers[x]),
            key=_cjson,
        )
        covers.append([_enc(x), fams])
    return {"base": basename, "covers": covers}


def _top_unjson(d, base):
    covers = {}
    for x, fams in d["covers"]:
        covers[_dec(x)] = frozenset(
            frozenset(_dec(m) for m in fam) for fam in fams
        )
    return Topology(base, covers)


def _psh_json(p: Presheaf, basename):
    return {
        "base": basename,
        "name": p.name,
        "els": [[_enc(x), [_enc(e) for e in p.els[x]]]
                for x in stable_sorted(p.els)],
        "act": [[_enc(m), _kv(p.act[m])] for m in stable_sorted(p.act)],
    }


def _psh_unjson(d, base):
    els = {_dec(x): tuple(_dec(e) for e in row) for x, row in d["els"]}
    act = {_dec(m): _unkv(rows) for m, rows in d["act"]}
    return Presheaf(base, els, act, name=d.get("name", ""))


def _idx_json(dd: IndexedCat, basename):
    return {
        "base": basename,
        "name": dd.name,
        "fib": [[_enc(x), _cat_json(dd.fib[x])] for x in stable_sorted(dd.fib)],
        "res": [[_enc(y), _fun_json(dd.res[y])] for y in stable_sorted(dd.res)],
        "compositor": [[[_enc(g), _enc(f)], _kv(dd.compositor[(g, f)])]
                       for (g, f) in sorted(dd.compositor,
                                            key=lambda p: _cjson([_enc(p[0]),
                                                                  _enc(p[1])]))],
        "unitor": [[_enc(x), _kv(dd.unitor[x])] for x in stable_sorted(dd.unitor)],
    }


def _idx_unjson(d, base):
    fib = {_dec(x): _cat_unjson(cj) for x, cj in d["fib"]}
    res = {}
    for y, fj in d["res"]:
        ym = _dec(y)
        yy, yx = base.mor[ym]
        res[ym] = _fun_unjson(fj, fib[yx], fib[yy])
    compositor = {}
    for (g, f), rows in d["compositor"]:
        compositor[(_dec(g), _dec(f))] = _unkv(rows)
    unitor = {_dec(x): _unkv(rows) for x, rows in d["unitor"]}
    return IndexedCat(base, fib, res, compositor, unitor, name=d.get("name", ""))


def _ifun_json(p: IndexedFun, srcname, dstname):
    return {
        "src": srcname,
        "dst": dstname,
        "name": p.name,
        "comp": [[_enc(x), _fun_json(p.comp[x])] for x in stable_sorted(p.comp)],
        "cell": [[_enc(y), _kv(p.cell[y])] for y in stable_sorted(p.cell)],
    }


def digest_text(text: str) -> str:
    data = text.replace("\r\n", "\n").encode("utf-8")
    return "sha256:" + hashlib.sha256(data).hexdigest()


def serialize_blocks(blocks) -> str:
    """Canonical interchange text for (kind, name, value) triples.

    Values that reference other values (topology bases, fibration endpoints)
    must have their referents in the list, earlier, so names resolve.
    Categories resolve by identity first, then structural equality."""
    cats = []
    idxnames = {}

    def catname(c, owner):
        for nm, c2 in cats:
            if c2 is c:
                return nm
        for nm, c2 in cats:
            if c2 == c:
                return nm
        raise InternalError(f"{owner!r} serialized without its base category")

    out = []
    for kind, name, v in blocks:
        # block name last so it beats any display name inside the payload
        if kind == "category":
            cats.append((name, v))
            out.append({"kind": "category", **_cat_json(v), "name": name})
        elif kind == "topology":
            out.append({"kind": "topology",
                        **_top_json(v, catname(v.base, name)), "name": name})
        elif kind == "functor":
            out.append({"kind": "functor", "src": catname(v.src, name),
                        "dst": catname(v.dst, name), **_fun_json(v),
                        "name": name})
        elif kind == "presheaf":
            out.append({"kind": "presheaf",
                        **_psh_json(v, catname(v.base, name)), "name": name})
        elif kind == "indexed":
            idxnames[id(v)] = name
            out.append({"kind": "indexed",
                        **_idx_json(v, catname(v.base, name)), "name": name})
        elif kind == "fibration":
            sn, dn = idxnames.get(id(v.D)), idxnames.get(id(v.E))
            if sn is None or dn is None:
                raise InternalError(f"fibration {name!r} serialized without "
                                    "its endpoint indexed categories")
            out.append({"kind": "fibration", **_ifun_json(v, sn, dn),
                        "name": name})
        else:
            raise InternalError(f"unknown block kind {kind!r}")
    body = {"format": FORMAT, "blocks": out}
    dg = "sha256:" + hashlib.sha256(_cjson(body).encode("utf-8")).hexdigest()
    return _cjson({**body, "digest": dg}) + "\n"


def serialize_env(env: Elaborated) -> str:
    return serialize_blocks(
        [(kind, name, env.kinds_of(kind)[name]) for kind, name in env.order]
    )


def load_interchange(text, caps: _caps.Caps = _caps.DEFAULT):
    """Decode canonical interchange text; returns (Elaborated or None, diags)."""

    def bad(msg, hint=""):
        return None, [Diagnostic(1, 1, msg, hint)]

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        return None, [Diagnostic(e.lineno, e.colno, f"not valid JSON: {e.msg}")]
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        return bad(f"not a {FORMAT} interchange document")
    body = {"format": doc.get("format"), "blocks": doc.get("blocks")}
    dg = "sha256:" + hashlib.sha256(_cjson(body).encode("utf-8")).hexdigest()
    if doc.get("digest") != dg:
        return bad("digest mismatch: the document was altered after it was "
                   "emitted", "regenerate it instead of editing by hand")
    env = Elaborated()
    try:
        for b in doc["blocks"]:
            kind, name = b["kind"], b["name"]
            if name in {n for _, n in env.order}:
                return bad(f"duplicate block name {name!r}")
            if kind == "category":
                c = _cat_unjson(b)
                for msg in validate_fincat(c, caps)[:3]:
                    env.findings.append((kind, name, msg))
                env.cats[name] = c
            elif kind == "topology":
                base = env.cats.get(b["base"])
                if base is None:
                    return bad(f"topology {name!r} references unknown "
                               f"category {b['base']!r}")
                j = _top_unjson(b, base)
                for msg in validate_topology(j, caps)[:3]:
                    env.findings.append((kind, name, msg))
                env.topologies[name] = j
            elif kind == "functor":
                src, dst = env.cats.get(b["src"]), env.cats.get(b["dst"])
                if src is None or dst is None:
                    return bad(f"functor {name!r} references unknown categories")
                f = _fun_unjson(b, src, dst, name=name)
                for msg in f.validate()[:3]:
                    env.findings.append((kind, name, msg))
                env.functors[name] = f
            elif kind == "presheaf":
                base = env.cats.get(b["base"])
                if base is None:
                    return bad(f"presheaf {name!r} references unknown "
                               f"category {b['base']!r}")
                p = _psh_unjson(b, base)
                for msg in validate_presheaf(p)[:3]:
                    env.findings.append((kind, name, msg))
                env.presheaves[name] = p
            elif kind == "indexed":
                base = env.cats.get(b["base"])
                if base is None:
                    return bad(f"indexed {name!r} references unknown "
                               f"category {b['base']!r}")
                dd = _idx_unjson(b, base)
                for msg in validate_indexed(dd, caps)[:3]:
                    env.findings.append((kind, name, msg))
                env.indexed[name] = dd
            elif kind == "fibration":
                src, dst = env.indexed.get(b["src"]), env.indexed.get(b["dst"])
                if src is None or dst is None:
                    return bad(f"fibration {name!r} references unknown "
                               "indexed categories")
                comp = {}
                for x, fj in b["comp"]:
                    xo = _dec(x)
                    comp[xo] = _fun_unjson(fj, src.fib[xo], dst.fib[xo])
                cell = {_dec(y): _unkv(rows) for y, rows in b["cell"]}
                p = IndexedFun(src, dst, comp, cell, name=b.get("name", name))
                for msg in validate_indexed_fun(p)[:3]:
                    env.findings.append((kind, name, msg))
                env.indexedfuns[name] = p
            else:
                return bad(f"unknown block kind {kind!r}")
            env.order.append((kind, name))
    except (KeyError, TypeError, ValueError, IndexError) as e:
        return bad(f"malformed interchange block: {e}")
    return env, []


def load_input(text, caps: _caps.Caps = _caps.DEFAULT):
    """Sniff DSL vs interchange and load either; returns (env, diags)."""
    if text.lstrip()[:1] == "{":
        return load_interchange(text, caps)
    doc, diags = parse(text)
    if diags:
        return None, diags
    return elaborate(doc, caps)
