"""Cartesian lifts, essential fibres, the two translations between indexed
fibrations and indexed categories over the total category, their unit and
counit, the transposes, and the two localization conformance checks."""

import pytest

from finstack import (
    CapExceeded,
    Caps,
    FibMor,
    Functor,
    IndexedNat,
    L_D,
    R_D,
    all_functors,
    all_indexed_funs,
    as_fibration,
    cartesian_lift,
    check_thm_4_2_i,
    check_thm_4_2_ii,
    compose_indexed_funs,
    const_indexed,
    counit_eps,
    embed_discrete,
    essential_fibre_cat,
    find_indexed_natiso,
    flat,
    groth_map,
    grothendieck,
    identity_functor,
    identity_indexed_fun,
    is_cartesian_over,
    is_equivalence,
    is_fibration_functor,
    is_indexed_equivalence,
    is_indexed_fibration,
    iso_classes,
    product_indexed,
    saturate,
    sharp,
    strict_indexed_fun,
    terminal_cat,
    unit_eta,
    validate_fib_mor,
)
from finstack.fibadj import IndexedFibration

from corpus import (
    arrow_cat,
    arrow_presheaf,
    arrow_site,
    const_walking_iso,
    discrete_two,
    groupoid_fibration,
    patches_cat,
    patches_sheaf,
    patches_site,
    projection_fibration,
    twisted_z2_indexed,
    walking_iso_cat,
)


def embed_fibration(psh):
    return as_fibration(identity_indexed_fun(embed_discrete(psh)))


def trivial_topology(fib):
    return saturate(fib.p.E.base, {})


# ---------------------------------------------------------------------------
# cartesian morphisms and cleavages


def test_every_morphism_cartesian_over_identity_functor():
    k = walking_iso_cat()
    f = identity_functor(k)
    assert all(is_cartesian_over(f, m) for m in k.mor)


def test_cartesian_over_point_means_universal():
    one = terminal_cat()
    k = walking_iso_cat()
    bang = Functor(k, one, {a: "*" for a in k.objects},
                   {m: ("id", "*") for m in k.mor}, name="!")
    assert all(is_cartesian_over(bang, m) for m in k.mor)
    a = arrow_cat()
    bang2 = Functor(a, one, {o: "*" for o in a.objects},
                    {m: ("id", "*") for m in a.mor}, name="!")
    # only the invertible arrows admit universal factorizations over the point
    assert is_cartesian_over(bang2, "ida")
    assert is_cartesian_over(bang2, "idb")
    assert not is_cartesian_over(bang2, "i")


def test_cartesian_lift_identity_functor():
    k = walking_iso_cat()
    f = identity_functor(k)
    assert cartesian_lift(f, "f", "y") == "f"
    with pytest.raises(ValueError):
        cartesian_lift(f, "f", "x")


def test_is_fibration_functor_witness_covers_all_keys():
    k = walking_iso_cat()
    f = identity_functor(k)
    c = is_fibration_functor(f)
    assert c.ok
    keys = {(u, a) for a in k.objects for u in k.mor if k.cod(u) == f.ob(a)}
    assert set(c.witness) == keys
    for (u, a), m in c.witness.items():
        assert k.cod(m) == a
        assert f.mo(m) == u
        assert is_cartesian_over(f, m)


def test_discrete_over_iso_is_not_a_fibration():
    two = discrete_two()
    k = walking_iso_cat()
    f0 = Functor(two, k, {"0": "x", "1": "y"},
                 {("id", "0"): "idx", ("id", "1"): "idy"}, name="embed")
    c = is_fibration_functor(f0)
    assert not c.ok


# ---------------------------------------------------------------------------
# indexed fibration predicate


def test_identity_indexed_fun_is_indexed_fibration():
    for dd in (embed_discrete(patches_sheaf()), twisted_z2_indexed()):
        c = is_indexed_fibration(identity_indexed_fun(dd))
        assert c.ok
        assert isinstance(c.witness, IndexedFibration)


def test_groupoid_and_projection_fibrations():
    assert is_indexed_fibration(groupoid_fibration(arrow_cat())).ok
    d = embed_discrete(patches_sheaf())
    e = const_walking_iso(patches_cat())
    assert is_indexed_fibration(projection_fibration(d, e)).ok


def test_is_indexed_fibration_rejects_missing_lifts():
    base = terminal_cat()
    ee = const_indexed(base, discrete_two())
    dd = const_indexed(base, walking_iso_cat())
    f0 = Functor(ee.fib["*"], dd.fib["*"], {"0": "x", "1": "y"},
                 {("id", "0"): "idx", ("id", "1"): "idy"}, name="embed")
    p = strict_indexed_fun(ee, dd, {"*": f0})
    c = is_indexed_fibration(p)
    assert not c.ok
    with pytest.raises(ValueError):
        as_fibration(p)


# ---------------------------------------------------------------------------
# essential fibres


def test_essential_fibre_discrete_identity_is_singleton():
    dd = embed_discrete(patches_sheaf())
    for x in dd.base.objects:
        f = identity_functor(dd.fib[x])
        for u in dd.fib[x].objects:
            fe = essential_fibre_cat(f, u)
            assert len(fe.objects) == 1
            assert len(fe.mor) == 1


def test_essential_fibre_over_point_recovers_the_fibre():
    k = walking_iso_cat()
    one = terminal_cat()
    bang = Functor(k, one, {a: "*" for a in k.objects},
                   {m: ("id", "*") for m in k.mor}, name="!")
    fe = essential_fibre_cat(bang, "*")
    assert len(fe.objects) == 2
    assert len(fe.mor) == 4
    assert len(iso_classes(fe)) == 1
    assert any(is_equivalence(f).ok for f in all_functors(k, fe))


# ---------------------------------------------------------------------------
# R_D


def test_r_d_identity_on_discrete_has_contractible_fibres():
    dd = embed_discrete(patches_sheaf())
    r = R_D(embed_fibration(patches_sheaf()))
    g = grothendieck(dd)
    assert set(r.fib) == set(g.total.objects)
    for v in g.total.objects:
        assert len(r.fib[v].objects) == 1
        assert len(r.fib[v].mor) == 1


def test_r_d_identity_on_twisted_group_fibre():
    dd = twisted_z2_indexed()
    fib = as_fibration(identity_indexed_fun(dd))
    r = R_D(fib)
    (v,) = list(r.fib)
    fe = r.fib[v]
    assert len(fe.objects) == 2
    assert len(fe.mor) == 4
    assert len(iso_classes(fe)) == 1


def test_r_d_projection_fibres_are_the_second_factor():
    d = embed_discrete(patches_sheaf())
    e = const_walking_iso(patches_cat())
    fib = as_fibration(projection_fibration(d, e))
    r = R_D(fib)
    k = walking_iso_cat()
    for v in r.fib:
        fe = r.fib[v]
        assert (len(fe.objects), len(fe.mor)) == (2, 4)
        assert any(is_equivalence(f).ok for f in all_functors(k, fe))


def test_r_d_rejects_total_category_of_another_base():
    fib = embed_fibration(patches_sheaf())
    foreign = grothendieck(const_walking_iso(patches_cat()))
    with pytest.raises(ValueError):
        R_D(fib, foreign)


def test_r_d_cleavage_change_gives_equivalent_result():
    p = groupoid_fibration(arrow_cat())
    fib = as_fibration(p)
    g = grothendieck(p.E)
    alt = {}
    changed = False
    for x, cle in fib.cleavages.items():
        fx = p.comp[x]
        alt[x] = {}
        for (u, a), m in cle.items():
            cands = [n for n in fx.src.into(a)
                     if fx.mo(n) == u and is_cartesian_over(fx, n)]
            alt[x][(u, a)] = cands[-1]
            changed = changed or cands[-1] != m
    assert changed
    r1 = R_D(fib, g)
    r2 = R_D(IndexedFibration(p, alt), g)
    found = False
    for f in all_indexed_funs(r1, r2):
        if is_indexed_equivalence(f).ok:
            found = True
            break
    assert found


# ---------------------------------------------------------------------------
# L_D


def test_l_d_of_the_point_is_the_identity_fibration():
    dd = embed_discrete(patches_sheaf())
    g = grothendieck(dd)
    a = const_indexed(g.total, terminal_cat())
    l = L_D(a, g)
    for x in dd.base.objects:
        assert is_equivalence(l.fib.p.comp[x]).ok


def test_l_d_output_is_an_indexed_fibration_with_cartesian_cleavage():
    dd = embed_discrete(patches_sheaf())
    g = grothendieck(dd)
    a = const_indexed(g.total, walking_iso_cat())
    l = L_D(a, g)
    assert is_indexed_fibration(l.fib.p).ok
    for x, cle in l.fib.cleavages.items():
        fx = l.fib.p.comp[x]
        for (u, b), m in cle.items():
            assert fx.mo(m) == u
            assert fx.src.cod(m) == b
            assert is_cartesian_over(fx, m)


def test_groth_map_of_identity_is_identity():
    a = const_walking_iso(patches_cat())
    ga = grothendieck(a)
    gm = groth_map(identity_indexed_fun(a), ga, ga)
    assert all(gm.ob(o) == o for o in ga.total.objects)
    assert all(gm.mo(m) == m for m in ga.total.mor)


# ---------------------------------------------------------------------------
# unit and counit


@pytest.mark.parametrize("make_dd", [
    lambda: embed_discrete(patches_sheaf()),
    lambda: twisted_z2_indexed(),
    lambda: embed_discrete(arrow_presheaf()),
])
def test_unit_is_componentwise_equivalence(make_dd):
    dd = make_dd()
    g = grothendieck(dd)
    a = const_indexed(g.total, walking_iso_cat())
    eta = unit_eta(a, g)
    assert is_indexed_equivalence(eta).ok


def test_unit_on_essential_fibre_input():
    dd = twisted_z2_indexed()
    g = grothendieck(dd)
    fib = as_fibration(identity_indexed_fun(dd))
    r = R_D(fib, g)
    eta = unit_eta(r, g)
    assert is_indexed_equivalence(eta).ok


@pytest.mark.parametrize("make_fib", [
    lambda: embed_fibration(patches_sheaf()),
    lambda: as_fibration(identity_indexed_fun(twisted_z2_indexed())),
    lambda: as_fibration(groupoid_fibration(arrow_cat())),
    lambda: as_fibration(projection_fibration(
        embed_discrete(patches_sheaf()), const_walking_iso(patches_cat()))),
])
def test_counit_is_componentwise_equivalence(make_fib):
    fib = make_fib()
    g = grothendieck(fib.p.E)
    eps = counit_eps(fib, g)
    assert is_indexed_equivalence(eps).ok


# ---------------------------------------------------------------------------
# transposes


@pytest.mark.parametrize("make_fib", [
    lambda: embed_fibration(patches_sheaf()),
    lambda: as_fibration(identity_indexed_fun(twisted_z2_indexed())),
    lambda: as_fibration(groupoid_fibration(arrow_cat())),
])
def test_transposes_are_mutually_quasi_inverse(make_fib):
    fib = make_fib()
    g = grothendieck(fib.p.E)
    r = R_D(fib, g)
    h = identity_indexed_fun(r)
    la = L_D(r, g)
    fm = flat(h, fib, g, LA=la, LR=la)
    assert validate_fib_mor(fm) == []
    h2 = sharp(fm, la, g, R_dst=r)
    assert find_indexed_natiso(h2, h) is not None
    fm2 = flat(h2, fib, g, LA=la, LR=la)
    assert find_indexed_natiso(fm2.F, fm.F) is not None


def test_flat_of_unit_is_an_equivalence():
    dd = embed_discrete(arrow_presheaf())
    g = grothendieck(dd)
    a = const_indexed(g.total, terminal_cat())
    la = L_D(a, g)
    rla = R_D(la.fib, g)
    eta = unit_eta(a, g, L=la, R=rla)
    fm = flat(eta, la.fib, g, LA=la, LR=L_D(rla, g))
    assert validate_fib_mor(fm) == []
    assert is_indexed_equivalence(fm.F).ok


def test_sharp_refuses_foreign_flattening():
    fib = as_fibration(groupoid_fibration(arrow_cat()))
    g = grothendieck(fib.p.E)
    r = R_D(fib, g)
    la = L_D(r, g)
    fm = flat(identity_indexed_fun(r), fib, g, LA=la, LR=la)
    other = L_D(r, g)
    with pytest.raises(ValueError):
        sharp(fm, other, g)


def test_validate_fib_mor_flags_lost_cartesian_arrows():
    base = terminal_cat()
    ee = const_indexed(base, arrow_cat())
    prod, pr1, _ = product_indexed(ee, ee)
    src = as_fibration(identity_indexed_fun(ee))
    dst = as_fibration(pr1)
    fx = ee.fib["*"]
    diag = Functor(fx, prod.fib["*"],
                   {o: (o, o) for o in fx.objects},
                   {m: (m, m) for m in fx.mor}, name="diag")
    f = strict_indexed_fun(ee, prod, {"*": diag})
    phi = IndexedNat(compose_indexed_funs(pr1, f), src.p,
                     {"*": {o: fx.ident[o] for o in fx.objects}})
    errs = validate_fib_mor(FibMor(src, dst, f, phi))
    assert errs
    assert any("not preserved" in e for e in errs)


# ---------------------------------------------------------------------------
# localization conformance


@pytest.mark.parametrize("make", [
    lambda: (embed_fibration(patches_sheaf()), patches_site()[1]),
    lambda: (embed_fibration(arrow_presheaf()), arrow_site()[1]),
    lambda: (as_fibration(groupoid_fibration(patches_cat())), patches_site()[1]),
])
def test_double_plus_preserves_fibrations(make):
    fib, j = make()
    c = check_thm_4_2_i(fib, j)
    assert c.ok, c.reason


def test_double_plus_preserves_fibrations_group_base():
    fib = as_fibration(identity_indexed_fun(twisted_z2_indexed()))
    c = check_thm_4_2_i(fib, trivial_topology(fib))
    assert c.ok, c.reason


@pytest.mark.parametrize("make", [
    lambda: (embed_fibration(patches_sheaf()), patches_site()[1]),
    lambda: (embed_fibration(arrow_presheaf()), arrow_site()[1]),
    lambda: (as_fibration(groupoid_fibration(arrow_cat())), arrow_site()[1]),
])
def test_localized_fibration_is_a_stack(make):
    fib, j = make()
    c = check_thm_4_2_ii(fib, j)
    assert c.ok, c.reason


def test_descent_budget_guards_group_like_bases():
    fib = as_fibration(identity_indexed_fun(twisted_z2_indexed()))
    with pytest.raises(CapExceeded):
        check_thm_4_2_ii(fib, trivial_topology(fib), caps=Caps(max_descent=200))
