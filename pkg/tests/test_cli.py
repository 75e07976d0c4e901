"""Command line driver: exit codes, reports, interchange flows."""

import json
from pathlib import Path

import pytest

from finstack import InternalError
from finstack.cli import main

DATA = Path(__file__).parent / "data"

PATCHES = str(DATA / "patches.site")
SPAN = str(DATA / "span.site")
TWISTED = str(DATA / "twisted.site")
FACTOR = str(DATA / "factor.site")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out), err


# ---------------------------------------------------------------------------
# happy paths, one per command


def test_validate_ok(capsys):
    for f in (PATCHES, SPAN, TWISTED, FACTOR):
        code, out, _ = run(capsys, "validate", f)
        assert code == 0, (f, out)
        assert out.rstrip().endswith("ok")


def test_validate_goldens_ok(capsys):
    for name in ("patches", "span", "twisted", "factor"):
        code, out, _ = run(capsys, "validate", str(DATA / f"{name}.golden.json"))
        assert code == 0, (name, out)


def test_saturate_ok(capsys):
    code, rep, _ = run_json(capsys, "saturate", SPAN)
    assert code == 0
    covers = dict(rep["results"]["covers"])
    assert len(covers["X"]) == 2
    assert ["jp", "jq"] in covers["X"]


def test_desc_ok(capsys):
    code, rep, _ = run_json(capsys, "desc", PATCHES, "--at", "X")
    assert code == 0
    assert rep["results"]["at"] == "X"
    assert rep["results"]["objects"] >= 1


def test_desc_family_index(capsys):
    code, rep, _ = run_json(capsys, "desc", PATCHES, "--at", "X",
                            "--family", "0")
    assert code == 0
    assert rep["results"]["sieve"]


def test_check_prestack_ok(capsys):
    code, rep, _ = run_json(capsys, "check", PATCHES, "--prestack")
    assert code == 0
    assert rep["results"]["holds"] is True


def test_check_stack_ok_on_singleton_sheaf(capsys):
    code, rep, _ = run_json(capsys, "check", FACTOR, "--stack",
                            "--indexed", "T")
    assert code == 0
    assert rep["ok"] is True


def test_stackify_ok(capsys):
    code, rep, _ = run_json(capsys, "stackify", PATCHES)
    assert code == 0
    assert rep["results"]["indexed"] == "S"
    # the non-gluing datum acquires an amalgamation, so the fibre at X grows
    assert rep["results"]["fibres"]["X"]["objects"] == 2


def test_sheafify_ok(capsys):
    code, rep, _ = run_json(capsys, "sheafify", PATCHES)
    assert code == 0
    assert rep["results"]["sections"]
    assert rep["results"]["unit"]


def test_groth_ok(capsys):
    code, rep, _ = run_json(capsys, "groth", TWISTED, "--indexed", "TW")
    assert code == 0
    assert rep["results"]["objects"] == 1
    assert rep["results"]["morphisms"] == 4
    assert rep["results"]["object-list"] == ["(s0,v)"]


def test_giraud_ok(capsys):
    code, rep, _ = run_json(capsys, "giraud", PATCHES)
    assert code == 0
    assert rep["results"]["covers"]


def test_lemma31_ok(capsys):
    code, rep, _ = run_json(capsys, "lemma31", PATCHES)
    assert code == 0
    assert rep["results"]["agree"] is True


def test_fiber_adjunction_ok(capsys):
    code, rep, _ = run_json(capsys, "fiber-adjunction", FACTOR,
                            "--fibration", "phi")
    assert code == 0
    r = rep["results"]
    assert r["unit-equivalence"]["holds"] is True
    assert r["counit-equivalence"]["holds"] is True
    assert r["transposes-quasi-inverse"] is True
    assert r["plus-preserves-fibration"]["holds"] is True
    assert r["stackified-descent"]["holds"] is True


def test_fiber_adjunction_default_identity(capsys):
    code, rep, _ = run_json(capsys, "fiber-adjunction", PATCHES)
    assert code == 0
    assert rep["ok"] is True


def test_factorize_ok(capsys):
    code, rep, _ = run_json(capsys, "factorize", FACTOR, "--phi", "phi")
    assert code == 0
    assert rep["results"]["factored"] is True
    assert rep["results"]["through"]


# ---------------------------------------------------------------------------
# exit 1: a check that ran and failed


def test_check_stack_fails_on_patches(capsys):
    code, rep, _ = run_json(capsys, "check", PATCHES, "--stack")
    assert code == 1
    assert rep["ok"] is False
    assert "does not glue" in rep["results"]["witness"]


def test_validate_reports_findings(capsys):
    code, rep, _ = run_json(capsys, "validate", str(DATA / "bad_laws.site"))
    assert code == 1
    assert rep["results"]["findings"]
    f = rep["results"]["findings"][0]
    assert f["name"] == "F" and f["kind"] == "functor"


# ---------------------------------------------------------------------------
# exit 2: bad input


def test_parse_error_exits_2(capsys):
    code, _, err = run(capsys, "validate", str(DATA / "bad_syntax.site"))
    assert code == 2
    assert "line 1" in err


def test_elaboration_error_exits_2(capsys):
    code, _, err = run(capsys, "saturate", str(DATA / "bad_cover.site"))
    assert code == 2
    assert "unknown morphism" in err


def test_findings_block_non_validate_commands(capsys):
    code, _, err = run(capsys, "saturate", str(DATA / "bad_laws.site"))
    assert code == 2
    assert "break their laws" in err


def test_missing_file_exits_2(capsys):
    code, _, err = run(capsys, "validate", "no_such_file.site")
    assert code == 2
    assert "no_such_file.site" in err


def test_ambiguous_block_exits_2(capsys):
    code, _, err = run(capsys, "check", FACTOR, "--stack")
    assert code == 2
    assert "pick one with --indexed" in err


def test_unknown_object_exits_2(capsys):
    code, _, err = run(capsys, "desc", PATCHES, "--at", "Y")
    assert code == 2
    assert "no object" in err


def test_family_out_of_range_exits_2(capsys):
    code, _, err = run(capsys, "desc", PATCHES, "--at", "X", "--family", "99")
    assert code == 2
    assert "out of range" in err


def test_factorize_into_non_stack_exits_2(capsys, tmp_path):
    text = (DATA / "factor.site").read_text()
    text += (
        "functor IX : DX -> DX { obj sX = sX; }\n"
        "functor Ip : Dp -> Dp { obj sp = sp; obj sp' = sp'; }\n"
        "functor Iq : Dq -> Dq { obj sq = sq; }\n"
        "functor Ir : Dr -> Dr { obj sr = sr; }\n"
        "fibration psi : D -> D {\n"
        "  component X = IX; component p = Ip;"
        " component q = Iq; component r = Ir;\n"
        "}\n"
    )
    f = tmp_path / "nonstack.site"
    f.write_text(text)
    code, _, err = run(capsys, "factorize", str(f), "--phi", "psi")
    assert code == 2
    assert "is not a stack" in err


def test_json_error_report(capsys):
    code, out, _ = run(capsys, "validate", str(DATA / "bad_syntax.site"),
                       "--json")
    assert code == 2
    rep = json.loads(out)
    assert rep["ok"] is False
    assert rep["error"]["code"] == 2


# ---------------------------------------------------------------------------
# exit 3: caps


def test_cap_exceeded_exits_3(capsys):
    code, _, err = run(capsys, "saturate", PATCHES,
                       "--max-sieves-per-object", "4")
    assert code == 3
    assert "exceeds cap" in err


def test_closure_cap_exits_3(capsys, tmp_path):
    f = tmp_path / "free.site"
    f.write_text("category N { objects: a; morphisms: n: a -> a; }\n")
    code, _, err = run(capsys, "validate", str(f), "--max-closure", "50")
    assert code == 3
    assert "max-closure" in err


# ---------------------------------------------------------------------------
# exit 4: broken invariants inside the tool


def test_internal_error_exits_4(capsys, monkeypatch):
    def boom(*a, **k):
        raise InternalError("stackify invariant broken")

    monkeypatch.setattr("finstack.cli.stackify", boom)
    code, _, err = run(capsys, "stackify", PATCHES)
    assert code == 4
    assert "invariant" in err


# ---------------------------------------------------------------------------
# report shape


def test_json_report_shape(capsys):
    code, rep, _ = run_json(capsys, "check", PATCHES, "--prestack")
    assert code == 0
    assert set(rep) >= {"command", "args", "inputs", "caps", "results",
                        "ok", "timing-ms"}
    assert rep["command"] == "check"
    assert rep["inputs"][0]["path"] == PATCHES
    assert rep["inputs"][0]["digest"].startswith("sha256:")
    assert rep["caps"]["max-homset"] > 0


def test_json_report_is_deterministic(capsys):
    _, rep1, _ = run_json(capsys, "lemma31", PATCHES)
    _, rep2, _ = run_json(capsys, "lemma31", PATCHES)
    rep1.pop("timing-ms"), rep2.pop("timing-ms")
    assert rep1 == rep2


def test_human_report_mentions_results(capsys):
    code, out, _ = run(capsys, "saturate", SPAN)
    assert code == 0
    assert "covers" in out and out.rstrip().endswith("ok")


# ---------------------------------------------------------------------------
# emit and re-ingest


def test_stackify_emit_then_check_stack(capsys, tmp_path):
    out = tmp_path / "stacked.json"
    code, _, _ = run(capsys, "stackify", PATCHES, "--emit", str(out))
    assert code == 0
    code, rep, _ = run_json(capsys, "check", str(out), "--stack")
    assert code == 0
    assert rep["results"]["indexed"] == "S.st"


def test_sheafify_emit_then_check_stack(capsys, tmp_path):
    out = tmp_path / "sheafed.json"
    code, _, _ = run(capsys, "sheafify", PATCHES, "--emit", str(out))
    assert code == 0
    code, rep, _ = run_json(capsys, "check", str(out), "--stack",
                            "--presheaf", "S.sh")
    assert code == 0


def test_groth_emit_validates(capsys, tmp_path):
    out = tmp_path / "total.json"
    code, _, _ = run(capsys, "groth", TWISTED, "--indexed", "TW",
                     "--emit", str(out))
    assert code == 0
    code, _, _ = run(capsys, "validate", str(out))
    assert code == 0


def test_giraud_emit_validates(capsys, tmp_path):
    out = tmp_path / "gir.json"
    code, _, _ = run(capsys, "giraud", PATCHES, "--emit", str(out))
    assert code == 0
    code, rep, _ = run_json(capsys, "saturate", str(out))
    assert code == 0
    assert rep["results"]["coverage"] == "J.gir"


def test_emitted_file_digest_verifies(capsys, tmp_path):
    out = tmp_path / "stacked.json"
    run(capsys, "stackify", PATCHES, "--emit", str(out))
    text = out.read_text()
    blob = json.loads(text)
    assert blob["format"] == "finstack/1"
    tampered = tmp_path / "tampered.json"
    tampered.write_text(text.replace("S.st", "S.zz"))
    code, _, err = run(capsys, "validate", str(tampered))
    assert code == 2
    assert "digest mismatch" in err
