import importlib
import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from bbl_lab import pconcave as pc
from bbl_lab import polytope2d as P
from bbl_lab.lab import (
    ScenarioError, audit, default_suite, dump_scenarios, load_reports, parse_scenario,
    parse_scenarios, random_pconcave, random_polygon, random_scenarios, reports_csv,
    reports_json, run_scenario, run_suite,
)
from bbl_lab.lab.cli import main
from bbl_lab.lab.scenario import Scenario
from conftest import brute_force_hull, shoelace

emit_mod = importlib.import_module("bbl_lab.lab.emit")
ROOT = Path(__file__).resolve().parents[1]
SQ = [[0, 0], [1, 0], [1, 1], [0, 1]]
TRI = [[0, 0], [2, 0], [0, 2]]


def doc(*items):
    return json.dumps({"schema": 1, "scenarios": list(items)})


# -- scenario files --------------------------------------------------------------


def test_parse_minimal_bm():
    (s,) = parse_scenarios(doc({"name": "a", "kind": "bm", "bodies": [SQ, TRI]}))
    assert s.kind == "bm" and s.lam == 0.5 and s.seed == 0
    assert s.bodies[1].area == pytest.approx(2.0)


@pytest.mark.parametrize(
    "item, needle",
    [
        ({"name": "a", "kind": "bm", "bodies": [SQ, TRI], "lambda": 1.5}, "scenarios[0].lambda"),
        ({"name": "a", "kind": "bm", "bodies": [SQ, TRI], "lambda": 0}, "scenarios[0].lambda"),
        ({"name": "a", "kind": "bm", "bodies": [SQ, [[0, 0], [1, 1]]]}, "scenarios[0].bodies[1]"),
        ({"name": "a", "kind": "bm", "bodies": [SQ]}, "scenarios[0].bodies"),
        ({"name": "a", "kind": "bm", "bodies": [SQ, [[0, 0], [2, 0], [1, 0.2], [1, 2]]]}, "bodies[1]"),
        ({"name": "a", "kind": "nope"}, "scenarios[0].kind"),
        ({"name": "a", "kind": "bm", "bodies": [SQ, TRI], "colour": 1}, "scenarios[0].colour"),
        ({"name": "a", "kind": "bm", "bodies": [SQ, TRI], "seed": -1}, "scenarios[0].seed"),
        ({"name": "a", "kind": "bm", "bodies": [SQ, TRI], "seed": 1.5}, "scenarios[0].seed"),
        ({"name": "a", "kind": "urysohn", "bodies": [SQ], "mesh_h": 0.4}, "scenarios[0].mesh_h"),
        ({"name": "a", "kind": "urysohn", "bodies": [SQ], "angle_count": 4}, "angle_count"),
        ({"name": "a", "kind": "poisson_bbl", "bodies": [SQ, SQ], "f_pieces": [[1, 0, 3]],
          "beta_exp": "inf"}, "beta_exp"),
        ({"name": "a", "kind": "bbl", "functions": [{"domain": SQ, "p": 1, "pieces": [[0, 0, 1]]},
                                                    {"domain": SQ, "p": 2, "pieces": [[0, 0, 1]]}]}, ".p"),
        ({"name": "a", "kind": "bbl", "quad_tol": 0.5,
          "functions": [{"domain": SQ, "p": 1, "pieces": [[0, 0, 1]]}] * 2}, "quad_tol"),
    ],
)
def test_parse_errors_name_the_field(item, needle):
    with pytest.raises(ScenarioError) as exc:
        parse_scenarios(doc(item), "suite.json")
    assert needle in str(exc.value) and str(exc.value).startswith("suite.json")


def test_parse_json_syntax_error_has_line_and_column():
    with pytest.raises(ScenarioError, match=r"^bad\.json:3:\d+: invalid JSON"):
        parse_scenarios('{\n "schema": 1,\n "scenarios": [,]\n}', "bad.json")


def test_parse_schema_and_duplicates():
    with pytest.raises(ScenarioError, match="schema"):
        parse_scenarios(json.dumps({"schema": 2, "scenarios": []}))
    item = {"name": "a", "kind": "bm", "bodies": [SQ, TRI]}
    with pytest.raises(ScenarioError, match="duplicate"):
        parse_scenarios(doc(item, item))


def test_scenario_round_trip():
    suite = default_suite()
    again = parse_scenarios(dump_scenarios(suite))
    assert dump_scenarios(again) == dump_scenarios(suite)


def test_beta_inf_round_trip():
    s = Scenario("c", "poisson_bbl", bodies=(P.ConvexPolygon(SQ),) * 2, mesh_h=0.1,
                 f_pieces=((0.0, 0.0, 2.0),), beta_exp=math.inf)
    text = dump_scenarios([s])
    assert '"inf"' in text
    assert parse_scenarios(text)[0].beta_exp == math.inf


def test_shipped_default_file_matches_generator():
    text = (ROOT / "scenarios" / "default.json").read_text()
    assert text == dump_scenarios(default_suite())
    assert len(parse_scenario(ROOT / "scenarios" / "default.json")) == len(default_suite())


# -- generators -----------------------------------------------------------------


def test_random_polygon_deterministic():
    a, b = random_polygon(42, 10, 3.0), random_polygon(42, 10, 3.0)
    assert np.array_equal(a.vertices, b.vertices)
    assert not np.array_equal(a.vertices, random_polygon(43, 10, 3.0).vertices)


def test_random_polygon_matches_hull_oracle():
    # replay the documented draw and compare with an O(n^3) hull
    for seed in range(2000):
        K = random_polygon(seed, 7, 2.0)
        rng = np.random.default_rng(seed)
        r = np.sqrt(rng.uniform(0.0, 1.0, 7))
        phi = rng.uniform(0.0, 2.0 * math.pi, 7)
        pts = np.column_stack([math.sqrt(2) * r * np.cos(phi), r * np.sin(phi) / math.sqrt(2)])
        H = brute_force_hull(pts)
        assert K.area == pytest.approx(shoelace(H), rel=1e-12)
        assert len(K.vertices) == len(H)


def test_random_polygon_properties_many_draws():
    for seed in range(10_000):
        K = random_polygon(seed, 6, 4.0)
        assert K.area > 0
        v = K.vertices
        assert np.all(v[:, 0] ** 2 / 4 + v[:, 1] ** 2 * 4 <= 1 + 1e-12)
        assert 3 <= len(v) <= 6


def test_random_polygon_rejects_bad_input():
    with pytest.raises(ValueError):
        random_polygon(0, 3)
    with pytest.raises(ValueError):
        random_polygon(0, 8, 0.5)


def test_random_pconcave():
    u = random_pconcave(5, 0.5)
    v = random_pconcave(5, 0.5)
    assert u.to_dict() == v.to_dict()
    assert u.p == 0.5 and pc.sup_norm(u) > 0


def test_random_scenarios_independent_of_count():
    a = random_scenarios("bm", 3, 9)
    b = random_scenarios("bm", 5, 9)
    assert dump_scenarios(a) == dump_scenarios(b[:3])
    with pytest.raises(ValueError):
        random_scenarios("nope", 1, 0)


# -- runner ---------------------------------------------------------------------------


def test_run_suite_empty_and_single():
    assert run_suite([]) == []
    (s,) = parse_scenarios(doc({"name": "a", "kind": "bm", "bodies": [SQ, TRI]}))
    (r,) = run_suite([s])
    assert r.passed and r.data["status"] == "ok" and not audit(r.data)
    assert set(r.checks) == {"bm", "groemer", "fmp"}


def test_run_suite_order_with_jobs():
    suite = random_scenarios("bm", 6, 1)
    one = run_suite(suite, jobs=1)
    two = run_suite(suite, jobs=2)
    assert [r.name for r in two] == [s.name for s in suite]
    assert reports_json(one) == reports_json(two)
    fem = random_scenarios("urysohn", 2, 3, mesh_h=0.1, angle_count=16)
    assert [r.field_dump for r in run_suite(fem, jobs=2)] == [r.field_dump for r in run_suite(fem)]


def test_large_suite_byte_identical():
    suite = random_scenarios("bm", 50, 77)
    assert reports_json(run_suite(suite)) == reports_json(run_suite(suite))


def test_errors_recorded_without_aborting():
    good = random_scenarios("bm", 1, 2)[0]
    K = P.ConvexPolygon(SQ)
    # beta_exp = inf with a non-constant source passes through the dataclass but fails at run time
    bad = Scenario("bad", "poisson_bbl", bodies=(K, K), mesh_h=0.1, f_pieces=((1.0, 0.0, 3.0),),
                   beta_exp=math.inf)
    reps = run_suite([bad, good])
    assert reps[0].data["status"] == "error" and not reps[0].passed
    assert "ValueError" in reps[0].data["error"]
    assert reps[1].passed


def test_audit_detects_tampering():
    r = run_suite(random_scenarios("bm", 1, 4))[0]
    data = json.loads(reports_json([r]))["reports"][0]
    assert audit(data) == []
    data["checks"]["bm"]["holds"] = False
    data["checks"]["groemer"]["margin"] = 123.0
    assert len(audit(data)) == 2
    data["passed"] = False
    assert len(audit(data)) == 3


def test_mixed_kinds_audit():
    suite = (random_scenarios("bbl", 2, 1, p=2.0) + random_scenarios("stability", 1, 2)
             + random_scenarios("urysohn", 1, 3, mesh_h=0.08, angle_count=16))
    for r in run_suite(suite):
        assert r.data["status"] == "ok", r.data["error"]
        assert audit(json.loads(reports_json([r]))["reports"][0]) == []


# -- emitter ----------------------------------------------------------------


@pytest.fixture(scope="module")
def mixed_reports():
    suite = (random_scenarios("bm", 2, 5) + random_scenarios("bbl", 1, 6)
             + random_scenarios("bm_tau", 1, 7, mesh_h=0.1)
             + random_scenarios("urysohn", 1, 8, mesh_h=0.1, angle_count=16))
    return run_suite(suite)


def test_json_round_trip(mixed_reports):
    text = reports_json(mixed_reports)
    again = load_reports(text)
    assert reports_json(again) == text
    assert json.loads(text)["schema"] == 1


def test_csv_constant_columns(mixed_reports):
    lines = reports_csv(mixed_reports).splitlines()
    assert lines[0].split(",") == list(emit_mod.CSV_COLUMNS)
    import csv

    rows = list(csv.reader(lines))
    assert {len(r) for r in rows} == {len(emit_mod.CSV_COLUMNS)}
    assert len(rows) == len(mixed_reports) + 1


def test_sanitize():
    assert emit_mod.sanitize({"a": math.inf, "b": [np.float64(-math.inf), math.nan], "c": np.int64(3)}) == {
        "a": "inf", "b": ["-inf", "nan"], "c": 3}


def test_emit_files(mixed_reports, tmp_path):
    paths = emit_mod.emit(mixed_reports, ("json", "csv", "svg"), tmp_path)
    names = {p.name for p in paths}
    assert {"report.json", "report.csv", "timings.csv", "deficit_vs_h0.svg", "deficit_vs_asym.svg"} <= names
    svgs = [p for p in paths if p.suffix == ".svg"]
    fem = [r for r in mixed_reports if r.kind in ("bm_tau", "urysohn", "poisson_bbl")]
    assert all(r.field_dump for r in fem)
    assert len(svgs) == len(mixed_reports) + 2 + len(fem)
    dumps = sorted(p for p in paths if p.name.endswith("_field.txt"))
    assert len(dumps) == len(fem)
    for p in svgs:
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
    again = tmp_path / "again"
    emit_mod.emit(mixed_reports, ("svg",), again)
    for p in svgs:
        assert (again / p.name).read_bytes() == p.read_bytes()


def test_field_dump_matches_solution(mixed_reports):
    from bbl_lab import torsion as T

    r = next(r for r in mixed_reports if r.kind == "urysohn")
    fld = T.load_field(r.field_dump.splitlines())
    K = P.ConvexPolygon(r.data["scenario"]["bodies"][0])
    ref = T.solve_poisson(K, T.constant_source(2.0), r.data["scenario"]["mesh_h"])
    assert np.array_equal(fld.values, ref.values)
    assert fld.integral == pytest.approx(r.data["quantities"]["tau_mesh"]["value"], rel=1e-12)
    assert all(r.field_dump is None for r in mixed_reports if r.kind in ("bm", "bbl"))


def test_parse_formats():
    assert emit_mod.parse_formats("svg, json,json") == ("svg", "json")
    with pytest.raises(ValueError):
        emit_mod.parse_formats("png")


# -- CLI ------------------------------------------------------------------------------


def test_cli_verify_pass(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(doc({"name": "a", "kind": "bm", "bodies": [SQ, TRI]}))
    assert main(["verify", str(f), "--out", str(tmp_path / "o"), "--formats", "json,csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS  a (bm)")
    assert (tmp_path / "o" / "report.json").exists()


def test_cli_invalid_input(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(doc({"name": "a", "kind": "bm", "bodies": [SQ, TRI], "lambda": 2}))
    assert main(["verify", str(f), "--out", str(tmp_path)]) == 2
    assert "scenarios[0].lambda" in capsys.readouterr().err
    assert main(["verify", str(tmp_path / "missing.json")]) == 2


def test_cli_failing_flag_gives_exit_one(tmp_path, monkeypatch):
    f = tmp_path / "s.json"
    f.write_text(doc({"name": "a", "kind": "bm", "bodies": [SQ, TRI]}))
    runner = importlib.import_module("bbl_lab.lab.runner")
    monkeypatch.setattr(runner, "BM_SLACK", -1.0)  # demand lhs >= rhs + |lhs|: must fail
    assert main(["verify", str(f), "--out", str(tmp_path / "o"), "--formats", "json"]) == 1


def test_cli_random_suite_and_emit_scenarios(tmp_path, capsys):
    sc = tmp_path / "gen.json"
    code = main(["random-suite", "--kind", "bm", "--count", "3", "--seed", "5", "--out",
                 str(tmp_path / "o"), "--formats", "csv", "--emit-scenarios", str(sc)])
    assert code == 0
    assert len(parse_scenario(sc)) == 3
    assert "3/3 scenarios passed" in capsys.readouterr().out


def test_cli_jobs_env(tmp_path, monkeypatch):
    monkeypatch.setenv("BBL_LAB_JOBS", "x")
    assert main(["random-suite", "--kind", "bm", "--count", "1", "--seed", "1", "--out", str(tmp_path)]) == 2


def test_cli_constants(capsys):
    code = main(["constants", "--p", "1", "--vol0", "1", "--vol1", "1", "--diam0", "1.4142135623730951",
                 "--diam1", "1.4142135623730951", "--I0", "1", "--I1", "1"])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["b_threshold"] == pytest.approx(0.0625)
    assert data["eta"] == pytest.approx(6.0) and data["beta"] > 0
    assert data["provenance"]["p"] == 1.0
