import json
import math
import os
import pathlib

import pytest

import sqlstruct

SOURCE = pathlib.Path(os.environ.get("SQLSTRUCT_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
SPIDER = os.environ.get("SQLSTRUCT_FIXTURE_DIR")

STADIUM_IR = {
    "type": "query",
    "query": {
        "select": [
            {"expr": {"col": ["stadium", "Name"]}, "alias": None},
            {"expr": {"col": ["stadium", "Capacity"]}, "alias": None},
        ],
        "from": {"table": "stadium", "alias": None},
        "joins": [],
        "where": [],
        "group_by": [],
        "having": [],
        "order_by": [{"expr": {"col": ["stadium", "Average"]}, "direction": "desc"}],
        "limit": 1,
        "distinct": False,
    },
}

COUNTRIES_IR = {
    "type": "query",
    "query": {
        "select": [
            {"expr": {"col": ["COUNTRIES", "CountryName"]}, "alias": None},
            {"expr": {"col": ["COUNTRIES", "CountryId"]}, "alias": None},
        ],
        "from": {"table": "COUNTRIES", "alias": None},
        "joins": [
            {
                "type": "inner",
                "table": "CAR_MAKERS",
                "alias": None,
                "on": [{"op": "=", "left": {"col": ["COUNTRIES", "CountryId"]}, "right": {"col": ["CAR_MAKERS", "Country"]}}],
            }
        ],
        "where": [],
        "group_by": [{"col": ["COUNTRIES", "CountryId"]}],
        "having": [{"op": ">=", "left": {"func": "COUNT", "args": [{"star": True}]}, "right": 1}],
        "order_by": [],
        "limit": None,
        "distinct": False,
    },
}


def db_path(name):
    if not SPIDER:
        pytest.skip("SQLSTRUCT_FIXTURE_DIR not set")
    return str(pathlib.Path(SPIDER) / "database" / name / f"{name}.sqlite")


def test_canonicalize():
    a = sqlstruct.canonicalize("SELECT T1.a FROM t AS T1 WHERE y = 2 AND x = 1;")
    b = sqlstruct.canonicalize("select   X.a from t x where x = 1 and y = 2")
    assert a["ok"] and b["ok"]
    assert a["key"] == b["key"] == "select t1.a from t as t1 where x = 1 and y = 2"
    assert a["digest"] == sqlstruct.key_digest(a["key"])
    assert len(a["digest"]) == 16
    bad = sqlstruct.canonicalize("SELEC broken FROM")
    assert not bad["ok"] and bad["reason"]
    assert sqlstruct.canonical_key("DELETE FROM t") is None


def test_structure_metrics_six_three_one():
    cands = ["select a from t"] * 6 + ["select count(*) from t"] * 3 + ["select b from t"]
    rec = sqlstruct.structure_metrics(cands, "SELECT a FROM t", "q", "m")
    assert rec["m"] == 10
    assert rec["distinct"] == 3
    assert rec["majority"] == pytest.approx(0.6)
    h = -(0.6 * math.log2(0.6) + 0.3 * math.log2(0.3) + 0.1 * math.log2(0.1))
    assert rec["entropy"] == pytest.approx(h, abs=1e-12)
    assert round(rec["entropy"], 4) == 1.2955
    assert rec["gold"] == pytest.approx(0.6)


def test_all_unparseable_is_undefined():
    rec = sqlstruct.structure_metrics(["SELEC"] * 3, "SELECT 1")
    assert rec["m"] == 0
    assert rec["majority"] is None and rec["entropy"] is None


def test_family_robustness():
    star = "SELECT count(*) FROM singer"
    col = "SELECT count(Singer_ID) FROM singer"
    rec = sqlstruct.family_robustness([star, star], [[col], [star]])
    assert rec["sensitivity"] == pytest.approx(0.5)
    assert rec["ast_sim"] == pytest.approx(1 / 3)


def test_compile_ir_matches_reference_key():
    sql = sqlstruct.compile_ir(json.dumps(STADIUM_IR))
    assert sql == "SELECT stadium.Name, stadium.Capacity FROM stadium ORDER BY stadium.Average DESC LIMIT 1"
    key = sqlstruct.canonical_key(sqlstruct.compile_ir(json.dumps(COUNTRIES_IR)))
    assert "having count(*) >= 1" in key


def test_validate_ir_reports_path():
    doc = json.loads(json.dumps(STADIUM_IR))
    doc["query"]["limit"] = "one"
    r = sqlstruct.validate_ir(json.dumps(doc))
    assert not r["ok"]
    assert r["kind"] == "schema"
    assert r["path"] == "/query/limit"
    with pytest.raises(ValueError):
        sqlstruct.compile_ir("{not json")


def test_ir_documents_match_json_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((SOURCE / "schema" / "query_ir.schema.json").read_text())
    for doc in (STADIUM_IR, COUNTRIES_IR):
        jsonschema.validate(doc, schema)
        round_trip = sqlstruct.validate_ir(json.dumps(doc))
        assert round_trip["ok"]
        jsonschema.validate(round_trip["ir"], schema)


def test_pipeline_rates():
    good = sqlstruct.pipeline_record("a", "```json\n" + json.dumps(STADIUM_IR) + "\n```")
    assert good["fence_stripped"] and good["end_to_end"]
    bad = sqlstruct.pipeline_record("b", "no json")
    rates = sqlstruct.pipeline_rates([good, bad])
    assert rates["json_valid_rate"] == 0.5
    assert rates["records"] == 2


def test_execute_and_exec_metrics():
    db = db_path("concert_singer")
    out = sqlstruct.execute(db, "SELECT count(*) FROM singer")
    assert out["status"] == "ok"
    assert len(out["rows"]) == 1 and isinstance(out["rows"][0][0], int)
    write = sqlstruct.execute(db, "DELETE FROM singer")
    assert write["status"] == "error"
    s = sqlstruct.exec_metrics(
        db, ["SELECT count(*) FROM singer", "SELECT count(Singer_ID) FROM singer"], "SELECT count(*) FROM singer"
    )
    assert s["exec_acc"] == 1.0
    assert s["distinct_corr"] == 2
    assert s["exec_corr_struct_diff"]


def test_error_code_attribute():
    db = db_path("concert_singer")
    with pytest.raises(sqlstruct.Error) as info:
        sqlstruct.exec_metrics(db, ["SELECT 1"], "SELECT bogus FROM singer")
    assert info.value.code == "gold-execution-failed"


def test_load_spider_and_prompts():
    if not SPIDER:
        pytest.skip("SQLSTRUCT_FIXTURE_DIR not set")
    ds = sqlstruct.load_spider(SPIDER)
    assert len(ds["questions"]) >= 50
    assert ds["warnings"] == []
    assert sqlstruct.prompt_template("compile") != sqlstruct.prompt_template("direct")
