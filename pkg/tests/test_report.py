import copy
import json
import math

import pytest

from todalab.report import SCHEMA, ReportSchemaError, dumps, quantity, report_diff


def _report(v=1.0):
    return {
        "schema": SCHEMA,
        "checks": {"expand": {"pass": True, "quantities": {
            "m1_leading_rel": quantity(v, 1e-4),
            "m1_S": quantity(1.0, 1e-6, target=1.0),
            "order": quantity(4.0, 0.5, minimum=2.0),
        }, "info": {"anything": [1, 2]}}},
        "run": {"precision": "double"},
    }


def test_quantity_semantics():
    assert quantity(1e-7, 1e-6)["pass"]
    assert not quantity(2e-6, 1e-6)["pass"]
    assert quantity(1.00001, 1e-4, target=1.0)["pass"]
    assert not quantity(1.9, 0.5, minimum=2.0)["pass"]
    assert not quantity(math.nan, 1.0)["pass"] and quantity(math.nan, 1.0)["value"] == "nan"


def test_dumps_is_canonical():
    a = _report()
    b = json.loads(dumps(a))
    assert dumps(a) == dumps(b) and dumps(a).endswith("}\n")
    # non-finite numbers become strings so the output stays strict JSON
    assert json.loads(dumps({"x": math.inf, "y": [math.nan]})) == {"x": "inf", "y": ["nan"]}


def test_identical_reports_agree():
    assert report_diff(_report(), _report()) == ([], 0)


def test_drift_beyond_tolerance_is_named():
    a = _report(1e-5)
    b = _report(1e-5)
    b["checks"]["expand"]["quantities"]["m1_leading_rel"]["value"] += 2e-4
    lines, status = report_diff(a, b)
    assert status == 1 and len(lines) == 1 and "checks.expand.quantities.m1_leading_rel" in lines[0]
    b["checks"]["expand"]["quantities"]["m1_leading_rel"]["value"] = 1e-5 + 0.5e-4
    assert report_diff(a, b) == ([], 0)


def test_info_and_run_ignored():
    b = _report()
    b["checks"]["expand"]["info"] = {"other": 3}
    b["run"]["precision"] = "extended"
    assert report_diff(_report(), b)[1] == 0


def test_min_quantities_compare_by_pass():
    b = _report()
    b["checks"]["expand"]["quantities"]["order"] = quantity(3.0, 0.5, minimum=2.0)
    assert report_diff(_report(), b)[1] == 0
    b["checks"]["expand"]["quantities"]["order"] = quantity(1.0, 0.5, minimum=2.0)
    assert report_diff(_report(), b)[1] == 1


@pytest.mark.parametrize("mutate,field", [
    (lambda r: r["checks"]["expand"]["quantities"].pop("m1_S"), "checks.expand.quantities.m1_S"),
    (lambda r: r["checks"]["expand"].update(pass_="x"), "checks.expand.pass_"),
    (lambda r: r["checks"]["expand"].update({"pass": 1}), "checks.expand.pass"),
    (lambda r: r["checks"]["expand"]["quantities"]["m1_S"].pop("target"), "checks.expand.quantities.m1_S"),
    (lambda r: r.update(schema="other"), "schema"),
])
def test_schema_mismatch_names_field(mutate, field):
    b = copy.deepcopy(_report())
    mutate(b)
    with pytest.raises(ReportSchemaError) as exc:
        report_diff(_report(), b)
    assert exc.value.field == field
