import json

import pytest

from rissec import experiment as ex
from rissec import metrics as mt


def test_text_and_json_configs_agree():
    text = """
    # comment
    system.gamma_bar_e_db = 5
    sweep.variable = gamma_bar_s_db
    sweep.values = [10, 20]
    metrics = ["sop"]
    """
    js = json.dumps({"system": {"gamma_bar_e_db": 5},
                     "sweep": {"variable": "gamma_bar_s_db", "values": [10, 20]},
                     "metrics": ["sop"]})
    a = ex.build_experiment(ex.parse_text(text))
    b = ex.build_experiment(ex.parse_json(js))
    assert a == b
    assert a.sweep_values == [10, 20] and a.methods == ["quadrature", "monte_carlo"]


def test_range_expansion():
    exp = ex.build_experiment({"sweep.from": 0, "sweep.to": 1, "sweep.step": 0.25})
    assert exp.sweep_values == [0, 0.25, 0.5, 0.75, 1.0]


@pytest.mark.parametrize("flat,path", [
    ({"system.gamma_bar_s": 3, "sweep.values": [1]}, "system.gamma_bar_s"),
    ({"sweep.values": [1], "system.beta": 1.5}, "system.beta"),
    ({"sweep.values": [1], "system.r": 3}, "system.r"),
    ({"sweep.values": [1], "metrics": ["rate"]}, "metrics"),
    ({"sweep.values": [1], "mc.samples": 100}, "mc.samples"),
    ({"sweep.values": []}, "sweep.values"),
    ({"sweep.from": 0, "sweep.to": 1}, "sweep.values"),
    ({"sweep.variable": "n_elements", "sweep.values": [1.5]}, "sweep.values[0]"),
    ({"sweep.values": [1], "curves": [{"colour": 1}]}, "curves[0].colour"),
])
def test_validation_names_the_offending_key(flat, path):
    with pytest.raises(ex.ConfigError) as info:
        ex.build_experiment(flat)
    assert info.value.path == path


def test_duplicate_key_rejected():
    with pytest.raises(ex.ConfigError):
        ex.parse_text("a = 1\na = 2\n")


def test_aliases_apply_to_both_hops():
    exp = ex.build_experiment({"sweep.variable": "k_main", "sweep.values": [5]})
    (_, _, params), = ex._points(exp)
    assert params["system.k1_s"] == params["system.k2_s"] == 5


def test_build_system_converts_db_once():
    exp = ex.build_experiment({"sweep.values": [10]})
    (_, _, params), = ex._points(exp)
    system = ex.build_system(params)
    assert system.rf_main.gamma_bar == pytest.approx(10.0)
    assert system.fso.gamma_bar_d == pytest.approx(10**2.5)


def test_emit_config_round_trip():
    for name in ex.PRESETS:
        exp = ex.preset(name)
        again = ex.build_experiment(ex.parse_text(ex.emit_config(exp)))
        assert again == exp


def test_run_rows_and_digest():
    exp = ex.build_experiment({"sweep.values": [10, 20], "metrics": ["sop", "asc", "est"],
                               "methods": ["quadrature", "asymptotic"]})
    rows = ex.run(exp, workers=1)
    # asymptotic is defined for sop and est only
    assert [(r["metric"], r["method"]) for r in rows[:3]] == [
        ("sop", "quadrature"), ("sop", "asymptotic"), ("asc", "quadrature")]
    assert len(rows) == 2 * 5
    assert rows[0]["config_digest"] != rows[-1]["config_digest"]
    q = mt.sop_quadrature(mt.baseline_system(gamma_bar_s_db=10)).value
    assert rows[0]["value"] == pytest.approx(q, rel=1e-12)
    est = [r for r in rows if r["metric"] == "est" and r["method"] == "quadrature"][0]
    assert est["value"] == pytest.approx(0.5 * (1 - q), rel=1e-12)
    text = ex.write_rows(rows)
    assert text.splitlines()[0] == ",".join(ex.CSV_COLUMNS)
    assert len(json.loads(ex.write_rows(rows, "json"))) == len(rows)
