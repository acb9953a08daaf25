"""Config validation, canonical serialization, and file round-trips."""

import json
import math

import numpy as np
import pytest

from resilnet import (
    CENTRALIZED,
    ConfigError,
    JamEvent,
    ResilienceReport,
    RunManifest,
    SpoofEvent,
    config_hash,
    dumps_canonical,
    emit_manifest,
    emit_report,
    emit_trace,
    gne_from_dict,
    parse_manifest,
    parse_report,
    parse_trace,
    run_scenario,
    scenario_from_dict,
    trace_record,
)

MINIMAL = {
    "dimension": 2,
    "steps": 3,
    "profile": {"kind": "binary", "range": 1.5},
    "agents": [
        {"id": "a", "position": [0.0, 0.0]},
        {"id": "b", "position": [1.0, 0.0]},
    ],
    "control": {"anticipated_budget": 1, "motion_bound": 0.5, "min_separation": 0.25},
}


def deep(d, **overrides):
    out = json.loads(json.dumps(d))
    out.update(overrides)
    return out


def errors_of(data):
    with pytest.raises(ConfigError) as exc:
        scenario_from_dict(data)
    return exc.value.errors


def test_minimal_config_fills_defaults():
    cfg = scenario_from_dict(MINIMAL)
    assert cfg.baseline.policy == "pre_event"
    assert cfg.baseline.recovery_fraction == 0.9
    assert cfg.opts.mode == CENTRALIZED
    assert cfg.rng_seed == 0
    assert cfg.agent_layers == ("default", "default")
    assert cfg.events == ()


def test_duplicate_agent_id_error_names_the_id():
    data = deep(MINIMAL)
    data["agents"][1]["id"] = "a"
    errs = errors_of(data)
    assert any("duplicate id 'a'" in e for e in errs)


def test_event_window_error_names_the_index():
    data = deep(
        MINIMAL,
        events=[
            {"type": "jam", "budget": 1, "start": 0, "end": 2},
            {"type": "jam", "budget": 1, "start": 1, "end": 9},
        ],
    )
    errs = errors_of(data)
    assert any(e.startswith("events[1]") and "steps=3" in e for e in errs)


def test_unknown_fields_rejected_with_paths():
    data = deep(MINIMAL, typo_field=1)
    data["control"]["wrong"] = 2
    errs = errors_of(data)
    assert "typo_field: unknown field" in errs
    assert "control.wrong: unknown field" in errs


def test_all_errors_reported_not_just_first():
    data = deep(MINIMAL, dimension=7, steps=0)
    errs = errors_of(data)
    assert len(errs) >= 2


def test_yaml_syntax_error_carries_line(tmp_path):
    from resilnet import parse_scenario

    bad = tmp_path / "bad.yaml"
    bad.write_text("steps: 1\nagents: [\n")
    with pytest.raises(ConfigError, match="line"):
        parse_scenario(bad)


def test_layout_and_positions_are_mutually_exclusive():
    data = deep(MINIMAL, layout={"low": [0.0, 0.0], "high": [2.0, 2.0]})
    errs = errors_of(data)
    assert any("conflicts" in e for e in errs)

    data = deep(MINIMAL)
    for agent in data["agents"]:
        del agent["position"]
    errs = errors_of(data)
    assert any("layout" in e for e in errs)

    data["layout"] = {"low": [0.0, 0.0], "high": [2.0, 2.0]}
    cfg = scenario_from_dict(data)
    assert cfg.initial_positions is None
    assert cfg.layout is not None


def test_layered_profiles_need_known_layers():
    data = deep(
        MINIMAL,
        profiles={
            "air": {"kind": "binary", "range": 3.0},
            "ground": {"kind": "binary", "range": 1.5},
        },
    )
    del data["profile"]
    data["agents"][0]["layer"] = "air"
    data["agents"][1]["layer"] = "sea"
    errs = errors_of(data)
    assert any("unknown layer 'sea'" in e for e in errs)
    data["agents"][1]["layer"] = "ground"
    cfg = scenario_from_dict(data)
    assert cfg.agent_layers == ("air", "ground")


def test_profile_xor_profiles_enforced():
    data = deep(MINIMAL, profiles={"default": {"kind": "binary", "range": 1.0}})
    errs = errors_of(data)
    assert any("exactly one" in e for e in errs)


def test_spoof_event_parses_with_id_targets():
    data = deep(
        MINIMAL,
        events=[
            {"type": "spoof", "targets": ["b"], "offset": [1.0, -1.0], "start": 0, "duration": 2}
        ],
    )
    cfg = scenario_from_dict(data)
    assert isinstance(cfg.events[0], SpoofEvent)
    assert cfg.events[0].targets == ("b",)
    data["events"][0]["targets"] = ["nope"]
    errs = errors_of(data)
    assert any("unknown agent id 'nope'" in e for e in errs)


def test_scripted_jam_edges_parse():
    data = deep(
        MINIMAL,
        events=[{"type": "jam", "budget": 1, "start": 0, "end": 1, "edges": [["a", "b"]]}],
    )
    cfg = scenario_from_dict(data)
    assert isinstance(cfg.events[0], JamEvent)
    assert cfg.events[0].edges == (("a", "b"),)


def test_budget_schedule_must_increase():
    data = deep(MINIMAL, budget_schedule=[{"from_step": 1, "budget": 2}, {"from_step": 1, "budget": 0}])
    errs = errors_of(data)
    assert any("must increase" in e for e in errs)


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------


def test_canonical_floats_survive_round_trip():
    values = [0.1, 1.0 / 3.0, 1e-17, 2.0**53, -0.0, 123456.789, 5e-324]
    text = dumps_canonical(values)
    assert json.loads(text) == values


def test_canonical_integral_floats_stay_floats():
    assert dumps_canonical(1.0) == "1.0"
    assert dumps_canonical([1, 1.0]) == "[1,1.0]"
    assert isinstance(json.loads(dumps_canonical(4.0)), float)


def test_canonical_rejects_non_finite():
    with pytest.raises(ValueError):
        dumps_canonical(math.nan)
    with pytest.raises(ValueError):
        dumps_canonical([math.inf])


def test_canonical_handles_numpy_scalars_and_arrays():
    assert dumps_canonical(np.float64(0.5)) == "0.5"
    assert dumps_canonical(np.int64(3)) == "3"
    assert dumps_canonical(np.bool_(True)) == "true"
    assert dumps_canonical(np.array([[1.0, 2.0]])) == "[[1.0,2.0]]"


def test_canonical_sorted_keys_for_hashing():
    a = {"b": 1, "a": 2}
    b = {"a": 2, "b": 1}
    assert dumps_canonical(a, sort_keys=True) == dumps_canonical(b, sort_keys=True)
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"a": 2, "b": 99})


def test_canonical_rejects_non_string_keys():
    with pytest.raises(TypeError):
        dumps_canonical({1: "x"})


# ---------------------------------------------------------------------------
# trace, report, manifest files
# ---------------------------------------------------------------------------


def scenario_trace():
    cfg = scenario_from_dict(
        deep(MINIMAL, events=[{"type": "jam", "budget": 1, "start": 1, "end": 2}])
    )
    return run_scenario(cfg)


def test_trace_round_trip_field_by_field(tmp_path):
    trace = scenario_trace()
    path = tmp_path / "trace.jsonl"
    emit_trace(trace, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    back = parse_trace(path)
    assert [t.step for t in back] == [0, 1, 2]
    for orig, echo in zip(trace, back):
        np.testing.assert_array_equal(orig.true_positions, echo.true_positions)
        np.testing.assert_array_equal(orig.reported_positions, echo.reported_positions)
        assert orig.realized_graph == echo.realized_graph
        assert orig.lambda2_realized == echo.lambda2_realized
        assert orig.lambda2_worst_anticipated == echo.lambda2_worst_anticipated
        assert orig.active_events == echo.active_events
        assert orig.anticipated == echo.anticipated
    # and the re-emitted bytes are identical
    again = tmp_path / "again.jsonl"
    emit_trace(back, again)
    assert again.read_bytes() == path.read_bytes()


def test_empty_trace_gives_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    emit_trace([], path)
    assert path.read_bytes() == b""
    assert parse_trace(path) == []


def test_trace_records_are_one_line_json(tmp_path):
    trace = scenario_trace()
    rec = trace_record(trace[0])
    text = dumps_canonical(rec)
    assert "\n" not in text
    parsed = json.loads(text)
    assert parsed["step"] == 0
    assert set(parsed) == {
        "step", "true", "reported", "graph", "lambda2",
        "lambda2_worst", "active_events", "anticipated",
    }


def test_report_round_trip(tmp_path):
    report = ResilienceReport(
        baseline=1.0, onset=2, max_degradation=0.5, recovery_level=0.9,
        recovery_step=4, recovered=True, total_loss=1.25, recovery_fraction=0.9,
    )
    path = tmp_path / "report.json"
    emit_report(report, path)
    assert parse_report(path) == report


def test_manifest_round_trip(tmp_path):
    manifest = RunManifest(
        version="0.1.0", config_hash="ab" * 32, seed=7,
        duration_s=0.25, outputs={"trace": "x/trace.jsonl"},
    )
    path = tmp_path / "manifest.json"
    emit_manifest(manifest, path)
    back = parse_manifest(path)
    assert back == manifest


def test_broken_trace_line_reports_line_number(tmp_path):
    trace = scenario_trace()
    good = dumps_canonical(trace_record(trace[0]))
    path = tmp_path / "broken.jsonl"
    path.write_text(good + "\nnot json\n")
    with pytest.raises(ValueError, match=":2:"):
        parse_trace(path)
    path.write_text('{"step": 0}\n')  # structurally incomplete record
    with pytest.raises(ValueError, match=":1:"):
        parse_trace(path)


# ---------------------------------------------------------------------------
# coupled-game problem files
# ---------------------------------------------------------------------------

GNE_MINIMAL = {
    "costs": {"attack": 0.3, "defense": 0.2},
    "sender_utils": {
        "attacker": [[1.0, 0.0], [0.2, -0.8]],
        "defender": [[0.4, -0.6], [0.9, -0.1]],
    },
    "receiver_utils": {
        "attacker": [[-5.0, -1.0], [-5.0, -1.0]],
        "defender": [[-0.5, -1.0], [-0.5, -1.0]],
    },
}


def test_gne_problem_parses_tables():
    prob = gne_from_dict(GNE_MINIMAL)
    assert prob.costs.attack_cost == 0.3
    assert prob.sender_utils.shape == (2, 2, 2)
    assert prob.damping == 0.5
    assert prob.sender_utils[0, 0, 0] == 1.0


def test_gne_problem_accepts_plant_instead_of_tables():
    data = deep(GNE_MINIMAL)
    del data["receiver_utils"]
    data["plant"] = {
        "a": 1.0, "b": 1.0, "q": 1.0, "r": 1.0, "horizon": 1, "attack_input": 1.0,
    }
    prob = gne_from_dict(data)
    assert prob.receiver_utils[0, 0, 0] == pytest.approx(-5.0)
    assert prob.receiver_utils[1, 1, 0] == pytest.approx(-0.5)


def test_gne_problem_table_xor_plant():
    data = deep(GNE_MINIMAL)
    data["plant"] = {"a": 1.0, "b": 1.0, "q": 1.0, "r": 1.0, "horizon": 1, "attack_input": 1.0}
    with pytest.raises(ConfigError, match="exactly one"):
        gne_from_dict(data)


def test_gne_problem_validates_shapes_and_costs():
    data = deep(GNE_MINIMAL)
    data["sender_utils"]["attacker"] = [[1.0, 0.0]]
    data["costs"]["attack"] = -1
    with pytest.raises(ConfigError) as exc:
        gne_from_dict(data)
    errs = exc.value.errors
    assert any("sender_utils.attacker" in e for e in errs)
    assert any("costs.attack" in e for e in errs)
