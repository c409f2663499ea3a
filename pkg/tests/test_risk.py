"""Risk matrix, attribution ordering, SADT model, and cause paths."""

import pytest

from millguard.criteria import CriterionId, CriterionFiring, Evidence, FiringSet
from millguard.model import DataError
from millguard.risk import (
    Origin,
    RiskAssessment,
    RiskId,
    RiskMatrix,
    SadtActivity,
    attribute,
    default_matrix,
    load_matrix,
    load_sadt,
    parse_risk_id,
    render_matrix,
    render_sadt,
    root_cause_paths,
    sadt_validate,
)

from conftest import MONDAY, steady_window
from oracles import oracle_root_cause_paths

C = CriterionId
R = RiskId


def _firing(cid, score=1.0):
    return CriterionFiring(
        criterion=cid,
        window=steady_window(MONDAY, 30),
        score=score,
        evidence=Evidence("q", 1.0, 1.0),
    )


def _fs(*firings):
    w = firings[0].window if firings else steady_window(MONDAY, 30)
    return FiringSet(window=w, firings=tuple(firings))


# ------------------------------------------------------------------ RiskId


def test_risk_ids_titles_and_cyber_flags():
    assert [r.value for r in RiskId] == [f"R{i}" for i in range(1, 11)]
    assert RiskId.R1.title == "SpindleMotorSeizure"
    assert RiskId.R9.title == "CyberCncTampering"
    assert RiskId.R10.title == "CyberPlcDos"
    assert {r for r in RiskId if r.is_cyber} == {RiskId.R9, RiskId.R10}
    assert RiskId.R3.ordinal < RiskId.R7.ordinal
    assert parse_risk_id("R4") is RiskId.R4
    with pytest.raises(DataError):
        parse_risk_id("R11")


# ----------------------------------------------------------------- matrix


def test_default_matrix_rows():
    m = default_matrix()
    assert m.rows[C.TEMP_GRADIENT] == frozenset({R.R1, R.R2, R.R4, R.R10})
    assert m.rows[C.CURRENT_PEAK_COUNT] == frozenset({R.R3, R.R4, R.R5})
    assert m.rows[C.CURRENT_WITHOUT_VIBRATION] == frozenset({R.R1, R.R2, R.R3, R.R5})
    assert m.rows[C.VIBRATION_WITHOUT_CURRENT_C] == frozenset({R.R7})
    assert m.rows[C.EXCESS_VIBRATION] == frozenset({R.R3, R.R4, R.R5, R.R6, R.R10})
    assert m.rows[C.VIBRATION_WITHOUT_CURRENT_V] == frozenset({R.R5, R.R6})
    assert m.rows[C.SPINDLE_RPM_RISE] == frozenset({R.R1, R.R5, R.R8, R.R10})
    assert m.rows[C.OUT_OF_HOURS_USE] == frozenset({R.R10})
    assert m.rows[C.ZERO_DROP] == frozenset({R.R6, R.R9})
    assert m.rows[C.CURRENT_INTENSITY_CHANGE] == frozenset({R.R2})


def test_matrix_requires_complete_nonempty_rows():
    rows = dict(default_matrix().rows)
    del rows[C.ZERO_DROP]
    with pytest.raises(DataError):
        RiskMatrix(rows=rows)
    bad = dict(default_matrix().rows)
    bad[C.ZERO_DROP] = frozenset()
    with pytest.raises(DataError):
        RiskMatrix(rows=bad)


def test_matrix_render_load_round_trip():
    m = default_matrix()
    text = render_matrix(m)
    lines = text.strip().split("\n")
    assert len(lines) == 10
    assert lines[0] == "TempGradient: R1,R2,R4,R10"
    assert lines[7] == "OutOfHoursUse: R10"
    assert load_matrix(text).rows == m.rows


def test_load_matrix_error_reporting():
    good = render_matrix(default_matrix())
    with pytest.raises(DataError, match="duplicate row"):
        load_matrix(good + "ZeroDrop: R1\n")
    with pytest.raises(DataError, match="has no risks"):
        load_matrix(good.replace("OutOfHoursUse: R10", "OutOfHoursUse:"))
    with pytest.raises(DataError, match="line 1"):
        load_matrix("gibberish\n")
    with pytest.raises(DataError):
        load_matrix("TempGradient: R99\n")
    # Comments and blank lines are fine; missing rows are not.
    with pytest.raises(DataError):
        load_matrix("# just a comment\n\nTempGradient: R1\n")


# ------------------------------------------------------------- attribution


def test_attribute_nothing_fired_is_unknown():
    a = attribute(_fs(), default_matrix())
    assert a.origin is Origin.UNKNOWN
    assert a.ranking == ()
    assert a.risks == ()


def test_attribute_pure_cyber():
    a = attribute(_fs(_firing(C.OUT_OF_HOURS_USE)), default_matrix())
    assert a.origin is Origin.CYBER_INCIDENT
    assert a.risks == (R.R10,)


def test_attribute_pure_machine_fault():
    a = attribute(_fs(_firing(C.CURRENT_INTENSITY_CHANGE)), default_matrix())
    assert a.origin is Origin.MACHINE_FAULT
    assert a.risks == (R.R2,)


def test_attribute_mixed_origin():
    a = attribute(_fs(_firing(C.ZERO_DROP)), default_matrix())
    assert a.origin is Origin.MIXED
    assert set(a.risks) == {R.R6, R.R9}


def test_attribute_ranking_support_first():
    # TempGradient and CurrentIntensityChange share R2; it must outrank the
    # support-1 risks regardless of ordinal.
    a = attribute(
        _fs(_firing(C.TEMP_GRADIENT, 0.5), _firing(C.CURRENT_INTENSITY_CHANGE, 0.5)),
        default_matrix(),
    )
    assert a.ranking[0].risk is R.R2
    assert a.ranking[0].support == 2
    assert a.ranking[0].mean_score == pytest.approx(0.5)
    # Remaining support-1 risks follow in ordinal order (equal scores).
    assert a.risks[1:] == (R.R1, R.R4, R.R10)


def test_attribute_ranking_mean_score_breaks_support_ties():
    a = attribute(
        _fs(_firing(C.OUT_OF_HOURS_USE, 0.9), _firing(C.CURRENT_INTENSITY_CHANGE, 0.1)),
        default_matrix(),
    )
    # Both risks have support 1; the higher mean score leads despite the
    # higher ordinal.
    assert a.risks == (R.R10, R.R2)
    assert a.origin is Origin.MIXED


def test_assessment_unknown_xor_ranking():
    w = steady_window(MONDAY, 30)
    with pytest.raises(DataError):
        RiskAssessment(window=w, ranking=(), origin=Origin.MACHINE_FAULT)
    entry = attribute(_fs(_firing(C.OUT_OF_HOURS_USE)), default_matrix()).ranking[0]
    with pytest.raises(DataError):
        RiskAssessment(window=w, ranking=(entry,), origin=Origin.UNKNOWN)


# ------------------------------------------------------------------- SADT


def _machining_graph():
    return [
        SadtActivity(
            name="PlanJob",
            inputs=frozenset({"order"}),
            outputs=frozenset({"program"}),
            controls=frozenset({"policy"}),
        ),
        SadtActivity(
            name="RunCnc",
            inputs=frozenset({"program", "stock"}),
            outputs=frozenset({"part", "telemetry"}),
            mechanisms=frozenset({"machine"}),
        ),
        SadtActivity(
            name="Inspect",
            inputs=frozenset({"part"}),
            outputs=frozenset({"report"}),
        ),
    ]


def test_sadt_valid_graph_passes():
    assert sadt_validate(_machining_graph()) == []


def test_sadt_violations_reported():
    graph = _machining_graph()
    graph.append(SadtActivity(name="PlanJob", inputs=frozenset({"x"}),
                              outputs=frozenset({"y"})))
    msgs = sadt_validate(graph)
    assert any("duplicate activity" in m for m in msgs)
    assert any("shares no flow" in m for m in msgs)

    incomplete = [SadtActivity(name="Lonely")]
    msgs = sadt_validate(incomplete)
    assert any("no inputs" in m for m in msgs)
    assert any("no outputs" in m for m in msgs)


def test_sadt_render_load_round_trip():
    graph = _machining_graph()
    text = render_sadt(graph)
    assert text.splitlines()[0] == "activity PlanJob"
    back = load_sadt(text)
    assert back == graph


def test_sadt_parse_errors():
    with pytest.raises(DataError, match="before any activity"):
        load_sadt("in flow\n")
    with pytest.raises(DataError, match="unknown directive"):
        load_sadt("activity A\nbogus x\n")
    with pytest.raises(DataError, match="needs a name"):
        load_sadt("activity\n")
    with pytest.raises(DataError, match="flow needs a name"):
        load_sadt("activity A\nin\n")
    assert load_sadt("# empty\n") == []


# ------------------------------------------------------------- cause paths


def test_root_cause_paths_linear_chain():
    graph = _machining_graph()
    bindings = {C.ZERO_DROP: frozenset({"telemetry"})}
    paths = root_cause_paths(graph, _firing(C.ZERO_DROP), bindings)
    # telemetry <- RunCnc <- program <- PlanJob (stock has no producer).
    assert paths == [(("RunCnc", "telemetry"), ("PlanJob", "program"))]


def test_root_cause_paths_unbound_criterion_has_no_paths():
    graph = _machining_graph()
    assert root_cause_paths(graph, _firing(C.TEMP_GRADIENT), {}) == []


def test_root_cause_paths_diamond_matches_oracle():
    graph = [
        SadtActivity(name="Source", inputs=frozenset({"raw"}),
                     outputs=frozenset({"feed"})),
        SadtActivity(name="LeftPath", inputs=frozenset({"feed"}),
                     outputs=frozenset({"mid"})),
        SadtActivity(name="RightPath", inputs=frozenset({"feed"}),
                     outputs=frozenset({"mid"})),
        SadtActivity(name="Sink", inputs=frozenset({"mid"}),
                     outputs=frozenset({"signal"})),
    ]
    bindings = {C.ZERO_DROP: frozenset({"signal"})}
    paths = root_cause_paths(graph, _firing(C.ZERO_DROP), bindings)
    assert len(paths) == 2
    assert paths == oracle_root_cause_paths(graph, ["signal"])
    # Both paths traverse Sink then one branch then Source.
    assert {p[1][0] for p in paths} == {"LeftPath", "RightPath"}
    assert all(p[0] == ("Sink", "signal") and p[2][0] == "Source" for p in paths)


def test_root_cause_paths_cycle_terminates():
    graph = [
        SadtActivity(name="A", inputs=frozenset({"b_out"}),
                     outputs=frozenset({"a_out"})),
        SadtActivity(name="B", inputs=frozenset({"a_out"}),
                     outputs=frozenset({"b_out"})),
    ]
    bindings = {C.ZERO_DROP: frozenset({"a_out"})}
    paths = root_cause_paths(graph, _firing(C.ZERO_DROP), bindings)
    assert paths == [(("A", "a_out"), ("B", "b_out"))]
