"""Labeling: taxonomy validation, class picking, expert overrides, CSV."""

import pytest

from millguard.criteria import CriteriaConfig, CriterionId, build_history
from millguard.labeling import (
    NORMAL_CLASS,
    AnomalyClass,
    BinaryLabel,
    LabeledDataset,
    LabeledWindow,
    Provenance,
    Taxonomy,
    default_taxonomy,
    derive_labels,
    export_labeled_csv,
    parse_labeled_csv,
    split_by_annotation,
)
from millguard.model import Annotation, DataError, IncidentClass, Operation

from conftest import MONDAY, ctx, make_window, sample, steady_window

CFG = CriteriaConfig()
WORK_TS = MONDAY + 10 * 3600
OFF_TS = MONDAY + 5 * 86400 + 12 * 3600


def test_default_taxonomy_partitions_all_criteria():
    tax = default_taxonomy()
    ids = [c.id for c in tax.classes]
    assert ids[0] == NORMAL_CLASS
    assert set(tax.anomaly_class_ids) == {
        "ThermalAnomaly",
        "CurrentAnomaly",
        "VibrationAnomaly",
        "SensorOrIdleAnomaly",
        "UsageAnomaly",
    }
    covered = set()
    for c in tax.classes:
        covered |= c.member_criteria
    assert covered == set(CriterionId)
    assert tax.class_of(CriterionId.OUT_OF_HOURS_USE) == "UsageAnomaly"
    assert tax.class_of(CriterionId.ZERO_DROP) == "SensorOrIdleAnomaly"


def test_taxonomy_rejects_overlap_and_gaps():
    C = CriterionId
    normal = AnomalyClass(NORMAL_CLASS, "Normal", frozenset())
    with pytest.raises(DataError, match="does not cover"):
        Taxonomy(classes=(normal, AnomalyClass("A", "a", frozenset({C.ZERO_DROP}))))
    everything = AnomalyClass("All", "all", frozenset(C))
    dupe = AnomalyClass("Dupe", "d", frozenset({C.ZERO_DROP}))
    with pytest.raises(DataError, match="in both"):
        Taxonomy(classes=(normal, everything, dupe))
    with pytest.raises(DataError, match="exactly one Normal"):
        Taxonomy(classes=(everything,))
    with pytest.raises(DataError, match="duplicate class ids"):
        Taxonomy(classes=(normal, everything, everything))


def test_anomaly_class_member_rules():
    with pytest.raises(DataError):
        AnomalyClass("Empty", "e", frozenset())
    with pytest.raises(DataError):
        AnomalyClass(NORMAL_CLASS, "n", frozenset({CriterionId.ZERO_DROP}))


def test_labeled_window_binary_class_consistency():
    w = steady_window(WORK_TS, 30)
    with pytest.raises(DataError):
        LabeledWindow(
            window=w,
            binary_label=BinaryLabel.NORMAL,
            class_label="ThermalAnomaly",
            provenance=Provenance.CRITERIA_DERIVED,
        )


def test_quiet_window_labels_normal():
    ds = derive_labels([steady_window(WORK_TS, 30)], CFG, default_taxonomy())
    (lw,) = ds.windows
    assert lw.binary_label is BinaryLabel.NORMAL
    assert lw.class_label == NORMAL_CLASS
    assert lw.provenance is Provenance.CRITERIA_DERIVED
    assert lw.criteria_fired == ()


def test_highest_score_firing_picks_class():
    # ExcessVibration (score ~1.31) outscores OutOfHoursUse below it when the
    # off-hours mean is small; build the converse too.
    w = steady_window(OFF_TS, 30, i=1.2, acc=2.0)
    ds = derive_labels([w], CFG, default_taxonomy())
    (lw,) = ds.windows
    assert CriterionId.EXCESS_VIBRATION in lw.criteria_fired
    assert CriterionId.OUT_OF_HOURS_USE in lw.criteria_fired
    assert lw.class_label == "VibrationAnomaly"

    strong_usage = steady_window(OFF_TS, 30, i=18.0, acc=2.0)
    ds2 = derive_labels([strong_usage], CFG, default_taxonomy())
    assert ds2.windows[0].class_label == "UsageAnomaly"


def test_score_tie_breaks_on_lowest_ordinal():
    # Zero current with vibration present fires both VibrationWithoutCurrent
    # identities at exactly 1.0 (the current margin caps both). The tie must
    # resolve to the lower ordinal, VNC_C, hence SensorOrIdleAnomaly over
    # VibrationAnomaly.
    c = ctx(op=Operation.MILLING)
    rows = [sample(WORK_TS + k, i=0.0, acc=0.2, c=c) for k in range(30)]
    ds = derive_labels([make_window(rows)], CFG, default_taxonomy())
    (lw,) = ds.windows
    assert CriterionId.VIBRATION_WITHOUT_CURRENT_C in lw.criteria_fired
    assert CriterionId.VIBRATION_WITHOUT_CURRENT_V in lw.criteria_fired
    assert lw.class_label == "SensorOrIdleAnomaly"


def test_sole_zero_drop_labels_its_class():
    c = ctx(op=Operation.MILLING)
    rows = [sample(WORK_TS + k, i=0.0, acc=0.0, c=c) for k in range(30)]
    ds = derive_labels([make_window(rows)], CFG, default_taxonomy())
    (lw,) = ds.windows
    assert lw.criteria_fired == (CriterionId.ZERO_DROP,)
    assert lw.class_label == "SensorOrIdleAnomaly"


def test_benign_annotation_forces_normal():
    w = steady_window(OFF_TS, 30, i=8.0)  # would fire OutOfHoursUse
    ann = Annotation(id="a-1", ts_start=OFF_TS, ts_end=OFF_TS + 30,
                     note="sanctioned maintenance", annotator="lead",
                     incident_class=IncidentClass.BENIGN)
    ds = derive_labels([w], CFG, default_taxonomy(), annotations=[ann])
    (lw,) = ds.windows
    assert lw.binary_label is BinaryLabel.NORMAL
    assert lw.class_label == NORMAL_CLASS
    assert lw.provenance is Provenance.EXPERT_ANNOTATED
    # The firings stay on record even when the expert overrides.
    assert lw.criteria_fired == (CriterionId.OUT_OF_HOURS_USE,)


def test_fault_annotation_forces_anomalous_with_fallback_class():
    w = steady_window(WORK_TS, 30)  # silent window
    ann = Annotation(id="a-2", ts_start=WORK_TS, ts_end=WORK_TS + 30,
                     note="bearing noise heard", annotator="op3",
                     incident_class=IncidentClass.MACHINE_FAULT)
    tax = default_taxonomy()
    ds = derive_labels([w], CFG, tax, annotations=[ann])
    (lw,) = ds.windows
    assert lw.binary_label is BinaryLabel.ANOMALOUS
    assert lw.class_label == tax.anomaly_class_ids[0]
    assert lw.provenance is Provenance.EXPERT_ANNOTATED


def test_fault_outranks_benign():
    w = steady_window(WORK_TS, 30)
    anns = [
        Annotation(id="a-3", ts_start=WORK_TS, ts_end=WORK_TS + 30, note="",
                   annotator="a", incident_class=IncidentClass.BENIGN),
        Annotation(id="a-4", ts_start=WORK_TS + 10, ts_end=WORK_TS + 20, note="",
                   annotator="b", incident_class=IncidentClass.CYBER_INCIDENT),
    ]
    ds = derive_labels([w], CFG, default_taxonomy(), annotations=anns)
    assert ds.windows[0].binary_label is BinaryLabel.ANOMALOUS


def test_unspecified_annotation_has_no_vote():
    w = steady_window(OFF_TS, 30, i=8.0)
    ann = Annotation(id="a-5", ts_start=OFF_TS, ts_end=OFF_TS + 30, note="seen",
                     annotator="x", incident_class=IncidentClass.UNSPECIFIED)
    ds = derive_labels([w], CFG, default_taxonomy(), annotations=[ann])
    (lw,) = ds.windows
    assert lw.binary_label is BinaryLabel.ANOMALOUS
    assert lw.provenance is Provenance.CRITERIA_DERIVED


def test_agreeing_expert_keeps_criteria_provenance():
    w = steady_window(OFF_TS, 30, i=8.0)
    ann = Annotation(id="a-6", ts_start=OFF_TS, ts_end=OFF_TS + 30, note="",
                     annotator="x", incident_class=IncidentClass.CYBER_INCIDENT)
    ds = derive_labels([w], CFG, default_taxonomy(), annotations=[ann])
    (lw,) = ds.windows
    assert lw.binary_label is BinaryLabel.ANOMALOUS
    assert lw.class_label == "UsageAnomaly"
    assert lw.provenance is Provenance.CRITERIA_DERIVED


def test_dataset_carries_day_hints_and_duration():
    ws = [steady_window(WORK_TS, 30), steady_window(WORK_TS + 86400, 30)]
    ds = derive_labels(ws, CFG, default_taxonomy())
    assert ds.duration_s == 30
    assert ds.days == ("2022-08-01", "2022-08-02")
    assert len(ds) == 2
    assert ds.labels == (NORMAL_CLASS, NORMAL_CLASS)


def test_dataset_rejects_mixed_durations():
    lw = derive_labels([steady_window(WORK_TS, 30)], CFG, default_taxonomy()).windows[0]
    with pytest.raises(DataError):
        LabeledDataset(windows=(lw,), duration_s=900, taxonomy=default_taxonomy())


def test_precomputed_firing_sets_are_honored():
    from millguard.criteria import evaluate_all

    ws = [steady_window(OFF_TS, 30, i=8.0)]
    sets = [evaluate_all(w, CFG) for w in ws]
    ds = derive_labels(ws, CFG, default_taxonomy(), firing_sets=sets)
    assert ds.windows[0].class_label == "UsageAnomaly"
    with pytest.raises(DataError, match="align"):
        derive_labels(ws, CFG, default_taxonomy(), firing_sets=[])


def test_split_by_annotation():
    ws = [steady_window(WORK_TS, 30), steady_window(WORK_TS + 60, 30)]
    ann = Annotation(id="a-7", ts_start=WORK_TS + 70, ts_end=WORK_TS + 75,
                     note="", annotator="x")
    annotated, rest = split_by_annotation(ws, [ann])
    assert annotated == [ws[1]]
    assert rest == [ws[0]]


def test_labeled_csv_round_trip():
    ws = [steady_window(WORK_TS, 30), steady_window(OFF_TS, 30, i=8.0)]
    ds = derive_labels(ws, CFG, default_taxonomy())
    text = export_labeled_csv(ds)
    lines = text.strip().split("\n")
    assert lines[0] == (
        "window_start,window_end,binary_label,class_label,provenance,criteria_fired"
    )
    records = parse_labeled_csv(text)
    assert len(records) == 2
    assert records[0]["binary_label"] is BinaryLabel.NORMAL
    assert records[1]["class_label"] == "UsageAnomaly"
    assert records[1]["criteria_fired"] == (CriterionId.OUT_OF_HOURS_USE,)
    assert records[1]["window_start"] == OFF_TS


def test_labeled_csv_rejects_bad_input():
    with pytest.raises(DataError):
        parse_labeled_csv("wrong,header\n")
    good = export_labeled_csv(derive_labels([steady_window(WORK_TS, 30)],
                                            CFG, default_taxonomy()))
    with pytest.raises(DataError):
        parse_labeled_csv(good + "1,2,3\n")
