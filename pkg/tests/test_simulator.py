"""Plant simulator: spec validation, determinism, output contracts,
per-kind criteria signatures."""

import pytest

from millguard.criteria import (
    CriteriaConfig,
    CriterionId,
    build_history,
    evaluate_all,
)
from millguard.model import Access, DataError, Material, Operation
from millguard.risk import RiskId
from millguard.simulator import (
    EXPECTED_CRITERIA,
    GROUND_TRUTH_HEADER,
    AnomalyInjection,
    Baseline,
    InjectionKind,
    ScenarioSpec,
    ScheduleEntry,
    expected_risks,
    parse_ground_truth_csv,
    parse_injection_kind,
    simulate,
)
from millguard.scenarios import (
    EPOCH_2022_08_01,
    KIND_SLUGS,
    scenario_by_name,
    weekday_schedule,
)
from millguard.store import SampleStore
from millguard.windows import LONG_WINDOW_S, SHORT_WINDOW_S, segment_windows

EPOCH = EPOCH_2022_08_01


def test_injection_kind_tokens():
    assert parse_injection_kind("PlcDos") is InjectionKind.PLC_DOS
    with pytest.raises(DataError):
        parse_injection_kind("plcdos")
    assert len(InjectionKind) == 11
    assert set(EXPECTED_CRITERIA) == set(InjectionKind)


def test_expected_risks_union_sorted():
    assert expected_risks(InjectionKind.PLC_DOS) == (RiskId.R10,)
    assert expected_risks(InjectionKind.ZERO_DROP) == (RiskId.R6, RiskId.R9)
    tamper = expected_risks(InjectionKind.CNC_TAMPER)
    assert tamper == (RiskId.R2, RiskId.R6, RiskId.R9)


def test_baseline_validation():
    Baseline(i_mean_a=5.0, i_std_a=1.0, temp_base_c=25.0, vib_rms_g=0.2)
    with pytest.raises(DataError):
        Baseline(i_mean_a=5.0, i_std_a=-1.0, temp_base_c=25.0, vib_rms_g=0.2)
    with pytest.raises(DataError, match="negative"):
        # Bounded noise would swing current below zero.
        Baseline(i_mean_a=1.0, i_std_a=5.0, temp_base_c=25.0, vib_rms_g=0.2)


def test_injection_param_merging_and_validation():
    inj = AnomalyInjection(
        kind=InjectionKind.STEP_CHANGE,
        ts_start=0,
        ts_end=600,
        params={"delta_a": 7.5},
    )
    assert inj.param("delta_a") == 7.5
    assert inj.merged_params == {"delta_a": 7.5}
    with pytest.raises(DataError, match="does not take"):
        AnomalyInjection(kind=InjectionKind.ZERO_DROP, ts_start=0, ts_end=60,
                         params={"bogus": 1.0})
    with pytest.raises(DataError):
        AnomalyInjection(kind=InjectionKind.ZERO_DROP, ts_start=60, ts_end=60)
    with pytest.raises(DataError):
        ScheduleEntry(ts_start=10, ts_end=10, ctx=weekday_schedule(EPOCH)[0].ctx)


def _spec(**overrides):
    base = scenario_by_name("nominal-week")
    fields = {
        "name": base.name,
        "seed": base.seed,
        "ts_start": base.ts_start,
        "ts_end": base.ts_end,
        "schedule": base.schedule,
        "baselines": base.baselines,
        "injections": base.injections,
        "calendar": base.calendar,
    }
    fields.update(overrides)
    return ScenarioSpec(**fields)


def test_scenario_validation_rules():
    base = scenario_by_name("nominal-week")
    first = base.schedule[0]
    # Entry outside the span.
    with pytest.raises(DataError, match="outside scenario span"):
        _spec(ts_start=first.ts_start + 1)
    # Overlapping entries.
    with pytest.raises(DataError, match="overlap"):
        _spec(schedule=base.schedule + (ScheduleEntry(
            first.ts_start + 1, first.ts_end, first.ctx),))
    # Baseline must exist for every (operation, material) pair used.
    missing = {
        k: v
        for k, v in base.baselines.items()
        if k != (first.ctx.operation, first.ctx.material)
    }
    with pytest.raises(DataError, match="no baseline"):
        _spec(baselines=missing)


def test_on_schedule_injection_placement_rules():
    base = scenario_by_name("nominal-week")
    # Must land inside a single schedule entry.
    with pytest.raises(DataError, match="within one"):
        _spec(injections=(AnomalyInjection(
            kind=InjectionKind.ZERO_DROP,
            ts_start=base.ts_start, ts_end=base.ts_start + 50_000),))
    # SensorVibGhost only targets Idle entries.
    active = next(e for e in base.schedule
                  if e.ctx.operation is not Operation.IDLE)
    with pytest.raises(DataError, match="Idle"):
        _spec(injections=(AnomalyInjection(
            kind=InjectionKind.SENSOR_VIB_GHOST,
            ts_start=active.ts_start, ts_end=active.ts_start + 600),))
    idle = next(e for e in base.schedule if e.ctx.operation is Operation.IDLE)
    with pytest.raises(DataError, match="active"):
        _spec(injections=(AnomalyInjection(
            kind=InjectionKind.ZERO_DROP,
            ts_start=idle.ts_start, ts_end=idle.ts_start + 60),))


def test_off_schedule_injection_must_avoid_schedule():
    base = scenario_by_name("nominal-week")
    first = base.schedule[0]
    with pytest.raises(DataError, match="outside the schedule"):
        _spec(injections=(AnomalyInjection(
            kind=InjectionKind.PLC_DOS,
            ts_start=first.ts_start, ts_end=first.ts_start + 600),))


def test_simulation_is_deterministic():
    a = simulate(scenario_by_name("zero-drop"))
    b = simulate(scenario_by_name("zero-drop"))
    assert a.csv_text() == b.csv_text()
    assert a.ground_truth_csv() == b.ground_truth_csv()
    c = simulate(scenario_by_name("zero-drop", seed=99))
    assert c.csv_text() != a.csv_text()


def test_injections_do_not_disturb_surrounding_noise():
    plain = simulate(scenario_by_name("nominal-week"))
    spiked = simulate(scenario_by_name("current-peaks"))
    # Day one of both scenarios shares seed and schedule; samples outside
    # the injection interval must be identical.
    (inj,) = scenario_by_name("current-peaks").injections
    plain_day1 = [s for s in plain.samples() if s.ts < EPOCH + 86400]
    spiked_day1 = spiked.samples()
    assert len(plain_day1) == len(spiked_day1)
    for p, q in zip(plain_day1, spiked_day1):
        if inj.ts_start <= p.ts < inj.ts_end:
            continue
        assert p == q


def test_csv_output_ingests_without_rejects():
    result = simulate(scenario_by_name("cnc-tamper"))
    store = SampleStore()
    report = store.ingest_csv(result.csv_text())
    assert report.rejected == 0
    assert report.accepted == result.n_samples == len(store)


def test_samples_match_csv_rows():
    result = simulate(scenario_by_name("out-of-hours"))
    lines = result.csv_text().strip().split("\n")
    assert len(lines) - 1 == result.n_samples
    samples = result.samples()
    assert len(samples) == result.n_samples
    assert all(a.ts < b.ts for a, b in zip(samples, samples[1:]))


def test_off_schedule_segments_carry_service_context():
    result = simulate(scenario_by_name("plc-dos"))
    (inj,) = scenario_by_name("plc-dos").injections
    inside = [s for s in result.samples() if inj.ts_start <= s.ts < inj.ts_end]
    assert inside
    assert all(s.ctx.operation is Operation.SPECIAL for s in inside)
    assert all(s.ctx.tool == "t-serv-1" for s in inside)
    assert all(s.ctx.material is Material.OTHER for s in inside)
    assert all(s.ctx.access is Access.REMOTE for s in inside)

    local = simulate(scenario_by_name("out-of-hours"))
    (inj2,) = scenario_by_name("out-of-hours").injections
    inside2 = [s for s in local.samples() if inj2.ts_start <= s.ts < inj2.ts_end]
    assert inside2
    assert all(s.ctx.access is Access.LOCAL for s in inside2)


def test_ground_truth_csv_round_trip(tmp_path):
    result = simulate(scenario_by_name("spindle-seizure"))
    text = result.ground_truth_csv()
    assert text.splitlines()[0] == GROUND_TRUTH_HEADER
    rows = parse_ground_truth_csv(text)
    assert len(rows) == 1
    row = rows[0]
    assert row.kind is InjectionKind.SPINDLE_SEIZURE
    assert row.expected_criteria == EXPECTED_CRITERIA[InjectionKind.SPINDLE_SEIZURE]
    assert row.expected_risks == expected_risks(InjectionKind.SPINDLE_SEIZURE)
    with pytest.raises(DataError):
        parse_ground_truth_csv("bad header\n")


def test_write_produces_both_files(tmp_path):
    result = simulate(scenario_by_name("excess-vib"))
    out = tmp_path / "sim"
    result.write(out)
    assert (out / "telemetry.csv").read_text() == result.csv_text()
    assert (out / "ground_truth.csv").read_text() == result.ground_truth_csv()


# Documented co-firings: a sustained current boost inside a long window is
# also, statistically, a cluster of peak samples. Anything else is a failure.
_AUXILIARY = {
    InjectionKind.RPM_RISE: {CriterionId.CURRENT_PEAK_COUNT},
}


@pytest.mark.parametrize("kind", list(InjectionKind), ids=lambda k: k.value)
def test_each_kind_fires_its_signature_and_nothing_strays(kind):
    """Every expected criterion fires somewhere in the kind's scenario, all
    firings land on windows that intersect the injection, and co-firings
    beyond the signature are limited to the documented auxiliary set."""
    spec = scenario_by_name(KIND_SLUGS[kind])
    (inj,) = spec.injections
    result = simulate(spec)
    samples = result.samples()
    history = build_history(samples)
    cfg = CriteriaConfig()
    fired = set()
    for duration in (SHORT_WINDOW_S, LONG_WINDOW_S):
        for w in segment_windows(samples, spec.ts_start, spec.ts_end,
                                 duration, duration):
            fs = evaluate_all(w, cfg, history)
            if not fs.firings:
                continue
            touches = w.ts_start < inj.ts_end and inj.ts_start < w.ts_end
            assert touches, (
                f"{duration}s window at +{w.ts_start - spec.ts_start}s fired "
                f"{fs.tokens()} outside the injection"
            )
            fired |= set(fs.criteria)
    expected = set(EXPECTED_CRITERIA[kind])
    assert expected <= fired
    assert fired <= expected | _AUXILIARY.get(kind, set())
