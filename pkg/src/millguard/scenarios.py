"""Scenario catalog and the flat key-value scenario file format.

The catalog covers a quiet baseline week, one focused scenario per injection
kind, and two multi-day plant runs. Working days share one block plan
(facing, drilling, milling, contouring with idle gaps) whose boundaries sit
on the 900 s window grid, and every context uses the same temperature base
so block transitions cannot masquerade as thermal gradients.
"""

from __future__ import annotations

from dataclasses import replace

from .model import Access, DataError, Material, Operation, ProcessContext
from .simulator import (
    AnomalyInjection,
    Baseline,
    InjectionKind,
    ScenarioSpec,
    ScheduleEntry,
)
from .workhours import calendar_from_entries, default_calendar

DAY_S = 86400
# 2022-08-01T00:00:00Z, a Monday.
EPOCH_2022_08_01 = 1659312000

_LOCAL = Access.LOCAL


def _ctx(op: Operation, tool: str, mat: Material) -> ProcessContext:
    return ProcessContext(operation=op, tool=tool, material=mat, access=_LOCAL)


_BLOCKS: tuple[tuple[int, int, ProcessContext], ...] = (
    (21600, 28800, _ctx(Operation.FACING, "t-face-1", Material.STEEL)),
    (28800, 30600, _ctx(Operation.IDLE, "none", Material.OTHER)),
    (30600, 43200, _ctx(Operation.DRILLING, "t-drill-4", Material.STEEL)),
    (43200, 46800, _ctx(Operation.IDLE, "none", Material.OTHER)),
    (46800, 61200, _ctx(Operation.MILLING, "t-mill-2", Material.ALUMINIUM)),
    (61200, 63000, _ctx(Operation.IDLE, "none", Material.OTHER)),
    (63000, 75600, _ctx(Operation.CONTOURING, "t-cont-7", Material.STAINLESS_STEEL)),
)

STANDARD_BASELINES: dict[tuple[Operation, Material], Baseline] = {
    (Operation.FACING, Material.STEEL): Baseline(8.0, 0.5, 28.0, 0.35),
    (Operation.DRILLING, Material.STEEL): Baseline(12.0, 0.6, 28.0, 0.5),
    (Operation.MILLING, Material.ALUMINIUM): Baseline(6.0, 0.4, 28.0, 0.3),
    (Operation.CONTOURING, Material.STAINLESS_STEEL): Baseline(14.0, 0.7, 28.0, 0.6),
    (Operation.IDLE, Material.OTHER): Baseline(0.05, 0.01, 28.0, 0.008),
    (Operation.SPECIAL, Material.OTHER): Baseline(6.0, 0.4, 28.0, 0.3),
}

# Day-relative injection slots. Step-like kinds sit 15 s off the 30 s grid
# so the step lands mid-window; interval kinds stay grid-aligned so their
# edges coincide with window boundaries.
_SLOTS: dict[InjectionKind, tuple[int, int]] = {
    InjectionKind.SPINDLE_SEIZURE: (32400, 300),
    InjectionKind.CURRENT_PEAKS: (50400, 900),
    InjectionKind.NO_VIB_CURRENT: (23400, 300),
    InjectionKind.SENSOR_VIB_GHOST: (44100, 300),
    InjectionKind.EXCESS_VIB: (64800, 900),
    InjectionKind.RPM_RISE: (37800, 300),
    InjectionKind.OUT_OF_HOURS: (7200, 3600),
    InjectionKind.ZERO_DROP: (68400, 90),
    InjectionKind.STEP_CHANGE: (54015, 300),
    InjectionKind.CNC_TAMPER: (25215, 300),
    InjectionKind.PLC_DOS: (12600, 3600),
}

KIND_SLUGS: dict[InjectionKind, str] = {
    InjectionKind.SPINDLE_SEIZURE: "spindle-seizure",
    InjectionKind.CURRENT_PEAKS: "current-peaks",
    InjectionKind.NO_VIB_CURRENT: "no-vib-current",
    InjectionKind.SENSOR_VIB_GHOST: "sensor-vib-ghost",
    InjectionKind.EXCESS_VIB: "excess-vib",
    InjectionKind.RPM_RISE: "rpm-rise",
    InjectionKind.OUT_OF_HOURS: "out-of-hours",
    InjectionKind.ZERO_DROP: "zero-drop",
    InjectionKind.STEP_CHANGE: "step-change",
    InjectionKind.CNC_TAMPER: "cnc-tamper",
    InjectionKind.PLC_DOS: "plc-dos",
}


def weekday_schedule(day_start: int) -> tuple[ScheduleEntry, ...]:
    return tuple(
        ScheduleEntry(day_start + a, day_start + b, ctx) for a, b, ctx in _BLOCKS
    )


def _inject(kind: InjectionKind, day_start: int) -> AnomalyInjection:
    offset, dur = _SLOTS[kind]
    return AnomalyInjection(
        kind=kind, ts_start=day_start + offset, ts_end=day_start + offset + dur
    )


def _scenario(
    name: str,
    days: int,
    schedule: tuple[ScheduleEntry, ...],
    injections: tuple[AnomalyInjection, ...],
    seed: int = 1,
    day0: int = EPOCH_2022_08_01,
) -> ScenarioSpec:
    return ScenarioSpec(
        name=name,
        seed=seed,
        ts_start=day0,
        ts_end=day0 + days * DAY_S,
        schedule=schedule,
        baselines=dict(STANDARD_BASELINES),
        injections=injections,
    )


def _plant_7d() -> ScenarioSpec:
    day = lambda i: EPOCH_2022_08_01 + i * DAY_S
    schedule: list[ScheduleEntry] = []
    for i in range(5):  # Mon..Fri; weekend off
        schedule.extend(weekday_schedule(day(i)))
    plan = {
        0: (InjectionKind.SPINDLE_SEIZURE, InjectionKind.STEP_CHANGE),
        1: (
            InjectionKind.NO_VIB_CURRENT,
            InjectionKind.SENSOR_VIB_GHOST,
            InjectionKind.OUT_OF_HOURS,
            InjectionKind.STEP_CHANGE,
        ),
        2: (
            InjectionKind.SPINDLE_SEIZURE,
            InjectionKind.EXCESS_VIB,
            InjectionKind.RPM_RISE,
            InjectionKind.STEP_CHANGE,
        ),
        3: (
            InjectionKind.ZERO_DROP,
            InjectionKind.STEP_CHANGE,
            InjectionKind.PLC_DOS,
            InjectionKind.CURRENT_PEAKS,
        ),
        4: (InjectionKind.CNC_TAMPER, InjectionKind.STEP_CHANGE),
    }
    injections: list[AnomalyInjection] = []
    for i, kinds in plan.items():
        for kind in kinds:
            injections.append(_inject(kind, day(i)))
    return _scenario("plant-7d", 7, tuple(schedule), tuple(injections))


_KIND_ROTATION: tuple[InjectionKind, ...] = tuple(InjectionKind)


def _plant_88d() -> ScenarioSpec:
    # 2022-08-01 through 2022-11-30 is 122 calendar days holding exactly 88
    # Mondays-through-Fridays.
    schedule: list[ScheduleEntry] = []
    injections: list[AnomalyInjection] = []
    workday = 0
    for i in range(122):
        if i % 7 >= 5:
            continue
        start = EPOCH_2022_08_01 + i * DAY_S
        schedule.extend(weekday_schedule(start))
        kind = _KIND_ROTATION[workday % len(_KIND_ROTATION)]
        injections.append(_inject(kind, start))
        workday += 1
    if workday != 88:
        raise DataError(f"expected 88 working days, derived {workday}")
    return _scenario(
        "plant-88d", 122, tuple(schedule), tuple(injections)
    )


def default_scenarios() -> dict[str, ScenarioSpec]:
    """Named catalog: nominal-week, one scenario per kind, plant-7d,
    plant-88d."""
    out: dict[str, ScenarioSpec] = {}
    out["nominal-week"] = _scenario(
        "nominal-week",
        5,
        tuple(
            e
            for i in range(5)
            for e in weekday_schedule(EPOCH_2022_08_01 + i * DAY_S)
        ),
        (),
    )
    for kind, slug in KIND_SLUGS.items():
        out[slug] = _scenario(
            slug, 1, weekday_schedule(EPOCH_2022_08_01), (_inject(kind, EPOCH_2022_08_01),)
        )
    out["plant-7d"] = _plant_7d()
    out["plant-88d"] = _plant_88d()
    return out


def scenario_by_name(name: str, seed: int | None = None) -> ScenarioSpec:
    catalog = default_scenarios()
    if name not in catalog:
        known = ", ".join(sorted(catalog))
        raise DataError(f"unknown scenario {name!r} (known: {known})")
    spec = catalog[name]
    return spec if seed is None else replace(spec, seed=seed)


# --------------------------------------------------------------------------
# Scenario file format: the same flat `key = value` shape as criteria config.


def render_scenario(spec: ScenarioSpec) -> str:
    lines = [
        f"name = {spec.name}",
        f"seed = {spec.seed}",
        f"span.start = {spec.ts_start}",
        f"span.end = {spec.ts_end}",
    ]
    lines.extend(spec.calendar.render_lines())
    for (op, mat), b in sorted(
        spec.baselines.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        prefix = f"baseline.{op.value}.{mat.value}"
        lines.append(f"{prefix}.i_mean_a = {b.i_mean_a!r}")
        lines.append(f"{prefix}.i_std_a = {b.i_std_a!r}")
        lines.append(f"{prefix}.temp_base_c = {b.temp_base_c!r}")
        lines.append(f"{prefix}.vib_rms_g = {b.vib_rms_g!r}")
    for i, e in enumerate(spec.schedule):
        prefix = f"schedule.{i}"
        lines.append(f"{prefix}.start = {e.ts_start}")
        lines.append(f"{prefix}.end = {e.ts_end}")
        lines.append(f"{prefix}.operation = {e.ctx.operation.value}")
        lines.append(f"{prefix}.tool = {e.ctx.tool}")
        lines.append(f"{prefix}.material = {e.ctx.material.value}")
        lines.append(f"{prefix}.access = {e.ctx.access.value}")
    for i, inj in enumerate(spec.injections):
        prefix = f"inject.{i}"
        lines.append(f"{prefix}.kind = {inj.kind.value}")
        lines.append(f"{prefix}.start = {inj.ts_start}")
        lines.append(f"{prefix}.end = {inj.ts_end}")
        for k in sorted(inj.params):
            lines.append(f"{prefix}.{k} = {inj.params[k]!r}")
    return "\n".join(lines) + "\n"


def load_scenario(text: str) -> ScenarioSpec:
    """Parse a scenario file; load(render(spec)) == spec."""
    from .model import (
        parse_access,
        parse_material,
        parse_operation,
    )

    scalars: dict[str, str] = {}
    calendar_entries: dict[str, str] = {}
    tz = "UTC"
    baselines_raw: dict[tuple[str, str], dict[str, float]] = {}
    schedule_raw: dict[int, dict[str, str]] = {}
    inject_raw: dict[int, dict[str, str]] = {}

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"scenario line {ln}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        parts = key.split(".")
        try:
            if parts[0] in ("name", "seed") and len(parts) == 1:
                scalars[key] = value
            elif parts[0] == "span" and len(parts) == 2:
                scalars[key] = value
            elif parts[0] == "calendar" and len(parts) == 2:
                if parts[1] == "tz":
                    tz = value
                else:
                    calendar_entries[parts[1]] = value
            elif parts[0] == "baseline" and len(parts) == 4:
                baselines_raw.setdefault((parts[1], parts[2]), {})[parts[3]] = float(
                    value
                )
            elif parts[0] == "schedule" and len(parts) == 3:
                schedule_raw.setdefault(int(parts[1]), {})[parts[2]] = value
            elif parts[0] == "inject" and len(parts) == 3:
                inject_raw.setdefault(int(parts[1]), {})[parts[2]] = value
            else:
                raise DataError(f"scenario line {ln}: unknown key {key!r}")
        except ValueError as exc:
            raise DataError(f"scenario line {ln}: {exc}") from None

    for required in ("name", "seed", "span.start", "span.end"):
        if required not in scalars:
            raise DataError(f"scenario missing key {required!r}")

    if calendar_entries:
        calendar_entries = {**calendar_entries, "tz": tz}
        calendar = calendar_from_entries(calendar_entries)
    else:
        calendar = default_calendar()

    baselines: dict[tuple[Operation, Material], Baseline] = {}
    for (op_tok, mat_tok), fields in baselines_raw.items():
        missing = {"i_mean_a", "i_std_a", "temp_base_c", "vib_rms_g"} - set(fields)
        if missing:
            raise DataError(
                f"baseline {op_tok}.{mat_tok} missing {sorted(missing)}"
            )
        baselines[(parse_operation(op_tok), parse_material(mat_tok))] = Baseline(
            i_mean_a=fields["i_mean_a"],
            i_std_a=fields["i_std_a"],
            temp_base_c=fields["temp_base_c"],
            vib_rms_g=fields["vib_rms_g"],
        )

    schedule: list[ScheduleEntry] = []
    for i in sorted(schedule_raw):
        f = schedule_raw[i]
        missing = {"start", "end", "operation", "tool", "material", "access"} - set(f)
        if missing:
            raise DataError(f"schedule.{i} missing {sorted(missing)}")
        schedule.append(
            ScheduleEntry(
                ts_start=int(f["start"]),
                ts_end=int(f["end"]),
                ctx=ProcessContext(
                    operation=parse_operation(f["operation"]),
                    tool=f["tool"],
                    material=parse_material(f["material"]),
                    access=parse_access(f["access"]),
                ),
            )
        )

    injections: list[AnomalyInjection] = []
    for i in sorted(inject_raw):
        f = dict(inject_raw[i])
        missing = {"kind", "start", "end"} - set(f)
        if missing:
            raise DataError(f"inject.{i} missing {sorted(missing)}")
        from .simulator import parse_injection_kind

        kind = parse_injection_kind(f.pop("kind"))
        start, end = int(f.pop("start")), int(f.pop("end"))
        params = {k: float(v) for k, v in f.items()}
        injections.append(
            AnomalyInjection(kind=kind, ts_start=start, ts_end=end, params=params)
        )

    return ScenarioSpec(
        name=scalars["name"],
        seed=int(scalars["seed"]),
        ts_start=int(scalars["span.start"]),
        ts_end=int(scalars["span.end"]),
        schedule=tuple(schedule),
        baselines=baselines,
        injections=tuple(injections),
        calendar=calendar,
    )
