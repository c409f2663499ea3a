"""Criteria-to-risk incidence matrix, attribution, and the SADT process model.

The default matrix maps each expert criterion to the plant risks it can
indicate; eight risks are machine-side faults and two are cyber incidents,
which is what lets an assessment discriminate technical failures from
attacks. The matrix ships as editable configuration so a plant can extend
or correct it without code changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .criteria import CRITERION_ORDER, CriterionId, FiringSet, parse_criterion_id
from .model import DataError, Window


class RiskId(str, Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    R6 = "R6"
    R7 = "R7"
    R8 = "R8"
    R9 = "R9"
    R10 = "R10"

    @property
    def ordinal(self) -> int:
        return _RISK_ORDINALS[self]

    @property
    def title(self) -> str:
        return _RISK_TITLES[self]

    @property
    def is_cyber(self) -> bool:
        return self in (RiskId.R9, RiskId.R10)


RISK_ORDER: tuple[RiskId, ...] = tuple(RiskId)
_RISK_ORDINALS = {r: i for i, r in enumerate(RISK_ORDER)}
_RISK_TITLES = {
    RiskId.R1: "SpindleMotorSeizure",
    RiskId.R2: "WiringComponentFault",
    RiskId.R3: "ClampBreakage",
    RiskId.R4: "SymmetricPartDefect",
    RiskId.R5: "LinearAxisFault",
    RiskId.R6: "CncProgramFault",
    RiskId.R7: "SensorFault",
    RiskId.R8: "ElectricalInstallationFault",
    RiskId.R9: "CyberCncTampering",
    RiskId.R10: "CyberPlcDos",
}


def parse_risk_id(token: str) -> RiskId:
    try:
        return RiskId(token)
    except ValueError:
        raise DataError(f"unknown risk id {token!r}") from None


class Origin(str, Enum):
    MACHINE_FAULT = "MachineFault"
    CYBER_INCIDENT = "CyberIncident"
    MIXED = "Mixed"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class RiskMatrix:
    """Boolean incidence of criteria over risks. Immutable after load."""

    rows: dict[CriterionId, frozenset[RiskId]]

    def __post_init__(self) -> None:
        missing = [c.value for c in CRITERION_ORDER if c not in self.rows]
        if missing:
            raise DataError(f"matrix missing criterion rows: {', '.join(missing)}")
        extra = set(self.rows) - set(CRITERION_ORDER)
        if extra:
            raise DataError(f"matrix has unknown rows: {sorted(extra)}")
        for c, risks in self.rows.items():
            if not risks:
                raise DataError(f"matrix row {c.value} maps to no risks")

    def risks_for(self, criterion: CriterionId) -> frozenset[RiskId]:
        return self.rows[criterion]


def default_matrix() -> RiskMatrix:
    """The shipped transcription of the expert criteria-to-risk table."""
    r = RiskId
    return RiskMatrix(
        rows={
            CriterionId.TEMP_GRADIENT: frozenset({r.R1, r.R2, r.R4, r.R10}),
            CriterionId.CURRENT_PEAK_COUNT: frozenset({r.R3, r.R4, r.R5}),
            CriterionId.CURRENT_WITHOUT_VIBRATION: frozenset({r.R1, r.R2, r.R3, r.R5}),
            CriterionId.VIBRATION_WITHOUT_CURRENT_C: frozenset({r.R7}),
            CriterionId.EXCESS_VIBRATION: frozenset({r.R3, r.R4, r.R5, r.R6, r.R10}),
            CriterionId.VIBRATION_WITHOUT_CURRENT_V: frozenset({r.R5, r.R6}),
            CriterionId.SPINDLE_RPM_RISE: frozenset({r.R1, r.R5, r.R8, r.R10}),
            CriterionId.OUT_OF_HOURS_USE: frozenset({r.R10}),
            CriterionId.ZERO_DROP: frozenset({r.R6, r.R9}),
            CriterionId.CURRENT_INTENSITY_CHANGE: frozenset({r.R2}),
        }
    )


@dataclass(frozen=True, slots=True)
class RiskEntry:
    risk: RiskId
    support: int
    mean_score: float


@dataclass(frozen=True)
class RiskAssessment:
    window: Window | None
    ranking: tuple[RiskEntry, ...]
    origin: Origin

    def __post_init__(self) -> None:
        if (self.origin is Origin.UNKNOWN) != (not self.ranking):
            raise DataError("origin is Unknown exactly when nothing fired")

    @property
    def risks(self) -> tuple[RiskId, ...]:
        return tuple(e.risk for e in self.ranking)


def attribute(firings: FiringSet, m: RiskMatrix) -> RiskAssessment:
    """Rank the risks implicated by the fired criteria.

    Support counts the fired criteria incident to each risk; ties break on
    higher mean firing score, then on risk ordinal. Origin is MachineFault
    or CyberIncident when the attributed risks are homogeneous, Mixed
    otherwise, and Unknown when nothing fired.
    """
    incident: dict[RiskId, list[float]] = {}
    for f in firings.firings:
        for risk in m.risks_for(f.criterion):
            incident.setdefault(risk, []).append(f.score)
    entries = [
        RiskEntry(risk=r, support=len(scores), mean_score=sum(scores) / len(scores))
        for r, scores in incident.items()
    ]
    entries.sort(key=lambda e: (-e.support, -e.mean_score, e.risk.ordinal))
    if not entries:
        origin = Origin.UNKNOWN
    elif all(e.risk.is_cyber for e in entries):
        origin = Origin.CYBER_INCIDENT
    elif not any(e.risk.is_cyber for e in entries):
        origin = Origin.MACHINE_FAULT
    else:
        origin = Origin.MIXED
    return RiskAssessment(window=firings.window, ranking=tuple(entries), origin=origin)


def render_matrix(m: RiskMatrix) -> str:
    """One `Criterion: R#,R#,...` line per criterion, canonical order."""
    lines = []
    for c in CRITERION_ORDER:
        risks = sorted(m.rows[c], key=lambda r: r.ordinal)
        lines.append(f"{c.value}: {','.join(r.value for r in risks)}")
    return "\n".join(lines) + "\n"


def load_matrix(text: str) -> RiskMatrix:
    rows: dict[CriterionId, frozenset[RiskId]] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise DataError(f"matrix line {ln}: expected 'Criterion: R#,...'")
        head, _, tail = line.partition(":")
        criterion = parse_criterion_id(head.strip())
        if criterion in rows:
            raise DataError(f"matrix line {ln}: duplicate row {criterion.value}")
        risks = frozenset(
            parse_risk_id(tok.strip()) for tok in tail.split(",") if tok.strip()
        )
        if not risks:
            raise DataError(f"matrix line {ln}: row {criterion.value} has no risks")
        rows[criterion] = risks
    return RiskMatrix(rows=rows)


# --------------------------------------------------------------------------
# SADT process model


@dataclass(frozen=True)
class SadtActivity:
    """One SADT box: a named transformation with input, output, control, and
    mechanism flows. Validation is a graph-level query, not a constructor
    check, so partially specified graphs can be built and then reported on."""

    name: str
    inputs: frozenset[str] = frozenset()
    outputs: frozenset[str] = frozenset()
    controls: frozenset[str] = frozenset()
    mechanisms: frozenset[str] = frozenset()

    def flows(self) -> frozenset[str]:
        return self.inputs | self.outputs | self.controls | self.mechanisms


def sadt_validate(graph: list[SadtActivity]) -> list[str]:
    """Violation messages; an empty list means the graph is valid.

    Checks: unique activity names, every activity has at least one input and
    one output, and (for multi-activity graphs) connectivity through shared
    flow names.
    """
    violations: list[str] = []
    seen: set[str] = set()
    for a in graph:
        if a.name in seen:
            violations.append(f"duplicate activity name {a.name!r}")
        seen.add(a.name)
        if not a.inputs:
            violations.append(f"activity {a.name!r} has no inputs")
        if not a.outputs:
            violations.append(f"activity {a.name!r} has no outputs")
    if len(graph) > 1:
        adjacency: dict[int, set[int]] = {i: set() for i in range(len(graph))}
        for i in range(len(graph)):
            for j in range(i + 1, len(graph)):
                if graph[i].flows() & graph[j].flows():
                    adjacency[i].add(j)
                    adjacency[j].add(i)
        reached = {0}
        frontier = [0]
        while frontier:
            node = frontier.pop()
            for nxt in adjacency[node]:
                if nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
        for i in range(len(graph)):
            if i not in reached:
                violations.append(
                    f"activity {graph[i].name!r} shares no flow with the rest"
                )
    return violations


def render_sadt(graph: list[SadtActivity]) -> str:
    lines = []
    for a in graph:
        lines.append(f"activity {a.name}")
        for kind, flows in (
            ("in", a.inputs),
            ("out", a.outputs),
            ("ctl", a.controls),
            ("mech", a.mechanisms),
        ):
            for flow in sorted(flows):
                lines.append(f"{kind} {flow}")
    return "\n".join(lines) + "\n"


def load_sadt(text: str) -> list[SadtActivity]:
    graph: list[SadtActivity] = []
    current: dict | None = None

    def flush() -> None:
        nonlocal current
        if current is not None:
            graph.append(
                SadtActivity(
                    name=current["name"],
                    inputs=frozenset(current["in"]),
                    outputs=frozenset(current["out"]),
                    controls=frozenset(current["ctl"]),
                    mechanisms=frozenset(current["mech"]),
                )
            )
            current = None

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        rest = rest.strip()
        if kind == "activity":
            if not rest:
                raise DataError(f"sadt line {ln}: activity needs a name")
            flush()
            current = {"name": rest, "in": [], "out": [], "ctl": [], "mech": []}
        elif kind in ("in", "out", "ctl", "mech"):
            if current is None:
                raise DataError(f"sadt line {ln}: flow before any activity")
            if not rest:
                raise DataError(f"sadt line {ln}: flow needs a name")
            current[kind].append(rest)
        else:
            raise DataError(f"sadt line {ln}: unknown directive {kind!r}")
    flush()
    return graph


def root_cause_paths(
    graph: list[SadtActivity],
    firing,
    bindings: dict[CriterionId, frozenset[str]],
) -> list[tuple[tuple[str, str], ...]]:
    """All acyclic upstream paths explaining a firing.

    A binding links a criterion to output flows in the graph. Each path is a
    tuple of (activity name, output flow) pairs, starting at an activity that
    produces a bound flow and walking upstream through input flows to their
    producing activities until no unvisited producer remains. Order is
    deterministic: bound flows, producers, and inputs all traverse sorted.
    """
    flows = bindings.get(firing.criterion, frozenset())
    producers: dict[str, list[SadtActivity]] = {}
    for a in graph:
        for out in a.outputs:
            producers.setdefault(out, []).append(a)
    for lst in producers.values():
        lst.sort(key=lambda a: a.name)

    paths: list[tuple[tuple[str, str], ...]] = []

    def walk(activity: SadtActivity, via: str, trail: list[tuple[str, str]]) -> None:
        trail = trail + [(activity.name, via)]
        on_trail = {name for name, _ in trail}
        upstream = [
            (flow, prod)
            for flow in sorted(activity.inputs)
            for prod in producers.get(flow, [])
            if prod.name not in on_trail
        ]
        if not upstream:
            paths.append(tuple(trail))
            return
        for flow, prod in upstream:
            walk(prod, flow, trail)

    for flow in sorted(flows):
        for prod in producers.get(flow, []):
            walk(prod, flow, [])
    return paths
