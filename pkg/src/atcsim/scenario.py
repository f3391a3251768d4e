"""Exercise definition files: airspace, traffic sample, scripted events.

A scenario is a versioned UTF-8 JSON document (see docs/scenario.schema.json)
that the supervisor station loads to set up an exercise.  Parsing enforces
structural validity (types, domains, cross-references); `validate_scenario`
reports data-quality issues that an author should fix but that do not stop
a file from being read.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .sim import (
    AircraftState,
    Position,
    ScheduledEntry,
    SeparationMinima,
    SimClock,
    WorldState,
    canon_num,
    detect_conflicts,
    _sha256,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_DURATION_S = 3600.0
DEFAULT_TICK_SECONDS = 1.0


class ScenarioParseError(ValueError):
    """The document is not readable as a scenario at all."""


class ScenarioSchemaError(ValueError):
    """The document parsed but violates a scenario invariant."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


@dataclass(frozen=True)
class Waypoint:
    name: str
    position: Position


@dataclass(frozen=True)
class Sector:
    id: str
    boundary: tuple[Position, ...]
    frequency_label: str = ""

    def contains(self, p: Position) -> bool:
        """Ray-cast point-in-polygon on the lateral plane."""
        inside = False
        pts = self.boundary
        j = len(pts) - 1
        for i in range(len(pts)):
            xi, yi = pts[i].x_nm, pts[i].y_nm
            xj, yj = pts[j].x_nm, pts[j].y_nm
            if (yi > p.y_nm) != (yj > p.y_nm):
                x_cross = (xj - xi) * (p.y_nm - yi) / (yj - yi) + xi
                if p.x_nm < x_cross:
                    inside = not inside
            j = i
        return inside


class EventKind(Enum):
    EMERGENCY_DECLARED = "EMERGENCY_DECLARED"
    RADIO_FAILURE = "RADIO_FAILURE"
    GO_AROUND = "GO_AROUND"


@dataclass(frozen=True)
class ScriptedEvent:
    trigger_tick: int
    kind: EventKind
    target: str
    description: str = ""


@dataclass(frozen=True)
class Scenario:
    schema_version: int = SCHEMA_VERSION
    title: str = "untitled"
    duration_s: float = DEFAULT_DURATION_S
    tick_seconds: float = DEFAULT_TICK_SECONDS
    minima: SeparationMinima = field(default_factory=SeparationMinima)
    waypoints: tuple[Waypoint, ...] = ()
    sectors: tuple[Sector, ...] = ()
    schedule: tuple[ScheduledEntry, ...] = ()
    events: tuple[ScriptedEvent, ...] = ()
    # Unknown fields preserved from documents with a different
    # schema_version, keyed by their JSON path.
    extras: tuple[tuple[str, Any], ...] = ()

    @property
    def duration_ticks(self) -> int:
        return int(math.ceil(self.duration_s / self.tick_seconds))

    def waypoint_names(self) -> frozenset[str]:
        return frozenset(w.name for w in self.waypoints)

    def waypoint_map(self) -> dict[str, Position]:
        return {w.name: w.position for w in self.waypoints}


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # ERROR or WARNING
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity} {self.code} {self.path}: {self.message}"


# --- parsing ---------------------------------------------------------------

_TOP_KEYS = {
    "schema_version",
    "title",
    "duration_s",
    "tick_seconds",
    "minima",
    "waypoints",
    "sectors",
    "schedule",
    "events",
}


class _Doc:
    """Cursor over one JSON object that tracks unknown keys by path."""

    def __init__(self, raw: dict, path: str, strict: bool, extras: list):
        self.raw = raw
        self.path = path
        self.strict = strict
        self.extras = extras
        self.seen: set[str] = set()

    def take(self, key: str, default=None):
        self.seen.add(key)
        return self.raw.get(key, default)

    def finish(self):
        for key in sorted(set(self.raw) - self.seen):
            path = f"{self.path}.{key}" if self.path else key
            if self.strict:
                raise ScenarioSchemaError(path, "unknown field")
            logger.warning("scenario: preserving unknown field %s", path)
            self.extras.append((path, self.raw[key]))


def _need(doc: _Doc, key: str, kind, path: str):
    value = doc.take(key)
    if value is None:
        raise ScenarioSchemaError(path, f"missing required field {key!r}")
    return _typed(value, kind, f"{path}.{key}" if path else key)


def _typed(value, kind, path: str):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioSchemaError(path, f"expected number, got {type(value).__name__}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioSchemaError(path, f"expected integer, got {type(value).__name__}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ScenarioSchemaError(path, f"expected string, got {type(value).__name__}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ScenarioSchemaError(path, f"expected array, got {type(value).__name__}")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ScenarioSchemaError(path, f"expected object, got {type(value).__name__}")
        return value
    raise AssertionError(kind)


def _segments_cross(a: Position, b: Position, c: Position, d: Position) -> bool:
    def orient(p, q, r):
        v = (q.x_nm - p.x_nm) * (r.y_nm - p.y_nm) - (q.y_nm - p.y_nm) * (r.x_nm - p.x_nm)
        return 0 if v == 0 else (1 if v > 0 else -1)

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 != o2 and o3 != o4


def parse_scenario(data: bytes | str) -> Scenario:
    """Parse and structurally validate a scenario document.

    Unknown fields are rejected when the document's schema_version matches
    this implementation, and preserved with a logged warning otherwise.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioParseError(f"not UTF-8: {exc}") from exc
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario document must be a JSON object")

    version = raw.get("schema_version", SCHEMA_VERSION)
    if isinstance(version, bool) or not isinstance(version, int):
        raise ScenarioSchemaError("schema_version", "expected integer")
    strict = version == SCHEMA_VERSION
    extras: list[tuple[str, Any]] = []

    top = _Doc(raw, "", strict, extras)
    top.take("schema_version")
    title = _typed(top.take("title", "untitled"), str, "title")
    duration_s = _typed(top.take("duration_s", DEFAULT_DURATION_S), float, "duration_s")
    tick_seconds = _typed(top.take("tick_seconds", DEFAULT_TICK_SECONDS), float, "tick_seconds")
    if duration_s <= 0:
        raise ScenarioSchemaError("duration_s", "must be > 0")
    if tick_seconds <= 0:
        raise ScenarioSchemaError("tick_seconds", "must be > 0")

    minima_raw = top.take("minima")
    minima = SeparationMinima()
    if minima_raw is not None:
        mdoc = _Doc(_typed(minima_raw, dict, "minima"), "minima", strict, extras)
        lateral = _typed(mdoc.take("lateral_nm", minima.lateral_nm), float, "minima.lateral_nm")
        vertical = _typed(mdoc.take("vertical_ft", minima.vertical_ft), float, "minima.vertical_ft")
        if lateral <= 0 or vertical <= 0:
            raise ScenarioSchemaError("minima", "must be strictly positive")
        minima = SeparationMinima(lateral_nm=lateral, vertical_ft=vertical)
        mdoc.finish()

    waypoints = []
    names = set()
    for i, item in enumerate(_typed(top.take("waypoints", []), list, "waypoints")):
        path = f"waypoints[{i}]"
        doc = _Doc(_typed(item, dict, path), path, strict, extras)
        name = _need(doc, "name", str, path)
        if not name or name != name.upper():
            raise ScenarioSchemaError(f"{path}.name", "must be a non-empty uppercase identifier")
        if name in names:
            raise ScenarioSchemaError(f"{path}.name", f"duplicate waypoint {name!r}")
        names.add(name)
        waypoints.append(
            Waypoint(
                name,
                Position(_need(doc, "x_nm", float, path), _need(doc, "y_nm", float, path)),
            )
        )
        doc.finish()

    sectors = []
    sector_ids = set()
    for i, item in enumerate(_typed(top.take("sectors", []), list, "sectors")):
        path = f"sectors[{i}]"
        doc = _Doc(_typed(item, dict, path), path, strict, extras)
        sid = _need(doc, "id", str, path)
        if sid in sector_ids:
            raise ScenarioSchemaError(f"{path}.id", f"duplicate sector {sid!r}")
        sector_ids.add(sid)
        boundary = []
        for j, pt in enumerate(_typed(doc.take("boundary", []), list, f"{path}.boundary")):
            pdoc = _Doc(_typed(pt, dict, f"{path}.boundary[{j}]"), f"{path}.boundary[{j}]", strict, extras)
            boundary.append(
                Position(
                    _need(pdoc, "x_nm", float, f"{path}.boundary[{j}]"),
                    _need(pdoc, "y_nm", float, f"{path}.boundary[{j}]"),
                )
            )
            pdoc.finish()
        if len(boundary) < 3:
            raise ScenarioSchemaError(f"{path}.boundary", "polygon needs at least 3 points")
        n = len(boundary)
        for a in range(n):
            for b in range(a + 1, n):
                if b == a + 1 or (a == 0 and b == n - 1):
                    continue  # adjacent edges share a vertex
                if _segments_cross(
                    boundary[a], boundary[(a + 1) % n], boundary[b], boundary[(b + 1) % n]
                ):
                    raise ScenarioSchemaError(f"{path}.boundary", "polygon is self-intersecting")
        sectors.append(
            Sector(sid, tuple(boundary), _typed(doc.take("frequency_label", ""), str, path))
        )
        doc.finish()
    if not sectors:
        raise ScenarioSchemaError("sectors", "a scenario needs at least one sector")

    schedule = []
    for i, item in enumerate(_typed(top.take("schedule", []), list, "schedule")):
        path = f"schedule[{i}]"
        doc = _Doc(_typed(item, dict, path), path, strict, extras)
        callsign = _need(doc, "callsign", str, path).upper()
        entry_tick = _typed(doc.take("entry_tick", 0), int, f"{path}.entry_tick")
        if entry_tick < 0:
            raise ScenarioSchemaError(f"{path}.entry_tick", "must be >= 0")
        position = Position(
            _need(doc, "x_nm", float, path),
            _need(doc, "y_nm", float, path),
            _need(doc, "alt_ft", float, path),
        )
        heading = _need(doc, "heading_deg", float, path)
        if not 0.0 <= heading < 360.0:
            raise ScenarioSchemaError(f"{path}.heading_deg", "must be in [0, 360)")
        speed = _need(doc, "ground_speed_kt", float, path)
        if speed < 0:
            raise ScenarioSchemaError(f"{path}.ground_speed_kt", "must be >= 0")
        route = []
        for j, fix in enumerate(_typed(doc.take("route", []), list, f"{path}.route")):
            fix = _typed(fix, str, f"{path}.route[{j}]").upper()
            if fix not in names:
                raise ScenarioSchemaError(f"{path}.route[{j}]", f"undefined waypoint {fix!r}")
            route.append(fix)
        sector = next((s.id for s in sectors if s.contains(position)), sectors[0].id)
        schedule.append(
            ScheduledEntry(
                callsign=callsign,
                entry_tick=entry_tick,
                position=position,
                heading_deg=heading,
                ground_speed_kt=speed,
                route=tuple(route),
                controlling_sector=sector,
            )
        )
        doc.finish()

    duration_ticks = int(math.ceil(duration_s / tick_seconds))
    events = []
    for i, item in enumerate(_typed(top.take("events", []), list, "events")):
        path = f"events[{i}]"
        doc = _Doc(_typed(item, dict, path), path, strict, extras)
        trigger = _need(doc, "trigger_tick", int, path)
        if not 0 <= trigger <= duration_ticks:
            raise ScenarioSchemaError(f"{path}.trigger_tick", "outside exercise duration")
        kind_txt = _need(doc, "kind", str, path)
        try:
            kind = EventKind(kind_txt)
        except ValueError:
            raise ScenarioSchemaError(f"{path}.kind", f"unknown event kind {kind_txt!r}") from None
        events.append(
            ScriptedEvent(
                trigger_tick=trigger,
                kind=kind,
                target=_need(doc, "target", str, path).upper(),
                description=_typed(doc.take("description", ""), str, path),
            )
        )
        doc.finish()
    top.finish()

    return Scenario(
        schema_version=version,
        title=title,
        duration_s=duration_s,
        tick_seconds=tick_seconds,
        minima=minima,
        waypoints=tuple(waypoints),
        sectors=tuple(sectors),
        schedule=tuple(schedule),
        events=tuple(events),
        extras=tuple(extras),
    )


def scenario_to_dict(s: Scenario) -> dict:
    doc: dict[str, Any] = {
        "schema_version": s.schema_version,
        "title": s.title,
        "duration_s": s.duration_s,
        "tick_seconds": s.tick_seconds,
        "minima": {"lateral_nm": s.minima.lateral_nm, "vertical_ft": s.minima.vertical_ft},
        "waypoints": [
            {"name": w.name, "x_nm": w.position.x_nm, "y_nm": w.position.y_nm}
            for w in s.waypoints
        ],
        "sectors": [
            {
                "id": sec.id,
                "frequency_label": sec.frequency_label,
                "boundary": [{"x_nm": p.x_nm, "y_nm": p.y_nm} for p in sec.boundary],
            }
            for sec in s.sectors
        ],
        "schedule": [
            {
                "callsign": e.callsign,
                "entry_tick": e.entry_tick,
                "x_nm": e.position.x_nm,
                "y_nm": e.position.y_nm,
                "alt_ft": e.position.alt_ft,
                "heading_deg": e.heading_deg,
                "ground_speed_kt": e.ground_speed_kt,
                "route": list(e.route),
            }
            for e in s.schedule
        ],
        "events": [
            {
                "trigger_tick": ev.trigger_tick,
                "kind": ev.kind.value,
                "target": ev.target,
                "description": ev.description,
            }
            for ev in s.events
        ],
    }
    for path, value in s.extras:
        _inject(doc, path, value)
    return doc


def _inject(doc, path: str, value):
    """Re-insert a preserved unknown field at its original JSON path."""
    node = doc
    parts = []
    for piece in path.split("."):
        while "[" in piece:
            head, rest = piece.split("[", 1)
            idx, piece = rest.split("]", 1)
            if head:
                parts.append(head)
            parts.append(int(idx))
        if piece:
            parts.append(piece)
    for key in parts[:-1]:
        node = node[key]
    node[parts[-1]] = value


def serialize_scenario(s: Scenario) -> bytes:
    return (json.dumps(scenario_to_dict(s), indent=2, sort_keys=True) + "\n").encode("utf-8")


def scenario_digest(s: Scenario) -> str:
    """Stable content hash used to pair recordings with their exercise."""

    def canon(node):
        if isinstance(node, bool):
            return node
        if isinstance(node, float) or isinstance(node, int):
            return canon_num(node)
        if isinstance(node, list):
            return [canon(v) for v in node]
        if isinstance(node, dict):
            return {k: canon(v) for k, v in node.items()}
        return node

    return _sha256(canon(scenario_to_dict(s)))


def validate_scenario(s: Scenario) -> list[ValidationIssue]:
    """Author-facing data-quality checks; an empty list means clean."""
    issues: list[ValidationIssue] = []

    seen: dict[str, int] = {}
    for i, entry in enumerate(s.schedule):
        if entry.callsign in seen:
            issues.append(
                ValidationIssue(
                    "ERROR",
                    "DUPLICATE_CALLSIGN",
                    f"schedule[{i}].callsign",
                    f"{entry.callsign!r} already used by schedule[{seen[entry.callsign]}]",
                )
            )
        else:
            seen[entry.callsign] = i

    for i, entry in enumerate(s.schedule):
        if entry.entry_tick > s.duration_ticks:
            issues.append(
                ValidationIssue(
                    "ERROR",
                    "LATE_SPAWN",
                    f"schedule[{i}].entry_tick",
                    f"entry at tick {entry.entry_tick} is after the exercise ends "
                    f"(tick {s.duration_ticks})",
                )
            )

    known = {e.callsign for e in s.schedule}
    for i, ev in enumerate(s.events):
        if ev.target not in known:
            issues.append(
                ValidationIssue(
                    "ERROR",
                    "UNKNOWN_EVENT_TARGET",
                    f"events[{i}].target",
                    f"{ev.target!r} is not in the traffic schedule",
                )
            )

    by_tick: dict[int, list[tuple[int, ScheduledEntry]]] = {}
    for i, entry in enumerate(s.schedule):
        by_tick.setdefault(entry.entry_tick, []).append((i, entry))
    for tick, group in sorted(by_tick.items()):
        if len(group) < 2:
            continue
        index_of: dict[str, int] = {}
        spawn_set = []
        for i, entry in group:
            if entry.callsign in index_of:
                continue  # duplicate callsigns already reported above
            index_of[entry.callsign] = i
            spawn_set.append(
                AircraftState(
                    callsign=entry.callsign,
                    position=entry.position,
                    heading_deg=entry.heading_deg,
                    ground_speed_kt=entry.ground_speed_kt,
                )
            )
        for conflict in detect_conflicts(spawn_set, s.minima, tick_index=tick):
            issues.append(
                ValidationIssue(
                    "ERROR",
                    "SPAWN_CONFLICT",
                    f"schedule[{index_of[conflict.first]}]",
                    f"spawns in conflict with {conflict.second!r} at tick {tick} "
                    f"({conflict.lateral_nm:.1f} NM / {conflict.vertical_ft:.0f} ft)",
                )
            )
    return issues


def build_world(s: Scenario) -> WorldState:
    """Tick-0 world for this exercise: no active traffic, all entries pending."""
    return WorldState(
        clock=SimClock(tick_index=0, tick_seconds=s.tick_seconds),
        aircraft=(),
        pending_spawns=s.schedule,
        waypoints=s.waypoint_map(),
    )
