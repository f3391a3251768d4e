"""Deterministic air-traffic simulation core.

Everything in this module is a pure function over immutable value types:
advancing the world one tick, applying pseudo-pilot commands, detecting
separation infringements, and hashing world state into a canonical digest.
Geometry is flat local Cartesian in nautical miles (x east, y north),
altitudes in feet, headings compass degrees (0 = north, 90 = east).

Integration is fixed-step explicit Euler.  Per tick, each aircraft:
turns toward its cleared heading (or the bearing to its direct-to fix)
at the standard turn rate, moves altitude toward the cleared altitude,
moves speed toward the cleared speed, then translates along its
*pre-turn* heading at the *post-update* ground speed.  Per-tick motion
toward a cleared target clamps at the target so values never oscillate.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Collection, Iterable, Mapping, Optional

# Conventional training-sim performance constants (session-wide, not
# per-aircraft): turns at standard rate, gentle speed changes, typical
# jet climb/descent profiles.
TURN_RATE_DEG_PER_S = 3.0
SPEED_CHANGE_KT_PER_S = 1.0
CLIMB_RATE_FPM = 1800.0
DESCENT_RATE_FPM = 1500.0
# An aircraft within this distance of its direct-to fix counts as having
# passed it and picks up the next route point.
WAYPOINT_CAPTURE_NM = 0.5

# Canonical decimal rendering used by all digests.
_CANON_DECIMALS = 6


class UnknownCallsignError(KeyError):
    """Command addressed to a callsign not present in the world."""


class UnknownWaypointError(KeyError):
    """Direct-to target is not a waypoint of this exercise."""


class CommandSyntaxError(ValueError):
    """Pilot console input does not match the command grammar."""


class CommandDomainError(ValueError):
    """Pilot console input parsed but an argument is out of range."""


def normalize_heading(deg: float) -> float:
    """Map any finite angle onto [0, 360)."""
    h = math.fmod(deg, 360.0)
    if h < 0.0:
        h += 360.0
    return 0.0 if h == 360.0 else h


@dataclass(frozen=True)
class SimClock:
    tick_index: int = 0
    tick_seconds: float = 1.0

    def __post_init__(self):
        if self.tick_index < 0:
            raise ValueError("tick_index must be non-negative")
        if not (self.tick_seconds > 0.0 and math.isfinite(self.tick_seconds)):
            raise ValueError("tick_seconds must be positive and finite")

    @property
    def elapsed_s(self) -> float:
        return self.tick_index * self.tick_seconds

    def advanced(self) -> "SimClock":
        return replace(self, tick_index=self.tick_index + 1)


@dataclass(frozen=True)
class Position:
    x_nm: float
    y_nm: float
    alt_ft: float = 0.0

    def __post_init__(self):
        for v in (self.x_nm, self.y_nm, self.alt_ft):
            if not math.isfinite(v):
                raise ValueError("position components must be finite")
        if self.alt_ft < 0.0:
            raise ValueError("alt_ft must be >= 0")

    def lateral_distance_to(self, other: "Position") -> float:
        return math.hypot(other.x_nm - self.x_nm, other.y_nm - self.y_nm)

    def bearing_to(self, other: "Position") -> float:
        """Compass bearing from self to other, degrees in [0, 360)."""
        return normalize_heading(
            math.degrees(math.atan2(other.x_nm - self.x_nm, other.y_nm - self.y_nm))
        )


@dataclass(frozen=True)
class AircraftState:
    callsign: str
    position: Position
    heading_deg: float
    ground_speed_kt: float
    vertical_rate_fpm: float = 0.0
    cleared_heading_deg: Optional[float] = None
    cleared_alt_ft: Optional[float] = None
    cleared_speed_kt: Optional[float] = None
    direct_to: Optional[str] = None
    # Remaining route fixes after the current direct_to target.
    route: tuple[str, ...] = ()
    controlling_sector: str = ""
    # Training-event flags: an emergency lights up station alerts; a failed
    # radio makes the aircraft stop accepting pilot commands.
    emergency: bool = False
    radio_failed: bool = False

    def __post_init__(self):
        if not self.callsign:
            raise ValueError("callsign must be non-empty")
        if not 0.0 <= self.heading_deg < 360.0:
            raise ValueError("heading_deg must be in [0, 360)")
        if self.ground_speed_kt < 0.0:
            raise ValueError("ground_speed_kt must be >= 0")
        if self.cleared_heading_deg is not None and not 0.0 <= self.cleared_heading_deg < 360.0:
            raise ValueError("cleared_heading_deg must be in [0, 360)")
        if self.cleared_alt_ft is not None and self.cleared_alt_ft < 0.0:
            raise ValueError("cleared_alt_ft must be >= 0")
        if self.cleared_speed_kt is not None and self.cleared_speed_kt < 0.0:
            raise ValueError("cleared_speed_kt must be >= 0")


class CommandVerb(Enum):
    FLY_HEADING = "FH"
    CLIMB_TO = "C"
    DESCEND_TO = "D"
    SPEED = "SPD"
    DIRECT_TO = "DCT"


@dataclass(frozen=True)
class PilotCommand:
    callsign: str
    verb: CommandVerb
    value: float | str
    issued_by: str = ""


@dataclass(frozen=True)
class SeparationMinima:
    lateral_nm: float = 5.0
    vertical_ft: float = 1000.0

    def __post_init__(self):
        if self.lateral_nm <= 0.0 or self.vertical_ft <= 0.0:
            raise ValueError("separation minima must be strictly positive")


@dataclass(frozen=True)
class SeparationEvent:
    first: str
    second: str
    lateral_nm: float
    vertical_ft: float
    tick_index: int = 0

    def __post_init__(self):
        if self.first > self.second:
            raise ValueError("callsign pair must be ordered lexicographically")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.first, self.second)


@dataclass(frozen=True)
class ScheduledEntry:
    """One traffic-sample row: an aircraft that enters the exercise later."""

    callsign: str
    entry_tick: int
    position: Position
    heading_deg: float
    ground_speed_kt: float
    route: tuple[str, ...] = ()
    controlling_sector: str = ""

    def __post_init__(self):
        if self.entry_tick < 0:
            raise ValueError("entry_tick must be >= 0")
        if not 0.0 <= self.heading_deg < 360.0:
            raise ValueError("heading_deg must be in [0, 360)")
        if self.ground_speed_kt < 0.0:
            raise ValueError("ground_speed_kt must be >= 0")


@dataclass(frozen=True)
class WorldState:
    clock: SimClock = field(default_factory=SimClock)
    aircraft: tuple[AircraftState, ...] = ()
    pending_spawns: tuple[ScheduledEntry, ...] = ()
    waypoints: Mapping[str, Position] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for cs in [a.callsign for a in self.aircraft] + [e.callsign for e in self.pending_spawns]:
            if cs in seen:
                raise ValueError(f"duplicate callsign {cs!r} in world")
            seen.add(cs)

    def find(self, callsign: str) -> Optional[AircraftState]:
        for a in self.aircraft:
            if a.callsign == callsign:
                return a
        return None


def _spawn_to_aircraft(entry: ScheduledEntry) -> AircraftState:
    direct_to = entry.route[0] if entry.route else None
    return AircraftState(
        callsign=entry.callsign,
        position=entry.position,
        heading_deg=entry.heading_deg,
        ground_speed_kt=entry.ground_speed_kt,
        direct_to=direct_to,
        route=entry.route[1:] if entry.route else (),
        controlling_sector=entry.controlling_sector,
    )


def _turn_step(current: float, target: float, max_step: float) -> float:
    """One tick of turning toward target, shorter way; 180-degree ties go right."""
    delta = math.fmod(target - current, 360.0)
    if delta < 0.0:
        delta += 360.0
    if delta > 180.0:
        delta -= 360.0
    # delta is now in (-180, 180]; +180 stays a right turn.
    if abs(delta) <= max_step:
        return target
    return normalize_heading(current + math.copysign(max_step, delta))


def _step_aircraft(a: AircraftState, dt: float, waypoints: Mapping[str, Position]) -> AircraftState:
    old_heading = a.heading_deg

    # Lateral guidance: explicit heading wins; otherwise steer at the
    # direct-to fix.
    target_heading = a.cleared_heading_deg
    if target_heading is None and a.direct_to is not None:
        fix = waypoints.get(a.direct_to)
        if fix is not None:
            target_heading = a.position.bearing_to(fix)
    new_heading = old_heading
    if target_heading is not None:
        new_heading = _turn_step(old_heading, target_heading, TURN_RATE_DEG_PER_S * dt)

    # Vertical: move toward the cleared altitude, clamped at the target.
    alt = a.position.alt_ft
    vrate = 0.0
    if a.cleared_alt_ft is not None and a.cleared_alt_ft != alt:
        diff = a.cleared_alt_ft - alt
        rate_fpm = CLIMB_RATE_FPM if diff > 0 else DESCENT_RATE_FPM
        step = min(abs(diff), rate_fpm / 60.0 * dt)
        alt += math.copysign(step, diff)
        vrate = math.copysign(step / dt * 60.0, diff)

    # Speed: 1 kt/s toward the cleared speed, clamped.
    speed = a.ground_speed_kt
    if a.cleared_speed_kt is not None and a.cleared_speed_kt != speed:
        diff = a.cleared_speed_kt - speed
        step = min(abs(diff), SPEED_CHANGE_KT_PER_S * dt)
        speed += math.copysign(step, diff)

    # Translate along the pre-turn heading at the updated speed.
    dist_nm = speed * dt / 3600.0
    rad = math.radians(old_heading)
    pos = Position(
        x_nm=a.position.x_nm + dist_nm * math.sin(rad),
        y_nm=a.position.y_nm + dist_nm * math.cos(rad),
        alt_ft=alt,
    )

    direct_to = a.direct_to
    route = a.route
    if direct_to is not None:
        fix = waypoints.get(direct_to)
        if fix is not None and pos.lateral_distance_to(fix) <= WAYPOINT_CAPTURE_NM:
            direct_to = route[0] if route else None
            route = route[1:]

    return replace(
        a,
        position=pos,
        heading_deg=new_heading,
        ground_speed_kt=speed,
        vertical_rate_fpm=vrate,
        direct_to=direct_to,
        route=route,
    )


def step_world(
    world: WorldState, minima: SeparationMinima
) -> tuple[WorldState, list[SeparationEvent]]:
    """Advance the world one tick; returns the new world and any new conflicts.

    Due scheduled entries (entry_tick <= current tick) enter at their
    initial position and move with everyone else in the same tick.
    """
    now = world.clock.tick_index
    dt = world.clock.tick_seconds

    due = [e for e in world.pending_spawns if e.entry_tick <= now]
    pending = tuple(e for e in world.pending_spawns if e.entry_tick > now)
    aircraft = list(world.aircraft) + [_spawn_to_aircraft(e) for e in due]

    moved = tuple(_step_aircraft(a, dt, world.waypoints) for a in aircraft)
    clock = world.clock.advanced()
    events = detect_conflicts(moved, minima, tick_index=clock.tick_index)
    return replace(world, clock=clock, aircraft=moved, pending_spawns=pending), events


def detect_conflicts(
    aircraft: Iterable[AircraftState],
    minima: SeparationMinima,
    tick_index: int = 0,
) -> list[SeparationEvent]:
    """All unordered pairs strictly inside both minima, sorted by callsign pair.

    A pair at exactly the minima is legally separated.  Uses a uniform
    grid keyed on the lateral minimum so only neighbouring cells are
    compared.
    """
    items = list(aircraft)
    cell = minima.lateral_nm
    grid: dict[tuple[int, int], list[AircraftState]] = {}
    for a in items:
        key = (math.floor(a.position.x_nm / cell), math.floor(a.position.y_nm / cell))
        grid.setdefault(key, []).append(a)

    events = []
    for (cx, cy), bucket in grid.items():
        for a in bucket:
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for b in grid.get((cx + dx, cy + dy), ()):
                        if a.callsign >= b.callsign:
                            continue
                        vert = abs(a.position.alt_ft - b.position.alt_ft)
                        if vert >= minima.vertical_ft:
                            continue
                        lat = a.position.lateral_distance_to(b.position)
                        if lat >= minima.lateral_nm:
                            continue
                        events.append(
                            SeparationEvent(
                                first=a.callsign,
                                second=b.callsign,
                                lateral_nm=lat,
                                vertical_ft=vert,
                                tick_index=tick_index,
                            )
                        )
    events.sort(key=lambda e: e.pair)
    return events


def apply_pilot_command(world: WorldState, cmd: PilotCommand) -> WorldState:
    """Set the cleared-target field named by the command verb.

    Kinematic state is untouched until the next step.  FLY_HEADING and
    DIRECT_TO are mutually exclusive guidance modes: setting one clears
    the other.
    """
    target = world.find(cmd.callsign)
    if target is None:
        raise UnknownCallsignError(cmd.callsign)
    if target.radio_failed:
        raise CommandDomainError(f"{cmd.callsign} is not responding (radio failure)")

    if cmd.verb is CommandVerb.FLY_HEADING:
        updated = replace(
            target, cleared_heading_deg=float(cmd.value), direct_to=None
        )
    elif cmd.verb in (CommandVerb.CLIMB_TO, CommandVerb.DESCEND_TO):
        updated = replace(target, cleared_alt_ft=float(cmd.value))
    elif cmd.verb is CommandVerb.SPEED:
        updated = replace(target, cleared_speed_kt=float(cmd.value))
    elif cmd.verb is CommandVerb.DIRECT_TO:
        name = str(cmd.value)
        if name not in world.waypoints:
            raise UnknownWaypointError(name)
        route = target.route
        if name in route:
            route = route[route.index(name) + 1 :]
        updated = replace(target, direct_to=name, cleared_heading_deg=None, route=route)
    else:  # pragma: no cover - verb enum is closed
        raise ValueError(f"unhandled verb {cmd.verb}")

    aircraft = tuple(updated if a.callsign == cmd.callsign else a for a in world.aircraft)
    return replace(world, aircraft=aircraft)


_CALLSIGN_RE = re.compile(r"^[A-Z0-9]{2,}$")
_INT_RE = re.compile(r"^\d+$")


def parse_pilot_command(
    text: str, known_waypoints: Collection[str], issued_by: str = ""
) -> PilotCommand:
    """Parse console input: ``<CALLSIGN> (FH <0-359> | C <ft> | D <ft> | SPD <kt> | DCT <fix>)``.

    Case-insensitive, fields separated by single spaces.
    """
    tokens = text.strip().split(" ")
    if len(tokens) != 3 or any(not t for t in tokens):
        raise CommandSyntaxError(f"expected '<CALLSIGN> <VERB> <ARG>', got {text!r}")
    callsign, verb_txt, arg = tokens[0].upper(), tokens[1].upper(), tokens[2]
    if not _CALLSIGN_RE.match(callsign):
        raise CommandSyntaxError(f"bad callsign {tokens[0]!r}")
    try:
        verb = CommandVerb(verb_txt)
    except ValueError:
        raise CommandSyntaxError(f"unknown verb {tokens[1]!r}") from None

    if verb is CommandVerb.DIRECT_TO:
        fix = arg.upper()
        if fix not in known_waypoints:
            raise CommandDomainError(f"waypoint {fix!r} is not in this exercise")
        return PilotCommand(callsign, verb, fix, issued_by)

    if not _INT_RE.match(arg):
        raise CommandSyntaxError(f"argument {arg!r} is not an unsigned integer")
    value = int(arg)
    if verb is CommandVerb.FLY_HEADING and not 0 <= value <= 359:
        raise CommandDomainError(f"heading {value} outside [0, 360)")
    return PilotCommand(callsign, verb, float(value), issued_by)


# Training-event effects, applied by the session host when a scripted or
# injected event fires.  Unknown callsigns are the caller's problem.

def declare_emergency(world: WorldState, callsign: str) -> WorldState:
    return _mutate_aircraft(world, callsign, lambda a: replace(a, emergency=True))


def fail_radio(world: WorldState, callsign: str) -> WorldState:
    return _mutate_aircraft(world, callsign, lambda a: replace(a, radio_failed=True))


def go_around(world: WorldState, callsign: str) -> WorldState:
    """Missed approach: break off the approach fix and climb 3000 ft."""

    def apply(a: AircraftState) -> AircraftState:
        return replace(a, direct_to=None, cleared_alt_ft=a.position.alt_ft + 3000.0)

    return _mutate_aircraft(world, callsign, apply)


def _mutate_aircraft(world, callsign, fn) -> WorldState:
    if world.find(callsign) is None:
        raise UnknownCallsignError(callsign)
    aircraft = tuple(fn(a) if a.callsign == callsign else a for a in world.aircraft)
    return replace(world, aircraft=aircraft)


# --- canonical digests ---------------------------------------------------

def canon_num(x: float) -> str:
    """Fixed 6-decimal rendering; negative zero collapses to zero."""
    s = format(float(x), f".{_CANON_DECIMALS}f")
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def _canon_opt(x: Optional[float]) -> str:
    return "" if x is None else canon_num(x)


def _canon_aircraft(a: AircraftState) -> list:
    return [
        a.callsign,
        canon_num(a.position.x_nm),
        canon_num(a.position.y_nm),
        canon_num(a.position.alt_ft),
        canon_num(a.heading_deg),
        canon_num(a.ground_speed_kt),
        canon_num(a.vertical_rate_fpm),
        _canon_opt(a.cleared_heading_deg),
        _canon_opt(a.cleared_alt_ft),
        _canon_opt(a.cleared_speed_kt),
        a.direct_to or "",
        list(a.route),
        a.controlling_sector,
        int(a.emergency),
        int(a.radio_failed),
    ]


def _sha256(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def world_digest(world: WorldState) -> str:
    """Canonical hash of the complete world value.

    Aircraft are sorted by callsign, so construction order never matters;
    numbers are rendered at fixed precision, so only differences beyond
    the canonical precision change the digest.
    """
    return _sha256(
        {
            "clock": [world.clock.tick_index, canon_num(world.clock.tick_seconds)],
            "aircraft": sorted(
                (_canon_aircraft(a) for a in world.aircraft), key=lambda r: r[0]
            ),
            "pending": sorted(
                (
                    [
                        e.callsign,
                        e.entry_tick,
                        canon_num(e.position.x_nm),
                        canon_num(e.position.y_nm),
                        canon_num(e.position.alt_ft),
                        canon_num(e.heading_deg),
                        canon_num(e.ground_speed_kt),
                        list(e.route),
                        e.controlling_sector,
                    ]
                    for e in world.pending_spawns
                ),
                key=lambda r: r[0],
            ),
            "waypoints": sorted(
                [name, canon_num(p.x_nm), canon_num(p.y_nm)]
                for name, p in world.waypoints.items()
            ),
        }
    )
