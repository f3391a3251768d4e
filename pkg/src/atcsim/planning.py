"""Session and rotation planning for training courses.

A course roster is split into sessions of bounded size; within a session,
students rotate through controller, coordinator, and pilot seats in timed
slots so everyone accumulates on-position practice time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MIN_GROUP = 3  # smallest working group: controller, coordinator, pilot
SLOT_MIN_S = 1200.0
SLOT_MAX_S = 1800.0
DEFAULT_DURATION_S = 3600.0
DEFAULT_CONTROLLER_STATIONS = 2


@dataclass(frozen=True)
class RotationSlot:
    slot_index: int
    start_s: float
    end_s: float
    # (seat, student) pairs in deterministic order; seats are "C<i>" for a
    # controller, "C<i>-COORD" for its coordinator, "P<k>" for a pilot desk.
    assignments: tuple[tuple[str, str], ...]

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s

    def assignment_map(self) -> dict[str, str]:
        return dict(self.assignments)

    def seated_students(self) -> list[str]:
        return [student for _, student in self.assignments]


@dataclass(frozen=True)
class RotationPlan:
    slots: tuple[RotationSlot, ...]
    # True when the slot/station budget cannot give every student the
    # controller seat; the schedule is still the best-effort assignment.
    infeasible: bool

    def __iter__(self):
        return iter(self.slots)

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class PlannedSession:
    session_index: int  # 1-based, matches operator-facing tables
    students: tuple[str, ...]
    rotation: RotationPlan


@dataclass(frozen=True)
class SessionPlan:
    session_count: int
    sessions: tuple[PlannedSession, ...]


def _schedule_group(
    students: tuple[str, ...], duration_s: float, controller_stations: int
) -> RotationPlan:
    group = len(students)
    n_slots = max(1, math.ceil(group / (2 * controller_stations)))
    slot_len = min(max(duration_s / n_slots, SLOT_MIN_S), SLOT_MAX_S)

    times_controlled = {s: 0 for s in students}
    times_on_position = {s: 0 for s in students}
    roster_index = {s: i for i, s in enumerate(students)}

    slots = []
    start = 0.0
    for slot_index in range(n_slots):
        if start >= duration_s:
            break  # slots never extend past the exercise
        end = min(start + slot_len, duration_s)

        order = sorted(
            students,
            key=lambda s: (times_controlled[s], times_on_position[s], roster_index[s]),
        )
        stations = min(controller_stations, group)
        controllers = order[:stations]
        coordinators = order[stations : min(2 * stations, group)]
        seated = set(controllers) | set(coordinators)
        pilots = [s for s in students if s not in seated]

        assignments = []
        for i, s in enumerate(controllers, start=1):
            assignments.append((f"C{i}", s))
        for i, s in enumerate(coordinators, start=1):
            assignments.append((f"C{i}-COORD", s))
        for k, s in enumerate(pilots, start=1):
            assignments.append((f"P{k}", s))

        for s in controllers:
            times_controlled[s] += 1
            times_on_position[s] += 1
        for s in coordinators:
            times_on_position[s] += 1

        slots.append(RotationSlot(slot_index, start, end, tuple(assignments)))
        start = end

    infeasible = any(times_controlled[s] == 0 for s in students)
    return RotationPlan(slots=tuple(slots), infeasible=infeasible)


def rotation_schedule(
    group_size: int,
    duration_s: float,
    controller_stations: int,
    student_ids: tuple[str, ...] | None = None,
) -> RotationPlan:
    """Slot plan for one session group.

    Slot length is duration divided by the slot count, clamped to the
    20-30 minute practice window; slots never extend past duration_s.
    """
    if group_size < MIN_GROUP:
        raise ValueError(f"group size {group_size} below minimum working group {MIN_GROUP}")
    if controller_stations < 1:
        raise ValueError("need at least one controller station")
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    if student_ids is None:
        student_ids = tuple(f"S{i + 1:02d}" for i in range(group_size))
    elif len(student_ids) != group_size:
        raise ValueError("student_ids length must equal group_size")
    return _schedule_group(student_ids, duration_s, controller_stations)


def plan_sessions(
    student_ids,
    session_capacity: int,
    duration_s: float = DEFAULT_DURATION_S,
    controller_stations: int = DEFAULT_CONTROLLER_STATIONS,
) -> SessionPlan:
    """Split a roster into sessions of at most session_capacity students.

    Students are assigned in roster order; the last session may be smaller.
    An empty roster plans zero sessions.
    """
    students = tuple(student_ids)
    if session_capacity < MIN_GROUP:
        raise ValueError(
            f"session capacity {session_capacity} below minimum working group {MIN_GROUP}"
        )
    if len(set(students)) != len(students):
        raise ValueError("duplicate student ids in roster")
    if not students:
        return SessionPlan(session_count=0, sessions=())

    sessions = []
    for i in range(0, len(students), session_capacity):
        group = students[i : i + session_capacity]
        sessions.append(
            PlannedSession(
                session_index=len(sessions) + 1,
                students=group,
                rotation=_schedule_group(group, duration_s, controller_stations),
            )
        )
    return SessionPlan(session_count=len(sessions), sessions=tuple(sessions))
