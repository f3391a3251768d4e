"""Course session splitting and in-session seat rotation."""

from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atcsim.planning import (
    SLOT_MAX_S,
    SLOT_MIN_S,
    plan_sessions,
    rotation_schedule,
)


def controllers_of(slot) -> set[str]:
    return {s for seat, s in slot.assignments if seat.startswith("C") and "-" not in seat}


def on_position_of(slot) -> set[str]:
    return {s for seat, s in slot.assignments if seat.startswith("C")}


def full_rotation_exists(group: int, n_slots: int, stations: int) -> bool:
    """Enumeration oracle: is there any per-slot controller choice that
    puts every student in a controller seat at least once?"""
    students = range(group)
    per_slot = itertools.combinations(students, min(stations, group))
    for choice in itertools.product(list(per_slot), repeat=n_slots):
        if set(itertools.chain.from_iterable(choice)) == set(students):
            return True
    return False


# --- session splitting ------------------------------------------------------

@pytest.mark.parametrize("n, capacity, expected", [(30, 6, 5), (60, 6, 10), (100, 6, 17)])
def test_session_count_examples(n, capacity, expected):
    roster = [f"S{i:03d}" for i in range(n)]
    plan = plan_sessions(roster, capacity)
    assert plan.session_count == expected
    assert len(plan.sessions) == expected


def test_last_session_takes_the_remainder():
    plan = plan_sessions([f"S{i:03d}" for i in range(100)], 6)
    assert [len(s.students) for s in plan.sessions] == [6] * 16 + [4]
    assert plan.sessions[-1].session_index == 17


def test_sessions_keep_roster_order():
    roster = ["ANNA", "BEN", "CARA", "DANI", "EVE", "FAY", "GIL"]
    plan = plan_sessions(roster, 3)
    assert plan.sessions[0].students == ("ANNA", "BEN", "CARA")
    assert plan.sessions[1].students == ("DANI", "EVE", "FAY")
    assert plan.sessions[2].students == ("GIL",)


def test_empty_roster_plans_nothing():
    plan = plan_sessions([], 6)
    assert plan.session_count == 0
    assert plan.sessions == ()


def test_capacity_below_working_group_rejected():
    with pytest.raises(ValueError):
        plan_sessions(["A", "B", "C"], 2)


def test_duplicate_students_rejected():
    with pytest.raises(ValueError):
        plan_sessions(["A", "B", "A"], 6)


@given(
    n=st.integers(min_value=0, max_value=200),
    capacity=st.integers(min_value=3, max_value=12),
)
def test_sessions_partition_the_roster(n, capacity):
    roster = [f"S{i:03d}" for i in range(n)]
    plan = plan_sessions(roster, capacity)
    assert plan.session_count == math.ceil(n / capacity) if n else plan.session_count == 0
    seen = [s for sess in plan.sessions for s in sess.students]
    assert seen == roster
    assert all(len(sess.students) <= capacity for sess in plan.sessions)
    assert [sess.session_index for sess in plan.sessions] == list(
        range(1, plan.session_count + 1)
    )


# --- rotation slots ---------------------------------------------------------

def test_six_students_two_stations_fill_an_hour():
    plan = rotation_schedule(6, 3600.0, 2)
    assert len(plan.slots) == 2
    assert [(s.start_s, s.end_s) for s in plan.slots] == [(0.0, 1800.0), (1800.0, 3600.0)]
    # Per slot: two controllers, two coordinators, two pilots.
    for slot in plan.slots:
        seats = [seat for seat, _ in slot.assignments]
        assert seats == ["C1", "C2", "C1-COORD", "C2-COORD", "P1", "P2"]
    # Everyone gets at least one 30-minute on-position slot.
    budget = {s: 0 for slot in plan.slots for s in slot.seated_students()}
    for slot in plan.slots:
        for s in on_position_of(slot):
            budget[s] += 1
    assert all(v >= 1 for v in budget.values())


def test_three_students_one_station_cannot_rotate_fully():
    plan = rotation_schedule(3, 3600.0, 1)
    assert len(plan.slots) == 2
    assert plan.infeasible
    # Oracle: with 2 slots and 1 station there is no assignment that puts
    # all 3 students in the controller seat.
    assert not full_rotation_exists(3, 2, 1)
    controlled = set().union(*(controllers_of(s) for s in plan.slots))
    assert len(controlled) == 2


def test_four_students_short_exercise_hits_slot_floor():
    plan = rotation_schedule(4, 2400.0, 1)
    assert len(plan.slots) == 2
    assert [s.length_s for s in plan.slots] == [1200.0, 1200.0]


def test_group_of_three_with_three_stations_is_feasible():
    plan = rotation_schedule(3, 1800.0, 3)
    assert not plan.infeasible
    assert controllers_of(plan.slots[0]) == {"S01", "S02", "S03"}


def test_rotation_argument_validation():
    with pytest.raises(ValueError):
        rotation_schedule(2, 3600.0, 1)
    with pytest.raises(ValueError):
        rotation_schedule(3, 0.0, 1)
    with pytest.raises(ValueError):
        rotation_schedule(3, 3600.0, 0)
    with pytest.raises(ValueError):
        rotation_schedule(3, 3600.0, 1, student_ids=("A",))


def test_explicit_student_ids_are_used():
    plan = rotation_schedule(3, 3600.0, 1, student_ids=("KIM", "LEE", "MAX"))
    assert set(plan.slots[0].seated_students()) == {"KIM", "LEE", "MAX"}


rotation_params = st.tuples(
    st.integers(min_value=3, max_value=9),        # group size
    st.integers(min_value=600, max_value=7200),   # duration seconds
    st.integers(min_value=1, max_value=3),        # controller stations
)


@given(params=rotation_params)
@settings(max_examples=200)
def test_rotation_slot_invariants(params):
    group, duration, stations = params
    duration = float(duration)
    plan = rotation_schedule(group, duration, stations)

    assert plan.slots, "at least one slot is always scheduled"
    expected_slots = max(1, math.ceil(group / (2 * stations)))
    assert len(plan.slots) <= expected_slots

    # Contiguous, non-overlapping, within [0, duration].
    assert plan.slots[0].start_s == 0.0
    for prev, cur in zip(plan.slots, plan.slots[1:]):
        assert cur.start_s == prev.end_s
    for slot in plan.slots:
        assert slot.end_s <= duration
        assert slot.length_s > 0.0
        # Clamped practice window, except a final slot cut off by the
        # exercise end.
        if slot.end_s < duration:
            assert SLOT_MIN_S <= slot.length_s <= SLOT_MAX_S
        else:
            assert slot.length_s <= SLOT_MAX_S

    for slot in plan.slots:
        # No student sits two seats in the same slot, nobody from outside.
        seated = slot.seated_students()
        assert len(seated) == len(set(seated)) == group
        # Per station one controller and one coordinator (when group allows).
        seats = [seat for seat, _ in slot.assignments]
        n_ctl = sum(1 for s in seats if s.startswith("C") and "-" not in s)
        assert n_ctl == min(stations, group)


@given(params=rotation_params)
@settings(max_examples=200)
def test_infeasibility_flag_matches_enumeration_oracle(params):
    group, duration, stations = params
    plan = rotation_schedule(group, float(duration), stations)
    n_slots = len(plan.slots)
    assert plan.infeasible == (not full_rotation_exists(group, n_slots, stations))


@given(params=rotation_params)
@settings(max_examples=150)
def test_feasible_plans_rotate_everyone_through_control(params):
    group, duration, stations = params
    plan = rotation_schedule(group, float(duration), stations)
    controlled = set().union(*(controllers_of(s) for s in plan.slots))
    if not plan.infeasible:
        assert len(controlled) == group
    else:
        assert len(controlled) < group
