"""Seating-plan preference scorer.

A problem lists seats (with adjacency and attribute tags), guests, and
weighted preferences on a 3-point scale: adjacency wishes (NextTo), seat
attribute wishes (AttributeIs), and conflict separations (Apart). A plan maps
every guest to a distinct seat; scoring reports which preferences held, the
satisfaction rates of weight-3 (S_high) and weight-1 (S_low) preferences, and
the preference gap PG = S_high - S_low.
"""

from __future__ import annotations

from dataclasses import dataclass, field

WEIGHT_LOW = 1
WEIGHT_HIGH = 3
VALID_WEIGHTS = (1, 2, 3)


@dataclass(frozen=True)
class Seat:
    name: str
    attributes: frozenset = frozenset()


def _check_weight(weight: int) -> None:
    if weight not in VALID_WEIGHTS:
        raise ValueError(f"weight must be one of {VALID_WEIGHTS}, "
                         f"got {weight}")


@dataclass(frozen=True)
class NextTo:
    """Guest wants to sit adjacent to another guest."""
    guest: str
    other: str
    weight: int

    def __post_init__(self):
        _check_weight(self.weight)


@dataclass(frozen=True)
class AttributeIs:
    """Guest wants a seat carrying an attribute tag (e.g. "window")."""
    guest: str
    attribute: str
    weight: int

    def __post_init__(self):
        _check_weight(self.weight)


@dataclass(frozen=True)
class Apart:
    """Conflict: the two guests must not sit adjacent."""
    guest: str
    other: str
    weight: int

    def __post_init__(self):
        _check_weight(self.weight)


@dataclass
class SeatingProblem:
    seats: list[Seat]
    adjacency: set  # of frozenset({seat_name, seat_name}) pairs
    guests: list[str]
    preferences: list = field(default_factory=list)

    def __post_init__(self):
        names = [s.name for s in self.seats]
        if len(set(names)) != len(names):
            raise ValueError("seat names must be unique")
        if len(set(self.guests)) != len(self.guests):
            raise ValueError("guest names must be unique")
        if len(self.guests) > len(self.seats):
            raise ValueError(f"{len(self.guests)} guests cannot fit "
                             f"{len(self.seats)} seats")
        name_set = set(names)
        guest_set = set(self.guests)
        for pair in self.adjacency:
            if not set(pair) <= name_set:
                raise ValueError(f"adjacency {set(pair)} references "
                                 f"unknown seats")
        for pref in self.preferences:
            if pref.guest not in guest_set:
                raise ValueError(f"preference references unknown guest "
                                 f"{pref.guest!r}")
            other = getattr(pref, "other", None)
            if other is not None and other not in guest_set:
                raise ValueError(f"preference references unknown guest "
                                 f"{other!r}")

    def seat(self, name: str) -> Seat:
        for s in self.seats:
            if s.name == name:
                return s
        raise KeyError(name)

    def adjacent(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.adjacency


@dataclass(frozen=True)
class PgScore:
    s_high: float | None  # satisfaction rate of weight-3 preferences
    s_low: float | None   # satisfaction rate of weight-1 preferences
    pg: float | None      # S_high - S_low; absent when either side is empty
    satisfied: tuple      # per-preference flags, problem order


def _validate_plan(problem: SeatingProblem, plan: dict) -> None:
    seat_names = {s.name for s in problem.seats}
    missing = [g for g in problem.guests if g not in plan]
    if missing:
        raise ValueError(f"plan leaves guests unassigned: {missing}")
    extra = [g for g in plan if g not in problem.guests]
    if extra:
        raise ValueError(f"plan assigns unknown guests: {extra}")
    for g, s in plan.items():
        if s not in seat_names:
            raise ValueError(f"plan assigns unknown seat {s!r} to {g!r}")
    used = list(plan.values())
    if len(set(used)) != len(used):
        dupes = sorted({s for s in used if used.count(s) > 1})
        raise ValueError(f"plan assigns seats more than once: {dupes}")


def _holds(problem: SeatingProblem, plan: dict, pref) -> bool:
    if isinstance(pref, NextTo):
        return problem.adjacent(plan[pref.guest], plan[pref.other])
    if isinstance(pref, AttributeIs):
        return pref.attribute in problem.seat(plan[pref.guest]).attributes
    if isinstance(pref, Apart):
        return not problem.adjacent(plan[pref.guest], plan[pref.other])
    raise TypeError(f"unknown preference type {type(pref).__name__}")


def score_seating(problem: SeatingProblem, plan: dict) -> PgScore:
    """Evaluate a guest -> seat plan against the problem's preferences.

    S_high / S_low are None when no preference of that weight exists, and PG
    is reported absent (None) unless both are defined.
    """
    _validate_plan(problem, plan)
    satisfied = tuple(_holds(problem, plan, p) for p in problem.preferences)
    high = [ok for p, ok in zip(problem.preferences, satisfied)
            if p.weight == WEIGHT_HIGH]
    low = [ok for p, ok in zip(problem.preferences, satisfied)
           if p.weight == WEIGHT_LOW]
    s_high = sum(high) / len(high) if high else None
    s_low = sum(low) / len(low) if low else None
    pg = s_high - s_low if s_high is not None and s_low is not None else None
    return PgScore(s_high=s_high, s_low=s_low, pg=pg, satisfied=satisfied)


ATTRIBUTE_POOL = ("window", "aisle", "head", "corner")


def random_problem(rng, n_seats: int = 6, n_guests: int | None = None,
                   n_preferences: int = 6) -> SeatingProblem:
    """Random table: ring adjacency plus chords, tagged seats, mixed
    preference kinds with weights drawn from {1, 2, 3}."""
    if n_seats < 2:
        raise ValueError("need at least two seats")
    if n_guests is None:
        n_guests = int(rng.integers(2, n_seats + 1))
    if not 2 <= n_guests <= n_seats:
        raise ValueError(f"n_guests must lie in [2, {n_seats}]")
    seats = [Seat(name=f"s{i}",
                  attributes=frozenset(
                      a for a in ATTRIBUTE_POOL if rng.random() < 0.3))
             for i in range(n_seats)]
    adjacency = {frozenset((f"s{i}", f"s{(i + 1) % n_seats}"))
                 for i in range(n_seats)}
    for _ in range(int(rng.integers(0, n_seats))):
        a, b = rng.choice(n_seats, size=2, replace=False)
        adjacency.add(frozenset((f"s{a}", f"s{b}")))
    guests = [f"g{i}" for i in range(n_guests)]
    prefs = []
    for _ in range(n_preferences):
        weight = int(rng.integers(1, 4))
        kind = rng.integers(0, 3)
        g = guests[rng.integers(0, n_guests)]
        if kind == 2 or n_guests < 2:
            attr = ATTRIBUTE_POOL[rng.integers(0, len(ATTRIBUTE_POOL))]
            prefs.append(AttributeIs(guest=g, attribute=attr, weight=weight))
        else:
            other = g
            while other == g:
                other = guests[rng.integers(0, n_guests)]
            cls = NextTo if kind == 0 else Apart
            prefs.append(cls(guest=g, other=other, weight=weight))
    return SeatingProblem(seats=seats, adjacency=adjacency, guests=guests,
                          preferences=prefs)


# ------------------------------------------------------------- file formats


_PREF_KINDS = {"next_to": NextTo, "attribute": AttributeIs, "apart": Apart}


def problem_from_dict(data: dict) -> SeatingProblem:
    seats = [Seat(name=s["name"],
                  attributes=frozenset(s.get("attributes", ())))
             for s in data["seats"]]
    adjacency = {frozenset(pair) for pair in data.get("adjacency", ())}
    prefs = []
    for p in data.get("preferences", ()):
        kind = p.get("kind")
        if kind not in _PREF_KINDS:
            raise ValueError(f"unknown preference kind {kind!r}")
        args = {k: v for k, v in p.items() if k != "kind"}
        prefs.append(_PREF_KINDS[kind](**args))
    return SeatingProblem(seats=seats, adjacency=adjacency,
                          guests=list(data["guests"]), preferences=prefs)


def problem_to_dict(problem: SeatingProblem) -> dict:
    kinds = {cls: name for name, cls in _PREF_KINDS.items()}
    prefs = []
    for p in problem.preferences:
        row = {"kind": kinds[type(p)], "guest": p.guest, "weight": p.weight}
        if isinstance(p, AttributeIs):
            row["attribute"] = p.attribute
        else:
            row["other"] = p.other
        prefs.append(row)
    return {"seats": [{"name": s.name,
                       "attributes": sorted(s.attributes)}
                      for s in problem.seats],
            "adjacency": sorted(sorted(pair) for pair in problem.adjacency),
            "guests": list(problem.guests),
            "preferences": prefs}


def plan_from_dict(data: dict) -> dict:
    if not isinstance(data, dict) or \
            not all(isinstance(k, str) and isinstance(v, str)
                    for k, v in data.items()):
        raise ValueError("plan must map guest names to seat names")
    return dict(data)
