"""Multiclock services: wall seconds, tempo-driven beats and timers.

Each clock keeps its own ordered queue of deadlines expressed in its own
coordinate (seconds for the wall clock, beat positions for the tempo clock).
Beat deadlines therefore follow tempo changes without rescheduling: their
wall date is derived from the tempo map whenever the queue is consulted.
"""

from __future__ import annotations

import bisect
import heapq
import itertools
from dataclasses import dataclass
from typing import Optional

from .values import Duration, UNITS


class TempoMap:
    """Piecewise-constant tempo; beat position is its running integral."""

    def __init__(self, bpm: float = 60.0):
        if not bpm > 0:
            raise ValueError(f"tempo must be positive, got {bpm}")
        self.dates = [0.0]
        self.bpms = [float(bpm)]
        self.beats = [0.0]  # beat position at each change

    def set(self, bpm: float, at: float) -> None:
        if not bpm > 0:
            raise ValueError(f"tempo must be positive, got {bpm}")
        if at < self.dates[-1]:
            raise ValueError(f"tempo change at {at} precedes previous change at {self.dates[-1]}")
        if at == self.dates[-1]:
            self.bpms[-1] = float(bpm)
            return
        self.beats.append(self.beat_at(at))
        self.dates.append(float(at))
        self.bpms.append(float(bpm))

    def bpm_at(self, wall: float) -> float:
        return self.bpms[bisect.bisect_right(self.dates, wall) - 1]

    def beat_at(self, wall: float) -> float:
        i = max(bisect.bisect_right(self.dates, wall) - 1, 0)
        return self.beats[i] + (wall - self.dates[i]) * self.bpms[i] / 60.0

    def wall_at(self, beat: float) -> float:
        i = max(bisect.bisect_right(self.beats, beat) - 1, 0)
        return self.dates[i] + (beat - self.beats[i]) * 60.0 / self.bpms[i]


@dataclass(frozen=True)
class Notification:
    kind: str  # "done" | "step"
    owner: int


@dataclass
class _Entry:
    deadline: float  # in the clock's own coordinate
    seq: int
    note: Notification
    live: bool = True

    def __lt__(self, other):
        return (self.deadline, self.seq) < (other.deadline, other.seq)


@dataclass
class _Recurrence:
    period: Duration
    tick: _Entry
    done: _Entry


class Snapshot:
    """Clock state frozen at one wall date, used to evaluate expressions."""

    def __init__(self, tempo: TempoMap, wall: float):
        self.wall = wall
        self.bpm = tempo.bpm_at(wall)
        self.beat = tempo.beat_at(wall)

    def seconds(self, d: Duration) -> float:
        if d.clock == "wall":
            return d.ticks
        return d.ticks * 60.0 / self.bpm


class Clocks:
    def __init__(self, bpm: float = 60.0):
        self.tempo = TempoMap(bpm)
        self.queues = {"wall": [], "tempo": []}
        self._seq = itertools.count()
        self._owned: dict[int, list[_Entry]] = {}
        self._recurring: dict[int, _Recurrence] = {}

    # -- dates ---------------------------------------------------------------

    def now(self, unit: str, wall: float) -> float:
        if unit not in UNITS:
            raise ValueError(f"unknown time unit {unit!r}")
        clock, scale = UNITS[unit]
        ticks = wall if clock == "wall" else self.tempo.beat_at(wall)
        return ticks / scale

    def snapshot(self, wall: float) -> Snapshot:
        return Snapshot(self.tempo, wall)

    def to_seconds(self, d: Duration, at: float) -> float:
        return self.snapshot(at).seconds(d)

    def compare(self, d1: Duration, d2: Duration, at: float) -> int:
        """-1, 0 or 1 as ``d1`` is shorter, equal or longer than ``d2`` at ``at``."""
        a, b = self.to_seconds(d1, at), self.to_seconds(d2, at)
        return (a > b) - (a < b)

    def set_tempo(self, bpm: float, at: float) -> None:
        self.tempo.set(bpm, at)

    def wall_of(self, clock: str, deadline: float) -> float:
        return deadline if clock == "wall" else self.tempo.wall_at(deadline)

    # -- timers --------------------------------------------------------------

    def _push(self, clock, deadline, note) -> _Entry:
        entry = _Entry(deadline, next(self._seq), note)
        heapq.heappush(self.queues[clock], entry)
        self._owned.setdefault(note.owner, []).append(entry)
        return entry

    def _ticks_at(self, clock, wall) -> float:
        return wall if clock == "wall" else self.tempo.beat_at(wall)

    def start_timer(self, owner: int, d: Duration, at: float) -> None:
        if not d.magnitude > 0:
            raise ValueError("timer delay must be positive")
        self._push(d.clock, self._ticks_at(d.clock, at) + d.ticks, Notification("done", owner))

    def start_recursive_timer(self, owner: int, period: Duration, expiry: Duration, at: float) -> None:
        if not (period.magnitude > 0 and expiry.magnitude > 0):
            raise ValueError("recursive timer period and expiry must be positive")
        # done is queued first so that a tick falling on the expiry date loses the tie
        done = self._push(expiry.clock, self._ticks_at(expiry.clock, at) + expiry.ticks,
                          Notification("done", owner))
        tick = self._push(period.clock, self._ticks_at(period.clock, at) + period.ticks,
                          Notification("step", owner))
        self._recurring[owner] = _Recurrence(period, tick, done)

    def cancel(self, owner: int) -> None:
        for entry in self._owned.pop(owner, ()):
            entry.live = False
        self._recurring.pop(owner, None)

    def owners(self) -> set:
        return {o for o, es in self._owned.items() if any(e.live for e in es)}

    def _head(self, clock) -> Optional[_Entry]:
        q = self.queues[clock]
        while q and not q[0].live:
            heapq.heappop(q)
        return q[0] if q else None

    def _earliest(self):
        best = None
        for clock in ("wall", "tempo"):
            e = self._head(clock)
            if e is None:
                continue
            key = (self.wall_of(clock, e.deadline), e.seq)
            if best is None or key < best[0]:
                best = (key, clock, e)
        return best

    def peek(self) -> Optional[tuple[float, Notification]]:
        best = self._earliest()
        if best is None:
            return None
        (due, _), _, e = best
        return due, e.note

    def pop(self) -> Optional[tuple[float, Notification]]:
        """Remove and return the earliest ``(wall due date, notification)``."""
        best = self._earliest()
        if best is None:
            return None
        (due, _), clock, e = best
        heapq.heappop(self.queues[clock])
        e.live = False
        owner = e.note.owner
        rec = self._recurring.get(owner)
        if rec is not None:
            if e is rec.done:
                self.cancel(owner)
            elif e is rec.tick:
                rec.tick = self._push(rec.period.clock, e.deadline + rec.period.ticks,
                                      Notification("step", owner))
        if owner in self._owned:
            self._owned[owner] = [x for x in self._owned[owner] if x.live]
            if not self._owned[owner]:
                del self._owned[owner]
        return due, e.note

    def pending(self) -> list[tuple[float, Notification]]:
        """Every live notification as ``(due, notification)``, in delivery order."""
        out = []
        for clock, q in self.queues.items():
            for e in q:
                if e.live:
                    out.append(((self.wall_of(clock, e.deadline), e.seq), e.note))
        return [(key[0], note) for key, note in sorted(out, key=lambda x: x[0])]
