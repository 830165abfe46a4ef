"""The execution loop: logical instants, event selection and tracing."""

from __future__ import annotations

import queue
import time
from collections import Counter, deque
from dataclasses import dataclass, replace as dc_replace
from typing import Callable, Optional

from . import machine as mc
from .clocks import Clocks
from .envio import (
    EnvScript, ScriptEntry, TraceEvent, observational_trace, symbol_payload,
)
from .events import (
    EPSILON, Done, ExternalAssign, Input, Step, apply_event, cancel_orphans, unlocks,
)
from .sync import (
    DEFAULT_STEP_BUDGET, Executed, GlobalState, NodeErrored, OutputSent,
    SignalEmitted, sync_normalize,
)
from .tree import find, is_error, is_true
from .values import BEATS, format_number, format_value

__all__ = [
    "RunConfig", "InstantBudgetExceeded", "Scheduler", "run", "observational_trace",
    "outcome",
]


@dataclass
class RunConfig:
    mode: str = "virtual"  # or "realtime"
    step_budget: int = DEFAULT_STEP_BUDGET
    max_instants: int = 100_000
    strict_await_zero: bool = False
    profile: bool = False  # add per-instant "exec" lines with opcode counts

    def __post_init__(self):
        if self.mode not in ("virtual", "realtime"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.step_budget <= 0 or self.max_instants <= 0:
            raise ValueError("budgets must be positive")


class InstantBudgetExceeded(RuntimeError):
    def __init__(self, trace):
        self.trace = trace
        super().__init__(f"instant budget exhausted after {len(trace)} trace events")


class Scheduler:
    """Runs one machine against one environment script.

    In real-time mode, events may also be posted from other threads with
    :meth:`post`; they are dated by the host clock on arrival.
    """

    def __init__(self, m: mc.Machine, script: Optional[EnvScript] = None,
                 cfg: Optional[RunConfig] = None, observer: Optional[Callable] = None):
        self.m = m
        self.observer = observer  # called with the scheduler at each instant's fixpoint
        self.cfg = cfg or RunConfig()
        script = script or EnvScript()
        self.clocks = Clocks(script.tempo)
        self.script = deque(script.entries)
        self.inbox: queue.Queue = queue.Queue()
        self.g = GlobalState.initial(m)
        self.k = 0
        self.date = 0.0
        self.trace: list[TraceEvent] = []
        self._t0 = None

    # -- tracing -------------------------------------------------------------

    def record(self, kind, payload=""):
        self.trace.append(TraceEvent(self.k, self.date, self.clocks.now(BEATS, self.date),
                                     kind, payload))

    def _record_effects(self, effects):
        counts = Counter()
        for e in effects:
            if isinstance(e, Executed):
                counts[e.opcode] += 1
            elif isinstance(e, OutputSent):
                self.record("send", symbol_payload(e.symbol))
            elif isinstance(e, SignalEmitted):
                self.record("emit", e.signal)
            elif isinstance(e, NodeErrored):
                self.record("error", f"{self.m.name(e.loc)}: {e.reason}")
        if self.cfg.profile and counts:
            self.record("exec", " ".join(f"{op}={n}" for op, n in sorted(counts.items())))

    # -- environment ---------------------------------------------------------

    def post(self, action: str, name: str = "", value=None) -> None:
        """Thread-safe delivery of a live environment event (real-time mode)."""
        self.inbox.put((action, name, value))

    def _elapsed(self):
        return time.monotonic() - self._t0

    def _next_event(self):
        """Earliest pending ``(date, entry-or-notification)``, or None.

        Script entries win ties against clock notifications.
        """
        while True:
            head = self.script[0] if self.script else None
            note = self.clocks.peek()
            cands = []
            if head is not None:
                cands.append((head.date, 0, head))
            if note is not None:
                cands.append((note[0], 1, note[1]))
            if self.cfg.mode == "virtual":
                if not cands:
                    return None
                date, which, item = min(cands, key=lambda c: c[:2])
                if which == 0:
                    self.script.popleft()
                else:
                    self.clocks.pop()
                return max(date, self.date), item
            # real time: wait for the earliest date, or a live event
            due = min((c[0] for c in cands), default=None)
            timeout = None if due is None else max(0.0, due - self._elapsed())
            if due is None and self.inbox.empty() and not self._live:
                return None
            try:
                action, name, value = self.inbox.get(timeout=timeout if due is not None else 0.05)
            except queue.Empty:
                if due is None:
                    continue
                date, which, item = min(cands, key=lambda c: c[:2])
                if which == 0:
                    self.script.popleft()
                else:
                    self.clocks.pop()
                return max(date, self.date), item
            return max(self._elapsed(), self.date), ScriptEntry(0.0, action, name, value)

    # -- main loop -----------------------------------------------------------

    def execute(self, live: bool = False) -> list[TraceEvent]:
        """Run to termination and return the trace.

        ``live`` keeps a real-time run waiting for posted events when nothing
        else is pending; use :meth:`post` with action ``"halt"`` to stop it.
        """
        m, cfg, clocks = self.m, self.cfg, self.clocks
        self._live = live
        self._t0 = time.monotonic()
        while True:
            self.g, effects = sync_normalize(m, self.g, clocks, self.date,
                                             cfg.step_budget, cfg.strict_await_zero)
            self._record_effects(effects)
            cancel_orphans(self.g.tree, clocks)
            if self.observer is not None:
                self.observer(self)
            tree = self.g.tree
            if is_true(tree):
                self.record("terminated", "true")
                break
            if is_error(tree):
                self.record("terminated", "error")
                break
            if self.k + 1 >= cfg.max_instants:
                raise InstantBudgetExceeded(self.trace)

            snap = clocks.snapshot(self.date)
            store = self.g.store
            if unlocks(m, tree, EPSILON, store, snap):
                self.k += 1
                self.record("epsilon")
                self._advance(EPSILON, store)
                continue

            nxt = self._next_event()
            if nxt is None:
                self.record("terminated", "quiescent")
                break
            date, item = nxt
            if isinstance(item, ScriptEntry) and item.action == "halt":
                self.record("terminated", "quiescent")
                break
            self.k += 1
            self.date = date
            event = None
            if isinstance(item, ScriptEntry):
                if item.action == "input":
                    event = Input(item.name)
                    hit = unlocks(m, tree, event, store, clocks.snapshot(date))
                    self.record("input" if hit else "ignore", item.name)
                elif item.action == "set":
                    event = ExternalAssign(item.name, item.value)
                    self.record("set", f"${item.name} {format_value(item.value)}")
                elif item.action == "tempo":
                    clocks.set_tempo(item.value, date)
                    self.record("tempo", _bpm_text(item.value))
                else:
                    raise ValueError(f"unknown environment action {item.action!r}")
            else:
                event = Done(item.owner) if item.kind == "done" else Step(item.owner)
                node = find(tree, item.owner)
                where = self.m.name(node.loc) if node is not None and hasattr(node, "loc") else "-"
                self.record(item.kind, f"{item.owner} {where}")
            new_store = store
            if isinstance(event, ExternalAssign):
                new_store = new_store.assign(event.name, event.value)
            self._advance(event, store, new_store.reset_signals())
        return self.trace

    def _advance(self, event, store, new_store=None):
        """Apply ``event`` against ``store``; the next instant starts with ``new_store``."""
        g = self.g
        tree = g.tree
        if event is not None:
            tree = apply_event(self.m, tree, event, store, g.ids, self.clocks, self.date)
            if is_error(tree) and not is_error(g.tree):
                self.record("error", f"{event} raised an error")
        self.g = dc_replace(g, tree=tree, store=store if new_store is None else new_store)


def _bpm_text(bpm) -> str:
    return str(int(bpm)) if float(bpm).is_integer() else format_number(bpm)


def run(m: mc.Machine, script: Optional[EnvScript] = None,
        cfg: Optional[RunConfig] = None) -> list[TraceEvent]:
    """Execute ``m`` against ``script`` and return the full trace."""
    return Scheduler(m, script, cfg).execute()


def outcome(trace) -> Optional[str]:
    """The payload of the final ``terminated`` event: true, error or quiescent."""
    for e in reversed(trace):
        if e.kind == "terminated":
            return e.payload
    return None
