"""Interpreter for interactive timed machines.

A machine is a table of instructions run under a synchronous model: at each
logical instant every instantaneous instruction runs to a fixpoint, then the
scheduler picks the next event (timer, input, external assignment) and
advances time.
"""

from .clocks import Clocks, TempoMap
from .envio import (
    EnvScript, ScriptEntry, TraceEvent, format_script, observational_trace,
    parse_script, read_trace, write_trace,
)
from .events import EPSILON, Done, ExternalAssign, Input, Step, apply_event, unlocks
from .machine import (
    AssemblyError, Machine, lower_repeat, parse_program, pretty_print, validate,
)
from .safety import (
    CostModel, check as check_safety, compensation_plan, parse_costs,
)
from .scheduler import RunConfig, Scheduler, outcome, run
from .sync import GlobalState, sync_normalize, sync_step
from .tree import normalize
from .values import BEATS, SECONDS, Duration, NotEvaluable, evaluate, parse_expr

__version__ = "0.1.0"
