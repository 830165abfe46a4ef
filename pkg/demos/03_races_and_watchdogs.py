"""
Competition: asap and sustain
=============================

`asap` races several waits; the first one unlocked wins and the others are
dropped (with their timers).  Two winners in the same instant are an error.
`sustain` runs a body under a controller: the body may proceed freely, but
once the controller is unlocked the body is discarded.
"""

from ivm import Scheduler, RunConfig, parse_program, parse_script, write_trace

race = parse_program("""
    .inputs cue
    asap WAIT TIMEOUT
    WAIT: receive cue jump LIVE
    TIMEOUT: await (2 s) jump LATE
    LIVE: send on_cue
    stop
    LATE: send too_late
    stop
""")
for events in ("@1s input cue\n", "@3s input cue\n"):
    print(f"-- {events.strip()}")
    print(write_trace(Scheduler(race, parse_script(events, race.inputs)).execute()), end="")

watchdog = parse_program("""
    .inputs beat
    sustain BODY DOG
    BODY: receive beat jump ECHO
    ECHO: send echo
    if true jump BODY
    DOG: await (3 s) jump QUIT
    QUIT: send watchdog_fired
    stop
""")


def show_timers(s):
    pending = [(round(due, 3), n.kind) for due, n in s.clocks.pending()]
    print(f"   instant {s.k} at t={s.date}: pending timers {pending}")


print("\n-- watchdog")
s = Scheduler(watchdog, parse_script("@1s input beat\n@2s input beat\n@4s input beat\n",
                                     watchdog.inputs), RunConfig(), observer=show_timers)
print(write_trace(s.execute()), end="")
