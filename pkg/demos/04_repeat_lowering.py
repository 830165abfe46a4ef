"""
Repeat as a derived form
========================

`repeat` can be rewritten into sustain, await and spawn0.  The rewrite
behaves the same for an observer: same inputs, same outputs, same dates.
"""

from ivm import (
    lower_repeat, observational_trace, parse_program, parse_script, pretty_print, run,
    write_trace,
)

m = parse_program("""
    .inputs go
    spawn TICKER
    receive go jump GO
    GO: send go_seen
    stop
    TICKER: repeat (0.75 s) jump BODY for (3 s)
    BODY: send tick
    stop
""")
low = lower_repeat(m)
print(pretty_print(low))

events = "@1.5s input go\n"
a = write_trace(observational_trace(run(m, parse_script(events))))
b = write_trace(observational_trace(run(low, parse_script(events))))
print(a, end="")
print("identical observations:", a == b)
