"""
First steps: assemble a machine, run it, read the trace
=======================================================

Every machine runs in logical instants.  Instantaneous instructions
(send, emit, assignments, jumps, spawns) run to a fixpoint within an
instant; waiting instructions (await, receive, ...) end it.
"""

from ivm import parse_program, parse_script, run, write_trace

# A two-thread program.  `spawn` forks a thread at CHORUS while the main
# thread continues; both share the same logical date until they wait.
m = parse_program("""
    spawn CHORUS
    send verse
    await (1 s) jump BRIDGE
    BRIDGE: send bridge
    stop
    CHORUS: send chorus
    stop
""")

trace = run(m, parse_script(""))
print(write_trace(trace))

# Threads run in source order of their current location, not spawn order:
# "verse" (line 2) is sent before "chorus" (line 6), both at t=0.
sends = [(e.t, e.payload) for e in trace if e.kind == "send"]
print("sends:", sends)
