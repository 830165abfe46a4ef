"""
Musical time: beats follow the tempo
====================================

Durations can be written in seconds or in beats.  A beat deadline is kept in
beats, so a tempo change made after the wait started still moves it.
"""

from ivm import parse_program, parse_script, run

m = parse_program("""
    await (2 beats) jump A
    A: send downbeat
    stop
""")

for events in ("", "@1s tempo 120\n", "@0.5s tempo 30\n"):
    trace = run(m, parse_script(events))
    (hit,) = [e for e in trace if e.kind == "send"]
    print(f"script {events.strip() or '(none)':18s} -> downbeat at t={hit.t:.3f}s, beat {hit.b:.3f}")

# A metronome: `repeat` starts a recursive timer that steps once per period
# and stops at the expiry.  Speeding up the tempo packs the clicks closer.
metronome = parse_program(open(__file__.replace("02_tempo_and_beats.py",
                                                "programs/metronome.ivm")).read())
trace = run(metronome, parse_script("@2s tempo 120\n@4s tempo 240\n"))
print("\nclick dates:", [round(e.t, 3) for e in trace if e.payload == "click"])
