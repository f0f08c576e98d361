"""The serial arithmetic itself, at single-unit scale.

Three views of one multiplication:
  * a value's oneffset stream (its essential bits, the wire form each
    cycle carries as (pow, eon) pairs);
  * a precision-serial inner product (one bit plane per cycle);
  * an essential-bit inner product with two-stage shifting, including
    the cycle-by-cycle schedule the column control produces.
"""

from bitsim import OneffsetStream, Precision, encode, pip_inner, sip_inner
from bitsim.pragmatic import pip_schedule

print("oneffset representation")
for v in (0b101, 0b10001, 0, 0x1F):
    s = encode(v)
    pairs = " ".join(f"({p:04b},{int(e)})" for p, e in s.pow_eon_pairs())
    print(f"  value {v:>6} = {v:016b}  offsets {s.offsets!s:<12} wire {pairs}")

print()
print("precision-serial inner product (4-bit window)")
neurons, synapses = [3, 1], [5, -2]
got = sip_inner(neurons, synapses, Precision(3, 0))
print(f"  {neurons} . {synapses} = {got} (direct: {3*5 + 1*(-2)})")

print()
print("essential-bit inner product with 2-bit first-stage shifters")
streams = [OneffsetStream((1, 6, 8)), OneffsetStream((0, 7)), OneffsetStream((4, 7, 8))]
synapses = [11, -7, 3]
value, cycles = pip_inner(streams, synapses, l_bits=2)
direct = sum(s.value() * w for s, w in zip(streams, synapses))
print(f"  values {[s.value() for s in streams]} . {synapses} = {value}"
      f" (direct {direct}) in {cycles} cycles")
print()
print("  cycle-by-cycle schedule (c = shared second-stage shift):")
for n, step in enumerate(pip_schedule(streams, l_bits=2), start=1):
    lanes = ", ".join(f"lane{i}" for i in step.advanced) or "none"
    print(f"    cycle {n}: c={step.common_shift}, advanced: {lanes}")
print()
print("  The lane holding offset 4 stalls in cycle 1 (4 - 0 needs a shift")
print("  beyond the 2-bit first stage) and catches up when 4 becomes the")
print("  minimum; a 16-entry brick behaves the same way, just wider.")
