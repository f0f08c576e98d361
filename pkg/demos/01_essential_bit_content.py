"""How much of a neuron stream is actually information?

Synthetic post-ReLU activations (normal around zero, rectified) leave
about half the values at zero, and the survivors carry set bits in only
a small slice of their 16-bit containers. This script measures that
essential-bit content for both container widths, which is the whole
opportunity the serial engines exploit.
"""

from bitsim import LayerSpec, QuantParams, stats
from bitsim.traces import generate_quantized_trace, generate_trace

spec = LayerSpec(nx=32, ny=32, i=64, n=1, fx=1, fy=1)

print("16-bit fixed-point containers")
print(f"{'sigma':>8} {'zero frac':>10} {'essential (all)':>16} {'essential (nz)':>15}")
for sigma in (50, 500, 5000):
    t = generate_trace(spec, sigma=sigma, relu=True, seed=1)
    s = stats(t.data, width=16)
    print(
        f"{sigma:>8} {s.zero_fraction:>10.3f} "
        f"{s.mean_essential_frac_all:>16.3f} {s.mean_essential_frac_nonzero:>15.3f}"
    )

print()
print("8-bit quantized codes (min/max limits per layer)")
q = QuantParams(0.0, 4.0)
t8 = generate_quantized_trace(spec, sigma=1.0, relu=True, q=q, seed=1)
s8 = stats(t8.data, width=8)
print(f"zero fraction      {s8.zero_fraction:.3f}")
print(f"essential (all)    {s8.mean_essential_frac_all:.3f}")
print(f"essential (nz)     {s8.mean_essential_frac_nonzero:.3f}")

print()
print("Even among nonzero neurons, well under half the container bits are")
print("set: a bit-parallel datapath grinds through mostly-zero terms.")
