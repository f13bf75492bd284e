# Tomography of a beam splitter from six coherent probes.
# The channel mixes the input with vacuum; we only see output Q-functions.

import numpy as np

from qptomo import channels, tomo

theta = np.pi / 3
spec = channels.bs_channel(theta)

# six probes in the fixed order the closed-form solution expects
probes = np.array(tomo.DEFAULT_PROBES).reshape(-1, 1)
records = channels.simulate_probes(spec, probes)

for r in records:
    print(f"alpha={r.alpha[0]:>6}  d={np.round(r.d[0], 6):>12}  c={r.c:+.4f}")

# generic K/J solve vs the explicit formulas
rec = tomo.reconstruct(records)
closed = tomo.closed_form_default(records)

print("\nrecovered blocks")
for name, value in rec.choi.blocks().items():
    print(f"  {name:8s} {np.round(np.asarray(value).ravel(), 12)}")
print("expected  X_ab =", np.cos(theta), " Y_aa =", -np.cos(theta) ** 2, " Y_bb = -1")

gap = max(np.max(np.abs(np.asarray(rec.choi.blocks()[k]) - np.asarray(closed.choi.blocks()[k]))) for k in rec.choi.blocks())
print(f"solve vs closed form: {gap:.1e}")
print(f"residual_K={rec.residual_K:.1e}  cond_K={rec.cond_K:.2f}  cond_J={rec.cond_J:.2f}")

# reals alone cannot separate alpha from alpha*: K loses rank
try:
    tomo.reconstruct(channels.simulate_probes(spec, np.arange(6.0).reshape(-1, 1)))
except tomo.IllConditioned as exc:
    print("real probes ->", type(exc).__name__, exc)
