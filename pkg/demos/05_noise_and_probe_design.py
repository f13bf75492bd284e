# Ranking probe sets, and what detector noise does to an overdetermined fit.

import numpy as np

from qptomo import channels, tomo

default = np.array(tomo.DEFAULT_PROBES).reshape(-1, 1)
candidates = [
    tomo.ProbeSet(1, default, label="default"),
    tomo.ProbeSet(1, 2 * default, label="default x2"),
    tomo.ProbeSet(1, 0.2 * default, label="default x0.2"),
    tomo.ProbeSet(1, np.arange(6.0).reshape(-1, 1), label="real line"),
]
for row in tomo.probe_design(candidates):
    print(f"{row['rank']}  {row['label']:13s} cond_K={row['cond_K']:9.3g}  cond_J={row['cond_J']:9.3g}  admissible={row['admissible']}")

spec = channels.bs_channel(np.pi / 3)
lattice = np.array([complex(x, y) for x in range(-2, 3) for y in range(-2, 3) if (x, y) != (2, 2)]).reshape(-1, 1)
clean = channels.simulate_probes(spec, lattice)

print("\nsigma    max block error   residual_K")
for sigma in [1e-8, 1e-6, 1e-4]:
    rec = tomo.reconstruct(tomo.add_noise(clean, sigma, seed=0))
    truth, got = spec.choi.blocks(), rec.choi.blocks()
    err = max(np.max(np.abs(np.asarray(got[k]) - np.asarray(truth[k]))) for k in truth)
    print(f"{sigma:.0e}  {err:15.2e}  {rec.residual_K:11.2e}")
