# A single weakly entangled probe (two-mode squeezed vacuum) fixes any channel.
# Undoing the q^n weights amplifies errors; small q at fixed cutoff fails loudly.

import numpy as np

from qptomo import fock

cutoff = 30
kr = fock.loss_kraus(np.sqrt(0.8), cutoff)

for q in [0.4, 0.6]:
    omega = fock.one_sided_apply_ket(kr, fock.tmss_vector(q, cutoff))
    choi = fock.tmss_reconstruct(omega, q)
    psi = fock.coherent_vector(0.5, cutoff)
    direct = fock.apply_channel(kr, fock.ket_to_dm(psi))
    f = fock.fidelity(fock.predict_from_choi(choi, psi), direct)
    print(f"q={q}: amplification {fock.amplification(q, cutoff):.2e}, fidelity {f:.12f}")

omega = fock.one_sided_apply_ket(kr, fock.tmss_vector(0.1, cutoff))
try:
    fock.tmss_reconstruct(omega, 0.1, tol=1e-6)
except fock.AmplificationOverflow as exc:
    print("q=0.1:", exc)

# finite dimension: the same idea is exact
kr3 = fock.random_kraus_channel(3, 2, seed=1)
weights = (1, 0.7, 0.4)
omega3 = fock.qudit_forward(kr3, weights)
rng = np.random.default_rng(0)
c = fock.random_pure_state(3, rng)
print("qutrit trace distance:", fock.trace_distance(fock.qudit_predict(omega3, weights, c), fock.apply_channel(kr3, fock.ket_to_dm(c))))
