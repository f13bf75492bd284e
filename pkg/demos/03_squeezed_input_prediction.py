# Predict what a beam splitter does to a displaced squeezed state,
# three independent ways: Gaussian integral, closed form, truncated Fock space.

import numpy as np

from qptomo import channels, fock, qform

theta, r, Z, cutoff = np.pi / 4, 0.5, 1.0, 40

state = channels.BargmannState.displaced_squeezed(r, Z)
closed = channels.bs_squeezed_output_form(theta, r, Z)

psi = fock.displaced_squeezed_vector(r, Z, cutoff)
choi = fock.choi_from_channel(fock.loss_kraus(np.cos(theta), cutoff))
out = fock.predict_from_choi(choi, psi)

print(f"{'Z_b':>14}  {'integral':>12}  {'closed':>12}  {'fock':>12}")
for zb in [0, 0.7, 0.7 + 0.5j, -0.4 + 1j, 1.2 - 0.6j]:
    a = channels.predict_state_q(channels.bs_channel(theta), state, [zb])
    b = qform.evaluate_q(closed, [zb])
    c = fock.q_eval(out, zb)
    print(f"{zb!s:>14}  {a:12.9f}  {b:12.9f}  {c:12.9f}")

print("output trace (Fock):", round(out.trace().real, 12))
print("output peak (closed form):", np.round(qform.peak(closed), 6))
