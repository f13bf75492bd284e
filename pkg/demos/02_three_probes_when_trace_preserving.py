# A trace-preserving channel needs only 2k+1 probes.
# Each output is normalized, which fixes the constants we did not measure.

import numpy as np

from qptomo import channels, qform, tomo

spec = channels.thermal_noise_channel(0.4)
three = channels.simulate_probes(spec, [[0], [1], [1j]])
six = channels.simulate_probes(spec, np.array(tomo.DEFAULT_PROBES).reshape(-1, 1))

rec3 = tomo.reconstruct(three, trace_preserving=True)
rec6 = tomo.reconstruct(six)
print("a-side blocks from:", rec3.a_side, "| tp assumed:", rec3.tp_assumed)

xs = np.linspace(-2, 2, 5)
grid = [complex(x, y) for y in xs for x in xs]
for alpha in [-1, -1j, 1 + 1j, 2 - 1j]:
    q3 = qform.evaluate_q_grid(channels.predict_coherent(rec3, [alpha]), grid)
    q6 = qform.evaluate_q_grid(channels.predict_coherent(rec6, [alpha]), grid)
    trace = qform.gaussian_integral(channels.predict_coherent(rec3, [alpha]))
    print(f"alpha={alpha!s:>7}  max|Q3-Q6|={np.max(np.abs(q3 - q6)):.1e}  trace={trace:.12f}")

# the noise shows up only in the output-side width
print("Y_bb =", rec3.choi.blocks()["Y_bb"].ravel(), "expected", -1 / 1.4)
