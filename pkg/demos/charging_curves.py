"""How harvested power maps to waiting time, and why weak beams are slow.

The storage is a series R-C circuit fed at constant power. Below about
-15 dBm the time to refill it grows past 100 s, which is where a per-slot
limit starts to matter. The second table compares the rectifier models.

    python3 demos/charging_curves.py
"""

import numpy as np

from wpt_beamsim import StorageCircuit, time_to_recharge
from wpt_beamsim.harvester import MODEL_KINDS

circuit = StorageCircuit()
print(f"R = {circuit.resistance_ohm} ohm, C = {circuit.capacitance_f} F, "
      f"charge {circuit.q_initial_c} C -> {circuit.q_max_c} C\n")
print(f"{'P_h [dBm]':>10} {'P_h [W]':>11} {'t_tr [s]':>11}")
for dbm in range(-30, 5, 5):
    p = 10 ** (dbm / 10) * 1e-3
    print(f"{dbm:>10} {p:>11.3e} {time_to_recharge(circuit, p_h=p):>11.3f}")

models = [cls() for cls in MODEL_KINDS.values()]
print(f"\n{'P_r [W]':>10} " + " ".join(f"{m.name:>11}" for m in models))
for p_r in np.logspace(-6, -1.5, 10):
    print(f"{p_r:>10.2e} " + " ".join(f"{m.harvested_power(p_r):>11.3e}" for m in models))
