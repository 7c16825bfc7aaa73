"""The same search on a 16-bit datapath.

The golden model keeps every register as a Q2.13 word, computes angles with
CORDIC and walks through the controller's handshake states. Its answer is
compared with the floating-point search on the same channel.

    python3 demos/fixed_point_datapath.py [seed]
"""

import math
import sys

from wpt_beamsim import (ChannelParams, FeedbackConverter, SimulatedHarvester, alignment, dft_basis,
                         find_optimal_beamformer, sample_channel)
from wpt_beamsim.fixedpoint import nominal_tau_gain, run_oeb

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 3
params = ChannelParams(n_antennas=5, rician_factor=2.0)
h = sample_channel(params, seed)
converter = FeedbackConverter(params=params)

# magnitudes enter the datapath scaled by a fixed power of two so a
# typical channel lands near the top of the 16-bit range
gain = nominal_tau_gain(math.sqrt(params.n_antennas * params.pathloss))
run = run_oeb(SimulatedHarvester(h, params), converter, tau_gain=gain)
w_float, _ = find_optimal_beamformer(SimulatedHarvester(h, params), dft_basis(5), converter)

print(f"{'step':>4}  {'phase in':<22} {'event':<10} {'input':>7}  {'theta':>8}  dot_prod")
for row in run.rows():
    theta = row["theta"] / 2 ** 13
    print(f"{row['step']:>4}  {row['phase_in']:<22} {row['event']:<10} {row['input']:>7}  "
          f"{theta:>8.4f}  {row['dot_prod']}")

print(f"\nprobes: {run.probe_count}, input gain {gain}, extra shift {run.state.scale_shift}, "
      f"saturated: {run.saturated}")
print(f"fixed-point alignment: {alignment(h, run.w_opt):.6f}")
print(f"floating alignment:    {alignment(h, w_float):.12f}")
