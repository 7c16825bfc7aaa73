"""Find the matched beamformer for one channel using nothing but recharge times.

The transmitter never sees the channel. It steers a few probe beams, waits
for the harvester to transmit again, and turns each waiting time into a
coupling magnitude |h^H w|. After 3N - 2 probes it has the beam that a
transmitter with perfect channel knowledge would have picked.

    python3 demos/find_beamformer.py [seed]
"""

import sys

import numpy as np

from wpt_beamsim import (ChannelParams, FeedbackConverter, SimulatedHarvester, alignment, dft_basis,
                         find_optimal_beamformer, genie_optimal_vector, sample_channel)

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 7
params = ChannelParams(n_antennas=5, rician_factor=2.0, distance_m=5.0, transmit_power_w=10.0)
h = sample_channel(params, seed)

# The harvester is a black box that answers "how long until you transmit?"
device = SimulatedHarvester(h, params)
converter = FeedbackConverter(params=params)

w, trace = find_optimal_beamformer(device, dft_basis(5), converter)

print(f"channel seed {seed}, N = {params.n_antennas}, ||h|| = {np.linalg.norm(h):.6e}\n")
print(f"{'slot':>4}  {'probe':<18} {'wait [s]':>10} {'|h^H w|':>12}")
for slot in trace.slots:
    print(f"{slot.index + 1:>4}  {slot.label:<18} {slot.t_tr:>10.3f} {slot.tau:>12.5e}")

# Only now do we peek at the channel, to grade the result.
genie = genie_optimal_vector(h)
print(f"\nslots used:            {len(trace)} (3N - 2 = {3 * params.n_antennas - 2})")
print(f"time spent probing:    {trace.duration:.2f} s")
print(f"alignment with genie:  {alignment(h, w):.12f}")
print(f"phase-free distance:   {1 - abs(np.vdot(genie, w)):.2e}")
print(f"wait with final beam:  {converter.time_from_tau(abs(np.vdot(h, w))):.3f} s")
