"""What happens when one probe would take longer than the slot allows.

A probe along a nearly empty direction can keep the harvester charging for
minutes. With a per-slot limit the transmitter gives up after t_lim, switches
to the best beam it already knows, and times how long the storage now needs
to fill. The charge left over from the failed slot shortens that wait, and
the shortfall pins down the missing magnitude.

    python3 demos/weak_direction.py
"""

import numpy as np

from wpt_beamsim import (ChannelParams, FeedbackConverter, SimulatedHarvester, alignment, dft_basis,
                         find_optimal_beamformer, sample_channel)
from wpt_beamsim.experiments import weaken_direction

T_LIM = 100.0
params = ChannelParams(n_antennas=5, rician_factor=2.0)
converter = FeedbackConverter(params=params)
q = dft_basis(5)

for recharge in (150.0, 600.0, 3000.0):
    h = weaken_direction(sample_channel(params, 11), q, 2, converter, recharge)
    w, trace = find_optimal_beamformer(SimulatedHarvester(h, params), q, converter, time_limit=T_LIM)
    truth = abs(np.vdot(h, q[:, 2]))
    print(f"direction 2 would need {recharge:6.0f} s to recharge")
    for slot in trace.slots[:8]:
        wait = "timeout" if not np.isfinite(slot.t_tr) else f"{slot.t_tr:8.3f} s"
        print(f"    {slot.label:<18} column {slot.column!s:>4}  {wait:>10}  tau {slot.tau:.6e}")
    print(f"    recovered tau {trace.taus[2]:.6e}, true {truth:.6e}, "
          f"error {abs(trace.taus[2] / truth - 1):.1e}")
    print(f"    final alignment {alignment(h, w):.10f}\n")
