"""A small transmit-power sweep showing the main trends.

More transmit power means shorter waits, so the whole probing phase gets
shorter. Doubling the antennas roughly doubles the number of probes and
more than doubles the energy collected while probing.

    python3 demos/power_sweep.py [trials]
"""

import math
import sys

from wpt_beamsim.experiments import ExperimentConfig, sweep_transmit_power

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 200
config = ExperimentConfig(transmit_powers_w=[3.0, 5.0, 7.0, 10.0], rician_factors=[2.0, math.inf],
                          trials=trials)
result = sweep_transmit_power(config)
duration = result.metric("mean_duration_s")
energy = result.metric("mean_energy_j")

print(f"{trials} channels per point, distance {config.distance_m} m\n")
print(f"{'series':<10}" + "".join(f"{p:>10.0f} W" for p in result.axis_values))
for (n, kf), d in zip(result.series, duration):
    print(f"N={n:<2} K={kf:<4}" + "".join(f"{x:>10.2f} s" for x in d))

print("\nenergy collected while probing, N = 10 relative to N = 5")
for kf in config.rician_factors:
    ratio = energy[result.series_index(10, kf)] / energy[result.series_index(5, kf)]
    print(f"K={kf:<4}" + "".join(f"{r:>12.2f}" for r in ratio))
