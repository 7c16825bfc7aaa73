"""Energy beamforming for wireless power transfer from time-to-recharge feedback.

A transmitter with ``N`` antennas cannot see the channel ``h``. It only
sees when the harvester next transmits. Because that time is a monotone
function of ``|h^H w|``, probing ``3N - 2`` well-chosen vectors is enough
to reconstruct the matched beamformer ``h / ||h||``.
"""

from .beamformer import (FapTrace, brute_force_theta, dft_basis, find_optimal_beamformer,
                         identity_basis, load_basis_csv, make_basis, probe_basis,
                         probe_with_time_limit, save_basis_csv, select_theta, solve_gammas)
from .channel import (ChannelParams, abs_dot, alignment, genie_optimal_vector, los_vector,
                      received_power, sample_channel)
from .errors import BeamsimError
from .harvester import (ConstantEfficiency, FeedbackConverter, PiecewiseLinearEfficiency,
                        RationalEfficiency, SigmoidEfficiency, StorageCircuit, charge_after,
                        invert_harvested_power, invert_time_to_recharge, model_from_dict,
                        time_to_recharge)
from .oracle import ReplayOracle, SimulatedHarvester

__version__ = "0.1.0"

__all__ = [
    "FapTrace", "brute_force_theta", "dft_basis", "find_optimal_beamformer", "identity_basis",
    "load_basis_csv", "make_basis", "probe_basis", "probe_with_time_limit", "save_basis_csv",
    "select_theta", "solve_gammas", "ChannelParams", "abs_dot", "alignment",
    "genie_optimal_vector", "los_vector", "received_power", "sample_channel", "BeamsimError",
    "ConstantEfficiency", "FeedbackConverter", "PiecewiseLinearEfficiency", "RationalEfficiency",
    "SigmoidEfficiency", "StorageCircuit", "charge_after", "invert_harvested_power",
    "invert_time_to_recharge", "model_from_dict", "time_to_recharge", "ReplayOracle",
    "SimulatedHarvester",
]
