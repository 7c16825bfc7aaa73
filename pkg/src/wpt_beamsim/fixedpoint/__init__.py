"""Bit-accurate 16-bit golden model of the beamformer datapath."""

from .cordic import cordic_atan2, cordic_sincos, gain_constant
from .fxword import (FRAC_BITS, LSB, FxComplex, FxWord, fx_div, fx_from_real, fx_mul, fx_sqrt,
                     fx_to_real)
from .oeb import (OebRun, OebState, Phase, block1_step, block2_iteration, circulant_matrix,
                  circulant_seed, nominal_tau_gain, run_oeb, transmit)

__all__ = [
    "FRAC_BITS", "LSB", "FxComplex", "FxWord", "fx_div", "fx_from_real", "fx_mul", "fx_sqrt",
    "fx_to_real", "cordic_atan2", "cordic_sincos", "gain_constant", "OebRun", "OebState", "Phase",
    "block1_step", "block2_iteration", "circulant_matrix", "circulant_seed", "nominal_tau_gain",
    "run_oeb", "transmit",
]
