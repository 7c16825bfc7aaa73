"""MISO channel realizations and received power.

Channel and beamforming vectors are plain complex ``numpy`` arrays. The
channel includes path loss, so ``received_power`` is simply
``G * P_t * |h^H w|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, ParameterError, ShapeError
from .rng import box_muller, make_generator

#: Angle of departure used for the line-of-sight steering vector.
LOS_ANGLE_RAD = math.radians(30.0)

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class ChannelParams:
    """Link parameters. Defaults follow the numerical setup of the study
    (G = 1, beta = 3, 5 antennas, 10 W at 5 m, Rician K = 2)."""

    n_antennas: int = 5
    rician_factor: float = 2.0
    distance_m: float = 5.0
    pathloss_exponent: float = 3.0
    antenna_gain: float = 1.0
    transmit_power_w: float = 10.0

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ParameterError(f"n_antennas must be an integer >= 2, got {self.n_antennas!r}")
        if not self.rician_factor >= 0:  # also rejects NaN
            raise ParameterError(f"rician_factor must be >= 0 or inf, got {self.rician_factor!r}")
        if not (self.distance_m > 0 and math.isfinite(self.distance_m)):
            raise ParameterError(f"distance_m must be positive, got {self.distance_m!r}")
        if not self.pathloss_exponent >= 2:
            raise ParameterError(f"pathloss_exponent must be >= 2, got {self.pathloss_exponent!r}")
        if not (self.antenna_gain > 0 and math.isfinite(self.antenna_gain)):
            raise ParameterError(f"antenna_gain must be positive, got {self.antenna_gain!r}")
        if not (self.transmit_power_w > 0 and math.isfinite(self.transmit_power_w)):
            raise ParameterError(f"transmit_power_w must be positive, got {self.transmit_power_w!r}")

    @property
    def pathloss(self) -> float:
        """Power attenuation ``L ** -beta``."""
        return self.distance_m ** (-self.pathloss_exponent)

    @property
    def power_scale(self) -> float:
        """``G * P_t``, the factor between ``|h^H w|^2`` and received power."""
        return self.antenna_gain * self.transmit_power_w


def los_vector(n: int, angle: float = LOS_ANGLE_RAD) -> np.ndarray:
    """Uniform-linear-array steering vector ``exp(-j pi k sin(angle))``."""
    k = np.arange(n)
    return np.exp(-1j * math.pi * k * math.sin(angle))


def sample_channel(params: ChannelParams, seed: int) -> np.ndarray:
    """Draw one Rician channel realization, path loss included.

    ``K = inf`` returns the deterministic line-of-sight vector. The result
    depends only on ``(params, seed)``.
    """
    n = params.n_antennas
    los = los_vector(n)
    kf = params.rician_factor
    if math.isinf(kf):
        small_scale = los
    else:
        nlos = box_muller(make_generator(seed), n)
        small_scale = math.sqrt(kf / (kf + 1.0)) * los + math.sqrt(1.0 / (kf + 1.0)) * nlos
    return math.sqrt(params.pathloss) * small_scale


def check_vector(w: np.ndarray, n: int | None = None, name: str = "w") -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if w.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {w.shape}")
    if n is not None and w.shape[0] != n:
        raise ShapeError(f"{name} has length {w.shape[0]}, expected {n}")
    if not np.all(np.isfinite(w)):
        raise ParameterError(f"{name} has non-finite entries")
    return w


def abs_dot(h: np.ndarray, w: np.ndarray) -> float:
    """``|h^H w|``."""
    return float(abs(np.vdot(h, w)))


def received_power(h: np.ndarray, w: np.ndarray, params: ChannelParams) -> float:
    """Received RF power ``G * P_t * |h^H w|^2`` in watts."""
    h = check_vector(h, name="h")
    w = check_vector(w, h.shape[0])
    return params.power_scale * abs_dot(h, w) ** 2


def genie_optimal_vector(h: np.ndarray) -> np.ndarray:
    """Matched beamformer ``h / ||h||``; only for checking recovered vectors."""
    h = check_vector(h, name="h")
    norm = np.linalg.norm(h)
    if norm == 0:
        raise DegenerateChannelError("channel vector is zero")
    return h / norm


def alignment(h: np.ndarray, w: np.ndarray) -> float:
    """Cosine similarity ``|h^H w| / (||h|| ||w||)``."""
    return abs_dot(h, w) / float(np.linalg.norm(h) * np.linalg.norm(w))
