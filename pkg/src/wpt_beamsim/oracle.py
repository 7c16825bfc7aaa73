"""Probe oracles: the only way the beamformer learns about the channel.

An oracle takes a beamforming vector and returns the time until the
harvester's next transmission, or ``math.inf`` when nothing arrives within
``time_limit``.
"""

from __future__ import annotations

import math
from typing import Protocol, Sequence

import numpy as np

from .channel import ChannelParams, received_power
from .harvester import (EfficiencyModel, PiecewiseLinearEfficiency, StorageCircuit,
                        charge_after, time_to_recharge)


class ProbeOracle(Protocol):
    def measure(self, w: np.ndarray, time_limit: float = math.inf) -> float:
        ...


class SimulatedHarvester:
    """Harvest-then-transmit device driven by a fixed channel.

    The storage charge persists between calls. A completed measurement
    leaves the device back at ``q0`` (it spent the energy transmitting); a
    timed-out one leaves it at the partial charge reached so far, which is
    what makes time-limit recovery possible.
    """

    def __init__(self, h: np.ndarray, params: ChannelParams,
                 circuit: StorageCircuit | None = None,
                 model: EfficiencyModel | None = None):
        self.h = np.asarray(h, dtype=complex)
        self.params = params
        self.circuit = circuit or StorageCircuit()
        self.model = model or PiecewiseLinearEfficiency()
        self.charge = self.circuit.q_initial_c
        self.probes: list[np.ndarray] = []
        self.harvested: list[float] = []

    def harvested_power(self, w: np.ndarray) -> float:
        return self.model.harvested_power(received_power(self.h, w, self.params))

    def measure(self, w: np.ndarray, time_limit: float = math.inf) -> float:
        w = np.asarray(w, dtype=complex)
        p_h = self.harvested_power(w)
        self.probes.append(w.copy())
        self.harvested.append(p_h)
        t = time_to_recharge(self.circuit, self.charge, self.circuit.q_max_c, p_h)
        if t > time_limit:
            if math.isfinite(t):
                self.charge = charge_after(self.circuit, self.charge, p_h, time_limit)
            return math.inf
        self.charge = self.circuit.q_initial_c
        return t


class ReplayOracle:
    """Plays back recorded times in order, ignoring the vectors it is given."""

    def __init__(self, times: Sequence[float]):
        self._times = list(times)
        self._next = 0
        self.probes: list[np.ndarray] = []

    def measure(self, w: np.ndarray, time_limit: float = math.inf) -> float:
        if self._next >= len(self._times):
            raise IndexError("replay trace exhausted")
        self.probes.append(np.asarray(w, dtype=complex).copy())
        t = self._times[self._next]
        self._next += 1
        return math.inf if t > time_limit else t
