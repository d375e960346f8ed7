"""Rate, energy-efficiency and spectral-efficiency evaluation.

Single source of truth for every figure of merit: the per-cell rate over the
interference channel, per-SBS EE (rate over circuit-plus-radiated power),
and the system-level aggregates. The solver, game loop, baselines and the
brute-force oracles all evaluate through these functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import NetworkScenario, dbm_to_watts

LN2 = float(np.log(2.0))


@dataclass
class PowerProfile:
    """Transmit powers of every SBS, shape (K, N) in watts."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.ndim != 2:
            raise ValueError(f"power profile must be 2-D (K, N), got shape {self.p.shape}")
        if not np.all(np.isfinite(self.p)) or np.any(self.p < 0):
            raise ValueError("powers must be finite and non-negative")

    @classmethod
    def zeros(cls, k_cells: int, n_rbs: int) -> "PowerProfile":
        return cls(np.zeros((k_cells, n_rbs)))

    @classmethod
    def uniform(cls, k_cells: int, n_rbs: int, per_rb_w: float) -> "PowerProfile":
        return cls(np.full((k_cells, n_rbs), per_rb_w, dtype=float))

    def replace_cell(self, k: int, p_k: np.ndarray) -> "PowerProfile":
        out = self.p.copy()
        out[k] = p_k
        return PowerProfile(out)


@dataclass
class EeParams:
    """Per-SBS power model and constraints.

    amp_efficiency is the fraction of consumed amplifier power that gets
    radiated (1 = lossless), so consumed power is circuit + radiated/eff.
    p_max_w caps the radiated power per SBS; r_min is the rate floor in
    bit/s.
    """

    p_circuit_w: float = 0.1
    amp_efficiency: float = 1.0
    p_max_w: float = dbm_to_watts(20.0)
    r_min: float = 3.0

    def __post_init__(self):
        if self.p_circuit_w <= 0:
            raise ValueError("p_circuit_w must be positive")
        if not 0 < self.amp_efficiency <= 1:
            raise ValueError("amp_efficiency must be in (0, 1]")
        if self.p_max_w <= 0:
            raise ValueError("p_max_w must be positive")
        if self.r_min < 0:
            raise ValueError("r_min must be non-negative")

    def consumed_power_w(self, radiated_total_w: float) -> float:
        return self.p_circuit_w + radiated_total_w / self.amp_efficiency


def interference_vector(scn: NetworkScenario, profile: PowerProfile, k: int) -> np.ndarray:
    """Interference-plus-noise power seen by cell k on every RB (watts).

    MBS cross-tier term + co-tier terms from every other SBS + noise;
    strictly positive because the noise floor is.
    """
    other = scn.gains[1:, k, :] * profile.p          # (K, N), includes own row
    own = scn.gains[k + 1, k, :] * profile.p[k]
    return scn.mbs_gain(k) * scn.mbs_power_w + other.sum(axis=0) - own + scn.noise_w


def interference_plus_noise(scn: NetworkScenario, profile: PowerProfile,
                            k: int, i: int) -> float:
    """Interference-plus-noise on one (cell, RB) pair."""
    return float(interference_vector(scn, profile, k)[i])


def rate(scn: NetworkScenario, profile: PowerProfile, k: int) -> float:
    """Achievable rate of SBS k in bit/s: W * sum_i log2(1 + SINR_i)."""
    sinr = scn.direct_gain(k) * profile.p[k] / interference_vector(scn, profile, k)
    return scn.bandwidth_hz * float(np.log1p(sinr).sum()) / LN2


def ee_of_sbs(scn: NetworkScenario, profile: PowerProfile, k: int,
              params: EeParams) -> float:
    """Energy efficiency of SBS k in bit/joule."""
    return rate(scn, profile, k) / params.consumed_power_w(float(profile.p[k].sum()))


def system_ee(scn: NetworkScenario, profile: PowerProfile, params: EeParams) -> float:
    """System energy efficiency: total rate over total consumed power."""
    total_rate = sum(rate(scn, profile, k) for k in range(scn.k_cells))
    total_power = sum(params.consumed_power_w(float(profile.p[k].sum()))
                      for k in range(scn.k_cells))
    return total_rate / total_power


def system_se(scn: NetworkScenario, profile: PowerProfile) -> float:
    """System sum rate in bit/s. Divide by n_rbs * bandwidth to report
    spectral efficiency in bit/s/Hz."""
    return sum(rate(scn, profile, k) for k in range(scn.k_cells))
