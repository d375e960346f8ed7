"""Two-tier network instance generation.

One macro base station (MBS) at the origin serves a disc of radius
``macro_radius_m``; K small base stations (SBSs) are dropped inside that
disc with a minimum pairwise spacing so their coverage discs stay disjoint.
Each small cell serves its own user equipments (SUEs), one of which receives
on each resource block (RB). Channel gains follow a distance power law and
everything is reproducible from (config, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .errors import SpacingInfeasible

FORMAT_VERSION = 1

# Candidate draws allowed when placing SBSs before giving up.
_PLACEMENT_ATTEMPTS = 10_000


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power level in dBm to watts."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    """Convert a power in watts to dBm. Requires p_w > 0."""
    if p_w <= 0:
        raise ValueError(f"watts_to_dbm needs a positive power, got {p_w}")
    return 10.0 * np.log10(p_w) + 30.0


def noise_power(density_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in watts over the given bandwidth."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    return dbm_to_watts(density_dbm_per_hz) * bandwidth_hz


def path_loss(distance_m, coeff: float, exponent: float):
    """Distance power-law channel gain coeff * d^(-exponent).

    Distances are clamped to 1 m so the gain stays bounded in the near field.
    Accepts scalars or arrays.
    """
    d = np.maximum(distance_m, 1.0)
    return coeff * d ** (-exponent)


@dataclass
class ScenarioConfig:
    """Knobs for one network instance.

    Defaults follow the common simulation setup for this model: 1000 m / 100 m
    radii, gain law 0.1 * d^-4, -174 dBm/Hz noise. Bandwidth defaults to 1 Hz
    (normalized) so rates read as bit/s/Hz and a rate floor of a few bit/s is
    directly meaningful. ``mbs_power_dbm_per_rb=None`` means 20 dBm total MBS
    power split equally across the RBs; heavier macro transmit power makes
    rate floors unreachable for small cells dropped near the macro site, so
    crank this up deliberately if that regime is wanted.
    """

    k_cells: int = 2
    n_rbs: int = 2
    n_sues_per_cell: int = 1
    n_mues: int | None = None  # cosmetic receivers; defaults to n_rbs
    macro_radius_m: float = 1000.0
    small_radius_m: float = 100.0
    pathloss_coeff: float = 0.1
    pathloss_exp: float = 4.0
    noise_density_dbm_per_hz: float = -174.0
    rb_bandwidth_hz: float = 1.0
    mbs_power_dbm_per_rb: float | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.k_cells < 1:
            raise ValueError("k_cells must be >= 1")
        if self.n_rbs < 1:
            raise ValueError("n_rbs must be >= 1")
        if not 1 <= self.n_sues_per_cell <= self.n_rbs:
            raise ValueError("n_sues_per_cell must be in [1, n_rbs]")
        if self.macro_radius_m <= 0 or self.small_radius_m <= 0:
            raise ValueError("radii must be positive")
        if self.pathloss_coeff <= 0 or self.pathloss_exp <= 0:
            raise ValueError("path-loss parameters must be positive")
        if self.rb_bandwidth_hz <= 0:
            raise ValueError("rb_bandwidth_hz must be positive")

    def mbs_power_w_per_rb(self) -> float:
        """MBS transmit power per RB in watts (20 dBm total split equally
        across RBs unless set explicitly)."""
        if self.mbs_power_dbm_per_rb is None:
            return dbm_to_watts(20.0) / self.n_rbs
        return dbm_to_watts(self.mbs_power_dbm_per_rb)


@dataclass
class NetworkScenario:
    """Immutable snapshot of one generated network.

    ``gains`` has shape (K+1, K, N): entry [t, k, i] is the channel gain from
    transmitter t (t=0 the MBS, t=1..K the SBSs) to the SUE that cell k serves
    on RB i. All gain/geometry arrays are read-only after generation.
    """

    config: ScenarioConfig
    mbs_pos: np.ndarray          # (2,)
    sbs_pos: np.ndarray          # (K, 2)
    sue_pos: np.ndarray          # (K, N_k, 2)
    mue_pos: np.ndarray          # (M, 2)
    rb_assignment: np.ndarray    # (K, N) int, SUE index receiving on each RB
    gains: np.ndarray            # (K+1, K, N)
    noise_w: float               # noise power per RB
    mbs_power_w: float           # MBS transmit power per RB
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        for arr in (self.mbs_pos, self.sbs_pos, self.sue_pos, self.mue_pos,
                    self.rb_assignment, self.gains):
            arr.setflags(write=False)
        if not np.all(np.isfinite(self.gains)) or np.any(self.gains <= 0):
            raise ValueError("channel gains must be strictly positive and finite")
        if self.noise_w <= 0:
            raise ValueError("noise power must be positive")

    @property
    def k_cells(self) -> int:
        return self.gains.shape[1]

    @property
    def n_rbs(self) -> int:
        return self.gains.shape[2]

    @property
    def bandwidth_hz(self) -> float:
        return self.config.rb_bandwidth_hz

    def direct_gain(self, k: int) -> np.ndarray:
        """Gains from SBS k to its own served SUEs, one entry per RB."""
        return self.gains[k + 1, k, :]

    def mbs_gain(self, k: int) -> np.ndarray:
        """Cross-tier gains from the MBS into cell k, one entry per RB."""
        return self.gains[0, k, :]

    def sbs_gain(self, tx: int, k: int) -> np.ndarray:
        """Gains from SBS ``tx`` into cell k, one entry per RB."""
        return self.gains[tx + 1, k, :]

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "config": asdict(self.config),
            "mbs_pos": self.mbs_pos.tolist(),
            "sbs_pos": self.sbs_pos.tolist(),
            "sue_pos": self.sue_pos.tolist(),
            "mue_pos": self.mue_pos.tolist(),
            "rb_assignment": self.rb_assignment.tolist(),
            "gains": self.gains.tolist(),
            "noise_w": self.noise_w,
            "mbs_power_w": self.mbs_power_w,
        }

    def to_json(self, **dump_kwargs) -> str:
        return json.dumps(self.to_dict(), **dump_kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkScenario":
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported scenario format_version {version!r}")
        return cls(
            config=ScenarioConfig(**doc["config"]),
            mbs_pos=np.asarray(doc["mbs_pos"], dtype=float),
            sbs_pos=np.asarray(doc["sbs_pos"], dtype=float),
            sue_pos=np.asarray(doc["sue_pos"], dtype=float),
            mue_pos=np.asarray(doc["mue_pos"], dtype=float),
            rb_assignment=np.asarray(doc["rb_assignment"], dtype=int),
            gains=np.asarray(doc["gains"], dtype=float),
            noise_w=float(doc["noise_w"]),
            mbs_power_w=float(doc["mbs_power_w"]),
            format_version=version,
        )

    @classmethod
    def from_json(cls, text: str) -> "NetworkScenario":
        return cls.from_dict(json.loads(text))


def _uniform_in_disc(rng: np.random.Generator, center, radius: float, n: int) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.asarray(center) + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def _place_sbs(rng: np.random.Generator, cfg: ScenarioConfig) -> np.ndarray:
    """Drop K SBS positions in the macro disc keeping pairwise distance
    >= 2 * small_radius, by rejection sampling with a bounded draw budget."""
    min_spacing = 2.0 * cfg.small_radius_m
    placed: list[np.ndarray] = []
    attempts = 0
    while len(placed) < cfg.k_cells:
        if attempts >= _PLACEMENT_ATTEMPTS:
            raise SpacingInfeasible(
                f"could not place {cfg.k_cells} small cells with spacing "
                f">= {min_spacing:g} m inside radius {cfg.macro_radius_m:g} m "
                f"after {_PLACEMENT_ATTEMPTS} draws ({len(placed)} placed)"
            )
        candidate = _uniform_in_disc(rng, (0.0, 0.0), cfg.macro_radius_m, 1)[0]
        attempts += 1
        if all(np.linalg.norm(candidate - p) >= min_spacing for p in placed):
            placed.append(candidate)
    return np.array(placed)


def generate(config: ScenarioConfig) -> NetworkScenario:
    """Build a reproducible network instance from a config.

    Placement order is fixed (SBSs, then each cell's SUEs, then MUEs) so a
    given (config, seed) always reproduces the same positions and therefore
    bit-exact gains. RBs are assigned to SUEs round-robin: RB i is received
    by SUE i mod N_k.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)

    mbs_pos = np.zeros(2)
    sbs_pos = _place_sbs(rng, config)

    K, N, n_sue = config.k_cells, config.n_rbs, config.n_sues_per_cell
    sue_pos = np.empty((K, n_sue, 2))
    for k in range(K):
        sue_pos[k] = _uniform_in_disc(rng, sbs_pos[k], config.small_radius_m, n_sue)

    n_mue = config.n_mues if config.n_mues is not None else N
    mue_pos = _uniform_in_disc(rng, (0.0, 0.0), config.macro_radius_m, n_mue)

    rb_assignment = np.tile(np.arange(N) % n_sue, (K, 1)).astype(int)

    # Receiver of (k, i) is the assigned SUE; stack MBS + SBS transmitters.
    tx_pos = np.vstack([mbs_pos[None, :], sbs_pos])          # (K+1, 2)
    rx_pos = np.empty((K, N, 2))
    for k in range(K):
        rx_pos[k] = sue_pos[k, rb_assignment[k], :]
    dist = np.linalg.norm(tx_pos[:, None, None, :] - rx_pos[None, :, :, :], axis=-1)
    gains = path_loss(dist, config.pathloss_coeff, config.pathloss_exp)

    return NetworkScenario(
        config=config,
        mbs_pos=mbs_pos,
        sbs_pos=sbs_pos,
        sue_pos=sue_pos,
        mue_pos=mue_pos,
        rb_assignment=rb_assignment,
        gains=gains,
        noise_w=noise_power(config.noise_density_dbm_per_hz, config.rb_bandwidth_hz),
        mbs_power_w=config.mbs_power_w_per_rb(),
    )
