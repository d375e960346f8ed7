"""Reference schemes: rate-maximizing (spectral-efficiency) game and
brute-force grid oracles.

The SE baseline spends the whole power budget by water-filling each cell's
rate against the interference snapshot. The grid oracles exhaustively
evaluate power lattices and are used both as a comparison scheme and as the
independent check for the EE solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleRate
from .metrics import LN2, EeParams, PowerProfile, rate
from .scenario import NetworkScenario
from .ee_solver import EeSubproblem, make_subproblem
from .game import GameConfig, GameTrace, iterate_best_responses

_EVAL_CAP = 10 ** 8
_CHUNK = 200_000


@dataclass
class GridOracleConfig:
    """Exhaustive-search knobs. points_per_dim counts lattice points per
    power coordinate including both endpoints 0 and p_max."""

    points_per_dim: int = 41
    objective: str = "system_ee"   # system_ee | per_sbs_ee | per_sbs_rate

    def __post_init__(self):
        if self.points_per_dim < 2:
            raise ValueError("points_per_dim must be >= 2")
        if self.objective not in ("system_ee", "per_sbs_ee", "per_sbs_rate"):
            raise ValueError(f"unknown objective {self.objective!r}")


def se_best_response(sub: EeSubproblem) -> np.ndarray:
    """Rate-maximizing power allocation under the budget: water-filling.

    p_i = max(0, level - I_i/a_i) with the water level found by bisection
    until the allocated total matches the budget to 1e-10 W.
    """
    floor = sub.interference_w / sub.direct_gain
    p_max = sub.params.p_max_w

    def alloc(level: float) -> np.ndarray:
        return np.maximum(0.0, level - floor)

    lo = float(floor.min())            # allocates exactly zero
    hi = lo + p_max                    # allocates at least the full budget
    level = hi
    for _ in range(500):
        level = 0.5 * (lo + hi)
        total = float(alloc(level).sum())
        if abs(total - p_max) <= 1e-10:
            break
        if total > p_max:
            hi = level
        else:
            lo = level
    return alloc(level)


def run_se_game(scn: NetworkScenario, params: EeParams,
                gcfg: GameConfig | None = None) -> tuple[PowerProfile, GameTrace]:
    """Best-response loop with rate as every player's utility. Converged
    profiles consume the full budget in every cell."""
    gcfg = gcfg or GameConfig()

    def se_response(s, prof, k):
        return se_best_response(make_subproblem(s, prof, k, params))

    def se_utility(s, prof, k):
        return rate(s, prof, k)

    return iterate_best_responses(scn, params, gcfg, se_response, se_utility,
                                  scheme="sengt")


def _lattice_per_cell(n_rbs: int, points: int, p_max: float) -> np.ndarray:
    """All per-cell power vectors on the lattice {0, d, .., p_max}^N with a
    budget-feasible sum, in lexicographic order. Feasibility is checked on
    the integer grid indices so float rounding cannot flip it."""
    step = p_max / (points - 1)
    idx = np.array(list(itertools.product(range(points), repeat=n_rbs)), dtype=np.int64)
    idx = idx[idx.sum(axis=1) <= points - 1]
    return idx * step


def grid_best_response(sub: EeSubproblem, points_per_dim: int,
                       objective: str = "per_sbs_ee") -> tuple[np.ndarray, float]:
    """Exhaustive single-cell search over the power lattice.

    Returns (best power vector, best objective value); ties resolve to the
    lexicographically smallest vector. Raises InfeasibleRate when no lattice
    point meets the rate floor.
    """
    if objective not in ("per_sbs_ee", "per_sbs_rate"):
        raise ValueError("grid_best_response needs a per-SBS objective")
    grid = _lattice_per_cell(sub.n_rbs, points_per_dim, sub.params.p_max_w)
    sinr = grid * sub.direct_gain / sub.interference_w
    rates = sub.bandwidth_hz * np.log1p(sinr).sum(axis=1) / LN2
    feasible = rates >= sub.params.r_min
    if not feasible.any():
        raise InfeasibleRate("no lattice point meets the rate floor")
    if objective == "per_sbs_rate":
        values = rates
    else:
        consumed = sub.params.p_circuit_w + grid.sum(axis=1) / sub.params.amp_efficiency
        values = rates / consumed
    values = np.where(feasible, values, -np.inf)
    best = int(np.argmax(values))   # first occurrence = lexicographically smallest
    return grid[best].copy(), float(values[best])


def grid_search_system_ee(scn: NetworkScenario, params: EeParams,
                          cfg: GridOracleConfig | None = None
                          ) -> tuple[PowerProfile, float]:
    """Exhaustively maximize system EE over the joint power lattice.

    Every cell's vector ranges over the budget-feasible lattice; profiles
    where any cell misses the rate floor are filtered out, and an empty
    feasible set raises InfeasibleRate instead of returning an unconstrained
    best. Ties resolve to the lexicographically smallest profile.
    """
    cfg = cfg or GridOracleConfig()
    if cfg.objective != "system_ee":
        raise ValueError("grid_search_system_ee maximizes the system_ee objective")
    K, N = scn.k_cells, scn.n_rbs
    cell_grid = _lattice_per_cell(N, cfg.points_per_dim, params.p_max_w)
    m = cell_grid.shape[0]
    total = m ** K
    if total > _EVAL_CAP:
        raise ValueError(f"grid has {total} profiles, above the {_EVAL_CAP} cap")

    g_sbs = scn.gains[1:, :, :]                    # (K tx, K cell, N)
    g_direct = np.stack([scn.direct_gain(k) for k in range(K)])   # (K, N)
    base_intf = np.stack([scn.mbs_gain(k) * scn.mbs_power_w + scn.noise_w
                          for k in range(K)])     # (K, N)
    circuit_total = K * params.p_circuit_w

    best_value = -np.inf
    best_profile = None
    combo_iter = itertools.product(range(m), repeat=K)
    while True:
        chunk = list(itertools.islice(combo_iter, _CHUNK))
        if not chunk:
            break
        idx = np.asarray(chunk, dtype=np.int64)            # (M, K)
        profiles = cell_grid[idx]                          # (M, K, N)
        rx = np.einsum("mtn,tkn->mkn", profiles, g_sbs)    # all co-tier power
        own = profiles * g_direct                          # serving-link power
        intf = rx - own + base_intf
        rates = scn.bandwidth_hz * np.log1p(own / intf).sum(axis=2) / LN2  # (M, K)
        feasible = (rates >= params.r_min).all(axis=1)
        if not feasible.any():
            continue
        consumed = circuit_total + profiles.sum(axis=(1, 2)) / params.amp_efficiency
        values = np.where(feasible, rates.sum(axis=1) / consumed, -np.inf)
        local = int(np.argmax(values))
        if values[local] > best_value:
            best_value = float(values[local])
            best_profile = profiles[local].copy()

    if best_profile is None:
        raise InfeasibleRate("no lattice profile meets every cell's rate floor")
    return PowerProfile(best_profile), best_value
