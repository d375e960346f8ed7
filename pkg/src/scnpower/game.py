"""Best-response iteration across all SBSs and equilibrium diagnostics.

Each round, every cell re-optimizes its own utility against a snapshot of
the others' powers (Jacobi: all against the previous round; Gauss-Seidel:
in index order against the latest responses). The loop stops when the summed
absolute utility change between consecutive rounds drops below a threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleRate, NotConverged
from .metrics import EeParams, PowerProfile, ee_of_sbs, rate
from .scenario import NetworkScenario
from .ee_solver import (
    InnerSolverConfig,
    PenaltySchedule,
    make_subproblem,
    solve_best_response,
    subproblem_rate,
)

GAME_TRACE_VERSION = 1


@dataclass
class GameConfig:
    """Iteration knobs. initial_profile is either the string "uniform"
    (every SBS starts at half its budget spread evenly, p_max/(2N) per RB)
    or an explicit (K, N) array."""

    epsilon: float = 1e-3
    max_rounds: int = 50
    update_schedule: str = "jacobi"   # "jacobi" | "gauss_seidel"
    initial_profile: object = "uniform"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.update_schedule not in ("jacobi", "gauss_seidel"):
            raise ValueError(f"unknown update_schedule {self.update_schedule!r}")


@dataclass
class GameTrace:
    """Round-by-round record: utility vector, summed absolute utility change
    (None for the initial round), and the full power profile snapshot."""

    utilities: list = field(default_factory=list)       # per round, list[K]
    utility_deltas: list = field(default_factory=list)  # per round, float|None
    profiles: list = field(default_factory=list)        # per round, (K,N) arrays
    converged: bool = False
    rounds_used: int = 0
    scheme: str = "eengt"

    def record(self, utilities, delta, profile: PowerProfile) -> None:
        self.utilities.append([float(u) for u in utilities])
        self.utility_deltas.append(None if delta is None else float(delta))
        self.profiles.append(np.array(profile.p, copy=True))

    def final_profile(self) -> PowerProfile:
        return PowerProfile(self.profiles[-1].copy())

    def to_dict(self) -> dict:
        return {
            "format_version": GAME_TRACE_VERSION,
            "scheme": self.scheme,
            "converged": self.converged,
            "rounds_used": self.rounds_used,
            "utilities": self.utilities,
            "utility_deltas": self.utility_deltas,
            "profiles": [p.tolist() for p in self.profiles],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "GameTrace":
        trace = cls(
            utilities=doc["utilities"],
            utility_deltas=doc["utility_deltas"],
            profiles=[np.asarray(p, dtype=float) for p in doc["profiles"]],
            converged=doc["converged"],
            rounds_used=doc["rounds_used"],
            scheme=doc.get("scheme", "eengt"),
        )
        return trace

    @classmethod
    def from_json(cls, text: str) -> "GameTrace":
        return cls.from_dict(json.loads(text))


def _initial_profile(scn: NetworkScenario, params: EeParams,
                     gcfg: GameConfig) -> PowerProfile:
    if isinstance(gcfg.initial_profile, str):
        if gcfg.initial_profile != "uniform":
            raise ValueError(f"unknown initial profile {gcfg.initial_profile!r}")
        per_rb = params.p_max_w / (2 * scn.n_rbs)
        return PowerProfile.uniform(scn.k_cells, scn.n_rbs, per_rb)
    if isinstance(gcfg.initial_profile, PowerProfile):
        return gcfg.initial_profile
    return PowerProfile(np.asarray(gcfg.initial_profile, dtype=float))


def iterate_best_responses(scn: NetworkScenario, params: EeParams,
                           gcfg: GameConfig, best_response, utility,
                           scheme: str) -> tuple[PowerProfile, GameTrace]:
    """Generic best-response loop shared by the EE game and the SE baseline.

    best_response(scn, profile, k) -> power vector for cell k;
    utility(scn, profile, k) -> the scalar each player maximizes, evaluated
    on a full profile.
    """
    profile = _initial_profile(scn, params, gcfg)
    trace = GameTrace(scheme=scheme)
    u_prev = [utility(scn, profile, k) for k in range(scn.k_cells)]
    trace.record(u_prev, None, profile)

    for _ in range(gcfg.max_rounds):
        if gcfg.update_schedule == "jacobi":
            responses = [best_response(scn, profile, k) for k in range(scn.k_cells)]
            new_p = np.stack(responses)
            profile = PowerProfile(new_p)
        else:
            for k in range(scn.k_cells):
                profile = profile.replace_cell(k, best_response(scn, profile, k))
        u_now = [utility(scn, profile, k) for k in range(scn.k_cells)]
        delta = float(sum(abs(a - b) for a, b in zip(u_now, u_prev)))
        trace.rounds_used += 1
        trace.record(u_now, delta, profile)
        if delta < gcfg.epsilon:
            trace.converged = True
            return profile, trace
        u_prev = u_now

    raise NotConverged(
        f"utility shift still {trace.utility_deltas[-1]:.3e} >= "
        f"{gcfg.epsilon:g} after {gcfg.max_rounds} rounds",
        trace=trace,
    )


def run_game(scn: NetworkScenario, params: EeParams,
             gcfg: GameConfig | None = None,
             sched: PenaltySchedule | None = None,
             inner: InnerSolverConfig | None = None) -> tuple[PowerProfile, GameTrace]:
    """Run the EE power-control game to (empirical) equilibrium.

    Returns the final profile and the full trace; raises NotConverged with
    the trace attached when the round cap is hit, and InfeasibleRate (with
    the offending cell index) when some cell cannot meet its rate floor
    under the current interference.
    """
    gcfg = gcfg or GameConfig()

    def ee_response(s, prof, k):
        sub = make_subproblem(s, prof, k, params)
        try:
            p_k, _, _ = solve_best_response(sub, sched, inner)
        except InfeasibleRate as exc:
            raise InfeasibleRate(f"cell {k}: {exc}", cell=k) from exc
        return p_k

    def ee_utility(s, prof, k):
        return ee_of_sbs(s, prof, k, params)

    return iterate_best_responses(scn, params, gcfg, ee_response, ee_utility,
                                  scheme="eengt")


@dataclass
class DeviationReport:
    """Outcome of a unilateral-deviation probe around a candidate profile."""

    improvements: list          # per cell: best relative EE improvement found
    best_deviations: list       # per cell: (rb_pattern, power vector) or None
    tol: float

    @property
    def max_improvement(self) -> float:
        return max(self.improvements)

    @property
    def passed(self) -> bool:
        return self.max_improvement <= self.tol


def check_nash(scn: NetworkScenario, profile: PowerProfile, params: EeParams,
               probe_grid: int = 33, tol: float = 0.005) -> DeviationReport:
    """Probe unilateral deviations for every cell and report the largest
    relative EE gain found.

    Probes are (a) whole-vector scalings from zero up to the largest
    budget-feasible factor and (b) single-RB replacements over a grid up to
    the remaining budget, keeping all other cells frozen. Deviations that
    break the rate floor are not valid strategies and are skipped.
    """
    improvements = []
    best_devs = []
    for k in range(scn.k_cells):
        base_ee = ee_of_sbs(scn, profile, k, params)
        base_p = profile.p[k]
        total = float(base_p.sum())
        best_gain = 0.0
        best_dev = None

        candidates = []
        if total > 0:
            max_scale = params.p_max_w / total
            for f in np.linspace(0.0, max_scale, probe_grid):
                candidates.append(f * base_p)
        for i in range(scn.n_rbs):
            headroom = params.p_max_w - (total - float(base_p[i]))
            if headroom <= 0:
                continue
            for v in np.linspace(0.0, headroom, probe_grid):
                cand = base_p.copy()
                cand[i] = v
                candidates.append(cand)

        for cand in candidates:
            if cand.sum() > params.p_max_w * (1 + 1e-12):
                continue
            trial = profile.replace_cell(k, cand)
            if params.r_min > 0 and rate(scn, trial, k) < params.r_min:
                continue
            gain = (ee_of_sbs(scn, trial, k, params) - base_ee) / max(base_ee, 1e-300)
            if gain > best_gain:
                best_gain = gain
                best_dev = cand
        improvements.append(best_gain)
        best_devs.append(best_dev)
    return DeviationReport(improvements=improvements, best_deviations=best_devs,
                           tol=tol)
