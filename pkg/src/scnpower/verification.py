"""Oracle-backed verification suite.

Every check here re-derives its expected behavior through an independent
route (golden-section and lattice searches, finite differences, exhaustive
deviation probes) and compares the production path against it at a fixed
tolerance. The CLI's `verify` command and the acceptance tests both run
these. Checks are deterministic: all randomness is seeded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InfeasibleRate
from .metrics import EeParams, PowerProfile, system_ee, system_se
from .scenario import ScenarioConfig, dbm_to_watts, generate
from .ee_solver import (
    EeSubproblem,
    make_subproblem,
    penalized_objective,
    penalized_objective_gradient,
    solve_best_response,
    subproblem_ee,
    subproblem_rate,
    to_transformed,
    transformed_ee,
)
from .game import GameConfig, check_nash, run_game
from .baselines import GridOracleConfig, grid_best_response, grid_search_system_ee, run_se_game

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-13) -> tuple[float, float]:
    """Maximize a unimodal scalar function on [lo, hi] by golden-section
    search; returns (argmax, max)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol * max(1.0, abs(hi)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def fd_gradient(f, y: np.ndarray, rel_h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient with steps relative to each coordinate."""
    g = np.zeros_like(y)
    for j in range(y.size):
        h = rel_h * y[j]
        yp, ym = y.copy(), y.copy()
        yp[j] += h
        ym[j] -= h
        g[j] = (f(yp) - f(ym)) / (2.0 * h)
    return g


def fd_hessian(f, y: np.ndarray, rel_h: float = 1e-4) -> np.ndarray:
    """Symmetric finite-difference Hessian from function values only."""
    n = y.size
    hs = rel_h * y
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ypp, ypm, ymp, ymm = (y.copy() for _ in range(4))
            ypp[i] += hs[i]; ypp[j] += hs[j]
            ypm[i] += hs[i]; ypm[j] -= hs[j]
            ymp[i] -= hs[i]; ymp[j] += hs[j]
            ymm[i] -= hs[i]; ymm[j] -= hs[j]
            H[i, j] = H[j, i] = (f(ypp) - f(ypm) - f(ymp) + f(ymm)) / (4.0 * hs[i] * hs[j])
    return H


def random_subproblem(rng: np.random.Generator, n_rbs: int,
                      r_min: float = 0.0) -> EeSubproblem:
    """Random but well-scaled single-cell instance (gains and interference
    drawn log-uniform over the ranges the scenario generator produces)."""
    params = EeParams(
        p_circuit_w=float(rng.uniform(0.05, 0.5)),
        amp_efficiency=float(rng.choice([1.0, 0.8, 0.5])),
        p_max_w=float(rng.uniform(0.02, 0.2)),
        r_min=r_min,
    )
    return EeSubproblem(
        direct_gain=10.0 ** rng.uniform(-8, -4, size=n_rbs),
        interference_w=10.0 ** rng.uniform(-13, -10, size=n_rbs),
        bandwidth_hz=1.0,
        params=params,
    )


def random_feasible_power(rng: np.random.Generator, sub: EeSubproblem,
                          interior: bool = False) -> np.ndarray:
    """Random budget-feasible power vector; `interior` keeps a margin from
    the zero and budget boundaries so barrier terms stay finite."""
    n = sub.n_rbs
    lo, hi = (0.05, 0.9) if interior else (0.0, 1.0)
    frac = rng.uniform(lo, hi)
    weights = rng.dirichlet(np.ones(n)) if n > 1 else np.ones(1)
    if interior:
        weights = 0.8 * weights + 0.2 / n
    return frac * sub.params.p_max_w * weights


def grid_br_fixed_point(scn, params: EeParams, points: int = 200,
                        max_rounds: int = 60) -> PowerProfile:
    """Independent equilibrium oracle: iterate exhaustive lattice best
    responses (simultaneous updates) until the profile stops moving on the
    lattice."""
    profile = PowerProfile.uniform(scn.k_cells, scn.n_rbs,
                                   params.p_max_w / (2 * scn.n_rbs))
    for _ in range(max_rounds):
        responses = []
        for k in range(scn.k_cells):
            sub = make_subproblem(scn, profile, k, params)
            p_k, _ = grid_best_response(sub, points)
            responses.append(p_k)
        new = PowerProfile(np.stack(responses))
        if np.array_equal(new.p, profile.p):
            return new
        profile = new
    return profile


def default_params(p_max_dbm: float = 20.0) -> EeParams:
    return EeParams(p_circuit_w=0.1, amp_efficiency=1.0,
                    p_max_w=dbm_to_watts(p_max_dbm), r_min=3.0)


def default_scenario(seed: int, n_rbs: int = 2, n_sues: int = 1):
    return generate(ScenarioConfig(k_cells=2, n_rbs=n_rbs,
                                   n_sues_per_cell=n_sues, seed=seed))


@lru_cache(maxsize=None)
def _converged_default_runs(n_rbs: int, n_sues: int):
    """Converged (scenario, profile, trace) per seed for the default setup;
    shared by the equilibrium checks. Seeds that abort infeasible map to
    None."""
    params = default_params()
    out = {}
    for seed in range(1, 11):
        scn = default_scenario(seed, n_rbs, n_sues)
        try:
            profile, trace = run_game(scn, params,
                                      GameConfig(epsilon=1e-3, max_rounds=20))
            out[seed] = (scn, profile, trace)
        except InfeasibleRate:
            out[seed] = None
    return out


def check_transform_equivalence() -> CheckResult:
    """Stretched-coordinate objective equals the direct EE evaluation for
    1000 random feasible power vectors across 10 random instances."""
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10):
        sub = random_subproblem(rng, int(rng.integers(1, 5)))
        for _ in range(100):
            p = random_feasible_power(rng, sub)
            ee = subproblem_ee(sub, p)
            if ee == 0.0:
                continue
            z = transformed_ee(to_transformed(p, sub.params), sub)
            worst = max(worst, abs(z - ee) / abs(ee))
    passed = worst <= 1e-12
    return CheckResult("transform equivalence", passed,
                       f"max relative mismatch {worst:.2e} (tol 1e-12)",
                       time.time() - t0)


def check_gradient_correctness() -> CheckResult:
    """Analytic gradient of the penalized objective vs central differences
    at 100 interior points per instance."""
    t0 = time.time()
    rng = np.random.default_rng(202)
    worst = 0.0
    for idx in range(10):
        r_min = 0.0 if idx % 2 == 0 else 0.5
        sub = random_subproblem(rng, int(rng.integers(1, 5)), r_min=r_min)
        weights = (float(rng.uniform(0.01, 1.0)), float(rng.uniform(1.0, 100.0)))
        checked = 0
        while checked < 100:
            p = random_feasible_power(rng, sub, interior=True)
            if subproblem_rate(sub, p) <= r_min * 1.05:
                continue
            y = to_transformed(p, sub.params)
            g = penalized_objective_gradient(y, sub, *weights)
            fd = fd_gradient(lambda z: penalized_objective(z, sub, *weights), y)
            worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(g)))
            checked += 1
    passed = worst <= 1e-5
    return CheckResult("gradient correctness", passed,
                       f"max relative error {worst:.2e} (tol 1e-5)",
                       time.time() - t0)


def check_convexity_probe() -> CheckResult:
    """Finite-difference Hessian of the penalized objective is positive
    semidefinite (to tolerance) at 50 random interior points."""
    t0 = time.time()
    rng = np.random.default_rng(303)
    worst = np.inf
    sub = random_subproblem(rng, 2, r_min=1.0)
    weights = (1.0, 10.0)
    probed = 0
    while probed < 50:
        p = random_feasible_power(rng, sub, interior=True)
        if subproblem_rate(sub, p) <= 1.5:
            continue
        y = to_transformed(p, sub.params)
        H = fd_hessian(lambda z: penalized_objective(z, sub, *weights), y)
        eigs = np.linalg.eigvalsh(H)
        hnorm = float(np.abs(eigs).max())
        worst = min(worst, float(eigs[0] + 1e-8 * hnorm))
        probed += 1
    passed = worst >= 0.0
    return CheckResult("objective convexity probe", passed,
                       f"min(lambda_min + 1e-8*||H||) = {worst:.3e} over 50 points",
                       time.time() - t0)


def check_best_response_oracle() -> CheckResult:
    """Solver EE matches golden-section (N=1, 20 instances) and 400x400
    lattice (N=2, 10 instances) oracles within 1%, with constraints held."""
    t0 = time.time()
    rng = np.random.default_rng(404)
    worst_gap = -np.inf
    violations = []
    for trial in range(30):
        n = 1 if trial < 20 else 2
        sub = random_subproblem(rng, n)
        p, ee, _ = solve_best_response(sub)
        if n == 1:
            _, ee_ref = golden_section_max(
                lambda x: subproblem_ee(sub, np.array([x])), 0.0, sub.params.p_max_w)
        else:
            _, ee_ref = grid_best_response(sub, 400)
        worst_gap = max(worst_gap, (ee_ref - ee) / ee_ref)
        if p.sum() > sub.params.p_max_w * (1 + 1e-6):
            violations.append(f"budget broken in trial {trial}")
        if subproblem_rate(sub, p) < sub.params.r_min * (1 - 1e-6):
            violations.append(f"rate floor broken in trial {trial}")
    passed = worst_gap <= 0.01 and not violations
    detail = f"worst oracle shortfall {worst_gap:.2e} (tol 1e-2)"
    if violations:
        detail += "; " + "; ".join(violations)
    return CheckResult("best-response oracle equivalence", passed, detail,
                       time.time() - t0)


def check_ne_convergence() -> CheckResult:
    """Default two-cell setups converge within 20 rounds for at least 9 of
    the 10 seeds, in both (N=2, one SUE) and (N=4, two SUE) shapes."""
    t0 = time.time()
    counts = {}
    for n_rbs, n_sues in ((2, 1), (4, 2)):
        runs = _converged_default_runs(n_rbs, n_sues)
        counts[(n_rbs, n_sues)] = sum(
            1 for v in runs.values() if v is not None and v[2].converged)
    passed = all(c >= 9 for c in counts.values())
    detail = ", ".join(f"N={k[0]}/SUEs={k[1]}: {v}/10 converged"
                       for k, v in counts.items())
    return CheckResult("equilibrium convergence", passed, detail,
                       time.time() - t0)


def check_no_unilateral_deviation() -> CheckResult:
    """No probed unilateral deviation improves any cell's EE by more than
    0.5% at the converged profiles."""
    t0 = time.time()
    worst = 0.0
    params = default_params()
    for runs in (_converged_default_runs(2, 1), _converged_default_runs(4, 2)):
        for v in runs.values():
            if v is None:
                continue
            scn, profile, _ = v
            report = check_nash(scn, profile, params, probe_grid=33, tol=0.005)
            worst = max(worst, report.max_improvement)
    passed = worst <= 0.005
    return CheckResult("no unilateral deviation", passed,
                       f"max relative EE improvement {worst:.2e} (tol 5e-3)",
                       time.time() - t0)


def check_uniqueness() -> CheckResult:
    """Five distinct initializations land on the same powers within 2% of
    the budget, per coordinate."""
    t0 = time.time()
    params = default_params()
    worst = 0.0
    for seed in (1, 2, 3):
        scn = default_scenario(seed)
        finals = []
        for frac in (0.02, 0.1, 0.25, 0.4, 0.49):
            start = PowerProfile.uniform(2, 2, frac * params.p_max_w / 2)
            profile, _ = run_game(scn, params, GameConfig(initial_profile=start.p))
            finals.append(profile.p)
        spread = max(float(np.max(np.abs(f - finals[0]))) for f in finals)
        worst = max(worst, spread / params.p_max_w)
    passed = worst <= 0.02
    return CheckResult("equilibrium uniqueness probe", passed,
                       f"max per-coordinate spread {worst:.2e} of budget (tol 2e-2)",
                       time.time() - t0)


def check_scheme_ordering() -> CheckResult:
    """EE game beats the SE game on system EE, and vice versa on SE, for at
    least 9 of 10 seeds."""
    t0 = time.time()
    params = default_params()
    runs = _converged_default_runs(2, 1)
    ee_wins = se_wins = 0
    for seed in range(1, 11):
        if runs[seed] is None:
            continue
        scn, p_ee, _ = runs[seed]
        p_se, _ = run_se_game(scn, params)
        ee_wins += system_ee(scn, p_ee, params) >= system_ee(scn, p_se, params)
        se_wins += system_se(scn, p_se) >= system_se(scn, p_ee)
    passed = ee_wins >= 9 and se_wins >= 9
    return CheckResult("scheme ordering", passed,
                       f"EE-game wins EE {ee_wins}/10, SE-game wins SE {se_wins}/10",
                       time.time() - t0)


def check_ee_saturation() -> CheckResult:
    """Per seed, system EE over the 0..30 dBm budget sweep is non-decreasing
    (1% slack per step) and flat from 20 to 30 dBm (2%), for >= 8/10 seeds."""
    t0 = time.time()
    sweep = (0, 5, 10, 15, 20, 25, 30)
    ok = 0
    for seed in range(1, 11):
        scn = default_scenario(seed)
        ees = []
        try:
            for p_dbm in sweep:
                params = default_params(p_max_dbm=p_dbm)
                profile, _ = run_game(scn, params)
                ees.append(system_ee(scn, profile, params))
        except InfeasibleRate:
            continue
        nondec = all(ees[i + 1] >= ees[i] * 0.99 for i in range(len(ees) - 1))
        flat = abs(ees[-1] - ees[4]) <= 0.02 * ees[4]
        ok += nondec and flat
    passed = ok >= 8
    return CheckResult("EE saturation over budget sweep", passed,
                       f"{ok}/10 seeds non-decreasing and saturated",
                       time.time() - t0)


def check_multiuser_diversity() -> CheckResult:
    """Mean system EE over 20 seeds is at least as high with two SUEs per
    cell as with one (same number of RBs)."""
    t0 = time.time()
    params = default_params()
    means = {}
    for n_sues in (1, 2):
        vals = []
        for seed in range(1, 21):
            scn = default_scenario(seed, n_rbs=2, n_sues=n_sues)
            try:
                profile, _ = run_game(scn, params)
                vals.append(system_ee(scn, profile, params))
            except InfeasibleRate:
                continue
        means[n_sues] = float(np.mean(vals))
    passed = means[2] >= means[1]
    return CheckResult("multiuser diversity", passed,
                       f"mean EE {means[2]:.1f} (2 SUEs) vs {means[1]:.1f} (1 SUE)",
                       time.time() - t0)


def check_exhaustive_proximity() -> CheckResult:
    """Equilibrium system EE reaches at least 90% of the 41-point lattice
    optimum for >= 8/10 seeds; the ratio is reported."""
    t0 = time.time()
    params = default_params()
    runs = _converged_default_runs(2, 1)
    ratios = []
    ok = 0
    for seed in range(1, 11):
        if runs[seed] is None:
            continue
        scn, profile, _ = runs[seed]
        try:
            _, best = grid_search_system_ee(scn, params,
                                            GridOracleConfig(points_per_dim=41))
        except InfeasibleRate:
            continue
        r = system_ee(scn, profile, params) / best
        ratios.append(r)
        ok += r >= 0.90
    passed = ok >= 8
    detail = (f"{ok}/10 seeds >= 90% of lattice optimum; "
              f"ratios min {min(ratios):.3f} mean {np.mean(ratios):.3f}")
    return CheckResult("exhaustive benchmark proximity", passed, detail,
                       time.time() - t0)


def check_run_determinism() -> CheckResult:
    """Running the same experiment spec twice yields byte-identical CSV
    bodies (the timestamped comment line excluded)."""
    import tempfile
    from pathlib import Path
    from . import cli

    t0 = time.time()
    spec = {
        "format_version": 1,
        "scenario": {"k_cells": 2, "n_rbs": 2, "n_sues_per_cell": 1},
        "params": {"p_circuit_w": 0.1, "amp_efficiency": 1.0, "r_min": 3.0},
        "sweep": {"variable": "p_max_dbm", "values": [15, 20]},
        "schemes": ["eengt"],
        "seeds": [2, 3],
        "output_dir": "run",
    }
    bodies = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            doc = dict(spec, output_dir=str(Path(tmp) / "run"))
            cli.run_experiment(cli.ExperimentSpec.from_dict(doc))
            text = (Path(tmp) / "run" / "summary.csv").read_text()
            bodies.append("\n".join(l for l in text.splitlines()
                                    if not l.startswith("#")))
    passed = bodies[0] == bodies[1]
    return CheckResult("run determinism", passed,
                       "CSV bodies byte-identical" if passed else "CSV bodies differ",
                       time.time() - t0)


ALL_CHECKS = (
    check_transform_equivalence,
    check_gradient_correctness,
    check_convexity_probe,
    check_best_response_oracle,
    check_ne_convergence,
    check_no_unilateral_deviation,
    check_uniqueness,
    check_scheme_ordering,
    check_ee_saturation,
    check_multiuser_diversity,
    check_exhaustive_proximity,
    check_run_determinism,
)


def run_all(names: list[str] | None = None, echo=print) -> list[CheckResult]:
    """Run the verification suite (optionally a subset by substring match)
    and print one pass/fail line per check."""
    results = []
    for fn in ALL_CHECKS:
        if names and not any(n.lower() in fn.__name__ for n in names):
            continue
        res = fn()
        results.append(res)
        echo(res.line())
    return results
