"""Scratch: end-to-end game on default-style scenarios + scheme ordering."""
import time

import numpy as np

from scnpower import (
    EeParams, GameConfig, ScenarioConfig, check_nash, dbm_to_watts, generate,
    run_game, run_se_game, system_ee, system_se, grid_search_system_ee,
)
from scnpower.baselines import GridOracleConfig

params = EeParams(p_circuit_w=0.1, amp_efficiency=1.0,
                  p_max_w=dbm_to_watts(20.0), r_min=3.0)

t0 = time.time()
rounds_used = []
for seed in range(1, 11):
    scn = generate(ScenarioConfig(k_cells=2, n_rbs=2, n_sues_per_cell=1, seed=seed))
    profile, trace = run_game(scn, params, GameConfig(epsilon=1e-3, max_rounds=20))
    rounds_used.append(trace.rounds_used)
    rep = check_nash(scn, profile, params)
    see = system_ee(scn, profile, params)
    print(f"seed {seed}: rounds={trace.rounds_used} conv={trace.converged} "
          f"sys_ee={see:9.2f} max_dev={rep.max_improvement:.2e} "
          f"sum_p={profile.p.sum(axis=1)}")
print(f"mean rounds {np.mean(rounds_used):.1f}, time {time.time()-t0:.1f}s")

# N=4, N_k=2
t0 = time.time()
for seed in (1, 2):
    scn = generate(ScenarioConfig(k_cells=2, n_rbs=4, n_sues_per_cell=2, seed=seed))
    profile, trace = run_game(scn, params)
    print(f"N=4 seed {seed}: rounds={trace.rounds_used} sys_ee={system_ee(scn, profile, params):.2f}")
print(f"N=4 time {time.time()-t0:.1f}s")

# scheme ordering at 20 dBm + grid benchmark
t0 = time.time()
wins_ee = wins_se = 0
ratios = []
for seed in range(1, 11):
    scn = generate(ScenarioConfig(k_cells=2, n_rbs=2, n_sues_per_cell=1, seed=seed))
    p_ee, _ = run_game(scn, params)
    p_se, _ = run_se_game(scn, params)
    e1, e2 = system_ee(scn, p_ee, params), system_ee(scn, p_se, params)
    s1, s2 = system_se(scn, p_ee), system_se(scn, p_se)
    wins_ee += e1 >= e2
    wins_se += s2 >= s1
    pg, eeg = grid_search_system_ee(scn, params, GridOracleConfig(points_per_dim=41))
    ratios.append(e1 / eeg)
print(f"EE wins {wins_ee}/10, SE wins {wins_se}/10, NE/grid EE ratio min={min(ratios):.4f} "
      f"mean={np.mean(ratios):.4f} time={time.time()-t0:.1f}s")

# saturation sweep
t0 = time.time()
for seed in (1, 2, 3):
    ees = []
    for pt in (0, 5, 10, 15, 20, 25, 30):
        par = EeParams(p_circuit_w=0.1, p_max_w=dbm_to_watts(pt), r_min=3.0)
        scn = generate(ScenarioConfig(k_cells=2, n_rbs=2, n_sues_per_cell=1, seed=seed))
        prof, _ = run_game(scn, par)
        ees.append(system_ee(scn, prof, par))
    ees = np.array(ees)
    print(f"seed {seed} EE over P_t sweep: {np.array2string(ees, precision=1)} "
          f"sat: {abs(ees[-1]-ees[4])/ees[4]:.2e}")
print(f"sweep time {time.time()-t0:.1f}s")
