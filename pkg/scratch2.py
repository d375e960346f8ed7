"""Scratch: N=2 oracle, binding budget, rate floor, convexity probe."""
import time

import numpy as np

from scnpower import (
    EeParams, EeSubproblem, solve_best_response, subproblem_ee, subproblem_rate,
    penalized_objective, to_transformed, grid_best_response, se_best_response,
)

rng = np.random.default_rng(3)

# --- N=2 random instances vs 400x400 grid oracle ---
t0 = time.time()
worst = 0.0
for trial in range(10):
    a = 10.0 ** rng.uniform(-8, -4, size=2)
    intf = 10.0 ** rng.uniform(-13, -10, size=2)
    params = EeParams(p_circuit_w=0.1, amp_efficiency=1.0, p_max_w=0.1, r_min=0.0)
    sub = EeSubproblem(a, intf, 1.0, params)
    p, ee, diag = solve_best_response(sub)
    _, ee_grid = grid_best_response(sub, 400)
    rel = (ee_grid - ee) / ee_grid
    worst = max(worst, rel)
    assert p.sum() <= params.p_max_w * (1 + 1e-6), p.sum()
print(f"N=2 grid-oracle worst shortfall: {worst:.3e}  time={time.time()-t0:.2f}s")

# --- binding budget: low SINR + large circuit power => EE rises to the cap ---
params = EeParams(p_circuit_w=10.0, amp_efficiency=1.0, p_max_w=0.1, r_min=0.0)
sub = EeSubproblem(np.array([1.0, 0.8]), np.array([1.0, 1.0]), 1.0, params)
pg, eeg = grid_best_response(sub, 400)
print("grid argmax sum:", pg.sum(), "(budget 0.1) -> on budget face:", abs(pg.sum()-0.1) < 0.1/399*1.5)
p, ee, diag = solve_best_response(sub)
print(f"solver sum p = {p.sum():.8f}  rel gap to budget {abs(p.sum()-0.1)/0.1:.2e}  ee={ee:.6f} vs grid {eeg:.6f}")

# --- rate floor active ---
params = EeParams(p_circuit_w=0.1, amp_efficiency=1.0, p_max_w=0.1, r_min=12.0)
sub = EeSubproblem(np.array([1e-5, 3e-6]), np.array([1e-12, 1e-12]), 1.0, params)
p, ee, diag = solve_best_response(sub)
r = subproblem_rate(sub, p)
pg, eeg = grid_best_response(sub, 400)
print(f"rate-floor: R={r:.6f} (floor 12) ee={ee:.4f} grid_ee={eeg:.4f} sum_p={p.sum():.5f}")

# --- amp efficiency < 1 ---
params = EeParams(p_circuit_w=0.1, amp_efficiency=0.5, p_max_w=0.1, r_min=0.0)
sub = EeSubproblem(np.array([1e-5, 3e-6]), np.array([1e-12, 1e-12]), 1.0, params)
p, ee, diag = solve_best_response(sub)
pg, eeg = grid_best_response(sub, 400)
print(f"sigma=0.5: ee={ee:.6f} grid_ee={eeg:.6f} shortfall={(eeg-ee)/eeg:.2e}")

# --- convexity probe: FD Hessian at random interior points ---
params = EeParams(p_circuit_w=0.1, amp_efficiency=1.0, p_max_w=0.1, r_min=1.0)
sub = EeSubproblem(np.array([1e-5, 3e-6]), np.array([1e-12, 1e-12]), 1.0, params)
mu_b, mu_p = 1.0, 10.0
worst_ratio = np.inf
for _ in range(50):
    pv = rng.uniform(0.05, 0.45, size=2) * params.p_max_w
    y = to_transformed(pv, params)
    n = y.size
    H = np.zeros((n, n))
    hs = 1e-4 * y
    for i in range(n):
        for j in range(n):
            ypp, ypm, ymp, ymm = (y.copy() for _ in range(4))
            ypp[i] += hs[i]; ypp[j] += hs[j]
            ypm[i] += hs[i]; ypm[j] -= hs[j]
            ymp[i] -= hs[i]; ymp[j] += hs[j]
            ymm[i] -= hs[i]; ymm[j] -= hs[j]
            H[i, j] = (penalized_objective(ypp, sub, mu_b, mu_p)
                       - penalized_objective(ypm, sub, mu_b, mu_p)
                       - penalized_objective(ymp, sub, mu_b, mu_p)
                       + penalized_objective(ymm, sub, mu_b, mu_p)) / (4 * hs[i] * hs[j])
    H = 0.5 * (H + H.T)
    eig = np.linalg.eigvalsh(H)
    ratio = eig[0] / np.abs(eig).max()
    worst_ratio = min(worst_ratio, ratio)
print(f"convexity probe: worst lambda_min / ||H|| = {worst_ratio:.3e}")

# --- water-filling sanity ---
params = EeParams(p_circuit_w=0.1, amp_efficiency=1.0, p_max_w=1.0, r_min=0.0)
sub = EeSubproblem(np.array([1.0, 1.0]), np.array([1e-12, 1.0]), 1.0, params)
pw = se_best_response(sub)
print("waterfill I/a=(0,1), Pt=1:", pw, "sum:", pw.sum())
