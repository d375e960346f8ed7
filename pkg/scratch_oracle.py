"""Scratch: oracle-first checks before building out the rest."""
import time

import numpy as np

from scnpower import (
    EeParams, EeSubproblem, solve_best_response, subproblem_ee,
    penalized_objective, penalized_objective_gradient, to_transformed,
    transformed_ee, find_strictly_feasible,
)


def golden_section_max(f, lo, hi, tol=1e-13):
    phi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol * max(1.0, abs(hi)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


# --- N=1 instance from the stated desk example ---
params = EeParams(p_circuit_w=0.1, amp_efficiency=1.0, p_max_w=0.1, r_min=0.0)
sub = EeSubproblem(direct_gain=np.array([1e-5]), interference_w=np.array([1e-12]),
                   bandwidth_hz=1.0, params=params)

x, ee_oracle = golden_section_max(lambda p: subproblem_ee(sub, np.array([p])), 0.0, 0.1)
print(f"oracle: p*={x:.8g} EE*={ee_oracle:.10g}")

t0 = time.time()
p, ee, diag = solve_best_response(sub)
t1 = time.time()
print(f"solver: p={p} EE={ee:.10g} rel_err={(ee_oracle-ee)/ee_oracle:.3e} "
      f"time={t1-t0:.3f}s outer={diag.outer_rounds} inner={diag.inner_iterations} "
      f"eqviol={diag.equality_violation:.2e} gnorm={diag.final_grad_norm:.2e}")
print("sum p =", p.sum(), " budget =", params.p_max_w)

# --- gradient check at random interior points ---
rng = np.random.default_rng(7)
errs = []
for _ in range(20):
    pv = rng.uniform(0.01, 0.8, size=1) * params.p_max_w
    y = to_transformed(pv, params)
    mu_b, mu_p = 1.0, 10.0
    g = penalized_objective_gradient(y, sub, mu_b, mu_p)
    fd = np.zeros_like(y)
    for j in range(y.size):
        h = 1e-6 * y[j]
        yp, ym = y.copy(), y.copy()
        yp[j] += h
        ym[j] -= h
        fd[j] = (penalized_objective(yp, sub, mu_b, mu_p)
                 - penalized_objective(ym, sub, mu_b, mu_p)) / (2 * h)
    errs.append(np.linalg.norm(g - fd) / np.linalg.norm(g))
print("grad check max rel err:", max(errs))

# --- transform identity ---
ident = []
for _ in range(200):
    pv = rng.uniform(0, 1, size=1) * params.p_max_w
    y = to_transformed(pv, params)
    ident.append(abs(transformed_ee(y, sub) - subproblem_ee(sub, pv)) / subproblem_ee(sub, pv))
print("transform identity max rel err:", max(ident))
