"""Single-SBS energy-efficiency maximization.

The per-cell problem (maximize rate over consumed power subject to a power
budget and a rate floor) has a concave-over-affine objective. Dividing the
power vector by the consumed power turns it into a concave objective of the
stretched point y = (y0, y1..yN), where y0 is the reciprocal of consumed
power and yi are power fractions; the original powers come back as yi/y0.

The constrained concave maximization is then solved as an unconstrained
minimization: log barriers keep the inequalities strictly feasible, a
quadratic penalty pins the normalization equality, and an outer continuation
shrinks the barrier weight while growing the penalty weight around a plain
gradient-descent inner loop with Armijo backtracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScale, InfeasibleRate, MaxItersExceeded, OutOfDomain
from .metrics import LN2, EeParams, PowerProfile, interference_vector
from .scenario import NetworkScenario

# A transformed point is a plain float array of length N+1: index 0 holds the
# reciprocal consumed power, indices 1..N the power fractions.
TransformedPoint = np.ndarray

_SCALE_FLOOR = 1e-300
_BOUNDARY_FRACTION = 0.01   # per-step floor: barrier args keep >= 1% of value
_STEP_GROWTH = 2.0


@dataclass
class EeSubproblem:
    """One SBS's view of the network with everyone else frozen.

    direct_gain[i] is the serving-link gain on RB i; interference_w[i] the
    interference-plus-noise snapshot in watts. Solving a subproblem never
    touches the global profile it was built from.
    """

    direct_gain: np.ndarray
    interference_w: np.ndarray
    bandwidth_hz: float
    params: EeParams

    def __post_init__(self):
        self.direct_gain = np.asarray(self.direct_gain, dtype=float)
        self.interference_w = np.asarray(self.interference_w, dtype=float)
        if self.direct_gain.shape != self.interference_w.shape:
            raise ValueError("gain and interference vectors must align")
        if np.any(self.direct_gain <= 0) or np.any(self.interference_w <= 0):
            raise ValueError("gains and interference must be strictly positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def n_rbs(self) -> int:
        return self.direct_gain.size


@dataclass
class PenaltySchedule:
    """Outer continuation: barrier weight shrinks geometrically to its floor
    while the equality-penalty weight grows, until the normalization equality
    holds within eq_tol."""

    barrier0: float = 1.0
    barrier_shrink: float = 0.2
    barrier_floor: float = 1e-6
    penalty0: float = 10.0
    penalty_growth: float = 5.0
    outer_max: int = 12
    eq_tol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.barrier_shrink < 1 < self.penalty_growth:
            raise ValueError("need barrier_shrink in (0,1) and penalty_growth > 1")
        for name in ("barrier0", "barrier_floor", "penalty0", "eq_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.outer_max < 1:
            raise ValueError("outer_max must be >= 1")


@dataclass
class InnerSolverConfig:
    """Gradient-descent loop knobs. grad_tol is relative: the loop stops when
    the gradient norm falls below grad_tol * (1 + |objective|)."""

    grad_tol: float = 1e-8
    max_iters: int = 5000
    armijo_c: float = 1e-4
    backtrack_beta: float = 0.5
    step_init: float = 1.0

    def __post_init__(self):
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must be in (0, 1)")
        if not 0 < self.backtrack_beta < 1:
            raise ValueError("backtrack_beta must be in (0, 1)")


@dataclass
class SolveDiagnostics:
    """Per-solve bookkeeping, JSON-serializable via to_dict()."""

    converged: bool = False
    stalled: bool = False
    outer_rounds: int = 0
    inner_iterations: int = 0
    final_grad_norm: float = math.nan
    equality_violation: float = math.nan
    rounds: list = field(default_factory=list)
    objective_history: list | None = None

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "stalled": self.stalled,
            "outer_rounds": self.outer_rounds,
            "inner_iterations": self.inner_iterations,
            "final_grad_norm": self.final_grad_norm,
            "equality_violation": self.equality_violation,
            "rounds": self.rounds,
        }


def make_subproblem(scn: NetworkScenario, profile: PowerProfile, k: int,
                    params: EeParams) -> EeSubproblem:
    """Freeze everyone else's powers and extract cell k's subproblem."""
    return EeSubproblem(
        direct_gain=scn.direct_gain(k).copy(),
        interference_w=interference_vector(scn, profile, k),
        bandwidth_hz=scn.bandwidth_hz,
        params=params,
    )


def subproblem_rate(sub: EeSubproblem, p: np.ndarray) -> float:
    """Rate of the subproblem's cell at power vector p (bit/s)."""
    sinr = sub.direct_gain * p / sub.interference_w
    return sub.bandwidth_hz * float(np.log1p(sinr).sum()) / LN2


def subproblem_ee(sub: EeSubproblem, p: np.ndarray) -> float:
    """Energy efficiency at power vector p (bit/joule)."""
    return subproblem_rate(sub, p) / sub.params.consumed_power_w(float(np.sum(p)))


def to_transformed(p: np.ndarray, params: EeParams) -> TransformedPoint:
    """Map a power vector onto the normalized stretched point.

    The result satisfies p_circuit*y0 + sum(y_i)/amp_efficiency = 1 exactly
    (up to rounding); powers are recovered as y_i / y0.
    """
    p = np.asarray(p, dtype=float)
    consumed = params.consumed_power_w(float(p.sum()))
    return np.concatenate(([1.0 / consumed], p / consumed))


def from_transformed(y: TransformedPoint) -> np.ndarray:
    """Recover the power vector from a stretched point: p_i = y_i / y_0."""
    if y[0] <= _SCALE_FLOOR:
        raise DegenerateScale(f"scale component {y[0]!r} is numerically zero")
    return np.asarray(y[1:], dtype=float) / y[0]


def equality_violation(y: TransformedPoint, params: EeParams) -> float:
    """Signed deviation from the normalization equality."""
    return params.p_circuit_w * y[0] + float(np.sum(y[1:])) / params.amp_efficiency - 1.0


def _stretched_rate(y: TransformedPoint, sub: EeSubproblem) -> float:
    # Rate at the recovered powers; well-defined for y0 > 0, y_i >= 0.
    sinr = sub.direct_gain * y[1:] / (sub.interference_w * y[0])
    return sub.bandwidth_hz * float(np.log1p(sinr).sum()) / LN2


def transformed_ee(y: TransformedPoint, sub: EeSubproblem) -> float:
    """EE objective in stretched coordinates: y0 times the recovered rate.

    For points produced by to_transformed (normalization equality holding)
    this equals subproblem_ee(sub, from_transformed(y)) exactly; off the
    normalized slice it scales linearly with the point.
    """
    if y[0] <= 0:
        raise OutOfDomain("scale component must be positive")
    return y[0] * _stretched_rate(y, sub)


def _barrier_slacks(y: TransformedPoint, sub: EeSubproblem) -> tuple[np.ndarray, float, float]:
    """All barrier arguments: the N+1 coordinates, the budget slack, and the
    rate-floor slack."""
    budget = y[0] * sub.params.p_max_w - float(np.sum(y[1:]))
    rate_slack = _stretched_rate(y, sub) - sub.params.r_min
    return y, budget, rate_slack


def _psi_parts(y: TransformedPoint, sub: EeSubproblem, barrier_weight: float,
               penalty_weight: float, want_grad: bool, want_precond: bool = False):
    """Penalized objective, optionally with gradient and a positive diagonal
    curvature estimate used to precondition descent directions.

    Returns (value, grad, diag); grad/diag are None when not requested, and
    (None, None, None) flags a point outside the barrier domain.
    """
    p = sub.params
    y0 = y[0]
    yi = y[1:]
    if y0 <= 0.0 or np.any(yi < 0.0):
        return None, None, None

    w_ln2 = sub.bandwidth_hz / LN2
    denom = sub.interference_w * y0 + sub.direct_gain * yi     # I_i y0 + a_i y_i
    log_terms = np.log1p(sub.direct_gain * yi / (sub.interference_w * y0))
    rate_y = w_ln2 * float(log_terms.sum())
    zeta_val = y0 * rate_y

    value = -zeta_val
    ee_frac = sub.direct_gain * yi / denom                     # in [0, 1)

    budget = rate_slack = None
    if barrier_weight > 0.0:
        budget = y0 * p.p_max_w - float(yi.sum())
        rate_slack = rate_y - p.r_min
        if budget <= 0.0 or rate_slack <= 0.0 or np.any(yi <= 0.0):
            return None, None, None
        barrier = -float(np.log(y).sum()) - math.log(budget) - math.log(rate_slack)
        value += barrier_weight * barrier

    resid = p.p_circuit_w * y0 + float(yi.sum()) / p.amp_efficiency - 1.0
    value += penalty_weight * resid * resid

    if not want_grad:
        return value, None, None

    grad = np.empty_like(y)
    # d(-zeta): objective part
    grad[0] = -w_ln2 * float((log_terms - ee_frac).sum())
    grad[1:] = -w_ln2 * sub.direct_gain * y0 / denom

    if barrier_weight > 0.0:
        # -(log of every coordinate)
        grad -= barrier_weight / y
        # -log(budget slack): slack gradient is (p_max, -1, ..., -1)
        grad[0] -= barrier_weight * p.p_max_w / budget
        grad[1:] += barrier_weight / budget
        # -log(rate slack): rate gradient in stretched coordinates
        drate_d0 = -w_ln2 * float(ee_frac.sum()) / y0
        drate_di = w_ln2 * sub.direct_gain / denom
        grad[0] -= barrier_weight * drate_d0 / rate_slack
        grad[1:] -= barrier_weight * drate_di / rate_slack

    grad[0] += penalty_weight * 2.0 * resid * p.p_circuit_w
    grad[1:] += penalty_weight * 2.0 * resid / p.amp_efficiency

    if not want_precond:
        return value, grad, None

    # Positive pieces of the Hessian diagonal, excluding the equality-penalty
    # term (handled exactly as a rank-1 update by the descent loop);
    # indefinite parts of the rate-slack barrier are dropped so the estimate
    # stays positive.
    diag = np.empty_like(y)
    curv = w_ln2 * sub.direct_gain ** 2 / denom ** 2
    diag[0] = float((curv * yi * yi).sum()) / y0
    diag[1:] = curv * y0
    if barrier_weight > 0.0:
        diag += barrier_weight / (y * y)
        diag[0] += barrier_weight * (p.p_max_w / budget) ** 2
        diag[1:] += barrier_weight / budget ** 2
        diag[0] += barrier_weight * (drate_d0 / rate_slack) ** 2
        diag[1:] += barrier_weight * ((drate_di / rate_slack) ** 2
                                      + curv / rate_slack)
    return value, grad, diag


def penalized_objective(y: TransformedPoint, sub: EeSubproblem,
                        barrier_weight: float, penalty_weight: float) -> float:
    """Barrier/penalty objective: negative EE plus weighted log barriers for
    the inequalities and a weighted squared normalization residual.

    With both weights zero this is exactly the negated EE objective."""
    value, _, _ = _psi_parts(y, sub, barrier_weight, penalty_weight, want_grad=False)
    if value is None:
        raise OutOfDomain("point violates a barrier constraint")
    return value


def penalized_objective_gradient(y: TransformedPoint, sub: EeSubproblem,
                                 barrier_weight: float,
                                 penalty_weight: float) -> np.ndarray:
    """Closed-form gradient of penalized_objective."""
    _, grad, _ = _psi_parts(y, sub, barrier_weight, penalty_weight, want_grad=True)
    if grad is None:
        raise OutOfDomain("point violates a barrier constraint")
    return grad


def find_strictly_feasible(sub: EeSubproblem) -> TransformedPoint:
    """Pick an interior starting point for the barrier solve.

    Sweeps uniform allocations alpha*(P_max/N) downward from 90% of budget;
    if the rate floor rejects those, retries with nearly all power on the
    best-SINR RB. Raises InfeasibleRate when the floor is out of reach even
    at full power (checked both uniformly and fully concentrated).
    """
    p_max, r_min = sub.params.p_max_w, sub.params.r_min
    n = sub.n_rbs
    margin = 1e-9 * r_min  # strictness margin on the rate slack

    def ok(p_vec: np.ndarray) -> bool:
        return subproblem_rate(sub, p_vec) - r_min > margin

    uniform = np.full(n, p_max / n)
    for alpha in (0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01):
        cand = alpha * uniform
        if r_min == 0.0 or ok(cand):
            return to_transformed(cand, sub.params)

    # Uniform start failed the rate floor; certify infeasibility at full power.
    best_rb = int(np.argmax(sub.direct_gain / sub.interference_w))
    concentrated_full = np.zeros(n)
    concentrated_full[best_rb] = p_max
    if subproblem_rate(sub, uniform) < r_min and \
            subproblem_rate(sub, concentrated_full) < r_min:
        raise InfeasibleRate(
            f"rate floor {r_min:g} bit/s unreachable: best achievable is "
            f"{max(subproblem_rate(sub, uniform), subproblem_rate(sub, concentrated_full)):.6g} "
            f"bit/s at full power"
        )

    # Floor is reachable by concentrating; use an interior concentrated mix.
    mix = np.full(n, 1e-3)
    mix[best_rb] = 1.0 - 1e-3 * (n - 1)
    for alpha in (0.99, 0.95, 0.9, 0.7, 0.5):
        cand = alpha * p_max * mix
        if ok(cand):
            return to_transformed(cand, sub.params)
    raise InfeasibleRate(
        f"rate floor {r_min:g} bit/s admits no strictly interior start "
        f"(achievable only at the boundary)"
    )


def _max_step_linear(y: TransformedPoint, d: np.ndarray, p_max: float) -> float:
    """Largest step keeping the linear barrier args (coordinates and budget
    slack) above the per-step boundary fraction; the nonlinear rate slack is
    enforced by the line search itself."""
    keep = 1.0 - _BOUNDARY_FRACTION
    t = math.inf
    shrink = d < 0
    if np.any(shrink):
        t = float(np.min(keep * y[shrink] / -d[shrink]))
    budget = y[0] * p_max - float(np.sum(y[1:]))
    d_budget = d[0] * p_max - float(np.sum(d[1:]))
    if d_budget < 0:
        t = min(t, keep * budget / -d_budget)
    return t


def _descend(y: TransformedPoint, sub: EeSubproblem, barrier_weight: float,
             penalty_weight: float, cfg: InnerSolverConfig,
             history: list | None):
    """Gradient descent with Armijo backtracking and a fraction-to-boundary
    safeguard; returns (point, value, grad_norm, iterations, stalled).

    Descent directions are preconditioned gradients: the gradient is scaled
    by a positive diagonal curvature estimate plus the equality-penalty
    rank-1 term folded in closed form (Sherman-Morrison). Plain steepest
    descent needs tens of thousands of iterations once the penalty weight
    grows; the preconditioner keeps every linesearch first-order and O(N).
    """
    p = sub.params
    eq_dir = np.full_like(y, 1.0 / p.amp_efficiency)
    eq_dir[0] = p.p_circuit_w

    def direction(grad, diag):
        dmax = float(diag.max())
        dd = np.maximum(diag, 1e-14 * dmax) if dmax > 0 else np.ones_like(diag)
        beta = 2.0 * penalty_weight
        dg = grad / dd
        if beta == 0.0:
            return -dg
        dv = eq_dir / dd
        coeff = beta * float(np.dot(eq_dir, dg)) / (1.0 + beta * float(np.dot(eq_dir, dv)))
        return -(dg - coeff * dv)

    f, g, h = _psi_parts(y, sub, barrier_weight, penalty_weight,
                         want_grad=True, want_precond=True)
    if f is None:
        raise OutOfDomain("inner solve started outside the barrier domain")
    if history is not None:
        history.append(f)

    base = _barrier_slacks(y, sub)
    t_prev = cfg.step_init
    iters = 0
    stalled = False
    gnorm = float(np.linalg.norm(g))
    while iters < cfg.max_iters:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.grad_tol * (1.0 + abs(f)):
            break
        d = direction(g, h)
        slope = float(np.dot(g, d))
        t = min(min(_STEP_GROWTH * t_prev, 4.0 * cfg.step_init),
                _max_step_linear(y, d, sub.params.p_max_w))
        dnorm = float(np.linalg.norm(d))
        accepted = False
        min_move = 1e-16 * (1.0 + float(np.linalg.norm(y)))
        while t * dnorm > min_move:
            y_try = y + t * d
            f_try, _, _ = _psi_parts(y_try, sub, barrier_weight, penalty_weight,
                                     want_grad=False)
            if f_try is not None and f_try <= f + cfg.armijo_c * t * slope:
                # fraction-to-boundary on the nonlinear rate slack
                _, _, rate_slack = _barrier_slacks(y_try, sub)
                if barrier_weight == 0.0 or rate_slack >= _BOUNDARY_FRACTION * base[2]:
                    accepted = True
                    break
            t *= cfg.backtrack_beta
        if not accepted:
            stalled = True
            break
        y, f = y_try, f_try
        base = _barrier_slacks(y, sub)
        _, g, h = _psi_parts(y, sub, barrier_weight, penalty_weight,
                             want_grad=True, want_precond=True)
        gnorm = float(np.linalg.norm(g))
        t_prev = t
        iters += 1
        if history is not None:
            history.append(f)
    return y, f, gnorm, iters, stalled


def solve_best_response(sub: EeSubproblem, sched: PenaltySchedule | None = None,
                        inner: InnerSolverConfig | None = None,
                        collect_history: bool = False):
    """Maximize one SBS's EE against a frozen interference snapshot.

    Runs the barrier/penalty continuation with warm starts, then recovers the
    power vector. Returns (powers, achieved EE, diagnostics). Raises
    InfeasibleRate when the rate floor is unreachable and MaxItersExceeded
    when the continuation ends with the normalization equality still violated
    beyond eq_tol (best point attached).
    """
    sched = sched or PenaltySchedule()
    inner = inner or InnerSolverConfig()
    y = find_strictly_feasible(sub)
    diag = SolveDiagnostics()
    if collect_history:
        diag.objective_history = []

    for outer in range(sched.outer_max):
        barrier_weight = max(sched.barrier0 * sched.barrier_shrink ** outer,
                             sched.barrier_floor)
        penalty_weight = sched.penalty0 * sched.penalty_growth ** outer
        round_hist: list | None = None
        if collect_history:
            round_hist = []
            diag.objective_history.append(round_hist)
        # Rescale the warm start onto the normalization slice. Recovered
        # powers are invariant under this ray move and every barrier argument
        # stays strictly positive; starting each round at zero violation
        # means the penalized minimum is approached by scaling up, away from
        # the budget boundary, instead of squeezing against it.
        y = y / (1.0 + equality_violation(y, sub.params))
        y, f, gnorm, iters, stalled = _descend(y, sub, barrier_weight,
                                               penalty_weight, inner, round_hist)
        eq_viol = abs(equality_violation(y, sub.params))
        diag.outer_rounds = outer + 1
        diag.inner_iterations += iters
        diag.final_grad_norm = gnorm
        diag.equality_violation = eq_viol
        diag.stalled = diag.stalled or stalled
        diag.rounds.append({
            "barrier_weight": barrier_weight,
            "penalty_weight": penalty_weight,
            "inner_iterations": iters,
            "grad_norm": gnorm,
            "eq_violation": eq_viol,
            "objective": f,
        })
        if barrier_weight <= sched.barrier_floor * (1.0 + 1e-12) and eq_viol <= sched.eq_tol:
            diag.converged = True
            break

    p = from_transformed(y)
    ee = subproblem_ee(sub, p)
    if not diag.converged:
        raise MaxItersExceeded(
            f"continuation ended after {sched.outer_max} rounds with equality "
            f"violation {diag.equality_violation:.3e} > {sched.eq_tol:g}",
            best_power=p, diagnostics=diag,
        )
    return p, ee, diag
