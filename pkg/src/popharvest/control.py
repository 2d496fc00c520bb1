"""Optimal proportional harvesting by the discrete maximum principle.

The state equations are the single-species and prey-predator maps with a
time-varying harvest ``h_t x_t`` removed from the prey. The reward is

    J(h) = sum_t w_t (c1 h_t x_t - c2 h_t^2),    0 <= h_t <= h_max,

where ``w_t`` selects the summation range (see ``INDEX_RANGES``). Adjoints run
backwards from zero terminal values and the control update is the clamped
stationary point of the Hamiltonian, relaxed against the previous iterate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .maps import PairParams, SingleParams, growth_derivative, saturating_growth

# Summation range of the objective, as (first t, one past last t) in
# zero-based time where x_0 is the initial density:
#   hamiltonian  t = 0..T-1, the range the Hamiltonian and adjoints use
#   shifted      t = 1..T-1, the printed sum read with x_0 as the initial state
#   one-based    t = 0..T-2, the printed sum read with x_1 as the initial state
INDEX_RANGES = {
    "hamiltonian": lambda T: (0, T),
    "shifted": lambda T: (1, T),
    "one-based": lambda T: (0, T - 1),
}
ADJOINT_MODES = ("consistent", "paper-literal")


@dataclass(frozen=True)
class ControlProblem:
    model: str
    params: SingleParams | PairParams
    x0: float
    T: int
    c1: float
    c2: float
    y0: float | None = None
    h_max: float = 0.9
    adjoint_mode: str = "consistent"
    index_range: str = "hamiltonian"

    def __post_init__(self):
        if self.model == "single":
            if not isinstance(self.params, SingleParams):
                raise TypeError("single model needs SingleParams")
            if self.params.h != 0:
                raise ValueError("the harvest of a control problem is the control; set params.h = 0")
        elif self.model == "pair":
            if not isinstance(self.params, PairParams):
                raise TypeError("pair model needs PairParams")
            if self.y0 is None or not (math.isfinite(self.y0) and self.y0 >= 0):
                raise ValueError("pair model needs a finite y0 >= 0")
        else:
            raise ValueError(f"unknown model {self.model!r}")
        if not (math.isfinite(self.x0) and self.x0 >= 0):
            raise ValueError("x0 must be finite and >= 0")
        if int(self.T) != self.T or self.T < 2:
            raise ValueError("T must be an integer >= 2")
        if not (self.c1 >= 0 and self.c2 > 0):
            raise ValueError("need c1 >= 0 and c2 > 0")
        if not 0 < self.h_max < 1:
            raise ValueError("h_max must lie in (0, 1)")
        if self.adjoint_mode not in ADJOINT_MODES:
            raise ValueError(f"adjoint_mode must be one of {ADJOINT_MODES}")
        if self.index_range not in INDEX_RANGES:
            raise ValueError(f"index_range must be one of {tuple(INDEX_RANGES)}")

    @property
    def weights(self) -> np.ndarray:
        lo, hi = INDEX_RANGES[self.index_range](self.T)
        w = np.zeros(self.T)
        w[lo:hi] = 1.0
        return w

    def with_(self, **changes) -> "ControlProblem":
        return replace(self, **changes)


@dataclass(frozen=True)
class SweepConfig:
    omega: float = 0.5
    conv_tol: float = 1e-3
    max_iters: int = 10000
    # Halve omega whenever the unrelaxed control change grows between sweeps.
    adaptive: bool = True
    omega_min: float = 1.0 / 256
    starts: str = "zero"

    def __post_init__(self):
        if not 0 < self.omega <= 1:
            raise ValueError("omega must lie in (0, 1]")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.starts not in ("zero", "switching"):
            raise ValueError("starts must be 'zero' or 'switching'")


@dataclass
class ControlSolution:
    controls: np.ndarray
    x: np.ndarray
    y: np.ndarray | None
    lambda1: np.ndarray
    lambda2: np.ndarray | None
    J: float
    iterations: int
    converged: bool
    omega: float
    start: str = "zero"
    notes: list[str] = field(default_factory=list)


def _check_controls(prob: ControlProblem, controls) -> np.ndarray:
    h = np.asarray(controls, dtype=float)
    if h.shape != (prob.T,):
        raise ValueError(f"expected {prob.T} controls, got shape {h.shape}")
    if not np.all(np.isfinite(h)) or h.min() < -1e-12 or h.max() > prob.h_max + 1e-12:
        raise ValueError(f"controls must lie in [0, {prob.h_max}]")
    return h


def forward(prob: ControlProblem, controls) -> tuple[np.ndarray, np.ndarray | None]:
    """States x_0..x_T (and y for the pair model) under the given harvest schedule."""
    h = np.asarray(controls, dtype=float)
    p = prob.params
    x = np.empty(prob.T + 1)
    x[0] = prob.x0
    if prob.model == "single":
        for t in range(prob.T):
            x[t + 1] = max(saturating_growth(p.r, p.k, x[t]) - h[t] * x[t], 0.0) + 0.0
        return x, None
    y = np.empty(prob.T + 1)
    y[0] = prob.y0
    for t in range(prob.T):
        x[t + 1] = max(saturating_growth(p.r, p.k, x[t]) - p.a * y[t] * x[t] - h[t] * x[t], 0.0) + 0.0
        y[t + 1] = max(-p.c * y[t] + p.d * x[t] * y[t], 0.0) + 0.0
    return x, y


def objective(prob: ControlProblem, controls) -> float:
    h = _check_controls(prob, controls)
    x, _ = forward(prob, h)
    w = prob.weights
    return float(np.sum(w * (prob.c1 * h * x[:-1] - prob.c2 * h * h)))


def constant_objective(prob: ControlProblem, h: float) -> float:
    return objective(prob, np.full(prob.T, float(h)))


def adjoint_sweep_single(prob: ControlProblem, controls, states) -> np.ndarray:
    """lambda_T = 0, lambda_t = w_t c1 h_t + lambda_{t+1} (g'(x_t) - h_t)."""
    h = np.asarray(controls, dtype=float)
    x = np.asarray(states, dtype=float)
    p, w = prob.params, prob.weights
    lam = np.zeros(prob.T + 1)
    gp = growth_derivative(p.r, p.k, x[:-1])
    for t in range(prob.T - 1, -1, -1):
        lam[t] = w[t] * prob.c1 * h[t] + lam[t + 1] * (gp[t] - h[t])
    return lam


def adjoint_sweep_pair(prob: ControlProblem, controls, states, mode: str | None = None):
    """Backward recursion for (lambda1, lambda2) with zero terminal values.

    ``consistent`` differentiates the full prey equation, so lambda1 picks up
    ``-a y_t lambda1_{t+1}``; ``paper-literal`` omits that term.
    """
    mode = mode or prob.adjoint_mode
    if mode not in ADJOINT_MODES:
        raise ValueError(f"mode must be one of {ADJOINT_MODES}")
    h = np.asarray(controls, dtype=float)
    x, y = (np.asarray(s, dtype=float) for s in states)
    p, w = prob.params, prob.weights
    predation = p.a if mode == "consistent" else 0.0
    lam1 = np.zeros(prob.T + 1)
    lam2 = np.zeros(prob.T + 1)
    gp = growth_derivative(p.r, p.k, x[:-1])
    for t in range(prob.T - 1, -1, -1):
        lam1[t] = (
            w[t] * prob.c1 * h[t]
            + lam1[t + 1] * (gp[t] - predation * y[t] - h[t])
            + lam2[t + 1] * p.d * y[t]
        )
        lam2[t] = lam1[t + 1] * (-p.a * x[t]) + lam2[t + 1] * (-p.c + p.d * x[t])
    return lam1, lam2


def adjoints(prob: ControlProblem, controls, x, y=None):
    if prob.model == "single":
        return adjoint_sweep_single(prob, controls, x), None
    return adjoint_sweep_pair(prob, controls, (x, y))


def characterize_control(prob: ControlProblem, x_t, lam1_next, weight=1.0):
    """Maximiser of the Hamiltonian in h_t.

    With a reward weight the Hamiltonian is concave in h and the answer is
    clamp(x (c1 - lambda) / (2 c2), 0, h_max). Steps outside the summation
    range have a linear Hamiltonian and get a bang-bang control.
    """
    x_t = np.asarray(x_t, dtype=float)
    lam = np.asarray(lam1_next, dtype=float)
    w = np.broadcast_to(np.asarray(weight, dtype=float), np.broadcast(x_t, lam).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = x_t * (w * prob.c1 - lam) / (2.0 * prob.c2 * w)
    linear = np.where((lam < 0) & (x_t > 0), prob.h_max, 0.0)
    out = np.where(w > 0, np.clip(interior, 0.0, prob.h_max), linear)
    return out if out.ndim else float(out)


def gradient(prob: ControlProblem, controls, mode: str | None = None) -> np.ndarray:
    """dJ/dh_t = w_t (c1 x_t - 2 c2 h_t) - lambda1_{t+1} x_t from the adjoints."""
    h = _check_controls(prob, controls)
    x, y = forward(prob, h)
    if prob.model == "single":
        lam1 = adjoint_sweep_single(prob, h, x)
    else:
        lam1, _ = adjoint_sweep_pair(prob, h, (x, y), mode)
    return prob.weights * (prob.c1 * x[:-1] - 2.0 * prob.c2 * h) - lam1[1:] * x[:-1]


def initial_schedules(prob: ControlProblem, starts: str) -> list[tuple[str, np.ndarray]]:
    """Starting schedules: all-zero, plus h_max and every single-switch bang schedule for "switching"."""
    T, top = prob.T, prob.h_max
    out = [("zero", np.zeros(T))]
    if starts == "switching":
        out.append(("h_max", np.full(T, top)))
        for tau in range(1, T):
            front = np.zeros(T)
            front[:tau] = top
            out.append((f"h_max before t={tau}", front))
            out.append((f"h_max from t={tau}", top - front))
    return out


def _sweep(prob: ControlProblem, cfg: SweepConfig, h: np.ndarray):
    w = prob.weights
    omega = cfg.omega
    prev_full = math.inf
    for it in range(1, cfg.max_iters + 1):
        x, y = forward(prob, h)
        lam1, _ = adjoints(prob, h, x, y)
        target = characterize_control(prob, x[:-1], lam1[1:], w)
        full = float(np.sum(np.abs(target - h)))
        if cfg.adaptive and full > prev_full and omega > cfg.omega_min:
            omega = max(omega / 2.0, cfg.omega_min)
        prev_full = full
        h_new = omega * target + (1.0 - omega) * h
        # Rescaled so that damping omega below cfg.omega does not loosen the test.
        change = np.sum(np.abs(h_new - h)) * (cfg.omega / omega)
        done = cfg.conv_tol * np.sum(np.abs(h_new)) - change >= 0
        h = h_new
        if done:
            return h, it, True, omega
    return h, cfg.max_iters, False, omega


def solve_fbs(prob: ControlProblem, cfg: SweepConfig | None = None) -> ControlSolution:
    """Forward-backward sweep.

    Each sweep stops when conv_tol * sum|h_new| - sum|h_new - h_old| >= 0, the
    change being measured at the configured relaxation even after adaptive
    damping. With ``cfg.starts == "switching"`` the sweep is repeated from
    several bang-bang schedules and the best objective wins (the zero start
    on ties). Running out of iterations is reported through
    ``converged=False``.
    """
    cfg = cfg or SweepConfig()
    best = None
    total_iters = 0
    for label, h0 in initial_schedules(prob, cfg.starts):
        h, it, converged, omega = _sweep(prob, cfg, h0)
        total_iters += it
        J = objective(prob, h)
        if best is None or J > best[1]:
            best = (h, J, it, converged, omega, label)

    h, J, it, converged, omega, label = best
    x, y = forward(prob, h)
    lam1, lam2 = adjoints(prob, h, x, y)
    notes = []
    if not converged:
        notes.append(f"no convergence after {cfg.max_iters} sweeps")
    if cfg.starts != "zero":
        notes.append(f"best start: {label}; {total_iters} sweeps over all starts")
    return ControlSolution(
        controls=h,
        x=x,
        y=y,
        lambda1=lam1,
        lambda2=lam2,
        J=J,
        iterations=it,
        converged=converged,
        omega=omega,
        start=label,
        notes=notes,
    )


@dataclass
class OracleResult:
    controls: np.ndarray
    J: float
    grid_gap: float
    levels: int


def _batch_objective(prob: ControlProblem, H: np.ndarray) -> np.ndarray:
    """Objective for each row of H (n, T) at once."""
    p, w = prob.params, prob.weights
    n = H.shape[0]
    x = np.full(n, float(prob.x0))
    y = np.full(n, float(prob.y0)) if prob.model == "pair" else None
    J = np.zeros(n)
    for t in range(prob.T):
        h = H[:, t]
        J += w[t] * (prob.c1 * h * x - prob.c2 * h * h)
        growth = saturating_growth(p.r, p.k, x)
        if y is None:
            x = np.maximum(growth - h * x, 0.0)
        else:
            x, y = (
                np.maximum(growth - p.a * y * x - h * x, 0.0),
                np.maximum(-p.c * y + p.d * x * y, 0.0),
            )
    return J


def brute_force_oracle(
    prob: ControlProblem, levels: int = 21, max_evaluations: int = 10**7, chunk: int = 2**20
) -> OracleResult:
    """Exhaustive maximisation over the uniform grid {0, ..., h_max}^T.

    Ties resolve to the lexicographically smallest control tuple. ``grid_gap``
    is the drop from the grid optimum to its best one-step neighbour.
    """
    if prob.T > 6 or levels > 21 or levels < 2:
        raise ValueError("oracle supports T <= 6 and 2 <= levels <= 21")
    total = levels**prob.T
    if total > max_evaluations:
        raise ValueError(f"{total} evaluations exceed the budget of {max_evaluations}")
    grid = np.linspace(0.0, prob.h_max, levels)
    shape = (levels,) * prob.T

    best_J, best_idx = -math.inf, None
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.column_stack(np.unravel_index(flat, shape))
        J = _batch_objective(prob, grid[idx])
        i = int(np.argmax(J))
        if J[i] > best_J:
            best_J, best_idx = float(J[i]), idx[i]

    neighbours = []
    for t, delta in itertools.product(range(prob.T), (-1, 1)):
        j = best_idx[t] + delta
        if 0 <= j < levels:
            nb = best_idx.copy()
            nb[t] = j
            neighbours.append(nb)
    nb_J = _batch_objective(prob, grid[np.array(neighbours)])
    return OracleResult(
        controls=grid[best_idx],
        J=best_J,
        grid_gap=float(best_J - nb_J.max()),
        levels=levels,
    )
