"""Seeded randomized cross-checks between independent computation routes.

Used by the ``validate`` subcommand and by the test-suite. Each check draws
parameter points from a fixed distribution and compares two routes that share
no code path beyond the map definitions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import stability as st
from .control import ControlProblem, forward, gradient, objective
from .maps import PairParams, SingleParams, State, raw_step_pair, raw_step_single

BAND = 1e-6


@dataclass
class CheckResult:
    name: str
    draws: int
    compared: int = 0
    agreed: int = 0
    skipped_band: int = 0
    indeterminate: int = 0
    worst: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.compared > 0 and self.agreed == self.compared

    def line(self) -> str:
        return (
            f"{self.name}: {self.agreed}/{self.compared} agree "
            f"(band-skipped {self.skipped_band}, indeterminate {self.indeterminate}, worst {self.worst:.3g})"
        )


def _logu(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def draw_single(rng, need_positive=True) -> SingleParams:
    while True:
        h = 0.0 if rng.random() < 0.5 else rng.uniform(0.0, 0.9)
        p = SingleParams(r=rng.uniform(1.05, 12.0), k=_logu(rng, 3e-4, 20.0), h=h)
        if not need_positive or st.positive_equilibrium_single(p) is not None:
            return p


def draw_pair(rng, which: str, theorem_gate: bool = True) -> PairParams:
    while True:
        p = PairParams(
            r=rng.uniform(0.1, 12.0) if which == "e0" else rng.uniform(1.05, 12.0),
            k=_logu(rng, 3e-4, 20.0),
            a=rng.uniform(0.01, 2.0),
            c=rng.uniform(0.0, 5.0),
            d=rng.uniform(0.1, 6.0),
        )
        if which == "e1" and st.boundary_equilibrium(p) is None:
            continue
        if which == "e2":
            if st.interior_equilibrium(p) is None:
                continue
            if theorem_gate and not p.d > st.InteriorConstants.of(p).N:
                continue
        return p


def _near_unit(moduli) -> bool:
    return min(abs(abs(m) - 1.0) for m in moduli) < BAND


def jury_vs_eigen(n: int, seed: int) -> CheckResult:
    """n pairs (p, q) ~ U[-3, 3]² drawn inside F(1) > 0, where the criterion applies.

    Rejected draws are counted under ``indeterminate``.
    """
    rng = np.random.default_rng(seed)
    res = CheckResult("jury-vs-eigen", n)
    accepted = 0
    while accepted < n:
        p, q = rng.uniform(-3.0, 3.0, 2)
        f = st.JuryQuadratic(float(p), float(q))
        if f.F(1.0) <= BAND:
            res.indeterminate += 1
            continue
        accepted += 1
        roots = st.quadratic_roots(f.p, f.q)
        if _near_unit(roots) or abs(f.F(-1.0)) < BAND:
            res.skipped_band += 1
            continue
        a = st.jury_classify(f).tag
        b = st.classify_by_eigen(f.companion(), tau_nh=0.0).tag
        res.compared += 1
        if a == b:
            res.agreed += 1
        else:
            res.failures.append((f.p, f.q, a.value, b.value))
    return res


def theorem_vs_eigen(which: str, n: int, seed: int) -> CheckResult:
    """Closed-form classifier against Jacobian eigenvalues for x2/x_h, e0, e1 or e2."""
    rng = np.random.default_rng(seed)
    res = CheckResult(f"theorem-vs-eigen[{which}]", n)
    for _ in range(n):
        if which == "single":
            p = draw_single(rng)
            xs = st.positive_equilibrium_single(p)
            lam = (st.derivative_single(p, xs),)
            theorem = st.classify_single_theorem(p, "positive")
            eigen = st.classify_by_eigen([[lam[0]]])
        else:
            p = draw_pair(rng, which)
            point, classify = {
                "e0": (State(0.0, 0.0), st.classify_e0_theorem),
                "e1": (st.boundary_equilibrium(p), st.classify_e1_theorem),
                "e2": (st.interior_equilibrium(p), st.classify_e2_theorem),
            }[which]
            J = st.jacobian_pair(p, point)
            lam = st.eigenvalues(J)
            theorem = classify(p)
            eigen = st.classify_by_eigen(J)
        if _near_unit(lam):
            res.skipped_band += 1
            continue
        if theorem.tag is st.Tag.INDETERMINATE:
            res.indeterminate += 1
            continue
        res.compared += 1
        if theorem.tag == eigen.tag:
            res.agreed += 1
        else:
            res.failures.append((p, theorem.tag.value, eigen.tag.value, theorem.detail))
    return res


def fixed_point_residuals(n: int, seed: int) -> dict[str, CheckResult]:
    """Map residual of every closed-form equilibrium over random valid draws."""
    rng = np.random.default_rng(seed)
    out = {name: CheckResult(f"residual[{name}]", n) for name in ("x2", "x_h", "e0", "e1", "e2")}

    def record(name, r):
        res = out[name]
        res.compared += 1
        res.worst = max(res.worst, r)
        if r < 1e-10:
            res.agreed += 1
        else:
            res.failures.append(r)

    for _ in range(n):
        p0 = draw_single(rng)
        p0 = SingleParams(p0.r, p0.k)
        x2 = st.positive_equilibrium_single(p0)
        if x2 is not None:
            record("x2", abs(raw_step_single(p0, x2) - x2))
        while True:
            ph = draw_single(rng)
            if ph.h > 0:
                break
        xh = st.positive_equilibrium_single(ph)
        record("x_h", abs(raw_step_single(ph, xh) - xh))
        for which in ("e0", "e1", "e2"):
            p = draw_pair(rng, which, theorem_gate=False)
            point = {
                "e0": State(0.0, 0.0),
                "e1": st.boundary_equilibrium(p),
                "e2": st.interior_equilibrium(p),
            }[which]
            nxt = raw_step_pair(p, point)
            record(which, max(abs(nxt.x - point.x), abs(nxt.y - point.y)))
    return out


def draw_control_instance(rng, model: str, T: int = 10, mode: str = "consistent"):
    """A random problem and interior control schedule whose states never hit zero."""
    while True:
        if model == "single":
            prob = ControlProblem(
                "single",
                SingleParams(rng.uniform(1.5, 3.0), rng.uniform(0.3, 1.5)),
                x0=rng.uniform(0.1, 1.0),
                T=T,
                c1=rng.uniform(0.05, 0.2),
                c2=rng.uniform(0.005, 0.05),
                adjoint_mode=mode,
            )
            h = rng.uniform(0.05, 0.5, T)
        else:
            prob = ControlProblem(
                "pair",
                PairParams(
                    r=rng.uniform(3.0, 6.0),
                    k=rng.uniform(1.0, 3.0),
                    a=rng.uniform(0.05, 0.3),
                    c=rng.uniform(0.2, 1.0),
                    d=rng.uniform(1.5, 4.0),
                ),
                x0=rng.uniform(0.2, 1.0),
                y0=rng.uniform(0.2, 1.5),
                T=T,
                c1=rng.uniform(0.01, 0.1),
                c2=rng.uniform(0.02, 0.1),
                adjoint_mode=mode,
            )
            h = rng.uniform(0.02, 0.3, T)
        x, y = forward(prob, h)
        states = [x] if y is None else [x, y]
        if all(np.all(s > 1e-6) for s in states):
            return prob, h


def draw_oracle_instance(rng, model: str, spread: float = 0.25) -> ControlProblem:
    """A small control problem near the worked example: each rate scaled by U(1-spread, 1+spread).

    Single-species instances use T=4, pair instances T=3, so a 21-level
    exhaustive search stays within a few million evaluations.
    """

    def u(v):
        return v * rng.uniform(1.0 - spread, 1.0 + spread)

    if model == "single":
        return ControlProblem(
            "single", SingleParams(u(1.999), u(0.8)), x0=rng.uniform(0.05, 1.0), T=4, c1=u(0.1), c2=u(0.01)
        )
    return ControlProblem(
        "pair",
        PairParams(r=u(5.2), k=u(2.1), a=u(0.1), c=u(0.5), d=u(2.9)),
        x0=rng.uniform(0.2, 1.0),
        y0=rng.uniform(0.2, 1.5),
        T=3,
        c1=u(0.025),
        c2=u(0.08),
    )


def finite_difference_gradient(prob: ControlProblem, h: np.ndarray, step: float = 1e-6) -> np.ndarray:
    g = np.empty(prob.T)
    for t in range(prob.T):
        e = np.zeros(prob.T)
        e[t] = step
        g[t] = (objective(prob, h + e) - objective(prob, h - e)) / (2 * step)
    return g


def gradient_fidelity(model: str, mode: str, n: int, seed: int, rel_tol: float = 1e-5) -> CheckResult:
    rng = np.random.default_rng(seed)
    res = CheckResult(f"gradient[{model},{mode}]", n)
    for _ in range(n):
        prob, h = draw_control_instance(rng, model, mode=mode)
        g = gradient(prob, h)
        fd = finite_difference_gradient(prob, h)
        err = float(np.linalg.norm(g - fd) / np.linalg.norm(fd))
        res.compared += 1
        res.worst = max(res.worst, err)
        if err < rel_tol:
            res.agreed += 1
        else:
            res.failures.append(err)
    return res


def run_all(seed: int = 0, draws: int = 1000, jury_draws: int = 100_000) -> list[CheckResult]:
    results = [jury_vs_eigen(jury_draws, seed)]
    for i, which in enumerate(("single", "e0", "e1", "e2")):
        results.append(theorem_vs_eigen(which, draws, seed + 1 + i))
    results.extend(fixed_point_residuals(draws, seed + 10).values())
    for model in ("single", "pair"):
        results.append(gradient_fidelity(model, "consistent", 10, seed + 20))
    return results
