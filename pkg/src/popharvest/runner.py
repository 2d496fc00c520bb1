"""Execute validated scenarios and write their CSV artifacts."""
from __future__ import annotations

import csv
import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import stability as st
from .basin import (
    PolyMapParams,
    basin_scan,
    classify_poly_fixed_points,
    pair_map,
    poly_fixed_points,
    poly_map,
    single_map,
)
from .control import ControlProblem, SweepConfig, constant_objective, solve_fbs
from .maps import simulate, step_general, step_pair, step_single
from .scenarios import (
    BasinScenario,
    EquilibriaScenario,
    OptimizeScenario,
    SimulateScenario,
    Table1Scenario,
)


def fmt_full(v) -> str:
    return format(float(v), ".17g")


def fmt_table(v) -> str:
    return format(float(v), ".5g")


def _write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


@dataclass
class ScenarioResult:
    name: str
    kind: str
    summary: str
    outputs: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------


def run_simulate(sc: SimulateScenario, out: Path) -> ScenarioResult:
    params = sc.build_params()
    step = {"single": step_single, "pair": step_pair, "general": step_general}[sc.model]
    s0 = tuple(sc.initial) if len(sc.initial) > 1 else sc.initial[0]
    traj = simulate(step, params, s0, sc.horizon)
    header = ["t", "x"] + (["y"] if traj.dim == 2 else [])
    rows = ([str(t)] + [fmt_full(v) for v in row] for t, row in zip(traj.times, traj.states))
    path = _write_csv(out / f"{sc.name}_trajectory.csv", header, rows)
    final = ", ".join(f"{v:.6g}" for v in traj.states[-1])
    summary = f"T={sc.horizon} final=({final}) clamped={'yes' if traj.clamped else 'no'}"
    return ScenarioResult(sc.name, sc.kind, summary, [path.name], {"clamped": traj.clamped})


def _eig_cols(eigs) -> list[str]:
    cols = []
    for i in range(2):
        if i < len(eigs):
            cols += [fmt_full(eigs[i].real), fmt_full(eigs[i].imag)]
        else:
            cols += ["", ""]
    return cols


def equilibrium_reports(model: str, params, tau_nh: float = st.TAU_NH) -> list[st.EquilibriumReport]:
    if model == "single":
        return st.equilibria_single(params, tau_nh)
    if model == "pair":
        return st.equilibria_pair(params, tau_nh)
    return classify_poly_fixed_points(params, tau_nh)


def run_equilibria(sc: EquilibriaScenario, out: Path) -> ScenarioResult:
    reports = equilibrium_reports(sc.model, sc.build_params(), sc.tau_nh)
    header = [
        "name", "kind", "exists", "x", "y", "class_theorem", "class_eigen", "agreement",
        "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "condition", "detail",
    ]
    rows = []
    for rep in reports:
        pt = rep.point
        rows.append(
            [
                rep.name,
                rep.kind,
                str(rep.exists).lower(),
                fmt_full(pt.x) if pt else "",
                fmt_full(pt.y) if pt and pt.y is not None else "",
                str(rep.class_theorem) if rep.class_theorem else "",
                str(rep.class_eigen) if rep.class_eigen else "",
                "" if rep.agreement is None else str(rep.agreement).lower(),
                *_eig_cols(rep.eigenvalues),
                rep.condition,
                rep.class_theorem.detail if rep.class_theorem else "",
            ]
        )
    path = _write_csv(out / f"{sc.name}_equilibria.csv", header, rows)
    parts = [f"{r.name}={r.verdict}" if r.exists else f"{r.name}=absent" for r in reports]
    disagreements = [r.name for r in reports if r.agreement is False]
    summary = " ".join(parts) + (f" DISAGREE:{','.join(disagreements)}" if disagreements else "")
    return ScenarioResult(sc.name, sc.kind, summary, [path.name])


def _resolve_target(sc: BasinScenario, params):
    if isinstance(sc.target, list):
        return np.array(sc.target, dtype=float)
    for rep in equilibrium_reports(sc.model, params):
        if rep.name == sc.target:
            if not rep.exists:
                raise ValueError(f"target: equilibrium {sc.target} does not exist for these parameters")
            return rep.point.as_array()
    raise ValueError(f"target: unknown equilibrium name {sc.target!r}")


def run_basin(sc: BasinScenario, out: Path) -> ScenarioResult:
    params = sc.build_params()
    map_fn = {"single": single_map, "pair": pair_map, "poly": poly_map}[sc.model](params)
    target = _resolve_target(sc, params)
    rep = basin_scan(map_fn, sc.basin_config(), target)
    dim = rep.samples.shape[1]
    header = ["x0"] + (["y0"] if dim == 2 else []) + ["code", "iters"]
    rows = (
        [fmt_full(v) for v in z] + [str(int(c)), str(int(i))]
        for z, c, i in zip(rep.samples, rep.codes, rep.iters)
    )
    path = _write_csv(out / f"{sc.name}_basin.csv", header, rows)
    witness = "" if rep.witness is None else " witness=(" + ", ".join(f"{v:.6g}" for v in rep.witness if v is not None) + ")"
    summary = (
        f"{rep.verdict.value}{witness} converged={rep.n_converged} other={rep.n_other_attractor} "
        f"escaped={rep.n_escaped} interior_coverage={rep.interior_coverage:.4f}"
    )
    return ScenarioResult(
        sc.name,
        sc.kind,
        summary,
        [path.name],
        {"verdict": rep.verdict.value, "n_samples": rep.n_samples},
    )


def write_control_csv(path: Path, sol) -> Path:
    pair = sol.y is not None
    header = ["t", "h", "x"] + (["y"] if pair else []) + ["lambda1"] + (["lambda2"] if pair else [])
    rows = []
    T = len(sol.controls)
    for t in range(T + 1):
        row = [str(t), fmt_full(sol.controls[t]) if t < T else "", fmt_full(sol.x[t])]
        if pair:
            row.append(fmt_full(sol.y[t]))
        row.append(fmt_full(sol.lambda1[t]))
        if pair:
            row.append(fmt_full(sol.lambda2[t]))
        rows.append(row)
    return _write_csv(path, header, rows)


def run_optimize(sc: OptimizeScenario, out: Path, adjoint_mode: str | None = None) -> ScenarioResult:
    prob = sc.problem(**({"adjoint_mode": adjoint_mode} if adjoint_mode else {}))
    cfg = sc.sweep.build()
    sol = solve_fbs(prob, cfg)
    control_path = write_control_csv(out / f"{sc.name}_control.csv", sol)
    rows = [[prob.model, "h*", fmt_table(sol.J), ""]]
    for h in sc.constant_h:
        J = constant_objective(prob, h)
        rows.append([prob.model, fmt_table(h), fmt_table(J), str(sol.J >= J).lower()])
    table_path = _write_csv(out / f"{sc.name}_results.csv", ["model", "h", "J", "dominated"], rows)
    summary = (
        f"J_opt={sol.J:.6g} iterations={sol.iterations} converged={'yes' if sol.converged else 'no'} "
        f"adjoint={prob.adjoint_mode} index_range={prob.index_range}"
    )
    return ScenarioResult(
        sc.name,
        sc.kind,
        summary,
        [control_path.name, table_path.name],
        {"J": sol.J, "iterations": sol.iterations, "converged": sol.converged, "omega": sol.omega},
    )


def emit_table1(
    single: ControlProblem,
    pair: ControlProblem,
    single_h: list[float],
    pair_h: list[float],
    cfg: SweepConfig | None = None,
):
    """Rows (model, h, J, dominated) for each constant harvest plus the sweep optimum.

    ``dominated`` says whether the optimum is at least the row's J.
    Returns the rows (already formatted) and the two sweep solutions.
    """
    rows = []
    solutions = {}
    for label, prob, hs in (("single", single, single_h), ("pair", pair, pair_h)):
        sol = solve_fbs(prob, cfg)
        solutions[label] = sol
        rows.append([label, "h*", fmt_table(sol.J), ""])
        for h in hs:
            J = constant_objective(prob, h)
            rows.append([label, fmt_table(h), fmt_table(J), str(sol.J >= J).lower()])
    return rows, solutions


def run_table1(sc: Table1Scenario, out: Path, adjoint_mode: str | None = None) -> ScenarioResult:
    overrides = {"adjoint_mode": adjoint_mode} if adjoint_mode else {}
    single = sc.single.problem(**overrides)
    pair = sc.pair.problem(**overrides)
    rows, sols = emit_table1(single, pair, sc.single.constant_h, sc.pair.constant_h, sc.sweep.build())
    path = _write_csv(out / f"{sc.name}_table1.csv", ["model", "h", "J", "dominated"], rows)
    all_dominated = all(r[3] == "true" for r in rows if r[3])
    summary = (
        f"single J_opt={sols['single'].J:.5g} pair J_opt={sols['pair'].J:.5g} "
        f"optimum dominates all rows={'yes' if all_dominated else 'no'}"
    )
    details = {
        label: {"J": s.J, "iterations": s.iterations, "converged": s.converged, "omega": s.omega}
        for label, s in sols.items()
    }
    return ScenarioResult(sc.name, sc.kind, summary, [path.name], details)


def run_one(sc, out: Path, adjoint_mode: str | None = None) -> ScenarioResult:
    if isinstance(sc, SimulateScenario):
        return run_simulate(sc, out)
    if isinstance(sc, EquilibriaScenario):
        return run_equilibria(sc, out)
    if isinstance(sc, BasinScenario):
        return run_basin(sc, out)
    if isinstance(sc, OptimizeScenario):
        return run_optimize(sc, out, adjoint_mode)
    if isinstance(sc, Table1Scenario):
        return run_table1(sc, out, adjoint_mode)
    raise TypeError(f"unsupported scenario {type(sc).__name__}")


def write_manifest(out: Path, config: Path, command: str, settings: dict, results: list[ScenarioResult]) -> Path:
    """Inputs, versions, settings and per-scenario outputs; no timestamps so reruns are byte-identical."""
    data = {
        "package": "popharvest",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "command": command,
        "config": config.name,
        "config_sha256": hashlib.sha256(config.read_bytes()).hexdigest(),
        "settings": settings,
        "scenarios": [
            {"name": r.name, "kind": r.kind, "outputs": r.outputs, "summary": r.summary, "details": r.details}
            for r in results
        ],
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
