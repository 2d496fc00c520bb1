"""Empirical almost-global stability checks by grid sampling.

An equilibrium is almost globally asymptotically stable on a box D when it
attracts every initial condition in the interior of D. A finite scan can only
support or refute that, so verdicts read "consistent" or "refuted", never
"proved".
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .maps import PairParams, SingleParams, State, as_state, raw_step_pair, raw_step_single


@dataclass(frozen=True)
class PolyMapParams:
    s: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s > 0):
            raise ValueError(f"s must be finite and > 0, got {self.s}")


def step_poly(p: PolyMapParams, x):
    """``s² x (1 - x)(1 - s x + s x²)``; no clamping, this map is not a population."""
    s = p.s
    return s * s * x * (1.0 - x) * (1.0 - s * x + s * x * x)


def poly_derivative(p: PolyMapParams, x: float) -> float:
    s = p.s
    # d/dx of s² (x - x²)(1 - s x + s x²)
    return s * s * ((1.0 - 2.0 * x) * (1.0 - s * x + s * x * x) + (x - x * x) * (2.0 * s * x - s))


def poly_fixed_points(p: PolyMapParams, complete: bool = False) -> list[float]:
    """0 and, for s >= 3, the roots (1 + s ∓ sqrt((s-1)² - 4)) / (2s).

    The fixed-point equation factors as
    x (s x - s + 1)(s² x² - s(s+1) x + s + 1) = 0, so there is also a root at
    (s-1)/s; ``complete=True`` includes it.
    """
    s = p.s
    points = [0.0]
    disc = (s - 1.0) ** 2 - 4.0
    if disc >= 0:
        sq = math.sqrt(disc)
        points.append((1.0 + s - sq) / (2.0 * s))
        if sq > 0:
            points.append((1.0 + s + sq) / (2.0 * s))
    if complete:
        points.append((s - 1.0) / s)
    return sorted(set(points))


def classify_poly_fixed_points(p: PolyMapParams, tau_nh: float = 1e-9) -> list:
    """Equilibrium reports for the polynomial map, classified by |f'(x)| only.

    Names: ``zero``, ``x*`` and ``y*`` for the closed-form roots, ``mid``
    for (s-1)/s.
    """
    from .stability import EquilibriumReport, StabilityClass, Tag, classify_by_eigen

    closed = poly_fixed_points(p)
    names = {0.0: "zero"}
    if len(closed) >= 2:
        names[closed[1]] = "x*"
    if len(closed) == 3:
        names[closed[2]] = "y*"
    mid = (p.s - 1.0) / p.s
    reports = []
    for x in poly_fixed_points(p, complete=True):
        name = names.get(x, "mid" if x == mid else f"x={x:.6g}")
        lam = poly_derivative(p, x)
        reports.append(
            EquilibriumReport(
                name=name,
                kind="trivial" if x == 0.0 else "interior",
                point=State(x),
                exists=True,
                condition="always" if name in ("zero", "mid") else "(s-1)^2 >= 4",
                class_theorem=StabilityClass(Tag.INDETERMINATE, "no closed-form conditions for this map"),
                class_eigen=classify_by_eigen([[lam]], tau_nh),
                eigenvalues=(complex(lam),),
            )
        )
    return reports


# ---------------------------------------------------------------------------
# vectorised map adapters: (n, dim) array -> (n, dim) array


def single_map(p: SingleParams) -> Callable[[np.ndarray], np.ndarray]:
    def f(z):
        return (np.maximum(raw_step_single(p, z[:, 0]), 0.0) + 0.0)[:, None]

    f.dim = 1
    return f


def pair_map(p: PairParams) -> Callable[[np.ndarray], np.ndarray]:
    def f(z):
        nxt = raw_step_pair(p, State(z[:, 0], z[:, 1]))
        return np.column_stack([np.maximum(nxt.x, 0.0), np.maximum(nxt.y, 0.0)]) + 0.0

    f.dim = 2
    return f


def poly_map(p: PolyMapParams) -> Callable[[np.ndarray], np.ndarray]:
    def f(z):
        return step_poly(p, z)

    f.dim = 1
    return f


def _as_point(target) -> np.ndarray:
    if isinstance(target, State):
        return target.as_array()
    return np.atleast_1d(np.asarray(target, dtype=float))


# ---------------------------------------------------------------------------
# fixed points


def _fd_jacobian(f, z: np.ndarray, h: float = 1e-7) -> np.ndarray:
    n = z.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * max(1.0, abs(z[j]))
        J[:, j] = (f(z + e) - f(z - e)) / (2 * e[j])
    return J


def find_fixed_points(
    map_fn: Callable[[np.ndarray], np.ndarray],
    box: Sequence[tuple[float, float]],
    seeds: int = 64,
    residual_tol: float = 1e-10,
    max_iter: int = 100,
) -> list[State]:
    """Fixed points of a vectorised map inside ``box``.

    One-dimensional maps: sign changes of f(x) - x on a seed grid are
    bracketed and bisected, then polished by Newton; Newton is also started
    from every seed to catch tangential roots. Two-dimensional maps: damped
    Newton with a finite-difference Jacobian from a seed lattice. Points are
    de-duplicated and kept only if their residual is below ``residual_tol``.
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    dim = len(box)
    lows = np.array([b[0] for b in box])
    highs = np.array([b[1] for b in box])
    if np.any(highs <= lows):
        raise ValueError("box must be non-degenerate")

    def g(z):
        z = np.asarray(z, dtype=float)
        return map_fn(z[None, :])[0] - z

    def newton(z):
        z = np.array(z, dtype=float)
        for _ in range(max_iter):
            r = g(z)
            if not np.all(np.isfinite(r)):
                return None
            if np.max(np.abs(r)) < residual_tol * 1e-2:
                break
            J = _fd_jacobian(g, z)
            try:
                dz = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                return None
            step = 1.0
            norm = np.max(np.abs(r))
            while step > 1e-6:
                trial = z + step * dz
                rt = g(trial)
                if np.all(np.isfinite(rt)) and np.max(np.abs(rt)) < norm:
                    break
                step *= 0.5
            else:
                break
            z = trial
        return z

    candidates = []
    if dim == 1:
        xs = np.linspace(lows[0], highs[0], max(seeds, 2))
        vals = map_fn(xs[:, None])[:, 0] - xs
        for i in range(len(xs) - 1):
            a, b, fa, fb = xs[i], xs[i + 1], vals[i], vals[i + 1]
            if fa == 0.0:
                candidates.append(np.array([a]))
            if fa * fb < 0:
                for _ in range(200):
                    mid = 0.5 * (a + b)
                    fm = g([mid])[0]
                    if fa * fm <= 0:
                        b, fb = mid, fm
                    else:
                        a, fa = mid, fm
                    if b - a < 1e-15 * max(1.0, abs(a)):
                        break
                candidates.append(np.array([0.5 * (a + b)]))
        if vals[-1] == 0.0:
            candidates.append(xs[-1:].copy())
        seed_points = [np.array([x]) for x in xs]
    else:
        per_axis = max(2, int(math.ceil(seeds ** (1.0 / dim))))
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
        seed_points = [np.array(z) for z in itertools.product(*axes)]

    for z in candidates[:]:
        polished = newton(z)
        if polished is not None:
            candidates.append(polished)
    for z in seed_points:
        polished = newton(z)
        if polished is not None:
            candidates.append(polished)

    found: list[np.ndarray] = []
    for z in candidates:
        if z is None or not np.all(np.isfinite(z)):
            continue
        if np.any(z < lows - 1e-9) or np.any(z > highs + 1e-9):
            continue
        if np.max(np.abs(g(z))) >= residual_tol:
            continue
        if any(np.max(np.abs(z - w)) < 1e-7 for w in found):
            continue
        found.append(z)
    found.sort(key=tuple)
    return [as_state(tuple(z)) for z in found]


# ---------------------------------------------------------------------------
# basin scan


class Verdict(str, Enum):
    CONSISTENT = "AlmostGAS-consistent"
    REFUTED = "Refuted"
    INCONCLUSIVE = "Inconclusive"


# Per-sample outcome codes written to CSV.
CONVERGED, OTHER, ESCAPED = 0, 1, 2


@dataclass(frozen=True)
class BasinConfig:
    box: tuple[tuple[float, float], ...]
    grid: int = 200
    burn_in: int = 2000
    conv_tol: float = 1e-6
    escape_bound: float = 1e8
    interior_margin: float = 1e-3
    plant_offset: float | None = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box))
        if self.grid < 2:
            raise ValueError("grid must be >= 2")
        if self.burn_in < 1:
            raise ValueError("burn_in must be >= 1")
        for name in ("conv_tol", "escape_bound"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.interior_margin < 0.5:
            raise ValueError("interior_margin must lie in [0, 0.5)")
        if any(hi <= lo for lo, hi in self.box):
            raise ValueError("box must be non-degenerate")

    @property
    def dim(self) -> int:
        return len(self.box)

    def samples(self, target: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Grid initial conditions (row-major) and an interior mask."""
        axes = [np.linspace(lo, hi, self.grid) for lo, hi in self.box]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        if target is not None and self.plant_offset is not None:
            planted = target + self.plant_offset
            if self._interior(planted[None, :])[0]:
                pts = np.vstack([pts, planted])
        return pts, self._interior(pts)

    def _interior(self, pts: np.ndarray) -> np.ndarray:
        mask = np.ones(len(pts), dtype=bool)
        for j, (lo, hi) in enumerate(self.box):
            band = self.interior_margin * (hi - lo)
            mask &= (pts[:, j] > lo + band) & (pts[:, j] < hi - band)
        return mask


@dataclass
class BasinReport:
    target: State
    samples: np.ndarray
    codes: np.ndarray
    iters: np.ndarray
    interior: np.ndarray
    verdict: Verdict
    witness: State | None = None
    interior_margin: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return len(self.codes)

    @property
    def n_converged(self) -> int:
        return int(np.sum(self.codes == CONVERGED))

    @property
    def n_other_attractor(self) -> int:
        return int(np.sum(self.codes == OTHER))

    @property
    def n_escaped(self) -> int:
        return int(np.sum(self.codes == ESCAPED))

    @property
    def interior_coverage(self) -> float:
        n = int(self.interior.sum())
        if n == 0:
            return math.nan
        return float(np.sum(self.codes[self.interior] == CONVERGED)) / n

    @property
    def gas_consistent(self) -> bool:
        """Every sample, boundary band included, converged to the target."""
        return bool(np.all(self.codes == CONVERGED))


def iterate_samples(map_fn, z0: np.ndarray, target: np.ndarray, cfg: BasinConfig):
    """Iterate all samples ``cfg.burn_in`` steps; return (codes, iters, final)."""
    z = np.array(z0, dtype=float)
    n = len(z)
    alive = np.ones(n, dtype=bool)
    escaped_at = np.full(n, -1)
    entered_at = np.full(n, -1)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, cfg.burn_in + 1):
            if alive.any():
                z[alive] = map_fn(z[alive])
            bad = alive & ~(np.all(np.isfinite(z), axis=1) & np.all(np.abs(z) <= cfg.escape_bound, axis=1))
            escaped_at[bad] = t
            alive &= ~bad
            close = alive & (np.max(np.abs(z - target), axis=1) < cfg.conv_tol)
            entered_at[~close] = -1
            entered_at[close & (entered_at < 0)] = t
    codes = np.where(~alive, ESCAPED, np.where(entered_at >= 0, CONVERGED, OTHER))
    iters = np.where(~alive, escaped_at, np.where(entered_at >= 0, entered_at, cfg.burn_in))
    return codes, iters, z


def basin_scan(map_fn, cfg: BasinConfig, target) -> BasinReport:
    """Classify every grid sample by where ``burn_in`` iterations take it.

    The verdict is consistent with almost-global stability iff every interior
    sample ends within ``conv_tol`` of ``target``. Otherwise the first
    interior sample in grid order that failed is returned as a witness; if
    all failures are bounded and already near the target (slow convergence)
    the verdict is Inconclusive.
    """
    tgt = _as_point(target)
    if tgt.size != cfg.dim:
        raise ValueError("target dimension does not match the box")
    residual = np.max(np.abs(map_fn(tgt[None, :])[0] - tgt))
    if not residual < 1e-8:
        raise ValueError(f"target is not a fixed point (residual {residual:.3g})")

    pts, interior = cfg.samples(tgt)
    codes, iters, final = iterate_samples(map_fn, pts, tgt, cfg)

    notes = [f"interior margin {cfg.interior_margin:g} of each axis"]
    failed = np.flatnonzero(interior & (codes != CONVERGED))
    witness = None
    if interior.sum() == 0:
        verdict = Verdict.INCONCLUSIVE
        notes.append("no interior samples")
    elif failed.size == 0:
        verdict = Verdict.CONSISTENT
    else:
        dist = np.max(np.abs(final[failed] - tgt), axis=1)
        slow = (codes[failed] == OTHER) & (dist < 100 * cfg.conv_tol)
        if np.all(slow):
            verdict = Verdict.INCONCLUSIVE
            notes.append("all failing samples are still approaching the target")
        else:
            verdict = Verdict.REFUTED
            witness = as_state(tuple(pts[failed[~slow][0]]))
    return BasinReport(
        target=as_state(tuple(tgt)),
        samples=pts,
        codes=codes,
        iters=iters,
        interior=interior,
        verdict=verdict,
        witness=witness,
        interior_margin=cfg.interior_margin,
        notes=notes,
    )
