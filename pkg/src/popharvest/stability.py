"""Equilibria of the single-species and prey-predator maps and their local stability.

Each equilibrium is classified twice: once from closed-form parameter
inequalities (interval membership of ``k``, sign tests on the characteristic
quadratic) and once from the eigenvalues of the linearisation. The two
verdicts are reported side by side so that a transcription error in either
route shows up as a disagreement.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .maps import PairParams, SingleParams, State, growth_derivative

TAU_NH = 1e-9


class PreconditionError(ValueError):
    """Raised when an equilibrium is asked about outside its existence region."""


class Tag(str, Enum):
    SINK = "Sink"
    SOURCE = "Source"
    SADDLE = "Saddle"
    NON_HYPERBOLIC = "NonHyperbolic"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class StabilityClass:
    tag: Tag
    detail: str = ""

    def __str__(self) -> str:
        return self.tag.value


@dataclass
class EquilibriumReport:
    name: str
    kind: str
    point: State | None
    exists: bool
    condition: str
    class_theorem: StabilityClass | None = None
    class_eigen: StabilityClass | None = None
    eigenvalues: tuple = ()
    notes: list[str] = field(default_factory=list)

    @property
    def agreement(self) -> bool | None:
        if not self.exists:
            return None
        tags = (self.class_theorem.tag, self.class_eigen.tag)
        if Tag.INDETERMINATE in tags:
            return None
        return tags[0] == tags[1]

    @property
    def verdict(self) -> StabilityClass | None:
        """Theorem verdict, falling back to the eigenvalue verdict when the theorem is silent."""
        if not self.exists:
            return None
        if self.class_theorem.tag is Tag.INDETERMINATE:
            return self.class_eigen
        return self.class_theorem


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


def _in_open(value: float, lo: float, hi: float) -> bool:
    # An interval with lo >= hi is empty; membership is then simply False.
    return lo < value < hi


# ---------------------------------------------------------------------------
# eigenvalue route


def quadratic_roots(p: float, q: float) -> tuple[complex, complex]:
    """Roots of ``λ² + pλ + q`` computed without cancellation."""
    disc = p * p - 4.0 * q
    if disc >= 0:
        sq = math.sqrt(disc)
        big = -0.5 * (p + math.copysign(sq, p))
        if big == 0.0:
            return 0.0j, 0.0j
        return complex(big), complex(q / big)
    sq = cmath.sqrt(disc)
    return (-p + sq) / 2.0, (-p - sq) / 2.0


def eigenvalues(J) -> tuple:
    """Eigenvalues of a 1×1 or 2×2 Jacobian from its characteristic polynomial."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape == (1, 1):
        return (complex(J[0, 0]),)
    if J.shape != (2, 2):
        raise ValueError(f"expected a 1x1 or 2x2 matrix, got shape {J.shape}")
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    return quadratic_roots(-tr, det)


def classify_moduli(moduli, tau_nh: float = TAU_NH) -> StabilityClass:
    moduli = [float(m) for m in moduli]
    witness = ", ".join(f"|λ|={m:.6g}" for m in moduli)
    if any(abs(m - 1.0) <= tau_nh for m in moduli):
        return StabilityClass(Tag.NON_HYPERBOLIC, witness)
    below = sum(m < 1.0 for m in moduli)
    if below == len(moduli):
        return StabilityClass(Tag.SINK, witness)
    if below == 0:
        return StabilityClass(Tag.SOURCE, witness)
    return StabilityClass(Tag.SADDLE, witness)


def classify_by_eigen(J, tau_nh: float = TAU_NH) -> StabilityClass:
    """Classify a fixed point from the moduli of its Jacobian eigenvalues."""
    return classify_moduli([abs(lam) for lam in eigenvalues(J)], tau_nh)


# ---------------------------------------------------------------------------
# root-location test for λ² + pλ + q


@dataclass(frozen=True)
class JuryQuadratic:
    p: float
    q: float

    @classmethod
    def from_jacobian(cls, J) -> "JuryQuadratic":
        J = np.asarray(J, dtype=float)
        return cls(p=-(J[0, 0] + J[1, 1]), q=J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])

    def F(self, lam: float) -> float:
        return lam * lam + self.p * lam + self.q

    def companion(self) -> np.ndarray:
        return np.array([[-self.p, -self.q], [1.0, 0.0]])


def jury_classify(f: JuryQuadratic, tol: float = 0.0) -> StabilityClass:
    """Locate the roots of F relative to the unit circle from F(±1) and q.

    Only valid when F(1) > 0; otherwise the result is Indeterminate.
    ``tol`` widens the equality tests F(-1) = 0 and q = 1.
    """
    f1, fm1, q = f.F(1.0), f.F(-1.0), f.q
    witness = f"F(1)={f1:.6g}, F(-1)={fm1:.6g}, q={q:.6g}"
    if not f1 > tol:
        return StabilityClass(Tag.INDETERMINATE, "F(1) > 0 fails; " + witness)
    if abs(fm1) <= tol:
        return StabilityClass(Tag.NON_HYPERBOLIC, "F(-1) = 0 (root at -1); " + witness)
    if fm1 < 0:
        return StabilityClass(Tag.SADDLE, "F(-1) < 0; " + witness)
    if abs(q - 1.0) <= tol:
        return StabilityClass(Tag.NON_HYPERBOLIC, "F(-1) > 0, q = 1; " + witness)
    if q < 1.0:
        return StabilityClass(Tag.SINK, "F(-1) > 0, q < 1; " + witness)
    return StabilityClass(Tag.SOURCE, "F(-1) > 0, q > 1; " + witness)


# ---------------------------------------------------------------------------
# single species


def derivative_single(p: SingleParams, x: float) -> float:
    return growth_derivative(p.r, p.k, x) - p.h


def positive_equilibrium_single(p: SingleParams) -> float | None:
    """ln((r - (1+h)) / (k (1+h))) when that is positive, else None."""
    ratio = (p.r - (1.0 + p.h)) / (p.k * (1.0 + p.h))
    if ratio <= 1.0:
        return None
    return math.log(ratio)


def single_stability_bounds(p: SingleParams) -> tuple[float, float]:
    """Open k-interval on which the positive equilibrium is a sink.

    With m = (1+h)(r-(1+h)) the interval is
    ((r-(1+h)) e^{-2r/m} / (1+h), (r-(1+h)) / (1+h)); h = 0 gives
    ((r-1) e^{-2r/(r-1)}, r-1).
    """
    g = p.r - (1.0 + p.h)
    if g <= 0:
        return (math.nan, math.nan)
    m = (1.0 + p.h) * g
    return g * math.exp(-2.0 * p.r / m) / (1.0 + p.h), g / (1.0 + p.h)


def classify_single_theorem(p: SingleParams, which: str, tol: float = TAU_NH) -> StabilityClass:
    """Closed-form class of the trivial (``"trivial"``) or positive (``"positive"``) equilibrium."""
    if which == "trivial":
        threshold = (p.k + 1.0) * (1.0 + p.h)
        witness = f"r={p.r:.6g} vs (k+1)(1+h)={threshold:.6g}"
        if _close(p.r, threshold, tol):
            return StabilityClass(Tag.NON_HYPERBOLIC, "r = (k+1)(1+h); " + witness)
        if p.r < threshold:
            return StabilityClass(Tag.SINK, "r < (k+1)(1+h); " + witness)
        return StabilityClass(Tag.SOURCE, "r > (k+1)(1+h); " + witness)

    if which != "positive":
        raise ValueError(f"unknown equilibrium {which!r}")
    if positive_equilibrium_single(p) is None:
        raise PreconditionError("positive equilibrium does not exist for these parameters")
    lo, hi = single_stability_bounds(p)
    witness = f"k={p.k:.6g}, interval=({lo:.6g}, {hi:.6g})"
    if _close(p.k, lo, tol):
        return StabilityClass(Tag.NON_HYPERBOLIC, "k at lower bound; " + witness)
    if _in_open(p.k, lo, hi):
        return StabilityClass(Tag.SINK, "k inside interval; " + witness)
    return StabilityClass(Tag.SOURCE, "k below lower bound; " + witness)


def equilibria_single(p: SingleParams, tau_nh: float = TAU_NH) -> list[EquilibriumReport]:
    label = "x_h" if p.h > 0 else "x2"
    reports = []

    lam0 = derivative_single(p, 0.0)
    reports.append(
        EquilibriumReport(
            name="x0" if p.h > 0 else "x1",
            kind="trivial",
            point=State(0.0),
            exists=True,
            condition="always",
            class_theorem=classify_single_theorem(p, "trivial", tau_nh),
            class_eigen=classify_by_eigen([[lam0]], tau_nh),
            eigenvalues=(complex(lam0),),
        )
    )

    xs = positive_equilibrium_single(p)
    cond = "(r-(1+h))/(k(1+h)) > 1"
    if xs is None:
        reports.append(EquilibriumReport(label, "interior", None, False, cond))
    else:
        lam = derivative_single(p, xs)
        reports.append(
            EquilibriumReport(
                name=label,
                kind="interior",
                point=State(xs),
                exists=True,
                condition=cond,
                class_theorem=classify_single_theorem(p, "positive", tau_nh),
                class_eigen=classify_by_eigen([[lam]], tau_nh),
                eigenvalues=(complex(lam),),
            )
        )
    return reports


# ---------------------------------------------------------------------------
# prey-predator


def jacobian_pair(p: PairParams, s: State) -> np.ndarray:
    x, y = float(s.x), float(s.y)
    return np.array(
        [
            [growth_derivative(p.r, p.k, x) - p.a * y, -p.a * x],
            [p.d * y, p.d * x - p.c],
        ]
    )


def boundary_equilibrium(p: PairParams) -> State | None:
    if p.r <= 1.0 + p.k:
        return None
    return State(math.log((p.r - 1.0) / p.k), 0.0)


def interior_equilibrium(p: PairParams) -> State | None:
    xs = (1.0 + p.c) / p.d
    k1 = 1.0 + p.k * math.exp(xs)
    if p.r <= k1:
        return None
    return State(xs, (p.r - k1) / (p.a * k1))


def classify_e0_theorem(p: PairParams, tol: float = TAU_NH) -> StabilityClass:
    threshold = p.k + 1.0
    witness = f"r={p.r:.6g}, k+1={threshold:.6g}, c={p.c:.6g}"
    if _close(p.r, threshold, tol) or _close(p.c, 1.0, tol):
        return StabilityClass(Tag.NON_HYPERBOLIC, "r = k+1 or c = 1; " + witness)
    r_in, c_in = p.r < threshold, p.c < 1.0
    if r_in and c_in:
        return StabilityClass(Tag.SINK, "r < k+1, c < 1; " + witness)
    if not r_in and not c_in:
        return StabilityClass(Tag.SOURCE, "r > k+1, c > 1; " + witness)
    return StabilityClass(Tag.SADDLE, "mixed; " + witness)


@dataclass(frozen=True)
class BoundaryIntervals:
    """The five k-intervals that decide the class of the boundary equilibrium."""

    I1: tuple[float, float]
    I2: tuple[float, float]
    I3: tuple[float, float]
    I4: tuple[float, float]
    I5: tuple[float, float]

    @classmethod
    def of(cls, p: PairParams) -> "BoundaryIntervals":
        g = p.r - 1.0
        flip = g * math.exp(-2.0 * p.r / g)
        lo2 = g * math.exp(-(p.c + 1.0) / p.d)
        hi2 = g * math.exp(-(p.c - 1.0) / p.d)
        return cls(I1=(flip, g), I2=(lo2, hi2), I3=(0.0, flip), I4=(hi2, g), I5=(0.0, lo2))

    def contains(self, name: str, k: float) -> bool:
        lo, hi = getattr(self, name)
        return _in_open(k, lo, hi)


def classify_e1_theorem(p: PairParams, tol: float = TAU_NH) -> StabilityClass:
    if boundary_equilibrium(p) is None:
        raise PreconditionError("boundary equilibrium requires r > 1 + k")
    iv = BoundaryIntervals.of(p)
    k = p.k
    witness = (
        f"k={k:.6g}, I1=({iv.I1[0]:.6g}, {iv.I1[1]:.6g}), "
        f"I2=({iv.I2[0]:.6g}, {iv.I2[1]:.6g})"
    )
    for edge in (iv.I1[0], iv.I2[0], iv.I2[1]):
        if _close(k, edge, tol):
            return StabilityClass(Tag.NON_HYPERBOLIC, "k on an interval endpoint; " + witness)
    inside = {name: iv.contains(name, k) for name in ("I1", "I2", "I3", "I4", "I5")}
    if inside["I1"] and inside["I2"]:
        return StabilityClass(Tag.SINK, "k in I1∩I2; " + witness)
    if inside["I3"] and inside["I5"]:
        return StabilityClass(Tag.SOURCE, "k in I3∩I5; " + witness)
    for a, b in (("I1", "I5"), ("I1", "I4"), ("I3", "I2")):
        if inside[a] and inside[b]:
            return StabilityClass(Tag.SADDLE, f"k in {a}∩{b}; " + witness)
    return StabilityClass(Tag.INDETERMINATE, "k in none of the listed intersections (I3∩I4 uncovered); " + witness)


@dataclass(frozen=True)
class InteriorConstants:
    """Constants of the interior-equilibrium conditions.

    ``M1`` carries the factor x* that the F(-1) > 0 inequality produces;
    ``M1_printed`` is the shorter form d k1 - 2 x* k e^{x*}, kept for
    comparison only.
    """

    x_star: float
    y_star: float
    ke: float
    k1: float
    N: float
    M1: float
    M1_printed: float
    M2: float
    N1: float
    N2: float

    @classmethod
    def of(cls, p: PairParams) -> "InteriorConstants":
        xs = (1.0 + p.c) / p.d
        ke = p.k * math.exp(xs)
        k1 = 1.0 + ke
        return cls(
            x_star=xs,
            y_star=(p.r - k1) / (p.a * k1),
            ke=ke,
            k1=k1,
            N=2.0 * ke / k1,
            M1=p.d * xs * k1 - 2.0 * xs * ke,
            M1_printed=p.d * k1 - 2.0 * xs * ke,
            M2=p.d * xs * k1**2 - 4.0 * k1**2,
            N1=p.d * k1 - ke,
            N2=p.d * k1**2,
        )

    @property
    def S(self) -> tuple[float, float]:
        return max(self.k1, self.M2 / self.M1), self.N2 / self.N1

    def quadratic(self, p: PairParams) -> JuryQuadratic:
        s = p.r * self.x_star * self.ke / self.k1**2
        ay = p.a * self.y_star
        return JuryQuadratic(
            p=ay + s - p.r / self.k1 - 1.0,
            q=p.r / self.k1 - s - ay + ay * p.d * self.x_star,
        )


def classify_e2_theorem(p: PairParams, tol: float = TAU_NH) -> StabilityClass:
    if interior_equilibrium(p) is None:
        raise PreconditionError("interior equilibrium requires r > 1 + k e^{(1+c)/d}")
    tc = InteriorConstants.of(p)
    r = p.r
    witness = f"d={p.d:.6g}, N={tc.N:.6g}, k1={tc.k1:.6g}"

    if not _close(p.d, tc.N, tol):
        fm1_root = tc.M2 / tc.M1
        p_zero = 2.0 * tc.k1**2 / (tc.ke * tc.x_star)
        p_two = 4.0 * tc.k1**2 / (tc.ke * tc.x_star)
        if _close(r, fm1_root, tol) and not _close(r, p_zero, tol) and not _close(r, p_two, tol):
            return StabilityClass(Tag.NON_HYPERBOLIC, f"r = M2/M1 = {fm1_root:.6g}; " + witness)

    if not p.d > tc.N:
        return StabilityClass(Tag.INDETERMINATE, "hypothesis d > N fails; " + witness)

    m_ratio, n_ratio = tc.M2 / tc.M1, tc.N2 / tc.N1
    witness += f", M2/M1={m_ratio:.6g}, N2/N1={n_ratio:.6g}, r={r:.6g}"
    lo, hi = tc.S
    if _in_open(r, lo, hi):
        return StabilityClass(Tag.SINK, "d > N, r in S; " + witness)
    if r > max(m_ratio, n_ratio, tc.k1):
        return StabilityClass(Tag.SOURCE, "d > N, r > max(M2/M1, N2/N1, k1); " + witness)
    if _in_open(r, tc.k1, m_ratio):
        return StabilityClass(Tag.SADDLE, "d > N, k1 < r < M2/M1; " + witness)
    return StabilityClass(Tag.INDETERMINATE, "no listed case applies; " + witness)


def equilibria_pair(p: PairParams, tau_nh: float = TAU_NH) -> list[EquilibriumReport]:
    reports = []

    def build(name, kind, point, cond, theorem):
        if point is None:
            return EquilibriumReport(name, kind, None, False, cond)
        J = jacobian_pair(p, point)
        return EquilibriumReport(
            name=name,
            kind=kind,
            point=point,
            exists=True,
            condition=cond,
            class_theorem=theorem(p, tau_nh),
            class_eigen=classify_by_eigen(J, tau_nh),
            eigenvalues=eigenvalues(J),
        )

    reports.append(build("e0", "trivial", State(0.0, 0.0), "always", classify_e0_theorem))
    reports.append(build("e1", "boundary", boundary_equilibrium(p), "r > 1 + k", classify_e1_theorem))
    reports.append(
        build("e2", "interior", interior_equilibrium(p), "r > 1 + k e^{x*}", classify_e2_theorem)
    )
    for rep in reports:
        if rep.exists and rep.agreement is False:
            rep.notes.append("closed-form and eigenvalue classes disagree")
    return reports
