"""Discrete population maps and trajectory simulation.

Three maps are analysed throughout the package:

* single species (optionally with constant proportional harvest h)::

      x' = r x / (1 + k e^x) - h x

* prey-predator::

      x' = r x / (1 + k e^x) - a y x
      y' = -c y + d x y

* the general shape family, used for simulation only::

      x' = r x^m / (1 + k e^{b x})^n - a y x
      y' = y (-c + d x)

Every step function works elementwise on numpy arrays as well as on floats,
so the same code drives single trajectories and vectorised grid scans.
Negative outputs are clamped at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

# Above this exponent the saturating term is evaluated in its e^{-x} form.
_EXP_SWITCH = 50.0


class DomainError(ValueError):
    """A density or parameter outside the domain of a map."""


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class GeneralMapParams:
    r: float
    k: float
    b: float = 1.0
    m: float = 1.0
    n: float = 1.0
    a: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        for name in ("r", "k", "b", "m", "n", "a", "c", "d"):
            value = _check_finite(name, getattr(self, name))
            if name in ("a", "c", "d"):
                if value < 0:
                    raise DomainError(f"{name} must be >= 0, got {value}")
            elif value <= 0:
                raise DomainError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class SingleParams:
    """Single-species map parameters; ``h`` is a constant harvest in [0, 1)."""

    r: float
    k: float
    h: float = 0.0

    def __post_init__(self):
        r = _check_finite("r", self.r)
        k = _check_finite("k", self.k)
        h = _check_finite("h", self.h)
        if r <= 0 or k <= 0:
            raise DomainError(f"r and k must be > 0, got r={r}, k={k}")
        if not 0.0 <= h < 1.0:
            raise DomainError(f"h must lie in [0, 1), got {h}")

    def with_harvest(self, h: float) -> "SingleParams":
        return SingleParams(self.r, self.k, h)


@dataclass(frozen=True)
class PairParams:
    """Prey-predator map parameters (shape exponents fixed to 1)."""

    r: float
    k: float
    a: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("r", "k", "a", "c", "d"):
            value = _check_finite(name, getattr(self, name))
            if name == "c":
                if value < 0:
                    raise DomainError(f"c must be >= 0, got {value}")
            elif value <= 0:
                raise DomainError(f"{name} must be > 0, got {value}")

    def as_general(self) -> GeneralMapParams:
        return GeneralMapParams(r=self.r, k=self.k, a=self.a, c=self.c, d=self.d)


class State(NamedTuple):
    """Population state. ``y`` is None for single-species models."""

    x: float
    y: float | None = None

    @property
    def dim(self) -> int:
        return 1 if self.y is None else 2

    def as_array(self) -> np.ndarray:
        return np.array([self.x] if self.y is None else [self.x, self.y], dtype=float)


StateLike = Union[State, float, tuple]


def as_state(s: StateLike) -> State:
    if isinstance(s, State):
        return s
    if isinstance(s, (tuple, list, np.ndarray)):
        if len(s) == 1:
            return State(float(s[0]))
        return State(float(s[0]), float(s[1]))
    return State(float(s))


def saturating_growth(r, k, x):
    """``r x / (1 + k e^x)`` without overflow for large x."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        big = x > _EXP_SWITCH
        safe = np.where(big, 0.0, x)
        small_form = r * safe / (1.0 + k * np.exp(safe))
        en = np.exp(-np.where(big, x, 0.0))
        big_form = r * x * en / (en + k)
    out = np.where(big, big_form, small_form)
    return out if out.ndim else float(out)


def growth_derivative(r, k, x):
    """Derivative of ``r x / (1 + k e^x)``: ``(r + r k e^x - r k x e^x) / (1 + k e^x)^2``."""
    x = np.asarray(x, dtype=float)
    # u = k e^x / (1 + k e^x) stays in [0, 1) for every x.
    ke = k * np.exp(np.minimum(x, _EXP_SWITCH))
    with np.errstate(over="ignore"):
        u = np.where(x > _EXP_SWITCH, k / (np.exp(-np.maximum(x, _EXP_SWITCH)) + k), ke / (1.0 + ke))
    out = r * (1.0 - u) * (1.0 - x * u)
    return out if np.ndim(out) else float(out)


def _reject_nonfinite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DomainError("state contains non-finite values")


def _clamp(v):
    out = np.maximum(v, 0.0) + 0.0
    return out if np.ndim(out) else float(out)


def raw_step_single(p: SingleParams, x):
    """Single-species map before clamping (may be negative)."""
    return saturating_growth(p.r, p.k, x) - p.h * x


def step_single(p: SingleParams, x):
    _reject_nonfinite(x)
    return _clamp(raw_step_single(p, x))


def raw_step_pair(p: PairParams, s: State) -> State:
    x, y = s.x, s.y
    x_next = saturating_growth(p.r, p.k, x) - p.a * y * x
    y_next = -p.c * y + p.d * x * y
    return State(x_next, y_next)


def step_pair(p: PairParams, s: State) -> State:
    s = as_state(s)
    _reject_nonfinite(s.x, s.y)
    raw = raw_step_pair(p, s)
    return State(_clamp(raw.x), _clamp(raw.y))


def raw_step_general(p: GeneralMapParams, s: State) -> State:
    x = np.asarray(s.x, dtype=float)
    y = 0.0 if s.y is None else np.asarray(s.y, dtype=float)
    bx = p.b * x
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        big = bx > _EXP_SWITCH
        safe = np.where(big, 0.0, bx)
        small_form = p.r * x**p.m / (1.0 + p.k * np.exp(safe)) ** p.n
        en = np.exp(-np.where(big, bx, 0.0))
        big_form = p.r * x**p.m * en**p.n / (en + p.k) ** p.n
    growth = np.where(big, big_form, small_form)
    x_next = growth - p.a * y * x
    y_next = y * (-p.c + p.d * x)
    if not np.ndim(x_next):
        x_next, y_next = float(x_next), float(y_next)
    return State(x_next, y_next)


def step_general(p: GeneralMapParams, s: State) -> State:
    s = as_state(s)
    if s.y is None:
        s = State(s.x, 0.0)
    _reject_nonfinite(s.x, s.y)
    raw = raw_step_general(p, s)
    return State(_clamp(raw.x), _clamp(raw.y))


@dataclass(frozen=True)
class Trajectory:
    """States at t0, t0+1, ..., t0+T stored row-wise in ``states``."""

    states: np.ndarray
    t0: int = 0
    clamped: bool = False

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, i: int) -> State:
        row = self.states[i]
        return State(float(row[0])) if row.shape[0] == 1 else State(float(row[0]), float(row[1]))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray | None:
        return self.states[:, 1] if self.dim == 2 else None

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + len(self))

    @property
    def final(self) -> State:
        return self[-1]


_RAW_STEPS: dict[Callable, Callable] = {
    step_single: raw_step_single,
    step_pair: raw_step_pair,
    step_general: raw_step_general,
}


def simulate(step: Callable, params, s0: StateLike, T: int, t0: int = 0) -> Trajectory:
    """Iterate ``step(params, .)`` T times from ``s0``.

    ``step`` is one of :func:`step_single`, :func:`step_pair`,
    :func:`step_general`. The returned trajectory has T + 1 rows and records
    whether any component had to be clamped at zero.
    """
    if int(T) != T or T < 1:
        raise ValueError(f"horizon must be a positive integer, got {T!r}")
    T = int(T)
    raw_step = _RAW_STEPS.get(step)
    if raw_step is None:
        raise ValueError(f"unsupported step function {step!r}")

    if step is step_single:
        x = _check_finite("x0", as_state(s0).x)
        if x < 0:
            raise DomainError("initial density must be >= 0")
        out = np.empty((T + 1, 1))
        out[0, 0] = x
        clamped = False
        for t in range(T):
            nxt = raw_step(params, x)
            if nxt < 0:
                clamped, nxt = True, 0.0
            x = nxt + 0.0
            out[t + 1, 0] = x
        if not np.all(np.isfinite(out)):
            raise DomainError("trajectory left the finite range")
        return Trajectory(out, t0, clamped)

    s = as_state(s0)
    if s.y is None:
        s = State(s.x, 0.0)
    _check_finite("x0", s.x)
    _check_finite("y0", s.y)
    if s.x < 0 or s.y < 0:
        raise DomainError("initial densities must be >= 0")
    out = np.empty((T + 1, 2))
    out[0] = s.x, s.y
    x, y = s.x, s.y
    clamped = False
    for t in range(T):
        nxt = raw_step(params, State(x, y))
        # + 0.0 turns -0.0 (e.g. zero predators times a negative rate) into 0.0
        x, y = nxt.x + 0.0, nxt.y + 0.0
        if x < 0 or y < 0:
            clamped = True
            x, y = max(x, 0.0), max(y, 0.0)
        out[t + 1] = x, y
    if not np.all(np.isfinite(out)):
        raise DomainError("trajectory left the finite range")
    return Trajectory(out, t0, clamped)
