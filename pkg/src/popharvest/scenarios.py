"""Scenario files: YAML documents validated against a strict schema.

A file holds either one scenario mapping or ``scenarios: [...]``. Every
scenario has a ``name`` and a ``kind``; unknown keys are rejected.
"""
from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from .basin import BasinConfig, PolyMapParams
from .control import ADJOINT_MODES, INDEX_RANGES, ControlProblem, SweepConfig
from .maps import DomainError, GeneralMapParams, PairParams, SingleParams

BUNDLED_DIR = Path(__file__).parent / "scenarios"


class ScenarioError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


MODEL_PARAMS = {
    "single": SingleParams,
    "pair": PairParams,
    "general": GeneralMapParams,
    "poly": PolyMapParams,
}
MODEL_DIM = {"single": 1, "pair": 2, "general": 2, "poly": 1}


class _ModelMixin(_Strict):
    model: Literal["single", "pair", "general", "poly"]
    params: dict[str, float]

    @model_validator(mode="after")
    def _check_params(self):
        self.build_params()
        return self

    def build_params(self):
        cls = MODEL_PARAMS[self.model]
        try:
            return cls(**self.params)
        except TypeError as exc:
            raise ValueError(f"params: {exc}") from None
        except (DomainError, ValueError) as exc:
            raise ValueError(f"params: {exc}") from None


class SimulateScenario(_ModelMixin):
    name: str
    kind: Literal["simulate"]
    initial: list[float]
    horizon: int = Field(ge=1)
    description: str = ""

    @model_validator(mode="after")
    def _check_initial(self):
        if self.model == "poly":
            raise ValueError("model: simulate supports single, pair and general")
        if len(self.initial) != MODEL_DIM[self.model] and not (self.model == "general" and len(self.initial) == 1):
            raise ValueError(f"initial: expected {MODEL_DIM[self.model]} values")
        if any(v < 0 for v in self.initial):
            raise ValueError("initial: densities must be >= 0")
        return self


class EquilibriaScenario(_ModelMixin):
    name: str
    kind: Literal["equilibria"]
    tau_nh: float = Field(default=1e-9, gt=0)
    description: str = ""

    @model_validator(mode="after")
    def _check_model(self):
        if self.model not in ("single", "pair", "poly"):
            raise ValueError("model: equilibria supports single, pair and poly")
        return self


class BasinScenario(_ModelMixin):
    name: str
    kind: Literal["basin"]
    target: Union[list[float], str]
    box: list[tuple[float, float]]
    grid: int = Field(default=200, ge=2)
    burn_in: int = Field(default=2000, ge=1)
    conv_tol: float = Field(default=1e-6, gt=0)
    escape_bound: float = Field(default=1e8, gt=0)
    interior_margin: float = Field(default=1e-3, ge=0, lt=0.5)
    plant_offset: Optional[float] = 1e-4
    description: str = ""

    @model_validator(mode="after")
    def _check_box(self):
        if self.model == "general":
            raise ValueError("model: basin supports single, pair and poly")
        if len(self.box) != MODEL_DIM[self.model]:
            raise ValueError(f"box: expected {MODEL_DIM[self.model]} axes")
        if isinstance(self.target, list) and len(self.target) != MODEL_DIM[self.model]:
            raise ValueError(f"target: expected {MODEL_DIM[self.model]} values")
        self.basin_config()
        return self

    def basin_config(self) -> BasinConfig:
        return BasinConfig(
            box=tuple(self.box),
            grid=self.grid,
            burn_in=self.burn_in,
            conv_tol=self.conv_tol,
            escape_bound=self.escape_bound,
            interior_margin=self.interior_margin,
            plant_offset=self.plant_offset,
        )


class SweepSettings(_Strict):
    omega: float = 0.5
    conv_tol: float = 1e-3
    max_iters: int = 10000
    adaptive: bool = True
    starts: Literal["zero", "switching"] = "zero"

    def build(self) -> SweepConfig:
        return SweepConfig(**self.model_dump())


class _ControlFields(_ModelMixin):
    initial: list[float]
    horizon: int = Field(ge=2)
    c1: float = Field(ge=0)
    c2: float = Field(gt=0)
    h_max: float = Field(default=0.9, gt=0, lt=1)
    adjoint_mode: str = "consistent"
    index_range: str = "hamiltonian"

    @model_validator(mode="after")
    def _check_control(self):
        if self.model not in ("single", "pair"):
            raise ValueError("model: optimal control supports single and pair")
        if self.adjoint_mode not in ADJOINT_MODES:
            raise ValueError(f"adjoint_mode: must be one of {list(ADJOINT_MODES)}")
        if self.index_range not in INDEX_RANGES:
            raise ValueError(f"index_range: must be one of {list(INDEX_RANGES)}")
        if len(self.initial) != MODEL_DIM[self.model]:
            raise ValueError(f"initial: expected {MODEL_DIM[self.model]} values")
        self.problem()
        return self

    def problem(self, **overrides) -> ControlProblem:
        fields = dict(
            model=self.model,
            params=self.build_params(),
            x0=self.initial[0],
            y0=self.initial[1] if self.model == "pair" else None,
            T=self.horizon,
            c1=self.c1,
            c2=self.c2,
            h_max=self.h_max,
            adjoint_mode=self.adjoint_mode,
            index_range=self.index_range,
        )
        fields.update(overrides)
        try:
            return ControlProblem(**fields)
        except (TypeError, ValueError) as exc:
            raise ValueError(str(exc)) from None


class OptimizeScenario(_ControlFields):
    name: str
    kind: Literal["optimize"]
    sweep: SweepSettings = SweepSettings()
    constant_h: list[float] = []
    description: str = ""


class ControlSpec(_ControlFields):
    """One model of a constant-versus-optimal harvest table."""

    constant_h: list[float] = []


class Table1Scenario(_Strict):
    name: str
    kind: Literal["table1"]
    single: ControlSpec
    pair: ControlSpec
    sweep: SweepSettings = SweepSettings()
    description: str = ""


Scenario = Annotated[
    Union[SimulateScenario, EquilibriaScenario, BasinScenario, OptimizeScenario, Table1Scenario],
    Field(discriminator="kind"),
]
_ADAPTER = TypeAdapter(Scenario)
KINDS = ("simulate", "equilibria", "basin", "optimize", "table1")


def _format_error(exc: ValidationError, where: str) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        msg = err["msg"]
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        lines.append(f"{where}: {loc or '<root>'}: {msg}")
    return "\n".join(lines)


def parse_scenarios(data, source: str = "<config>") -> list:
    if data is None or data == {} or data == []:
        raise ScenarioError(f"{source}: empty configuration")
    if isinstance(data, dict) and "scenarios" in data:
        extra = set(data) - {"scenarios"}
        if extra:
            raise ScenarioError(f"{source}: {sorted(extra)[0]}: unknown key")
        items = data["scenarios"]
        if not isinstance(items, list) or not items:
            raise ScenarioError(f"{source}: scenarios: must be a non-empty list")
    else:
        items = [data]
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise ScenarioError(f"{source}: scenarios.{i}: expected a mapping")
        if "kind" not in item:
            raise ScenarioError(f"{source}: scenarios.{i}: kind: missing (one of {', '.join(KINDS)})")
        try:
            out.append(_ADAPTER.validate_python(item))
        except ValidationError as exc:
            raise ScenarioError(_format_error(exc, f"{source}: scenarios.{i}")) from None
    names = [s.name for s in out]
    if len(set(names)) != len(names):
        raise ScenarioError(f"{source}: duplicate scenario names")
    return out


def resolve_path(ref: str | Path) -> Path:
    """A file path, or the name of a bundled scenario (with or without .yaml)."""
    path = Path(ref)
    if path.exists():
        return path
    for candidate in (BUNDLED_DIR / f"{ref}.yaml", BUNDLED_DIR / str(ref)):
        if candidate.exists():
            return candidate
    raise ScenarioError(f"{ref}: no such file or bundled scenario")


def load_scenarios(ref: str | Path) -> tuple[Path, list]:
    path = resolve_path(ref)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: parse error: {exc}") from None
    return path, parse_scenarios(data, str(path.name))


def bundled_scenarios() -> list[Path]:
    return sorted(BUNDLED_DIR.glob("*.yaml"))
