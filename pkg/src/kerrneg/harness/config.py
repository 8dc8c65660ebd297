"""Run configuration: one JSON document per run, validated before any compute."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from ..dynamics import ModelParams, Tolerances
from ..errors import ConfigError
from ..fock import StateSpec
from ..wigner import PhaseGrid

NEGATIVITY_TAIL = 1e-14


def _complex(v):
    """Accept ``1.5``, ``[re, im]`` or ``{"re": .., "im": ..}``."""
    if isinstance(v, complex):
        return v
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, dict) and set(v) <= {"re", "im"}:
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    raise ValueError("expected a number, [re, im] or {re, im}")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelConfig(_Strict):
    g: float = 1.0
    gamma: float = Field(0.0, ge=0)
    nbar: float = Field(0.0, ge=0)
    gamma_phi: float = Field(0.0, ge=0)
    omega: float = 0.0
    eta: tuple[float, float] = (0.0, 0.0)

    @field_validator("eta", mode="before")
    @classmethod
    def _eta(cls, v):
        z = _complex(v)
        return (z.real, z.imag)

    def params(self) -> ModelParams:
        return ModelParams(self.g, self.gamma, self.nbar, self.gamma_phi, self.omega,
                           complex(*self.eta))


class StateConfig(_Strict):
    kind: Literal["vacuum", "number", "coherent", "squeezed_vacuum", "thermal",
                  "squeezed_thermal", "gaussian"]
    n: int = Field(0, ge=0)
    alpha0: tuple[float, float] = (0.0, 0.0)
    r0: float = Field(0.0, ge=0)
    theta0: float = 0.0
    nbar0: float = Field(0.0, ge=0)

    @field_validator("alpha0", mode="before")
    @classmethod
    def _alpha(cls, v):
        z = _complex(v)
        return (z.real, z.imag)

    def spec(self) -> StateSpec:
        return StateSpec(self.kind, self.n, complex(*self.alpha0), self.r0, self.theta0, self.nbar0)


class SolverConfig(_Strict):
    rel: float = Field(1e-8, gt=0)
    abs: float = Field(1e-10, gt=0)
    basis_tail: float = Field(NEGATIVITY_TAIL, gt=0, lt=1)
    basis_size: int | None = Field(None, ge=2)
    evolve_tail: float = Field(1e-8, gt=0, lt=1)

    def tolerances(self) -> Tolerances:
        return Tolerances(self.rel, self.abs)


class GridConfig(_Strict):
    """``adaptive`` widens and refines from the starting grid; ``fixed`` does not."""

    mode: Literal["adaptive", "fixed"] = "adaptive"
    n_x: int = Field(101, ge=3)
    n_y: int = Field(101, ge=3)
    x_ext: float | None = Field(None, gt=0)
    y_ext: float | None = Field(None, gt=0)
    edge_tol: float = Field(1e-4, gt=0)
    rel_tol: float = Field(1e-2, gt=0)
    abs_tol: float = Field(1e-7, gt=0)
    max_refine: int = Field(2, ge=0)

    @model_validator(mode="after")
    def _extents(self):
        if self.mode == "fixed" and (self.x_ext is None or self.y_ext is None):
            raise ValueError("fixed grids need x_ext and y_ext")
        if (self.x_ext is None) != (self.y_ext is None):
            raise ValueError("give both x_ext and y_ext or neither")
        return self

    def start(self) -> PhaseGrid | None:
        if self.x_ext is None:
            return None
        return PhaseGrid(self.n_x, self.n_y, self.x_ext, self.y_ext)


class TimeAxis(_Strict):
    """Either explicit ``values`` or ``num`` points on ``[start, stop]``."""

    values: list[float] | None = None
    start: float = 0.0
    stop: float | None = None
    num: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _shape(self):
        if self.values is None and (self.stop is None or self.num is None):
            raise ValueError("time axis needs values or (stop, num)")
        pts = self.points()
        if np.any(pts < 0) or not np.all(np.isfinite(pts)):
            raise ValueError("times must be finite and non-negative")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("times must be strictly increasing")
        return self

    def points(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.num)


def _positive_list(v, name):
    if not v or any(x < 0 for x in v):
        raise ValueError(f"{name} must be a non-empty list of non-negative numbers")
    if np.any(np.diff(v) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return v


class _Run(_Strict):
    name: str = "run"
    solver: SolverConfig = SolverConfig()
    grid: GridConfig = GridConfig()


class EvolveConfig(_Run):
    """Master-equation evolution; reports fidelity to the initial state and moments."""

    kind: Literal["evolve"]
    model: ModelConfig = ModelConfig()
    state: StateConfig
    times: TimeAxis
    method: Literal["ode", "exact-kerr"] = "ode"
    negativity: bool = False


class NegativityVsTimeConfig(_Run):
    kind: Literal["negativity-vs-time"]
    model: ModelConfig = ModelConfig()
    state: StateConfig
    times: TimeAxis
    axis: Literal["gt", "gts4"] = "gt"


class ScaledCollapseConfig(_Run):
    """Unitary Kerr evolution of squeezed (thermal) vacua on the ``gts^4/sigma^2`` axis."""

    kind: Literal["scaled-collapse"]
    r0: list[float]
    nbar0: list[float] = [0.0]
    scaled_times: TimeAxis
    asymptotic: bool = True

    _r = field_validator("r0")(classmethod(lambda cls, v: _positive_list(v, "r0")))


class Decoherence(_Strict):
    kind: Literal["damping", "dephasing"]
    gamma: float = Field(0.0, ge=0)
    nbar: float = Field(0.0, ge=0)
    gamma_phi: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _rate(self):
        rate = self.gamma if self.kind == "damping" else self.gamma_phi
        if rate <= 0:
            raise ValueError(f"{self.kind} needs a positive rate")
        return self


class KerrDecayConfig(_Run):
    """Grow negativity unitarily to ``tau0 = gts^4``, then switch Kerr off and decohere.

    Decay times are in the neutral units ``gamma (2 nbar + 1) t s^2`` (damping)
    or ``gamma_phi t s^4`` (dephasing).
    """

    kind: Literal["kerr-decay"]
    r0: list[float]
    tau0: list[float]
    decoherence: Decoherence
    growth_times: TimeAxis
    decay_times: TimeAxis
    state: StateConfig | None = None

    _r = field_validator("r0")(classmethod(lambda cls, v: _positive_list(v, "r0")))


class MaxSearch(_Strict):
    """Coarse scan of ``[0, stop]`` (scaled time) then golden-section refinement.

    With ``per_rate`` the window is ``[0, stop / rate]`` for each damping rate,
    which keeps the maximum (near ``gts^4 ~ 2 / rate``) inside the scan.
    """

    stop: float = Field(..., gt=0)
    coarse: int = Field(13, ge=3)
    xtol: float = Field(2e-3, gt=0)
    per_rate: bool = False

    def for_rate(self, rate: float) -> "MaxSearch":
        if not self.per_rate or rate <= 0:
            return self
        return self.model_copy(update={"stop": self.stop / rate, "per_rate": False})


class MaxNegVsDampingConfig(_Run):
    kind: Literal["max-negvol-vs-damping"]
    r0: list[float]
    rates: list[float]
    nbar: float = Field(1000.0, ge=0)
    search: MaxSearch
    asymptotic: bool = True

    _r = field_validator("r0")(classmethod(lambda cls, v: _positive_list(v, "r0")))
    _k = field_validator("rates")(classmethod(lambda cls, v: _positive_list(v, "rates")))


class ContourConfig(_Run):
    """``max_t`` negativity over damping-rate x dephasing-rate cells."""

    kind: Literal["max-negativity-contour"]
    r0: list[float]
    damping_rates: list[float]
    dephasing_rates: list[float]
    nbar: float = Field(1000.0, ge=0)
    search: MaxSearch
    asymptotic: bool = True

    _r = field_validator("r0")(classmethod(lambda cls, v: _positive_list(v, "r0")))
    _d = field_validator("damping_rates")(classmethod(lambda cls, v: _positive_list(v, "damping_rates")))
    _p = field_validator("dephasing_rates")(classmethod(lambda cls, v: _positive_list(v, "dephasing_rates")))

    @model_validator(mode="after")
    def _size(self):
        if len(self.damping_rates) > 8 or len(self.dephasing_rates) > 8:
            raise ValueError("at most 8 x 8 decoherence cells per r0")
        return self


class CoherentPlateauConfig(_Run):
    kind: Literal["coherent-plateau"]
    alpha0: list[float]
    stop: float = Field(np.pi / 2, gt=0)
    coarse: int = Field(61, ge=3)
    xtol: float = Field(1e-3, gt=0)
    collapse_alpha0: list[float] = [3.0, 4.0]
    collapse_times: TimeAxis | None = None
    max_spacing: float = Field(0.04, gt=0)

    @field_validator("alpha0")
    @classmethod
    def _alpha(cls, v):
        _positive_list(v, "alpha0")
        if min(v) < 1.5:
            raise ValueError("the plateau is ill-defined below alpha0 = 1.5")
        return v


class AsymptoticCompareConfig(_Run):
    kind: Literal["asymptotic-compare"]
    r0: float = Field(..., gt=0)
    nbar0: float = Field(0.0, ge=0)
    model: ModelConfig = ModelConfig()
    scaled_times: TimeAxis


class TableGenConfig(_Run):
    kind: Literal["table-gen"]
    table: Literal["squeezing-table", "decay-table"]
    r0: list[float] | None = None
    gamma: float = Field(1.0, gt=0)
    nbar: float = Field(1000.0, ge=0)


RunConfig = Annotated[
    Union[EvolveConfig, NegativityVsTimeConfig, ScaledCollapseConfig, KerrDecayConfig,
          MaxNegVsDampingConfig, ContourConfig, CoherentPlateauConfig, AsymptoticCompareConfig,
          TableGenConfig],
    Field(discriminator="kind"),
]
_ADAPTER = TypeAdapter(RunConfig)

KINDS = ("evolve", "negativity-vs-time", "scaled-collapse", "kerr-decay", "max-negvol-vs-damping",
         "max-negativity-contour", "coherent-plateau", "asymptotic-compare", "table-gen")


def parse_config(data) -> BaseModel:
    """Validate a decoded JSON object; every problem surfaces as :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if data.get("kind") not in KINDS:
        raise ConfigError(f"unknown experiment kind {data.get('kind')!r}; expected one of {KINDS}")
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> BaseModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return parse_config(data)


def canonical(cfg: BaseModel) -> str:
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: BaseModel) -> str:
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()
