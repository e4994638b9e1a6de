import math
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from ..core.config import get_settings

SCHEMA_VERSION = 1

CHECK_NAMES = (
    "hessian",
    "spray",
    "nconnection",
    "dconnection",
    "torsion",
    "structure",
    "symplectic",
    "compatibility",
    "finsler",
)


class Monomial(BaseModel):
    model_config = ConfigDict(extra="forbid")

    coeff: float
    x_exponents: List[float]
    y_exponents: List[float]

    @field_validator("x_exponents", "y_exponents")
    def non_negative(cls, v):
        if any(e < 0 for e in v):
            raise ValueError("exponents must be non-negative")
        return v


class Terminals(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: Optional[List[float]] = None
    y: Optional[List[float]] = None


class AxisSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    upper_bound: float
    points: int = Field(ge=16)


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")

    symbolic: float = Field(default_factory=lambda: get_settings().symbolic_tol, gt=0)
    grid: float = Field(default_factory=lambda: get_settings().grid_tol, gt=0)
    fractional: float = Field(default_factory=lambda: get_settings().fractional_tol, gt=0)


class JobConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    dimension: int = Field(ge=1)
    alpha: Union[float, List[float]]
    terminals: Terminals = Field(default_factory=Terminals)
    lagrangian: List[Monomial] = Field(min_length=1)
    finsler: bool = False
    lattice: List[AxisSpec]
    tolerances: Tolerances = Field(default_factory=Tolerances)
    checks: List[str] = Field(default_factory=lambda: list(CHECK_NAMES))
    seed: int = Field(default_factory=lambda: get_settings().probe_seed)

    @field_validator("schema_version")
    def supported_version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; expected {SCHEMA_VERSION}")
        return v

    @field_validator("checks")
    def known_checks(cls, v):
        unknown = sorted(set(v) - set(CHECK_NAMES))
        if unknown:
            raise ValueError(f"unknown checks {unknown}; choose from {list(CHECK_NAMES)}")
        return [c for c in CHECK_NAMES if c in v]

    @model_validator(mode="after")
    def consistent_dimensions(self):
        n = self.dimension
        for a in self.alphas():
            if not 0.0 < a <= 1.0:
                raise ValueError(f"alpha must lie in (0, 1], got {a}")
        for m in self.lagrangian:
            if len(m.x_exponents) != n or len(m.y_exponents) != n:
                raise ValueError(f"every monomial needs {n} x- and {n} y-exponents")
        for name, t in (("x", self.terminals.x), ("y", self.terminals.y)):
            if t is not None and len(t) != n:
                raise ValueError(f"terminals.{name} needs {n} entries")
        if len(self.lattice) != 2 * n:
            raise ValueError(f"lattice needs {2 * n} axis entries (x axes then y axes)")
        terminals = (self.terminals.x or [0.0] * n) + (self.terminals.y or [0.0] * n)
        for k, (axis, t) in enumerate(zip(self.lattice, terminals)):
            if axis.upper_bound <= t:
                raise ValueError(f"lattice axis {k}: upper_bound must exceed the terminal {t}")
        return self

    def alphas(self) -> List[float]:
        return [float(a) for a in (self.alpha if isinstance(self.alpha, list) else [self.alpha])]


Verdict = Literal["pass", "warn", "fail"]


def six_digits(v: Optional[float]) -> Optional[float]:
    if v is None or not math.isfinite(v):
        return None
    return float(f"{v:.6g}")


class CheckRecord(BaseModel):
    name: str
    alpha: float
    max_residual: Optional[float] = None
    tolerance: float
    hard: bool = True
    verdict: Verdict
    node_count: int = 0
    detail: Optional[str] = None

    @field_serializer("max_residual", "tolerance")
    def rounded(self, v):
        return six_digits(v)


class ReportMetadata(BaseModel):
    version: str
    dimension: int
    finsler: bool = False
    lattice: List[AxisSpec]
    det_g_min: Dict[str, Optional[float]] = Field(default_factory=dict)

    @field_serializer("det_g_min")
    def rounded(self, v):
        return {k: six_digits(x) for k, x in v.items()}


class Timing(BaseModel):
    generated_at: str
    wall_time: Dict[str, float] = Field(default_factory=dict)


class VerificationReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    seed: int
    metadata: ReportMetadata
    checks: List[CheckRecord] = Field(default_factory=list)
    timing: Timing

    @property
    def failed(self) -> bool:
        return any(c.verdict == "fail" for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 2 if self.failed else 0
