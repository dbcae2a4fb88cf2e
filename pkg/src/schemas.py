"""Pydantic models for interchange formats and reports."""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


ComplexPair = Tuple[float, float]


def to_pair(z: complex) -> ComplexPair:
    """Encode a complex number as ``[re, im]``."""
    z = complex(z)
    return (z.real, z.imag)


def from_pair(pair: ComplexPair) -> complex:
    """Decode ``[re, im]`` into a complex number."""
    return complex(pair[0], pair[1])


# ============================================================================
# Input Schemas
# ============================================================================

class BiPolySpec(BaseModel):
    """Bivariate polynomial, coefficients row-major in k then l."""

    bidegree: Tuple[int, int] = Field(description="Degrees (n1, n2) in z1 and z2")
    coeffs: List[ComplexPair] = Field(description="[[re, im], ...] row-major in k then l")

    @field_validator("bidegree")
    @classmethod
    def _nonnegative(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 0 or v[1] < 0:
            raise ValueError("bidegree entries must be nonnegative")
        return v

    @model_validator(mode="after")
    def _extent_matches(self) -> "BiPolySpec":
        n1, n2 = self.bidegree
        if len(self.coeffs) != (n1 + 1) * (n2 + 1):
            raise ValueError(
                f"expected {(n1 + 1) * (n2 + 1)} coefficients for bidegree {self.bidegree}, "
                f"got {len(self.coeffs)}"
            )
        return self


class RifSpec(BaseModel):
    """Rational inner function e^{ia} z^m p~/p."""

    p: BiPolySpec = Field(description="Stable denominator")
    monomial: Tuple[int, int] = Field(default=(0, 0), description="Exponents (m1, m2)")
    phase: float = Field(default=0.0, description="Phase a in radians")

    @field_validator("monomial")
    @classmethod
    def _nonnegative(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 0 or v[1] < 0:
            raise ValueError("monomial exponents must be nonnegative")
        return v


class BlaschkeSpec(BaseModel):
    """Finite Blaschke product e^{ia} z^m prod b_lambda."""

    zeros: List[ComplexPair] = Field(default_factory=list)
    m: int = Field(default=0, ge=0)
    phase: float = 0.0

    @field_validator("zeros")
    @classmethod
    def _inside_disk(cls, v: List[ComplexPair]) -> List[ComplexPair]:
        for pair in v:
            if abs(from_pair(pair)) >= 1.0:
                raise ValueError(f"zero {pair} is not inside the unit disk")
        return v


# ============================================================================
# Output Schemas
# ============================================================================

class Stamped(BaseModel):
    """Base for every exported document."""

    model_config = ConfigDict(populate_by_name=True)

    config_hash: str = Field(default="", serialization_alias="configHash")
    version: str = ""


class MeasureNode(BaseModel):
    theta1: float
    theta2: float
    mass: float
    branch: int


class ExcludedNode(BaseModel):
    theta1: float
    theta2: float
    branch: int
    reason: str


class MeasureExport(Stamped):
    """Discretized Clark measure."""

    alpha: ComplexPair
    nodes: List[MeasureNode]
    excluded: List[ExcludedNode] = Field(default_factory=list)
    mass_deficit_estimate: float = Field(default=0.0, serialization_alias="massDeficitEstimate")
    total_mass: float = Field(default=0.0, serialization_alias="totalMass")


class OperatorExport(Stamped):
    """Matrix of an operator in a named orthonormal basis."""

    basis: Literal["kphi", "nodes"]
    dim: int
    matrix: List[ComplexPair] = Field(description="Row-major [re, im] entries")
    residuals: Dict[str, float] = Field(default_factory=dict)
    axis: Optional[int] = None
    alpha: Optional[ComplexPair] = None


class LevelSetMetadata(Stamped):
    alpha: ComplexPair
    nodes: int
    branches: int
    continuity_residual: float = Field(serialization_alias="continuityResidual")
    crossings: List[int] = Field(default_factory=list)
    singular_points: List[Tuple[float, float]] = Field(
        default_factory=list,
        serialization_alias="singularPoints",
        description="Singular points on the closure, as (theta1, theta2)",
    )


class ScanMetadata(Stamped):
    alpha: ComplexPair
    grid_n: int = Field(serialization_alias="gridN")
    tolerance: float
    radius: float
    matrices_hash: str = Field(serialization_alias="matricesHash")
    hausdorff: Optional[float] = None
    budget: Optional[float] = None
    residuals: Dict[str, float] = Field(default_factory=dict)


# ============================================================================
# Verification Schemas
# ============================================================================

class CheckResult(BaseModel):
    """Outcome of one named verification check."""

    name: str
    value: Optional[float] = None
    threshold: Optional[float] = None
    comparison: Literal["le", "ge", "flag"] = "le"
    passed: bool
    detail: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[str] = None


class VerificationReport(Stamped):
    """Aggregate of all checks for one RIF and one alpha."""

    profile: str
    alpha: ComplexPair
    checks: List[CheckResult] = Field(default_factory=list)
    passed: bool = False
    first_failure: Optional[str] = None
    flags: List[str] = Field(default_factory=list)


# ============================================================================
# Validation Functions
# ============================================================================

def check_passes(value: float, threshold: float, comparison: str) -> bool:
    """Compare a measured value against its threshold."""
    if value != value:  # NaN
        return False
    if comparison == "ge":
        return value >= threshold
    return value <= threshold


def first_failing(checks: List[CheckResult]) -> Optional[str]:
    """Name of the first failed check, if any."""
    for check in checks:
        if not check.passed:
            return check.name
    return None
