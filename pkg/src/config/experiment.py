"""
Experiment configuration.

One JSON document describes a problem, an oracle, a solver and a sweep
over seeds, λ values and Gaussian noise levels. See docs/config_schema.md.
"""

from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from src.errors import ConfigurationError

LambdaValue = Union[float, Literal["auto"]]


def _check_lambda(value: LambdaValue) -> LambdaValue:
    if value != "auto" and not 0.0 < value <= 1.0:
        raise ValueError(f"lambda must lie in (0, 1] or be 'auto', got {value}")
    return value


class ConstraintSpec(BaseModel):
    """Feasible set C."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["unconstrained", "ball", "box"] = "unconstrained"
    radius: Optional[float] = Field(default=None, gt=0)
    center: Optional[list[float]] = None
    lower: Optional[list[float]] = None
    upper: Optional[list[float]] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "ConstraintSpec":
        if self.kind == "ball" and self.radius is None:
            raise ValueError("a ball constraint needs 'radius'")
        if self.kind == "box":
            if self.lower is None or self.upper is None:
                raise ValueError("a box constraint needs 'lower' and 'upper'")
            if len(self.lower) != len(self.upper):
                raise ValueError("box bounds must have the same length")
        return self


class ProblemSpec(BaseModel):
    """Objective to minimize."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["least_squares", "logistic"] = "least_squares"
    path: Optional[Path] = Field(
        default=None, description="LIBSVM file for logistic problems; synthetic data when omitted"
    )
    synthetic: Literal["gaussian", "categorical"] = Field(
        default="gaussian", description="Synthetic generator used when no path is given"
    )
    synthetic_samples: int = Field(default=1000, ge=1)
    synthetic_dim: int = Field(default=20, ge=1, description="Gaussian generator only")
    n: int = Field(default=50, ge=1, description="Dimension of random least-squares problems")
    m: int = Field(default=1, ge=1, description="Number of components / clients")
    reg: float = Field(default=1.0, ge=0)
    seed: int = 1906
    normalize: bool = False
    f_star: Optional[float] = Field(
        default=None, description="Known optimal value; skips the reference run"
    )
    constraint: ConstraintSpec = Field(default_factory=ConstraintSpec)

    @field_validator("path")
    @classmethod
    def path_exists(cls, v: Optional[Path], info: ValidationInfo) -> Optional[Path]:
        """Relative paths are tried against the config file's directory first."""
        if v is None:
            return v
        base = (info.context or {}).get("base_dir")
        if not v.is_absolute() and base is not None and (Path(base) / v).exists():
            return Path(base) / v
        if not v.exists():
            raise ValueError(f"data file not found: {v}")
        return v


class OracleSpec(BaseModel):
    """Gradient oracle."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["exact", "gaussian", "minibatch", "saga", "federated"] = "exact"
    batch_size: Optional[int] = Field(default=None, ge=1)
    codec: Literal["none", "sparsify", "dither", "natural"] = "none"
    keep: Optional[int] = Field(default=None, ge=1)
    levels: Optional[int] = Field(default=None, ge=1)
    workers: int = Field(default=1, ge=1, description="Threads compressing client messages")
    memory: bool = Field(default=False, description="Clients compress differences to per-client shifts")
    log_conditions: bool = False
    mc_samples: int = Field(default=200, ge=1)

    @model_validator(mode="after")
    def check_parameters(self) -> "OracleSpec":
        if self.kind in ("minibatch", "saga") and self.batch_size is None:
            raise ValueError(f"oracle '{self.kind}' needs 'batch_size'")
        if self.kind != "federated" and self.codec != "none":
            raise ValueError("codecs apply to the federated oracle only")
        if self.kind != "federated" and self.memory:
            raise ValueError("shift memory applies to the federated oracle only")
        if self.codec == "sparsify" and self.keep is None:
            raise ValueError("codec 'sparsify' needs 'keep'")
        if self.codec == "dither" and self.levels is None:
            raise ValueError("codec 'dither' needs 'levels'")
        return self


class SolverSpec(BaseModel):
    """Algorithm and stopping rule."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    algorithm: Literal["accel", "gd", "nesterov83"] = "accel"
    lam: LambdaValue = Field(default=1.0, alias="lambda")
    sigma: float = Field(default=1.0, gt=0)
    mu: Optional[float] = Field(
        default=None, ge=0, description="Strong-convexity constant override (at most the problem's)"
    )
    max_k: Optional[int] = Field(default=None, ge=0)
    gap_target: Optional[float] = Field(default=None, gt=0)
    budget: Optional[int] = Field(default=None, ge=1, description="Component-gradient budget")

    @field_validator("lam")
    @classmethod
    def lam_in_range(cls, v: LambdaValue) -> LambdaValue:
        return _check_lambda(v)

    @model_validator(mode="after")
    def check_stopping(self) -> "SolverSpec":
        if self.max_k is None and self.gap_target is None and self.budget is None:
            raise ValueError("solver needs at least one of 'max_k', 'gap_target', 'budget'")
        return self


class SweepSpec(BaseModel):
    """Cells to run: every (λ, ν) pair for every seed."""

    model_config = ConfigDict(extra="forbid")

    seeds: int = Field(default=1, ge=1)
    base_seed: int = 0
    lambdas: Optional[list[LambdaValue]] = Field(
        default=None, description="Overrides solver.lambda when given"
    )
    variances: list[float] = Field(default_factory=lambda: [0.0])

    @field_validator("lambdas")
    @classmethod
    def lambdas_in_range(cls, v: Optional[list[LambdaValue]]) -> Optional[list[LambdaValue]]:
        if v is not None:
            if not v:
                raise ValueError("'lambdas' must not be empty")
            for value in v:
                _check_lambda(value)
        return v

    @field_validator("variances")
    @classmethod
    def variances_nonnegative(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("'variances' must not be empty")
        if any(value < 0 for value in v):
            raise ValueError("variances must be nonnegative")
        return v


class ExperimentConfig(BaseModel):
    """Top-level experiment document."""

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    problem: ProblemSpec = Field(default_factory=ProblemSpec)
    oracle: OracleSpec = Field(default_factory=OracleSpec)
    solver: SolverSpec
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    output: Path = Path("trace.csv")

    @model_validator(mode="after")
    def check_combination(self) -> "ExperimentConfig":
        if self.oracle.kind != "gaussian" and any(v != 0.0 for v in self.sweep.variances):
            raise ValueError("nonzero variances need the gaussian oracle")
        if self.oracle.kind in ("minibatch", "saga") and self.oracle.batch_size > self.problem.m:
            raise ValueError("batch_size cannot exceed problem.m")
        return self

    @property
    def lambdas(self) -> list[LambdaValue]:
        return self.sweep.lambdas if self.sweep.lambdas is not None else [self.solver.lam]

    @property
    def seeds(self) -> list[int]:
        return [self.sweep.base_seed + i for i in range(self.sweep.seeds)]


def load_experiment_config(path: Path) -> ExperimentConfig:
    """
    Read and validate an experiment JSON file.

    Raises:
        ConfigurationError: If the file is missing, not JSON, or fails validation
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
        return ExperimentConfig.model_validate_json(text, context={"base_dir": path.parent})
    except ValidationError as e:
        raise ConfigurationError(f"invalid config {path}:\n{e}") from e
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
