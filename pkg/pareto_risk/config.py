"""
Run configuration for the command line.
"""

import os
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .core import FilterKind, MeanEstimator, ModelKind, PriceMode
from .utils.patterns import (
    DEFAULT_DELIMITER,
    DEFAULT_EWMA_BETA,
    DEFAULT_HALF_WIDTH,
    DEFAULT_LEVEL,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_P_LEVELS,
    DEFAULT_RESIDUAL_LEVEL,
    DEFAULT_RETURN_PERIODS,
    DEFAULT_SEED,
    ERROR_THRESHOLD_SPEC,
    OUTPUT_DIR_ENV_VAR,
    STABILITY_LEVELS,
    STUDY_ALPHA,
    STUDY_DELTA,
    STUDY_REPLICATES,
    STUDY_SAMPLE_SIZE,
    STUDY_TAU_GRID,
)

Command = Literal[
    "fit", "tailplot", "risk", "premium", "returnlevel", "dynamic", "study"
]

# Commands that fit a tail above a loss threshold
THRESHOLD_COMMANDS = ("fit", "tailplot", "risk", "premium", "returnlevel")


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV_VAR) or DEFAULT_OUTPUT_DIR)


def _probabilities(values: List[float], name: str) -> List[float]:
    for value in values:
        if not 0.0 < value < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return values


class RunConfig(BaseModel):
    """
    Fully resolved settings of one command-line run.

    Threshold commands take exactly one of ``threshold`` (absolute) and
    ``threshold_q`` (quantile level of the losses).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    input: Optional[Path] = None
    column: str = "1"
    delimiter: str = DEFAULT_DELIMITER
    header: bool = True
    output_dir: Path = Field(default_factory=default_output_dir)
    output_format: Literal["json", "csv", "both"] = "json"
    seed: int = DEFAULT_SEED

    # Tail fits
    threshold: Optional[float] = None
    threshold_q: Optional[float] = None
    models: List[ModelKind] = Field(default_factory=lambda: [ModelKind.GPD])
    level: float = DEFAULT_LEVEL
    stability_levels: List[float] = Field(
        default_factory=lambda: list(STABILITY_LEVELS)
    )

    # Risk measures and pricing
    p_levels: List[float] = Field(default_factory=lambda: list(DEFAULT_P_LEVELS))
    mean_estimators: List[MeanEstimator] = Field(
        default_factory=lambda: [MeanEstimator.HYBRID, MeanEstimator.SAMPLE]
    )
    deductibles: List[float] = Field(default_factory=list)
    claims_per_period: Optional[float] = Field(default=None, ge=0.0)
    years: Optional[float] = Field(default=None, gt=0.0)
    period_column: Optional[str] = None
    return_periods: List[float] = Field(
        default_factory=lambda: list(DEFAULT_RETURN_PERIODS)
    )
    ci_method: Literal["delta", "bootstrap", "none"] = "delta"
    replicates: int = Field(default=STUDY_REPLICATES, ge=1)

    # Dynamic risk
    price_mode: PriceMode = PriceMode.PRICE
    time_column: Optional[str] = "1"
    value_column: str = "2"
    filter: FilterKind = FilterKind.GARCH
    tail: Literal["upper", "lower"] = "lower"
    tail_level: float = DEFAULT_RESIDUAL_LEVEL
    half_width: int = Field(default=DEFAULT_HALF_WIDTH, ge=1)
    ewma_beta: float = DEFAULT_EWMA_BETA
    edge: Literal["truncate", "shift"] = "truncate"

    # Simulation study
    tau_grid: List[float] = Field(default_factory=lambda: list(STUDY_TAU_GRID))
    alpha: float = Field(default=STUDY_ALPHA, gt=0.0)
    delta: float = STUDY_DELTA
    sample_size: int = Field(default=STUDY_SAMPLE_SIZE, ge=10)

    @field_validator("p_levels", "stability_levels")
    @classmethod
    def _in_unit_interval(cls, values: List[float], info) -> List[float]:
        return _probabilities(values, info.field_name)

    @field_validator("level", "tail_level", "ewma_beta")
    @classmethod
    def _probability(cls, value: float, info) -> float:
        return _probabilities([value], info.field_name)[0]

    @field_validator("tau_grid")
    @classmethod
    def _non_positive(cls, values: List[float]) -> List[float]:
        if any(tau > 0.0 for tau in values):
            raise ValueError(f"tau values must be <= 0, got {values}")
        return values

    @field_validator("deductibles", "return_periods")
    @classmethod
    def _positive(cls, values: List[float], info) -> List[float]:
        if any(not value > 0.0 for value in values):
            raise ValueError(f"{info.field_name} must be positive, got {values}")
        return values

    @model_validator(mode="after")
    def _complete(self) -> "RunConfig":
        if self.command != "study" and self.input is None:
            raise ValueError(f"{self.command} needs --input")
        if self.command in THRESHOLD_COMMANDS:
            if (self.threshold is None) == (self.threshold_q is None):
                raise ValueError(ERROR_THRESHOLD_SPEC)
            if self.threshold_q is not None and not 0.0 <= self.threshold_q < 1.0:
                raise ValueError(
                    f"threshold_q must lie in [0, 1), got {self.threshold_q}"
                )
        if self.command == "premium" and not self.deductibles:
            raise ValueError("premium needs at least one --deductible")
        if not self.models:
            raise ValueError("At least one model is required")
        return self

    def resolved(self, u: float) -> "RunConfig":
        """The same configuration with the threshold stated as an absolute value."""
        return self.model_copy(update={"threshold": u, "threshold_q": None})

    def as_provenance(self) -> dict:
        """Settings that determine the results; the output location is left out."""
        return self.model_dump(mode="json", exclude={"output_dir"})
