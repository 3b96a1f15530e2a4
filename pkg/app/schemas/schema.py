from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import special
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Union
import math
import numpy as np

from app.models.model import AuctionParams


# Series / tabulated laws
class SeriesResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    abs_error_bound: float = Field(ge=0)
    terms_used: int = Field(ge=0)

    @field_validator("abs_error_bound")
    def validate_bound(cls, v):
        if not math.isfinite(v):
            raise ValueError("Error bound must be finite")
        return v


class DiscretePmf(BaseModel):
    """Probability masses on 0, 1, 2, ... with an upper bound on the mass left out"""
    model_config = ConfigDict(frozen=True)

    masses: Dict[int, float]
    tail_bound: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def validate_masses(self):
        total = 0.0
        for k, p in self.masses.items():
            if k < 0:
                raise ValueError("Support must be non-negative integers")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"Mass at {k} outside [0, 1]: {p}")
            total += p
        if total > 1.0 + 1e-12:
            raise ValueError(f"Masses sum to {total} > 1")
        if total + self.tail_bound < 1.0 - 1e-9:
            raise ValueError(f"Masses plus tail bound ({total + self.tail_bound}) fall short of 1")
        return self

    def mass(self, k: int) -> float:
        return self.masses.get(k, 0.0)

    def mean(self) -> float:
        return sum(k * p for k, p in self.masses.items())

    def total(self) -> float:
        return sum(self.masses.values())


class DensityTable(BaseModel):
    x: List[float]
    density: List[float]
    abs_error_bound: List[float]


class DensityCurve(BaseModel):
    """Pointwise-evaluated density with its declared support"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    evaluate: Callable[[float], SeriesResult] = Field(exclude=True)
    support: Tuple[float, float]

    def __call__(self, x: float) -> float:
        lo, hi = self.support
        if x < lo or x > hi:
            return 0.0
        return self.evaluate(x).value

    def tabulate(self, points: int = 512) -> DensityTable:
        if points < 2:
            raise ValueError("A grid needs at least 2 points")
        grid = np.linspace(self.support[0], self.support[1], points)
        results = [self.evaluate(float(x)) for x in grid]
        return DensityTable(
            x=grid.tolist(),
            density=[r.value for r in results],
            abs_error_bound=[r.abs_error_bound for r in results],
        )


# Clearing
class ClearingOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_bids: int = Field(ge=0)
    n_asks: int = Field(ge=0)
    volume: int = Field(ge=0)
    bounds: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def validate_outcome(self):
        both_sides = self.n_bids >= 1 and self.n_asks >= 1
        if both_sides != (self.bounds is not None):
            raise ValueError("Bounds are present exactly when both sides hold orders")
        if self.bounds is not None and self.bounds[0] > self.bounds[1]:
            raise ValueError("Lower clearing bound above upper bound")
        if self.volume > min(self.n_bids, self.n_asks):
            raise ValueError("Traded volume exceeds the smaller side")
        return self

    @property
    def lower(self) -> Optional[float]:
        return None if self.bounds is None else self.bounds[0]

    @property
    def upper(self) -> Optional[float]:
        return None if self.bounds is None else self.bounds[1]

    @property
    def price_range(self) -> Optional[float]:
        return None if self.bounds is None else self.bounds[1] - self.bounds[0]


# Limit laws
class NormalLaw(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    sd: float = Field(gt=0)

    def standardize(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.sd

    def cdf(self, x):
        return special.ndtr(self.standardize(x))

    def pdf(self, x):
        z = self.standardize(x)
        return np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2.0 * math.pi))


class ExponentialLaw(BaseModel):
    """Exponential law parametrised by its rate (inverse of the mean)"""
    model_config = ConfigDict(frozen=True)

    rate: float = Field(gt=0)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def scale(self, x):
        return np.asarray(x, dtype=float) * self.rate

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)


# Monte Carlo
class RngState(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=2**64)
    stream_id: int = Field(default=0, ge=0, lt=2**64)


class FitResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    rate: float = Field(gt=0)
    sample_size: int = Field(ge=1)
    ks_stat: float = Field(ge=0, le=1)


class SampleSummary(BaseModel):
    """Empirical counterpart of the exact laws, aggregated over replications"""

    n_reps: int = Field(ge=1)
    volume_counts: Dict[int, int]
    ask_counts: Dict[int, int] = {}
    bid_counts: Dict[int, int] = {}
    L_samples: List[float] = []
    U_samples: List[float] = []
    R_samples: List[float] = []
    n_conditioned: int = Field(default=0, ge=0)
    sample_stride: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def validate_summary(self):
        if sum(self.volume_counts.values()) != self.n_reps:
            raise ValueError("Volume counts must add up to the number of replications")
        sizes = {len(self.L_samples), len(self.U_samples), len(self.R_samples)}
        if len(sizes) != 1:
            raise ValueError("Conditioned sample arrays must have equal length")
        if self.sample_stride == 1 and sizes.pop() != self.n_conditioned:
            raise ValueError("Conditioned samples must match n_conditioned")
        return self

    def empirical_pmf(self) -> Dict[int, float]:
        return {k: c / self.n_reps for k, c in sorted(self.volume_counts.items())}

    def mean_ask_count(self) -> float:
        return sum(k * c for k, c in self.ask_counts.items()) / self.n_reps

    def mean_bid_count(self) -> float:
        return sum(k * c for k, c in self.bid_counts.items()) / self.n_reps

    def downsampled(self, max_samples: int) -> "SampleSummary":
        """Copy whose conditioned arrays keep every stride-th value"""
        if self.n_conditioned <= max_samples or self.sample_stride != 1:
            return self
        stride = math.ceil(self.n_conditioned / max_samples)
        return self.model_copy(update={
            "L_samples": self.L_samples[::stride],
            "U_samples": self.U_samples[::stride],
            "R_samples": self.R_samples[::stride],
            "sample_stride": stride,
        })


# CLI / API
class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    lo: float
    hi: float
    points: int = Field(ge=2)

    @model_validator(mode="after")
    def validate_grid(self):
        if not self.hi > self.lo:
            raise ValueError("Grid upper end must exceed its lower end")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    command: Literal["volume", "prices", "range", "validate", "fit-spread", "simulate"]
    params: Optional[AuctionParams] = None
    dist_spec: str = "uniform:0,1"
    grid: Optional[GridSpec] = None
    k_max: Optional[int] = Field(default=None, ge=0)
    tol: Optional[float] = Field(default=None, gt=0)
    n_reps: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    extended: bool = False
    checks: Optional[List[str]] = None
    input_path: Optional[str] = None
    output_format: Literal["csv", "json"] = "csv"
    output_path: Optional[str] = None


class ClearRequest(BaseModel):
    bid_prices: List[float] = []
    ask_prices: List[float] = []


class SpreadFitResponse(BaseModel):
    fit: FitResult
    survival: List[Tuple[float, float, float]]


class Histogram(BaseModel):
    """Empirical density on Freedman-Diaconis bins, with binomial standard errors"""
    edges: List[float]
    density: List[float]
    stderr: List[float]
    n_samples: int = Field(ge=1)
    rule: str = "freedman-diaconis"

    def centres(self) -> List[float]:
        return [(a + b) / 2.0 for a, b in zip(self.edges[:-1], self.edges[1:])]


# Tables / reports
class Table(BaseModel):
    """Column-oriented result of one command, with its metadata header"""
    columns: List[str]
    rows: List[List[Union[int, float]]]
    metadata: Dict[str, Any] = {}

    @model_validator(mode="after")
    def validate_rows(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("Row width does not match the column count")
        return self


class CheckResult(BaseModel):
    name: str
    passed: bool
    statistic: float
    tolerance: float
    detail: str = ""
    binning: Optional[str] = None


class ValidationReport(BaseModel):
    seed: int
    extended: bool
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]
