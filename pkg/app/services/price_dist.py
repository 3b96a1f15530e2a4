"""Orders' price distribution F: cdf, density, quantile and sampler"""
from abc import ABC, abstractmethod
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize, special
from typing import Tuple
import math
import numpy as np

TAIL_MASS = 1e-16


class PriceDistribution(BaseModel, ABC):
    """
    Absolutely continuous price law shared by bid and ask orders

    Subclasses declare an open support interval on which the density is
    continuous and strictly positive; density evaluations outside it are 0.
    cdf/sf/pdf accept scalars or numpy arrays.
    """
    model_config = ConfigDict(frozen=True)

    @property
    @abstractmethod
    def support(self) -> Tuple[float, float]:
        ...

    @property
    @abstractmethod
    def pdf_max(self) -> float:
        """Supremum of the density"""

    @abstractmethod
    def cdf(self, x):
        ...

    @abstractmethod
    def sf(self, x):
        """1 - F(x), accurate in the upper tail"""

    @abstractmethod
    def pdf(self, x):
        ...

    @abstractmethod
    def spec(self) -> str:
        """String form accepted by parse_distribution"""

    def quantile(self, p):
        return self.quantile_by_bisection(p)

    def isf(self, q):
        """Inverse of sf"""
        return self.quantile(1.0 - q)

    def logcdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(x))

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.sf(x))

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Inverse-transform sampling from a caller-owned generator"""
        return np.asarray(self.quantile(rng.random(size)), dtype=float)

    def quantile_by_bisection(self, p: float, xtol: float = 1e-12) -> float:
        """Guarded bisection on the cdf"""
        if not 0.0 < p < 1.0:
            raise ValueError("Quantile needs 0 < p < 1")
        lo, hi = self.support
        width = 1.0
        if not math.isfinite(lo):
            lo = (hi if math.isfinite(hi) else 0.0) - width
            while self.cdf(lo) > p:
                width *= 2.0
                lo -= width
        if not math.isfinite(hi):
            hi = lo + 1.0
            while self.cdf(hi) < p:
                width *= 2.0
                hi += width
        return optimize.bisect(lambda x: float(self.cdf(x)) - p, lo, hi, xtol=xtol, maxiter=400)

    def integration_bounds(self, tail_mass: float = TAIL_MASS) -> Tuple[float, float]:
        """Finite interval carrying all but tail_mass of the law"""
        lo, hi = self.support
        if not math.isfinite(lo):
            lo = float(self.quantile(tail_mass))
        if not math.isfinite(hi):
            hi = float(self.isf(tail_mass))
        return lo, hi


class UniformPrice(PriceDistribution):
    lo: float = 0.0
    hi: float = 1.0

    @model_validator(mode="after")
    def validate_interval(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.hi > self.lo):
            raise ValueError("Uniform price law needs finite lo < hi")
        return self

    @property
    def support(self) -> Tuple[float, float]:
        return self.lo, self.hi

    @property
    def pdf_max(self) -> float:
        return 1.0 / (self.hi - self.lo)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def sf(self, x):
        return np.clip((self.hi - np.asarray(x, dtype=float)) / (self.hi - self.lo), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), self.pdf_max, 0.0)

    def quantile(self, p):
        return self.lo + np.asarray(p, dtype=float) * (self.hi - self.lo)

    def isf(self, q):
        return self.hi - np.asarray(q, dtype=float) * (self.hi - self.lo)

    def spec(self) -> str:
        return f"uniform:{self.lo!r},{self.hi!r}"


class NormalPrice(PriceDistribution):
    mean: float = 0.0
    sd: float = Field(default=1.0, gt=0)

    @property
    def support(self) -> Tuple[float, float]:
        return -math.inf, math.inf

    @property
    def pdf_max(self) -> float:
        return 1.0 / (self.sd * math.sqrt(2.0 * math.pi))

    def _z(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.sd

    def cdf(self, x):
        return special.ndtr(self._z(x))

    def sf(self, x):
        return special.ndtr(-self._z(x))

    def logcdf(self, x):
        return special.log_ndtr(self._z(x))

    def logsf(self, x):
        return special.log_ndtr(-self._z(x))

    def pdf(self, x):
        z = self._z(x)
        return np.exp(-0.5 * z * z) * self.pdf_max

    def logpdf(self, x):
        z = self._z(x)
        return -0.5 * z * z + math.log(self.pdf_max)

    def quantile(self, p):
        return self.mean + self.sd * special.ndtri(p)

    def isf(self, q):
        return self.mean - self.sd * special.ndtri(q)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mean, self.sd, size)

    def spec(self) -> str:
        return f"normal:{self.mean!r},{self.sd!r}"


class ExponentialPrice(PriceDistribution):
    rate: float = Field(default=1.0, gt=0)

    @property
    def support(self) -> Tuple[float, float]:
        return 0.0, math.inf

    @property
    def pdf_max(self) -> float:
        return self.rate

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -np.expm1(-self.rate * x)

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return np.exp(-self.rate * x)

    def logsf(self, x):
        return -self.rate * np.maximum(np.asarray(x, dtype=float), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def quantile(self, p):
        return -np.log1p(-np.asarray(p, dtype=float)) / self.rate

    def isf(self, q):
        return -np.log(np.asarray(q, dtype=float)) / self.rate

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size)

    def spec(self) -> str:
        return f"exponential:{self.rate!r}"


def make_uniform(lo: float = 0.0, hi: float = 1.0) -> UniformPrice:
    return UniformPrice(lo=lo, hi=hi)


def make_normal(mean: float = 0.0, sd: float = 1.0) -> NormalPrice:
    return NormalPrice(mean=mean, sd=sd)


def make_exponential(rate: float = 1.0) -> ExponentialPrice:
    return ExponentialPrice(rate=rate)


_FACTORIES = {
    "uniform": (make_uniform, 2),
    "normal": (make_normal, 2),
    "exponential": (make_exponential, 1),
}


def parse_distribution(spec: str) -> PriceDistribution:
    """
    Build a price law from its string form

    Args:
        spec: "uniform:lo,hi" | "normal:mean,sd" | "exponential:rate"

    Returns:
        The matching PriceDistribution instance
    """
    name, _, args = spec.strip().partition(":")
    name = name.lower()
    if name not in _FACTORIES:
        raise ValueError(f"Unknown price distribution '{name}' (expected uniform, normal or exponential)")
    factory, arity = _FACTORIES[name]
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"Non-numeric parameter in distribution spec '{spec}'")
    if len(values) != arity:
        raise ValueError(f"Distribution '{name}' takes {arity} parameter(s), got {len(values)}")
    return factory(*values)
