# app/schemas/__init__.py
from app.schemas.schema import (
    SeriesResult, DiscretePmf, DensityCurve, DensityTable, ClearingOutcome, NormalLaw,
    ExponentialLaw, RngState, FitResult, SampleSummary, GridSpec, RunConfig, ClearRequest,
    SpreadFitResponse, Histogram, Table, CheckResult, ValidationReport,
)
