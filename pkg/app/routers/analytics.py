from fastapi import APIRouter, Depends, File, HTTPException, Query, UploadFile
from fastapi.responses import JSONResponse
from typing import Optional
import io
import logging

from app.models.model import AuctionParams, effective_params
from app.schemas.schema import ClearingOutcome, ClearRequest, GridSpec, SpreadFitResponse, Table
from app.services import asymptotic, tables
from app.services.clearing import clear_auction
from app.services.price_dist import PriceDistribution, parse_distribution
from app.utils.config import Settings, get_settings
from app.utils.exceptions import ToleranceNotMetError
from app.utils.output import json_safe

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/analytics", tags=["Analytics"])

MAX_UPLOAD_BYTES = 10 * 1024 * 1024


def get_params(
    lambda_total: float = Query(..., alias="lambda", gt=0),
    alpha: float = Query(..., ge=0, le=1),
    horizon: float = Query(1.0, alias="T", gt=0),
    theta_ask: float = Query(0.0, ge=0),
    theta_bid: float = Query(0.0, ge=0),
) -> AuctionParams:
    """Auction parameters from the query string"""
    try:
        return AuctionParams(lambda_total=lambda_total, alpha=alpha, horizon=horizon,
                             theta_ask=theta_ask, theta_bid=theta_bid)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))


def get_distribution(dist: str = Query("uniform:0,1")) -> PriceDistribution:
    try:
        return parse_distribution(dist)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


def _grid(lo: Optional[float], hi: Optional[float], points: Optional[int], settings: Settings) -> Optional[GridSpec]:
    if lo is None and hi is None:
        return None
    if lo is None or hi is None:
        raise HTTPException(status_code=400, detail="Give both lo and hi for a grid")
    try:
        return GridSpec(lo=lo, hi=hi, points=points or settings.grid_points)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


def _run(builder, *args) -> JSONResponse:
    """Build a table; undefined cells (NaN) go out as null"""
    try:
        table = builder(*args)
    except ToleranceNotMetError as e:
        raise HTTPException(status_code=422, detail=json_safe({"message": str(e), "achieved": e.achieved,
                                                               "requested": e.requested}))
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return JSONResponse(content=json_safe(table.model_dump()))


@router.get("/volume", response_model=Table)
def volume(
    params: AuctionParams = Depends(get_params),
    k_max: Optional[int] = Query(None, ge=0),
    tol: Optional[float] = Query(None, gt=0),
):
    """Traded volume law: double series, 1F1 series and normal limit"""
    return _run(tables.volume_table, params, k_max, tol)


@router.get("/prices", response_model=Table)
def prices(
    params: AuctionParams = Depends(get_params),
    F: PriceDistribution = Depends(get_distribution),
    lo: Optional[float] = None,
    hi: Optional[float] = None,
    points: Optional[int] = Query(None, ge=2),
    settings: Settings = Depends(get_settings),
):
    """Densities of the lowest and highest clearing prices"""
    return _run(tables.prices_table, params, F, _grid(lo, hi, points, settings))


@router.get("/range", response_model=Table)
def price_range(
    params: AuctionParams = Depends(get_params),
    F: PriceDistribution = Depends(get_distribution),
    lo: Optional[float] = None,
    hi: Optional[float] = None,
    points: Optional[int] = Query(None, ge=2),
    settings: Settings = Depends(get_settings),
):
    """Density of the clearing range"""
    return _run(tables.range_table, params, F, _grid(lo, hi, points, settings))


@router.get("/laws")
def laws(
    params: AuctionParams = Depends(get_params),
    F: PriceDistribution = Depends(get_distribution),
):
    """Limit laws of volume, clearing bounds and range, with the effective parameters"""
    try:
        return {
            "effective": effective_params(params).model_dump(),
            "volume": asymptotic.asymptotic_volume(params).model_dump(),
            "price": asymptotic.asymptotic_price(params, F).model_dump(),
            "range": asymptotic.asymptotic_range(params, F).model_dump(),
            "dist": F.spec(),
        }
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/clear", response_model=ClearingOutcome)
def clear(request: ClearRequest):
    """Clear explicit bid and ask price lists"""
    try:
        return clear_auction(request.bid_prices, request.ask_prices)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/spread/fit", response_model=SpreadFitResponse)
async def fit_spread(file: UploadFile = File(...)):
    """Exponential MLE fit of an uploaded spread sample (CSV, one value per line)"""
    content = await file.read()
    if len(content) > MAX_UPLOAD_BYTES:
        raise HTTPException(status_code=400, detail="File is too large (Max 10MB)")
    try:
        values = tables.read_spreads(io.StringIO(content.decode("utf-8")))
        fit, table = tables.spread_fit(values)
    except UnicodeDecodeError:
        raise HTTPException(status_code=400, detail="Spread file must be UTF-8 text")
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    logger.info("✅ Fitted %d spreads from %s", fit.sample_size, file.filename)
    return SpreadFitResponse(fit=fit, survival=[tuple(r) for r in table.rows])
