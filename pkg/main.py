from fastapi import FastAPI
from app import __version__
from app.routers import analytics
from app.utils.config import configure_logging, settings
import logging
import sys

logger = logging.getLogger(__name__)

app = FastAPI(title="Call Auction Analytics API", version=__version__)


@app.on_event("startup")
def startup_event():
    configure_logging()
    logger.info("🚀 Starting call auction analytics (tol %.1e, %d worker(s))", settings.default_tol, settings.workers)


app.include_router(analytics.router)


@app.get("/")
def read_root():
    return {
        "message": "Call auction analytics API",
        "status": "running",
        "version": __version__,
        "docs": "/docs",
        "endpoints": {
            "volume": "/analytics/volume",
            "prices": "/analytics/prices",
            "range": "/analytics/range",
            "laws": "/analytics/laws",
            "clear": "/analytics/clear",
            "spread_fit": "/analytics/spread/fit",
        }
    }


@app.get("/health")
def health_check():
    return {
        "status": "healthy",
        "default_tol": settings.default_tol,
        "quad_tol": settings.quad_tol,
        "workers": settings.workers,
    }


if __name__ == "__main__":
    from app.cli import main
    sys.exit(main())
