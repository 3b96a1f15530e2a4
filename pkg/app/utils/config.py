from pydantic import BaseModel, ConfigDict
from dotenv import load_dotenv
import logging
import os
import sys
from typing import Optional

load_dotenv()


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    log_level: str = "INFO"
    default_tol: float = 1e-10
    quad_tol: float = 1e-9
    count_cap: int = 10_000
    workers: int = 1
    grid_points: int = 512
    max_export_samples: int = 100_000
    api_host: str = "localhost"
    api_port: int = 5000


def _load_settings() -> Settings:
    return Settings(
        log_level=os.getenv("AUCTION_LOG_LEVEL", "INFO"),
        default_tol=float(os.getenv("AUCTION_DEFAULT_TOL", 1e-10)),
        quad_tol=float(os.getenv("AUCTION_QUAD_TOL", 1e-9)),
        count_cap=int(os.getenv("AUCTION_COUNT_CAP", 10_000)),
        workers=int(os.getenv("AUCTION_WORKERS", 1)),
        grid_points=int(os.getenv("AUCTION_GRID_POINTS", 512)),
        max_export_samples=int(os.getenv("AUCTION_MAX_EXPORT_SAMPLES", 100_000)),
        api_host=os.getenv("AUCTION_API_HOST", "localhost"),
        api_port=int(os.getenv("AUCTION_API_PORT", 5000)),
    )


# Singleton instance
settings = _load_settings()


def get_settings() -> Settings:
    """Dependency to get the engine settings"""
    return settings


def configure_logging(level: Optional[str] = None) -> None:
    """Send log records to stderr so tables written to stdout stay clean"""
    root = logging.getLogger()
    if not any(getattr(h, "_auction_handler", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        handler._auction_handler = True
        root.addHandler(handler)
    root.setLevel((level or settings.log_level).upper())
