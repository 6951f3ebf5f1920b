"""Load configuration from environment.

Config is read from:
- Environment variables (e.g. SFC_SEED)
- .env file in project root (same folder as this file), if present

See .env.example and README.md for the available keys.
"""
import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from project root (same folder as config.py). Works regardless of cwd.
BASE_DIR = Path(__file__).resolve().parent
load_dotenv(BASE_DIR / ".env")

logger = logging.getLogger(__name__)


def _env_number(name: str, default, cast):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        logger.warning("Ignoring invalid %s=%r, using %r", name, raw, default)
        return default


# Experiments
DEFAULT_SEED = _env_number("SFC_SEED", 20240601, int)
DEFAULT_SLACK = _env_number("SFC_SLACK", 0.1, float)
AUDIT_ATOM_CAP = _env_number("SFC_AUDIT_ATOM_CAP", 2 ** 24, int)
MI_TOLERANCE = _env_number("SFC_MI_TOLERANCE", 1e-12, float)
WORKERS = _env_number("SFC_WORKERS", 1, int)
GATE_SIGMAS = _env_number("SFC_GATE_SIGMAS", 4.0, float)

# Logging
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
LOG_FILE = os.environ.get("LOG_FILE", str(BASE_DIR / "sfc.log"))

# Flask
SECRET_KEY = os.environ.get("SECRET_KEY", "dev-secret-change-in-production")
DEBUG = os.environ.get("FLASK_DEBUG", "0").lower() in ("1", "true", "yes")
