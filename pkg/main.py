"""
Gate Capability Engine: FastAPI application

Architecture:
  - Canonical form: magic-basis diagonalization of any two-qubit unitary
  - Capability: multi-start gradient ascent for E_U and E_U^- (seeded, reproducible)
  - Ensembles: Pauli ensembles realizing the one-way and bidirectional Holevo gains
  - Protocols: JSON protocol library, loaded once at startup, audited on request
  - Reports: canonical JSON, cached in Redis (or in memory) per gate + config
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from config import get_settings
from app.services.protocols import load_protocols
from app.services.report_cache import get_redis
from app.api.routes import router

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
)
logger = logging.getLogger(__name__)
settings = get_settings()


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Startup and shutdown lifecycle."""
    logger.info("=" * 60)
    logger.info(f"Gate Capability Engine {settings.TOOL_VERSION} starting...")
    logger.info("=" * 60)

    # 1. Protocol library (once)
    load_protocols(settings.PROTOCOLS_DIR)

    # 2. Report cache
    if settings.REDIS_ENABLED:
        if get_redis():
            logger.info("Redis: connected")
        else:
            logger.warning("Redis: NOT available, reports use the in-memory cache")
    else:
        logger.info("Redis: DISABLED (set REDIS_ENABLED=True to share the report cache)")

    logger.info(
        f"Engine ready. Optimizer: {settings.OPT_RESTARTS} restarts, "
        f"seed {settings.OPT_SEED}, oracle {settings.ORACLE_SAMPLES} samples."
    )
    yield

    logger.info("Engine shut down cleanly.")


app = FastAPI(
    title="Gate Capability Engine",
    description=(
        "Entanglement capability and communication audits for two-qubit gates.\n\n"
        "**Canonical form**: U = phase (A1 x B1) U_d(alpha) (A2 x B2)\n"
        "**Capability**: E_U and E_U^-, equal for every two-qubit gate\n"
        "**Ensembles**: one-way gain E_U, bidirectional gain 2 E_U\n"
        "**Protocols**: superposition-of-messages entanglement audit"
    ),
    version=settings.TOOL_VERSION,
    lifespan=lifespan,
)

# CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Routes
app.include_router(router, prefix="/api/v1")


@app.get("/")
async def root():
    return {
        "service": "Gate Capability Engine",
        "version": settings.TOOL_VERSION,
        "docs": "/docs",
        "health": "/api/v1/health",
        "protocols": "/api/v1/protocols",
    }
