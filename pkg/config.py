from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    TOOL_VERSION: str = "1.0.0"

    # Capability optimizer (multi-start gradient ascent)
    OPT_RESTARTS: int = 32
    OPT_MAX_ITERS: int = 5000
    OPT_GRAD_TOL: float = 1e-7
    OPT_FD_STEP: float = 1e-6
    OPT_SEED: int = 20240917

    # Random-search lower-bound oracle (0 disables the check)
    ORACLE_SAMPLES: int = 1_000_000

    # Shipped protocol library
    PROTOCOLS_DIR: str = "protocols"

    # Redis report cache (optional, in-memory TTL cache used otherwise)
    REDIS_ENABLED: bool = False
    REDIS_URL: str = "redis://localhost:6379"
    REDIS_REPORT_TTL: int = 86400  # 24 hours in seconds

    REPORT_CACHE_TTL: int = 3600
    REPORT_CACHE_SIZE: int = 256

    class Config:
        env_file = ".env"
        extra = "allow"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
