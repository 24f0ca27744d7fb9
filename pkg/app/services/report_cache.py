"""
Report cache for the HTTP surface.

Analysis reports are keyed by the canonical JSON of (gate spec, optimizer
config, tool version) and stored in Redis (key: report:{sha256}) with a TTL
when REDIS_ENABLED, and in an in-process TTLCache otherwise or on Redis
errors.
"""
import hashlib
import json
import logging
from typing import Any, Dict, Optional

import redis
from cachetools import TTLCache

from config import get_settings

logger = logging.getLogger(__name__)
settings = get_settings()

_redis_client: Optional[redis.Redis] = None
_memory_cache: TTLCache = TTLCache(maxsize=settings.REPORT_CACHE_SIZE, ttl=settings.REPORT_CACHE_TTL)


def get_redis() -> Optional[redis.Redis]:
    global _redis_client
    if not settings.REDIS_ENABLED:
        return None
    if _redis_client is None:
        try:
            _redis_client = redis.from_url(settings.REDIS_URL, decode_responses=True)
            _redis_client.ping()
            logger.info("[Cache] Redis connected successfully")
        except Exception as e:
            logger.warning(f"[Cache] Redis not available: {e}. Reports use the in-memory cache only.")
            _redis_client = None
    return _redis_client


def report_key(payload: Dict[str, Any]) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return "report:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()


def get_cached(key: str) -> Optional[str]:
    r = get_redis()
    if r:
        try:
            cached = r.get(key)
            if cached:
                logger.debug(f"[Cache] HIT (Redis) {key}")
                return cached
        except Exception as e:
            logger.warning(f"[Cache] Redis read error: {e}")
    cached = _memory_cache.get(key)
    if cached is not None:
        logger.debug(f"[Cache] HIT (memory) {key}")
    return cached


def put_cached(key: str, text: str) -> None:
    r = get_redis()
    if r:
        try:
            r.setex(key, settings.REDIS_REPORT_TTL, text)
        except Exception as e:
            logger.warning(f"[Cache] Redis write error: {e}")
    _memory_cache[key] = text


def clear_memory_cache() -> None:
    _memory_cache.clear()
