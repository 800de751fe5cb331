import os
import logging
from functools import lru_cache

logger = logging.getLogger(__name__)

THREADS_ENV = "FRECHET_FLOW_THREADS"


@lru_cache(maxsize=None)
def _load_dotenv() -> bool:
    """Read the .env file into the environment; runs once per process."""
    try:
        from dotenv import load_dotenv
    except ImportError:
        logger.debug("python-dotenv not available, skipping .env lookup")
        return False
    return bool(load_dotenv(".env"))


def get_env_value(key_name: str) -> str | None:
    """
    Get a setting from the environment or the .env file.
    """
    value = os.environ.get(key_name)
    if not value and _load_dotenv():
        value = os.environ.get(key_name)
    return value


def get_thread_cap(task_num: int | None = None) -> int:
    """Number of worker threads: FRECHET_FLOW_THREADS, capped by cpu count and task count."""
    cap = os.cpu_count() or 1
    raw = get_env_value(THREADS_ENV)
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
    cap = min(cap, os.cpu_count() or 1)
    if task_num is not None:
        cap = min(cap, max(1, task_num))
    return cap
