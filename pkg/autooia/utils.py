import time
import uuid
from functools import wraps
from pathlib import Path
from typing import Callable, Iterable, List, Tuple

from cryptography.hazmat.primitives import hashes

from autooia.const import FileName

# fixed so run ids are stable across invocations
NAMESPACE = uuid.UUID("6f1d2c7a-52e4-4b0e-9a51-0f6b1f3c8e21")


def get_config_file() -> Path:
    return Path.cwd() / FileName.CONFIG_INI


def feature_path(data_dir: Path, scene_id: str) -> Path:
    return Path(data_dir) / FileName.FEATURES_DIR / f"{scene_id}{FileName.FEATURE_SUFFIX}"


def annotation_path(data_dir: Path, split: str) -> Path:
    return Path(data_dir) / f"{split}{FileName.ANNOTATION_SUFFIX}"


def generate_uuid5(name: str) -> str:
    """
    Generate a UUID5 hash from the given name.
    """
    return uuid.uuid5(NAMESPACE, name).hex


def digest(data: bytes) -> str:
    """
    SHA-256 hex digest of ``data``.
    """
    hasher = hashes.Hash(hashes.SHA256())
    hasher.update(data)
    return hasher.finalize().hex()


def timed(func: Callable) -> Callable:
    """
    Wraps ``func`` so it returns ``(result, elapsed_seconds)``.
    """
    @wraps(func)
    def wrapper(*args, **kwargs) -> Tuple[object, float]:
        start = time.perf_counter()
        result = func(*args, **kwargs)
        return result, time.perf_counter() - start
    return wrapper


def parse_float(text: str) -> float:
    """
    Parses a real number; 'inf', 'infinity' and '∞' map to float('inf').
    """
    cleaned = text.strip().lower()
    if cleaned in ("inf", "infinity", "∞"):
        return float("inf")
    return float(cleaned)


def parse_int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def format_float(value: float) -> str:
    if value == float("inf"):
        return "inf"
    return f"{value:g}"


def mask_to_text(bits: Iterable[int]) -> str:
    return "".join("1" if int(b) else "0" for b in bits)
