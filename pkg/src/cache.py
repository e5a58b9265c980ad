"""
Caché en disco de autosoluciones (.npz) indexada por el md5 de los parámetros
"""
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Dict, Optional

import numpy as np

logger = logging.getLogger(__name__)

CACHE_ENV = "BANDA_CACHE_DIR"


def cache_key(params: Dict) -> str:
    """md5 del JSON canónico de los parámetros"""
    canonical = json.dumps(params, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.md5(canonical.encode()).hexdigest()


class SolveCache:
    """Guarda y recupera arrays de un solve por sus parámetros"""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_env(cls) -> Optional["SolveCache"]:
        """Caché en $BANDA_CACHE_DIR, o None si no está definida"""
        directory = os.getenv(CACHE_ENV)
        return cls(directory) if directory else None

    def get_cache_path(self, params: Dict) -> Path:
        return self.directory / f"{cache_key(params)}.npz"

    def get(self, params: Dict) -> Optional[Dict[str, np.ndarray]]:
        """Arrays guardados para estos parámetros, si existen"""
        path = self.get_cache_path(params)
        if not path.exists():
            return None

        try:
            with np.load(path, allow_pickle=False) as data:
                arrays = {key: data[key] for key in data.files}
        except (OSError, ValueError) as e:
            logger.warning(f"⚠️  Entrada de caché ilegible {path.name}: {e}")
            return None

        logger.debug(f"Caché: acierto {path.name}")
        return arrays

    def save(self, params: Dict, **arrays: np.ndarray) -> Path:
        """Guarda los arrays (escritura atómica)"""
        path = self.get_cache_path(params)
        tmp = path.with_name(f".{path.stem}.{os.getpid()}.tmp.npz")
        np.savez(tmp, **arrays)
        os.replace(tmp, path)
        logger.debug(f"Caché: guardado {path.name}")
        return path
