"""
Configuración de una ejecución

Precedencia: flag de línea de comandos > fichero --config > entorno (.env) > valores por defecto.
"""
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Union

from dotenv import dotenv_values

from src import __version__
from src.errors import InputError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = 'outputs'

# Variables de entorno → campo de RunConfig
ENV_KEYS = {
    'BANDA_TOL': 'tol',
    'BANDA_SEED': 'seed',
    'BANDA_MAX_ITER': 'max_iter',
    'BANDA_OUTPUT_DIR': 'output_dir',
}


@dataclass
class RunConfig:
    """
    Parámetros resueltos de una ejecución; se serializan en cada salida.

    Attributes:
        command: Subcomando
        d, h, L: Dominio
        truncation_bc: 'dirichlet' o 'neumann'
        sigma: Valor constante de σ (None si viene de fichero)
        sigma_file: Tabla de σ
        k: Número de autopares
        tol: Tolerancia del autosolver
        out: Ruta de salida
        format: 'json' o 'csv'
        seed: Semilla
        explicit: Claves dadas por flag o por fichero --config
    """
    command: str = ''
    d: float = 1.0
    h: float = 0.125
    L: float = 6.0
    truncation_bc: str = 'dirichlet'
    sigma: Optional[float] = None
    sigma_file: Optional[str] = None
    k: int = 5
    tol: float = 1e-8
    out: Optional[str] = None
    format: str = 'json'
    seed: int = 12345
    max_iter: int = 5000
    output_dir: str = DEFAULT_OUTPUT_DIR
    extra: Dict[str, Any] = field(default_factory=dict)
    explicit: FrozenSet[str] = field(default_factory=frozenset, compare=False, repr=False)

    def to_dict(self) -> Dict:
        data = asdict(self)
        extra = data.pop('extra')
        data.pop('explicit')
        data.update(extra)
        data['version'] = __version__
        return data

    def output_path(self, default_name: str) -> Path:
        """Ruta de salida: --out, o <output_dir>/<default_name>.<format>"""
        if self.out:
            return Path(self.out)
        return Path(self.output_dir) / f"{default_name}.{self.format}"


_TYPES = {
    'd': float, 'h': float, 'L': float, 'sigma': float, 'tol': float,
    'k': int, 'seed': int, 'max_iter': int,
    'truncation_bc': str, 'sigma_file': str, 'out': str, 'format': str, 'output_dir': str,
}

# Alias admitidos en el fichero de configuración
_ALIASES = {
    'truncation': 'truncation_bc',
    'sigma-file': 'sigma_file',
    'max-iter': 'max_iter',
    'output-dir': 'output_dir',
}

_CHOICES = {
    'truncation_bc': ('dirichlet', 'neumann'),
    'format': ('json', 'csv'),
}


def _convert(key: str, raw: Any, source: str) -> Any:
    kind = _TYPES.get(key, str)
    try:
        value = kind(raw)
    except (TypeError, ValueError):
        raise InputError(f"{source}: valor no válido para '{key}': {raw!r}")

    if key in _CHOICES and value not in _CHOICES[key]:
        raise InputError(f"{source}: '{key}' debe ser uno de {_CHOICES[key]} (recibido {value!r})")
    return value


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Lee un fichero 'clave = valor' con comentarios '#'.

    Args:
        path: Ruta del fichero

    Returns:
        Diccionario con las claves normalizadas y tipadas

    Raises:
        ParseError: si el fichero no existe o tiene líneas sin valor
    """
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"No existe el fichero de configuración: {path}")

    raw = dotenv_values(path)
    values = {}

    for key, value in raw.items():
        key = _ALIASES.get(key.strip(), key.strip())
        if value is None:
            raise ParseError(f"{path}: la clave '{key}' no tiene valor")
        values[key] = value.strip() if key not in _TYPES else _convert(key, value.strip(), str(path))

    logger.debug(f"Configuración leída de {path}: {sorted(values)}")
    return values


def env_defaults() -> Dict[str, Any]:
    """Valores de BANDA_TOL, BANDA_SEED, BANDA_MAX_ITER y BANDA_OUTPUT_DIR definidos en el entorno"""
    values = {}
    for variable, key in ENV_KEYS.items():
        raw = os.getenv(variable)
        if raw not in (None, ''):
            values[key] = _convert(key, raw, variable)
    return values


def resolve_config(command: str, cli_values: Dict[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """
    Combina las cuatro fuentes en un RunConfig.

    Args:
        command: Subcomando
        cli_values: Flags explícitos de la línea de comandos (None = no dados)
        config_path: Fichero --config

    Returns:
        RunConfig resuelto
    """
    given: Dict[str, Any] = {}
    if config_path:
        given.update(read_config_file(config_path))
    given.update({key: value for key, value in cli_values.items() if value is not None})

    merged: Dict[str, Any] = {**env_defaults(), **given}

    known = {name for name in RunConfig.__dataclass_fields__ if name not in ('command', 'extra', 'explicit')}
    config = RunConfig(command=command, **{key: merged[key] for key in known if key in merged})
    config.extra = {key: value for key, value in merged.items() if key not in known}
    config.explicit = frozenset(given)

    return config


def sweep_values(text: Optional[str]) -> List[float]:
    """'0,0.5,1' → [0.0, 0.5, 1.0]; vacío → []"""
    if not text:
        return []
    try:
        return [float(part) for part in str(text).replace(';', ',').split(',') if part.strip()]
    except ValueError:
        raise InputError(f"Lista de valores no válida: {text!r}")
