"""
Perfil de interacción σ(y) sobre [0, d]

σ(y) = -v(0, y) es la única traza del potencial de dos partículas que entra
en el modelo. Convenio de signo: σ > 0 atractivo, σ < 0 repulsivo.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from src.errors import (
    InputError, NonMonotoneSamples, OutOfDomain, ParseError, RangeMismatch
)

logger = logging.getLogger(__name__)

# Holgura para y en los extremos de [0, d]
_EDGE_TOL = 1e-12


def _check_width(d: float):
    if not (math.isfinite(d) and d > 0):
        raise InputError(f"d debe ser positivo y finito (recibido {d})")


@dataclass(frozen=True)
class Constant:
    """σ(y) = value en todo [0, d]"""
    value: float
    d: float

    def __post_init__(self):
        _check_width(self.d)


@dataclass(frozen=True)
class PiecewiseConstant:
    """
    σ constante a trozos.

    breakpoints (crecientes, dentro de (0, d)) separan len(breakpoints) + 1 tramos;
    en un punto de corte vale el tramo de la derecha.
    """
    breakpoints: Tuple[float, ...]
    values: Tuple[float, ...]
    d: float

    def __post_init__(self):
        _check_width(self.d)
        object.__setattr__(self, 'breakpoints', tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))

        if len(self.values) != len(self.breakpoints) + 1:
            raise InputError(
                f"Se esperaban {len(self.breakpoints) + 1} valores, hay {len(self.values)}"
            )
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise NonMonotoneSamples("Los puntos de corte deben ser estrictamente crecientes")
        if any(not 0 < b < self.d for b in self.breakpoints):
            raise RangeMismatch(f"Los puntos de corte deben quedar dentro de (0, {self.d})")


@dataclass(frozen=True)
class SampledTable:
    """σ muestreado en (y, valor) con interpolación lineal; las muestras cubren [0, d]"""
    ys: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'ys', tuple(float(y) for y in self.ys))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))

        if len(self.ys) != len(self.values) or len(self.ys) < 2:
            raise InputError("Una tabla necesita al menos dos pares (y, σ)")
        if any(y2 <= y1 for y1, y2 in zip(self.ys, self.ys[1:])):
            raise NonMonotoneSamples("Las abscisas de la tabla deben ser estrictamente crecientes")
        if not all(math.isfinite(v) for v in self.values):
            raise InputError("La tabla contiene valores no finitos")
        if abs(self.ys[0]) > _EDGE_TOL * max(1.0, self.ys[-1]):
            raise RangeMismatch(f"La tabla debe empezar en y = 0 (empieza en {self.ys[0]})")

    @property
    def d(self) -> float:
        return self.ys[-1]


SigmaProfile = Union[Constant, PiecewiseConstant, SampledTable]


def eval(profile: SigmaProfile, y: float) -> float:
    """
    Evalúa σ(y).

    Args:
        profile: Perfil de interacción
        y: Posición en [0, d]

    Returns:
        Valor de σ en y

    Raises:
        OutOfDomain: si y cae fuera de [0, d]
    """
    d = profile.d
    if y < -_EDGE_TOL * max(1.0, d) or y > d * (1 + _EDGE_TOL):
        raise OutOfDomain(f"y={y} fuera de [0, {d}]")

    if isinstance(profile, Constant):
        return float(profile.value)

    if isinstance(profile, PiecewiseConstant):
        piece = int(np.searchsorted(profile.breakpoints, y, side='right'))
        return profile.values[piece]

    if isinstance(profile, SampledTable):
        return float(np.interp(y, profile.ys, profile.values))

    raise InputError(f"Perfil desconocido: {type(profile).__name__}")


def sup_norm(profile: SigmaProfile) -> float:
    """‖σ‖∞ exacta: máximo sobre tramos o muestras (la interpolación lineal alcanza el máximo en una muestra)"""
    if isinstance(profile, Constant):
        return abs(float(profile.value))
    return float(max(abs(v) for v in profile.values))


def breakpoints(profile: SigmaProfile) -> Tuple[float, ...]:
    """Puntos donde σ deja de ser suave (se usan para partir la cuadratura)"""
    if isinstance(profile, PiecewiseConstant):
        return profile.breakpoints
    if isinstance(profile, SampledTable):
        return profile.ys
    return ()


def scaled(profile: SigmaProfile, factor: float) -> SigmaProfile:
    """Perfil factor·σ"""
    if isinstance(profile, Constant):
        return Constant(factor * profile.value, profile.d)
    if isinstance(profile, PiecewiseConstant):
        return PiecewiseConstant(profile.breakpoints, tuple(factor * v for v in profile.values), profile.d)
    return SampledTable(profile.ys, tuple(factor * v for v in profile.values))


def is_nonnegative(profile: SigmaProfile) -> bool:
    """True si σ >= 0 en todo [0, d]"""
    if isinstance(profile, Constant):
        return profile.value >= 0
    return min(profile.values) >= 0


def describe(profile: SigmaProfile) -> Dict:
    """Descripción serializable del perfil (para procedencia en los informes)"""
    if isinstance(profile, Constant):
        return {'type': 'constant', 'value': float(profile.value)}
    if isinstance(profile, PiecewiseConstant):
        return {
            'type': 'piecewise',
            'breakpoints': list(profile.breakpoints),
            'values': list(profile.values),
        }
    return {'type': 'table', 'y': list(profile.ys), 'values': list(profile.values)}


def load_profile(path: Union[str, Path], d: float) -> SampledTable:
    """
    Carga un perfil muestreado desde un fichero de dos columnas (y, σ(y)).

    Líneas vacías y comentarios (#) se ignoran. Las abscisas deben ser
    crecientes y cubrir exactamente [0, d].

    Args:
        path: Ruta del fichero de texto
        d: Tamaño de la molécula

    Returns:
        Tabla muestreada

    Raises:
        ParseError: si alguna línea no tiene dos números
        NonMonotoneSamples: si las abscisas no son crecientes
        RangeMismatch: si las muestras no empiezan en 0 o no terminan en d
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"Fichero de perfil no encontrado: {path}")

    ys, values = [], []

    for lineno, raw in enumerate(path.read_text(encoding='utf-8').splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue

        parts = line.replace(',', ' ').split()
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: se esperaban dos columnas, hay {len(parts)}")

        try:
            y, value = float(parts[0]), float(parts[1])
        except ValueError as e:
            raise ParseError(f"{path}:{lineno}: valor no numérico ({e})") from e

        ys.append(y)
        values.append(value)

    if len(ys) < 2:
        raise ParseError(f"{path}: se necesitan al menos dos muestras")

    if any(y2 <= y1 for y1, y2 in zip(ys, ys[1:])):
        raise NonMonotoneSamples(f"{path}: las abscisas deben ser crecientes")

    tol = _EDGE_TOL * max(1.0, d)
    if abs(ys[0]) > tol or abs(ys[-1] - d) > tol:
        raise RangeMismatch(f"{path}: las muestras cubren [{ys[0]}, {ys[-1]}], se esperaba [0, {d}]")

    # Extremos exactos para que eval acepte y = 0 y y = d
    ys[0], ys[-1] = 0.0, float(d)

    logger.info(f"✓ Perfil σ cargado: {len(ys)} muestras, ‖σ‖∞ = {max(abs(v) for v in values):g}")
    return SampledTable(tuple(ys), tuple(values))


def parse_sigma_argument(value: Union[float, str, None], path: Union[str, Path, None], d: float) -> SigmaProfile:
    """
    Construye el perfil a partir de las opciones del CLI (--sigma o --sigma-file).

    Args:
        value: Constante σ (o None)
        path: Fichero de perfil (o None)
        d: Tamaño de la molécula

    Returns:
        Perfil constante, o tabla cargada del fichero; σ ≡ 0 si no se da ninguno
    """
    if value is not None and path is not None:
        raise InputError("--sigma y --sigma-file son incompatibles")

    if path is not None:
        return load_profile(path, d)

    return Constant(float(value) if value is not None else 0.0, d)


def edge_pieces(profile: SigmaProfile, s0: float, s1: float) -> Sequence[Tuple[float, float]]:
    """Subintervalos de [min(s0,s1), max(s0,s1)] en los que σ es suave"""
    lo, hi = min(s0, s1), max(s0, s1)
    cuts = [b for b in breakpoints(profile) if lo < b < hi]
    points = [lo] + cuts + [hi]
    return list(zip(points, points[1:]))
