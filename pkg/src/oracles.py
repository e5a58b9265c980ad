"""
Valores de referencia cerrados y semianalíticos

Umbral de la banda, rectángulo Dirichlet, intervalo con Robin constante
(ecuación secular, verificada contra diferencias finitas) y la constante
de la guía en L.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import bisect

from src.errors import InputError, NoConvergence, OracleVerificationError, RootNotBracketed
from src.utils import observed_order, richardson_extrapolate

logger = logging.getLogger(__name__)

LSHAPE_CONSTANT = 0.93
FDM_LEVELS = (200, 400, 800)
VERIFY_TOL = 1e-5
ROOT_XTOL = 1e-14
ROOT_MAXITER = 200


class Provenance(str, Enum):
    """Origen de un valor de referencia"""
    CLOSED_FORM = "ClosedForm"
    SECULAR_ROOT = "SecularRoot"
    FDM_1D = "FDM1D"
    LITERATURE_CONSTANT = "LiteratureConstant"


@dataclass(frozen=True)
class OracleValue:
    """Energía de referencia con su procedencia y los parámetros usados"""
    value: float
    provenance: Provenance
    params: Dict = field(default_factory=dict)
    name: str = ""

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'value': float(self.value),
            'provenance': self.provenance.value,
            'params': dict(self.params),
        }


def _positive(**values):
    for key, value in values.items():
        if not value > 0:
            raise InputError(f"{key} debe ser positivo (recibido {value})")


def strip_threshold(d: float) -> float:
    """
    Ínfimo del espectro esencial, π²/(2d²).

    Examples:
        >>> strip_threshold(1.0)
        4.934802200544679
    """
    _positive(d=d)
    return math.pi ** 2 / (2.0 * d ** 2)


def rect_ground_state(d: float, w: float) -> float:
    """Primer autovalor del rectángulo Dirichlet de lados √2·d y √2·w"""
    _positive(d=d, w=w)
    return math.pi ** 2 / (2.0 * d ** 2) + math.pi ** 2 / (2.0 * w ** 2)


def secular_function(k: float, gamma: float, d: float) -> float:
    """(k² - γ²)·sin(kd) + 2γk·cos(kd)"""
    return (k * k - gamma * gamma) * math.sin(k * d) + 2.0 * gamma * k * math.cos(k * d)


def secular_root(gamma: float, d: float) -> float:
    """
    Menor raíz positiva k₀ de la ecuación secular en (0, π/d).

    Args:
        gamma: Constante de Robin (< 0)
        d: Longitud del intervalo

    Returns:
        k₀

    Raises:
        RootNotBracketed: si no hay cambio de signo en (ε, π/d - ε)
        NoConvergence: si la bisección agota ROOT_MAXITER pasos
    """
    eps = 1e-9 / d
    lo, hi = eps, math.pi / d - eps

    def f(k: float) -> float:
        return secular_function(k, gamma, d)

    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise RootNotBracketed(f"Sin cambio de signo en [{lo}, {hi}] (γ={gamma}, d={d})")

    try:
        return float(bisect(f, lo, hi, xtol=ROOT_XTOL, maxiter=ROOT_MAXITER))
    except RuntimeError as e:
        raise NoConvergence(f"Bisección secular sin converger (γ={gamma}, d={d}): {e}") from e


def fdm_1d_robin(gamma: float, d: float, n: int) -> float:
    """
    Primer autovalor de -u'' en [0, d] con u'(0) + γu(0) = 0 y -u'(d) + γu(d) = 0.

    Diferencias centradas con n subintervalos (h = d/n); las condiciones de
    Robin se imponen con puntos fantasma. El sistema resultante se simetriza
    con los pesos (1/2, 1, ..., 1, 1/2).

    Args:
        gamma: Constante de Robin
        d: Longitud del intervalo
        n: Número de subintervalos (>= 10)

    Returns:
        λ más bajo de la discretización
    """
    _positive(d=d)
    if n < 10:
        raise InputError(f"n={n} debe ser >= 10")

    h = d / n
    diag = np.full(n + 1, 2.0 / h ** 2)
    diag[0] = diag[-1] = 2.0 * (1.0 - h * gamma) / h ** 2

    off = np.full(n, -1.0 / h ** 2)
    off[0] = off[-1] = -math.sqrt(2.0) / h ** 2

    values = eigh_tridiagonal(diag, off, eigvals_only=True, select='i', select_range=(0, 0))
    return float(values[0])


def fdm_1d_robin_extrapolated(gamma: float, d: float, levels: Tuple[int, ...] = FDM_LEVELS) -> Tuple[float, float]:
    """
    Extrapolación de Richardson de fdm_1d_robin sobre n, 2n, 4n.

    Returns:
        (límite extrapolado, orden observado)
    """
    values = [fdm_1d_robin(gamma, d, n) for n in levels]
    order = observed_order(*values[-3:]) if len(values) >= 3 else float('nan')
    return richardson_extrapolate(values, order=2.0), order


@lru_cache(maxsize=256)
def _verified_lambda0(gamma: float, d: float) -> float:
    k0 = secular_root(gamma, d)
    lam = k0 * k0

    reference, order = fdm_1d_robin_extrapolated(gamma, d)
    floor = 1e-3 * math.pi ** 2 / d ** 2
    error = abs(lam - reference) / max(abs(lam), floor)

    if error > VERIFY_TOL:
        raise OracleVerificationError(
            f"λ₀(γ={gamma}, d={d}): raíz secular {lam:.12g} frente a FDM {reference:.12g} "
            f"(error relativo {error:.2e}, orden FDM {order:.2f})"
        )

    logger.debug(f"λ₀(γ={gamma}, d={d}) = {lam:.12g} verificado (error {error:.1e})")
    return lam


def robin_interval_lambda0(gamma: float, d: float, verify: bool = True) -> float:
    """
    Estado fundamental del intervalo [0, d] con Robin constante γ <= 0 en ambos extremos.

    Args:
        gamma: Constante de Robin (γ = 0 es Neumann)
        d: Longitud del intervalo
        verify: Contrastar la raíz secular con diferencias finitas antes de devolverla

    Returns:
        λ₀ = k₀²

    Raises:
        InputError: si γ > 0
        OracleVerificationError: si la raíz no coincide con la referencia FDM
    """
    _positive(d=d)
    if gamma > 0:
        raise InputError(f"γ={gamma} debe ser <= 0 (repulsivo o Neumann)")

    if gamma == 0:
        return 0.0

    if verify:
        return _verified_lambda0(float(gamma), float(d))

    k0 = secular_root(gamma, d)
    return k0 * k0


def square_robin_ground_state(gamma: float, d: float) -> float:
    """Estado fundamental del cuadrado de lado d con Robin γ: 2·λ₀(γ) por separación de variables"""
    return 2.0 * robin_interval_lambda0(gamma, d)


def lshape_reference(b: float) -> float:
    """Constante de la guía en L de anchura b: 0.93·(π/b)² (dos cifras significativas)"""
    _positive(b=b)
    return LSHAPE_CONSTANT * (math.pi / b) ** 2


def repulsion_bound(d: float) -> float:
    """
    γ_c = -π/(2d): para σ <= γ_c el cuadrado de esquina ya no baja del umbral
    (2·λ₀(γ_c) = π²/2d²), así que no hay espectro discreto.
    """
    _positive(d=d)
    return -math.pi / (2.0 * d)


def _require(params: Dict, *names: str) -> Tuple:
    missing = [name for name in names if params.get(name) is None]
    if missing:
        raise InputError(f"Faltan parámetros: {', '.join(missing)}")
    return tuple(float(params[name]) for name in names)


def oracle_value(name: str, **params) -> OracleValue:
    """
    Despacha un oráculo por nombre (usado por el subcomando 'oracle').

    Args:
        name: strip-threshold, rect-ground-state, robin-lambda0,
              square-robin, fdm-1d-robin, lshape-reference o repulsion-bound
        **params: d, w, gamma, n, b según el oráculo

    Returns:
        OracleValue
    """
    if name == 'strip-threshold':
        (d,) = _require(params, 'd')
        return OracleValue(strip_threshold(d), Provenance.CLOSED_FORM, {'d': d}, name)

    if name == 'rect-ground-state':
        d, w = _require(params, 'd', 'w')
        return OracleValue(rect_ground_state(d, w), Provenance.CLOSED_FORM, {'d': d, 'w': w}, name)

    if name == 'robin-lambda0':
        gamma, d = _require(params, 'gamma', 'd')
        return OracleValue(robin_interval_lambda0(gamma, d), Provenance.SECULAR_ROOT, {'gamma': gamma, 'd': d}, name)

    if name == 'square-robin':
        gamma, d = _require(params, 'gamma', 'd')
        return OracleValue(square_robin_ground_state(gamma, d), Provenance.SECULAR_ROOT, {'gamma': gamma, 'd': d}, name)

    if name == 'fdm-1d-robin':
        gamma, d = _require(params, 'gamma', 'd')
        n = int(params.get('n') or FDM_LEVELS[0])
        return OracleValue(fdm_1d_robin(gamma, d, n), Provenance.FDM_1D, {'gamma': gamma, 'd': d, 'n': n}, name)

    if name == 'lshape-reference':
        (b,) = _require(params, 'b')
        return OracleValue(lshape_reference(b), Provenance.LITERATURE_CONSTANT, {'b': b}, name)

    if name == 'repulsion-bound':
        (d,) = _require(params, 'd')
        return OracleValue(repulsion_bound(d), Provenance.CLOSED_FORM, {'d': d}, name)

    raise InputError(f"Oráculo desconocido: {name}")


ORACLE_NAMES = (
    'strip-threshold', 'rect-ground-state', 'robin-lambda0', 'square-robin',
    'fdm-1d-robin', 'lshape-reference', 'repulsion-bound',
)
