"""
Utilidades numéricas compartidas: cocientes enteros, extrapolación de
Richardson y formato de números
"""
import math
import logging
from typing import Optional, Sequence

logger = logging.getLogger(__name__)


def integer_ratio(numerator: float, denominator: float, rel_tol: float = 1e-9) -> Optional[int]:
    """
    Devuelve numerator/denominator si es un entero positivo, o None.

    Args:
        numerator: Longitud a dividir (ej: d)
        denominator: Paso de malla (ej: h)
        rel_tol: Tolerancia relativa para aceptar el cociente como entero

    Returns:
        El entero k >= 1 tal que numerator = k * denominator, o None

    Examples:
        >>> integer_ratio(1.0, 0.125)
        8
        >>> integer_ratio(1.0, 0.3) is None
        True
    """
    if denominator <= 0:
        return None

    ratio = numerator / denominator
    k = round(ratio)

    if k < 1 or abs(ratio - k) > rel_tol * max(1.0, abs(ratio)):
        return None

    return int(k)


def observed_order(coarse: float, mid: float, fine: float, ratio: float = 2.0) -> float:
    """
    Orden de convergencia observado a partir de tres niveles de malla.

    Args:
        coarse: Valor con paso h
        mid: Valor con paso h/ratio
        fine: Valor con paso h/ratio²
        ratio: Factor de refinamiento entre niveles

    Returns:
        log_ratio(|coarse - mid| / |mid - fine|), o NaN si las diferencias
        no son monótonas o son nulas
    """
    d1 = coarse - mid
    d2 = mid - fine

    if d1 == 0.0 or d2 == 0.0 or d1 * d2 < 0.0:
        return float('nan')

    return math.log(d1 / d2) / math.log(ratio)


def richardson_extrapolate(values: Sequence[float], order: float = 2.0, ratio: float = 2.0) -> float:
    """
    Extrapolación de Richardson con los dos niveles más finos.

    Args:
        values: Valores ordenados de la malla más gruesa a la más fina
        order: Orden de convergencia supuesto
        ratio: Factor de refinamiento entre niveles consecutivos

    Returns:
        Límite extrapolado
    """
    if len(values) < 2:
        raise ValueError("Se necesitan al menos dos niveles para extrapolar")

    coarse, fine = values[-2], values[-1]
    return fine + (fine - coarse) / (ratio ** order - 1.0)


def format_float(value: float) -> str:
    """Formatea un float con 17 cifras significativas (ida y vuelta exacta)"""
    return f"{value:.17g}"

