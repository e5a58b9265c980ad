"""
Jerarquía de errores del paquete.

Los errores de entrada (InputError) terminan el CLI con código 2;
los numéricos (NumericalError) con código 1.
"""


class BandaError(Exception):
    """Raíz de todos los errores del paquete"""


class InputError(BandaError, ValueError):
    """Parámetros o datos de entrada no válidos"""


class NumericalError(BandaError, RuntimeError):
    """Fallo numérico durante un cálculo"""


# Entrada
class NonIntegerPitch(InputError):
    pass


class DegenerateDomain(InputError):
    pass


class OutOfDomain(InputError):
    pass


class ParseError(InputError):
    pass


class NonMonotoneSamples(InputError):
    pass


class RangeMismatch(InputError):
    pass


class WrongTag(InputError):
    pass


class DegenerateTriangle(InputError):
    pass


class DimensionTooLarge(InputError):
    pass


class BracketInvalid(InputError):
    pass


# Numéricos
class NoConvergence(NumericalError):
    pass


class FactorizationFailure(NumericalError):
    pass


class RootNotBracketed(NumericalError):
    pass


class OracleVerificationError(NumericalError):
    pass
