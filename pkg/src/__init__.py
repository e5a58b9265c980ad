"""
Banda - Análisis espectral de una molécula de dos partículas en la semirrecta
"""
__version__ = "0.1.0"
