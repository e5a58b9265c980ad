"""
Autopares más bajos del problema generalizado K u = λ M u

Camino principal: Lanczos con desplazamiento e inversión (ARPACK vía
scipy.sparse.linalg.eigsh) sobre una factorización dispersa de K - τM,
con τ por debajo del espectro. Si la factorización falla tras rebajar el
desplazamiento, se recurre a LOBPCG con precondicionador diagonal.
Los problemas pequeños se resuelven en denso.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np
from scipy import linalg as dense_linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, lobpcg, splu

from src.errors import (
    DimensionTooLarge, FactorizationFailure, InputError, NoConvergence
)
from src.fem_assembly import DiscreteForm, form_lower_bound

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_SEED = 12345
DEFAULT_MAX_ITER = 5000
DENSE_LIMIT = 2000
DENSE_CUTOFF = 64
SHIFT_RETRIES = 3
SHIFT_MARGIN = 0.1


@dataclass(frozen=True, eq=False)
class MatrixPair:
    """Par (K, M) suelto, sin malla detrás"""
    K: sparse.spmatrix
    M: sparse.spmatrix

    def __post_init__(self):
        object.__setattr__(self, 'K', sparse.csr_matrix(self.K, dtype=float))
        object.__setattr__(self, 'M', sparse.csr_matrix(self.M, dtype=float))
        if self.K.shape != self.M.shape or self.K.shape[0] != self.K.shape[1]:
            raise InputError(f"Dimensiones incompatibles: K {self.K.shape}, M {self.M.shape}")

    @property
    def dimension(self) -> int:
        return self.K.shape[0]


Pencil = Union[DiscreteForm, MatrixPair]


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """
    Autopares ordenados de menor a mayor.

    Attributes:
        eigenvalues: (k,) en 1/longitud²
        eigenvectors: (n, k), M-ortonormales, componente de mayor módulo positiva
        residuals: ‖K u - λ M u‖ / ‖M u‖ de cada par
        iterations: Aplicaciones del operador (solves con la factorización, o pasos LOBPCG)
        solver: 'shift-invert', 'lobpcg' o 'dense'
        shift: Desplazamiento usado (NaN en denso)
        seed: Semilla del vector inicial
        form: Forma discreta de la que sale el resultado (si la hay)
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    solver: str
    shift: float
    seed: int
    form: Optional[DiscreteForm] = None
    metadata: Dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def to_dict(self) -> Dict:
        return {
            'eigenvalues': [float(v) for v in self.eigenvalues],
            'residuals': [float(r) for r in self.residuals],
            'iterations': int(self.iterations),
            'solver': self.solver,
            'shift': float(self.shift),
            'seed': int(self.seed),
            'dimension': int(self.eigenvectors.shape[0]),
            **self.metadata,
        }


class ShiftInvertOperator(LinearOperator):
    """(K - τM)⁻¹ factorizada con SuperLU; cuenta las aplicaciones"""

    def __init__(self, K: sparse.spmatrix, M: sparse.spmatrix, shift: float):
        shifted = (K - shift * M).tocsc()
        try:
            self.lu = splu(shifted)
        except RuntimeError as e:
            raise FactorizationFailure(f"K - τM no factorizable con τ={shift:g}: {e}") from e

        self.shift = shift
        self.count = 0
        super().__init__(dtype=np.float64, shape=shifted.shape)

    def _matvec(self, x):
        self.count += 1
        return self.lu.solve(np.asarray(x, dtype=np.float64).ravel())


def _scale(pencil: Pencil) -> float:
    return float(np.mean(np.abs(pencil.K.diagonal())) / np.mean(pencil.M.diagonal()))


def choose_shift(pencil: Pencil) -> float:
    """
    Desplazamiento por debajo del espectro: cota de Gershgorin menos un margen.

    Args:
        pencil: Forma discreta o par de matrices

    Returns:
        τ con K - τM definida positiva
    """
    if isinstance(pencil, DiscreteForm):
        bound = form_lower_bound(pencil)
    else:
        bound = _pair_lower_bound(pencil.K, pencil.M)

    return bound - (SHIFT_MARGIN * abs(bound) + 1e-3 * _scale(pencil))


def _pair_lower_bound(K: sparse.spmatrix, M: sparse.spmatrix) -> float:
    """Gershgorin de K entre la cota de Gershgorin de M (si es positiva)"""
    def gershgorin(matrix):
        matrix = sparse.csr_matrix(matrix)
        diag = matrix.diagonal()
        return np.min(diag - (np.asarray(abs(matrix).sum(axis=1)).ravel() - np.abs(diag)))

    k_bound = float(gershgorin(K))
    m_bound = float(gershgorin(M))
    if m_bound <= 0:
        m_bound = float(np.min(M.diagonal())) * 1e-3
    return min(0.0, k_bound) / m_bound


def eigen_residual(pencil: Pencil, lam: float, u: np.ndarray) -> float:
    """‖K u - λ M u‖₂ / ‖M u‖₂ (invariante frente a la escala de u)"""
    Mu = pencil.M @ u
    return float(np.linalg.norm(pencil.K @ u - lam * Mu) / np.linalg.norm(Mu))


def _normalize(pencil: Pencil, vectors: np.ndarray) -> np.ndarray:
    """M-normaliza cada columna y fija el signo (componente de mayor módulo positiva)"""
    vectors = np.array(vectors, dtype=float, copy=True)
    for j in range(vectors.shape[1]):
        u = vectors[:, j]
        u /= np.sqrt(float(u @ (pencil.M @ u)))
        if u[np.argmax(np.abs(u))] < 0:
            u *= -1.0
        vectors[:, j] = u
    return vectors


def _orthonormalize(pencil: Pencil, vectors: np.ndarray) -> np.ndarray:
    gram = vectors.T @ (pencil.M @ vectors)
    if np.max(np.abs(gram - np.eye(gram.shape[0]))) <= 1e-10:
        return vectors

    logger.debug("Re-ortonormalizando autovectores respecto de M")
    chol = dense_linalg.cholesky(0.5 * (gram + gram.T), lower=True)
    return dense_linalg.solve_triangular(chol, vectors.T, lower=True).T


def _finish(pencil, values, vectors, iterations, solver, shift, seed, tol) -> SpectralResult:
    order = np.argsort(values, kind='stable')
    values = np.asarray(values, dtype=float)[order]
    vectors = _normalize(pencil, _orthonormalize(pencil, np.asarray(vectors)[:, order]))

    residuals = np.array([
        eigen_residual(pencil, values[j], vectors[:, j]) for j in range(len(values))
    ])

    limit = tol * np.maximum(1.0, np.abs(values))
    if np.any(residuals > limit):
        worst = int(np.argmax(residuals / limit))
        raise NoConvergence(
            f"Residuo {residuals[worst]:.3e} > {limit[worst]:.3e} en el autovalor {worst} ({solver})"
        )

    return SpectralResult(
        eigenvalues=values,
        eigenvectors=vectors,
        residuals=residuals,
        iterations=int(iterations),
        solver=solver,
        shift=float(shift),
        seed=int(seed),
        form=pencil if isinstance(pencil, DiscreteForm) else None,
    )


def dense_oracle(pencil: Pencil) -> SpectralResult:
    """
    Espectro completo por congruencia de Cholesky: M = LLᵀ, C = L⁻¹KL⁻ᵀ.

    Args:
        pencil: Forma o par de dimensión <= 2000

    Returns:
        SpectralResult con todos los autopares

    Raises:
        DimensionTooLarge: si la dimensión pasa de 2000
        FactorizationFailure: si M no es definida positiva
    """
    n = pencil.dimension
    if n > DENSE_LIMIT:
        raise DimensionTooLarge(f"Dimensión {n} > {DENSE_LIMIT} para el oráculo denso")

    K = pencil.K.toarray()
    M = pencil.M.toarray()

    try:
        L = dense_linalg.cholesky(M, lower=True)
    except dense_linalg.LinAlgError as e:
        raise FactorizationFailure(f"M no es definida positiva: {e}") from e

    left = dense_linalg.solve_triangular(L, K, lower=True)
    C = dense_linalg.solve_triangular(L, left.T, lower=True)
    C = 0.5 * (C + C.T)

    values, W = dense_linalg.eigh(C)
    vectors = dense_linalg.solve_triangular(L.T, W, lower=False)

    return _finish(pencil, values, vectors, 0, 'dense', float('nan'), 0, np.inf)


def _factorize(pencil: Pencil, shift: float) -> ShiftInvertOperator:
    """Factoriza K - τM rebajando τ si hace falta"""
    margin = SHIFT_MARGIN * abs(shift) + 1e-3 * _scale(pencil)

    for attempt in range(SHIFT_RETRIES + 1):
        try:
            return ShiftInvertOperator(pencil.K, pencil.M, shift)
        except FactorizationFailure as e:
            if attempt == SHIFT_RETRIES:
                raise
            logger.warning(f"⚠️  {e}; reintentando con un desplazamiento menor")
            shift -= margin * 2 ** attempt

    raise FactorizationFailure("Sin desplazamiento factorizable")


def _shift_invert(pencil: Pencil, k: int, operator: ShiftInvertOperator, v0: np.ndarray, max_iter: int):
    try:
        values, vectors = eigsh(
            pencil.K, k=k, M=pencil.M, sigma=operator.shift, which='LM',
            OPinv=operator, v0=v0, tol=0, maxiter=max_iter
        )
    except ArpackNoConvergence as e:
        raise NoConvergence(f"ARPACK no converge en {max_iter} reinicios: {e}") from e
    return values, vectors


def _lobpcg(pencil: Pencil, k: int, shift: float, rng: np.random.Generator, tol: float, max_iter: int):
    """LOBPCG con precondicionador de Jacobi sobre K - τM"""
    n = pencil.dimension
    block = min(n - 1, k + max(2, k // 2))

    diagonal = pencil.K.diagonal() - shift * pencil.M.diagonal()
    inverse = 1.0 / np.where(diagonal > 0, diagonal, 1.0)
    preconditioner = LinearOperator((n, n), matvec=lambda x: inverse * np.ravel(x), dtype=np.float64)

    X = rng.standard_normal((n, block))
    values, vectors, history = lobpcg(
        pencil.K, X, B=pencil.M, M=preconditioner, largest=False,
        tol=tol * 1e-2, maxiter=max_iter, retResidualNormsHistory=True
    )

    order = np.argsort(values)[:k]
    return values[order], vectors[:, order], len(history)


def smallest_eigenpairs(
    pencil: Pencil,
    k: int,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    allow_fallback: bool = True
) -> SpectralResult:
    """
    Los k autovalores algebraicamente menores de K u = λ M u.

    Args:
        pencil: Forma discreta (o par de matrices)
        k: Número de autopares, 1 <= k <= dimensión (k < dimensión fuera del camino denso)
        tol: Tolerancia sobre el residuo relativo
        seed: Semilla del vector inicial (resultado reproducible)
        max_iter: Máximo de reinicios de ARPACK / iteraciones de LOBPCG
        allow_fallback: Permite recurrir a LOBPCG si la factorización falla

    Returns:
        SpectralResult

    Raises:
        NoConvergence: si algún residuo queda por encima de tol
        FactorizationFailure: si no hay desplazamiento factorizable y no se permite LOBPCG
    """
    n = pencil.dimension
    if k < 1 or k > n:
        raise InputError(f"k={k} debe cumplir 1 <= k <= {n}")

    if n <= max(2 * k + 1, DENSE_CUTOFF):
        full = dense_oracle(pencil)
        result = _finish(
            pencil, full.eigenvalues[:k], full.eigenvectors[:, :k], 0, 'dense', float('nan'), seed, tol
        )
        logger.debug(f"Solve denso: n={n}, λ₀={result.eigenvalues[0]:.10g}")
        return result

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    shift = choose_shift(pencil)

    try:
        operator = _factorize(pencil, shift)
    except FactorizationFailure as e:
        if not allow_fallback:
            raise
        logger.warning(f"⚠️  {e}; usando LOBPCG")
        values, vectors, iterations = _lobpcg(pencil, k, shift, rng, tol, max_iter)
        return _finish(pencil, values, vectors, iterations, 'lobpcg', shift, seed, tol)

    # Segundo desplazamiento: justo por debajo de λ₀, todavía fuera del espectro
    lowest, _ = _shift_invert(pencil, 1, operator, v0, max_iter)
    iterations = operator.count
    lowest = float(lowest[0])
    refined = lowest - max(SHIFT_MARGIN * abs(lowest), 1e-6 * _scale(pencil))

    if refined > operator.shift:
        try:
            closer = ShiftInvertOperator(pencil.K, pencil.M, refined)
            operator = closer
        except FactorizationFailure:
            logger.debug(f"Desplazamiento refinado {refined:g} no factorizable; se mantiene {operator.shift:g}")

    operator.count = 0
    values, vectors = _shift_invert(pencil, k, operator, v0, max_iter)
    iterations += operator.count

    result = _finish(pencil, values, vectors, iterations, 'shift-invert', operator.shift, seed, tol)
    logger.debug(
        f"Shift-invert: n={n}, k={k}, τ={operator.shift:.6g}, "
        f"{iterations} solves, λ₀={result.eigenvalues[0]:.10g}"
    )
    return result
