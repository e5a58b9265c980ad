"""
Ensamblaje P1 de la forma cuadrática discreta

    q[φ] = ∫_Ω |∇φ|²  -  ∫_{∂Ω_σ} σ |φ|²

Matrices: rigidez A, masa M, término de Robin B (para el perfil σ dado)
y K = A - B, todas restringidas a los grados de libertad libres
(los Dirichlet se eliminan por filas y columnas).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from src import sigma_model
from src.errors import DegenerateDomain, DegenerateTriangle, WrongTag
from src.exporter import atomic_write_text
from src.geometry import BoundaryTag, Mesh, ROBIN_TAGS, TruncationBC
from src.sigma_model import Constant, SigmaProfile
from src.utils import format_float

logger = logging.getLogger(__name__)

# Matriz simétrica dispersa: CSR de scipy construida con symmetric_csr
SparseSymMatrix = sparse.csr_matrix

_MASS_PATTERN = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])
_EDGE_PATTERN = np.array([[2.0, 1.0], [1.0, 2.0]])
_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)


class DofStatus(str, Enum):
    """Estado de cada vértice"""
    FREE = "Free"
    DIRICHLET_DIAG = "DirichletDiag"
    DIRICHLET_WALL = "DirichletWall"
    TRUNCATION = "Truncation"


@dataclass(frozen=True, eq=False)
class DofMap:
    """
    Numeración de los grados de libertad.

    Attributes:
        status: Estado de cada vértice
        free: Vértices libres en orden creciente
        index: vértice -> índice libre, o -1 si está restringido
    """
    status: Tuple[DofStatus, ...]
    free: np.ndarray
    index: np.ndarray

    @property
    def num_free(self) -> int:
        return len(self.free)

    @property
    def num_vertices(self) -> int:
        return len(self.index)

    def restrict(self, matrix: sparse.spmatrix) -> sparse.csr_matrix:
        """Submatriz libre x libre"""
        return sparse.csr_matrix(matrix.tocsr()[self.free][:, self.free])

    def expand(self, vector: np.ndarray) -> np.ndarray:
        """Extiende un vector libre a todos los vértices (cero en los restringidos)"""
        full = np.zeros(self.num_vertices, dtype=float)
        full[self.free] = vector
        return full


@dataclass(frozen=True, eq=False)
class DiscreteForm:
    """
    Forma discreta sobre los grados de libertad libres.

    A, M, B y K son SparseSymMatrix de dimensión dofmap.num_free;
    las versiones *_full cubren todos los vértices (sin eliminar Dirichlet).
    """
    A: sparse.csr_matrix
    M: sparse.csr_matrix
    B: sparse.csr_matrix
    K: sparse.csr_matrix
    A_full: sparse.csr_matrix
    M_full: sparse.csr_matrix
    B_full: sparse.csr_matrix
    mesh: Mesh
    dofmap: DofMap
    profile: SigmaProfile

    @property
    def dimension(self) -> int:
        return self.K.shape[0]


def build_dofmap(mesh: Mesh, truncation_bc: Union[TruncationBC, str] = TruncationBC.DIRICHLET) -> DofMap:
    """
    Marca como restringidos los vértices de ∂Ω_D, de las paredes Dirichlet
    y, si la truncación es Dirichlet, del corte.

    Un vértice en una arista Robin y en una Dirichlet queda restringido.

    Args:
        mesh: Malla
        truncation_bc: Condición sobre el corte

    Returns:
        DofMap con los libres numerados de forma contigua
    """
    truncation_bc = TruncationBC(truncation_bc)
    status: List[DofStatus] = [DofStatus.FREE] * mesh.num_vertices

    # Orden de menor a mayor prioridad: la última asignación gana
    constrained = []
    if truncation_bc == TruncationBC.DIRICHLET:
        constrained.append((BoundaryTag.TRUNCATION, DofStatus.TRUNCATION))
    constrained.append((BoundaryTag.DIRICHLET_WALL, DofStatus.DIRICHLET_WALL))
    constrained.append((BoundaryTag.DIRICHLET_DIAG, DofStatus.DIRICHLET_DIAG))

    for tag, reason in constrained:
        for vertex in mesh.vertices_with_tag(tag):
            status[int(vertex)] = reason

    is_free = np.array([s is DofStatus.FREE for s in status], dtype=bool)
    free = np.flatnonzero(is_free)

    if len(free) == 0:
        raise DegenerateDomain("No queda ningún grado de libertad libre")

    index = -np.ones(mesh.num_vertices, dtype=np.int64)
    index[free] = np.arange(len(free))

    free.setflags(write=False)
    index.setflags(write=False)

    logger.debug(f"DofMap: {len(free)} libres de {mesh.num_vertices} vértices")
    return DofMap(status=tuple(status), free=free, index=index)


def _signed_double_areas(points: np.ndarray) -> np.ndarray:
    e1 = points[:, 1] - points[:, 0]
    e2 = points[:, 2] - points[:, 0]
    return e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]


def _check_areas(points: np.ndarray) -> np.ndarray:
    double = _signed_double_areas(points)
    scale = np.max(np.abs(points - points[:, :1]), axis=(1, 2)) ** 2
    bad = np.abs(double) <= 1e-14 * np.maximum(scale, np.finfo(float).tiny)
    if bad.any():
        raise DegenerateTriangle(f"{int(bad.sum())} triángulo(s) con área nula")
    return double


def element_stiffness(points: np.ndarray) -> np.ndarray:
    """
    Matrices de rigidez P1 de un lote de triángulos.

    Args:
        points: Coordenadas (T, 3, 2)

    Returns:
        Matrices (T, 3, 3)
    """
    points = np.asarray(points, dtype=float)
    double = _check_areas(points)
    x, y = points[..., 0], points[..., 1]

    # Gradientes de las funciones baricéntricas multiplicados por 2·área
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)

    gram = gx[:, :, None] * gx[:, None, :] + gy[:, :, None] * gy[:, None, :]
    return gram / (2.0 * np.abs(double))[:, None, None]


def element_mass(points: np.ndarray) -> np.ndarray:
    """Matrices de masa P1 (área/12)·[[2,1,1],[1,2,1],[1,1,2]] de un lote (T, 3, 2)"""
    points = np.asarray(points, dtype=float)
    area = 0.5 * np.abs(_check_areas(points))
    return (area / 12.0)[:, None, None] * _MASS_PATTERN


def local_stiffness(triangle: np.ndarray) -> np.ndarray:
    """
    Matriz de rigidez P1 de un triángulo.

    Args:
        triangle: Vértices (3, 2)

    Returns:
        Matriz 3x3; para el triángulo rectángulo (0,0),(1,0),(0,1) vale
        (1/2)·[[2,-1,-1],[-1,1,0],[-1,0,1]] sea cual sea la escala

    Raises:
        DegenerateTriangle: si el área es nula
    """
    return element_stiffness(np.asarray(triangle, dtype=float)[None])[0]


def local_mass(triangle: np.ndarray) -> np.ndarray:
    """
    Matriz de masa P1 de un triángulo.

    Raises:
        DegenerateTriangle: si el área es nula
    """
    return element_mass(np.asarray(triangle, dtype=float)[None])[0]


def local_robin(edge: np.ndarray, tag: BoundaryTag, profile: SigmaProfile) -> np.ndarray:
    """
    Matriz 2x2 de ∫ σ φ_i φ_j sobre una arista Robin.

    Sobre x = 0 el parámetro es y; sobre y = 0 es x (σ es simétrico).
    Para σ variable la arista se parte en los puntos de corte del perfil y
    se integra con Gauss de dos puntos en cada trozo, exacto para σ lineal
    a trozos.

    Args:
        edge: Extremos (2, 2)
        tag: Etiqueta de la arista (RobinX o RobinY)
        profile: Perfil σ

    Returns:
        Matriz 2x2

    Raises:
        WrongTag: si la arista no es Robin
    """
    tag = BoundaryTag(tag)
    if tag not in ROBIN_TAGS:
        raise WrongTag(f"La arista tiene etiqueta {tag.value}, se esperaba RobinX o RobinY")

    edge = np.asarray(edge, dtype=float)
    axis = 1 if tag == BoundaryTag.ROBIN_X else 0
    s0, s1 = float(edge[0, axis]), float(edge[1, axis])
    length = abs(s1 - s0)

    if isinstance(profile, Constant):
        return float(profile.value) * (length / 6.0) * _EDGE_PATTERN

    local = np.zeros((2, 2))
    for a, b in sigma_model.edge_pieces(profile, s0, s1):
        half = 0.5 * (b - a)
        for xi in _GAUSS:
            s = 0.5 * (a + b) + half * xi
            phi = np.array([(s1 - s) / (s1 - s0), (s - s0) / (s1 - s0)])
            local += half * sigma_model.eval(profile, s) * np.outer(phi, phi)

    return local


def symmetric_csr(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, n: int) -> sparse.csr_matrix:
    """
    CSR simétrica a partir de tripletes (se suman los repetidos).

    Sólo se conserva el triángulo inferior y se refleja, así que
    A - Aᵀ es exactamente cero.

    Args:
        rows, cols, vals: Tripletes (las dos mitades pueden venir o no)
        n: Dimensión

    Returns:
        Matriz CSR simétrica sin ceros explícitos
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()

    keep = rows >= cols
    lower = sparse.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    lower.sum_duplicates()

    full = (lower + lower.T - sparse.diags(lower.diagonal())).tocsr()
    full.eliminate_zeros()
    full.sort_indices()
    return full


def _scatter(triangles: np.ndarray, local: np.ndarray, n: int) -> sparse.csr_matrix:
    rows = np.repeat(triangles[:, :, None], triangles.shape[1], axis=2)
    cols = np.repeat(triangles[:, None, :], triangles.shape[1], axis=1)
    return symmetric_csr(rows, cols, local, n)


def stiffness_matrix(mesh: Mesh) -> sparse.csr_matrix:
    """Rigidez sobre todos los vértices (sin condiciones de contorno)"""
    # En 2D la rigidez no depende de la escala: los índices de red la dan exacta
    lattice = mesh.grid.astype(float)[mesh.triangles]
    return _scatter(mesh.triangles, element_stiffness(lattice), mesh.num_vertices)


def mass_matrix(mesh: Mesh) -> sparse.csr_matrix:
    """Masa consistente sobre todos los vértices"""
    points = mesh.vertices[mesh.triangles]
    return _scatter(mesh.triangles, element_mass(points), mesh.num_vertices)


def robin_matrix(mesh: Mesh, profile: SigmaProfile) -> sparse.csr_matrix:
    """
    Término de Robin ∫_{∂Ω_σ} σ |φ|² sobre todos los vértices.

    En el origen se suman las contribuciones de las dos aristas Robin.
    """
    rows, cols, vals = [], [], []

    for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        if tag not in ROBIN_TAGS:
            continue
        local = local_robin(mesh.vertices[[a, b]], tag, profile)
        idx = np.array([a, b])
        rows.append(np.repeat(idx, 2))
        cols.append(np.tile(idx, 2))
        vals.append(local.ravel())

    if not rows:
        return sparse.csr_matrix((mesh.num_vertices, mesh.num_vertices))

    return symmetric_csr(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), mesh.num_vertices)


def assemble(mesh: Mesh, profile: SigmaProfile, dofmap: Optional[DofMap] = None) -> DiscreteForm:
    """
    Ensambla la forma discreta y elimina los grados de libertad Dirichlet.

    Args:
        mesh: Malla
        profile: Perfil σ
        dofmap: Numeración (por defecto, truncación Dirichlet)

    Returns:
        DiscreteForm con K = A - B
    """
    if dofmap is None:
        dofmap = build_dofmap(mesh)

    if dofmap.num_vertices != mesh.num_vertices:
        raise DegenerateDomain(
            f"DofMap de {dofmap.num_vertices} vértices para una malla de {mesh.num_vertices}"
        )

    A_full = stiffness_matrix(mesh)
    M_full = mass_matrix(mesh)
    B_full = robin_matrix(mesh, profile)

    A = dofmap.restrict(A_full)
    M = dofmap.restrict(M_full)
    B = dofmap.restrict(B_full)

    K = (A - B).tocsr()
    K.eliminate_zeros()
    K.sort_indices()

    logger.debug(f"Forma ensamblada: {dofmap.num_free} incógnitas, nnz(K) = {K.nnz}")

    return DiscreteForm(
        A=A, M=M, B=B, K=K,
        A_full=A_full, M_full=M_full, B_full=B_full,
        mesh=mesh, dofmap=dofmap, profile=profile
    )


def gershgorin_lower_bound(matrix: sparse.spmatrix) -> float:
    """min_i (a_ii - Σ_{j≠i} |a_ij|)"""
    matrix = sparse.csr_matrix(matrix)
    diag = matrix.diagonal()
    radius = np.asarray(abs(matrix).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - radius))


def mass_lower_bound(form: DiscreteForm) -> float:
    """
    Cota inferior positiva del espectro de M sobre los libres.

    La masa elemental tiene autovalores (área/12)·{4, 1, 1}, así que
    M >= diag(Σ área/12) = diag(fila agrupada)/4.
    """
    lumped = np.asarray(form.M_full.sum(axis=1)).ravel()
    return 0.25 * float(np.min(lumped[form.dofmap.free]))


def form_lower_bound(form: DiscreteForm) -> float:
    """
    Cota inferior de todo cociente de Rayleigh xᵀKx / xᵀMx.

    min(0, Gershgorin(K)) / cota inferior de M
    """
    return min(0.0, gershgorin_lower_bound(form.K)) / mass_lower_bound(form)


def rayleigh_quotient(K: sparse.spmatrix, M: sparse.spmatrix, x: np.ndarray) -> float:
    """xᵀKx / xᵀMx"""
    return float(x @ (K @ x)) / float(x @ (M @ x))


def boundary_trace_norm(form: DiscreteForm, u: np.ndarray) -> float:
    """
    ∫_{∂Ω_σ} |u|² para un vector libre u.

    Args:
        form: Forma discreta (sólo se usan su malla y su numeración)
        u: Vector sobre los libres

    Returns:
        uᵀ B(σ ≡ 1) u
    """
    unit = form.dofmap.restrict(robin_matrix(form.mesh, Constant(1.0, form.profile.d)))
    return float(u @ (unit @ u))


def is_exactly_symmetric(matrix: sparse.spmatrix) -> bool:
    difference = abs(sparse.csr_matrix(matrix) - sparse.csr_matrix(matrix).T)
    return difference.nnz == 0 or float(difference.max()) == 0.0


def dump_matrix(matrix: sparse.spmatrix, path: Union[str, Path]) -> Path:
    """
    Vuelca una matriz en formato de coordenadas: cabecera 'n nnz' y una
    línea 'fila columna valor' por entrada.
    """
    coo = sparse.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))

    lines = [f"{coo.shape[0]} {coo.nnz}"]
    lines.extend(
        f"{coo.row[k]} {coo.col[k]} {format_float(coo.data[k])}"
        for k in order
    )

    return atomic_write_text(path, "\n".join(lines) + "\n")
