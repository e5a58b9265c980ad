"""
Geometría: malla triangular estructurada de la banda truncada

La banda es Ω = {(x, y) ∈ ℝ²₊ : |x - y| <= d}. Se trunca con el corte
x + y <= 2L y se discretiza sobre la red h·ℤ², partiendo cada cuadrado por
la diagonal paralela a y = x, de modo que las rectas |x - y| = d quedan
formadas exactamente por aristas de la malla.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Tuple, Union

import numpy as np

from src.errors import DegenerateDomain, InputError, NonIntegerPitch
from src.exporter import atomic_write_text
from src.utils import format_float, integer_ratio

logger = logging.getLogger(__name__)


class BoundaryTag(str, Enum):
    """Papel de cada arista de frontera"""
    ROBIN_X = "RobinX"              # x = 0, 0 <= y <= d
    ROBIN_Y = "RobinY"              # y = 0, 0 <= x <= d
    DIRICHLET_DIAG = "DirichletDiag"  # |x - y| = d
    TRUNCATION = "Truncation"       # corte artificial
    DIRICHLET_WALL = "DirichletWall"  # paredes Dirichlet de dominios auxiliares


ROBIN_TAGS = (BoundaryTag.ROBIN_X, BoundaryTag.ROBIN_Y)


class TruncationBC(str, Enum):
    """Condición artificial sobre el corte de truncación"""
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class DomainSpec:
    """
    Parámetros de la banda truncada.

    Attributes:
        d: Tamaño de la molécula (semiancho de la banda en |x - y|)
        L: Parámetro de truncación (se conservan los puntos con x + y <= 2L)
        h: Paso de la red; debe dividir exactamente a d y a L
        truncation_bc: Condición sobre el corte
    """
    d: float
    L: float
    h: float
    truncation_bc: TruncationBC = TruncationBC.DIRICHLET

    def __post_init__(self):
        if self.d <= 0 or self.h <= 0:
            raise InputError(f"d y h deben ser positivos (d={self.d}, h={self.h})")

        if self.L <= self.d:
            raise DegenerateDomain(f"L={self.L} debe ser mayor que d={self.d}")

        if self.L < 2 * self.d:
            raise DegenerateDomain(f"L={self.L} debe cumplir L >= 2d = {2 * self.d}")

        if integer_ratio(self.d, self.h) is None:
            raise NonIntegerPitch(f"h={self.h} no divide exactamente a d={self.d}")

        if integer_ratio(self.L, self.h) is None:
            raise NonIntegerPitch(f"h={self.h} no divide exactamente a L={self.L}")

        object.__setattr__(self, 'truncation_bc', TruncationBC(self.truncation_bc))

    @property
    def m(self) -> int:
        """Semiancho de la banda en pasos de red (d/h)"""
        return integer_ratio(self.d, self.h)

    @property
    def n(self) -> int:
        """Parámetro de truncación en pasos de red (L/h)"""
        return integer_ratio(self.L, self.h)

    def to_dict(self) -> Dict:
        return {
            'd': self.d,
            'L': self.L,
            'h': self.h,
            'truncation_bc': self.truncation_bc.value,
        }


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Malla triangular estructurada (inmutable).

    Attributes:
        vertices: Coordenadas (N, 2)
        grid: Índices de red (N, 2) con x = i·h, y = j·h
        triangles: Índices (T, 3), orientación antihoraria, ángulo recto primero
        boundary_edges: Aristas de frontera (E, 2), orientadas con el interior a la izquierda
        edge_tags: Etiqueta de cada arista de frontera
        h: Paso de red
        width: Escala transversal (d para la banda, b para la L, √2·d para el rectángulo)
        kind: 'band', 'rectangle' o 'lshape'
    """
    vertices: np.ndarray
    grid: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: Tuple[BoundaryTag, ...]
    h: float
    width: float
    kind: str = 'band'
    params: Dict = field(default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def edges_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        """Aristas de frontera con una etiqueta dada"""
        mask = np.array([t == tag for t in self.edge_tags], dtype=bool)
        if not mask.any():
            return np.zeros((0, 2), dtype=np.int64)
        return self.boundary_edges[mask]

    def vertices_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        """Vértices (ordenados, sin repetir) de las aristas con una etiqueta"""
        return np.unique(self.edges_with_tag(tag).ravel())


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


def _lattice_mesh(
    inside: Callable[[np.ndarray, np.ndarray], np.ndarray],
    imax: int,
    jmax: int,
    h: float,
    classify: Callable[[int, int, int, int], BoundaryTag],
    width: float,
    kind: str,
    params: Dict
) -> Mesh:
    """
    Construye la malla sobre la red {0..imax} x {0..jmax} restringida a un predicado.

    Se conservan los vértices con inside(i, j) y los triángulos cuyos tres
    vértices están dentro. Los vértices se numeran por (i + j, i).
    """
    I, J = np.meshgrid(np.arange(imax + 1), np.arange(jmax + 1), indexing='ij')
    I = I.ravel()
    J = J.ravel()
    mask = inside(I, J)
    I, J = I[mask], J[mask]

    order = np.lexsort((I, I + J))
    I, J = I[order], J[order]

    index = -np.ones((imax + 2, jmax + 2), dtype=np.int64)
    index[I, J] = np.arange(len(I))

    # Triángulos de cada cuadrado (i, j), con el ángulo recto en primer lugar:
    #   inferior: (i+1, j), (i+1, j+1), (i, j)
    #   superior: (i, j+1), (i, j), (i+1, j+1)
    si, sj = np.meshgrid(np.arange(imax), np.arange(jmax), indexing='ij')
    si = si.ravel()
    sj = sj.ravel()
    lower = np.stack([index[si + 1, sj], index[si + 1, sj + 1], index[si, sj]], axis=1)
    upper = np.stack([index[si, sj + 1], index[si, sj], index[si + 1, sj + 1]], axis=1)

    tris = np.concatenate([lower, upper])
    key_s = np.concatenate([si + sj, si + sj])
    key_i = np.concatenate([si, si])
    key_t = np.concatenate([np.zeros_like(si), np.ones_like(si)])
    keep = (tris >= 0).all(axis=1)
    tris, key_s, key_i, key_t = tris[keep], key_s[keep], key_i[keep], key_t[keep]
    tris = tris[np.lexsort((key_t, key_i, key_s))]

    edges = _boundary_half_edges(tris, len(I))
    tags = tuple(
        classify(int(I[a]), int(J[a]), int(I[b]), int(J[b]))
        for a, b in edges
    )

    vertices = np.stack([I * h, J * h], axis=1).astype(float)

    mesh = Mesh(
        vertices=_freeze(vertices),
        grid=_freeze(np.stack([I, J], axis=1)),
        triangles=_freeze(tris),
        boundary_edges=_freeze(edges),
        edge_tags=tags,
        h=h,
        width=width,
        kind=kind,
        params=params
    )

    logger.debug(
        f"Malla '{kind}': {mesh.num_vertices} vértices, {mesh.num_triangles} triángulos, "
        f"{len(edges)} aristas de frontera"
    )
    return mesh


def _boundary_half_edges(triangles: np.ndarray, num_vertices: int) -> np.ndarray:
    """
    Aristas de frontera: semiaristas cuya inversa no aparece en ningún triángulo.

    Conservan la orientación del triángulo, así que el interior queda a la izquierda.
    """
    if len(triangles) == 0:
        return np.zeros((0, 2), dtype=np.int64)

    a = triangles
    half = np.concatenate([a[:, [0, 1]], a[:, [1, 2]], a[:, [2, 0]]])
    codes = half[:, 0] * num_vertices + half[:, 1]
    reverse = half[:, 1] * num_vertices + half[:, 0]
    boundary = half[~np.isin(codes, reverse)]

    order = np.argsort(boundary[:, 0] * num_vertices + boundary[:, 1], kind='stable')
    return boundary[order]


def build_mesh(spec: DomainSpec) -> Mesh:
    """
    Malla de la banda truncada Ω_L = Ω ∩ {x + y <= 2L}.

    Args:
        spec: Parámetros del dominio (ya validados al construir el DomainSpec)

    Returns:
        Malla con las aristas de frontera clasificadas

    Examples:
        d=1, h=1, L=2 da 7 vértices y 6 triángulos.
    """
    m, n = spec.m, spec.n

    def inside(i, j):
        return (np.abs(i - j) <= m) & (i + j <= 2 * n)

    def classify(i1, j1, i2, j2):
        if i1 == 0 and i2 == 0:
            return BoundaryTag.ROBIN_X
        if j1 == 0 and j2 == 0:
            return BoundaryTag.ROBIN_Y
        if abs(i1 - j1) == m and abs(i2 - j2) == m:
            return BoundaryTag.DIRICHLET_DIAG
        return BoundaryTag.TRUNCATION

    mesh = _lattice_mesh(
        inside, 2 * n, 2 * n, spec.h, classify,
        width=spec.d, kind='band', params=spec.to_dict()
    )

    logger.info(
        f"✓ Banda d={spec.d}, L={spec.L}, h={spec.h}: "
        f"{mesh.num_vertices} vértices, {mesh.num_triangles} triángulos"
    )
    return mesh


def build_rectangle_mesh(d: float, w: float, m: int) -> Mesh:
    """
    Rectángulo Dirichlet de la construcción de Weyl, en coordenadas alineadas con la banda.

    Lados √2·d (transversal) y √2·w (longitudinal), paso h = √2·d/m.
    Su primer autovalor es π²/2d² + π²/2w².

    Args:
        d: Tamaño de la molécula
        w: Longitud l - k del rectángulo
        m: Divisiones del lado transversal

    Returns:
        Malla con todas las aristas de frontera Dirichlet
    """
    if d <= 0 or w <= 0 or m < 1:
        raise InputError(f"Rectángulo no válido: d={d}, w={w}, m={m}")

    ny = integer_ratio(w * m, d)
    if ny is None:
        raise NonIntegerPitch(f"w·m/d = {w * m / d} no es entero")

    h = math.sqrt(2.0) * d / m

    def inside(i, j):
        return (i <= m) & (j <= ny)

    def classify(i1, j1, i2, j2):
        return BoundaryTag.DIRICHLET_WALL

    return _lattice_mesh(
        inside, m, ny, h, classify,
        width=math.sqrt(2.0) * d, kind='rectangle',
        params={'d': d, 'w': w, 'm': m}
    )


def build_lshape_mesh(b: float, h: float, length: float) -> Mesh:
    """
    Guía de ondas en L truncada: {0<=y<=b, 0<=x<=length} ∪ {0<=x<=b, 0<=y<=length}.

    Paredes Dirichlet; los extremos de los dos brazos son corte de truncación.

    Args:
        b: Anchura de los brazos (h debe dividirla)
        h: Paso de red
        length: Longitud de cada brazo medida desde el origen (múltiplo de h, > b)
    """
    mb = integer_ratio(b, h)
    nl = integer_ratio(length, h)

    if mb is None or nl is None:
        raise NonIntegerPitch(f"h={h} debe dividir b={b} y length={length}")

    if nl <= mb:
        raise DegenerateDomain(f"length={length} debe ser mayor que b={b}")

    def inside(i, j):
        return ((j <= mb) & (i <= nl)) | ((i <= mb) & (j <= nl))

    def classify(i1, j1, i2, j2):
        if (i1 == nl and i2 == nl) or (j1 == nl and j2 == nl):
            return BoundaryTag.TRUNCATION
        return BoundaryTag.DIRICHLET_WALL

    return _lattice_mesh(
        inside, nl, nl, h, classify,
        width=b, kind='lshape',
        params={'b': b, 'h': h, 'length': length}
    )


def boundary_length(mesh: Mesh, tag: BoundaryTag) -> float:
    """Suma de longitudes de las aristas con una etiqueta"""
    edges = mesh.edges_with_tag(tag)
    if len(edges) == 0:
        return 0.0
    diff = mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]]
    return float(np.sum(np.hypot(diff[:, 0], diff[:, 1])))


def triangle_area_total(mesh: Mesh) -> float:
    """Suma de las áreas (con signo) de todos los triángulos"""
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return float(0.5 * np.sum(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]))


def polygon_area(mesh: Mesh) -> float:
    """
    Área del polígono discretizado por la fórmula del cordón sobre la frontera.

    Las aristas de frontera están orientadas, así que no hace falta
    encadenarlas en un lazo.
    """
    a = mesh.vertices[mesh.boundary_edges[:, 0]]
    b = mesh.vertices[mesh.boundary_edges[:, 1]]
    return float(0.5 * np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))


def swap_permutation(mesh: Mesh) -> np.ndarray:
    """
    Permutación de vértices inducida por (x, y) -> (y, x).

    Returns:
        perm con vertices[perm[k]] = swap(vertices[k])
    """
    lookup = {(int(i), int(j)): k for k, (i, j) in enumerate(mesh.grid)}
    try:
        return np.array([lookup[(int(j), int(i))] for i, j in mesh.grid], dtype=np.int64)
    except KeyError as e:
        raise InputError(f"La malla no es simétrica bajo x <-> y: falta el vértice {e}") from e


def refine(spec: DomainSpec) -> DomainSpec:
    """Mismo dominio con el paso de red reducido a la mitad"""
    return replace(spec, h=spec.h / 2.0)


def lattice_vertex_count(m: int, n: int) -> int:
    """Recuento por fuerza bruta de {(i, j) : i, j >= 0, |i - j| <= m, i + j <= 2n}"""
    return sum(
        1
        for i in range(2 * n + 1)
        for j in range(2 * n + 1)
        if abs(i - j) <= m and i + j <= 2 * n
    )


def write_mesh_listing(mesh: Mesh, path: Union[str, Path]) -> Path:
    """
    Listado de texto de la malla, un registro por línea:

        V índice x y
        T índice a b c
        E a b ETIQUETA
    """
    lines = [f"# {mesh.kind} {mesh.num_vertices} {mesh.num_triangles} {len(mesh.boundary_edges)}"]
    lines.extend(
        f"V {k} {format_float(x)} {format_float(y)}"
        for k, (x, y) in enumerate(mesh.vertices)
    )
    lines.extend(f"T {k} {a} {b} {c}" for k, (a, b, c) in enumerate(mesh.triangles))
    lines.extend(f"E {a} {b} {tag.value}" for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags))

    path = atomic_write_text(path, "\n".join(lines) + "\n")
    logger.info(f"💾 Malla exportada: {path}")
    return path
