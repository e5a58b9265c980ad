"""
Experimentos espectrales sobre la banda

Orquesta geometría → ensamblaje → autosolver y construye encima:
detección certificada de estados ligados, sondeo del espectro esencial,
barridos en σ, búsqueda del umbral repulsivo γ*, estudios de convergencia
y la comparación con el rectángulo y la guía en L.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src import __version__
from src.cache import SolveCache
from src.eigensolver import (
    DEFAULT_MAX_ITER, DEFAULT_SEED, DEFAULT_TOL, SpectralResult, smallest_eigenpairs
)
from src.errors import BracketInvalid, InputError
from src.fem_assembly import (
    assemble, boundary_trace_norm, build_dofmap, form_lower_bound
)
from src.geometry import (
    DomainSpec, Mesh, TruncationBC, build_lshape_mesh, build_mesh,
    build_rectangle_mesh, swap_permutation
)
from src.oracles import (
    lshape_reference, rect_ground_state, repulsion_bound, strip_threshold
)
from src.sigma_model import Constant, SigmaProfile, describe, is_nonnegative, scaled
from src.utils import observed_order, richardson_extrapolate

logger = logging.getLogger(__name__)

MARGIN_FACTOR = 10.0
DRIFT_LIMIT = 1e-4
LOCALIZATION_LIMIT = 0.5
LOCALIZATION_RADIUS = 4.0
# Las esquinas de 135° entre ∂Ω_σ y ∂Ω_D limitan el orden asintótico a 4/3
ORDER_WINDOW = (1.2, 2.3)
SMOOTH_ORDER_WINDOW = (1.7, 2.3)
LSHAPE_LENGTH_FACTOR = 8.0
MONOTONE_SLACK = 1e-10


class Verdict(str, Enum):
    """Existencia de espectro discreto bajo el umbral"""
    YES = "Yes"
    NO = "No"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class BoundStateVerdict:
    """
    Veredicto certificado sobre la existencia de un estado ligado.

    Attributes:
        exists: Yes, No o Inconclusive
        E0_extrapolated: Límite de Richardson (orden 2) en h
        gap_to_threshold: π²/2d² - E0_extrapolated
        localization: Fracción de masa con x + y <= 4d
        truncation_drift: |E0(L) - E0(2L)| / |E0(L)|
        margin: Margen de certificación
        observed_order: Orden observado con los tres niveles de h
        levels: Registros (h, L, E0) de cada solve
    """
    exists: Verdict
    E0_extrapolated: float
    gap_to_threshold: float
    localization: float
    truncation_drift: float
    margin: float
    threshold: float
    observed_order: float
    levels: List[Dict] = field(default_factory=list)
    reasons: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'exists': self.exists.value,
            'E0_extrapolated': self.E0_extrapolated,
            'gap_to_threshold': self.gap_to_threshold,
            'threshold': self.threshold,
            'margin': self.margin,
            'localization': self.localization,
            'truncation_drift': self.truncation_drift,
            'observed_order': self.observed_order,
            'levels': self.levels,
            'reasons': self.reasons,
        }


@dataclass
class ConvergenceReport:
    """
    Serie (h, L, E0) con su extrapolación.

    El orden observado sólo se da con tres niveles de h o más.
    """
    records: List[Dict]
    extrapolated: float
    observed_order: Optional[float]
    oracle: Optional[float] = None
    oracle_name: str = ""
    extrapolation_order: float = 2.0

    @property
    def relative_error(self) -> Optional[float]:
        if self.oracle is None:
            return None
        return abs(self.extrapolated - self.oracle) / abs(self.oracle)

    def to_dict(self) -> Dict:
        return {
            'records': self.records,
            'extrapolated': self.extrapolated,
            'observed_order': self.observed_order,
            'extrapolation_order': self.extrapolation_order,
            'oracle': self.oracle,
            'oracle_name': self.oracle_name,
            'relative_error': self.relative_error,
        }


def _solve_params(spec: DomainSpec, profile: SigmaProfile, k: int, tol: float, seed: int) -> Dict:
    return {
        'domain': spec.to_dict(),
        'sigma': describe(profile),
        'k': k,
        'tol': tol,
        'seed': seed,
        'version': __version__,
    }


def solve_on_mesh(
    mesh: Mesh,
    profile: SigmaProfile,
    k: int = 5,
    truncation_bc: TruncationBC = TruncationBC.DIRICHLET,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER
) -> SpectralResult:
    """Ensambla y resuelve sobre una malla ya construida"""
    dofmap = build_dofmap(mesh, truncation_bc)
    form = assemble(mesh, profile, dofmap)
    k = min(k, form.dimension)
    return smallest_eigenpairs(form, k, tol=tol, seed=seed, max_iter=max_iter)


def solve_spectrum(
    spec: DomainSpec,
    profile: SigmaProfile,
    k: int = 5,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    cache: Optional[SolveCache] = None
) -> SpectralResult:
    """
    Espectro bajo de la banda truncada: geometry → fem_assembly → eigensolver.

    Args:
        spec: Dominio
        profile: Perfil σ
        k: Número de autopares
        tol: Tolerancia del residuo
        seed: Semilla del vector inicial
        max_iter: Máximo de iteraciones del autosolver
        cache: Caché opcional de solves

    Returns:
        SpectralResult con la forma y los metadatos de procedencia
    """
    mesh = build_mesh(spec)
    dofmap = build_dofmap(mesh, spec.truncation_bc)
    form = assemble(mesh, profile, dofmap)
    k = min(k, form.dimension)

    params = _solve_params(spec, profile, k, tol, seed)
    cached = cache.get(params) if cache is not None else None

    if cached is not None:
        result = SpectralResult(
            eigenvalues=cached['eigenvalues'],
            eigenvectors=cached['eigenvectors'],
            residuals=cached['residuals'],
            iterations=int(cached['iterations']),
            solver=str(cached['solver']),
            shift=float(cached['shift']),
            seed=seed,
            form=form,
        )
    else:
        result = smallest_eigenpairs(form, k, tol=tol, seed=seed, max_iter=max_iter)
        if cache is not None:
            cache.save(
                params,
                eigenvalues=result.eigenvalues,
                eigenvectors=result.eigenvectors,
                residuals=result.residuals,
                iterations=np.array(result.iterations),
                solver=np.array(result.solver),
                shift=np.array(result.shift),
            )

    metadata = {
        'domain': spec.to_dict(),
        'sigma': describe(profile),
        'threshold': strip_threshold(spec.d),
        'free_dofs': form.dimension,
        'vertices': mesh.num_vertices,
        'form_lower_bound': form_lower_bound(form),
        'version': __version__,
    }

    logger.info(
        f"✓ Solve d={spec.d}, h={spec.h}, L={spec.L} ({spec.truncation_bc.value}): "
        f"E₀ = {result.eigenvalues[0]:.10g} ({form.dimension} incógnitas)"
    )
    return replace(result, form=form, metadata=metadata)


def localization_measure(mesh: Mesh, mass: np.ndarray, u: np.ndarray, radius: float) -> float:
    """
    Fracción de la masa de u en los vértices con x + y <= radius.

    Se usa la masa agrupada (suma por filas de la masa de todos los vértices).

    Args:
        mesh: Malla
        mass: Masa de todos los vértices (matriz dispersa) o sus filas agrupadas
        u: Vector sobre todos los vértices
        radius: Radio R en la coordenada x + y

    Returns:
        Número en [0, 1]
    """
    if hasattr(mass, 'shape') and len(mass.shape) == 2:
        lumped = np.asarray(mass.sum(axis=1)).ravel()
    else:
        lumped = np.asarray(mass, dtype=float)

    weights = lumped * np.asarray(u, dtype=float) ** 2
    total = float(weights.sum())
    if total == 0.0:
        return 0.0

    inside = mesh.vertices.sum(axis=1) <= radius * (1 + 1e-12)
    return float(weights[inside].sum() / total)


def eigenvector_localization(result: SpectralResult, radius: float, index: int = 0) -> float:
    """localization_measure de un autovector de un resultado con forma"""
    form = result.form
    u = form.dofmap.expand(result.eigenvectors[:, index])
    return localization_measure(form.mesh, form.M_full, u, radius)


def swap_symmetry_residual(result: SpectralResult, index: int = 0) -> float:
    """‖u∘swap - u‖ / ‖u‖ del autovector dado"""
    form = result.form
    u = form.dofmap.expand(result.eigenvectors[:, index])
    perm = swap_permutation(form.mesh)
    return float(np.linalg.norm(u[perm] - u) / np.linalg.norm(u))


def detect_bound_state(
    spec: DomainSpec,
    profile: SigmaProfile,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    order_window: Tuple[float, float] = ORDER_WINDOW,
    cache: Optional[SolveCache] = None
) -> BoundStateVerdict:
    """
    Decide si hay un autovalor bajo el umbral π²/2d².

    Resuelve en (h, L), (h/2, L), (h/4, L) y (h, 2L); extrapola en h con
    orden 2 y certifica con un margen de 10 veces el error estimado más la
    tolerancia del autosolver.

    Args:
        spec: Dominio base (h, L)
        profile: Perfil σ
        tol: Tolerancia del autosolver
        seed: Semilla
        max_iter: Máximo de iteraciones
        order_window: Intervalo admisible del orden observado para un Yes
        cache: Caché opcional

    Returns:
        BoundStateVerdict (Inconclusive es un resultado, no un error)
    """
    threshold = strip_threshold(spec.d)

    plan = [
        replace(spec, h=spec.h),
        replace(spec, h=spec.h / 2),
        replace(spec, h=spec.h / 4),
        replace(spec, L=2 * spec.L),
    ]

    results = [
        solve_spectrum(s, profile, k=1, tol=tol, seed=seed, max_iter=max_iter, cache=cache)
        for s in plan
    ]
    E = [float(r.eigenvalues[0]) for r in results]
    E_h, E_h2, E_h4, E_2L = E

    order = observed_order(E_h, E_h2, E_h4)
    E_ext = richardson_extrapolate([E_h2, E_h4], order=2.0)
    margin = MARGIN_FACTOR * abs(E_ext - E_h4) + tol * max(1.0, abs(E_ext))

    localization = eigenvector_localization(results[2], LOCALIZATION_RADIUS * spec.d)
    drift = abs(E_h - E_2L) / max(abs(E_h), np.finfo(float).tiny)

    order_ok = order_window[0] <= order <= order_window[1]
    below = E_ext < threshold - margin

    reasons = []
    if below and drift < DRIFT_LIMIT and localization > LOCALIZATION_LIMIT and order_ok:
        exists = Verdict.YES
    elif E_h >= threshold - margin and E_2L >= threshold - margin and localization < LOCALIZATION_LIMIT:
        exists = Verdict.NO
    else:
        exists = Verdict.INCONCLUSIVE
        if not below:
            reasons.append("E0 no queda certificado bajo el umbral")
        if drift >= DRIFT_LIMIT:
            reasons.append(f"deriva de truncación {drift:.2e} >= {DRIFT_LIMIT:g}")
        if localization <= LOCALIZATION_LIMIT:
            reasons.append(f"localización {localization:.3f} <= {LOCALIZATION_LIMIT}")
        if not order_ok:
            reasons.append(f"orden observado {order:.3f} fuera de {list(order_window)}")

    levels = [
        {'h': s.h, 'L': s.L, 'E0': e}
        for s, e in zip(plan, E)
    ]

    verdict = BoundStateVerdict(
        exists=exists,
        E0_extrapolated=E_ext,
        gap_to_threshold=threshold - E_ext,
        localization=localization,
        truncation_drift=drift,
        margin=margin,
        threshold=threshold,
        observed_order=order,
        levels=levels,
        reasons=reasons,
    )

    marker = {'Yes': '✅', 'No': '❌', 'Inconclusive': '⚠️ '}[exists.value]
    logger.info(
        f"{marker} Estado ligado ({describe(profile)['type']}): {exists.value} | "
        f"E0≈{E_ext:.8g}, umbral {threshold:.8g}, margen {margin:.2e}, "
        f"loc {localization:.3f}, deriva {drift:.1e}, orden {order:.2f}"
    )
    return verdict


def essential_spectrum_probe(
    d: float,
    profile: SigmaProfile,
    lengths: Sequence[float],
    h: float,
    truncation_bc: TruncationBC = TruncationBC.DIRICHLET,
    delta: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER
) -> Dict:
    """
    Autovalores en [umbral, umbral + Δ] a medida que crece L.

    k se duplica hasta que el mayor autovalor calculado supera umbral + Δ.

    Args:
        d: Tamaño de la molécula
        profile: Perfil σ
        lengths: Al menos tres valores crecientes de L
        h: Paso de red común
        delta: Anchura de la ventana (por defecto umbral/4)

    Returns:
        Informe con recuento y E1 por L y las comprobaciones de monotonía
    """
    lengths = sorted(float(L) for L in lengths)
    if len(lengths) < 3:
        raise InputError(f"Se necesitan al menos tres valores de L (recibidos {len(lengths)})")

    threshold = strip_threshold(d)
    delta = threshold / 4.0 if delta is None else float(delta)
    top = threshold + delta

    rows = []
    for L in tqdm(lengths, desc="Espectro esencial", unit="L", leave=False, disable=None):
        spec = DomainSpec(d=d, L=L, h=h, truncation_bc=truncation_bc)
        k = 8

        while True:
            result = solve_spectrum(spec, profile, k=k, tol=tol, seed=seed, max_iter=max_iter)
            values = result.eigenvalues
            if values[-1] > top or len(values) >= result.form.dimension - 1:
                break
            k = min(2 * k, result.form.dimension - 1)

        count = int(np.sum((values >= threshold) & (values <= top)))
        rows.append({
            'L': L,
            'k': int(len(values)),
            'count': count,
            'E0': float(values[0]),
            'E1': float(values[1]) if len(values) > 1 else float('nan'),
        })

    counts = [row['count'] for row in rows]
    second = [row['E1'] for row in rows]

    report = {
        'd': d,
        'h': h,
        'sigma': describe(profile),
        'threshold': threshold,
        'delta': delta,
        'rows': rows,
        'counts_nondecreasing': all(b >= a for a, b in zip(counts, counts[1:])),
        'E1_nonincreasing': all(b <= a * (1 + MONOTONE_SLACK) for a, b in zip(second, second[1:])),
        'E1_gap_last': second[-1] - threshold,
    }

    if report['counts_nondecreasing'] and report['E1_nonincreasing']:
        logger.info(f"✅ Espectro esencial: recuentos {counts}, E1 → {second[-1]:.8g} (umbral {threshold:.8g})")
    else:
        logger.warning(f"⚠️  Espectro esencial no monótono: recuentos {counts}, E1 {second}")

    return report


def gamma_threshold_search(
    d: float,
    bracket: Optional[Tuple[float, float]] = None,
    h: Optional[float] = None,
    L: Optional[float] = None,
    width: Optional[float] = None,
    truncation_bc: TruncationBC = TruncationBC.DIRICHLET,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    cache: Optional[SolveCache] = None
) -> Dict:
    """
    Bisección en σ ≡ γ del punto donde desaparece el estado ligado.

    Args:
        d: Tamaño de la molécula
        bracket: (γ_lo, γ_hi), por defecto (-100/d, 0)
        h: Paso de red (por defecto d/8)
        L: Truncación (por defecto 8d)
        width: Anchura final del intervalo (por defecto 0.05/d)

    Returns:
        Informe con gamma_star, el intervalo final y los veredictos de los extremos

    Raises:
        BracketInvalid: si γ_hi no da Yes o γ_lo no da No
    """
    gamma_lo, gamma_hi = bracket if bracket is not None else (-100.0 / d, 0.0)
    if gamma_lo >= gamma_hi:
        raise BracketInvalid(f"Intervalo no válido: ({gamma_lo}, {gamma_hi})")

    h = d / 8.0 if h is None else h
    L = 8.0 * d if L is None else L
    width = 0.05 / d if width is None else width
    spec = DomainSpec(d=d, L=L, h=h, truncation_bc=truncation_bc)

    def verdict_at(gamma: float) -> Verdict:
        return detect_bound_state(
            spec, Constant(gamma, d), tol=tol, seed=seed, max_iter=max_iter, cache=cache
        ).exists

    verdict_hi = verdict_at(gamma_hi)
    verdict_lo = verdict_at(gamma_lo)

    if verdict_hi != Verdict.YES or verdict_lo != Verdict.NO:
        raise BracketInvalid(
            f"Los extremos deben dar Yes (γ_hi={gamma_hi}) y No (γ_lo={gamma_lo}); "
            f"se obtuvo {verdict_hi.value} y {verdict_lo.value}"
        )

    lo, hi = gamma_lo, gamma_hi
    final_lo = verdict_lo
    history = [
        {'gamma': gamma_hi, 'verdict': verdict_hi.value},
        {'gamma': gamma_lo, 'verdict': verdict_lo.value},
    ]

    steps = max(0, math.ceil(math.log2((hi - lo) / width)))
    with tqdm(total=steps, desc="Bisección γ", unit="paso", leave=False, disable=None) as bar:
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            verdict = verdict_at(mid)
            history.append({'gamma': mid, 'verdict': verdict.value})

            if verdict == Verdict.YES:
                hi = mid
            else:
                lo, final_lo = mid, verdict
            bar.update(1)

    gamma_star = 0.5 * (lo + hi)
    bound = repulsion_bound(d)

    if gamma_star < bound - width:
        logger.warning(f"⚠️  γ*={gamma_star:.6g} por debajo de la cota repulsiva {bound:.6g}")

    logger.info(f"✅ γ* = {gamma_star:.6g} (d={d}, intervalo [{lo:.6g}, {hi:.6g}])")

    return {
        'd': d,
        'h': h,
        'L': L,
        'gamma_star': gamma_star,
        'gamma_lo': lo,
        'gamma_hi': hi,
        'width': hi - lo,
        'verdict_hi': verdict_hi.value,
        'verdict_lo': verdict_lo.value,
        'final_verdict_lo': final_lo.value,
        'repulsion_bound': bound,
        'gamma_star_times_d': gamma_star * d,
        'history': history,
    }


def sigma_sweep(
    spec: DomainSpec,
    values: Sequence[float],
    base: Optional[SigmaProfile] = None,
    k: int = 3,
    with_verdict: bool = True,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    cache: Optional[SolveCache] = None
) -> Dict:
    """
    Tabla de E0 (y veredictos) sobre la familia σ = s·σ_base, o σ ≡ s sin base.

    Args:
        spec: Dominio
        values: Parámetros s (lista vacía equivale a [0])
        base: Perfil base (None para constantes)
        k: Autovalores por fila
        with_verdict: Añadir detect_bound_state a cada fila

    Returns:
        Informe con filas ordenadas por s y la comprobación de monotonía
    """
    values = sorted(float(v) for v in values) or [0.0]

    rows = []
    for s in tqdm(values, desc="Barrido σ", unit="σ", leave=False, disable=None):
        profile = Constant(s, spec.d) if base is None else scaled(base, s)
        result = solve_spectrum(spec, profile, k=k, tol=tol, seed=seed, max_iter=max_iter, cache=cache)

        row = {'sigma': s}
        for j, value in enumerate(result.eigenvalues):
            row[f'E{j}'] = float(value)

        if with_verdict:
            verdict = detect_bound_state(spec, profile, tol=tol, seed=seed, max_iter=max_iter, cache=cache)
            row.update({
                'verdict': verdict.exists.value,
                'E0_extrapolated': verdict.E0_extrapolated,
                'gap_to_threshold': verdict.gap_to_threshold,
                'localization': verdict.localization,
                'truncation_drift': verdict.truncation_drift,
            })

        rows.append(row)

    # Con σ_base >= 0 (o constantes) s creciente es σ puntualmente creciente
    ordered = base is None or is_nonnegative(base)
    E0 = [row['E0'] for row in rows]
    monotone = None
    strictly = None
    if ordered:
        monotone = all(b <= a + MONOTONE_SLACK * max(1.0, abs(a)) for a, b in zip(E0, E0[1:]))
        strictly = all(b < a for a, b in zip(E0, E0[1:]))
        if not monotone:
            logger.warning(f"⚠️  E0 no es monótono en σ: {E0}")

    return {
        'domain': spec.to_dict(),
        'base': describe(base) if base is not None else None,
        'rows': rows,
        'E0_nonincreasing': monotone,
        'E0_strictly_decreasing': strictly,
    }


def ritz_monotonicity(
    spec: DomainSpec,
    sigma_values: Sequence[float],
    k: int = 3,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED
) -> Dict:
    """
    Comprueba índice a índice que aumentar σ constante no sube ningún valor de Ritz.

    Returns:
        Informe con la matriz de autovalores y las violaciones encontradas
    """
    sigma_values = sorted(float(s) for s in sigma_values)
    table = [
        solve_spectrum(spec, Constant(s, spec.d), k=k, tol=tol, seed=seed).eigenvalues
        for s in sigma_values
    ]

    violations = []
    for i in range(len(table) - 1):
        for j in range(min(len(table[i]), len(table[i + 1]))):
            before, after = float(table[i][j]), float(table[i + 1][j])
            if after > before + MONOTONE_SLACK * max(1.0, abs(before)):
                violations.append({'sigma': sigma_values[i + 1], 'index': j, 'before': before, 'after': after})

    return {
        'sigma': sigma_values,
        'eigenvalues': [[float(v) for v in row] for row in table],
        'holds': not violations,
        'violations': violations,
    }


def bracketing_check(
    spec: DomainSpec,
    profile: SigmaProfile,
    k: int = 3,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED
) -> Dict:
    """Autovalores con truncación Dirichlet frente a Neumann, índice a índice"""
    dirichlet = solve_spectrum(replace(spec, truncation_bc=TruncationBC.DIRICHLET), profile, k=k, tol=tol, seed=seed)
    neumann = solve_spectrum(replace(spec, truncation_bc=TruncationBC.NEUMANN), profile, k=k, tol=tol, seed=seed)

    pairs = list(zip(dirichlet.eigenvalues, neumann.eigenvalues))
    holds = all(
        e_d >= e_n - MONOTONE_SLACK * max(1.0, abs(e_n))
        for e_d, e_n in pairs
    )

    return {
        'domain': spec.to_dict(),
        'dirichlet': [float(v) for v in dirichlet.eigenvalues],
        'neumann': [float(v) for v in neumann.eigenvalues],
        'holds': holds,
    }


def _report_from_levels(
    records: List[Dict],
    oracle: Optional[float],
    oracle_name: str,
    use_observed_order: bool = False,
    order_range: Tuple[float, float] = (1.0, 2.5)
) -> ConvergenceReport:
    energies = [r['E0'] for r in records]
    order = observed_order(*energies[-3:]) if len(energies) >= 3 else None

    extrapolation_order = 2.0
    if use_observed_order and order is not None and order_range[0] <= order <= order_range[1]:
        extrapolation_order = order

    if len(energies) >= 2:
        extrapolated = richardson_extrapolate(energies, order=extrapolation_order)
    else:
        extrapolated = energies[-1]

    return ConvergenceReport(
        records=records,
        extrapolated=extrapolated,
        observed_order=order,
        oracle=oracle,
        oracle_name=oracle_name,
        extrapolation_order=extrapolation_order,
    )


def rectangle_benchmark(
    d: float = 1.0,
    w: float = 2.0,
    m_levels: Sequence[int] = (8, 16, 32),
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED
) -> ConvergenceReport:
    """
    Rectángulo Dirichlet de lados √2·d y √2·w frente a π²/2d² + π²/2w².

    Args:
        m_levels: Divisiones del lado transversal de cada nivel (paso √2·d/m)
    """
    records = []
    for m in tqdm(m_levels, desc="Rectángulo", unit="nivel", leave=False, disable=None):
        mesh = build_rectangle_mesh(d, w, m)
        result = solve_on_mesh(mesh, Constant(0.0, mesh.width), k=1, tol=tol, seed=seed)
        records.append({'m': m, 'h': mesh.h, 'E0': float(result.eigenvalues[0])})

    report = _report_from_levels(records, rect_ground_state(d, w), 'rect_ground_state')
    logger.info(
        f"📊 Rectángulo d={d}, w={w}: extrapolado {report.extrapolated:.10g} "
        f"frente a {report.oracle:.10g} (error {report.relative_error:.2e}, orden {report.observed_order})"
    )
    return report


def convergence_study(
    spec: DomainSpec,
    profile: SigmaProfile,
    levels: int = 3,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
    cache: Optional[SolveCache] = None
) -> ConvergenceReport:
    """
    E0 en h, h/2, ..., h/2^(levels-1) con L fijo.

    Returns:
        ConvergenceReport comparado con el umbral π²/2d²
    """
    if levels < 2:
        raise InputError(f"Se necesitan al menos dos niveles (recibidos {levels})")

    records = []
    for level in tqdm(range(levels), desc="Convergencia", unit="nivel", leave=False, disable=None):
        s = replace(spec, h=spec.h / 2 ** level)
        result = solve_spectrum(s, profile, k=1, tol=tol, seed=seed, cache=cache)
        records.append({'h': s.h, 'L': s.L, 'E0': float(result.eigenvalues[0])})

    report = _report_from_levels(records, strip_threshold(spec.d), 'strip_threshold')
    logger.info(
        f"📊 Convergencia: E0 → {report.extrapolated:.10g}, orden {report.observed_order}, "
        f"E0/umbral = {report.extrapolated / report.oracle:.6f}"
    )
    return report


def stability_constant_estimate(
    spec: DomainSpec,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED
) -> Dict:
    """
    Cota c tal que todo σ constante con |σ| < c deja un valor de Ritz bajo el umbral.

    c = (π²/2d² - E0) / ∫_{∂Ω_σ} |φ0|², con φ0 el estado fundamental M-normalizado de σ ≡ 0.
    """
    result = solve_spectrum(spec, Constant(0.0, spec.d), k=1, tol=tol, seed=seed)
    E0 = float(result.eigenvalues[0])
    threshold = strip_threshold(spec.d)
    trace = boundary_trace_norm(result.form, result.eigenvectors[:, 0])

    c_lower = (threshold - E0) / trace if trace > 0 else float('inf')
    logger.info(f"📊 Constante de estabilidad: c >= {c_lower:.8g} (E0={E0:.8g}, traza={trace:.6g})")

    return {
        'domain': spec.to_dict(),
        'E0': E0,
        'threshold': threshold,
        'trace_norm': trace,
        'c_lower': c_lower,
    }


def lshape_direct_solve(
    b: float,
    h: float,
    length: Optional[float] = None,
    truncation_bc: TruncationBC = TruncationBC.DIRICHLET,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED
) -> float:
    """
    Primer autovalor de la guía en L Dirichlet truncada.

    Args:
        b: Anchura de los brazos
        h: Paso de red (divide a b)
        length: Longitud de cada brazo (por defecto 8b)

    Returns:
        λ más bajo
    """
    length = LSHAPE_LENGTH_FACTOR * b if length is None else length
    mesh = build_lshape_mesh(b, h, length)
    result = solve_on_mesh(mesh, Constant(0.0, mesh.width), k=1, truncation_bc=truncation_bc, tol=tol, seed=seed)
    return float(result.eigenvalues[0])


def lshape_study(
    b: float = math.sqrt(2.0),
    m_levels: Sequence[int] = (8, 16, 32),
    length: Optional[float] = None,
    truncation_bc: TruncationBC = TruncationBC.DIRICHLET,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED
) -> ConvergenceReport:
    """
    Serie de lshape_direct_solve con paso b/m, extrapolada con el orden observado
    (la esquina entrante da orden ≈ 4/3).
    """
    records = []
    for m in tqdm(m_levels, desc="Guía en L", unit="nivel", leave=False, disable=None):
        h = b / m
        records.append({'m': m, 'h': h, 'E0': lshape_direct_solve(b, h, length, truncation_bc, tol, seed)})

    report = _report_from_levels(records, lshape_reference(b), 'lshape_reference', use_observed_order=True)
    logger.info(
        f"📊 Guía en L b={b:.6g}: λ·(b/π)² = {report.extrapolated * (b / math.pi) ** 2:.5f} "
        f"(orden {report.observed_order})"
    )
    return report
