#!/usr/bin/env python3
"""
Banda - Espectro de -Δ en la banda |x - y| <= d con condiciones Robin/Dirichlet

Uso:
    python banda.py solve --d 1 --sigma 0 --h 0.125 --L 6 --k 5
    python banda.py detect --d 1 --sigma -0.05
    python banda.py threshold --d 1 --bracket -100 0
    python banda.py oracle --name strip-threshold --d 1
"""

import argparse
import json
import math
import sys
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple
from dotenv import load_dotenv

# Importar módulos del proyecto
from src import __version__
from src.analysis import (
    bracketing_check, convergence_study, detect_bound_state, essential_spectrum_probe,
    gamma_threshold_search, lshape_study, sigma_sweep, solve_spectrum,
    stability_constant_estimate, swap_symmetry_residual
)
from src.cache import SolveCache
from src.config import RunConfig, resolve_config, sweep_values
from src.errors import BandaError, InputError, NumericalError
from src.exporter import (
    THEMES, dumps, save_html_report, sidecar_path, write_csv,
    write_eigenfunction_csv, write_json
)
from src.fem_assembly import assemble, build_dofmap, dump_matrix
from src.geometry import DomainSpec, TruncationBC, build_mesh, write_mesh_listing
from src.oracles import ORACLE_NAMES, oracle_value, strip_threshold
from src.sigma_model import SigmaProfile, parse_sigma_argument

# Cargar variables de entorno
load_dotenv()

logger = logging.getLogger(__name__)

# Flags que pasan por la resolución de configuración
CONFIG_FLAGS = (
    'd', 'h', 'L', 'sigma', 'sigma_file', 'k', 'tol', 'truncation_bc',
    'out', 'format', 'seed', 'max_iter',
)


# Configuración de logging
def setup_logging(verbose: bool = False, quiet: bool = False):
    """Configura el nivel de logging"""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%H:%M:%S',
        force=True
    )
    if quiet:
        logging.getLogger().setLevel(logging.ERROR)


def print_header(title: str):
    print("\n" + "="*70)
    print(title)
    print("="*70 + "\n")


def print_summary(lines: List[str]):
    print("\n" + "="*70)
    print("📊 RESUMEN")
    print("="*70)
    for line in lines:
        print(line)
    print("="*70 + "\n")


def domain_from(config: RunConfig) -> DomainSpec:
    return DomainSpec(d=config.d, L=config.L, h=config.h, truncation_bc=TruncationBC(config.truncation_bc))


def profile_from(config: RunConfig) -> SigmaProfile:
    return parse_sigma_argument(config.sigma, config.sigma_file, config.d)


def emit(args, config: RunConfig, payload: Dict, rows: List[Dict], name: str, title: str) -> Path:
    """
    Escribe la salida del comando en el formato pedido.

    JSON: informe completo con la configuración. CSV: una fila por punto y el
    informe completo en el fichero hermano <salida>.json.
    """
    payload = {'config': config.to_dict(), **payload}
    path = config.output_path(name)

    if config.format == 'csv':
        write_csv(rows, path)
        write_json(payload, sidecar_path(path))
    else:
        write_json(payload, path)

    if args.html:
        save_html_report(payload, path, title, theme=args.theme, table=rows)

    return path


# Comando: solve
def cmd_solve(args, config: RunConfig) -> int:
    """Autovalores más bajos de la banda truncada"""
    print_header("🔢 SOLVE: ESPECTRO DE LA BANDA TRUNCADA")

    spec = domain_from(config)
    profile = profile_from(config)

    result = solve_spectrum(
        spec, profile, k=config.k, tol=config.tol, seed=config.seed,
        max_iter=config.max_iter, cache=SolveCache.from_env()
    )

    payload = result.to_dict()
    payload['swap_symmetry_residual'] = (
        swap_symmetry_residual(result) if payload['sigma']['type'] == 'constant' else None
    )

    rows = [
        {'index': j, 'eigenvalue': value, 'residual': residual}
        for j, (value, residual) in enumerate(zip(result.eigenvalues, result.residuals))
    ]
    path = emit(args, config, payload, rows, 'solve', 'Espectro de la banda')

    threshold = strip_threshold(spec.d)
    print_summary(
        [f"✅ E{j} = {value:.12g}" for j, value in enumerate(result.eigenvalues)]
        + [f"📏 Umbral π²/2d² = {threshold:.12g}", f"💾 {path}"]
    )
    return 0


# Comando: detect
def cmd_detect(args, config: RunConfig) -> int:
    """Veredicto sobre la existencia de un estado ligado"""
    print_header("🔍 DETECCIÓN DE ESTADO LIGADO")

    verdict = detect_bound_state(
        domain_from(config), profile_from(config), tol=config.tol, seed=config.seed,
        max_iter=config.max_iter, cache=SolveCache.from_env()
    )

    payload = verdict.to_dict()
    path = emit(args, config, payload, verdict.levels, 'detect', 'Estado ligado')

    print_summary([
        f"✅ Veredicto: {verdict.exists.value}",
        f"   E0 extrapolado: {verdict.E0_extrapolated:.12g}",
        f"   Distancia al umbral: {verdict.gap_to_threshold:.6g} (margen {verdict.margin:.2e})",
        f"   Localización: {verdict.localization:.4f}",
        f"   Deriva de truncación: {verdict.truncation_drift:.2e}",
        f"💾 {path}",
    ])
    return 0


# Comando: sweep
def cmd_sweep(args, config: RunConfig) -> int:
    """E0 y veredictos sobre una familia de σ"""
    print_header("📈 BARRIDO EN σ")

    values = sweep_values(args.values)
    base = None
    if config.sigma_file:
        base = parse_sigma_argument(None, config.sigma_file, config.d)

    report = sigma_sweep(
        domain_from(config), values, base=base, k=min(config.k, 3),
        with_verdict=not args.no_verdict, tol=config.tol, seed=config.seed,
        max_iter=config.max_iter, cache=SolveCache.from_env()
    )

    path = emit(args, config, report, report['rows'], 'sweep', 'Barrido en σ')

    print_summary(
        [f"   σ = {row['sigma']:g}: E0 = {row['E0']:.10g} {row.get('verdict', '')}" for row in report['rows']]
        + [f"✅ E0 no creciente: {report['E0_nonincreasing']}", f"💾 {path}"]
    )
    return 0


def config_float(config: RunConfig, key: str) -> Optional[float]:
    """Valor numérico de una clave adicional del fichero --config"""
    raw = config.extra.get(key)
    if raw is None:
        return None
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise InputError(f"Valor no válido para '{key}': {raw!r}")


def threshold_bracket(args, config: RunConfig) -> Optional[Tuple[float, float]]:
    """--bracket, o la clave bracket del fichero --config (dos números)"""
    if args.bracket:
        return tuple(args.bracket)
    raw = config.extra.get('bracket')
    if raw is None:
        return None
    try:
        values = [float(part) for part in str(raw).replace(',', ' ').split()]
    except ValueError:
        raise InputError(f"Intervalo no válido: {raw!r}")
    if len(values) != 2:
        raise InputError(f"El intervalo necesita dos valores: {raw!r}")
    return values[0], values[1]


# Comando: threshold
def cmd_threshold(args, config: RunConfig) -> int:
    """Bisección del umbral repulsivo γ*"""
    print_header("🎯 BÚSQUEDA DEL UMBRAL γ*")

    report = gamma_threshold_search(
        config.d,
        bracket=threshold_bracket(args, config),
        h=config.h if 'h' in config.explicit else None,
        L=config.L if 'L' in config.explicit else None,
        width=args.width if args.width is not None else config_float(config, 'width'),
        truncation_bc=TruncationBC(config.truncation_bc),
        tol=config.tol,
        seed=config.seed,
        max_iter=config.max_iter,
        cache=SolveCache.from_env()
    )

    path = emit(args, config, report, report['history'], 'threshold', 'Umbral repulsivo')

    print_summary([
        f"✅ γ* = {report['gamma_star']:.6g} ∈ [{report['gamma_lo']:.6g}, {report['gamma_hi']:.6g}]",
        f"   γ*·d = {report['gamma_star_times_d']:.6g}",
        f"   Cota repulsiva -π/2d = {report['repulsion_bound']:.6g}",
        f"💾 {path}",
    ])
    return 0


# Comando: converge
def cmd_converge(args, config: RunConfig) -> int:
    """Estudio de convergencia en h"""
    print_header("📉 ESTUDIO DE CONVERGENCIA")

    spec = domain_from(config)
    profile = profile_from(config)
    report = convergence_study(
        spec, profile, levels=args.levels, tol=config.tol, seed=config.seed,
        cache=SolveCache.from_env()
    )

    payload = report.to_dict()
    if args.bracketing:
        payload['bracketing'] = bracketing_check(spec, profile, k=min(config.k, 3), tol=config.tol, seed=config.seed)

    path = emit(args, config, payload, report.records, 'converge', 'Convergencia')

    print_summary([
        f"✅ E0 extrapolado: {report.extrapolated:.12g}",
        f"   Orden observado: {report.observed_order}",
        f"   E0 / umbral: {report.extrapolated / report.oracle:.6f}",
        f"💾 {path}",
    ])
    return 0


# Comando: probe-essential
def cmd_probe_essential(args, config: RunConfig) -> int:
    """Acumulación de autovalores sobre el umbral al crecer L"""
    print_header("🌊 SONDEO DEL ESPECTRO ESENCIAL")

    report = essential_spectrum_probe(
        config.d, profile_from(config), args.lengths, config.h,
        truncation_bc=TruncationBC(config.truncation_bc), delta=args.delta,
        tol=config.tol, seed=config.seed, max_iter=config.max_iter
    )

    path = emit(args, config, report, report['rows'], 'probe_essential', 'Espectro esencial')

    print_summary(
        [f"   L = {row['L']:g}: {row['count']} autovalores en la ventana, E1 = {row['E1']:.10g}" for row in report['rows']]
        + [
            f"✅ Recuentos no decrecientes: {report['counts_nondecreasing']}",
            f"✅ E1 no creciente: {report['E1_nonincreasing']}",
            f"💾 {path}",
        ]
    )
    return 0


# Comando: oracle
def cmd_oracle(args, config: RunConfig) -> int:
    """Valor de referencia por nombre"""
    oracle = oracle_value(args.name, d=config.d, w=args.w, gamma=args.gamma, b=args.b, n=args.n)

    payload = oracle.to_dict()
    path = emit(args, config, payload, [payload], f"oracle_{args.name}", 'Oráculo')

    print(json.dumps({'name': oracle.name, 'value': oracle.value, 'provenance': oracle.provenance.value}))
    logger.info(f"💾 {path}")
    return 0


# Comando: export-eigenfunction
def cmd_export_eigenfunction(args, config: RunConfig) -> int:
    """Exporta una autofunción como CSV x,y,value"""
    print_header("📤 EXPORTACIÓN DE AUTOFUNCIÓN")

    if not 0 <= args.index < config.k:
        raise InputError(f"--index {args.index} fuera de [0, {config.k})")

    result = solve_spectrum(
        domain_from(config), profile_from(config), k=config.k, tol=config.tol,
        seed=config.seed, max_iter=config.max_iter, cache=SolveCache.from_env()
    )
    if args.index >= result.k:
        raise InputError(f"--index {args.index} fuera de [0, {result.k})")

    form = result.form
    values = form.dofmap.expand(result.eigenvectors[:, args.index])

    path = Path(config.out) if config.out else Path(config.output_dir) / f"eigenfunction_{args.index}.csv"
    sidecar = {
        'config': config.to_dict(),
        'index': args.index,
        'eigenvalue': float(result.eigenvalues[args.index]),
        **result.to_dict(),
    }
    write_eigenfunction_csv(form.mesh.vertices, values, path, sidecar)

    print_summary([
        f"✅ Autofunción {args.index}: E = {result.eigenvalues[args.index]:.12g}",
        f"   Vértices: {len(values):,}",
        f"💾 {path}",
    ])
    return 0


# Comando: stability-constant
def cmd_stability_constant(args, config: RunConfig) -> int:
    """Cota numérica de la constante de estabilidad en σ"""
    print_header("🛡️  CONSTANTE DE ESTABILIDAD")

    report = stability_constant_estimate(domain_from(config), tol=config.tol, seed=config.seed)
    path = emit(args, config, report, [report], 'stability_constant', 'Constante de estabilidad')

    print_summary([
        f"✅ c >= {report['c_lower']:.8g}",
        f"   E0(σ≡0) = {report['E0']:.10g}, ∫|φ0|² en los ejes = {report['trace_norm']:.6g}",
        f"💾 {path}",
    ])
    return 0


# Comando: lshape
def cmd_lshape(args, config: RunConfig) -> int:
    """Guía de ondas en L con Dirichlet"""
    print_header("📐 GUÍA DE ONDAS EN L")

    report = lshape_study(
        b=args.b, m_levels=args.m_levels, length=args.length,
        truncation_bc=TruncationBC(config.truncation_bc), tol=config.tol, seed=config.seed
    )

    payload = report.to_dict()
    payload['b'] = args.b
    payload['normalized'] = report.extrapolated * (args.b / math.pi) ** 2
    path = emit(args, config, payload, report.records, 'lshape', 'Guía en L')

    print_summary([
        f"✅ λ extrapolado: {report.extrapolated:.10g}",
        f"   λ·(b/π)² = {payload['normalized']:.5f} (referencia 0.93)",
        f"   Orden observado: {report.observed_order}",
        f"💾 {path}",
    ])
    return 0


# Comando: export-mesh
def cmd_export_mesh(args, config: RunConfig) -> int:
    """Listado de la malla y, opcionalmente, volcado de K"""
    print_header("🕸️  EXPORTACIÓN DE MALLA")

    mesh = build_mesh(domain_from(config))
    path = Path(config.out) if config.out else Path(config.output_dir) / "mesh.txt"
    write_mesh_listing(mesh, path)

    lines = [
        f"✅ Vértices: {mesh.num_vertices:,}, triángulos: {mesh.num_triangles:,}",
        f"💾 {path}",
    ]

    if args.matrix:
        form = assemble(mesh, profile_from(config), build_dofmap(mesh, TruncationBC(config.truncation_bc)))
        dump_matrix(form.K, args.matrix)
        lines.append(f"💾 Matriz K ({form.dimension}×{form.dimension}): {args.matrix}")

    print_summary(lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Parser con subcomandos; los flags comunes van en un padre compartido"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Fichero clave = valor con cualquiera de los flags')
    common.add_argument('--d', type=float, help='Tamaño de la molécula (default: 1)')
    common.add_argument('--h', type=float, help='Paso de red; debe dividir a d y a L (default: 0.125)')
    common.add_argument('--L', type=float, help='Truncación x + y <= 2L (default: 6)')
    common.add_argument('--sigma', type=float, help='σ constante (default: 0)')
    common.add_argument('--sigma-file', dest='sigma_file', help='Tabla de dos columnas y, σ(y)')
    common.add_argument('--k', type=int, help='Número de autopares (default: 5)')
    common.add_argument('--tol', type=float, help='Tolerancia del autosolver (default: 1e-8)')
    common.add_argument('--truncation', dest='truncation_bc', choices=['dirichlet', 'neumann'],
                        help='Condición en el corte (default: dirichlet)')
    common.add_argument('--out', help='Ruta de salida')
    common.add_argument('--format', choices=['json', 'csv'], help='Formato de salida (default: json)')
    common.add_argument('--seed', type=int, help='Semilla (default: 12345)')
    common.add_argument('--max-iter', dest='max_iter', type=int, help='Máximo de iteraciones (default: 5000)')
    common.add_argument('--html', action='store_true', help='Añadir informe HTML junto a la salida')
    common.add_argument('--theme', choices=list(THEMES), default='light', help='Tema del informe HTML')

    parser = argparse.ArgumentParser(
        description='Banda - Espectro de -Δ en la banda |x - y| <= d',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Ejemplos de uso:

  # Cinco autovalores más bajos con σ ≡ 0
  python banda.py solve --d 1 --sigma 0 --h 0.125 --L 6 --k 5

  # ¿Hay estado ligado con σ ≡ -0.05?
  python banda.py detect --d 1 --sigma -0.05

  # Barrido en σ constante, tabla CSV
  python banda.py sweep --d 1 --values 0,0.5,1,2 --format csv

  # Umbral repulsivo γ*
  python banda.py threshold --d 1 --bracket -100 0

  # Oráculo
  python banda.py oracle --name strip-threshold --d 1

Salida: JSON (por defecto) o CSV; la configuración resuelta va en cada informe.
Códigos de salida: 0 éxito, 2 uso o entrada no válida, 1 fallo numérico.
        """
    )

    parser.add_argument('--version', action='version', version=f'banda {__version__}')
    parser.add_argument('--verbose', '-v', action='store_true', help='Modo verbose (más logs)')
    parser.add_argument('--quiet', '-q', action='store_true', help='Modo silencioso (solo errores)')

    subparsers = parser.add_subparsers(dest='command', help='Comando a ejecutar')

    subparsers.add_parser('solve', parents=[common], help='Autovalores más bajos')
    subparsers.add_parser('detect', parents=[common], help='Veredicto de estado ligado')

    parser_sweep = subparsers.add_parser('sweep', parents=[common], help='Barrido en σ')
    parser_sweep.add_argument('--values', default='0,0.5,1,2',
                              help='Parámetros separados por comas (default: 0,0.5,1,2)')
    parser_sweep.add_argument('--no-verdict', action='store_true', help='Sólo autovalores, sin veredictos')

    parser_threshold = subparsers.add_parser('threshold', parents=[common], help='Bisección de γ*')
    parser_threshold.add_argument('--bracket', type=float, nargs=2, metavar=('LO', 'HI'),
                                  help='Intervalo inicial (default: -100/d 0)')
    parser_threshold.add_argument('--width', type=float, help='Anchura final (default: 0.05/d)')

    parser_converge = subparsers.add_parser('converge', parents=[common], help='Estudio de convergencia en h')
    parser_converge.add_argument('--levels', type=int, default=3, help='Niveles de h (default: 3)')
    parser_converge.add_argument('--bracketing', action='store_true',
                                 help='Comparar también truncación Dirichlet y Neumann')

    parser_probe = subparsers.add_parser('probe-essential', parents=[common], help='Sondeo del espectro esencial')
    parser_probe.add_argument('--lengths', type=float, nargs='+', default=[4.0, 8.0, 16.0],
                              help='Valores de L (default: 4 8 16)')
    parser_probe.add_argument('--delta', type=float, help='Anchura de la ventana (default: umbral/4)')

    parser_oracle = subparsers.add_parser('oracle', parents=[common], help='Valor de referencia')
    parser_oracle.add_argument('--name', required=True, choices=ORACLE_NAMES, help='Oráculo')
    parser_oracle.add_argument('--w', type=float, help='Longitud del rectángulo')
    parser_oracle.add_argument('--gamma', type=float, help='Constante de Robin')
    parser_oracle.add_argument('--b', type=float, help='Anchura de la guía en L')
    parser_oracle.add_argument('--n', type=int, help='Subintervalos de diferencias finitas')

    parser_eigenfunction = subparsers.add_parser('export-eigenfunction', parents=[common],
                                                 help='Exportar autofunción (x,y,value)')
    parser_eigenfunction.add_argument('--index', type=int, default=0, help='Índice del autopar (default: 0)')

    subparsers.add_parser('stability-constant', parents=[common], help='Cota de la constante de estabilidad')

    parser_lshape = subparsers.add_parser('lshape', parents=[common], help='Guía de ondas en L')
    parser_lshape.add_argument('--b', type=float, default=2 ** 0.5, help='Anchura de los brazos (default: √2)')
    parser_lshape.add_argument('--m-levels', dest='m_levels', type=int, nargs='+', default=[8, 16, 32],
                               help='Divisiones de b por nivel (default: 8 16 32)')
    parser_lshape.add_argument('--length', type=float, help='Longitud de los brazos (default: 8b)')

    parser_mesh = subparsers.add_parser('export-mesh', parents=[common], help='Listado de la malla')
    parser_mesh.add_argument('--matrix', help='Volcar también K en formato de coordenadas')

    return parser


COMMANDS = {
    'solve': cmd_solve,
    'detect': cmd_detect,
    'sweep': cmd_sweep,
    'threshold': cmd_threshold,
    'converge': cmd_converge,
    'probe-essential': cmd_probe_essential,
    'oracle': cmd_oracle,
    'export-eigenfunction': cmd_export_eigenfunction,
    'stability-constant': cmd_stability_constant,
    'lshape': cmd_lshape,
    'export-mesh': cmd_export_mesh,
}


def error_record(error: BaseException, config: Optional[RunConfig]) -> str:
    """Registro JSON de un fallo"""
    return dumps({
        'error': type(error).__name__,
        'message': str(error),
        'config': config.to_dict() if config is not None else None,
    })


# Main
def main(argv: Optional[List[str]] = None) -> int:
    """Función principal del CLI; devuelve el código de salida"""
    parser = build_parser()

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    # Si no se especifica comando, mostrar ayuda
    if not args.command:
        parser.print_help()
        return 0

    setup_logging(verbose=args.verbose, quiet=args.quiet)

    config = None
    try:
        cli_values = {name: getattr(args, name, None) for name in CONFIG_FLAGS}
        config = resolve_config(args.command, cli_values, args.config)
        logger.debug(f"Configuración: {config.to_dict()}")
        return COMMANDS[args.command](args, config)
    except KeyboardInterrupt:
        print("\n\n⚠️  Proceso interrumpido por el usuario")
        return 130
    except InputError as e:
        logger.error(f"❌ Entrada no válida: {e}")
        print(error_record(e, config))
        return 2
    except NumericalError as e:
        logger.error(f"❌ Fallo numérico: {e}")
        print(error_record(e, config))
        return 1
    except BandaError as e:
        logger.error(f"❌ Error: {e}")
        print(error_record(e, config))
        return 1
    except Exception as e:
        logging.error(f"❌ Error inesperado: {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        return 1


if __name__ == '__main__':
    sys.exit(main())
