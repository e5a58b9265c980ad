#!/usr/bin/env python3
"""
Test del análisis: veredictos, barridos, monotonía, escalado y caché
"""
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.analysis import (
    Verdict, bracketing_check, convergence_study, detect_bound_state,
    eigenvector_localization, essential_spectrum_probe, gamma_threshold_search,
    localization_measure, lshape_direct_solve, rectangle_benchmark, ritz_monotonicity,
    sigma_sweep, solve_spectrum, stability_constant_estimate, swap_symmetry_residual
)
from src.cache import SolveCache
from src.errors import BracketInvalid, InputError
from src.geometry import DomainSpec, build_mesh
from src.oracles import strip_threshold
from src.sigma_model import Constant

THRESHOLD = strip_threshold(1.0)


def small_spec(**overrides) -> DomainSpec:
    params = {'d': 1.0, 'L': 3.0, 'h': 0.25}
    params.update(overrides)
    return DomainSpec(**params)


def test_ground_state_below_threshold():
    print("\n" + "="*70)
    print("TEST 1: Estado fundamental con σ = 0")
    print("="*70)

    result = solve_spectrum(DomainSpec(d=1.0, L=4.0, h=0.125), Constant(0.0, 1.0), k=3)
    E0 = result.eigenvalues[0]

    print(f"E0 = {E0:.8f}, umbral = {THRESHOLD:.8f}")
    assert E0 < THRESHOLD
    assert swap_symmetry_residual(result) < 1e-6
    assert eigenvector_localization(result, 4.0) > 0.9

    metadata = result.metadata
    assert metadata['threshold'] == THRESHOLD
    assert metadata['free_dofs'] == result.form.dimension
    assert metadata['form_lower_bound'] <= E0

    print("\n✅ Estado ligado simétrico y localizado")


def test_localization_measure_edges():
    print("\n" + "="*70)
    print("TEST 2: Medida de localización en casos triviales")
    print("="*70)

    mesh = build_mesh(small_spec())
    lumped = np.ones(mesh.num_vertices)

    assert localization_measure(mesh, lumped, np.zeros(mesh.num_vertices), 4.0) == 0.0
    assert localization_measure(mesh, lumped, np.ones(mesh.num_vertices), 100.0) == pytest.approx(1.0)

    u = (mesh.vertices.sum(axis=1) > 4.0).astype(float)
    assert localization_measure(mesh, lumped, u, 4.0) == 0.0

    print("✅ Casos triviales correctos")


def test_detect_bound_state_yes():
    print("\n" + "="*70)
    print("TEST 3: Veredicto Yes con σ = 0")
    print("="*70)

    verdict = detect_bound_state(DomainSpec(d=1.0, L=4.0, h=0.125), Constant(0.0, 1.0))

    print(f"Veredicto: {verdict.exists.value}, E0≈{verdict.E0_extrapolated:.8f}, "
          f"orden {verdict.observed_order:.3f}, deriva {verdict.truncation_drift:.1e}")
    assert verdict.exists == Verdict.YES
    assert verdict.gap_to_threshold > verdict.margin
    assert verdict.truncation_drift < 1e-4
    assert verdict.localization > 0.5
    assert len(verdict.levels) == 4
    assert verdict.to_dict()['exists'] == 'Yes'
    assert verdict.reasons == []

    print("\n✅ Estado ligado certificado")


def test_sigma_sweep():
    print("\n" + "="*70)
    print("TEST 4: Barrido en σ constante")
    print("="*70)

    report = sigma_sweep(small_spec(), [1.0, -1.0, 0.0], with_verdict=False)
    sigmas = [row['sigma'] for row in report['rows']]

    assert sigmas == [-1.0, 0.0, 1.0]
    assert report['E0_nonincreasing'] is True
    assert report['E0_strictly_decreasing'] is True
    assert all('E2' in row for row in report['rows'])

    empty = sigma_sweep(small_spec(), [], with_verdict=False)
    assert [row['sigma'] for row in empty['rows']] == [0.0]

    for row in report['rows']:
        print(f"✓ σ={row['sigma']:>5}: E0 = {row['E0']:.8f}")

    print("\n✅ E0 decrece con σ")


def test_ritz_and_bracketing():
    print("\n" + "="*70)
    print("TEST 5: Monotonía de Ritz y horquilla Dirichlet/Neumann")
    print("="*70)

    ritz = ritz_monotonicity(small_spec(), [0.5, -2.0, 0.0, 2.0], k=3)
    assert ritz['sigma'] == [-2.0, 0.0, 0.5, 2.0]
    assert ritz['holds'], ritz['violations']

    for sigma in (0.0, 1.0, -1.0):
        report = bracketing_check(small_spec(), Constant(sigma, 1.0), k=3)
        assert report['holds']
        assert all(n <= dd for dd, n in zip(report['dirichlet'], report['neumann']))
        print(f"✓ σ={sigma}: Neumann {report['neumann'][0]:.6f} <= Dirichlet {report['dirichlet'][0]:.6f}")

    print("\n✅ Monotonía y horquilla verificadas")


def test_dilation_covariance():
    print("\n" + "="*70)
    print("TEST 6: Covarianza bajo dilatación")
    print("="*70)

    for gamma in (0.0, 1.0, -2.0):
        unit = solve_spectrum(DomainSpec(d=1.0, L=3.0, h=0.25), Constant(gamma, 1.0), k=3)
        double = solve_spectrum(DomainSpec(d=2.0, L=6.0, h=0.5), Constant(gamma / 2, 2.0), k=3)

        assert double.eigenvalues * 4 == pytest.approx(unit.eigenvalues, rel=1e-8)
        print(f"✓ γ={gamma}: E(d=1) = {unit.eigenvalues[0]:.10f} = 4·E(d=2)")

    print("\n✅ E(td, γ/t) = E(d, γ)/t²")


def test_convergence_study():
    print("\n" + "="*70)
    print("TEST 7: Estudio de convergencia en h")
    print("="*70)

    report = convergence_study(small_spec(), Constant(0.0, 1.0), levels=3)
    energies = [r['E0'] for r in report.records]

    assert len(energies) == 3
    assert energies[0] >= energies[1] >= energies[2]
    assert report.observed_order is not None
    assert report.extrapolated < THRESHOLD
    assert report.oracle == THRESHOLD
    assert report.to_dict()['oracle_name'] == 'strip_threshold'

    with pytest.raises(InputError):
        convergence_study(small_spec(), Constant(0.0, 1.0), levels=1)

    print(f"✓ E0: {energies}, orden {report.observed_order:.3f}")


def test_rectangle_benchmark():
    print("\n" + "="*70)
    print("TEST 8: Rectángulo Dirichlet")
    print("="*70)

    report = rectangle_benchmark(1.0, 2.0, (8, 16, 32))

    print(f"Extrapolado {report.extrapolated:.10f}, exacto {report.oracle:.10f}, "
          f"orden {report.observed_order:.3f}")
    assert report.relative_error < 1e-3
    assert 1.7 <= report.observed_order <= 2.3

    print("\n✅ Orden 2 en dominio convexo")


def test_stability_constant():
    print("\n" + "="*70)
    print("TEST 9: Constante de estabilidad")
    print("="*70)

    spec = small_spec()
    report = stability_constant_estimate(spec)
    c = report['c_lower']

    assert c > 0
    assert report['trace_norm'] > 0

    for sigma in (c / 2, -c / 2):
        E0 = solve_spectrum(spec, Constant(sigma, 1.0), k=1).eigenvalues[0]
        assert E0 < report['threshold']
        print(f"✓ σ={sigma:+.4f}: E0 = {E0:.6f} < umbral")

    print(f"\n✅ c >= {c:.6f}")


def test_lshape_scaling():
    print("\n" + "="*70)
    print("TEST 10: Escalado de la guía en L")
    print("="*70)

    unit = lshape_direct_solve(1.0, 0.25, 3.0)
    double = lshape_direct_solve(2.0, 0.5, 6.0)

    assert unit == pytest.approx(4 * double, rel=1e-8)
    assert np.pi ** 2 / 2 < unit < np.pi ** 2 * 1.2

    print(f"✅ λ(b=1) = {unit:.8f} = 4·λ(b=2)")


def test_essential_probe():
    print("\n" + "="*70)
    print("TEST 11: Sonda del espectro esencial")
    print("="*70)

    report = essential_spectrum_probe(1.0, Constant(0.0, 1.0), [4.0, 2.0, 3.0], 0.25)

    assert [row['L'] for row in report['rows']] == [2.0, 3.0, 4.0]
    assert report['counts_nondecreasing']
    assert report['E1_nonincreasing']
    assert all(row['E1'] >= THRESHOLD for row in report['rows'])

    with pytest.raises(InputError):
        essential_spectrum_probe(1.0, Constant(0.0, 1.0), [2.0, 3.0], 0.25)

    for row in report['rows']:
        print(f"✓ L={row['L']}: {row['count']} autovalores en la ventana, E1 = {row['E1']:.6f}")


def test_threshold_search_invalid_bracket():
    print("\n" + "="*70)
    print("TEST 12: Intervalo de bisección no válido")
    print("="*70)

    with pytest.raises(BracketInvalid):
        gamma_threshold_search(1.0, bracket=(0.0, -1.0))

    # γ = -0.01 todavía tiene estado ligado: el extremo inferior no da No
    with pytest.raises(BracketInvalid):
        gamma_threshold_search(1.0, bracket=(-0.01, 0.0), h=0.25, L=4.0)

    print("✅ BracketInvalid detectado")


def test_cache_round_trip():
    print("\n" + "="*70)
    print("TEST 13: Caché de solves")
    print("="*70)

    with tempfile.TemporaryDirectory() as tmp:
        cache = SolveCache(tmp)
        first = solve_spectrum(small_spec(), Constant(0.5, 1.0), k=3, cache=cache)
        assert len(list(Path(tmp).glob("*.npz"))) == 1

        second = solve_spectrum(small_spec(), Constant(0.5, 1.0), k=3, cache=cache)
        assert np.array_equal(first.eigenvalues, second.eigenvalues)
        assert np.array_equal(first.eigenvectors, second.eigenvectors)
        assert second.solver == first.solver
        assert second.metadata['free_dofs'] == first.metadata['free_dofs']

    print("✅ Resultados recuperados de la caché")


if __name__ == "__main__":
    test_ground_state_below_threshold()
    test_localization_measure_edges()
    test_detect_bound_state_yes()
    test_sigma_sweep()
    test_ritz_and_bracketing()
    test_dilation_covariance()
    test_convergence_study()
    test_rectangle_benchmark()
    test_stability_constant()
    test_lshape_scaling()
    test_essential_probe()
    test_threshold_search_invalid_bracket()
    test_cache_round_trip()

    print("\n" + "="*70)
    print("✅ TODOS LOS TESTS PASARON")
    print("="*70)
