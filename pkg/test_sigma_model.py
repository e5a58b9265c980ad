#!/usr/bin/env python3
"""
Test del perfil σ: evaluación, carga de tablas y argumentos del CLI
"""
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src import sigma_model
from src.errors import InputError, NonMonotoneSamples, OutOfDomain, ParseError, RangeMismatch
from src.sigma_model import (
    Constant, PiecewiseConstant, SampledTable, breakpoints, describe, edge_pieces,
    is_nonnegative, load_profile, parse_sigma_argument, scaled, sup_norm
)


def write_profile(text: str) -> Path:
    handle = tempfile.NamedTemporaryFile('w', suffix='.txt', delete=False, encoding='utf-8')
    handle.write(text)
    handle.close()
    return Path(handle.name)


def test_eval():
    print("\n" + "="*70)
    print("TEST 1: Evaluación de perfiles")
    print("="*70)

    assert sigma_model.eval(Constant(-0.5, 1.0), 0.3) == -0.5

    piecewise = PiecewiseConstant((0.5,), (1.0, 2.0), 1.0)
    assert sigma_model.eval(piecewise, 0.25) == 1.0
    assert sigma_model.eval(piecewise, 0.5) == 2.0
    assert sigma_model.eval(piecewise, 1.0) == 2.0

    table = SampledTable((0.0, 1.0), (0.0, 2.0))
    assert table.d == 1.0
    assert sigma_model.eval(table, 0.5) == pytest.approx(1.0)
    assert sigma_model.eval(table, 0.0) == 0.0

    for y in (-0.1, 1.1):
        with pytest.raises(OutOfDomain):
            sigma_model.eval(table, y)

    print("✅ Evaluación correcta")


def test_invalid_profiles():
    print("\n" + "="*70)
    print("TEST 2: Perfiles no válidos")
    print("="*70)

    with pytest.raises(InputError):
        PiecewiseConstant((0.5,), (1.0,), 1.0)

    with pytest.raises(NonMonotoneSamples):
        PiecewiseConstant((0.6, 0.4), (1.0, 2.0, 3.0), 1.0)

    with pytest.raises(NonMonotoneSamples):
        SampledTable((0.0, 0.5, 0.5, 1.0), (1.0, 1.0, 1.0, 1.0))

    with pytest.raises(InputError):
        SampledTable((0.0,), (1.0,))

    # d obligatorio, finito y positivo
    for d in (math.inf, 0.0, -1.0):
        with pytest.raises(InputError):
            Constant(1.0, d)
    with pytest.raises(OutOfDomain):
        sigma_model.eval(Constant(1.0, 1.0), 1.5)

    # Puntos de corte dentro de (0, d)
    for cut in (0.0, 1.0, 1.5):
        with pytest.raises(RangeMismatch):
            PiecewiseConstant((cut,), (1.0, 2.0), 1.0)

    # Una tabla debe empezar en y = 0
    with pytest.raises(RangeMismatch):
        SampledTable((0.2, 1.0), (1.0, 1.0))

    print("✅ Errores detectados")


def test_helpers():
    print("\n" + "="*70)
    print("TEST 3: Norma, escalado y descripción")
    print("="*70)

    table = SampledTable((0.0, 0.5, 1.0), (1.0, -3.0, 2.0))
    assert sup_norm(table) == 3.0
    assert sup_norm(Constant(-2.0, 1.0)) == 2.0
    assert not is_nonnegative(table)
    assert is_nonnegative(Constant(0.0, 1.0))

    doubled = scaled(table, 2.0)
    assert doubled.values == (2.0, -6.0, 4.0)
    assert scaled(Constant(1.5, 1.0), -2.0) == Constant(-3.0, 1.0)

    assert describe(Constant(0.5, 1.0)) == {'type': 'constant', 'value': 0.5}
    assert describe(table)['type'] == 'table'
    assert breakpoints(Constant(1.0, 1.0)) == ()

    pieces = edge_pieces(PiecewiseConstant((0.3, 0.6), (1.0, 2.0, 3.0), 1.0), 0.5, 0.0)
    assert pieces == [(0.0, 0.3), (0.3, 0.5)]

    print("✅ Auxiliares correctos")


def test_load_profile():
    print("\n" + "="*70)
    print("TEST 4: Carga de tablas desde fichero")
    print("="*70)

    path = write_profile("# y sigma\n0 1\n\n0.5, 2   # medio\n1 3\n")
    try:
        table = load_profile(path, 1.0)
    finally:
        path.unlink()

    assert table.ys == (0.0, 0.5, 1.0)
    assert table.values == (1.0, 2.0, 3.0)
    print(f"✓ Tabla: {table}")

    cases = [
        ("0 1\n0.7 1\n0.5 1\n1 1\n", NonMonotoneSamples),
        ("0 1\n0.9 1\n", RangeMismatch),
        ("0.1 1\n1 1\n", RangeMismatch),
        ("0 1 2\n1 1\n", ParseError),
        ("0 abc\n1 1\n", ParseError),
        ("0 1\n", ParseError),
    ]
    for text, error in cases:
        path = write_profile(text)
        try:
            with pytest.raises(error):
                load_profile(path, 1.0)
        finally:
            path.unlink()
        print(f"✓ {error.__name__}")

    with pytest.raises(ParseError):
        load_profile("/no/existe/perfil.txt", 1.0)

    print("\n✅ Carga de tablas completada")


def test_parse_sigma_argument():
    print("\n" + "="*70)
    print("TEST 5: Argumentos --sigma / --sigma-file")
    print("="*70)

    assert parse_sigma_argument(None, None, 1.0) == Constant(0.0, 1.0)
    assert parse_sigma_argument(-0.25, None, 1.0) == Constant(-0.25, 1.0)

    with pytest.raises(InputError):
        parse_sigma_argument(1.0, "perfil.txt", 1.0)

    path = write_profile("0 0\n2 1\n")
    try:
        profile = parse_sigma_argument(None, path, 2.0)
    finally:
        path.unlink()
    assert isinstance(profile, SampledTable)
    assert profile.d == 2.0

    print("✅ Argumentos resueltos")

def test_eval_bounded_by_sup_norm():
    print("\n" + "="*70)
    print("TEST 6: |σ(y)| <= ‖σ‖∞ en perfiles aleatorios")
    print("="*70)

    rng = np.random.default_rng(2024)

    for trial in range(60):
        d = float(rng.uniform(0.25, 3.0))
        kind = trial % 3
        if kind == 0:
            profile = Constant(float(rng.normal(scale=5.0)), d)
        elif kind == 1:
            cuts = np.sort(rng.uniform(0.05 * d, 0.95 * d, size=int(rng.integers(1, 5))))
            cuts = tuple(np.unique(cuts))
            profile = PiecewiseConstant(cuts, tuple(rng.normal(scale=5.0, size=len(cuts) + 1)), d)
        else:
            interior = np.unique(rng.uniform(0.05 * d, 0.95 * d, size=int(rng.integers(0, 6))))
            ys = (0.0, *interior, d)
            profile = SampledTable(ys, tuple(rng.normal(scale=5.0, size=len(ys))))

        bound = sup_norm(profile)
        for y in np.linspace(0.0, profile.d, 97):
            assert abs(sigma_model.eval(profile, float(y))) <= bound * (1 + 1e-12)

    print("✅ 60 perfiles dentro de su norma del supremo")



if __name__ == "__main__":
    test_eval()
    test_invalid_profiles()
    test_helpers()
    test_load_profile()
    test_parse_sigma_argument()
    test_eval_bounded_by_sup_norm()

    print("\n" + "="*70)
    print("✅ TODOS LOS TESTS PASARON")
    print("="*70)
