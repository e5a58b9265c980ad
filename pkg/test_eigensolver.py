#!/usr/bin/env python3
"""
Test del autosolver: caminos denso y disperso, reproducibilidad y errores
"""
import numpy as np
import pytest
from scipy import sparse

from src.eigensolver import (
    MatrixPair, ShiftInvertOperator, _lobpcg, choose_shift, dense_oracle,
    eigen_residual, smallest_eigenpairs
)
from src.errors import DimensionTooLarge, FactorizationFailure, InputError
from src.fem_assembly import assemble, build_dofmap
from src.geometry import DomainSpec, TruncationBC, build_mesh
from src.sigma_model import Constant


def band_form(sigma: float = 0.0, h: float = 0.125, L: float = 3.0):
    spec = DomainSpec(d=1.0, L=L, h=h)
    mesh = build_mesh(spec)
    return assemble(mesh, Constant(sigma, 1.0), build_dofmap(mesh, TruncationBC.DIRICHLET))


def test_diagonal_pair():
    print("\n" + "="*70)
    print("TEST 1: Par diagonal K = diag(2, 3), M = I")
    print("="*70)

    pair = MatrixPair(sparse.diags([2.0, 3.0]), sparse.identity(2))
    result = smallest_eigenpairs(pair, 2)

    assert result.eigenvalues.tolist() == pytest.approx([2.0, 3.0], rel=1e-14)
    assert result.solver == 'dense'
    assert np.allclose(np.abs(result.eigenvectors), np.eye(2))
    assert np.all(result.eigenvectors.max(axis=0) > 0)

    with pytest.raises(InputError):
        smallest_eigenpairs(pair, 0)

    with pytest.raises(InputError):
        smallest_eigenpairs(pair, 3)

    with pytest.raises(InputError):
        MatrixPair(sparse.identity(2), sparse.identity(3))

    print("✅ Par diagonal resuelto")


def test_sparse_matches_dense():
    print("\n" + "="*70)
    print("TEST 2: Shift-invert frente al oráculo denso")
    print("="*70)

    for sigma in (0.0, 1.0, -2.0):
        form = band_form(sigma)
        assert form.dimension > 64

        sparse_result = smallest_eigenpairs(form, 4)
        dense_result = dense_oracle(form)

        assert sparse_result.solver == 'shift-invert'
        assert sparse_result.eigenvalues == pytest.approx(dense_result.eigenvalues[:4], rel=1e-8)
        assert np.all(sparse_result.residuals <= 1e-8 * np.maximum(1.0, np.abs(sparse_result.eigenvalues)))
        assert sparse_result.shift < sparse_result.eigenvalues[0]

        print(f"✓ σ={sigma}: n={form.dimension}, E = {np.round(sparse_result.eigenvalues, 8)}")

    print("\n✅ Solvers coherentes")


def test_eigenvectors_m_orthonormal():
    print("\n" + "="*70)
    print("TEST 3: Autovectores M-ortonormales")
    print("="*70)

    form = band_form(0.5)
    result = smallest_eigenpairs(form, 5)
    V = result.eigenvectors

    gram = V.T @ (form.M @ V)
    assert np.allclose(gram, np.eye(5), atol=1e-8)

    for j in range(5):
        assert eigen_residual(form, result.eigenvalues[j], V[:, j]) == pytest.approx(result.residuals[j])
        assert V[np.argmax(np.abs(V[:, j])), j] > 0

    assert np.all(np.diff(result.eigenvalues) >= 0)
    print("✅ Ortonormalidad, signo y orden verificados")


def test_reproducible():
    print("\n" + "="*70)
    print("TEST 4: Reproducibilidad con semilla fija")
    print("="*70)

    form = band_form(0.0)
    first = smallest_eigenpairs(form, 3, seed=7)
    second = smallest_eigenpairs(form, 3, seed=7)

    assert np.array_equal(first.eigenvalues, second.eigenvalues)
    assert np.array_equal(first.eigenvectors, second.eigenvectors)
    assert first.seed == 7

    other = smallest_eigenpairs(form, 3, seed=8)
    assert other.eigenvalues == pytest.approx(first.eigenvalues, rel=1e-9)

    print("✅ Mismo resultado bit a bit")


def test_shift_below_spectrum():
    print("\n" + "="*70)
    print("TEST 5: Desplazamiento por debajo del espectro")
    print("="*70)

    for sigma in (0.0, 3.0):
        form = band_form(sigma)
        shift = choose_shift(form)
        lowest = dense_oracle(form).eigenvalues[0]
        assert shift < lowest
        print(f"✓ σ={sigma}: τ = {shift:.4g} < E0 = {lowest:.6g}")

    print("\n✅ Desplazamientos seguros")


def test_errors():
    print("\n" + "="*70)
    print("TEST 6: Errores del autosolver")
    print("="*70)

    big = MatrixPair(sparse.identity(2001), sparse.identity(2001))
    with pytest.raises(DimensionTooLarge):
        dense_oracle(big)

    singular = sparse.csr_matrix((4, 4))
    with pytest.raises(FactorizationFailure):
        ShiftInvertOperator(singular, sparse.identity(4, format='csr'), 0.0)

    print("✅ Errores detectados")


def test_lobpcg_fallback():
    print("\n" + "="*70)
    print("TEST 7: LOBPCG con precondicionador de Jacobi")
    print("="*70)

    n = 200
    pair = MatrixPair(sparse.diags(np.arange(1.0, n + 1)), sparse.identity(n))
    values, vectors, iterations = _lobpcg(pair, 3, 0.0, np.random.default_rng(0), 1e-8, 200)

    assert values == pytest.approx([1.0, 2.0, 3.0], rel=1e-6)
    assert vectors.shape == (n, 3)
    print(f"✓ Autovalores {values} en {iterations} iteraciones")


if __name__ == "__main__":
    test_diagonal_pair()
    test_sparse_matches_dense()
    test_eigenvectors_m_orthonormal()
    test_reproducible()
    test_shift_below_spectrum()
    test_errors()
    test_lobpcg_fallback()

    print("\n" + "="*70)
    print("✅ TODOS LOS TESTS PASARON")
    print("="*70)
