#!/usr/bin/env python3
"""
Test del CLI: subcomandos, formatos de salida y códigos de salida
"""
import io
import json
import tempfile
from contextlib import redirect_stdout
from pathlib import Path

import banda
from src.errors import NoConvergence
from src.oracles import strip_threshold


def run(*argv):
    """Ejecuta el CLI capturando stdout; devuelve (código, salida)"""
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = banda.main(['-q', *argv])
    return code, buffer.getvalue()


def last_record(output: str) -> dict:
    """Último objeto JSON de nivel superior impreso en stdout"""
    start = output.rfind("\n{")
    return json.loads(output[start + 1:] if start >= 0 else output)


def test_oracle_command():
    print("\n" + "="*70)
    print("TEST 1: banda oracle")
    print("="*70)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "oracle.json"
        code, output = run('oracle', '--name', 'strip-threshold', '--d', '1', '--out', str(out))

        assert code == 0
        record = last_record(output)
        assert record == {'name': 'strip-threshold', 'value': strip_threshold(1.0), 'provenance': 'ClosedForm'}

        saved = json.loads(out.read_text(encoding='utf-8'))
        assert saved['value'] == strip_threshold(1.0)
        assert saved['config']['command'] == 'oracle'

    print(f"✓ {output.strip()}")
    print("\n✅ Oráculo por CLI")


def test_solve_reproducible():
    print("\n" + "="*70)
    print("TEST 2: banda solve reproducible byte a byte")
    print("="*70)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "solve.json"
        args = ('solve', '--d', '1', '--h', '0.25', '--L', '3', '--k', '3', '--sigma', '0.5', '--out', str(out))

        assert run(*args)[0] == 0
        first = out.read_bytes()
        assert run(*args)[0] == 0
        second = out.read_bytes()

    assert first == second

    payload = json.loads(first.decode('utf-8'))
    assert len(payload['eigenvalues']) == 3
    assert payload['config']['sigma'] == 0.5
    assert payload['config']['seed'] == 12345
    assert payload['threshold'] == strip_threshold(1.0)
    assert payload['swap_symmetry_residual'] < 1e-6

    print("✅ Salidas idénticas con la misma configuración")


def test_input_errors_exit_2():
    print("\n" + "="*70)
    print("TEST 3: Entradas no válidas → código 2")
    print("="*70)

    code, output = run('solve', '--d', '1', '--h', '0.3', '--L', '6')
    assert code == 2
    record = last_record(output)
    assert record['error'] == 'NonIntegerPitch'
    print("✓ h no divide a d")

    with tempfile.TemporaryDirectory() as tmp:
        profile = Path(tmp) / "sigma.txt"
        profile.write_text("0 1\n1 1\n", encoding='utf-8')
        code, _ = run('solve', '--sigma', '1', '--sigma-file', str(profile), '--h', '0.25', '--L', '3')
    assert code == 2
    print("✓ --sigma y --sigma-file a la vez")

    assert run('frobnicate')[0] == 2
    assert run('oracle', '--name', 'no-existe')[0] == 2
    print("✓ Comando u opción desconocidos")

    print("\n✅ Errores de entrada detectados")


def test_numerical_error_exit_1():
    print("\n" + "="*70)
    print("TEST 4: Fallo numérico → código 1")
    print("="*70)

    def failing(args, config):
        raise NoConvergence("sin convergencia tras 3 desplazamientos")

    original = banda.COMMANDS['solve']
    banda.COMMANDS['solve'] = failing
    try:
        code, output = run('solve', '--h', '0.25', '--L', '3')
    finally:
        banda.COMMANDS['solve'] = original

    assert code == 1
    record = last_record(output)
    assert record['error'] == 'NoConvergence'
    assert record['config']['h'] == 0.25

    print("✅ Registro de error con la configuración")


def test_sweep_csv_with_sidecar():
    print("\n" + "="*70)
    print("TEST 5: banda sweep en CSV")
    print("="*70)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "sweep.csv"
        code, _ = run('sweep', '--h', '0.25', '--L', '3', '--values', '1,0', '--no-verdict',
                      '--format', 'csv', '--out', str(out))
        assert code == 0

        lines = out.read_text(encoding='utf-8').splitlines()
        sidecar = json.loads(Path(str(out) + ".json").read_text(encoding='utf-8'))

    assert lines[0].startswith("sigma,E0")
    assert len(lines) == 3
    assert lines[1].startswith("0,")
    assert sidecar['E0_nonincreasing'] is True
    assert sidecar['config']['format'] == 'csv'

    print(f"✓ {lines[0]}")
    print("\n✅ CSV y fichero hermano escritos")


def test_export_eigenfunction():
    print("\n" + "="*70)
    print("TEST 6: banda export-eigenfunction")
    print("="*70)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "phi.csv"
        code, _ = run('export-eigenfunction', '--h', '0.25', '--L', '3', '--k', '2', '--index', '1',
                      '--out', str(out))
        assert code == 0

        lines = out.read_text(encoding='utf-8').splitlines()
        sidecar = json.loads(Path(str(out) + ".json").read_text(encoding='utf-8'))

        assert run('export-eigenfunction', '--h', '0.25', '--L', '3', '--k', '2', '--index', '2',
                   '--out', str(out))[0] == 2

    assert lines[0] == "x,y,value"
    assert sidecar['index'] == 1
    assert len(lines) - 1 == sidecar['vertices']

    print(f"✓ {len(lines) - 1} vértices exportados")


def test_export_mesh():
    print("\n" + "="*70)
    print("TEST 7: banda export-mesh")
    print("="*70)

    with tempfile.TemporaryDirectory() as tmp:
        mesh_path = Path(tmp) / "mesh.txt"
        matrix_path = Path(tmp) / "K.txt"
        code, _ = run('export-mesh', '--d', '1', '--h', '1', '--L', '2',
                      '--out', str(mesh_path), '--matrix', str(matrix_path))
        assert code == 0

        header = mesh_path.read_text(encoding='utf-8').splitlines()[0]
        matrix = matrix_path.read_text(encoding='utf-8')

    assert header == "# band 7 6 6"
    assert matrix == "2 2\n0 0 1\n1 1 4\n"

    print("✅ Malla y matriz exportadas")


def test_config_file():
    print("\n" + "="*70)
    print("TEST 8: --config con flags que lo sobrescriben")
    print("="*70)

    with tempfile.TemporaryDirectory() as tmp:
        config_path = Path(tmp) / "run.env"
        config_path.write_text("h = 0.25\nL = 3\nk = 2\nsigma = 1\n", encoding='utf-8')
        out = Path(tmp) / "solve.json"

        code, _ = run('solve', '--config', str(config_path), '--k', '3', '--out', str(out))
        assert code == 0
        payload = json.loads(out.read_text(encoding='utf-8'))

    assert payload['config']['h'] == 0.25
    assert payload['config']['k'] == 3
    assert payload['config']['sigma'] == 1.0
    assert len(payload['eigenvalues']) == 3

    print("✅ Configuración combinada")

def test_threshold_reads_config_file():
    print("\n" + "="*70)
    print("TEST 9: threshold toma h, L, bracket y width del fichero --config")
    print("="*70)

    calls = []

    def fake_search(d, **kwargs):
        calls.append(kwargs)
        return {
            'gamma_star': -1.5, 'gamma_lo': -1.52, 'gamma_hi': -1.48,
            'gamma_star_times_d': -1.5, 'repulsion_bound': -1.5707963267948966,
            'history': [{'gamma': -1.5, 'verdict': 'No'}],
        }

    original = banda.gamma_threshold_search
    banda.gamma_threshold_search = fake_search
    try:
        with tempfile.TemporaryDirectory() as tmp:
            config_path = Path(tmp) / "run.env"
            config_path.write_text("h = 0.25\nL = 4\nbracket = -20 0\nwidth = 0.1\n", encoding='utf-8')
            out = Path(tmp) / "threshold.json"

            code, _ = run('threshold', '--config', str(config_path), '--out', str(out))
            assert code == 0
            payload = json.loads(out.read_text(encoding='utf-8'))

            code, _ = run('threshold', '--d', '1', '--out', str(out))
            assert code == 0
    finally:
        banda.gamma_threshold_search = original

    from_file, defaults = calls
    assert from_file['h'] == 0.25
    assert from_file['L'] == 4.0
    assert from_file['bracket'] == (-20.0, 0.0)
    assert from_file['width'] == 0.1
    assert payload['config']['h'] == from_file['h']
    assert payload['config']['L'] == from_file['L']

    # Sin h ni L explícitos la búsqueda usa d/8 y 8d
    assert defaults['h'] is None and defaults['L'] is None
    assert defaults['bracket'] is None and defaults['width'] is None

    print("✅ La búsqueda recibe lo que dice la configuración")



if __name__ == "__main__":
    test_oracle_command()
    test_solve_reproducible()
    test_input_errors_exit_2()
    test_numerical_error_exit_1()
    test_sweep_csv_with_sidecar()
    test_export_eigenfunction()
    test_export_mesh()
    test_config_file()
    test_threshold_reads_config_file()

    print("\n" + "="*70)
    print("✅ TODOS LOS TESTS PASARON")
    print("="*70)
