#!/usr/bin/env python3
"""Test de importaciones básicas"""

print("Probando importaciones...")

try:
    import numpy
    print(f"✓ numpy {numpy.__version__}")
except ImportError as e:
    print(f"✗ numpy: {e}")

try:
    import scipy
    from scipy.sparse.linalg import eigsh, lobpcg, splu
    print(f"✓ scipy {scipy.__version__}")
except ImportError as e:
    print(f"✗ scipy: {e}")

try:
    from dotenv import load_dotenv
    print("✓ python-dotenv")
except ImportError as e:
    print(f"✗ python-dotenv: {e}")

try:
    import markdown
    print("✓ markdown")
except ImportError as e:
    print(f"✗ markdown: {e}")

try:
    from tqdm import tqdm
    print("✓ tqdm")
except ImportError as e:
    print(f"✗ tqdm: {e}")

try:
    from src import analysis, eigensolver, fem_assembly, geometry, oracles, sigma_model
    print("✓ src")
except ImportError as e:
    print(f"✗ src: {e}")

print("\n✅ Todas las dependencias están instaladas correctamente")
