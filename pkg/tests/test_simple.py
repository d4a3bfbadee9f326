#!/usr/bin/env python3
"""
Simple test script for a quick validation without the full unittest suites
Checks imports, a few core identities and the CLI entry point
"""

import sys
import subprocess
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))


def test_imports():
    """Test that all imports work"""
    print("Testing imports...")
    try:
        import joblib
        import mpmath
        import numpy
        import rich
        import scipy
        import yaml
        from src import SpinCoefficients, build_frame, power_law_spectrum
        print("✓ All imports successful")
        return True
    except ImportError as e:
        print(f"✗ Import failed: {e}")
        return False


def test_harmonics():
    """Test a Gram residual and the zonal pole value"""
    print("\nTesting harmonics...")
    try:
        import math
        from src.harmonics import gram_residual, pole_functional, zonal_coefficients

        residual = gram_residual(2, 12)
        assert residual < 1e-9, f"gram residual {residual:.3e}"
        print(f"✓ Gram residual at s=2, L=12: {residual:.2e}")

        value = complex(pole_functional(zonal_coefficients(2, 7))).real
        assert abs(value - 15 / (4 * math.pi)) < 1e-12
        print("✓ Zonal harmonic pole value is (2l+1)/4pi")
        return True
    except Exception as e:
        print(f"✗ Harmonics test failed: {e}")
        return False


def test_filter():
    """Test the needlet filter partition of unity"""
    print("\nTesting needlet filter...")
    try:
        from src.constants import DEFAULT_A
        from src.filters import build_filter, daubechies_bounds

        lower, upper = daubechies_bounds(build_filter(DEFAULT_A))
        assert abs(lower - 1.0) < 1e-9 and abs(upper - 1.0) < 1e-9
        print(f"✓ Daubechies bounds A={lower:.12f} B={upper:.12f}")
        return True
    except Exception as e:
        print(f"✗ Filter test failed: {e}")
        return False


def test_frame():
    """Test a small frame and its bounds"""
    print("\nTesting frame...")
    try:
        from src.constants import DEFAULT_A
        from src.frame import build_frame, frame_bound_estimate

        frame = build_frame(DEFAULT_A, 0.3, 2, 10)
        print(f"✓ Built frame with {frame.n_elements} elements over scales {frame.j_range}")
        bounds = frame_bound_estimate(frame, 2, 1, per_scale=False)
        assert 0.0 < bounds.a_est <= 1.0 <= bounds.b_est
        print(f"✓ Frame bounds A={bounds.a_est:.6f} B={bounds.b_est:.6f}")
        return True
    except Exception as e:
        print(f"✗ Frame test failed: {e}")
        return False


def test_cli_exists():
    """Test that CLI can be invoked"""
    print("\nTesting CLI invocation...")
    try:
        script_path = Path(__file__).parent.parent / "spinlet.py"

        if not script_path.exists():
            print("✗ spinlet.py not found")
            return False

        result = subprocess.run(
            [sys.executable, str(script_path), "--version"],
            capture_output=True,
            timeout=30,
            text=True
        )

        if result.returncode == 0 and "spinlet" in result.stdout:
            print(f"✓ {result.stdout.strip()}")
            return True
        print(f"✗ --version returned {result.returncode}: {result.stderr[:200]}")
        return False

    except subprocess.TimeoutExpired:
        print("✗ CLI invocation timed out")
        return False
    except Exception as e:
        print(f"✗ CLI test failed: {e}")
        return False


def test_file_structure():
    """Test that required files exist"""
    print("\nTesting file structure...")
    required_files = [
        "spinlet.py",
        "example_config.yaml",
        "pyproject.toml",
        "README.md"
    ]

    all_exist = True
    for filename in required_files:
        path = Path(__file__).parent.parent / filename
        if path.exists():
            print(f"✓ {filename} exists")
        else:
            print(f"✗ {filename} missing")
            all_exist = False

    return all_exist


def main():
    """Run all simple tests"""
    print("=" * 60)
    print("spinlet Simple Test Suite")
    print("=" * 60)

    tests = [
        ("File Structure", test_file_structure),
        ("Imports", test_imports),
        ("Harmonics", test_harmonics),
        ("Needlet Filter", test_filter),
        ("Frame", test_frame),
        ("CLI Invocation", test_cli_exists),
    ]

    results = []
    for name, test_func in tests:
        try:
            result = test_func()
            results.append((name, result))
        except Exception as e:
            print(f"\n✗ {name} test crashed: {e}")
            results.append((name, False))

    print("\n" + "=" * 60)
    print("Test Summary")
    print("=" * 60)

    passed = sum(1 for _, result in results if result)
    total = len(results)

    for name, result in results:
        status = "✓ PASS" if result else "✗ FAIL"
        print(f"{status}: {name}")

    print(f"\nTotal: {passed}/{total} tests passed")

    if passed == total:
        print("\n✅ All tests passed!")
        return 0
    else:
        print(f"\n❌ {total - passed} test(s) failed")
        return 1


if __name__ == '__main__':
    sys.exit(main())
