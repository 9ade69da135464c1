import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def test_benchmark_smoke():
    r = subprocess.run(
        [sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"), "--repeat", "1"],
        capture_output=True, text=True, check=False, timeout=300,
    )
    assert r.returncode == 0, r.stderr
    lines = r.stdout.strip().splitlines()
    assert lines[0].split()[0] == "kernel"
    names = {ln.split()[0] for ln in lines[1:]}
    assert {"poly_eval", "newton_poly", "label_components", "angle_increments"} <= names
