import json
import subprocess
import sys
from pathlib import Path

from pilotwave import kernels

BENCH = Path(__file__).parent.parent / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs_for_every_backend():
    res = subprocess.run([sys.executable, str(BENCH), "--particles", "200", "--repeat", "1",
                          "--json"], capture_output=True, text=True, check=True)
    rows = json.loads(res.stdout)
    assert len(rows) == 4
    for row in rows:
        for backend in kernels.AVAILABLE:
            assert row[backend] > 0
