"""Run the acceptance suite and print only the PASS/FAIL lines."""

import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-s", "tests/test_acceptance.py", *sys.argv[1:]],
                      cwd=root, capture_output=True, text=True)
lines = [ln for ln in proc.stdout.splitlines() if ln.startswith("C") and (" PASS:" in ln or " FAIL:" in ln)]
print("\n".join(lines) if lines else proc.stdout[-2000:])
sys.exit(proc.returncode)
