import subprocess
import sys
from pathlib import Path

seed = "7"
data_dir = Path("data/synth")
reports_dir = Path("reports")

runs = [
    ("ud", ["--T", "1", "3", "5", "7", "9"]),
    ("var", ["--T", "1", "3", "5", "7", "9"]),
    ("ui", ["--T", "1", "3", "7"]),
]

py = sys.executable  # IMPORTANT: uses the current venv python

print("=" * 80)
print("SYNTH:", data_dir)
subprocess.run(
    [py, "-m", "src.app.cli", "synth", "--seed", seed, "--classes", "10", "--trials", "10", "--out", str(data_dir)],
    check=True,
)

for protocol, t_args in runs:
    print("\n" + "=" * 80)
    print("PROTOCOL:", protocol)
    cmd = [
        py, "-m", "src.app.cli", "evaluate",
        "--protocol", protocol,
        "--dataset", str(data_dir),
        "--seed", seed,
        "--reps", "100",
        "--out", str(reports_dir / f"{protocol}.json"),
        *t_args,
    ]
    subprocess.run(cmd, check=False)
