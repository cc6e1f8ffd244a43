"""
Driving the command-line tool
=============================

The `invacheck` command reads a JSON problem file. This script writes one,
runs the four commands through `invacheck.cli.main`, and prints the
human-readable digests. The same runs from a shell look like

    invacheck check problem.json --summary
    invacheck certify problem.json --seed 3 --out report.json
"""

import json
import tempfile
from pathlib import Path

from invacheck.cli import main

problem = {
    "name": "stretched disk",
    "dimension": 2,
    "system": {"kind": "discrete", "dynamics": ["1.1*x1", "0.5*x2"]},
    "set": {"kind": "ellipsoid", "Q": [[1, 0], [0, 1]]},
    "certificate": {"beta": 1.0},
}

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "problem.json"
    path.write_text(json.dumps(problem))
    for command in ("probe", "check", "certify", "falsify"):
        print(f"$ invacheck {command} problem.json --summary")
        code = main([command, str(path), "--summary"])
        print(f"(exit {code})\n")
