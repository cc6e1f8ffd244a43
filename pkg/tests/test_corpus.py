"""Regression sweep over tests/corpus: verdicts, oracle consistency, exact/numeric agreement."""

import functools
import json
from pathlib import Path

import numpy as np
import pytest

from invacheck import cli
from invacheck.oracle import falsify
from invacheck.problem import load

CORPUS = Path(__file__).resolve().parent / "corpus"
EXPECTED = json.loads((CORPUS / "expected.json").read_text())


def command_for(spec):
    return "certify" if spec.discrete else "check"


@functools.lru_cache(maxsize=None)
def sweep_one(name):
    """Run one corpus instance and return ``(spec, report, oracle escape or None)``."""
    path = CORPUS / f"{name}.json"
    spec = load(path)
    _, report = cli.run(command_for(spec), str(path))
    horizon = 50 if spec.discrete else 10.0
    escape = falsify(spec.set, spec.system, n_samples=1000, horizon=horizon, seed=0, box=spec.box)
    return spec, report, escape


def consistency_problems(name, spec, report, escape):
    """Violations of the sweep contract for one instance (empty when consistent)."""
    problems = []
    v = report["verdict"]
    if v["status"] == "VERIFIED" and escape is not None and escape.escaped:
        problems.append("VERIFIED but the oracle found an escape")
    if v["status"] == "FALSIFIED":
        rv = report["revalidation"]
        if spec.discrete:
            if not rv["step1_escape"]:
                problems.append("counterexample does not escape in one step")
        elif rv["trajectory_confirmed"] is not True and not any("boundary-tangential" in n for n in v["notes"]):
            problems.append("boundary violation not confirmed")
    fast = report.get("linear_fast_path")
    if fast and v["status"] != "INCONCLUSIVE" and fast["status"] != v["status"]:
        problems.append(f"exact path says {fast['status']}, numeric path says {v['status']}")
    return problems


def test_corpus_size():
    assert len(EXPECTED) >= 30
    assert {p.stem for p in CORPUS.glob("*.json")} - {"expected"} == set(EXPECTED)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus_instance(name):
    spec, report, escape = sweep_one(name)
    assert report["verdict"]["status"] == EXPECTED[name]
    assert consistency_problems(name, spec, report, escape) == []
