import copy
import json
import re
from pathlib import Path

import numpy as np
import pytest

from invacheck import cli
from invacheck.errors import NotPositiveDefinite, SchemaError
from invacheck.expr import VectorField, parse_expr
from invacheck.problem import SCHEMA, center_ellipsoid_helper, from_dict, validate

from conftest import TRI_B, TRI_DYN, TRI_G, TRI_H

ROOT = Path(__file__).resolve().parents[1]

TRI_DOC = {
    "name": "quadratic map on a triangle",
    "dimension": 2,
    "system": {"kind": "discrete", "dynamics": TRI_DYN},
    "set": {"kind": "polyhedron", "G": TRI_G.tolist(), "b": TRI_B.tolist()},
    "certificate": {"H": TRI_H.tolist()},
}
DISK_DOUBLING = {
    "dimension": 2,
    "system": {"kind": "discrete", "dynamics": ["2*x1", "2*x2"]},
    "set": {"kind": "ellipsoid", "Q": [[1, 0], [0, 1]]},
}


def write(tmp_path, doc, name="p.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def mutate(path, value, base=TRI_DOC):
    doc = copy.deepcopy(base)
    *head, last = path
    node = doc
    for k in head:
        node = node[k]
    if value is KeyError:
        del node[last]
    else:
        node[last] = value
    return doc


# each entry: document, expected JSON pointer
ADVERSARIAL = [
    (mutate(["dimension"], "2"), "/dimension"),
    (mutate(["dimension"], 0), "/dimension"),
    (mutate(["dimension"], 2.5), "/dimension"),
    (mutate(["system"], KeyError), ""),
    (mutate(["system", "kind"], "hybrid"), "/system/kind"),
    (mutate(["system", "dynamics"], "x1"), "/system/dynamics"),
    (mutate(["system", "dynamics"], ["x1"]), "/system/dynamics"),
    (mutate(["system", "dynamics"], ["x1", 3]), "/system/dynamics/1"),
    (mutate(["system", "dynamics"], ["x1 +", "x2"]), "/system/dynamics/0"),
    (mutate(["system", "dynamics"], ["x1", "x3"]), "/system/dynamics/1"),
    (mutate(["set", "kind"], "sphere"), "/set/kind"),
    (mutate(["set", "G"], [[1, "a"]]), "/set/G/0/1"),
    (mutate(["set", "G"], [[1, 2, 3], [1, 2, 3], [1, 2, 3]]), "/set/G/0"),
    (mutate(["set", "b"], [1, 2]), "/set/b"),
    (mutate(["set", "b"], KeyError), "/set"),
    (mutate(["mode"], "local"), "/mode"),
    (mutate(["certificate"], {"beta": 0.5}), "/certificate/beta"),
    (mutate(["certificate"], {"H": [[-1, 0, 0], [0, 0, 0], [0, 0, 0]]}), "/certificate/H/0/0"),
    (mutate(["certificate"], {"H": [[1, 0], [0, 1]]}), "/certificate/H"),
    (mutate(["search"], {"box": [5, -5]}), "/search/box"),
    (mutate(["extra"], 1), ""),
    (mutate(["search"], {"starts": 0}), "/search/starts"),
    ({**DISK_DOUBLING, "set": {"kind": "ellipsoid", "Q": [[1, 0]]}}, "/set/Q"),
    ({**DISK_DOUBLING, "set": {"kind": "ellipsoid", "Q": [[1, 2], [2, 1]]}}, "/set/Q"),
    ({**DISK_DOUBLING, "system": {"kind": "continuous", "dynamics": ["x1", "x2"]}, "certificate": {"beta": 1}}, "/certificate"),
]


@pytest.mark.parametrize("doc, pointer", ADVERSARIAL)
def test_adversarial_schema_corpus(doc, pointer):
    with pytest.raises(SchemaError) as info:
        from_dict(doc)
    assert info.value.path == pointer


def test_corpus_is_large_enough():
    assert len(ADVERSARIAL) >= 20


def test_valid_documents_pass():
    validate(TRI_DOC)
    validate(DISK_DOUBLING)
    spec = from_dict(TRI_DOC)
    assert spec.certificate.kind == "H"
    assert spec.set.rows == 3


def test_docs_schema_matches_code():
    text = (ROOT / "docs" / "format.md").read_text()
    blocks = re.findall(r"```json\n(.*?)```", text, re.S)
    assert json.loads(blocks[-1]) == SCHEMA


def test_docs_example_is_valid():
    text = (ROOT / "docs" / "format.md").read_text()
    validate(json.loads(re.findall(r"```json\n(.*?)```", text, re.S)[0]))


# ---------------------------------------------------------------------------
# centring helper


def test_center_identity_map():
    frag = center_ellipsoid_helper(np.eye(2), [1.0, 0.0], ["x1", "x2"])
    f = VectorField.parse(frag["system"]["dynamics"], 2)
    X = np.random.default_rng(0).standard_normal((2, 10))
    assert np.allclose(f(X), X)


def test_center_zero_map():
    frag = center_ellipsoid_helper(np.eye(2), [1.0, 0.0], ["0", "0"])
    assert frag["system"]["dynamics"] == ["-1", "0"]


def test_center_zero_shift_is_identity():
    dyn = ["x1^2 - x2", "sin(x1)"]
    frag = center_ellipsoid_helper(np.eye(2), [0.0, 0.0], dyn)
    X = np.random.default_rng(1).standard_normal((2, 10))
    assert np.allclose(VectorField.parse(frag["system"]["dynamics"], 2)(X), VectorField.parse(dyn, 2)(X))


def test_center_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        center_ellipsoid_helper([[1.0, 2.0], [2.0, 1.0]], [0.0, 0.0], ["x1", "x2"])


def test_centered_problem_equivalent(tmp_path):
    doc = {
        "dimension": 2,
        "system": {"kind": "discrete", "dynamics": ["1 + (x1-1)/2", "x2/2"]},
        "set": {"kind": "ellipsoid", "Q": [[1, 0], [0, 1]], "center": [1, 0]},
        "certificate": {"beta": 0.5},
        "mode": "restricted",
    }
    code, rep = cli.run("check", write(tmp_path, doc))
    assert code == 0
    assert rep["verdict"]["status"] == "VERIFIED"


# ---------------------------------------------------------------------------
# CLI


def test_check_triangle(tmp_path):
    code, rep = cli.run("check", write(tmp_path, TRI_DOC))
    assert code == 0
    assert rep["verdict"]["status"] == "VERIFIED"
    assert rep["verdict"]["residual_minima"] == pytest.approx([3.75, 3.75, 3.625], abs=1e-5)
    assert rep["oracle"]["escaped"] is False


def test_malformed_exit_64(tmp_path, capsys):
    doc = mutate(["system", "dynamics"], ["x1"])
    code = cli.main(["check", write(tmp_path, doc)])
    out = capsys.readouterr()
    assert code == 64
    assert json.loads(out.out)["error"]["path"] == "/system/dynamics"
    assert "/system/dynamics" in out.err


def test_unreadable_and_invalid_json(tmp_path):
    code, rep = cli.run("check", str(tmp_path / "missing.json"))
    assert code == 64
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    code, rep = cli.run("check", str(p))
    assert code == 64 and rep["error"]["type"] == "SchemaError"


def test_falsify_doubling(tmp_path):
    code, rep = cli.run("falsify", write(tmp_path, DISK_DOUBLING))
    assert code == 1
    assert rep["oracle"]["escape"]["index"] == 1


def test_certify_doubling(tmp_path):
    code, rep = cli.run("certify", write(tmp_path, DISK_DOUBLING))
    assert code == 1
    assert rep["linear_fast_path"]["status"] == "FALSIFIED"
    assert rep["revalidation"]["step1_escape"] is True


def test_check_without_certificate_nonlinear_is_usage_error(tmp_path):
    doc = mutate(["certificate"], KeyError)
    code, rep = cli.run("check", write(tmp_path, doc))
    assert code == 64


def test_probe(tmp_path):
    code, rep = cli.run("probe", write(tmp_path, TRI_DOC))
    assert code == 0
    assert rep["hypotheses"]


def test_continuous_check(tmp_path):
    doc = {
        "dimension": 2,
        "system": {"kind": "continuous", "dynamics": ["x2", "-x1"]},
        "set": {"kind": "polyhedron", "G": [[1, 0], [0, 1], [-1, 0], [0, -1]], "b": [1, 1, 1, 1]},
    }
    code, rep = cli.run("check", write(tmp_path, doc))
    assert code == 1
    assert rep["verdict"]["witness_kind"] == "boundary"


def test_reports_byte_identical(tmp_path, capsys):
    path = write(tmp_path, TRI_DOC)
    outs = []
    for _ in range(2):
        cli.main(["certify", path, "--seed", "3"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert "timings" not in json.loads(outs[0])


def test_timings_opt_in(tmp_path):
    _, rep = cli.run("check", write(tmp_path, TRI_DOC), timings=True)
    assert rep["timings"]["total_seconds"] > 0


def test_seed_precedence(tmp_path, monkeypatch):
    with_seed = write(tmp_path, {**TRI_DOC, "search": {"seed": 7}}, "a.json")
    without = write(tmp_path, TRI_DOC, "b.json")
    monkeypatch.setenv("INVACHECK_SEED", "11")
    assert cli.run("probe", with_seed, seed=5)[1]["seed"] == 5
    assert cli.run("probe", with_seed)[1]["seed"] == 7
    assert cli.run("probe", without)[1]["seed"] == 11
    monkeypatch.delenv("INVACHECK_SEED")
    assert cli.run("probe", without)[1]["seed"] == 0
    monkeypatch.setenv("INVACHECK_SEED", "abc")
    assert cli.run("probe", without)[0] == 64


def test_summary_and_out(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = cli.main(["check", write(tmp_path, TRI_DOC), "--summary", "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0
    assert "verdict: VERIFIED" in text
    assert json.loads(out.read_text())["verdict"]["status"] == "VERIFIED"


def test_dump_samples(tmp_path):
    csv_path = tmp_path / "s.csv"
    cli.main(["probe", write(tmp_path, DISK_DOUBLING), "--dump-samples", str(csv_path), "--summary"])
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "region,x1,x2,violation,f1,f2"
    assert len(rows) == 401


def test_bad_flags():
    assert cli.main(["check"]) == 64
    assert cli.main(["nonsense", "x.json"]) == 64
