import json
import subprocess
import sys

import pytest

from biworlds.cli import main
from biworlds.core import Universe
from biworlds.serialize import dumps


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


@pytest.fixture
def v1_file(tmp_path):
    u = Universe(["p"], ["a"], 1)
    p, e = u.objective(["p"]), u.objective()
    path = tmp_path / "v1.json"
    path.write_text(dumps(u.make(["p"], {"a": ([p], [p, e])}), u))
    return path


def test_count(capsys):
    code, data = run_json(capsys, "count", "--level", "2")
    assert code == 0
    assert [r["total"] for r in data["levels"]] == [2, 18, 30_233_088]
    assert data["levels"][2]["completed"] == 524_288


def test_count_text(capsys):
    code, out, _ = run(capsys, "count", "--level", "1")
    assert code == 0 and "18" in out


def test_parse(capsys):
    code, data = run_json(capsys, "parse", "-f", "K[a] (p -> M[b] q)")
    assert code == 0
    assert data["modal_depth"] == "2"


def test_parse_error_position(capsys):
    code, data = run_json(capsys, "parse", "-f", "K[a] (p &")
    assert code == 2
    assert data["exit_code"] == 2 and data["error"] == "FormulaSyntaxError"


def test_eval_from_file(capsys, v1_file):
    code, data = run_json(capsys, "eval", "-f", "K[a] p", "--world", f"@{v1_file}")
    assert code == 0 and data["value"] == "t" and data["level"] == 1
    _, data = run_json(capsys, "eval", "-f", "M[a] p", "--world", f"@{v1_file}")
    assert data["value"] == "f"


def test_eval_rejects_invalid_world(capsys):
    bad = json.dumps({"obj": ["p"], "agents": {"a": {"poss": [], "imp": []}}, "level": 1})
    code, data = run_json(capsys, "eval", "-f", "p", "--world", bad)
    assert code == 2 and "error" in data


def test_enumerate(capsys):
    code, data = run_json(capsys, "enumerate", "--level", "1", "--limit", "3")
    assert code == 0 and data["total"] == 18 and len(data["biworlds"]) == 3


def test_enumerate_over_cap(capsys):
    code, data = run_json(capsys, "enumerate", "--level", "2")
    assert code == 3
    assert data["error"] == "cap_exceeded" and data["count"] == 30_233_088


def test_cap_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("BIWORLDS_CAP", "10")
    code, data = run_json(capsys, "enumerate", "--level", "1")
    assert code == 3 and data["cap"] == 10
    monkeypatch.setenv("BIWORLDS_CAP", "ten")
    code, data = run_json(capsys, "count")
    assert code == 2 and data["error"] == "usage"


def test_kripke_entailment(capsys):
    code, data = run_json(capsys, "kripke", "--atoms", "p,q", "-f", "q", "--given", "p")
    assert code == 0 and data["entails"] is False and data["countermodel"] is not None
    code, data = run_json(capsys, "kripke", "-f", "p | ~p")
    assert data["entails"] is True and data["worlds"] == 8


def test_models_only_knowing(capsys):
    code, data = run_json(capsys, "models", "-f", "p", "--oknow", "a", "--obj", "p")
    assert code == 0 and data["only_knows"] == "t" and data["completed"]
    code, data = run_json(capsys, "models", "-f", "K[a] p", "--k", "0")
    assert data["models"] == 4


def test_symbolic_example3(capsys):
    code, data = run_json(capsys, "symbolic", "example3")
    assert code == 0 and data["verdict"] == "t (conditional)"
    code, data = run_json(capsys, "symbolic", "example3", "--without", "u")
    assert data["verdict"] == "unsupported"


def test_symbolic_eval_and_survivors(capsys):
    _, data = run_json(capsys, "symbolic", "eval", "--name", "v", "-f", "K[a] p")
    assert data["value"] == "t"
    _, data = run_json(capsys, "symbolic", "survivors", "-f", "p", "--level", "2")
    assert data["survivors"] == 24


def test_usage_errors(capsys):
    code, data = run_json(capsys, "count", "--level", "x")
    assert code == 2 and data["error"] == "usage"
    code, _, err = run(capsys, "nosuch")
    assert code == 2 and err.startswith("error:")
    code, data = run_json(capsys, "eval", "-f", "r", "--world", "{}")
    assert code == 2


def test_suite_single_check(capsys):
    code, data = run_json(capsys, "suite", "--only", "counts")
    assert code == 0 and data["passed"]
    assert len(data["checks"]) == 1 and "counts" in data["checks"][0]["name"]


def test_console_script_suite_fast():
    proc = subprocess.run([sys.executable, "-m", "biworlds.cli", "suite", "--format", "json"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    data = json.loads(proc.stdout)
    assert data["passed"] and len(data["checks"]) == 10


def test_models_introspective_only_knowing(capsys):
    code, data = run_json(capsys, "models", "-f", "p", "--oknow", "a", "--obj", "p", "--pi")
    assert code == 0 and data["level"] == 2
    assert data["only_knows_formula"] == "O[a] (p & K[a] p)" and data["only_knows"] == "t"
