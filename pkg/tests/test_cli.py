import io
import json
import subprocess
import sys

import jsonschema
import pytest

from smplp.cli import run

import programs as P

PROB = {"type": "number", "minimum": 0, "maximum": 1}
INFER_SCHEMA = {
    "type": "object",
    "required": ["queries", "inconsistency", "evidence_probability"],
    "properties": {
        "queries": {"type": "object", "additionalProperties": PROB},
        "inconsistency": PROB,
        "evidence_probability": PROB,
    },
    "additionalProperties": False,
}
MPE_SCHEMA = {
    "type": "object",
    "required": ["probability", "world_probability", "choice", "models"],
    "properties": {
        "probability": PROB,
        "world_probability": PROB,
        "choice": {"type": "array", "items": {"type": "string"}},
        "models": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
    },
}
LEARN_SCHEMA = {
    "type": "object",
    "required": ["parameters", "iterations", "converged", "loglik", "trace"],
    "properties": {
        "parameters": {"type": "object", "additionalProperties": PROB},
        "iterations": {"type": "integer", "minimum": 1},
        "converged": {"type": "boolean"},
        "loglik": {"type": "array", "items": {"type": "number"}},
        "trace": {"type": "array", "items": {"type": "object"}},
    },
}
SAMPLE_SCHEMA = {
    "type": "object",
    "properties": {
        "samples": {"type": "array", "items": {"type": ["array", "null"], "items": {"type": "string"}}}
    },
}
MODELS_SCHEMA = {
    "type": "object",
    "properties": {
        "worlds": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["choice", "probability", "models"],
                "properties": {"probability": PROB, "models": {"type": ["array", "null"]}},
            },
        }
    },
}


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write


class TestInfer:
    def test_text(self, write):
        code, out, _ = call("infer", write("alarm.pl", P.ALARM))
        assert code == 0
        assert out.splitlines() == ["alarm: 0.280000", "neighbour_calls: 0.140000", "__inconsistent__: 0.000000"]

    def test_json(self, write):
        code, out, _ = call("infer", "--json", write("b.pl", P.BARBER))
        doc = json.loads(out)
        jsonschema.validate(doc, INFER_SCHEMA)
        assert doc["inconsistency"] == pytest.approx(0.25)

    def test_output_file(self, write, tmp_path):
        target = tmp_path / "out.txt"
        code, out, _ = call("infer", write("a.pl", P.ALARM), "-o", str(target))
        assert code == 0 and out == ""
        assert target.read_text().startswith("alarm: 0.280000")

    def test_deterministic(self, write):
        path = write("c.pl", P.COLORING)
        assert call("infer", "--json", path) == call("infer", "--json", path)


class TestOtherCommands:
    def test_mpe(self, write):
        path = write("r.pl", P.SIX_ARG_PROGRAM + "evidence(arg(a1), true).\n")
        code, out, _ = call("mpe", path)
        assert code == 0
        assert out.splitlines()[0] == "probability: 0.009294"
        code, out, _ = call("mpe", "--json", path)
        doc = json.loads(out)
        jsonschema.validate(doc, MPE_SCHEMA)
        assert sorted(n for n in doc["models"][0] if n.startswith("arg(")) == ["arg(a1)", "arg(a4)", "arg(a5)"]

    def test_learn(self, write):
        prog = write("em.pl", P.EM_ALARM)
        data = write("em.txt", P.EM_ALARM_DATA)
        code, out, _ = call("learn", prog, data, "--tol", "1e-7")
        assert code == 0
        assert out.startswith("0.28")
        code, out, _ = call("learn", "--json", prog, data)
        doc = json.loads(out)
        jsonschema.validate(doc, LEARN_SCHEMA)
        assert doc["trace"][1]["alarm"] == pytest.approx(0.34)

    def test_sample(self, write):
        path = write("b.pl", P.BARBER)
        code, out, _ = call("sample", path, "-n", "50", "--seed", "2")
        lines = out.splitlines()
        assert code == 0 and len(lines) == 50
        assert all(l == "INCONSISTENT" or l.startswith("{") for l in lines)
        assert "INCONSISTENT" in lines
        code, out, _ = call("sample", "--json", path, "-n", "5")
        jsonschema.validate(json.loads(out), SAMPLE_SCHEMA)

    def test_translate(self, write):
        path = write("g.json", json.dumps(P.FOUR_ARG_GRAPH))
        code, out, _ = call("translate", path)
        assert code == 0
        assert out.splitlines()[0] == "0.6::bias(a1)."
        code, out, _ = call("translate", "--json", path)
        assert "arg(A) :- bias(A)." in json.loads(out)["program"]

    def test_models(self, write):
        code, out, _ = call("models", write("h.pl", P.ALARM_CHOICE))
        assert code == 0
        assert out.count("{") == 4 + 5
        code, out, _ = call("models", "--json", write("b.pl", P.BARBER))
        doc = json.loads(out)
        jsonschema.validate(doc, MODELS_SCHEMA)
        assert sum(w["models"] is None for w in doc["worlds"]) == 1


class TestErrors:
    def test_usage(self):
        code, _, err = call("frobnicate")
        assert code == 1 and "error" in err

    def test_missing_file(self):
        code, _, err = call("infer", "/nonexistent/file.pl")
        assert code == 1 and err.startswith("smplp:")

    def test_syntax_error(self, write):
        code, _, err = call("infer", write("bad.pl", "a :- ."))
        assert code == 2 and "line 1" in err

    def test_bad_graph(self, write):
        code, _, _ = call("translate", write("g.json", '{"arguments": [{"id": "a", "bias": 0}]}'))
        assert code == 2

    def test_impossible_evidence(self, write):
        code, _, err = call("infer", write("d.pl", P.ALARM_DEFECTIVE + "evidence(burglary, true).\n"))
        assert code == 2 and "probability zero" in err

    def test_version(self):
        assert call("--version")[0] == 0


def test_module_entry_point(tmp_path):
    path = tmp_path / "a.pl"
    path.write_text(P.ALARM)
    proc = subprocess.run([sys.executable, "-m", "smplp", "infer", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "alarm: 0.280000" in proc.stdout
