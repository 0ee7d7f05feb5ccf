"""Smoke tests for the _guppyc extension module (run via ctest)."""
import json

import _guppyc

SRC = """\
def main() -> bool:
  q = h(h(Qubit()))
  return measure(q)
"""


def test_compile_and_validate():
    ir = _guppyc.compile(SRC)
    doc = json.loads(ir)
    assert doc["version"] == 1
    stats = _guppyc.validate(ir)
    assert stats["nodes"] == len(doc["nodes"])
    assert stats["edges"] == len(doc["edges"])


def test_compile_reports_diagnostics():
    try:
        _guppyc.compile("def f() -> None:\n  q = Qubit()\n  h(q)\n")
    except ValueError as e:
        assert "LIN002" in str(e)
    else:
        raise AssertionError("expected ValueError")


def test_bindings_and_lowering_modes():
    src = "def f() -> int:\n  return py(k)\n"
    bindings = json.dumps({"k": {"type": "int", "value": 11}})
    for mode in ("structured", "cfg"):
        ir = _guppyc.compile(src, bindings, mode)
        report = json.loads(_guppyc.run(ir, "f"))
        assert report["result"] == 11


def test_run_is_deterministic():
    ir = _guppyc.compile(SRC)
    first = _guppyc.run(ir, "main", "[]", 7)
    assert all(_guppyc.run(ir, "main", "[]", 7) == first for _ in range(5))
    report = json.loads(first)
    assert report["qubits_leaked"] == 0
    assert isinstance(report["result"], bool)


def test_optimize_cancels_gates():
    ir = _guppyc.compile("def f(q: Qubit) -> Qubit:\n  return h(h(h(q)))\n")
    opt = _guppyc.optimize(ir, ["hh"])
    ops = [n["payload"].get("op") for n in json.loads(opt)["nodes"]
           if n["kind"] == "quantum_op"]
    assert ops == ["h"]


def test_runtime_errors_surface():
    ir = _guppyc.compile("def main() -> int:\n  return 9223372036854775807 + 1\n")
    try:
        _guppyc.run(ir, "main")
    except _guppyc.ExecutionError as e:
        assert "overflow" in str(e)
    else:
        raise AssertionError("expected ExecutionError")


def test_bad_ir_rejected():
    try:
        _guppyc.validate("{\"version\": 99}")
    except _guppyc.GraphFormatError:
        pass
    else:
        raise AssertionError("expected GraphFormatError")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"{t.__name__}: ok")


if __name__ == "__main__":
    main()
