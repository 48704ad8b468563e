import json
import os

import pytest

from nodalmp import cli
from nodalmp.config import load_config
from nodalmp.errors import ConfigError
from nodalmp.reporting import dumps_json, emit_plot_data, fmt_float
from nodalmp.solver import ContinuationResult

GOOD = {
    "problem": {"n": 6, "p": 2.0, "q": 1.75, "x0": {"a0": -1.0, "h0": 0.0}},
    "mesh": {"kind": "interval", "resolution": 33},
}

SOLVE = {
    "problem": {"n": 3, "p": 2.0, "q": 1.5, "epsilon": 2.0},
    "mesh": {"kind": "interval", "resolution": 65},
    "continuation": {"schedule": [2.0, 1.5, 1.0]},
}


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _files(root):
    out = {}
    for dirpath, _, names in os.walk(root):
        for n in names:
            p = os.path.join(dirpath, n)
            out[os.path.relpath(p, root)] = open(p, "rb").read()
    return out


def test_schema_errors_carry_pointers():
    with pytest.raises(ConfigError) as err:
        load_config({"problem": {"n": 3, "p": "two", "q": 1.5}})
    assert err.value.pointer == "/problem/p"
    with pytest.raises(ConfigError) as err:
        load_config({"mesh": {"kind": "cube", "resolution": 8}})
    assert err.value.pointer == "/mesh/kind"
    with pytest.raises(ConfigError) as err:
        load_config({"solver": {"tolerance": 1}})
    assert err.value.pointer == "/solver"


def test_flags_override_config():
    conf = load_config(dict(SOLVE), {"seed": 9, "problem": {"epsilon": 1.0}})
    assert conf["seed"] == 9 and conf["problem"]["epsilon"] == 1.0 and conf["problem"]["n"] == 3
    assert conf["expansion"]["etas"] == [1e-2, 1e-3, 1e-4]  # default filled in


def test_float_format():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("inf")) == "inf"
    assert '"x": 0.33333333333333331' in dumps_json({"x": 1 / 3})
    assert '"nan"' in dumps_json({"y": float("nan")})


def test_plot_data(tmp_path):
    empty = ContinuationResult([], [], {})
    (path,) = emit_plot_data(empty, str(tmp_path), kind="continuation")
    assert open(path).read() == "epsilon,level\n"
    paths = emit_plot_data([], str(tmp_path / "ex"), kind="expansion")
    assert len(paths) == 4 and all(open(p).read() == "eta,rel_err\n" for p in paths)


def test_constants_command(tmp_path, capsys):
    assert cli.run(["constants", "--n", "5", "--p", "2", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for key in ("omega", "I_base", "ratio_a", "ratio_b", "ratio_c", "C_np", "K_pow_minus_n"):
        assert key in out
    data = json.loads((tmp_path / "constants.json").read_text())
    assert data["ratio_a"] == pytest.approx(7.0)


def test_check_conditions_exit_codes(tmp_path):
    good = _write(tmp_path, "good.json", GOOD)
    assert cli.run(["check-conditions", good, "--strict", "--out", str(tmp_path / "a")]) == 0
    bad = dict(GOOD, problem=dict(GOOD["problem"], x0={"a0": 1.0, "h0": 0.0}))
    badp = _write(tmp_path, "bad.json", bad)
    assert cli.run(["check-conditions", badp, "--out", str(tmp_path / "b")]) == 0
    assert cli.run(["check-conditions", badp, "--strict", "--out", str(tmp_path / "c")]) == 2
    dom = _write(tmp_path, "dom.json", {"problem": {"n": 3, "p": 2.0, "q": 7.0}})
    assert cli.run(["check-conditions", dom, "--out", str(tmp_path / "d")]) == 3
    cfg = _write(tmp_path, "cfg.json", {"problem": {"n": 3}})
    assert cli.run(["check-conditions", cfg, "--out", str(tmp_path / "e")]) == 4


def test_manifest_lists_every_output_once(tmp_path):
    conf = _write(tmp_path, "solve.json", SOLVE)
    out = tmp_path / "run"
    assert cli.run(["continue", conf, "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    listed = [o["path"] for o in man["outputs"]]
    on_disk = sorted(p.replace(os.sep, "/") for p in _files(out) if p != "manifest.json")
    assert sorted(listed) == on_disk and len(set(listed)) == len(listed)
    rows = (out / "plot" / "continuation.csv").read_text().strip().splitlines()
    assert len(rows) == 4  # header + 3 epsilon values


@pytest.mark.parametrize("command", ["solve", "mesh", "expansion"])
def test_determinism(tmp_path, command):
    doc = SOLVE if command != "expansion" else GOOD
    conf = _write(tmp_path, "c.json", doc)
    extra = ["--eps", "1.5"] if command == "solve" else []
    runs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert cli.run([command, conf, "--seed", "7", "--out", str(out)] + extra) == 0
        files = _files(out)
        files.pop("manifest.json")
        runs.append(files)
    assert runs[0] == runs[1]
