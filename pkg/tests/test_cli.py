import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from openkraus import simulator as S
from openkraus.cli import main
from openkraus.config import ConfigError, parse_config
from openkraus.pipeline import load_circuit_dump

DEPHASING = {
    "system": {"preset": "dephasing", "gamma": 1.0},
    "initial_state": {"vector": [1, 1]},
    "times": [0, 1],
    "observables": ["X0", "Z0"],
    "method": "expm",
    "seed": 5,
}
QHO = {
    "system": {"preset": "damped_qho", "n_qubits": 2, "omega": 1.0, "gamma": 0.5},
    "initial_state": {"basis": 3},
    "times": [0, 0.5, 2.0],
    "observables": ["number", "Z1"],
    "seed": 3,
}
PAULI = {
    "system": {"preset": "pauli_channel", "strings": ["XI", "IZ", ["Y", "Y"]], "gammas": [0.3, 0.7, 0.2]},
    "initial_state": {"vector": [1, 0, 1, [0, 1]]},
    "times": [0, 0.1, 1.0],
    "observables": ["X0", "Z1", "X1"],
    "seed": 3,
}
UNSUPPORTED = {
    "system": {"preset": "custom", "d": 2, "H": [[0, 1], [1, 0]], "lindblads": [{"matrix": [[1, 0], [0, -1]], "gamma": 1}]},
    "initial_state": {"basis": 0},
    "times": [0, 1],
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_dephasing_expm_rows(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", write(tmp_path, DEPHASING), "--out-dir", str(out)]) == 0
    rows = read_csv(out / "trajectory.csv")
    assert rows[0] == ["t", "X0", "Z0", "bound", "method"]
    assert float(rows[1][1]) == pytest.approx(1.0)
    assert float(rows[2][1]) == pytest.approx(math.exp(-2), abs=1e-14)
    assert all(len(r) == 2 + 3 for r in rows)


def test_kraus_matrix_bound_column_meets_epsilon(tmp_path):
    out = tmp_path / "o"
    code = main(["simulate", "--config", write(tmp_path, DEPHASING), "--out-dir", str(out),
                 "--method", "kraus_matrix", "--epsilon", "1e-8"])
    assert code == 0
    rows = read_csv(out / "trajectory.csv")[1:]
    assert all(float(r[3]) <= 1e-8 for r in rows)
    assert float(rows[-1][1]) == pytest.approx(math.exp(-2), abs=1e-8)


def test_seventeen_digit_output(tmp_path):
    out = tmp_path / "o"
    main(["simulate", "--config", write(tmp_path, DEPHASING), "--out-dir", str(out)])
    value = read_csv(out / "trajectory.csv")[2][1]
    assert float(value) == float(format(float(value), ".17g"))
    assert len(value.replace(".", "").lstrip("0")) == 17


def test_invalid_json_exit_two_without_outputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "never"
    assert main(["simulate", "--config", str(bad), "--out-dir", str(out)]) == 2
    assert not out.exists()


@pytest.mark.parametrize("mutate", [
    lambda c: c.pop("times"),
    lambda c: c.update(times=[1, 0]),
    lambda c: c.update(method="magic"),
    lambda c: c.update(epsilon=-1),
    lambda c: c.update(observables=["Q7"]),
    lambda c: c["system"].update(preset="nonsense"),
    lambda c: c.update(initial_state={"density_matrix": [[0.7, 0], [0, 0.7]]}),
])
def test_schema_errors_exit_two(tmp_path, mutate):
    cfg = json.loads(json.dumps(DEPHASING))
    mutate(cfg)
    assert main(["simulate", "--config", write(tmp_path, cfg), "--out-dir", str(tmp_path / "o")]) == 2


def test_unsupported_exit_three_names_condition(tmp_path, capsys):
    path = write(tmp_path, UNSUPPORTED)
    assert main(["validate", "--config", path, "--out-dir", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert "(iii)" in err and "residual" in err
    assert main(["simulate", "--config", path, "--method", "kraus_matrix", "--out-dir", str(tmp_path / "o")]) == 3
    # the oracle methods do not need the classification
    assert main(["simulate", "--config", path, "--method", "expm", "--out-dir", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("cfg", [QHO, PAULI], ids=["qho", "pauli"])
def test_validate_passes_for_presets(tmp_path, cfg):
    out = tmp_path / "v"
    assert main(["validate", "--config", write(tmp_path, cfg), "--out-dir", str(out)]) == 0
    report = json.loads((out / "validate.json").read_text())
    assert report["status"] == "PASS"
    assert report["kraus_matrix_vs_expm"]["max_trace_distance"] <= 1e-9
    assert report["kraus_circuit_vs_kraus_matrix"]["max_observable_deviation"] <= 1e-9


def test_validate_is_deterministic_and_job_invariant(tmp_path):
    path = write(tmp_path, PAULI)
    outs = []
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "8")):
        out = tmp_path / name
        assert main(["validate", "--config", path, "--out-dir", str(out), "--jobs", jobs]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1] == outs[2]


def test_circuit_dump_roundtrip(tmp_path):
    out = tmp_path / "c"
    path = write(tmp_path, QHO)
    assert main(["simulate", "--config", path, "--method", "kraus_circuit", "--out-dir", str(out)]) == 0
    rows = read_csv(out / "trajectory.csv")[1:]
    dump = load_circuit_dump(out / "circuits.json")
    number = np.diag(np.arange(4.0))
    for (t, circuits), row in zip(dump, rows):
        value = S.recombine([(c.weight, S.circuit_expectation(c, number)) for c in circuits])
        assert value == pytest.approx(float(row[1]), abs=1e-12)
        assert value == pytest.approx(3 * math.exp(-0.5 * t), abs=1e-8)
    raw = json.loads((out / "circuits.json").read_text())
    first = raw["runs"][0]["circuits"][0]
    assert set(first) >= {"n_system", "ancillas", "gates", "weight", "postselect_mask"}


def test_circuits_and_bound_subcommands(tmp_path, capsys):
    path = write(tmp_path, dict(DEPHASING, times=[0.5, 1.0]))
    assert main(["circuits", "--config", path, "--out-dir", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "circuits.json").exists()
    assert main(["bound", "--config", path, "--out-dir", str(tmp_path / "b"), "--epsilon", "1e-10"]) == 0
    rows = read_csv(tmp_path / "b" / "bound.csv")
    assert rows[0] == ["t", "order", "bound", "x", "analytic_order"]
    assert all(float(r[2]) <= 1e-10 for r in rows[1:])
    capsys.readouterr()


def test_classify_subcommand(tmp_path, capsys):
    assert main(["classify", "--config", write(tmp_path, QHO)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["label"] == "CaseII" and info["alpha"] == pytest.approx(0.5)


def test_shot_sampling_is_seeded(tmp_path):
    cfg = dict(DEPHASING, method="kraus_circuit", shots=4000, times=[0.5])
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    path = write(tmp_path, cfg)
    for out, seed in ((a, "11"), (b, "11"), (c, "12")):
        assert main(["simulate", "--config", path, "--out-dir", str(out), "--seed", seed]) == 0
    ta, tb, tc = ((p / "trajectory.csv").read_bytes() for p in (a, b, c))
    assert ta == tb and ta != tc
    est = float(read_csv(a / "trajectory.csv")[1][1])
    assert abs(est - math.exp(-1.0)) < 0.1


def test_custom_system_with_complex_entries():
    cfg = parse_config({
        "system": {"preset": "custom", "d": 2, "H": [[1, [0, -0.5]], [[0, 0.5], -1]],
                   "lindblads": [{"matrix": [[0, 1], [0, 0]], "gamma": 0.3}]},
        "initial_state": {"density_matrix": [[0.5, 0.5], [0.5, 0.5]]},
        "times": [0, 1],
        "observables": [{"name": "sx", "matrix": [[0, 1], [1, 0]]}],
    })
    assert cfg.spec.system.H[0, 1] == -0.5j
    with pytest.raises(ConfigError):
        parse_config({"system": {"preset": "custom", "d": 2, "H": [[1, [0, 1, 2]], [0, 1]]},
                      "initial_state": {"basis": 0}, "times": [0]})


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "openkraus", "classify", "--config", write(tmp_path, PAULI)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["label"] == "CaseI"
    proc = subprocess.run([sys.executable, "-m", "openkraus", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
