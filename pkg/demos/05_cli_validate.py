"""Drive the command-line tool: classify, bound, simulate and cross-validate.

Equivalent shell usage:  openkraus validate --config run.json --out-dir out
"""
import json
import os
import tempfile

from openkraus.cli import main

config = {
    "system": {"preset": "damped_qho", "n_qubits": 2, "omega": 1.0, "gamma": 0.4},
    "initial_state": {"vector": [0.6, 0.8, 0.0, 0.0]},
    "times": [0.0, 0.5, 1.0, 2.0],
    "observables": ["number", "X0"],
    "epsilon": 1e-8,
}

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "run.json")
    with open(path, "w") as fh:
        json.dump(config, fh, indent=1)
    out = os.path.join(tmp, "out")
    for cmd in ("classify", "bound", "simulate", "validate"):
        print(f"$ openkraus {cmd} --config run.json --out-dir out")
        code = main([cmd, "--config", path, "--out-dir", out, "--jobs", "2"])
        print(f"[exit {code}]\n")
    print(sorted(os.listdir(out)))
    with open(os.path.join(out, "trajectory.csv")) as fh:
        print(fh.read())

    # a system outside both cases: classify reports it, simulate refuses with exit code 3
    config["system"] = {"preset": "custom", "d": 2, "H": [[0, 1], [1, 0]],
                        "lindblads": [{"matrix": [[1, 0], [0, -1]], "gamma": 1.0}]}
    config["initial_state"] = {"basis": 0}
    config["observables"] = ["Z0"]
    with open(path, "w") as fh:
        json.dump(config, fh)
    main(["classify", "--config", path])
    print("simulate exit code:", main(["simulate", "--config", path, "--out-dir", out]))
