"""Command-line entry point.

Exit codes: 0 success, 2 bad arguments or configuration, 3 system not
supported by the Kraus series, 4 numerical tolerance not met.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import circuits as circ
from . import pipeline
from .config import METHODS, ConfigError, load_config
from .lindblad import UnsupportedSystemError, classify

EXIT_OK, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_TOLERANCE = 0, 2, 3, 4


def make_parser():
    p = argparse.ArgumentParser(prog="openkraus", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("classify", "report the commutation-relation case of the configured system"),
        ("simulate", "evolve the initial state and write trajectory.csv"),
        ("circuits", "build the Kraus circuits for every time and write circuits.json"),
        ("bound", "truncation order and error bound per time"),
        ("validate", "cross-check all four methods against each other"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out-dir", default=".", help="directory for output files")
        sp.add_argument("--jobs", type=int, default=None, help="worker threads for term evaluation")
        sp.add_argument("--seed", type=int, default=None, help="seed for shot sampling")
        sp.add_argument("--method", choices=METHODS, default=None)
        sp.add_argument("--epsilon", type=float, default=None, help="truncation tolerance")
    return p


def _cmd_classify(cfg, args):
    cls = classify(cfg.spec.system)
    print(json.dumps(pipeline.classification_dict(cls), indent=1, sort_keys=True))
    return EXIT_OK


def _cmd_simulate(cfg, args):
    traj, paths = pipeline.run_config(cfg, args.out_dir)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_circuits(cfg, args):
    per_time = []
    cls = pipeline.require_supported(cfg)
    for t in cfg.times:
        raw, _ = pipeline.build_circuits(cfg, t, cls)
        per_time.append([pipeline.simulator.with_initial_state(c, cfg.rho0) for c in raw])
        counts = [circ.resource_counts(c) for c in raw]
        print(
            f"t={t:g}: {len(raw)} circuits, max {max(c['gates'] for c in counts)} gates, "
            f"max {max(c['qubits'] for c in counts)} qubits"
        )
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "circuits.json")
    with open(path, "w") as fh:
        fh.write(pipeline.circuit_dump(cfg.times, per_time))
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_bound(cfg, args):
    rows = pipeline.bound_table(cfg)
    lines = ["t,order,bound,x,analytic_order"]
    for t, M, b, x, an in rows:
        lines.append(",".join([pipeline._fmt(t), str(M), pipeline._fmt(b), pipeline._fmt(x), "" if an is None else str(an)]))
    text = "\n".join(lines) + "\n"
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "bound.csv"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    if any(b > cfg.epsilon for _, _, b, _, _ in rows if not math.isnan(b)) and cfg.max_order is None:
        return EXIT_TOLERANCE
    return EXIT_OK


def _cmd_validate(cfg, args):
    report = pipeline.validate_cross(cfg, args.out_dir)
    km = report["kraus_matrix_vs_expm"]
    cm = report["kraus_circuit_vs_kraus_matrix"]
    print(f"kraus_matrix vs expm: trace distance {km['max_trace_distance']:.3e}")
    print(f"kraus_circuit vs kraus_matrix: observable deviation {cm['max_observable_deviation']:.3e}")
    print(f"rk4 vs expm: trace distance {report['rk4_vs_expm']['max_trace_distance']:.3e}")
    print(report["status"])
    return EXIT_OK if report["status"] == "PASS" else EXIT_TOLERANCE


COMMANDS = {
    "classify": _cmd_classify,
    "simulate": _cmd_simulate,
    "circuits": _cmd_circuits,
    "bound": _cmd_bound,
    "validate": _cmd_validate,
}


def main(argv=None):
    args = make_parser().parse_args(argv)
    overrides = {"jobs": args.jobs, "seed": args.seed, "method": args.method, "epsilon": args.epsilon}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return COMMANDS[args.command](cfg, args)
    except UnsupportedSystemError as exc:
        print(f"unsupported system: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except pipeline.ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
