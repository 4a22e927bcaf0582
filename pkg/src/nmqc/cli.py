"""Command-line entry point: ``nmqc run|report|certify|enumerate|calibrate``."""

import argparse
import json
import sys

from . import experiment, game as games, mitigation, sim, topology
from .exceptions import NmqcError


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    plan = experiment.ExperimentPlan(
        game=args.game, graph=args.graph, configs=experiment.parse_configs(args.configs),
        shots=args.shots, runs=args.runs, noise=args.noise, mitigation=args.mitigation,
        calibration=args.calibration, calibration_shots=args.calibration_shots,
        resamples=args.resamples, level=args.level, seed=args.seed, workers=args.workers,
    )
    rows = experiment.run(plan)
    text = experiment.report(rows, None, args.format)
    _emit(text, args.out)
    errors = [r for r in rows if r.kind == "error"]
    for r in errors:
        print(f"error in configuration {r.configuration}: {r.error}", file=sys.stderr)
    return 1 if errors else 0


def cmd_report(args):
    rows = experiment.read_report(args.input)
    _emit(experiment.report(rows, None, args.format), args.out)
    summary = experiment.summarize(rows)
    for name, entry in summary.items():
        mean = entry.get("mean_beta_raw")
        flag = "violation" if entry.get("mean_violates") else "no violation"
        mean_text = "n/a" if mean is None else f"{mean:.4f}"
        print(f"{name}: mean beta {mean_text} vs beta_c {entry['beta_c']:.4f} "
              f"({flag}; {entry['violations']}/{entry['configs']} configs)", file=sys.stderr)
    return 1 if any(r.kind == "error" for r in rows) else 0


def cmd_certify(args):
    cert = experiment.certify(args.game)
    if args.json:
        print(json.dumps(cert, indent=2))
    else:
        print(experiment.format_certificate(cert))
    return 0


def cmd_enumerate(args):
    graph = topology.load_graph(args.graph)
    configs = topology.enumerate_configs(graph, args.qubits)
    if args.count:
        print(len(configs))
    else:
        for c in configs:
            print(f"{c}\troot={topology.select_root(c, graph)}")
    return 0


def cmd_calibrate(args):
    graph = topology.load_graph(args.graph)
    selection = experiment.parse_configs(args.configs)
    if isinstance(selection, str) or len(selection) != 1:
        raise NmqcError("calibrate needs exactly one explicit configuration")
    config = topology.configuration(graph, selection[0])
    readout, depol = experiment.load_noise(args.noise, graph)
    noise = experiment.noise_for(config, readout, depol)
    l = len(config.qubits)
    if args.shots == 0:
        mit = experiment.exact_mitigator(args.method, noise, l)
    else:
        mit = experiment.sampled_mitigator(args.method, noise, l, args.shots, args.seed)
    _emit(json.dumps(mitigation.calibration_to_dict(mit, config.qubits), indent=2) + "\n", args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nmqc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="sweep a game over qubit configurations")
    p.add_argument("--game", required=True,
                   help="NAND2, OR3, OR3XOR, H3..H6, Hk:<k> or a game JSON file")
    p.add_argument("--graph", default="falcon27", help="graph JSON or bundled name")
    p.add_argument("--configs", default="all", help="all, best, or '0,1,2,4;8,9,11,14'")
    p.add_argument("--shots", type=int, default=1000, help="shots per circuit; 0 = exact mode")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--noise", default="none", help="none, graph, bundled or noise JSON file")
    p.add_argument("--mitigation", default="auto", choices=["auto", "none", "qrem", "mem"])
    p.add_argument("--calibration", help="calibration JSON snapshot to reuse")
    p.add_argument("--calibration-shots", type=int, default=None)
    p.add_argument("--resamples", type=int, default=1000, help="bootstrap resamples, 0 = no CI")
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-emit a saved report and print its summary")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("certify", help="print classical and quantum bounds of a game")
    p.add_argument("game")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("enumerate", help="list connected qubit configurations")
    p.add_argument("--graph", default="falcon27")
    p.add_argument("--qubits", "-l", type=int, required=True)
    p.add_argument("--count", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("calibrate", help="emit a readout calibration snapshot")
    p.add_argument("--graph", default="falcon27")
    p.add_argument("--configs", required=True, help="one configuration, e.g. 0,1,2,4")
    p.add_argument("--method", default="qrem", choices=["qrem", "mem"])
    p.add_argument("--shots", type=int, default=1000, help="0 = exact matrices")
    p.add_argument("--noise", default="graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NmqcError, OSError) as exc:
        print(f"nmqc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
