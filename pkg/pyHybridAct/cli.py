# Copyright 2026 The pyHybridAct Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
hybridact command line

Exit codes: 0 success, 1 usage error (help printed), 2 runtime or data error.
"""

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .activations import K_GRID, ActivationKind, ActivationParams, Activation, parse_activation
from .bench import compare_modes
from .common import (
    ContractViolation,
    DataFormatError,
    InvalidParameterError,
    NondifferentiablePointError,
    NumericError,
    open_output,
)
from .datasets import Task
from .experiments import (
    ARCHITECTURES,
    TASK_ARCHITECTURE,
    ExperimentSpec,
    StudyTask,
    load_task_data,
    rank_functions,
    read_report,
    run_convergence_study,
    run_gradient_flow_probe,
    run_k_sweep,
    run_task,
    write_gradient_report,
    write_report,
)
from .gradcheck import check_activation, check_network_gradients
from .network import TASK_HEAD, LossKind, NetworkConfig, evaluate, init_network, train

logger = logging.getLogger(__name__)

ENV_DATA_DIR = "HYBRIDACT_DATA_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _activations(args, text):
    return [parse_activation(item, args.variant) for item in text.split(",") if item.strip()]


def _common_flags():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0,
                   help="Seed of splits, synthetic data and sampling (default: %(default)s)")
    g.add_argument("--out", default=None, help="Output file (default: standard output)")
    g.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="Report format (default: %(default)s)")
    g.add_argument("--variant", choices=("literal", "rescaled"), default="rescaled",
                   help="Form of s3/s4 in activation lists (default: %(default)s)")
    g.add_argument("--data-dir", default=None,
                   help=f"Data directory (default: ${ENV_DATA_DIR} or .)")
    g.add_argument("--jobs", type=int, default=1,
                   help="Parallel worker processes (default: %(default)s)")
    g.add_argument("--no-timing", action="store_true",
                   help="Blank wall-clock fields in reports")
    g.add_argument("-v", "--verbose", action="count", default=0,
                   help="More logging (repeatable)")
    return common


def _training_flags(p, epochs=50):
    p.add_argument("--hidden", type=_int_list, default=list(TASK_ARCHITECTURE),
                   help="Hidden layer widths (default: 64,32,16)")
    p.add_argument("--epochs", type=int, default=epochs,
                   help="Maximum epochs (default: %(default)s)")
    p.add_argument("--lr", type=float, default=0.001,
                   help="Adam learning rate (default: %(default)s)")
    p.add_argument("--batch-size", type=int, default=32,
                   help="Minibatch size (default: %(default)s)")
    p.add_argument("--patience", type=int, default=5,
                   help="Early stopping patience (default: %(default)s)")
    p.add_argument("--seeds", type=_int_list, default=[1, 2, 3],
                   help="Run seeds (default: 1,2,3)")
    p.add_argument("--mnist-full", action="store_true",
                   help="Train on all 60,000 MNIST rows instead of the first 10,000")
    p.add_argument("--header", action="store_true", help="Data files have a header line")


def build_parser():
    """
    :return: The top-level parser and its subparsers action
    :rtype: tuple
    """
    common = _common_flags()
    parser = _Parser(prog="hybridact", description="S3/S4 hybrid activation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    tasks = [t.value for t in StudyTask]

    p = sub.add_parser("eval", parents=[common], help="Evaluate one activation")
    p.add_argument("--fn", required=True, help="Activation, e.g. s4 or s4:k=10")
    p.add_argument("--k", type=float, default=None, help="S4 steepness (overrides --fn)")
    p.add_argument("--x", type=float, required=True, help="Input value")
    p.add_argument("--derivative", action="store_true", help="Print f'(x) instead of f(x)")

    p = sub.add_parser("gradcheck", parents=[common], help="Finite-difference checks")
    p.add_argument("--fn", default=",".join(k.value for k in ActivationKind),
                   help="Activations to check (default: all)")
    p.add_argument("--k", type=_float_list, default=list(K_GRID),
                   help="Steepness grid (default: 5,10,15,20,30,40,50)")
    p.add_argument("--lo", type=float, default=-10.0, help="Grid start (default: %(default)s)")
    p.add_argument("--hi", type=float, default=10.0, help="Grid end (default: %(default)s)")
    p.add_argument("--n", type=int, default=2001, help="Grid points (default: %(default)s)")
    p.add_argument("--h", type=float, default=1e-5, help="Step (default: %(default)s)")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="Relative error threshold (default: %(default)s)")
    p.add_argument("--network", action="store_true",
                   help="Also check backpropagation on a 64-32-16 network, every loss")

    p = sub.add_parser("train", parents=[common], help="Train one configuration")
    p.add_argument("--task", choices=tasks, default="binary", help="Task (default: %(default)s)")
    p.add_argument("--fn", default="s4:k=10", help="Hidden activation (default: %(default)s)")
    p.add_argument("--checkpoint", default=None, help="Write the trained network here")
    _training_flags(p)

    p = sub.add_parser("task", parents=[common], help="Task benchmark over activations x seeds")
    p.add_argument("--task", choices=tasks, default="binary", help="Task (default: %(default)s)")
    p.add_argument("--activations",
                   default="s4:k=10,s3,sigmoid,tanh,relu,leaky_relu,elu,swish,softsign,softplus",
                   help="Comma-separated activations (default: %(default)s)")
    _training_flags(p)

    p = sub.add_parser("convergence", parents=[common], help="Epochs-to-convergence study")
    p.add_argument("--task", choices=tasks, default="binary", help="Task (default: %(default)s)")
    p.add_argument("--activations", default="s4:k=5,s4:k=15,swish,relu,elu",
                   help="Comma-separated activations (default: %(default)s)")
    p.add_argument("--archs", default=",".join(ARCHITECTURES),
                   help="Architectures (default: %(default)s)")
    _training_flags(p, epochs=30)

    p = sub.add_parser("gradflow", parents=[common], help="Gradient health across depths")
    p.add_argument("--depths", type=_int_list, default=[2, 3, 4, 5],
                   help="Hidden layer counts (default: 2,3,4,5)")
    p.add_argument("--activations", default="s4:k=10,relu,sigmoid",
                   help="Comma-separated activations (default: %(default)s)")
    p.add_argument("--epochs", type=int, default=5,
                   help="Training epochs before the second probe (default: %(default)s)")
    p.add_argument("--width", type=int, default=100, help="Hidden width (default: %(default)s)")
    p.add_argument("--batch", type=int, default=256,
                   help="Probe batch rows (default: %(default)s)")

    p = sub.add_parser("ksweep", parents=[common], help="S4 steepness sweep")
    p.add_argument("--task", choices=tasks, default="binary", help="Task (default: %(default)s)")
    p.add_argument("--k", type=_float_list, default=list(K_GRID),
                   help="Steepness grid (default: 5,10,15,20,30,40,50)")
    _training_flags(p)

    p = sub.add_parser("rank", parents=[common], help="Rank activations across task reports")
    p.add_argument("--reports", nargs="+", required=True, help="Task reports (CSV or JSON)")

    p = sub.add_parser("bench", parents=[common], help="Naive vs fused S4 throughput")
    p.add_argument("--iterations", type=int, default=10000,
                   help="Evaluations per repetition (default: %(default)s)")
    p.add_argument("--buffer-len", type=int, default=10000,
                   help="Elements per evaluation (default: %(default)s)")
    p.add_argument("--k", type=float, default=10.0, help="S4 steepness (default: %(default)s)")
    p.add_argument("--repeats", type=int, default=5,
                   help="Timed repetitions (default: %(default)s)")
    p.add_argument("--warmup", type=int, default=100,
                   help="Untimed warm-up evaluations (default: %(default)s)")
    return parser, sub


def _data_dir(args):
    return args.data_dir or os.environ.get(ENV_DATA_DIR) or "."


def _train_overrides(args):
    return {
        "learning_rate": args.lr,
        "batch_size": args.batch_size,
        "max_epochs": args.epochs,
        "patience": args.patience,
    }


def _experiment_spec(args, activations):
    return ExperimentSpec(
        StudyTask(args.task),
        activations,
        tuple(args.hidden),
        tuple(args.seeds),
        _train_overrides(args),
        _data_dir(args),
        args.seed,
        args.variant,
        None if args.mnist_full else 10000,
        args.header,
    )


def _emit_json(args, doc):
    text = json.dumps(doc, indent=1, allow_nan=False)
    try:
        with open_output(args.out or sys.stdout) as fh:
            fh.write(text + "\n")
    except OSError as e:
        raise type(e)(f"Cannot write {args.out} : {e.strerror}") from e


def _report(args, results, spec=None):
    write_report(results, args.format, args.out or sys.stdout, spec, not args.no_timing)


# Each _plan_* resolves its arguments (usage errors surface here) and
# returns (resolved, runner).


def _plan_eval(args):
    act = parse_activation(args.fn, args.variant)
    if args.k is not None:
        act = Activation(act.kind, dataclasses.replace(act.params, k=args.k))

    def run():
        f = act.derivative if args.derivative else act
        print(repr(f(args.x)))
        return EXIT_OK

    return {"activation": act.id, "x": args.x, "derivative": args.derivative}, run


def _plan_gradcheck(args):
    kinds = [parse_activation(name, args.variant).kind for name in args.fn.split(",") if name]
    ks = [ActivationParams(k=k) for k in args.k]
    if not args.lo < args.hi or args.n < 2:
        raise UsageError("need --lo < --hi and --n >= 2")

    def run():
        reports = [
            check_activation(kind, params, args.lo, args.hi, args.n, args.h, args.tol)
            for kind in kinds for params in ks
        ]
        doc = {"activations": [r.to_dict() for r in reports]}
        failed = sum(not r.passed for r in reports)
        if args.network:
            doc["network"] = _network_checks(kinds, args.seed)
            failed += sum(not entry["passed"] for entry in doc["network"])
        _emit_json(args, doc)
        if failed:
            logger.error(f"{failed} gradient check(s) failed")
            return EXIT_RUNTIME
        return EXIT_OK

    resolved = {"kinds": [k.value for k in kinds], "k": args.k, "lo": args.lo, "hi": args.hi,
                "n": args.n, "h": args.h, "tol": args.tol, "network": args.network}
    return resolved, run


def _network_checks(kinds, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((8, 4))
    targets = {
        LossKind.BCE: (rng.integers(0, 2, 8), Task.BINARY, 1),
        LossKind.CE: (rng.integers(0, 3, 8), Task.MULTICLASS, 3),
        LossKind.MSE: (rng.standard_normal(8), Task.REGRESSION, 1),
    }
    entries = []
    for kind in kinds:
        for loss, (y, task, out_dim) in targets.items():
            act = Activation(kind, ActivationParams(k=10.0))
            config = NetworkConfig(4, TASK_ARCHITECTURE, out_dim, act, TASK_HEAD[task])
            net = init_network(config, seed)
            report = check_network_gradients(net, x, y, loss, seed=seed)
            entries.append({"kind": kind.value, "loss": loss.value, **report.to_dict()})
    return entries


def _plan_train(args):
    spec = _experiment_spec(args, [parse_activation(args.fn, args.variant)])
    tc = spec.train_config(spec.seeds[0])

    def run():
        train_set, test_set = load_task_data(spec)
        config = NetworkConfig.for_dataset(train_set, spec.hidden_layers, spec.activations[0])
        net, history = train(config, train_set, tc)
        if args.checkpoint:
            net.save(args.checkpoint)
        _emit_json(args, {
            "activation": config.hidden_activation.id,
            "task": spec.task.value,
            "seed": tc.seed,
            "metric": evaluate(net, test_set),
            "best_epoch": history.best_epoch,
            "epochs": history.epochs,
            "stopped_early": history.stopped_early,
            "val_loss": history.val_loss,
        })
        return EXIT_OK

    return {**spec.to_dict(), "train": dataclasses.asdict(tc), "checkpoint": args.checkpoint}, run


def _plan_task(args):
    spec = _experiment_spec(args, _activations(args, args.activations))

    def run():
        _report(args, run_task(spec, jobs=args.jobs), spec)
        return EXIT_OK

    return spec.to_dict(), run


def _plan_convergence(args):
    spec = _experiment_spec(args, _activations(args, args.activations))
    archs = [a for a in args.archs.split(",") if a]
    unknown = [a for a in archs if a not in ARCHITECTURES]
    if unknown:
        raise UsageError(f"unknown architecture(s) {unknown}")

    def run():
        records = run_convergence_study(spec, archs, jobs=args.jobs)
        _report(args, [r.result for r in records], spec)
        return EXIT_OK

    return {**spec.to_dict(), "architectures": archs}, run


def _plan_gradflow(args):
    activations = _activations(args, args.activations)
    if min(args.depths, default=0) < 1:
        raise UsageError("depths must be >= 1")

    def run():
        records = run_gradient_flow_probe(args.depths, activations, seed=args.seed,
                                          width=args.width, batch=args.batch,
                                          epochs=args.epochs)
        write_gradient_report(records, args.format, args.out or sys.stdout)
        return EXIT_OK

    resolved = {"depths": args.depths, "activations": [a.id for a in activations],
                "epochs": args.epochs, "width": args.width, "batch": args.batch}
    return resolved, run


def _plan_ksweep(args):
    spec = _experiment_spec(args, [parse_activation("s4", args.variant)])
    for k in args.k:
        ActivationParams(k=k)

    def run():
        sweep = run_k_sweep(spec, args.k, jobs=args.jobs)
        _report(args, sweep.results, spec)
        logger.info(f"best k = {sweep.best_k:g}")
        return EXIT_OK

    return {**spec.to_dict(), "k_grid": args.k}, run


def _plan_rank(args):
    def run():
        results = [r for path in args.reports for r in read_report(path)]
        table = rank_functions(results)
        rows = [
            {"activation": a, **dict(zip(table.tasks, ranks)), "average": avg, "band": band}
            for a, ranks, avg, band in table.rows()
        ]
        if args.format == "json":
            _emit_json(args, {"tasks": table.tasks, "rows": rows})
        else:
            with open_output(args.out or sys.stdout) as out:
                writer = csv.writer(out, lineterminator="\n")
                writer.writerow(["activation", *table.tasks, "average_rank", "band"])
                for a, ranks, avg, band in table.rows():
                    writer.writerow([a, *ranks, repr(avg), band])
        return EXIT_OK

    return {"reports": args.reports}, run


def _plan_bench(args):
    if args.iterations < 0 or args.buffer_len < 1 or args.repeats < 1:
        raise UsageError("need --iterations >= 0, --buffer-len >= 1, --repeats >= 1")
    ActivationParams(k=args.k)

    def run():
        cmp = compare_modes(args.iterations, args.buffer_len, args.k, args.seed,
                            args.repeats, args.warmup, args.variant)
        _emit_json(args, cmp.to_dict())
        return EXIT_OK

    resolved = {"iterations": args.iterations, "buffer_len": args.buffer_len, "k": args.k,
                "repeats": args.repeats, "warmup": args.warmup, "variant": args.variant}
    return resolved, run


PLANS = {
    "eval": _plan_eval,
    "gradcheck": _plan_gradcheck,
    "train": _plan_train,
    "task": _plan_task,
    "convergence": _plan_convergence,
    "gradflow": _plan_gradflow,
    "ksweep": _plan_ksweep,
    "rank": _plan_rank,
    "bench": _plan_bench,
}


def dispatch(argv):
    """
    Parse argv, print the resolved settings to stderr and run the subcommand

    :param argv: Arguments without the program name
    :return: Process exit code
    :rtype: int
    """
    parser, sub = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        command = next((a for a in argv if a in sub.choices), None)
        (sub.choices[command] if command else parser).print_help(sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help / --version
        return EXIT_OK if not e.code else EXIT_USAGE

    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.jobs < 1:
        print("hybridact: --jobs must be >= 1", file=sys.stderr)
        sub.choices[args.command].print_help(sys.stderr)
        return EXIT_USAGE

    try:
        resolved, run = PLANS[args.command](args)
    except (UsageError, InvalidParameterError, ContractViolation) as e:
        print(f"hybridact {args.command}: {e}", file=sys.stderr)
        sub.choices[args.command].print_help(sys.stderr)
        return EXIT_USAGE

    print(json.dumps({"command": args.command, **resolved}, default=str), file=sys.stderr)
    try:
        return run()
    except (DataFormatError, OSError, NumericError, ContractViolation, InvalidParameterError,
            NondifferentiablePointError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"hybridact {args.command}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(dispatch(sys.argv[1:]))
