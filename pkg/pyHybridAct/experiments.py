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
Studies: task benchmarks, convergence, gradient flow, k sweeps, ranking and
statistics, plus CSV/JSON reports

Every (activation, seed) run is independent and deterministic, so runs may
be spread over a process pool without changing any reported number.
"""

import csv
import enum
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .activations import K_GRID, S4_KINDS, Activation, ActivationKind, ActivationParams
from .common import ContractViolation, DataFormatError, NumericError, open_output
from .datasets import (
    SplitSpec,
    Task,
    fit_standardizer,
    generate_synthetic_binary,
    load_boston,
    load_iris,
    load_mnist,
    stratified_split,
)
from .network import (
    Init,
    NetworkConfig,
    TrainConfig,
    epochs_to_convergence,
    evaluate,
    gradient_health,
    init_network,
    train,
)

logger = logging.getLogger(__name__)

TASK_ARCHITECTURE = (64, 32, 16)

ARCHITECTURES = {
    "10-1": (10,),
    "50-2": (50, 50),
    "100-3": (100, 100, 100),
}

CONVERGENCE_MAX_EPOCHS = 30

# Reported best-k bands per task
K_BANDS = {
    "binary": (10, 15, 20),
    "multiclass": (5, 10, 15),
    "regression": (5, 10),
}

# Upper average-rank limit of each band, checked in order
RANK_BANDS = (
    (3.3, "Excellent"),
    (4.3, "Good"),
    (5.0, "Moderate"),
    (6.0, "Limited"),
)

CSV_FIELDS = (
    "study",
    "task",
    "activation",
    "variant",
    "k",
    "seed",
    "metric",
    "epochs_to_convergence",
    "wall_clock_s",
    "ci95",
)

IRIS_FILES = ("iris.csv", "iris.data")
BOSTON_FILES = ("housing.csv", "housing.data", "boston.csv")
MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class StudyTask(enum.Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"
    REGRESSION = "regression"
    MNIST = "mnist"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ExperimentSpec:
    """
    What a study trains

    :param task: StudyTask
    :param activations: Hidden activations under test
    :param hidden_layers: Architecture skeleton (input/output dims come from the data)
    :param seeds: One run per seed (initialisation, validation split, shuffling)
    :param train_overrides: TrainConfig fields replacing the defaults
    :param data_dir: Directory holding the Iris/Boston/MNIST files
    :param split_seed: Seed of the fixed train/test split and of the synthetic set
    :param variant: "rescaled" or "literal", the hybrid forms used by default lists
    :param mnist_limit: MNIST training rows (None: all 60,000)
    :param header: Data files start with a header line
    """

    task: StudyTask
    activations: tuple
    hidden_layers: tuple = TASK_ARCHITECTURE
    seeds: tuple = (1, 2, 3)
    train_overrides: dict = field(default_factory=dict)
    data_dir: str = "."
    split_seed: int = 0
    variant: str = "rescaled"
    mnist_limit: int = 10000
    header: bool = False
    init: Init = Init.GLOROT_UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "task", StudyTask(self.task))
        object.__setattr__(self, "activations", tuple(self.activations))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))
        if not self.seeds:
            raise ContractViolation("An experiment needs at least one seed")
        if not self.activations:
            raise ContractViolation("An experiment needs at least one activation")
        if self.variant not in ("literal", "rescaled"):
            raise ContractViolation(f"Unknown variant {self.variant!r}")
        # Fails early on unknown TrainConfig fields
        self.train_config(self.seeds[0])

    def train_config(self, seed, **extra):
        return TrainConfig(**{**self.train_overrides, **extra, "seed": seed})

    def to_dict(self):
        return {
            "task": self.task.value,
            "activations": [a.id for a in self.activations],
            "hidden_layers": list(self.hidden_layers),
            "seeds": list(self.seeds),
            "train_overrides": dict(self.train_overrides),
            "data_dir": str(self.data_dir),
            "split_seed": self.split_seed,
            "variant": self.variant,
            "mnist_limit": self.mnist_limit,
            "header": self.header,
            "init": self.init.value,
        }


@dataclass
class RunResult:
    """
    One activation's runs over all seeds of a study

    metrics, epochs and wall_clock are aligned with seeds; seeds whose run
    aborted are listed in failed_seeds only.
    """

    study: str
    task: str
    activation: str
    variant: str
    k: float
    metric_name: str
    seeds: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    wall_clock: list = field(default_factory=list)
    failed_seeds: list = field(default_factory=list)

    @property
    def mean(self):
        return float(np.mean(self.metrics)) if self.metrics else math.nan

    @property
    def ci95(self):
        return confidence_half_width(self.metrics)

    @property
    def mean_epochs(self):
        return float(np.mean(self.epochs)) if self.epochs else math.nan

    @property
    def higher_is_better(self):
        return self.metric_name == "accuracy"

    def to_dict(self):
        return {
            "study": self.study,
            "task": self.task,
            "activation": self.activation,
            "variant": self.variant,
            "k": self.k,
            "metric_name": self.metric_name,
            "seeds": list(self.seeds),
            "metrics": list(self.metrics),
            "epochs": list(self.epochs),
            "wall_clock": list(self.wall_clock),
            "failed_seeds": list(self.failed_seeds),
            "mean": _json_float(self.mean),
            "ci95": _json_float(self.ci95),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["study"], d["task"], d["activation"], d["variant"], d["k"],
            d["metric_name"], list(d["seeds"]), list(d["metrics"]),
            list(d["epochs"]), list(d["wall_clock"]), list(d.get("failed_seeds", [])),
        )


@dataclass
class ConvergenceRecord:
    """
    Seed-mean epochs-to-convergence of one activation on one architecture
    """

    architecture: str
    activation: str
    epochs: float
    max_epochs: int
    result: RunResult


@dataclass
class GradientHealthRecord:
    """
    Per-hidden-layer gradient statistics of one probe

    :param phase: "init" or "trained"
    """

    depth: int
    activation: str
    phase: str
    seed: int
    mean_abs_grad: list
    mean_derivative: list
    dead_fraction: list

    @property
    def grad_min(self):
        return min(self.mean_abs_grad)

    @property
    def grad_max(self):
        return max(self.mean_abs_grad)

    @property
    def derivative_min(self):
        return min(self.mean_derivative)

    @property
    def derivative_max(self):
        return max(self.mean_derivative)

    @property
    def total_dead_fraction(self):
        return float(np.mean(self.dead_fraction))

    def to_dict(self):
        return {
            "depth": self.depth,
            "activation": self.activation,
            "phase": self.phase,
            "seed": self.seed,
            "mean_abs_grad": list(self.mean_abs_grad),
            "mean_derivative": list(self.mean_derivative),
            "dead_fraction": list(self.dead_fraction),
            "grad_min": self.grad_min,
            "grad_max": self.grad_max,
            "derivative_min": self.derivative_min,
            "derivative_max": self.derivative_max,
        }


@dataclass
class KSweepResult:
    """
    Seed-mean metric of S4 per steepness value
    """

    task: str
    k_values: list
    metrics: list
    best_k: float
    results: list = field(default_factory=list)

    @property
    def in_band(self):
        band = K_BANDS.get(self.task)
        return band is None or self.best_k in band


@dataclass
class RankTable:
    """
    Per-task ranks, average rank and band for each activation
    """

    tasks: list
    ranks: dict
    average: dict
    band: dict

    def rows(self):
        """
        (activation, [rank per task], average, band), best average first
        """
        order = sorted(self.ranks, key=lambda a: (self.average[a], a))
        return [
            (a, [self.ranks[a][t] for t in self.tasks], self.average[a], self.band[a])
            for a in order
        ]


@dataclass
class TTestResult:
    t: float
    p: float
    significant: bool
    degenerate: bool


def _json_float(value):
    return None if value is None or not math.isfinite(value) else value


def confidence_half_width(values, confidence=0.95):
    """
    t_{(1+c)/2, n-1} * s / sqrt(n), NaN below two values

    :param values: Per-seed metrics
    :rtype: float
    """
    n = len(values)
    if n < 2:
        return math.nan
    s = float(np.std(values, ddof=1))
    return float(stats.t.ppf(0.5 + confidence / 2.0, n - 1) * s / math.sqrt(n))


def paired_t_test(metrics_a, metrics_b, alpha=0.05):
    """
    Two-sided paired t-test on per-seed metrics

    A (numerically) constant difference gives degenerate=True and NaN t/p.

    :param metrics_a: Per-seed metrics of the first activation
    :param metrics_b: Per-seed metrics of the second, paired by seed
    :rtype: TTestResult
    """
    a = np.asarray(metrics_a, dtype=np.float64)
    b = np.asarray(metrics_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ContractViolation("Paired t-test needs two equal-length lists of >= 2 values")
    d = a - b
    n = d.size
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd <= 1e-9 * max(1.0, abs(mean)):
        return TTestResult(math.nan, math.nan, False, True)
    t = mean / (sd / math.sqrt(n))
    p = float(2.0 * stats.t.sf(abs(t), n - 1))
    return TTestResult(float(t), p, p < alpha, False)


def band_for(average_rank):
    """
    Qualitative band of an average rank
    """
    for limit, name in RANK_BANDS:
        if average_rank <= limit:
            return name
    return "Avoid"


def rank_table_from_ranks(ranks):
    """
    Build a RankTable from given per-task ranks

    :param ranks: {activation: {task: rank}}
    :rtype: RankTable
    """
    tasks = sorted({t for per_task in ranks.values() for t in per_task})
    for activation, per_task in ranks.items():
        missing = [t for t in tasks if t not in per_task]
        if missing:
            raise ContractViolation(f"No {activation} result for task(s) {missing}")
    average = {a: float(np.mean([r[t] for t in tasks])) for a, r in ranks.items()}
    return RankTable(tasks, ranks, average, {a: band_for(v) for a, v in average.items()})


def rank_functions(results):
    """
    Rank activations per task (ties share the smaller rank)

    Higher accuracy ranks better, lower MSE ranks better.

    :param results: RunResults across tasks (one per activation and task)
    :rtype: RankTable
    """
    by_task = {}
    for r in results:
        by_task.setdefault(r.task, {})
        if r.activation in by_task[r.task]:
            raise ContractViolation(f"Duplicate {r.activation} result for task {r.task}")
        by_task[r.task][r.activation] = r

    activations = sorted({r.activation for r in results})
    ranks = {a: {} for a in activations}
    for task, cells in by_task.items():
        missing = [a for a in activations if a not in cells]
        if missing:
            raise ContractViolation(f"Task {task} has no result for {missing}")
        failed = [a for a in activations if not math.isfinite(cells[a].mean)]
        if failed:
            raise ContractViolation(f"Task {task}: no successful run for {failed}")
        scores = np.array([cells[a].mean for a in activations])
        if cells[activations[0]].higher_is_better:
            scores = -scores
        for a, rank in zip(activations, stats.rankdata(scores, method="min")):
            ranks[a][task] = int(rank)
    return rank_table_from_ranks(ranks)


def _find_file(data_dir, names):
    for name in names:
        for candidate in (name, name + ".gz"):
            path = os.path.join(data_dir, candidate)
            if os.path.exists(path):
                return path
    raise FileNotFoundError(f"None of {list(names)} found in {data_dir}")


def load_task_data(spec):
    """
    Standardized (train, test) parts of a study's task

    Fixed 80/20 split seeded by split_seed. MNIST uses its canonical
    train/test files, pixels scaled to [0, 1] and not standardized.

    :type spec: ExperimentSpec
    :rtype: tuple
    """
    task = spec.task
    if task is StudyTask.MNIST:
        images, labels = (_find_file(spec.data_dir, [n]) for n in MNIST_FILES["train"])
        train_set = load_mnist(images, labels, limit=spec.mnist_limit)
        images, labels = (_find_file(spec.data_dir, [n]) for n in MNIST_FILES["test"])
        return train_set, load_mnist(images, labels)

    if task is StudyTask.BINARY:
        data = generate_synthetic_binary(1000, 20, seed=spec.split_seed)
    elif task is StudyTask.MULTICLASS:
        data = load_iris(_find_file(spec.data_dir, IRIS_FILES), header=spec.header)
    else:
        data = load_boston(_find_file(spec.data_dir, BOSTON_FILES), header=spec.header)

    train_part, test_part = stratified_split(
        data, SplitSpec(0.8, spec.split_seed, data.is_classification)
    )
    scaler = fit_standardizer(train_part)
    return scaler.apply(train_part), scaler.apply(test_part)


def _k_of(activation):
    return activation.params.k if activation.kind in S4_KINDS else None


def _run_one(job):
    """
    Train and evaluate one (activation, seed); never raises
    """
    config, train_set, test_set, tc = job
    start = time.perf_counter()
    try:
        net, history = train(config, train_set, tc)
        metric = evaluate(net, test_set)
    except (NumericError, ContractViolation) as e:
        logger.error(
            f"Run {config.hidden_activation.id} seed {tc.seed} aborted: {e}"
        )
        return {"seed": tc.seed, "error": str(e)}
    return {
        "seed": tc.seed,
        "metric": metric,
        "epochs": epochs_to_convergence(history),
        "wall_clock": time.perf_counter() - start,
        "best_epoch": history.best_epoch,
    }


def _map(jobs, n_jobs):
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(job) for job in jobs]


def _run_grid(spec, study, train_set, test_set, activations, hidden_layers, tc_extra, n_jobs):
    jobs = []
    for act in activations:
        config = NetworkConfig.for_dataset(train_set, hidden_layers, act, spec.init)
        for seed in spec.seeds:
            jobs.append((config, train_set, test_set, spec.train_config(seed, **tc_extra)))
    outcomes = iter(_map(jobs, n_jobs))

    metric_name = "mse" if train_set.task is Task.REGRESSION else "accuracy"
    results = []
    for act in activations:
        r = RunResult(study, spec.task.value, act.id, act.variant, _k_of(act), metric_name)
        for _ in spec.seeds:
            out = next(outcomes)
            if "error" in out:
                r.failed_seeds.append(out["seed"])
                continue
            r.seeds.append(out["seed"])
            r.metrics.append(out["metric"])
            r.epochs.append(out["epochs"])
            r.wall_clock.append(out["wall_clock"])
        logger.info(f"{study} {spec.task} {act.id}: mean {metric_name} {r.mean:.6g}")
        results.append(r)
    return results


def run_task(spec, jobs=1, data=None):
    """
    Train every activation x seed and evaluate on the held-out test part

    :param spec: Study description
    :type spec: ExperimentSpec
    :param jobs: Worker processes (1: serial)
    :param data: Preloaded (train, test), loaded from spec if None
    :return: One RunResult per activation
    :rtype: list
    """
    train_set, test_set = data if data is not None else load_task_data(spec)
    return _run_grid(spec, "task", train_set, test_set, spec.activations,
                     spec.hidden_layers, {}, jobs)


def run_convergence_study(spec, architectures=tuple(ARCHITECTURES), jobs=1, data=None):
    """
    Seed-mean epochs-to-convergence per architecture and activation

    Runs are capped at 30 epochs.

    :rtype: list of ConvergenceRecord
    """
    train_set, test_set = data if data is not None else load_task_data(spec)
    records = []
    for arch in architectures:
        if arch not in ARCHITECTURES:
            raise ContractViolation(f"Unknown architecture {arch!r}")
        results = _run_grid(
            spec, f"convergence-{arch}", train_set, test_set, spec.activations,
            ARCHITECTURES[arch], {"max_epochs": CONVERGENCE_MAX_EPOCHS}, jobs,
        )
        for r in results:
            records.append(
                ConvergenceRecord(arch, r.activation, r.mean_epochs, CONVERGENCE_MAX_EPOCHS, r)
            )
    return records


def run_gradient_flow_probe(depths, activations, seed=1, width=100, batch=256,
                            epochs=5, split_seed=0):
    """
    Gradient statistics at initialisation and after a few training epochs

    Each depth builds width-unit hidden layers on the standardized synthetic
    binary task; the probe batch is the first batch rows of the training part.

    :param depths: Hidden layer counts
    :param activations: Activations to probe
    :param seed: Initialisation/training seed
    :rtype: list of GradientHealthRecord
    """
    data = generate_synthetic_binary(1000, 20, seed=split_seed)
    train_part, _ = stratified_split(data, SplitSpec(0.8, split_seed, True))
    train_part = fit_standardizer(train_part).apply(train_part)
    probe_x = train_part.features[:batch]
    probe_y = train_part.targets[:batch]

    records = []
    for depth in depths:
        for act in activations:
            config = NetworkConfig.for_dataset(train_part, (width,) * depth, act)
            tc = TrainConfig(max_epochs=epochs, patience=epochs, seed=seed)
            phases = (
                ("init", init_network(config, seed)),
                ("trained", train(config, train_part, tc)[0]),
            )
            for phase, net in phases:
                health = gradient_health(net, probe_x, probe_y)
                records.append(
                    GradientHealthRecord(
                        depth, act.id, phase, seed,
                        [h.mean_abs_grad for h in health],
                        [h.mean_derivative for h in health],
                        [h.dead_fraction for h in health],
                    )
                )
                logger.debug(
                    f"depth {depth} {act.id} {phase}: dead "
                    f"{records[-1].total_dead_fraction:.3f}"
                )
    return records


def run_k_sweep(spec, k_grid=K_GRID, jobs=1, data=None):
    """
    S4 (in the spec's variant) trained at every k of the grid

    Ties resolve to the first k in grid order.

    :rtype: KSweepResult
    """
    if not k_grid:
        raise ContractViolation("Empty k grid")
    kind = ActivationKind.S4_LITERAL if spec.variant == "literal" else ActivationKind.S4_RESCALED
    activations = [Activation(kind, ActivationParams(k=float(k))) for k in k_grid]
    train_set, test_set = data if data is not None else load_task_data(spec)
    results = _run_grid(spec, "ksweep", train_set, test_set, activations,
                        spec.hidden_layers, {}, jobs)
    metrics = [r.mean for r in results]
    sign = 1.0 if results[0].higher_is_better else -1.0
    best = max(range(len(metrics)),
               key=lambda i: (sign * metrics[i] if math.isfinite(metrics[i]) else -math.inf, -i))
    return KSweepResult(spec.task.value, [float(k) for k in k_grid], metrics,
                        float(k_grid[best]), results)


def _environment():
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "precision": "float64",
    }


def _csv_float(value):
    return "" if value is None or not math.isfinite(value) else repr(float(value))


def _csv_rows(result, timing):
    k = _csv_float(result.k) if result.k is not None else ""
    base = [result.study, result.task, result.activation, result.variant, k]
    for seed, metric, epochs, wall in zip(
        result.seeds, result.metrics, result.epochs, result.wall_clock
    ):
        yield base + [str(seed), repr(float(metric)), str(epochs),
                      _csv_float(wall) if timing else "", ""]
    if result.metrics:
        timed = [w for w in result.wall_clock if w is not None]
        wall = float(np.mean(timed)) if len(timed) == len(result.wall_clock) else None
        yield base + ["mean", repr(result.mean), _csv_float(result.mean_epochs),
                      _csv_float(wall) if timing else "", _csv_float(result.ci95)]


def write_report(results, fmt, path, spec=None, timing=True, study=None):
    """
    Write RunResults as CSV (one row per seed plus a "mean" row) or JSON

    :param results: RunResults
    :param fmt: "csv" or "json"
    :param path: Output file
    :param spec: ExperimentSpec recorded in the JSON document
    :param timing: False blanks the wall-clock fields
    """
    fmt = str(fmt).lower()
    if fmt not in ("csv", "json"):
        raise ContractViolation(f"Unknown report format {fmt!r}")
    try:
        with open_output(path) as fh:
            if fmt == "csv":
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_FIELDS)
                for r in results:
                    writer.writerows(_csv_rows(r, timing))
            else:
                docs = []
                for r in results:
                    d = r.to_dict()
                    if not timing:
                        d["wall_clock"] = [None] * len(d["wall_clock"])
                    docs.append(d)
                json.dump(
                    {
                        "study": study or (results[0].study if results else ""),
                        "spec": spec.to_dict() if spec is not None else None,
                        "results": docs,
                        "environment": _environment(),
                    },
                    fh,
                    indent=1,
                    allow_nan=False,
                )
    except OSError as e:
        raise type(e)(f"Cannot write report {path} : {e.strerror}") from e
    logger.info(f"Report written to {path}")


def _read_csv_report(path, fh):
    results = {}
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise DataFormatError(path, f"unexpected header {reader.fieldnames}", 1)
    for lineno, row in enumerate(reader, 2):
        key = (row["study"], row["task"], row["activation"], row["variant"], row["k"])
        if key not in results:
            k = float(row["k"]) if row["k"] else None
            metric_name = "mse" if row["task"] == "regression" else "accuracy"
            results[key] = RunResult(*key[:4], k, metric_name)
        if row["seed"] == "mean":
            continue
        r = results[key]
        try:
            r.seeds.append(int(row["seed"]))
            r.metrics.append(float(row["metric"]))
            r.epochs.append(int(row["epochs_to_convergence"]))
            r.wall_clock.append(float(row["wall_clock_s"]) if row["wall_clock_s"] else None)
        except ValueError as e:
            raise DataFormatError(path, str(e), lineno) from None
    return list(results.values())


def read_report(path):
    """
    Reload the RunResults of a report written by write_report

    :rtype: list of RunResult
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            if str(path).lower().endswith(".json"):
                doc = json.load(fh)
                return [RunResult.from_dict(d) for d in doc["results"]]
            return _read_csv_report(path, fh)
    except OSError as e:
        raise type(e)(f"Cannot read report {path} : {e.strerror}") from e
    except (KeyError, json.JSONDecodeError) as e:
        raise DataFormatError(path, f"malformed report ({e})") from None


def write_gradient_report(records, fmt, path):
    """
    Write GradientHealthRecords, CSV rows per layer or one JSON document
    """
    try:
        with open_output(path) as fh:
            if str(fmt).lower() == "csv":
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(("study", "activation", "depth", "phase", "seed", "layer",
                                 "mean_abs_grad", "mean_derivative", "dead_fraction",
                                 "derivative_min", "derivative_max"))
                for r in records:
                    for layer, values in enumerate(
                        zip(r.mean_abs_grad, r.mean_derivative, r.dead_fraction), 1
                    ):
                        writer.writerow(["gradflow", r.activation, r.depth, r.phase, r.seed,
                                         layer] + [repr(float(v)) for v in values]
                                        + [repr(float(r.derivative_min)), repr(float(r.derivative_max))])
            else:
                json.dump({"study": "gradflow",
                           "results": [r.to_dict() for r in records],
                           "environment": _environment()}, fh, indent=1)
    except OSError as e:
        raise type(e)(f"Cannot write report {path} : {e.strerror}") from e
