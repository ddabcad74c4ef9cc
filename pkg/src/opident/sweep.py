"""Architecture sweep: enumerate configurations, train each repeatedly, aggregate RMSE.

Run ``r`` of configuration ``c`` is seeded with ``(master_seed, c, r)``, so
every run is independent of scheduling and of how many workers execute the
sweep. BLAS is pinned to one thread inside each run for the same reason.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .data import MisoDataset, fingerprint
from .errors import InvalidInputError, NoValidConfigError, NumericalFailure
from .mlp import Activation, NetworkConfig
from .training import TRAINERS, default_params

TIE_TOLERANCE = 1e-6
UNSTABLE_FRACTION = 0.25
REPORT_COLUMNS = ("layers", "neurons", "act1", "act2", "mean_rmse", "std_rmse", "failed_runs", "is_best")


@dataclass(frozen=True)
class Architecture:
    """Hidden-layer layout of one sweep row: equal width in every hidden layer."""

    neurons: int
    activations: tuple

    def __post_init__(self):
        object.__setattr__(self, "activations", tuple(Activation.parse(a) for a in self.activations))

    @property
    def layers(self) -> int:
        return len(self.activations)

    def network_config(self, input_count: int, output_activation="linear") -> NetworkConfig:
        return NetworkConfig(input_count, tuple((self.neurons, a) for a in self.activations),
                             1, output_activation)

    def n_weights(self, input_count: int) -> int:
        return self.network_config(input_count).n_weights

    def label(self) -> str:
        return f"{self.layers}x{self.neurons} " + "/".join(a.value for a in self.activations)


@dataclass(frozen=True)
class SweepSpec:
    layer_counts: tuple = (1, 2)
    neuron_counts: tuple = (5, 10, 15, 20, 25)
    activations: tuple = ("tansig", "logsig")
    runs_per_config: int = 20
    trainer: str = "lm"
    params: object = None
    master_seed: int = 0
    output_activation: str = "linear"

    def __post_init__(self):
        if self.trainer not in TRAINERS:
            raise InvalidInputError(f"unknown trainer {self.trainer!r}")
        if self.params is None:
            object.__setattr__(self, "params", default_params(self.trainer))
        if self.runs_per_config < 1:
            raise InvalidInputError("runs_per_config must be >= 1")
        if any(n < 1 for n in self.neuron_counts) or any(k < 1 for k in self.layer_counts):
            raise InvalidInputError("layer and neuron counts must be positive")
        for a in self.activations:
            if Activation.parse(a) is Activation.LINEAR:
                raise InvalidInputError("hidden activations may not be linear")
        if self.master_seed < 0:
            raise InvalidInputError("master_seed must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params)
        return d


@dataclass(frozen=True)
class ConfigResult:
    """Statistics of one configuration.

    ``run_rmses`` holds NaN for runs that failed numerically; those runs are
    excluded from ``mean_rmse`` and ``std_rmse``.
    """

    index: int
    architecture: Architecture
    input_count: int
    run_rmses: tuple
    mean_rmse: float
    std_rmse: float
    failed_runs: int
    single_run: bool
    unstable: bool
    seconds: float = field(default=0.0, compare=False)

    @property
    def n_weights(self) -> int:
        return self.architecture.n_weights(self.input_count)

    def scaled(self, factor: float) -> "ConfigResult":
        return summarize(self.index, self.architecture, self.input_count,
                         [r * factor for r in self.run_rmses], self.seconds)


def enumerate_configs(spec: SweepSpec = SweepSpec()) -> list:
    """1-layer block then 2-layer block; widths ascending; activations in product order."""
    acts = [Activation.parse(a) for a in spec.activations]
    out = []
    for layers in sorted(spec.layer_counts):
        combos = [()]
        for _ in range(layers):
            combos = [c + (a,) for c in combos for a in acts]
        for n in sorted(spec.neuron_counts):
            out.extend(Architecture(n, combo) for combo in combos)
    return out


def run_seed(master_seed: int, config_index: int, run: int) -> tuple:
    return (int(master_seed), int(config_index), int(run))


def sample_stats(values):
    """Mean and sample (n-1) standard deviation; std is 0 for a single value."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(arr))
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def summarize(index, architecture, input_count, run_rmses, seconds=0.0) -> ConfigResult:
    rmses = tuple(float(r) for r in run_rmses)
    ok = [r for r in rmses if math.isfinite(r)]
    failed = len(rmses) - len(ok)
    mean, std = sample_stats(ok)
    unstable = not ok or failed > UNSTABLE_FRACTION * len(rmses)
    return ConfigResult(index, architecture, input_count, rmses, mean, std, failed,
                        len(ok) == 1, unstable, seconds)


# worker-process state, installed once per process by _init_worker
_WORKER = {}


def _init_worker(inputs, targets, names, target_name, trainer, params, output_activation):
    _WORKER["dataset"] = MisoDataset(names, target_name, inputs, targets, normalized=True)
    _WORKER["trainer"] = trainer
    _WORKER["params"] = params
    _WORKER["output_activation"] = output_activation


def _run_task(task):
    index, arch, seed = task
    ds = _WORKER["dataset"]
    fn = TRAINERS[_WORKER["trainer"]][0]
    config = arch.network_config(ds.arity, _WORKER["output_activation"])
    start = time.perf_counter()
    with threadpool_limits(limits=1):
        try:
            value = fn(config, ds, _WORKER["params"], seed).final_rmse
        except (NumericalFailure, FloatingPointError):
            value = math.nan
    return value, time.perf_counter() - start


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _execute(tasks, dataset, trainer, params, output_activation, workers):
    init_args = (dataset.inputs, dataset.targets, dataset.input_names, dataset.target_name,
                 trainer, params, output_activation)
    if workers <= 1:
        saved = dict(_WORKER)
        _init_worker(*init_args)
        try:
            return [_run_task(t) for t in tasks]
        finally:
            _WORKER.clear()
            _WORKER.update(saved)
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=init_args) as pool:
        return list(pool.map(_run_task, tasks, chunksize=1))


def run_config(architecture: Architecture, dataset: MisoDataset, trainer="lm", params=None, runs=20,
               master_seed=0, config_index=0, output_activation="linear", workers=1) -> ConfigResult:
    """Train one configuration ``runs`` times and aggregate its RMSE."""
    if not dataset.normalized:
        raise InvalidInputError("sweeps require a normalized dataset")
    params = default_params(trainer) if params is None else params
    tasks = [(config_index, architecture, run_seed(master_seed, config_index, r)) for r in range(runs)]
    out = _execute(tasks, dataset, trainer, params, output_activation, workers)
    return summarize(config_index, architecture, dataset.arity, [v for v, _ in out],
                     sum(s for _, s in out))


@dataclass(frozen=True)
class SweepReport:
    results: tuple
    best_index: int | None
    dataset_fingerprint: str
    master_seed: int
    spec: SweepSpec | None = None

    @property
    def best(self) -> ConfigResult | None:
        for r in self.results:
            if r.index == self.best_index:
                return r
        return None

    @property
    def total_runs(self) -> int:
        return sum(len(r.run_rmses) for r in self.results)

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_dict() if self.spec else None,
            "dataset_sha256": self.dataset_fingerprint,
            "master_seed": self.master_seed,
            "best_index": self.best_index,
            "configs": [
                {
                    "index": r.index,
                    "label": r.architecture.label(),
                    "neurons": r.architecture.neurons,
                    "activations": [a.value for a in r.architecture.activations],
                    "n_weights": r.n_weights,
                    "run_rmses": [None if math.isnan(v) else v for v in r.run_rmses],
                    "mean_rmse": r.mean_rmse,
                    "std_rmse": r.std_rmse,
                    "failed_runs": r.failed_runs,
                    "single_run": r.single_run,
                    "unstable": r.unstable,
                    "seconds": r.seconds,
                }
                for r in self.results
            ],
        }

    @classmethod
    def from_json(cls, doc) -> "SweepReport":
        """Rebuild a report from :meth:`to_json` output (the sweep settings are not restored)."""
        try:
            input_count = doc.get("normalization", {}).get("input_max")
            results = []
            for c in doc["configs"]:
                arch = Architecture(c["neurons"], tuple(c["activations"]))
                runs = tuple(math.nan if v is None else float(v) for v in c["run_rmses"])
                n_in = len(input_count) if input_count else _input_count_from_weights(arch, c["n_weights"])
                if runs:
                    res = summarize(c["index"], arch, n_in, runs, c.get("seconds", 0.0))
                else:
                    res = ConfigResult(c["index"], arch, n_in, (), float(c["mean_rmse"]), float(c["std_rmse"]),
                                       int(c["failed_runs"]), bool(c["single_run"]), bool(c["unstable"]))
                results.append(res)
            return cls(tuple(results), doc["best_index"], doc["dataset_sha256"], doc["master_seed"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed sweep report: {exc}") from None


def _input_count_from_weights(arch: Architecture, n_weights: int) -> int:
    # first layer holds neurons * (inputs + 1) weights; the rest does not depend on inputs
    rest = arch.n_weights(1) - 2 * arch.neurons
    return (n_weights - rest) // arch.neurons - 1


def select_best(report) -> int:
    """Index of the configuration with the lowest mean RMSE.

    Means within ``TIE_TOLERANCE`` of the minimum tie; ties go to the smaller
    std, then fewer weights, then enumeration order. Unstable configurations
    are never selected.
    """
    results = report.results if isinstance(report, SweepReport) else report
    if not results:
        raise InvalidInputError("empty report")
    valid = [r for r in results if not r.unstable and math.isfinite(r.mean_rmse)]
    if not valid:
        raise NoValidConfigError("every configuration is unstable")
    lowest = min(r.mean_rmse for r in valid)
    tied = [r for r in valid if r.mean_rmse - lowest <= TIE_TOLERANCE]
    return min(tied, key=lambda r: (r.std_rmse, r.n_weights, r.index)).index


def build_report(results, dataset_fingerprint: str, master_seed: int, spec=None) -> SweepReport:
    results = tuple(results)
    try:
        best = select_best(results)
    except NoValidConfigError:
        best = None
    return SweepReport(results, best, dataset_fingerprint, master_seed, spec)


def run_sweep(dataset: MisoDataset, spec: SweepSpec = SweepSpec(), workers: int = 1,
              progress=None, dataset_fingerprint: str | None = None) -> SweepReport:
    """Train every configuration of ``spec`` and build the report.

    ``progress`` is called with each ConfigResult in enumeration order.
    ``dataset_fingerprint`` defaults to the hash of the dataset's canonical CSV.
    """
    if not dataset.normalized:
        raise InvalidInputError("sweeps require a normalized dataset")
    archs = enumerate_configs(spec)
    runs = spec.runs_per_config
    tasks = [(c, arch, run_seed(spec.master_seed, c, r)) for c, arch in enumerate(archs) for r in range(runs)]
    out = _execute(tasks, dataset, spec.trainer, spec.params, spec.output_activation, workers)
    results = []
    for c, arch in enumerate(archs):
        chunk = out[c * runs:(c + 1) * runs]
        results.append(summarize(c, arch, dataset.arity, [v for v, _ in chunk], sum(s for _, s in chunk)))
        if progress is not None:
            progress(results[-1])
    digest = fingerprint(dataset) if dataset_fingerprint is None else dataset_fingerprint
    return build_report(results, digest, spec.master_seed, spec)


def format_stat(value: float) -> str:
    """Scientific notation below 1e-3, four decimals otherwise."""
    if not math.isfinite(value):
        return "nan"
    if abs(value) < 1e-3:
        return f"{value:.2e}"
    return f"{value:.4f}"


def _csv_float(value: float) -> str:
    return "nan" if math.isnan(value) else repr(float(value))


def render_report(report: SweepReport, format: str = "csv") -> str:
    """Render as CSV (full precision) or as a fixed-width text table."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in report.results:
            acts = [a.value for a in r.architecture.activations]
            writer.writerow([
                r.architecture.layers, r.architecture.neurons, acts[0], acts[1] if len(acts) > 1 else "",
                _csv_float(r.mean_rmse), _csv_float(r.std_rmse), r.failed_runs,
                int(r.index == report.best_index),
            ])
        return buf.getvalue()
    if format == "table":
        header = f"{'layers':>6}  {'neurons':>7}  {'activation':<14}  {'mean RMSE':>10}  {'std RMSE':>10}  {'failed':>6}"
        lines = [header, "-" * len(header)]
        for r in report.results:
            acts = "/".join(a.value for a in r.architecture.activations)
            mark = "  *" if r.index == report.best_index else ""
            lines.append(
                f"{r.architecture.layers:>6}  {r.architecture.neurons:>7}  {acts:<14}  "
                f"{format_stat(r.mean_rmse):>10}  {format_stat(r.std_rmse):>10}  {r.failed_runs:>6}{mark}")
        return "\n".join(lines) + "\n"
    raise InvalidInputError(f"unknown report format {format!r}")


def parse_report_csv(text: str) -> list:
    """Rows of a report CSV as dicts with numeric fields converted."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise InvalidInputError(f"not a sweep report: columns {reader.fieldnames}")
    rows = []
    for row in reader:
        rows.append({
            "layers": int(row["layers"]),
            "neurons": int(row["neurons"]),
            "act1": row["act1"],
            "act2": row["act2"] or None,
            "mean_rmse": float(row["mean_rmse"]),
            "std_rmse": float(row["std_rmse"]),
            "failed_runs": int(row["failed_runs"]),
            "is_best": row["is_best"] == "1",
        })
    return rows


def report_from_stats(rows, input_count: int, dataset_fingerprint: str = "", master_seed: int = 0) -> SweepReport:
    """Build a report from literal ``(architecture, mean, std)`` triples.

    Applies the selection rule to summary statistics whose per-run values
    are not available.
    """
    results = []
    for i, (arch, mean, std) in enumerate(rows):
        results.append(ConfigResult(i, arch, input_count, (), float(mean), float(std), 0, False, False))
    return build_report(results, dataset_fingerprint, master_seed)
