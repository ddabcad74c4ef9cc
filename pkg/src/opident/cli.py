"""``opident`` command line: gen-data, train, sweep, predict, report.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 parse error,
5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import ConfigError, kinetics_params, load_config, trainer_params
from .data import (
    LAYOUTS,
    detect_layout,
    fit_normalization,
    load_csv,
    normalize,
    to_layout,
)
from .errors import InvalidInputError, NumericalFailure, OpidentError, ParseError
from .mlp import NetworkConfig
from .model import IdentifiedModel
from .reactor import generate_stepback_corpus, write_transient_csv
from .servo import generate_servo_corpus, write_servo_csv
from .sweep import (
    ConfigResult,
    SweepReport,
    SweepSpec,
    default_workers,
    format_stat,
    render_report,
    run_seed,
    run_sweep,
)
from .training import train

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_PARSE, EXIT_NUMERICAL = 0, 2, 3, 4, 5


class ExtrapolationWarning(UserWarning):
    """A prediction input lies outside the range seen during training."""


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _overrides(args) -> dict:
    o = {}
    if getattr(args, "seed", None) is not None:
        o["seed"] = args.seed
    if getattr(args, "trainer", None) is not None:
        o["trainer"] = {"name": args.trainer}
    sweep = {}
    if getattr(args, "runs", None) is not None:
        sweep["runs"] = args.runs
    if getattr(args, "workers", None) is not None:
        sweep["workers"] = args.workers
    if sweep:
        o["sweep"] = sweep
    return o


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(path, cfg):
    """Read a corpus CSV, reorder it into its known layout, apply the row stride."""
    ds = load_csv(path)
    layout = detect_layout(ds)
    if layout is None:
        known = "; ".join(f"{k}: {', '.join(v[0] + (v[1],))}" for k, v in LAYOUTS.items())
        raise InvalidInputError(f"{path}: columns {ds.input_names + (ds.target_name,)} match no known layout ({known})")
    ds = to_layout(ds, layout)
    stride = cfg["data"]["stride"]
    if stride > 1:
        ds = ds.take(slice(None, None, stride))
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return ds, layout, digest


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    csv_path = out / f"{args.system}.csv"
    if args.system == "reactor":
        r = cfg["reactor"]
        corpus = generate_stepback_corpus(kinetics_params(cfg), r["worth_mk"], r["drop_duration_s"],
                                          r["initial_powers"], r["drops"], r["dt_int"])
        write_transient_csv(corpus, csv_path)
        rows = sum(len(t) for t in corpus)
        settings = r
    else:
        s = cfg["servo"]
        corpus = generate_servo_corpus(s["velocities"], s["accelerations"], s["target_position"])
        write_servo_csv(corpus, csv_path)
        rows = sum(len(x) for x in corpus)
        settings = s
    _write_json(out / f"{args.system}.provenance.json", {
        "system": args.system,
        "generator": settings,
        "series": len(corpus),
        "rows": rows,
        "csv": csv_path.name,
        "effective_config": cfg,
        "opident_version": __version__,
    })
    print(f"wrote {rows} rows ({len(corpus)} series) to {csv_path}")
    return EXIT_OK


def _network_config(cfg, input_count) -> NetworkConfig:
    try:
        return NetworkConfig(input_count, tuple(tuple(h) for h in cfg["network"]["hidden"]), 1,
                             cfg["network"]["output_activation"])
    except (InvalidInputError, TypeError, ValueError) as exc:
        raise ConfigError("network", str(exc)) from None


def cmd_train(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    ds, layout, digest = _load_dataset(args.dataset, cfg)
    spec = fit_normalization(ds)
    nds = normalize(ds, spec)
    net_cfg = _network_config(cfg, ds.arity)
    with threadpool_limits(limits=1):
        result = train(net_cfg, nds, cfg["trainer"]["name"], trainer_params(cfg), cfg["seed"])
    model = IdentifiedModel(result.network, spec, layout)
    out = _out_dir(args)
    model.save(out / "model.json")
    record = result.to_dict()
    record["dataset_sha256"] = digest
    record["layout"] = layout
    record["effective_config"] = cfg
    _write_json(out / "train_result.json", record)
    print(f"{result.trainer}: {result.epochs_run} epochs ({result.stop_reason}), "
          f"normalized RMSE {format_stat(result.final_rmse)}; model saved to {out / 'model.json'}")
    return EXIT_OK


def _sweep_spec(cfg) -> SweepSpec:
    sw = cfg["sweep"]
    return SweepSpec(tuple(sw["layer_counts"]), tuple(sw["neuron_counts"]), tuple(sw["activations"]),
                     sw["runs"], cfg["trainer"]["name"], trainer_params(cfg), cfg["seed"],
                     cfg["network"]["output_activation"])


def _progress(result: ConfigResult):
    print(f"  [{result.index + 1:2d}] {result.architecture.label():<22} mean {format_stat(result.mean_rmse)}"
          f"  std {format_stat(result.std_rmse)}  ({result.seconds:.1f} s)", file=sys.stderr)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    ds, layout, digest = _load_dataset(args.dataset, cfg)
    spec = fit_normalization(ds)
    nds = normalize(ds, spec)
    sweep_spec = _sweep_spec(cfg)
    workers = cfg["sweep"]["workers"] or default_workers()
    report = run_sweep(nds, sweep_spec, workers=workers, progress=None if args.quiet else _progress,
                       dataset_fingerprint=digest)
    out = _out_dir(args)
    (out / "report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    doc = report.to_json()
    timings = {"workers": workers, "seconds_per_config": [c.pop("seconds") for c in doc["configs"]]}
    doc["layout"] = layout
    doc["normalization"] = spec.to_dict()
    doc["effective_config"] = cfg
    _write_json(out / "report.json", doc)
    _write_json(out / "timings.json", timings)

    best = report.best
    if best is not None:
        run_values = [v if math.isfinite(v) else math.inf for v in best.run_rmses]
        run = int(np.argmin(run_values))
        seed = run_seed(sweep_spec.master_seed, best.index, run)
        net_cfg = best.architecture.network_config(ds.arity, sweep_spec.output_activation)
        with threadpool_limits(limits=1):
            result = train(net_cfg, nds, sweep_spec.trainer, sweep_spec.params, seed)
        IdentifiedModel(result.network, spec, layout).save(out / "best_model.json")
    print(render_report(report, args.format), end="")
    return EXIT_OK


def _parse_row(text):
    try:
        values = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"--row must be comma-separated numbers, got {text!r}") from None
    return np.array(values)


def _read_prediction_inputs(path, model: IdentifiedModel):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", path=path)
    header = [h.strip() for h in rows[0]]
    names = list(model.input_names)
    if names and set(names) <= set(header):
        cols = [header.index(n) for n in names]
    elif len(header) == model.network.config.input_count:
        cols = list(range(len(header)))
    else:
        raise InvalidInputError(
            f"{path}: expected {model.network.config.input_count} input columns ({', '.join(names)}), "
            f"found {len(header)}")
    values = []
    for line, rec in enumerate(rows[1:], start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(rec)}", line=line, path=path)
        try:
            values.append([float(rec[c]) for c in cols])
        except ValueError:
            raise ParseError("non-numeric cell", line=line, path=path) from None
    if not values:
        raise ParseError("no data rows", path=path)
    return [header[c] for c in cols], np.array(values)


def cmd_predict(args) -> int:
    model = IdentifiedModel.load(args.model)
    n_in = model.network.config.input_count
    if args.row is not None:
        x = _parse_row(args.row)
        if x.shape != (n_in,):
            raise InvalidInputError(
                f"expected {n_in} values ({', '.join(model.input_names)}), got {x.size}")
        names = list(model.input_names)
        x = x[None, :]
    else:
        names, x = _read_prediction_inputs(args.input, model)
    outside = model.extrapolation_mask(x)
    if outside.any():
        cols = sorted({model.input_names[j] if model.input_names else str(j) for j in np.nonzero(outside)[1]})
        warnings.warn(f"{int(outside.any(axis=1).sum())} input row(s) outside the training range "
                      f"(columns: {', '.join(cols)}); prediction is an extrapolation", ExtrapolationWarning,
                      stacklevel=1)
    preds = np.atleast_1d(model.predict(x))
    target = model.normalization.target_name or "prediction"
    if args.row is not None:
        print(repr(float(preds[0])))
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*names, f"predicted_{target}"])
        for row, p in zip(x.tolist(), preds.tolist()):
            writer.writerow([*map(repr, row), repr(p)])
        if args.out:
            out = _out_dir(args)
            (out / "predictions.csv").write_text(buf.getvalue(), encoding="utf-8")
        else:
            sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_report(args) -> int:
    doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
    report = SweepReport.from_json(doc)
    text = render_report(report, args.format)
    if args.out:
        out = _out_dir(args)
        (out / f"report.{'csv' if args.format == 'csv' else 'txt'}").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opident", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"opident {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, out="."):
        p.add_argument("--config", metavar="PATH", help="TOML run configuration")
        if seed:
            p.add_argument("--seed", type=int, metavar="U64", help="master seed (falls back to $OPIDENT_SEED)")
        p.add_argument("--out", metavar="DIR", default=out, help="output directory")

    p = sub.add_parser("gen-data", help="generate a synthetic corpus CSV")
    p.add_argument("system", choices=["reactor", "servo"])
    common(p, seed=False)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one network on a corpus")
    p.add_argument("dataset", help="corpus CSV")
    common(p)
    p.add_argument("--trainer", choices=["lm", "momentum"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run the architecture sweep")
    p.add_argument("dataset", help="corpus CSV")
    common(p)
    p.add_argument("--trainer", choices=["lm", "momentum"])
    p.add_argument("--runs", type=int, metavar="N", help="independent runs per configuration")
    p.add_argument("--workers", type=int, metavar="N", help="worker processes (default: available CPUs)")
    p.add_argument("--format", choices=["csv", "table"], default="table", help="stdout format")
    p.add_argument("--quiet", action="store_true", help="no per-configuration progress on stderr")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="predict in engineering units with a saved model")
    p.add_argument("model", help="model JSON from train or sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--row", help="comma-separated input values")
    src.add_argument("--input", metavar="CSV", help="CSV of input rows")
    p.add_argument("--out", metavar="DIR", help="write predictions.csv here instead of stdout")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="render a sweep report.json")
    p.add_argument("report", help="report.json written by sweep")
    p.add_argument("--format", choices=["csv", "table"], default="table")
    p.add_argument("--out", metavar="DIR", help="write the rendering here instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"opident: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidInputError as exc:
        print(f"opident: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"opident: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"opident: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OpidentError, json.JSONDecodeError, KeyError) as exc:
        print(f"opident: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
