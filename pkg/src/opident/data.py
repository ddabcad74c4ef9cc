"""MISO datasets, divide-by-maximum scaling, and CSV corpora."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateColumnError,
    InvalidInputError,
    ParseError,
    ShapeError,
    UnsupportedRangeError,
)
from .reactor import STANDARD_DROPS, STANDARD_POWERS
from .servo import STANDARD_ACCELERATIONS

REACTOR_INPUTS = ("rod_fraction", "t_s", "initial_power_pct", "drop_pct")
REACTOR_TARGET = "power_pct"
SERVO_INPUTS = ("t_s", "accel_ppu_s2", "vel_ppu_s")
SERVO_TARGET = "pos_ppu"

LAYOUTS = {
    "reactor": (REACTOR_INPUTS, REACTOR_TARGET),
    "servo": (SERVO_INPUTS, SERVO_TARGET),
}


@dataclass(frozen=True, eq=False)
class MisoDataset:
    """Rows of (input vector, scalar target).

    Attributes:
        input_names: one label per input column.
        target_name: label of the target column.
        inputs: array of shape ``(N, len(input_names))``.
        targets: array of shape ``(N,)``.
        normalized: True once the columns have been scaled into [0, 1].
    """

    input_names: tuple
    target_name: str
    inputs: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        names = tuple(self.input_names)
        x = np.array(self.inputs, dtype=float)
        y = np.array(self.targets, dtype=float).reshape(-1)
        if x.ndim == 1 and x.size == 0:
            x = x.reshape(0, len(names))
        if x.ndim != 2 or x.shape[1] != len(names):
            raise ShapeError(f"inputs shape {x.shape} does not match {len(names)} input names")
        if x.shape[0] != y.shape[0]:
            raise ShapeError(f"{x.shape[0]} input rows but {y.shape[0]} targets")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInputError("dataset values must be finite")
        if self.normalized and (np.any(x < 0) or np.any(x > 1) or np.any(y < 0) or np.any(y > 1)):
            raise InvalidInputError("normalized dataset has values outside [0, 1]")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "input_names", names)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    def __len__(self):
        return self.inputs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MisoDataset):
            return NotImplemented
        return (self.input_names == other.input_names and self.target_name == other.target_name
                and self.normalized == other.normalized
                and np.array_equal(self.inputs, other.inputs)
                and np.array_equal(self.targets, other.targets))

    @property
    def arity(self) -> int:
        return len(self.input_names)

    @property
    def rows(self):
        return [(tuple(x), float(y)) for x, y in zip(self.inputs.tolist(), self.targets.tolist())]

    def column(self, name) -> np.ndarray:
        if name == self.target_name:
            return self.targets
        return self.inputs[:, self.input_names.index(name)]

    def take(self, index) -> "MisoDataset":
        return MisoDataset(self.input_names, self.target_name, self.inputs[index],
                           self.targets[index], self.normalized)


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-column maxima used to scale data into [0, 1]."""

    input_max: tuple
    target_max: float
    input_names: tuple = ()
    target_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "input_max", tuple(float(m) for m in self.input_max))
        object.__setattr__(self, "target_max", float(self.target_max))
        object.__setattr__(self, "input_names", tuple(self.input_names))
        for m in (*self.input_max, self.target_max):
            if not (math.isfinite(m) and m > 0):
                raise InvalidInputError("normalization maxima must be positive and finite")

    def to_dict(self) -> dict:
        return {
            "input_names": list(self.input_names),
            "input_max": list(self.input_max),
            "target_name": self.target_name,
            "target_max": self.target_max,
        }

    @classmethod
    def from_dict(cls, d) -> "NormalizationSpec":
        return cls(tuple(d["input_max"]), d["target_max"], tuple(d.get("input_names", ())),
                   d.get("target_name", ""))


def fit_normalization(ds: MisoDataset) -> NormalizationSpec:
    """Record every column's maximum."""
    if ds.normalized:
        raise InvalidInputError("dataset is already normalized")
    if len(ds) == 0:
        raise InvalidInputError("cannot fit normalization on an empty dataset")
    maxima = []
    for name in (*ds.input_names, ds.target_name):
        col = ds.column(name)
        if np.any(col < 0):
            raise UnsupportedRangeError(f"column {name!r} has negative values")
        top = float(col.max())
        if top == 0:
            raise DegenerateColumnError(f"column {name!r} is all zero")
        maxima.append(top)
    return NormalizationSpec(tuple(maxima[:-1]), maxima[-1], ds.input_names, ds.target_name)


def _check_arity(spec: NormalizationSpec, arity: int):
    if len(spec.input_max) != arity:
        raise ShapeError(f"normalization has {len(spec.input_max)} input columns, data has {arity}")


def normalize(ds: MisoDataset, spec: NormalizationSpec) -> MisoDataset:
    _check_arity(spec, ds.arity)
    if ds.normalized:
        raise InvalidInputError("dataset is already normalized")
    x = ds.inputs / np.array(spec.input_max)
    y = ds.targets / spec.target_max
    return MisoDataset(ds.input_names, ds.target_name, x, y, normalized=True)


def normalize_inputs(x, spec: NormalizationSpec) -> np.ndarray:
    """Scale raw input rows; values above the fitted maxima come out above 1."""
    x = np.asarray(x, dtype=float)
    _check_arity(spec, x.shape[-1])
    return x / np.array(spec.input_max)


def denormalize_output(y_norm, spec: NormalizationSpec):
    out = np.asarray(y_norm, dtype=float) * spec.target_max
    return float(out) if out.ndim == 0 else out


def assemble_reactor_dataset(corpus) -> MisoDataset:
    """Rows ``[rod_fraction, t_s, initial_power_pct, drop_pct] -> power_pct``."""
    xs, ys = [], []
    for tr in corpus:
        sc = getattr(tr, "scenario", None)
        if sc is None or sc.initial_power_pct is None or sc.drop_pct is None:
            raise InvalidInputError("reactor transient is missing its scenario tags")
        if sc.initial_power_pct not in STANDARD_POWERS or sc.drop_pct not in STANDARD_DROPS:
            raise InvalidInputError(
                f"scenario ({sc.initial_power_pct}%, {sc.drop_pct}% drop) is not a standard step-back case")
        n = len(tr.t)
        xs.append(np.column_stack([tr.rod_fraction, tr.t, np.full(n, sc.initial_power_pct),
                                   np.full(n, sc.drop_pct)]))
        ys.append(tr.power_pct)
    if not xs:
        raise InvalidInputError("empty reactor corpus")
    return MisoDataset(REACTOR_INPUTS, REACTOR_TARGET, np.vstack(xs), np.concatenate(ys))


def assemble_servo_dataset(corpus, stride: int = 1) -> MisoDataset:
    """Rows ``[t_s, accel_ppu_s2, vel_ppu_s] -> pos_ppu``.

    ``stride`` keeps every stride-th sample of each series (stride 20 turns
    5000 samples into 250).
    """
    if stride < 1:
        raise InvalidInputError("stride must be >= 1")
    xs, ys = [], []
    for s in corpus:
        profile = getattr(s, "profile", None)
        if profile is None:
            raise InvalidInputError("servo series is missing its profile tags")
        if profile.acceleration not in STANDARD_ACCELERATIONS:
            raise InvalidInputError(f"acceleration {profile.acceleration:g} is not a standard setting")
        t = s.t[::stride]
        xs.append(np.column_stack([t, np.full(len(t), profile.acceleration), s.velocity[::stride]]))
        ys.append(s.position[::stride])
    if not xs:
        raise InvalidInputError("empty servo corpus")
    return MisoDataset(SERVO_INPUTS, SERVO_TARGET, np.vstack(xs), np.concatenate(ys))


def detect_layout(ds: MisoDataset):
    """Name of the known layout whose columns ``ds`` carries, or None."""
    for name, (inputs, target) in LAYOUTS.items():
        if ds.target_name == target and set(ds.input_names) == set(inputs):
            return name
    return None


def to_layout(ds: MisoDataset, layout: str) -> MisoDataset:
    """Reorder input columns into a known layout's canonical order."""
    inputs, target = LAYOUTS[layout]
    if ds.target_name != target or set(ds.input_names) != set(inputs):
        raise InvalidInputError(
            f"columns {ds.input_names + (ds.target_name,)} do not match the {layout} layout "
            f"{inputs + (target,)}")
    order = [ds.input_names.index(n) for n in inputs]
    return MisoDataset(inputs, target, ds.inputs[:, order], ds.targets, ds.normalized)


def _fmt(v) -> str:
    return repr(float(v))


def dumps_csv(ds: MisoDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*ds.input_names, ds.target_name])
    for x, y in zip(ds.inputs.tolist(), ds.targets.tolist()):
        writer.writerow([*map(_fmt, x), _fmt(y)])
    return buf.getvalue()


def save_csv(ds: MisoDataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(dumps_csv(ds))


def loads_csv(text: str, path=None) -> MisoDataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", path=path) from None
    header = [h.strip() for h in header]
    if len(header) < 2 or any(not h for h in header):
        raise ParseError("header needs at least two non-empty column names", line=1, path=path)
    rows = []
    for record in reader:
        line = reader.line_num
        if not record:
            continue
        if len(record) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(record)}", line=line, path=path)
        try:
            values = [float(cell) for cell in record]
        except ValueError:
            raise ParseError(f"non-numeric cell in {record!r}", line=line, path=path) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", line=line, path=path)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows", path=path)
    arr = np.array(rows)
    return MisoDataset(tuple(header[:-1]), header[-1], arr[:, :-1], arr[:, -1])


def load_csv(path) -> MisoDataset:
    """Read a CSV whose last column is the target."""
    with open(path, newline="", encoding="utf-8") as fh:
        return loads_csv(fh.read(), path=path)


def fingerprint(ds: MisoDataset) -> str:
    """SHA-256 of the dataset's canonical CSV text."""
    return hashlib.sha256(dumps_csv(ds).encode("utf-8")).hexdigest()
