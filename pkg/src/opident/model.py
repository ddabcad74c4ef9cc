"""A trained network bundled with the scaling it was trained under."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import NormalizationSpec, denormalize_output, normalize_inputs
from .errors import InvalidInputError, ShapeError
from .mlp import Network, predict

MODEL_FORMAT = "opident-model/1"


@dataclass(frozen=True)
class IdentifiedModel:
    """Maps raw engineering-unit inputs to raw-unit predictions.

    This is the only public route from raw inputs to reported outputs: inputs
    are scaled by the stored maxima, passed through the network, and the
    output is scaled back up by the target maximum.
    """

    network: Network
    normalization: NormalizationSpec
    layout: str | None = None

    def __post_init__(self):
        if len(self.normalization.input_max) != self.network.config.input_count:
            raise ShapeError("normalization arity does not match the network input count")

    @property
    def input_names(self) -> tuple:
        return self.normalization.input_names

    def _rows(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim not in (1, 2) or x.shape[-1] != self.network.config.input_count:
            names = ", ".join(self.input_names) or f"{self.network.config.input_count} values"
            raise ShapeError(f"expected {self.network.config.input_count} inputs ({names}), got shape {x.shape}")
        return x

    def extrapolation_mask(self, x) -> np.ndarray:
        """True for every input value outside [0, fitted column maximum]."""
        x = self._rows(x)
        return (x > np.array(self.normalization.input_max)) | (x < 0)

    def predict(self, x):
        """Prediction in original units for one row (float) or many rows (array)."""
        x = self._rows(x)
        return denormalize_output(predict(self.network, normalize_inputs(x, self.normalization)),
                                  self.normalization)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "layout": self.layout,
            "normalization": self.normalization.to_dict(),
            "network": self.network.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "IdentifiedModel":
        if d.get("format") != MODEL_FORMAT:
            raise InvalidInputError(f"unsupported model format {d.get('format')!r}")
        return cls(Network.from_dict(d["network"]), NormalizationSpec.from_dict(d["normalization"]),
                   d.get("layout"))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "IdentifiedModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
