"""Surface documents: the on-disk JSON format and its (de)serialization.

Documents round-trip bit-exactly: floats are serialized with Python's
shortest round-trip repr and parsed back to the identical doubles, and key
order is fixed, so identical inputs produce byte-identical files.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import SampledCurve, SampledSurface

FORMAT_VERSION = 1


@dataclass
class SurfaceDocument:
    """JSON-facing view of a sampled surface plus provenance metadata."""

    grid_a: float
    grid_b: float
    grid_n: int
    curves: list  # list of list of [x, y, z]
    metadata: dict = field(default_factory=dict)
    format: int = FORMAT_VERSION

    @classmethod
    def from_surface(cls, surface, metadata=None):
        return cls(
            grid_a=surface.a,
            grid_b=surface.b,
            grid_n=surface.n_nodes,
            curves=[c.samples.tolist() for c in surface.curves],
            metadata=dict(metadata or {}),
        )

    def to_surface(self):
        curves = tuple(
            SampledCurve(self.grid_a, self.grid_b, np.asarray(samples, float))
            for samples in self.curves
        )
        return SampledSurface(curves)

    def to_payload(self):
        return {
            "format": self.format,
            "metadata": self.metadata,
            "grid": {"a": self.grid_a, "b": self.grid_b, "n": self.grid_n},
            "curves": self.curves,
        }

    @classmethod
    def from_payload(cls, payload):
        if not isinstance(payload, dict):
            raise ValueError("surface document must be a JSON object")
        version = payload.get("format")
        if version != FORMAT_VERSION:
            raise ValueError(
                f"unsupported surface document format {version!r}; "
                f"expected {FORMAT_VERSION}")
        grid = payload.get("grid", {})
        try:
            doc = cls(
                grid_a=float(grid["a"]),
                grid_b=float(grid["b"]),
                grid_n=int(grid["n"]),
                curves=payload["curves"],
                metadata=dict(payload.get("metadata", {})),
            )
        except (KeyError, TypeError) as err:
            raise ValueError(f"malformed surface document: {err}") from err
        for curve in doc.curves:
            if len(curve) != doc.grid_n:
                raise ValueError(
                    f"curve has {len(curve)} nodes, grid declares {doc.grid_n}")
        return doc

    def serialize(self):
        return json.dumps(self.to_payload(), sort_keys=True,
                          separators=(",", ":")) + "\n"

    @classmethod
    def parse(cls, text):
        return cls.from_payload(json.loads(text))

    def save(self, path):
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.serialize())

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="ascii") as fh:
            return cls.parse(fh.read())
