"""JSON documents for spaces, frames and reports, validated against shipped schemas."""
from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match
from referencing import Registry, Resource

from .constructions import (ClosedFormFamily, closed_form_frame, coordinate_sum_decoder,
                            log_sum_decoder)
from .errors import StructuralError
from .frames import FrameSystem, ReconstructionMap, decoder_nearest, decoder_table
from .lipschitz import LipschitzFamily
from .metric_core import FiniteMetricSpace, from_matrix, from_points
from .seq_norms import SequenceNormSpec

__all__ = [
    "SCHEMA_VERSION",
    "SchemaError",
    "validate_document",
    "space_from_json",
    "space_to_json",
    "frame_from_json",
    "frame_to_json",
    "decoder_from_json",
    "dumps",
]

SCHEMA_VERSION = "1.0"
_SCHEMAS = ("space", "frame", "report")


class SchemaError(StructuralError):
    """Document does not match its schema; ``pointer`` locates the offending field."""

    def __init__(self, message, pointer=""):
        super().__init__(message, witness=pointer)
        self.pointer = pointer


@lru_cache(maxsize=None)
def _validators() -> dict:
    docs = {}
    root = resources.files(__package__) / "schemas"
    for name in _SCHEMAS:
        docs[name] = json.loads((root / f"{name}.schema.json").read_text())
    registry = Registry().with_resources(
        (d["$id"], Resource.from_contents(d)) for d in docs.values())
    return {k: Draft202012Validator(d, registry=registry) for k, d in docs.items()}


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def validate_document(doc, kind: str):
    """Raise :class:`SchemaError` with a JSON pointer on the first (best) violation."""
    err = best_match(_validators()[kind].iter_errors(doc))
    if err is not None:
        ptr = _pointer(err.absolute_path)
        raise SchemaError(f"{kind} document invalid at '{ptr or '/'}': {err.message}", ptr)


def _label(p):
    if isinstance(p, (str, int, float)) and not isinstance(p, bool):
        return p
    if isinstance(p, np.integer):
        return int(p)
    if isinstance(p, np.floating):
        return float(p)
    return str(p)


def space_to_json(M: FiniteMetricSpace, version: bool = True) -> dict:
    """Coordinate spaces are written as ``coords`` and rebuilt identically on load."""
    ids = [_label(p) for p in M.point_ids]
    d = {"schema_version": SCHEMA_VERSION} if version else {}
    d.update({"kind": "space", "points": ids, "base": ids[M.base_index]})
    if M.coords is not None:
        d.update({"coords": M.coords.tolist(), "metric": "euclidean"})
    else:
        d["distances"] = M.dist.tolist()
        if M.tolerance:
            d["tolerance"] = M.tolerance
    return d


def _labels_and_base(doc, n, prefix):
    pts = doc.get("points")
    if pts is not None:
        if len(pts) != n:
            raise SchemaError(f"{len(pts)} point labels for {n} points", prefix + "/points")
        if len(set(map(repr, pts))) != n:
            raise SchemaError("point labels are not unique", prefix + "/points")
    if "base" not in doc:
        return pts, 0
    labels = pts if pts is not None else list(range(n))
    if doc["base"] not in labels:
        raise SchemaError(f"base {doc['base']!r} is not a point label", prefix + "/base")
    return pts, labels.index(doc["base"])


def space_from_json(doc, _checked: bool = False, prefix: str = "") -> FiniteMetricSpace:
    """Build a space; metric-axiom failures propagate as :class:`MetricAxiomError`."""
    if not _checked:
        validate_document(doc, "space")
    if "coords" in doc:
        C = doc["coords"]
        if len({len(r) for r in C}) != 1:
            raise SchemaError("coordinate rows differ in length", prefix + "/coords")
        pts, b = _labels_and_base(doc, len(C), prefix)
        return from_points(C, base_index=b, point_ids=pts)
    D = doc["distances"]
    for i, row in enumerate(D):
        if len(row) != len(D):
            raise SchemaError(f"distance row {i} has {len(row)} entries, expected {len(D)}",
                              f"{prefix}/distances/{i}")
    pts, b = _labels_and_base(doc, len(D), prefix)
    return from_matrix(D, pts, base_index=b, tolerance=doc.get("tolerance", 0.0))


def _meta_json(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if isinstance(v, ClosedFormFamily):
            continue
        if isinstance(v, (str, int, float, bool, list)) or v is None:
            out[k] = v
        elif isinstance(v, tuple):
            out[k] = list(v)
        elif isinstance(v, np.ndarray):
            out[k] = v.tolist()
        else:
            out[k] = str(v)
    return out


def frame_to_json(F: FrameSystem, decoder: dict | None = None) -> dict:
    """Closed-form families are written by descriptor, everything else as a table."""
    d = {"schema_version": SCHEMA_VERSION, "kind": "frame"}
    desc = F.family.family_meta.get("descriptor")
    if isinstance(desc, ClosedFormFamily):
        d["maps"] = desc.to_json()
    else:
        d["space"] = space_to_json(F.space)
        d["maps"] = {"type": "table", "values": F.family.values.tolist(),
                     "tail_bound": float(F.family.tail_bound),
                     "meta": _meta_json(F.family.family_meta)}
    d["norm"] = F.norm.to_json()
    if decoder is not None:
        d["decoder"] = decoder
    return d


def frame_from_json(doc) -> FrameSystem:
    validate_document(doc, "frame")
    spec = SequenceNormSpec.from_json(doc["norm"])
    maps = doc["maps"]
    if maps["type"] == "family":
        prm = maps["params"]
        return closed_form_frame(maps["name"], tuple(prm["interval"]), prm["grid"],
                                 maps["truncation"], spec.p)
    M = space_from_json(doc["space"], _checked=True, prefix="/space")
    values = maps["values"]
    for k, row in enumerate(values):
        if len(row) != M.n:
            raise SchemaError(f"map {k} has {len(row)} values for {M.n} points",
                              f"/maps/values/{k}")
    fam = LipschitzFamily(M, np.array(values, dtype=float), float(maps.get("tail_bound", 0.0)),
                          dict(maps.get("meta", {})))
    return FrameSystem(fam, spec)


def decoder_from_json(F: FrameSystem, doc) -> ReconstructionMap | None:
    spec = doc.get("decoder")
    if spec is None:
        return None
    strategy = spec["strategy"]
    if strategy == "nearest":
        return decoder_nearest(F)
    if strategy == "log-sum":
        return log_sum_decoder()
    if strategy == "coordinate-sum":
        return coordinate_sum_decoder()
    if len(spec["table"]) != F.space.n:
        raise SchemaError("decoder table length differs from the number of points",
                          "/decoder/table")
    return decoder_table(F, spec["table"])


def _plain(o):
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, np.ndarray):
        return _plain(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (float, np.floating)):
        o = float(o)
        if math.isnan(o):
            return "nan"
        if math.isinf(o):
            return "inf" if o > 0 else "-inf"
        return o
    return o


def dumps(doc) -> str:
    """Deterministic JSON: insertion order kept, non-finite floats as strings."""
    return json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"
