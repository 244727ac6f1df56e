"""JSON model store for partitioned models.

Documents are written with sorted keys, two-space indent and ``repr``
floats, so loading and saving again reproduces the file byte for byte.
"""
from dataclasses import dataclass, field
import datetime
import hashlib
import json
from pathlib import Path

from .errors import ConfigError, ParseError
from .partition import PartitionedModel
from .sysid import DiscreteTransferFunction, FitReport

SCHEMA_VERSION = 1


@dataclass
class StoredModel:
    model: PartitionedModel
    provenance: dict = field(default_factory=dict)


def config_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def to_document(model, provenance=None):
    ranges = []
    for (lo, hi), tf, rep in zip(model.ranges, model.models, model.reports):
        ranges.append({
            "v_lo": lo,
            "v_hi": hi,
            "b": [float(x) for x in tf.b],
            "a": [float(x) for x in tf.a],
            "u_offset": tf.u_offset,
            "offset": tf.y_offset,
            "ts": tf.ts,
            "fit_percent": rep.fit_percent,
            "nrmse": rep.nrmse,
            "aicc": rep.aicc,
            "bic": rep.bic,
            "adj_r2": rep.adj_r2,
            "n_params": rep.n_params,
            "n_points": rep.n_points,
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "v_limits": list(model.v_limits),
        "overall_fit": model.overall_fit,
        "ranges": ranges,
        "provenance": dict(provenance or {}),
    }


def from_document(doc):
    try:
        if doc["schema_version"] != SCHEMA_VERSION:
            raise ConfigError(f"unsupported model store version {doc['schema_version']}")
        ranges, models, reports = [], [], []
        for r in doc["ranges"]:
            ranges.append((r["v_lo"], r["v_hi"]))
            models.append(DiscreteTransferFunction(r["b"], r["a"], r["ts"], r["u_offset"],
                                                   r["offset"]))
            reports.append(FitReport(r["fit_percent"], r["nrmse"], r["adj_r2"], r["aicc"],
                                     r["bic"], r["n_params"], r["n_points"]))
        model = PartitionedModel(ranges, models, reports, doc["overall_fit"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed model store document: {exc!r}") from None
    return StoredModel(model, dict(doc.get("provenance", {})))


def dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def save(stored, path):
    """Write a :class:`StoredModel` (or bare model) to ``path``."""
    if isinstance(stored, PartitionedModel):
        stored = StoredModel(stored)
    text = dumps(to_document(stored.model, stored.provenance))
    path = Path(path)
    path.write_text(text)
    return path


def load(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}", path=path, line=exc.lineno) from None
    return from_document(doc)


def make_provenance(config_path=None, **extra):
    prov = {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")}
    if config_path is not None:
        prov["config_hash"] = config_hash(config_path)
    prov.update(extra)
    return prov
