"""Persistence: CSV tables, JSON reports, plot data and the run manifest.

Every float is written with 17 significant digits so that reruns can be
compared byte for byte.
"""

from dataclasses import dataclass, field
import datetime as _dt
import hashlib
import json
import math
import os

import numpy as np

__all__ = [
    "fmt_float",
    "to_jsonable",
    "dumps_json",
    "write_json",
    "write_csv",
    "file_digest",
    "config_digest",
    "RunManifest",
    "emit_plot_data",
]

FLOAT_FORMAT = "%.17g"


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FORMAT % x


def to_jsonable(obj):
    """Plain Python structure; floats stay floats, numpy scalars are unwrapped."""
    if hasattr(obj, "as_dict"):
        obj = obj.as_dict()
    elif hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        s = fmt_float(obj)
        return s if math.isfinite(obj) else json.dumps(s)  # non-finite as strings
    return json.dumps(obj)


def dumps_json(obj, indent=2):
    """JSON text with floats at 17 significant digits in insertion key order."""
    return _encode(to_jsonable(obj), indent, 0) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))
    return path


def write_csv(path, header, rows):
    """Write a CSV table; floats at 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, (bool, np.bool_)):
                    cells.append("1" if v else "0")
                elif isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                elif isinstance(v, (float, np.floating)):
                    cells.append(fmt_float(v))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
    return path


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_digest(config):
    text = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Provenance of one run; the only non-deterministic output (timestamps)."""

    command: str
    config_digest: str
    seed: int
    version: str
    started: str = field(default_factory=_now)
    finished: str = ""
    outputs: list = field(default_factory=list)

    def add(self, path):
        self.outputs.append(path)
        return path

    def as_dict(self, root=None):
        outs = []
        for path in self.outputs:
            rel = os.path.relpath(path, root) if root else path
            outs.append({"path": rel.replace(os.sep, "/"), "sha256": file_digest(path)})
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "outputs": outs,
        }

    def write(self, out_dir):
        self.finished = _now()
        return write_json(os.path.join(out_dir, "manifest.json"), self.as_dict(out_dir))


# --------------------------------------------------------------------------
# plot data


def _infer_kind(report):
    from .bubbles import ExpansionReport
    from .solver import ContinuationResult, MountainPassResult

    if isinstance(report, ContinuationResult):
        return "continuation"
    if isinstance(report, MountainPassResult):
        return "path"
    if isinstance(report, (list, tuple)) and report and isinstance(report[0], ExpansionReport):
        return "expansion"
    raise ValueError("cannot infer the report kind; pass kind=")


def emit_plot_data(report, out_dir, kind=None, problem=None):
    """Write x/y columns for plotting; returns the written paths.

    ``expansion``: a list of ExpansionReport (any etas); one file per term
    with columns ``eta, rel_err``. ``continuation``: a ContinuationResult;
    columns ``epsilon, level``. ``path``: a MountainPassResult plus its
    ``problem``; columns ``index, energy`` along the stored path. An empty
    report gives a header-only file.
    """
    from .bubbles import TERMS

    kind = kind or _infer_kind(report)
    os.makedirs(out_dir, exist_ok=True)
    if kind == "expansion":
        reports = list(report or [])
        paths = []
        for term in TERMS:
            rows = sorted(
                ((r.eta, r.rel_err) for r in reports if r.term == term), key=lambda t: -t[0]
            )
            paths.append(write_csv(os.path.join(out_dir, f"expansion_{term}.csv"), ["eta", "rel_err"], rows))
        return paths
    if kind == "continuation":
        rows = [] if report is None else list(zip(report.schedule, report.levels))
        return [write_csv(os.path.join(out_dir, "continuation.csv"), ["epsilon", "level"], rows)]
    if kind == "path":
        rows = []
        if report is not None and report.path:
            if problem is None:
                raise ValueError("path profiles need the problem to evaluate J")
            rows = [(k, problem.energy(w)) for k, w in enumerate(report.path)]
        return [write_csv(os.path.join(out_dir, "path_profile.csv"), ["index", "energy"], rows)]
    raise ValueError(f"unknown plot-data kind {kind!r}")
