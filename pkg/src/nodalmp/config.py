"""Run configuration: JSON document, schema validation and object builders.

Precedence, lowest first: built-in defaults, the config document, command
line flags.
"""

import copy
import json
from importlib import resources

import jsonschema

from .errors import ConfigError
from .mesh_domain import build_mesh, build_symmetry
from .problem_model import ProblemSpec
from .solver import SolverControls

__all__ = [
    "DEFAULTS",
    "load_schema",
    "validate",
    "load_config",
    "merge",
    "spec_from_config",
    "mesh_from_config",
    "symmetry_from_config",
    "controls_from_config",
]

DEFAULTS = {
    "mesh": {"kind": "interval", "resolution": 129, "options": {}},
    "symmetry": {},
    "solver": {"nodal": True},
    "expansion": {"etas": [1e-2, 1e-3, 1e-4], "delta": 1.0},
    "continuation": {"schedule": [0.5, 0.25, 0.1, 0.05], "drift_warn": 0.5},
    "coercivity": {"starts": 8, "iterations": 500},
    "seed": 0,
}


def load_schema():
    text = resources.files("nodalmp").joinpath("data/config.schema.json").read_text("utf-8")
    return json.loads(text)


def _pointer(path):
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate(config):
    """Raise :class:`ConfigError` with the JSON pointer of the first violation."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _pointer(err.absolute_path))
    return config


def merge(base, override):
    """Recursive dict merge; values of ``override`` win."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(source=None, overrides=None):
    """Validated configuration with defaults filled in.

    ``source`` is a path, a dict or None; ``overrides`` (e.g. from flags) is
    merged last and validated together with the document.
    """
    if source is None:
        doc = {}
    elif isinstance(source, dict):
        doc = copy.deepcopy(source)
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", "") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", "")
    if overrides:
        doc = merge(doc, overrides)
    validate(doc)
    return merge(DEFAULTS, doc)


def spec_from_config(config):
    if "problem" not in config:
        raise ConfigError("this command needs a 'problem' section", "/problem")
    return ProblemSpec.from_dict(config["problem"])


def mesh_from_config(config):
    m = config["mesh"]
    return build_mesh(m["kind"], m["resolution"], **m.get("options", {}))


def symmetry_from_config(config, mesh):
    return build_symmetry(mesh, **config.get("symmetry", {}))


def controls_from_config(config):
    opts = {k: v for k, v in config.get("solver", {}).items() if k != "nodal"}
    return SolverControls(seed=config.get("seed", 0), **opts)
