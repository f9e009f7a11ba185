"""JSON schemas for every document the package reads, plus loaders that
validate before building objects.

Validation failures become :class:`SchemaError` whose message starts with the
dotted path of the offending field.
"""

from __future__ import annotations

import json
from typing import Any

import jsonschema
import numpy as np

from .distributions import DistributionSequence, DistributionSpec, VariationBudget, make_drifting_sequence, stationary_sequence
from .errors import SchemaError
from .saa import ProblemInstance, SampleBatch

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_POS_INT = {"type": "integer", "minimum": 1}
_NORM = {"enum": ["L1", "L2", "Linf"]}

SUPPORT = {
    "type": "object",
    "oneOf": [
        {"properties": {"kind": {"const": "box"}, "lower": _VEC, "upper": _VEC}, "required": ["kind", "lower", "upper"]},
        {"properties": {"kind": {"const": "full-space"}, "dim": _POS_INT}, "required": ["kind", "dim"]},
    ],
}

DISTRIBUTION = {
    "type": "object",
    "required": ["family"],
    "properties": {"family": {"enum": ["dirac", "uniform-box", "gaussian-isotropic", "discrete-weighted"]}, "support": SUPPORT},
    "allOf": [
        {"if": {"properties": {"family": {"const": "dirac"}}}, "then": {"required": ["location"], "properties": {"location": _VEC}}},
        {
            "if": {"properties": {"family": {"const": "uniform-box"}}},
            "then": {"required": ["lower", "upper"], "properties": {"lower": _VEC, "upper": _VEC}},
        },
        {
            "if": {"properties": {"family": {"const": "gaussian-isotropic"}}},
            "then": {"required": ["mean", "std"], "properties": {"mean": _VEC, "std": {"type": "number", "exclusiveMinimum": 0}}},
        },
        {
            "if": {"properties": {"family": {"const": "discrete-weighted"}}},
            "then": {
                "required": ["atoms", "weights"],
                "properties": {"atoms": {"type": "array", "items": _VEC, "minItems": 1}, "weights": _VEC},
            },
        },
    ],
}

BUDGET = {
    "type": "object",
    "required": ["form"],
    "properties": {"form": {"enum": ["linear", "step", "tabulated"]}},
    "allOf": [
        {"if": {"properties": {"form": {"const": "linear"}}}, "then": {"required": ["rate"], "properties": {"rate": {"type": "number", "minimum": 0}}}},
        {
            "if": {"properties": {"form": {"const": "step"}}},
            "then": {
                "required": ["steps"],
                "properties": {
                    "steps": {"type": "array", "items": {"type": "array", "prefixItems": [_POS_INT, _NUM], "minItems": 2, "maxItems": 2}}
                },
            },
        },
        {"if": {"properties": {"form": {"const": "tabulated"}}}, "then": {"required": ["table"], "properties": {"table": _VEC}}},
    ],
}

DISTRIBUTION_SEQUENCE = {
    "type": "object",
    "required": ["specs", "budget"],
    "properties": {
        "specs": {"type": "array", "items": DISTRIBUTION, "minItems": 2},
        "budget": BUDGET,
        "norm": _NORM,
    },
}

DECISION_SET = {
    "type": "object",
    "oneOf": [
        {
            "properties": {"kind": {"const": "finite"}, "points": {"type": "array", "items": _VEC, "minItems": 1}},
            "required": ["kind", "points"],
        },
        {"properties": {"kind": {"const": "box"}, "lower": _VEC, "upper": _VEC}, "required": ["kind", "lower", "upper"]},
    ],
}

CONSTRAINT = {
    "type": "object",
    "properties": {"kind": {"const": "bi-affine"}, "lipschitz": {"type": "number", "exclusiveMinimum": 0}},
    "oneOf": [
        {
            "required": ["coupling", "u_coef", "x_coef"],
            "properties": {
                "coupling": {"type": "array", "items": _VEC},
                "u_coef": {"type": "array", "items": _NUM},
                "x_coef": {"type": "array", "items": _NUM},
                "offset": _NUM,
            },
        },
        {"required": ["inner_offset", "dim"], "properties": {"inner_offset": _NUM, "dim": _POS_INT}},
    ],
}

RISK = {
    "type": "object",
    "required": ["epsilon", "alpha"],
    "additionalProperties": False,
    "properties": {
        "epsilon": _NUM,
        "alpha": _NUM,
        "gamma": _NUM,
        "delta": _NUM,
        "theta": _NUM,
        "lipschitz": _NUM,
    },
}

PROBLEM_INSTANCE = {
    "type": "object",
    "required": ["decision_set", "constraint", "risk"],
    "properties": {"decision_set": DECISION_SET, "constraint": CONSTRAINT, "risk": RISK, "objective": _VEC},
}

SAMPLE_BATCH = {
    "type": "object",
    "required": ["points"],
    "properties": {
        "points": {"type": "array", "items": _VEC, "minItems": 1},
        "radii": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "norm": _NORM,
        "support_mode": {"enum": ["ball-only", "ball-intersect-support"]},
        "support": SUPPORT,
    },
}

# --------------------------------------------------------------------------
# CLI documents

_VERSION = {"const": SCHEMA_VERSION}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_N_RANGE = {
    "oneOf": [
        _POS_INT,
        {"type": "array", "items": _POS_INT, "minItems": 1},
        {
            "type": "object",
            "required": ["start", "stop"],
            "additionalProperties": False,
            "properties": {"start": _POS_INT, "stop": _POS_INT, "step": _POS_INT},
        },
    ]
}

RADII_RULE = {
    "type": "object",
    "oneOf": [
        {"properties": {"rule": {"const": "zero"}}, "required": ["rule"]},
        {"properties": {"rule": {"const": "theta"}, "theta": {"type": "number", "exclusiveMinimum": 0}}, "required": ["rule", "theta"]},
        {
            "properties": {"rule": {"const": "explicit"}, "values": {"type": "array", "items": {"type": "number", "minimum": 0}}},
            "required": ["rule", "values"],
        },
    ],
}

_COVERING_FIELDS = ["lipschitz", "diameter", "gamma", "n"]
_PENALTY_CHOICE = {
    "oneOf": [
        {"required": ["p"]},
        {"required": ["epsilon", "budget", "radii", "N"]},
    ]
}

BOUND_REQUEST = {
    "type": "object",
    "required": ["bound"],
    "properties": {
        "bound": {"enum": ["thm1", "thm2", "luedtke", "thm3", "thm5"]},
        "card_X": _POS_INT,
        "lipschitz": {"type": "number", "exclusiveMinimum": 0},
        "diameter": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "n": _POS_INT,
        "alpha": _PROB,
        "epsilon": _PROB,
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "N": _N_RANGE,
        "p": {"type": "array", "items": _PROB, "minItems": 1},
        "budget": BUDGET,
        "radii": RADII_RULE,
    },
    "allOf": [
        {"if": {"properties": {"bound": {"const": "thm1"}}}, "then": {"required": ["card_X", "alpha", "epsilon", "N"]}},
        {"if": {"properties": {"bound": {"const": "thm2"}}}, "then": {"required": _COVERING_FIELDS + ["alpha", "epsilon", "N"]}},
        {
            "if": {"properties": {"bound": {"const": "luedtke"}}},
            "then": {"required": _COVERING_FIELDS + ["alpha", "epsilon", "beta", "N"]},
        },
        {"if": {"properties": {"bound": {"const": "thm3"}}}, "then": {"required": ["card_X", "alpha"], **_PENALTY_CHOICE}},
        {"if": {"properties": {"bound": {"const": "thm5"}}}, "then": {"required": _COVERING_FIELDS + ["alpha"], **_PENALTY_CHOICE}},
    ],
}

SWEEP = {
    "type": "object",
    "required": ["n", "epsilon", "alpha", "ratio"],
    "properties": {
        "n": _POS_INT,
        "epsilon": _PROB,
        "alpha": _PROB,
        "ratio": {"type": "number", "exclusiveMinimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "N": _N_RANGE,
        "output": {"type": "string"},
    },
}

BOUNDS_CONFIG = {
    "type": "object",
    "required": ["schema_version"],
    "properties": {
        "schema_version": _VERSION,
        "bounds": {"type": "array", "items": BOUND_REQUEST},
        "figure1": SWEEP,
        "output": {"type": "string"},
    },
}

SWEEP_CONFIG = {
    "type": "object",
    "required": ["schema_version", "sweep"],
    "properties": {"schema_version": _VERSION, "sweep": SWEEP},
}

SAMPLE_SIZE_CONFIG = {
    "type": "object",
    "required": ["schema_version", "card_X", "delta", "epsilon", "alpha", "theta"],
    "properties": {
        "schema_version": _VERSION,
        "card_X": _POS_INT,
        "delta": _NUM,
        "epsilon": _NUM,
        "alpha": _NUM,
        "theta": _NUM,
    },
}

ENVIRONMENT = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["stationary", "drift", "sequence"]}},
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "stationary"}}},
            "then": {"required": ["distribution"], "properties": {"distribution": DISTRIBUTION, "n_samples": _POS_INT, "norm": _NORM}},
        },
        {
            "if": {"properties": {"kind": {"const": "drift"}}},
            "then": {
                "required": ["start", "drift"],
                "properties": {
                    "start": DISTRIBUTION,
                    "drift": {"oneOf": [_NUM, _VEC]},
                    "n_samples": _POS_INT,
                    "norm": _NORM,
                    "anchor": {"enum": ["start", "target"]},
                    "budget": BUDGET,
                },
            },
        },
        {"if": {"properties": {"kind": {"const": "sequence"}}}, "then": {"required": ["sequence"], "properties": {"sequence": DISTRIBUTION_SEQUENCE}}},
    ],
}

_RUN_COMMON = {
    "name": {"type": "string"},
    "problem": PROBLEM_INSTANCE,
    "environment": ENVIRONMENT,
    "support_mode": {"enum": ["ball-only", "ball-intersect-support"]},
    "trials": _POS_INT,
    "seed": {"type": "integer", "minimum": 0},
}

SIMULATE_CONFIG = {
    "type": "object",
    "required": ["schema_version"],
    "properties": {
        "schema_version": _VERSION,
        "seed": {"type": "integer", "minimum": 0},
        "trials": _POS_INT,
        "runs": {
            "type": "array",
            "items": {"type": "object", "required": ["problem", "environment"], "properties": {**_RUN_COMMON, "radii": RADII_RULE}},
        },
        "corollary4": {"type": "array", "items": {"type": "object", "required": ["problem", "environment"], "properties": _RUN_COMMON}},
    },
}


def _path(error: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def validate(doc: Any, schema: dict, what: str = "") -> None:
    """Raise :class:`SchemaError` naming the deepest failing field."""
    validator = jsonschema.Draft202012Validator(schema)
    error = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if error is not None:
        path = _path(error)
        raise SchemaError(error.message, path=f"{what}.{path}" if what and path != "<root>" else (what or path))


def load_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", path=str(path)) from None
    except OSError as exc:
        raise SchemaError(f"cannot read config: {exc.strerror}", path=str(path)) from None


def load_sequence(doc: dict) -> DistributionSequence:
    validate(doc, DISTRIBUTION_SEQUENCE, "sequence")
    return DistributionSequence.from_dict(doc)


def load_instance(doc: dict) -> ProblemInstance:
    validate(doc, PROBLEM_INSTANCE, "problem")
    return ProblemInstance.from_dict(doc)


def load_batch(doc: dict) -> SampleBatch:
    validate(doc, SAMPLE_BATCH, "batch")
    return SampleBatch.from_dict(doc)


def build_environment(doc: dict, n_samples: int | None = None) -> DistributionSequence:
    """Sequence described by an environment document.

    ``n_samples`` overrides the document's own ``n_samples``; the ``sequence``
    form fixes its own length and rejects a conflicting override.
    """
    validate(doc, ENVIRONMENT, "environment")
    kind = doc["kind"]
    if kind == "sequence":
        seq = DistributionSequence.from_dict(doc["sequence"])
        if n_samples is not None and seq.n_samples != n_samples:
            raise SchemaError(f"sequence has {seq.n_samples} samples, {n_samples} required", path="environment.sequence")
        return seq
    n = n_samples if n_samples is not None else doc.get("n_samples")
    if n is None:
        raise SchemaError("'n_samples' is a required property", path="environment")
    norm = doc.get("norm", "L2")
    if kind == "stationary":
        return stationary_sequence(DistributionSpec.from_dict(doc["distribution"]), n, norm)
    start = DistributionSpec.from_dict(doc["start"])
    drift = doc["drift"]
    if doc.get("anchor", "start") == "target":
        step = np.broadcast_to(np.asarray(drift, dtype=float), (start.dim,))
        start = start.translate(-n * step)
    seq = make_drifting_sequence(start, drift, n, norm)
    if "budget" in doc:
        seq = DistributionSequence(seq.specs, VariationBudget.from_dict(doc["budget"]), norm)
    return seq
