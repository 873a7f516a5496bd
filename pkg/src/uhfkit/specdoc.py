"""Spec documents: JSON schema, validation and conversion to library objects."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from jsonschema import Draft202012Validator

from .errors import InvalidInput
from .groups import (
    CustomTable,
    EmbeddingPattern,
    FactorialMod,
    FgAbelianGroup,
    PadicDigits,
    ProductPattern,
    QuotientMod,
    diagonal_resequence,
)
from .gset import InducedFamily, klein_bottle_transversal
from .uhf import Constant, Factorial, FactorSequence, Linear, PrimePower, StageElement, Table

SCHEMA_VERSION = 1

_SEQ = {
    "type": "object",
    "required": ["rule"],
    "properties": {
        "rule": {"enum": ["Constant", "Factorial", "Linear", "PrimePower", "Table"]},
        "c": {"type": "integer", "minimum": 2},
        "p": {"type": "integer", "minimum": 2},
        "values": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
    },
    "additionalProperties": False,
}

_RULE = {
    "type": "object",
    "required": ["rule"],
    "properties": {
        "rule": {"enum": ["QuotientMod", "FactorialMod", "PadicDigits"]},
        "moduli": _SEQ,
        "support": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "p": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

_RAT = {"type": ["string", "integer"]}

_ELEMENT = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "properties": {
                "free": {"type": "array", "items": {"type": "integer"}},
                "tors": {"type": "array", "items": {"type": "integer"}},
                "local": {"type": "array", "items": _RAT},
            },
            "additionalProperties": False,
        },
    ]
}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "uhfkit spec",
    "type": "object",
    "required": ["schema_version", "name", "group"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "group": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["abelian", "klein-bottle", "prufer"]},
                "rank": {"type": "integer", "minimum": 0},
                "torsion": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "localized": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "p": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "pattern": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["product", "custom_table"]},
                "rules": {"type": "array", "items": _RULE},
                "resequence": {"type": "boolean"},
                "moduli": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "table": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                "tail": {"enum": ["unknown", "zero"]},
            },
            "additionalProperties": False,
        },
        "action": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["induced"]},
                "transversal": {"enum": ["klein-bottle"]},
                "moduli": _SEQ,
            },
            "additionalProperties": False,
        },
        "task": {
            "type": "object",
            "properties": {
                "elements": {"type": "array", "items": _ELEMENT},
                "horizon": {"type": "integer", "minimum": 1},
                "epsilon": _RAT,
                "stage_cap": {"type": "integer", "minimum": 1},
                "word_len": {"type": "integer", "minimum": 0},
                "box_bound": {"type": "integer", "minimum": 1},
                "power_bound": {"type": "integer", "minimum": 1},
                "levels": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "base_stage": {"type": "integer", "minimum": 0},
                "stages": {"type": "integer", "minimum": 0},
                "samples": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "rokhlin": {"type": "boolean"},
                "max_modulus": {"type": "integer", "minimum": 2},
                "limit_steps": {"type": "integer", "minimum": 1},
                "F": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["stage", "rows"],
                        "properties": {
                            "stage": {"type": "integer", "minimum": 0},
                            "rows": {"type": "array", "items": {"type": "array", "items": _RAT}},
                        },
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

TASK_DEFAULTS = {
    "horizon": 64,
    "epsilon": "1/100",
    "stage_cap": 4096,
    "word_len": 4,
    "box_bound": 10,
    "power_bound": 10,
    "levels": [1],
    "base_stage": 1,
    "stages": 4,
    "samples": 3,
    "seed": 0,
    "rokhlin": True,
    "max_modulus": 30,
    "limit_steps": 24,
}

_VALIDATOR = Draft202012Validator(SPEC_SCHEMA)


class SchemaError(InvalidInput):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def validate(doc) -> None:
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/" + "/".join(str(p) for p in e.absolute_path)
        raise SchemaError(path, e.message)


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("/", f"not valid JSON: {exc}") from None
    validate(doc)
    return doc


def builtin_names() -> list:
    root = resources.files("uhfkit") / "examples"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_path(name: str) -> Path:
    root = resources.files("uhfkit") / "examples"
    p = root / (name if name.endswith(".json") else name + ".json")
    if not p.is_file():
        raise InvalidInput(f"no built-in spec {name!r}; choose from {builtin_names()}")
    return Path(str(p))


# ---------------------------------------------------------------------------
# conversion


def parse_rational(v) -> Fraction:
    try:
        return Fraction(v)
    except (ValueError, ZeroDivisionError):
        raise InvalidInput(f"{v!r} is not a rational number") from None


def build_sequence(doc: dict) -> FactorSequence:
    rule = doc["rule"]
    need = {"Constant": "c", "PrimePower": "p", "Table": "values"}.get(rule)
    if need and need not in doc:
        raise SchemaError("/rule", f"{rule} needs '{need}'")
    if rule == "Constant":
        return FactorSequence(Constant(doc["c"]))
    if rule == "Factorial":
        return FactorSequence(Factorial())
    if rule == "Linear":
        return FactorSequence(Linear())
    if rule == "PrimePower":
        return FactorSequence(PrimePower(doc["p"]))
    return FactorSequence(Table(tuple(doc["values"])))


@dataclass
class Spec:
    doc: dict
    task: dict
    group: Optional[FgAbelianGroup] = None
    pattern: Optional[EmbeddingPattern] = None
    family: Optional[InducedFamily] = None
    prufer_p: Optional[int] = None

    @property
    def name(self) -> str:
        return self.doc["name"]

    def element(self, e) -> object:
        if self.family is not None:
            if not isinstance(e, str):
                raise SchemaError("/task/elements", "words are required for this group")
            self.family.nf.presentation.parse(e)
            return e
        if self.group is None:
            raise SchemaError("/task/elements", "this group has no element syntax")
        if isinstance(e, str):
            raise SchemaError("/task/elements", "abelian elements are objects with free/tors/local")
        return self.group.element(e.get("free", ()), e.get("tors", ()),
                                  [parse_rational(v) for v in e.get("local", ())])

    def elements(self) -> list:
        if "elements" in self.task:
            return [self.element(e) for e in self.task["elements"]]
        if self.group is not None:
            return self.group.generators()
        return []

    def stage_elements(self) -> list:
        seq = self.pattern.sequence()
        cap = self.task["stage_cap"]
        return [StageElement.from_rows(seq, f["stage"], f["rows"], stage_cap=cap) for f in self.task.get("F", [])]


def _build_rule(r: dict, j: int):
    name = r["rule"]
    if name == "FactorialMod":
        return FactorialMod(support=frozenset(r["support"]) if "support" in r else None)
    if name == "PadicDigits":
        if "p" not in r:
            raise SchemaError(f"/pattern/rules/{j}", "PadicDigits needs 'p'")
        return PadicDigits(r["p"])
    if "moduli" not in r:
        raise SchemaError(f"/pattern/rules/{j}", "QuotientMod needs 'moduli'")
    support = frozenset(r["support"]) if "support" in r else None
    return QuotientMod(build_sequence(r["moduli"]), support)


def build(doc: dict) -> Spec:
    validate(doc)
    task = dict(TASK_DEFAULTS)
    task.update(doc.get("task", {}))
    spec = Spec(doc, task)
    g = doc["group"]
    if g["kind"] == "abelian":
        spec.group = FgAbelianGroup(g.get("rank", 0), tuple(g.get("torsion", ())), tuple(g.get("localized", ())))
    elif g["kind"] == "prufer":
        if "p" not in g:
            raise SchemaError("/group", "prufer needs 'p'")
        PrimePower(g["p"])
        spec.prufer_p = g["p"]
    if "pattern" in doc:
        if spec.group is None:
            raise SchemaError("/pattern", "patterns need an abelian group")
        pd = doc["pattern"]
        if pd["kind"] == "product":
            rules = tuple(_build_rule(r, j) for j, r in enumerate(pd.get("rules", ())))
            pat = ProductPattern(spec.group, rules)
            spec.pattern = diagonal_resequence(pat) if pd.get("resequence") else pat
        else:
            if "moduli" not in pd or "table" not in pd:
                raise SchemaError("/pattern", "custom_table needs 'moduli' and 'table'")
            spec.pattern = CustomTable(spec.group, tuple(pd["moduli"]), tuple(map(tuple, pd["table"])),
                                       pd.get("tail", "unknown"))
    if "action" in doc:
        ad = doc["action"]
        if g["kind"] != "klein-bottle":
            raise SchemaError("/action", "induced actions are available for the Klein bottle group")
        if "moduli" not in ad:
            raise SchemaError("/action", "induced action needs 'moduli'")
        spec.family = InducedFamily(klein_bottle_transversal(), build_sequence(ad["moduli"]),
                                    label=doc["name"])
    elif g["kind"] == "klein-bottle":
        raise SchemaError("/action", "the Klein bottle group needs an induced action")
    spec.elements()  # resolve names early
    return spec
