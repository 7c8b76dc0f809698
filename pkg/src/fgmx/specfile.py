"""JSON spec files.

Two shapes are accepted::

    {"family": "ca", "params": {"alpha": 0.5}}
    {"label": "...", "theta": {"kind": "expr", "expr": "1/t"},
                     "phi":   {"kind": "named", "name": "parabola"}}
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import jsonschema

from .copula import CopulaSpec, certify
from .families import FAMILY_TAGS, FamilyDomainError, FamilyParams, make_named, named_function
from .funcspace import Func1D, from_expr

__all__ = ["SpecFileError", "SCHEMA", "parse_spec_doc", "load_spec_doc", "build_spec", "load_spec"]


class SpecFileError(ValueError):
    """Malformed JSON or schema violation."""


_GENERATOR = {
    "type": "object",
    "oneOf": [
        {"properties": {"kind": {"const": "expr"}, "expr": {"type": "string"}},
         "required": ["kind", "expr"], "additionalProperties": False},
        {"properties": {"kind": {"const": "named"}, "name": {"type": "string"},
                        "params": {"type": "object"}},
         "required": ["kind", "name"], "additionalProperties": False},
    ],
}

SCHEMA = {
    "oneOf": [
        {"type": "object",
         "properties": {"family": {"enum": list(FAMILY_TAGS) + ["custom"]},
                        "params": {"type": "object"}, "label": {"type": "string"}},
         "required": ["family"], "additionalProperties": False},
        {"type": "object",
         "properties": {"label": {"type": "string"}, "theta": _GENERATOR, "phi": _GENERATOR},
         "required": ["theta", "phi"], "additionalProperties": False},
    ],
}


def parse_spec_doc(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"invalid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SpecFileError(f"schema error: {exc.message}") from exc
    return doc


def load_spec_doc(path: Union[str, Path]) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc}") from exc
    return parse_spec_doc(text)


def _generator(node: dict) -> Func1D:
    if node["kind"] == "expr":
        return from_expr(node["expr"])
    try:
        return named_function(node["name"], node.get("params"))
    except KeyError as exc:
        raise SpecFileError(f"named generator {node['name']!r}: missing or unknown {exc}") from exc


def _num(x) -> str:
    return f"({float(x)!r})"


def _raw_family_exprs(tag: str, p: dict) -> tuple[str, str]:
    """Generator expressions for a family without any parameter-domain checks."""
    g = FamilyParams(tag, p).get
    if tag == "fgm":
        return _num(g("theta")), "t*(1-t)"
    if tag == "constant-theta":
        return _num(g("theta")), str(p.get("phi", "t*(1-t)"))
    if tag == "ca":
        return f"t^-{_num(g('alpha'))} - 1", "t"
    if tag == "b11":
        return f"{_num(g('sigma'))}*(1/t - 1)", "t"
    if tag == "gpd":
        return f"{_num(g('sigma'))}*(t^-{_num(g('alpha'))} - 1)", "t"
    if tag == "uniform-k":
        return f"{_num(g('alpha'))}*(1 - t)", "t"
    if tag == "exponential-k":
        return "-ln(t)", "t"
    if tag == "durante-f":
        if "f" not in p:
            raise FamilyDomainError("durante-f needs an expression parameter 'f'")
        return f"({p['f']})/t - 1", "t"
    return str(p["theta"]), str(p["phi"])


def build_spec(doc: dict, certified: bool = True) -> CopulaSpec:
    """Spec described by ``doc``.

    With ``certified=True`` the result is validated (named families also get
    their parameter domains enforced); otherwise the bare generator pair is
    returned so that a validity report can be produced for it.
    """
    if "family" in doc:
        tag, params = doc["family"], dict(doc.get("params", {}))
        if tag == "custom" and not {"theta", "phi"} <= params.keys():
            raise SpecFileError("custom family needs 'theta' and 'phi' expressions")
        if certified:
            if doc.get("label") and tag == "custom":
                params.setdefault("label", doc["label"])
            return make_named(FamilyParams(tag, params))
        th, ph = _raw_family_exprs(tag, params)
        return CopulaSpec(from_expr(th), from_expr(ph), label=doc.get("label") or tag)
    theta, phi = _generator(doc["theta"]), _generator(doc["phi"])
    spec = CopulaSpec(theta, phi, label=doc.get("label") or f"({theta.label}, {phi.label})")
    return certify(spec) if certified else spec


def load_spec(path: Union[str, Path], certified: bool = True) -> CopulaSpec:
    return build_spec(load_spec_doc(path), certified)

