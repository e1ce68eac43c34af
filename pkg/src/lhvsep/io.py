"""JSON documents for every domain object.

Each file holds one document ``{"kind", "version", "payload"}``. Complex
numbers are ``[re, im]`` pairs and matrices row-major nested lists. Floats
are written with Python's shortest round-trip repr, so
``decode(parse(serialize(x))) == x`` holds exactly for finite values.
LHV models refer to their POVMs by path and never embed them.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import DocumentSyntaxError
from .lhv import LambdaEntry, LhvModel, Report, Violation
from .linalg import DensityOperator
from .montecarlo import ChiSquareReport, OutcomeRecord
from .povm import ConstraintSet, Effect, Povm
from .reconstruction import ProductEnsemble, ProjectorFrame
from .separability import LocalityVerdict

VERSION = 1
KINDS = (
    "state", "povm", "lhv-model", "ensemble", "outcomes", "verdict",
    "constraints", "report", "frame", "responses", "distribution", "chi-square",
)


@dataclass
class Document:
    kind: str
    version: int
    payload: dict


@dataclass(eq=False)
class Responses:
    """Response values over a projector frame (rank-1 first, then rank-2)."""

    values: np.ndarray

    def __eq__(self, other):
        return isinstance(other, Responses) and np.array_equal(self.values, other.values)


@dataclass(eq=False)
class Distribution:
    """Exact joint outcome probabilities, shape ``(n_a, n_b)``."""

    probabilities: np.ndarray

    def __eq__(self, other):
        return isinstance(other, Distribution) and np.array_equal(self.probabilities, other.probabilities)


def _cmat(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _cvec(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def _state_payload(rho):
    return {"dims": list(rho.dims), "matrix": _cmat(rho.matrix)}


def _ensemble_payload(e):
    return {"terms": [{"p": p, "rho1": _cmat(r1.matrix), "rho2": _cmat(r2.matrix)} for p, r1, r2 in e.terms]}


def _report_payload(r):
    return {
        "ok": r.ok,
        "violations": [
            {"kind": v.kind, "value": v.value, "bound": v.bound, "lam": v.lam,
             "side": v.side, "index": v.index, "message": v.message}
            for v in r.violations
        ],
    }


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def to_document(obj, povm_a_ref=None, povm_b_ref=None):
    """Build the :class:`Document` for a domain object."""
    if isinstance(obj, DensityOperator):
        return Document("state", VERSION, _state_payload(obj))
    if isinstance(obj, Povm):
        effects = [{"weight": e.weight, "matrix": _cmat(e.operator), "label": e.label} for e in obj.effects]
        return Document("povm", VERSION, {"dim": obj.dim, "effects": effects})
    if isinstance(obj, LhvModel):
        if povm_a_ref is None or povm_b_ref is None:
            raise ValueError("serializing an LHV model needs povm_a_ref and povm_b_ref paths")
        entries = [{"p": e.p, "responsesA": _floats(e.responses_a), "responsesB": _floats(e.responses_b)}
                   for e in obj.entries]
        return Document("lhv-model", VERSION, {"povmA": str(povm_a_ref), "povmB": str(povm_b_ref), "entries": entries})
    if isinstance(obj, ProductEnsemble):
        return Document("ensemble", VERSION, _ensemble_payload(obj))
    if isinstance(obj, OutcomeRecord):
        return Document("outcomes", VERSION, {"n": obj.n, "seed": obj.seed, "counts": obj.counts.tolist()})
    if isinstance(obj, LocalityVerdict):
        cert = None
        if obj.certificate is not None:
            cert = {"eigenvalue": float(obj.certificate[0]), "eigenvector": _cvec(obj.certificate[1])}
        payload = {
            "kind": obj.kind,
            "ensemble": _ensemble_payload(obj.ensemble) if obj.ensemble is not None else None,
            "certificate": cert,
            "diagnostics": _plain(obj.diagnostics),
        }
        return Document("verdict", VERSION, payload)
    if isinstance(obj, ConstraintSet):
        return Document("constraints", VERSION, {"n_effects": int(obj.coefficients.shape[1]),
                                                 "coefficients": _floats(obj.coefficients)})
    if isinstance(obj, Report):
        return Document("report", VERSION, _report_payload(obj))
    if isinstance(obj, ProjectorFrame):
        return Document("frame", VERSION, {"dim": obj.dim, "rank1": [_cmat(a) for a in obj.rank1],
                                           "pairs": [list(p) for p in obj.pairs]})
    if isinstance(obj, Responses):
        return Document("responses", VERSION, {"values": _floats(obj.values)})
    if isinstance(obj, Distribution):
        return Document("distribution", VERSION, {"probabilities": _floats(obj.probabilities)})
    if isinstance(obj, ChiSquareReport):
        return Document("chi-square", VERSION, {
            "statistic": obj.statistic, "dof": obj.dof, "p_value": obj.p_value, "passed": obj.passed,
            "significance": obj.significance, "bins": obj.bins, "merged_cells": obj.merged_cells,
        })
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def serialize(obj, povm_a_ref=None, povm_b_ref=None):
    """Canonical UTF-8 JSON text for ``obj`` (fixed field order, trailing newline)."""
    doc = to_document(obj, povm_a_ref, povm_b_ref)
    body = {"kind": doc.kind, "version": doc.version, "payload": doc.payload}
    return json.dumps(body, indent=1, ensure_ascii=False) + "\n"


def parse(text):
    """Parse document text; syntax and envelope errors carry a 1-based position."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise DocumentSyntaxError(err.msg, err.lineno, err.colno) from None
    if not isinstance(raw, dict):
        raise DocumentSyntaxError("document must be a JSON object", 1, 1)
    missing = [k for k in ("kind", "version", "payload") if k not in raw]
    if missing:
        raise DocumentSyntaxError(f"document lacks field(s) {missing}")
    if raw["kind"] not in KINDS:
        raise DocumentSyntaxError(f"unknown document kind {raw['kind']!r}")
    if raw["version"] != VERSION:
        raise DocumentSyntaxError(f"unsupported version {raw['version']!r}, expected {VERSION}")
    if not isinstance(raw["payload"], dict):
        raise DocumentSyntaxError("payload must be an object")
    return Document(raw["kind"], raw["version"], raw["payload"])


def _to_cmat(x, what):
    try:
        a = np.array(x, dtype=float)
        if a.ndim != 3 or a.shape[-1] != 2:
            raise ValueError
    except (ValueError, TypeError):
        raise DocumentSyntaxError(f"{what}: expected a matrix of [re, im] pairs") from None
    out = np.empty(a.shape[:-1], dtype=complex)
    # assign parts separately: re + 1j * im would turn -0.0 into 0.0
    out.real, out.imag = a[..., 0], a[..., 1]
    return out


def _get(payload, key, kind):
    try:
        return payload[key]
    except (KeyError, TypeError):
        raise DocumentSyntaxError(f"{kind} payload lacks field {key!r}") from None


def _decode_ensemble(payload, kind="ensemble"):
    terms = []
    for t in _get(payload, "terms", kind):
        r1 = _to_cmat(_get(t, "rho1", kind), "rho1")
        r2 = _to_cmat(_get(t, "rho2", kind), "rho2")
        terms.append((_get(t, "p", kind), DensityOperator(r1, (r1.shape[0], 1)), DensityOperator(r2, (r2.shape[0], 1))))
    return ProductEnsemble(terms)


def decode(doc, resolve=None):
    """Domain object for a parsed document.

    ``resolve`` maps a POVM reference string to a :class:`Povm`; it is only
    needed for ``lhv-model`` documents. Invariant violations surface as
    :class:`~lhvsep.exceptions.InvariantError` from the constructors.
    """
    p, kind = doc.payload, doc.kind
    if kind == "state":
        return DensityOperator(_to_cmat(_get(p, "matrix", kind), "matrix"), tuple(_get(p, "dims", kind)))
    if kind == "povm":
        effects = [Effect(_get(e, "weight", kind), _to_cmat(_get(e, "matrix", kind), "effect"), e.get("label", ""))
                   for e in _get(p, "effects", kind)]
        return Povm(_get(p, "dim", kind), effects)
    if kind == "lhv-model":
        if resolve is None:
            raise ValueError("decoding an LHV model needs a POVM resolver")
        entries = [LambdaEntry(_get(e, "p", kind), _get(e, "responsesA", kind), _get(e, "responsesB", kind))
                   for e in _get(p, "entries", kind)]
        return LhvModel(resolve(_get(p, "povmA", kind)), resolve(_get(p, "povmB", kind)), entries)
    if kind == "ensemble":
        return _decode_ensemble(p)
    if kind == "outcomes":
        return OutcomeRecord(np.array(_get(p, "counts", kind), dtype=np.int64), _get(p, "n", kind), _get(p, "seed", kind))
    if kind == "verdict":
        cert = p.get("certificate")
        if cert is not None:
            cert = (cert["eigenvalue"], _to_cmat([cert["eigenvector"]], "eigenvector")[0])
        ens = p.get("ensemble")
        return LocalityVerdict(
            _get(p, "kind", kind),
            ensemble=_decode_ensemble(ens) if ens is not None else None,
            certificate=cert,
            diagnostics=p.get("diagnostics", {}),
        )
    if kind == "constraints":
        c = np.array(_get(p, "coefficients", kind), dtype=float)
        return ConstraintSet(c.reshape(-1, int(p.get("n_effects", c.shape[-1] if c.ndim == 2 else 0))))
    if kind == "report":
        return Report([Violation(**v) for v in _get(p, "violations", kind)])
    if kind == "frame":
        rank1 = np.array([_to_cmat(a, "rank1") for a in _get(p, "rank1", kind)])
        return ProjectorFrame(_get(p, "dim", kind), rank1, tuple(tuple(x) for x in _get(p, "pairs", kind)))
    if kind == "responses":
        return Responses(np.array(_get(p, "values", kind), dtype=float))
    if kind == "distribution":
        return Distribution(np.array(_get(p, "probabilities", kind), dtype=float))
    if kind == "chi-square":
        return ChiSquareReport(**p)
    raise DocumentSyntaxError(f"unknown document kind {kind!r}")


def loads(text, resolve=None):
    return decode(parse(text), resolve)


def load(path, expect=None):
    """Read, parse and decode a document file.

    POVM references inside an ``lhv-model`` are resolved relative to the
    model file's directory. ``expect`` restricts the accepted kind(s).
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    doc = parse(text)
    if expect is not None:
        allowed = (expect,) if isinstance(expect, str) else tuple(expect)
        if doc.kind not in allowed:
            raise DocumentSyntaxError(f"{path}: expected a {' or '.join(allowed)} document, got {doc.kind!r}")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(ref):
        target = ref if os.path.isabs(ref) else os.path.join(base, ref)
        return load(target, expect="povm")

    return decode(doc, resolve)


def dump(obj, path, povm_a_ref=None, povm_b_ref=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(obj, povm_a_ref, povm_b_ref))
