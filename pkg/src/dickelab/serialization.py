"""JSON formats for states, count records and reports.

Every document carries a ``schema`` tag ``dickelab/<kind>/v1`` and validates
against the schemas shipped in :data:`SCHEMAS`.  Floats are rendered by the
json module's shortest round-trip representation, so state files round-trip
at full double precision.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from jsonschema import ValidationError, validate

from .simulate import CountRecord
from .states import DensityMatrix, PureState
from .tomography import MleReport
from .witnesses import LocalFilter, WitnessVerdict

__all__ = [
    "SCHEMAS",
    "schema_tag",
    "validate_payload",
    "pure_state_to_dict",
    "density_matrix_to_dict",
    "state_to_dict",
    "state_from_dict",
    "count_record_to_dict",
    "count_record_from_dict",
    "mle_report_to_dict",
    "witness_verdict_to_dict",
    "local_filter_to_dict",
    "write_json",
    "read_json",
    "write_records",
    "read_records",
]

_COMPLEX_PAIR = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}


def schema_tag(kind: str) -> str:
    return f"dickelab/{kind}/v1"


SCHEMAS: dict[str, dict] = {
    "pure-state": {
        "type": "object",
        "required": ["schema", "n_qubits", "amplitudes"],
        "properties": {
            "schema": {"const": schema_tag("pure-state")},
            "n_qubits": {"type": "integer", "minimum": 1},
            "amplitudes": {"type": "array", "items": _COMPLEX_PAIR},
        },
    },
    "density-matrix": {
        "type": "object",
        "required": ["schema", "n_qubits", "elements"],
        "properties": {
            "schema": {"const": schema_tag("density-matrix")},
            "n_qubits": {"type": "integer", "minimum": 1},
            "elements": {"type": "array", "items": _COMPLEX_PAIR},
        },
    },
    "count-record": {
        "type": "object",
        "required": ["setting", "counts", "efficiencies"],
        "properties": {
            "setting": {"type": "string", "pattern": "^[ZXY]+$"},
            "counts": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "efficiencies": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
            "duration_tag": {"type": "string"},
        },
    },
    "mle-report": {
        "type": "object",
        "required": ["schema", "log_likelihood", "iterations", "converged"],
        "properties": {
            "schema": {"const": schema_tag("mle-report")},
            "log_likelihood": {"type": "number"},
            "iterations": {"type": "integer", "minimum": 0},
            "converged": {"type": "boolean"},
            "gradient_norm_final": {"type": "number"},
            "skipped_settings": {"type": "array", "items": {"type": "string"}},
        },
    },
    "witness-report": {
        "type": "object",
        "required": ["schema", "witnesses"],
        "properties": {
            "schema": {"const": schema_tag("witness-report")},
            "witnesses": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["witness", "value", "bound", "entangled"],
                    "properties": {
                        "witness": {"type": "string"},
                        "value": {"type": "number"},
                        "bound": {"type": "number"},
                        "direction": {"type": "string"},
                        "entangled": {"type": "boolean"},
                        "error": {"type": ["number", "null"]},
                        "filter": {"type": ["array", "null"]},
                    },
                },
            },
        },
    },
    "projection-report": {
        "type": "object",
        "required": ["schema", "measured_qubit", "probability", "fidelity_to_reference"],
        "properties": {
            "schema": {"const": schema_tag("projection-report")},
            "measured_qubit": {"type": "integer", "minimum": 0},
            "direction": {"type": "array", "items": _COMPLEX_PAIR},
            "probability": {"type": "number", "minimum": 0, "maximum": 1},
            "fidelity_to_reference": {"type": "number", "minimum": 0, "maximum": 1},
            "reference_name": {"type": "string"},
        },
    },
    "loss-report": {
        "type": "object",
        "required": ["schema", "lost"],
        "properties": {
            "schema": {"const": schema_tag("loss-report")},
            "lost": {"type": "array", "items": {"type": "integer"}},
            "fidelity_to_reference": {"type": ["number", "null"]},
            "reference_name": {"type": ["string", "null"]},
        },
    },
    "protocols-report": {
        "type": "object",
        "required": ["schema"],
        "properties": {"schema": {"const": schema_tag("protocols-report")}},
    },
}


def validate_payload(kind: str, payload: dict) -> None:
    validate(payload, SCHEMAS[kind])


def _complex_pairs(values: np.ndarray) -> list[list[float]]:
    flat = np.asarray(values, dtype=complex).reshape(-1)
    return [[float(v.real), float(v.imag)] for v in flat]


def _from_pairs(pairs: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0] + 1j * arr[:, 1]


def pure_state_to_dict(state: PureState) -> dict:
    return {
        "schema": schema_tag("pure-state"),
        "n_qubits": state.n_qubits,
        "amplitudes": _complex_pairs(state.amplitudes),
    }


def density_matrix_to_dict(rho: DensityMatrix) -> dict:
    return {
        "schema": schema_tag("density-matrix"),
        "n_qubits": rho.n_qubits,
        "elements": _complex_pairs(rho.elements),
    }


def state_to_dict(state: PureState | DensityMatrix) -> dict:
    if isinstance(state, PureState):
        return pure_state_to_dict(state)
    return density_matrix_to_dict(state)


def state_from_dict(payload: dict) -> PureState | DensityMatrix:
    tag = payload.get("schema")
    if tag == schema_tag("pure-state"):
        validate_payload("pure-state", payload)
        return PureState(payload["n_qubits"], _from_pairs(payload["amplitudes"]))
    if tag == schema_tag("density-matrix"):
        validate_payload("density-matrix", payload)
        n = payload["n_qubits"]
        dim = 2**n
        elements = _from_pairs(payload["elements"])
        if elements.shape[0] != dim * dim:
            raise ValueError(f"expected {dim * dim} matrix entries, got {elements.shape[0]}")
        return DensityMatrix(n, elements.reshape(dim, dim))
    raise ValueError(f"unrecognized state schema {tag!r}")


def count_record_to_dict(record: CountRecord) -> dict:
    payload = {
        "setting": record.setting,
        "counts": [int(c) if float(c).is_integer() else float(c) for c in record.counts],
        "efficiencies": [float(e) for e in record.efficiencies],
    }
    if record.duration_tag:
        payload["duration_tag"] = record.duration_tag
    return payload


def count_record_from_dict(payload: dict) -> CountRecord:
    validate_payload("count-record", payload)
    return CountRecord(
        setting=payload["setting"],
        counts=np.asarray(payload["counts"], dtype=float),
        efficiencies=np.asarray(payload["efficiencies"], dtype=float),
        duration_tag=payload.get("duration_tag", ""),
    )


def mle_report_to_dict(report: MleReport) -> dict:
    return {
        "schema": schema_tag("mle-report"),
        "log_likelihood": report.log_likelihood,
        "iterations": report.iterations,
        "converged": report.converged,
        "gradient_norm_final": report.gradient_norm_final,
        "skipped_settings": list(report.skipped_settings),
    }


def witness_verdict_to_dict(verdict: WitnessVerdict, filt: LocalFilter | None = None) -> dict:
    payload = {
        "witness": verdict.name,
        "value": verdict.value,
        "bound": verdict.bound,
        "direction": verdict.direction,
        "entangled": verdict.entangled,
        "error": verdict.statistical_error,
    }
    if verdict.inconclusive_reason is not None:
        payload["inconclusive_reason"] = verdict.inconclusive_reason
    if filt is not None:
        payload["filter"] = local_filter_to_dict(filt)
    return payload


def local_filter_to_dict(filt: LocalFilter) -> list[list[list[float]]]:
    return [_complex_pairs(m) for m in (filt.a, filt.b, filt.c)]


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def write_records(path: Path, records: Sequence[CountRecord]) -> None:
    lines = [json.dumps(count_record_to_dict(r), sort_keys=True, separators=(",", ":")) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_records(path: Path) -> list[CountRecord]:
    """Parse a JSON-lines count file; schema errors carry the line number."""
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
            records.append(count_record_from_dict(payload))
        except (json.JSONDecodeError, ValidationError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: invalid count record: {exc}") from exc
    if not records:
        raise ValueError(f"{path}: no count records found")
    return records
