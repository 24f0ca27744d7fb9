"""
Canonical JSON for reports and ensembles.

Keys are sorted and floats are written as decimal strings with 12
significant digits, so a report made twice with the same seed serializes to
the same bytes. Complex numbers become [re, im]; numpy arrays become nested
lists. Values below 1e-13 in magnitude (and -0) are written as "0".
"""
import json
import math
import sys
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel

from app.models.ensemble import BidirectionalEnsemble, Ensemble
from app.models.state import PureState

FLOAT_DIGITS = 12
ZERO_CUTOFF = 1e-13
QUBIT_ORDER = "qubit 1 is the most significant index bit; Alice holds qubits 1-2, Bob 3-4"

TIMING_FIELDS = ("wall_clock_seconds",)


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite number {x!r} in report")
    if abs(x) < ZERO_CUTOFF:
        return "0"
    return format(x, f".{FLOAT_DIGITS}g")


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return to_jsonable({k: getattr(obj, k) for k in type(obj).model_fields})
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [format_float(obj.real), format_float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    return obj


def dumps(obj: Any, timing: bool = True) -> str:
    data = to_jsonable(obj)
    if not timing and isinstance(data, dict):
        for field in TIMING_FIELDS:
            data.pop(field, None)
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def emit(report: Any, path: Optional[str] = None, timing: bool = False) -> str:
    """Write canonical JSON to `path`, or stdout when path is None. Returns the text."""
    text = dumps(report, timing=timing)
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
    return text


def state_to_json(psi: PureState) -> Dict[str, Any]:
    return {"num_qubits": psi.num_qubits, "amplitudes": to_jsonable(psi.amplitudes)}


def ensemble_to_json(ensemble: Union[Ensemble, BidirectionalEnsemble]) -> Dict[str, Any]:
    meta = {
        "qubit_order": QUBIT_ORDER,
        "cut": {"alice": list(ensemble.cut.side_a), "bob": list(ensemble.cut.side_b)},
    }
    if isinstance(ensemble, BidirectionalEnsemble):
        return to_jsonable({
            **meta,
            "kind": "bidirectional",
            "row_probabilities": ensemble.row_probs,
            "column_probabilities": ensemble.col_probs,
            "row_labels": ensemble.row_labels,
            "column_labels": ensemble.col_labels,
            "states": [[s.amplitudes for s in row] for row in ensemble.states],
        })
    return to_jsonable({
        **meta,
        "kind": "one-way",
        "probabilities": ensemble.probabilities,
        "labels": ensemble.labels,
        "states": [s.amplitudes for s in ensemble.states],
    })


def parse_amplitudes(data: Any) -> PureState:
    """[[re, im], ...] (numbers or numeric strings), or {"amplitudes": [...]}, to a normalized state."""
    if isinstance(data, dict):
        data = data.get("amplitudes")
    if not isinstance(data, list) or not data:
        raise ValueError("expected a list of [re, im] pairs")
    amps = np.array([complex(float(re), float(im)) for re, im in data])
    return PureState.from_amplitudes(amps, normalize=True)
