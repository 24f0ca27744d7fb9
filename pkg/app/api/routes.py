"""
API routes for the gate capability engine.

Endpoint groups:

  /health                    Service health
  /decompose                 Canonical form of a gate
  /entcap                    E_U and E_U^- of a gate
  /analyze                   Full report (cached by gate + optimizer config)
  /protocols                 Shipped protocol library
  /protocols/{name}/audit    Superposition-of-messages audit

Responses carry the same canonical JSON the CLI writes.
"""
import logging
from datetime import datetime, timezone
from typing import Callable, Optional

from fastapi import APIRouter, HTTPException, Response
from pydantic import BaseModel, Field

from config import get_settings
from app.models.capability import OptimizerConfig
from app.models.gate import GateSpec
from app.services import protocols as protocol_lib
from app.services.analysis import analyze, gate_echo
from app.services.canonical import conjugation_check, decompose, gate_matrix
from app.services.entcap import symmetry_check
from app.services.errors import ImperfectProtocolError
from app.services.report_cache import get_cached, get_redis, put_cached, report_key
from app.services.serialization import dumps, state_to_json, to_jsonable

logger = logging.getLogger(__name__)

router = APIRouter()


class OptimizerOverrides(BaseModel):
    seed: Optional[int] = None
    restarts: Optional[int] = Field(None, ge=1)
    max_iters: Optional[int] = Field(None, ge=1)
    grad_tol: Optional[float] = Field(None, gt=0)
    oracle_samples: Optional[int] = Field(None, ge=0)


class GateRequest(BaseModel):
    gate: GateSpec
    optimizer: OptimizerOverrides = OptimizerOverrides()

    def config(self) -> OptimizerConfig:
        return OptimizerConfig.from_settings(**self.optimizer.model_dump())


class AuditRequest(BaseModel):
    gate: Optional[GateSpec] = None


def _json(obj, timing: bool = True) -> Response:
    return Response(content=dumps(obj, timing=timing), media_type="application/json")


def _run(what: str, fn: Callable):
    """Map engine errors: input problems 400, numerical failures 422, the rest 500."""
    try:
        return fn()
    except ArithmeticError as e:
        logger.warning(f"[API] {what}: {e}")
        raise HTTPException(status_code=422, detail=getattr(e, "diagnostic", lambda: str(e))())
    except ImperfectProtocolError as e:
        raise HTTPException(status_code=400, detail={"error": e.diagnostic(), "fidelities": to_jsonable(e.fidelities)})
    except ValueError as e:
        raise HTTPException(status_code=400, detail=getattr(e, "diagnostic", lambda: str(e))())
    except HTTPException:
        raise
    except Exception as e:
        logger.exception(f"[API] {what} failed")
        raise HTTPException(status_code=500, detail=str(e))


# ─────────────────────────────────────────────
# Health
# ─────────────────────────────────────────────

@router.get("/health")
async def health_check():
    redis_ok = False
    try:
        r = get_redis()
        if r:
            r.ping()
            redis_ok = True
    except Exception:
        pass

    return {
        "status": "ok",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": get_settings().TOOL_VERSION,
        "redis": "connected" if redis_ok else "unavailable",
        "protocols_loaded": len(protocol_lib.get_protocols()),
    }


# ─────────────────────────────────────────────
# Gate analysis
# ─────────────────────────────────────────────

@router.post("/decompose")
def decompose_gate(spec: GateSpec):
    """Canonical parameters, local factors and the U_d identity residuals."""
    def work():
        u = gate_matrix(spec)
        form = decompose(u)
        return {
            "gate": gate_echo(spec, u),
            "canonical": form,
            "conjugation": conjugation_check(form.alphas),
        }

    return _json(_run("decompose", work))


@router.post("/entcap")
def entanglement_capability(request: GateRequest):
    """E_U, E_U^- and the conjugate witness state."""
    cfg = request.config()

    def work():
        u = gate_matrix(request.gate)
        sym = symmetry_check(u, cfg)
        return {
            "seed": cfg.seed,
            "alphas": sym.alphas,
            "e_u": sym.e_u,
            "e_u_minus": sym.e_u_minus,
            "gap": sym.gap,
            "increase_converged": sym.increase.converged,
            "decrease_converged": sym.decrease.converged,
            "witness_state": state_to_json(sym.witness_state),
            "witness_residual": sym.witness_residual,
            "note": sym.increase.note,
        }

    return _json(_run("entcap", work))


@router.post("/analyze")
def analyze_gate(request: GateRequest):
    """
    Full pipeline report. Reports are cached (Redis when enabled, otherwise
    in memory) under the gate spec, the effective optimizer config and the
    tool version; a cached response reports source=cache in X-Report-Source.
    """
    cfg = request.config()
    key = report_key({
        "gate": request.gate.model_dump(exclude_none=True),
        "config": cfg.model_dump(),
        "version": get_settings().TOOL_VERSION,
    })
    cached = get_cached(key)
    if cached is not None:
        return Response(content=cached, media_type="application/json", headers={"X-Report-Source": "cache"})

    report = _run("analyze", lambda: analyze(request.gate, cfg))
    text = dumps(report, timing=True)
    put_cached(key, text)
    return Response(content=text, media_type="application/json", headers={"X-Report-Source": "computed"})


# ─────────────────────────────────────────────
# Protocols
# ─────────────────────────────────────────────

@router.get("/protocols")
async def list_protocols():
    return {
        name: {
            "description": p.description,
            "gate": p.gate,
            "n_a": p.n_a,
            "n_b": p.n_b,
            "t": p.t,
            "resource_pairs": p.resource_pairs,
        }
        for name, p in sorted(protocol_lib.get_protocols().items())
    }


@router.post("/protocols/{name}/audit")
def audit_protocol(name: str, request: Optional[AuditRequest] = None):
    """Audit a shipped protocol, optionally with its gate replaced."""
    if name not in protocol_lib.get_protocols():
        raise HTTPException(status_code=404, detail=f"unknown protocol {name!r}")

    def work():
        u = gate_matrix(request.gate) if request and request.gate else None
        return protocol_lib.superposition_audit(protocol_lib.get_protocol(name), u)

    return _json(_run("audit", work))

