"""
Command-line driver.

  python cli.py decompose '{"name": "CNOT"}'
  python cli.py entcap    '{"canonical": [0.785398163397, 0, 0]}' --seed 7
  python cli.py gain      @gate.json --psi psi.json
  python cli.py audit     swap-superdense
  python cli.py analyze   '{"name": "SWAP"}' --json report.json

A gate argument is JSON text or @path to a JSON file. Reports are canonical
JSON on stdout (or --json <path>); logs go to stderr.

Exit codes: 0 every check passed, 1 a check failed (or the numerics gave up),
2 the input was rejected.
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from config import get_settings
from app.models.capability import OptimizerConfig
from app.models.gate import GateSpec
from app.models.report import Check
from app.services import protocols as protocol_lib
from app.services.analysis import (
    AUDIT_TOL,
    BIDIRECTIONAL_TOL,
    BOUND_SLACK,
    CHAIN_SLACK,
    CONJUGATION_TOL,
    ENTROPY_SLACK,
    ONE_WAY_TOL,
    ORACLE_SLACK,
    RECONSTRUCTION_TOL,
    SYMMETRY_TOL,
    TWIRL_TOL,
    WITNESS_TOL,
    analyze,
    gate_echo,
)
from app.services.canonical import conjugation_check, decompose, gate_matrix, u_d
from app.services.ensembles import (
    build_bidirectional,
    build_one_way,
    dress_for_gate,
    gain_bidirectional,
    gain_one_way,
    to_core_frame,
    twirl_check,
)
from app.services.entcap import random_search, symmetry_check
from app.services.errors import EngineError, GateSpecError, ImperfectProtocolError
from app.services.qla import reduced_state
from app.services.serialization import dumps, emit, parse_amplitudes, state_to_json

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2


# ─────────────────────────────────────────────
# Input parsing
# ─────────────────────────────────────────────

def _read_json_arg(text: str, what: str) -> Any:
    if text.startswith("@"):
        path = text[1:]
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise GateSpecError(f"cannot read {what} file {path}: {e}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise GateSpecError(f"{what} is not valid JSON: {e}")


def parse_gate(text: str) -> GateSpec:
    """Gate-spec JSON (or @file) to a validated GateSpec; matrices must be unitary."""
    data = _read_json_arg(text, "gate spec")
    if not isinstance(data, dict):
        raise GateSpecError("gate spec must be a JSON object")
    try:
        spec = GateSpec.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "spec"
        raise GateSpecError(f"invalid gate spec ({where}): {first['msg']}")
    gate_matrix(spec)
    return spec


def _config(args: argparse.Namespace) -> OptimizerConfig:
    return OptimizerConfig.from_settings(
        seed=args.seed,
        restarts=args.restarts,
        max_iters=args.max_iters,
        grad_tol=args.tol,
        oracle_samples=args.oracle_samples,
    )


def _passed(checks: Dict[str, Check]) -> bool:
    return all(c.passed for c in checks.values())


def _header(command: str, seed: Optional[int] = None) -> Dict[str, Any]:
    out: Dict[str, Any] = {"command": command, "tool_version": get_settings().TOOL_VERSION}
    if seed is not None:
        out["seed"] = seed
    return out


# ─────────────────────────────────────────────
# Subcommands
# ─────────────────────────────────────────────

def cmd_decompose(args: argparse.Namespace) -> Dict[str, Any]:
    spec = parse_gate(args.gate)
    u = gate_matrix(spec)
    form = decompose(u)
    conj = conjugation_check(form.alphas)
    checks = {
        "reconstruction_residual": Check.below(form.residual, RECONSTRUCTION_TOL),
        "conjugation_residual": Check.below(conj.max_residual, CONJUGATION_TOL),
    }
    return {
        **_header("decompose"),
        "gate": gate_echo(spec, u),
        "canonical": form,
        "conjugation": conj,
        "checks": checks,
    }


def cmd_entcap(args: argparse.Namespace) -> Dict[str, Any]:
    spec = parse_gate(args.gate)
    cfg = _config(args)
    u = gate_matrix(spec)
    sym = symmetry_check(u, cfg)
    checks = {
        "symmetry_gap": Check.below(sym.gap, SYMMETRY_TOL),
        "conjugate_witness": Check.below(sym.witness_residual, WITNESS_TOL),
        "capability_range": Check.below(max(0.0, -sym.e_u, sym.e_u - 2.0), ENTROPY_SLACK),
    }
    oracle = None
    if cfg.oracle_samples:
        oracle = random_search(u_d(sym.alphas), "increase", cfg.oracle_samples, cfg.seed)
        checks["oracle_margin"] = Check.below(max(0.0, oracle.value - sym.e_u), ORACLE_SLACK)
    return {
        **_header("entcap", cfg.seed),
        "gate": gate_echo(spec, u),
        "alphas": sym.alphas,
        "e_u": sym.e_u,
        "e_u_minus": sym.e_u_minus,
        "gap": sym.gap,
        "increase": _capability_json(sym.increase),
        "decrease": _capability_json(sym.decrease),
        "witness_state": state_to_json(sym.witness_state),
        "witness_delta": sym.witness_delta,
        "oracle": None if oracle is None else {"value": oracle.value, "samples": oracle.samples},
        "checks": checks,
    }


def _capability_json(result) -> Dict[str, Any]:
    return {
        "value": result.value,
        "converged": result.converged,
        "restarts_used": result.restarts_used,
        "best_restart": result.best_restart,
        "argmax_state": state_to_json(result.argmax_state),
        "note": result.note,
    }


def cmd_gain(args: argparse.Namespace) -> Dict[str, Any]:
    spec = parse_gate(args.gate)
    cfg = _config(args)
    u = gate_matrix(spec)
    form = decompose(u)
    sym = symmetry_check(u, cfg)
    e_u = sym.e_u

    if args.psi:
        user = parse_amplitudes(_read_json_arg(args.psi, "psi"))
        if user.num_qubits != 4:
            raise GateSpecError(f"psi must be a 4-qubit state, got {user.num_qubits} qubits")
        psi = to_core_frame(user, form)
        source = "user"
    else:
        psi = sym.witness_state
        source = "conjugate-witness"

    one = gain_one_way(u, dress_for_gate(build_one_way(form.alphas, psi), form))
    both = gain_bidirectional(u, dress_for_gate(build_bidirectional(form.alphas, psi), form))
    twirl = twirl_check(reduced_state(psi, (3, 4)))

    checks = {
        "twirl_residual": Check.below(twirl, TWIRL_TOL),
        "one_way_bound": Check.below(max(0.0, one.gain - e_u), CHAIN_SLACK),
        "bidirectional_bound": Check.below(max(0.0, both.total_gain - 2 * e_u), CHAIN_SLACK),
    }
    if source == "conjugate-witness":
        checks["gain_chain"] = Check.below(max(0.0, one.gain - both.total_gain), CHAIN_SLACK)
        checks["one_way_gain"] = Check.below(abs(one.gain - e_u), ONE_WAY_TOL)
        checks["bidirectional_gain"] = Check.below(abs(both.total_gain - 2 * e_u), BIDIRECTIONAL_TOL)
    return {
        **_header("gain", cfg.seed),
        "gate": gate_echo(spec, u),
        "psi_source": source,
        "psi_core_frame": state_to_json(psi),
        "e_u": e_u,
        "two_e_u_upper_bound": 2 * e_u,
        "one_way": one,
        "bidirectional": both,
        "twirl_residual": twirl,
        "checks": checks,
    }


def cmd_audit(args: argparse.Namespace) -> Dict[str, Any]:
    if args.protocol:
        protocol = protocol_lib.load_protocol_file(args.protocol)
    elif args.name:
        protocol_lib.load_protocols(get_settings().PROTOCOLS_DIR)
        protocol = protocol_lib.get_protocol(args.name)
    else:
        raise GateSpecError("audit needs a protocol name or --protocol <file>")

    gate = parse_gate(args.gate) if args.gate else None
    u = gate_matrix(gate) if gate else None
    report = protocol_lib.superposition_audit(protocol, u)

    checks: Dict[str, Check] = {"audit_identity": Check.below(report.identity_residual, AUDIT_TOL)}
    if report.t:
        cfg = _config(args)
        sym = symmetry_check(protocol_lib.protocol_gate(protocol, u), cfg)
        report = protocol_lib.with_capability(report, sym.e_u, sym.e_u_minus)
        checks["rate_bound"] = Check.below(max(0.0, -report.rate_bound_slack), BOUND_SLACK)
    return {
        **_header("audit"),
        "audit": report,
        "checks": checks,
    }


def cmd_analyze(args: argparse.Namespace) -> Dict[str, Any]:
    spec = parse_gate(args.gate)
    protocol_lib.load_protocols(get_settings().PROTOCOLS_DIR)
    if args.protocol:
        extra = protocol_lib.load_protocol_file(args.protocol)
        protocol_lib.register_protocol(extra)
    return analyze(spec, _config(args))


COMMANDS = {
    "decompose": cmd_decompose,
    "entcap": cmd_entcap,
    "gain": cmd_gain,
    "audit": cmd_audit,
    "analyze": cmd_analyze,
}


# ─────────────────────────────────────────────
# Argument parser
# ─────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", metavar="PATH", help="Write the report to PATH instead of stdout")
    common.add_argument("--seed", type=int, help="Base RNG seed for the optimizer and oracle")
    common.add_argument("--restarts", type=int, help="Optimizer restarts")
    common.add_argument("--max-iters", type=int, dest="max_iters", help="Iterations per restart")
    common.add_argument("--tol", type=float, help="Gradient-norm stopping tolerance")
    common.add_argument(
        "--oracle-samples", type=int, dest="oracle_samples",
        help="Random-search oracle samples (0 disables the oracle check)",
    )
    common.add_argument("--timing", action="store_true", help="Include wall-clock time in the JSON")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")

    parser = argparse.ArgumentParser(
        prog="cli.py",
        description="Canonical form, entanglement capability and communication audits for two-qubit gates.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="Canonical (Cartan) form of a gate")
    p.add_argument("gate", help="Gate-spec JSON or @file")

    p = sub.add_parser("entcap", parents=[common], help="E_U and E_U^- of a gate")
    p.add_argument("gate", help="Gate-spec JSON or @file")

    p = sub.add_parser("gain", parents=[common], help="One-way and bidirectional Holevo gains")
    p.add_argument("gate", help="Gate-spec JSON or @file")
    p.add_argument("--psi", help="4-qubit input state for U as JSON or @file ([[re, im], ...])")

    p = sub.add_parser("audit", parents=[common], help="Superposition-of-messages audit of a protocol")
    p.add_argument("name", nargs="?", help="Name of a shipped protocol")
    p.add_argument("--protocol", metavar="FILE", help="Protocol JSON file")
    p.add_argument("--gate", help="Replace the protocol's gate (JSON or @file)")

    p = sub.add_parser("analyze", parents=[common], help="Full pipeline report")
    p.add_argument("gate", help="Gate-spec JSON or @file")
    p.add_argument("--protocol", metavar="FILE", help="Extra protocol JSON to audit when it matches")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
        stream=sys.stderr,
    )

    try:
        report = COMMANDS[args.command](args)
    except ValidationError as e:
        logger.error(f"[cli] invalid input: {e.errors()[0]['msg']}")
        return EXIT_INPUT
    except EngineError as e:
        logger.error(e.diagnostic())
        if isinstance(e, ImperfectProtocolError):
            sys.stderr.write(dumps({"error": e.diagnostic(), "fidelities": e.fidelities}))
        if isinstance(e, ArithmeticError):
            return EXIT_FAILED
        return EXIT_INPUT
    except (FileNotFoundError, ValueError) as e:
        logger.error(f"[cli] {e}")
        return EXIT_INPUT

    try:
        emit(report, args.json, timing=args.timing)
    except OSError as e:
        logger.error(f"[cli] cannot write report: {e}")
        return EXIT_INPUT

    checks = report["checks"] if isinstance(report, dict) else report.checks
    if not _passed(checks):
        failed = sorted(k for k, c in checks.items() if not c.passed)
        logger.warning(f"[cli] failed checks: {', '.join(failed)}")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
