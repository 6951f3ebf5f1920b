"""Annotated single-session traces for the demo command."""
import logging

from engine import ABORT, CIPHER, ENCODED_STRINGS, FUNCTION_VALUES, SELECTION, draw_session_resources, run_session
from erasure import SessionStreams
from services.boot_service import BootProtocol
from services.simulation_service import SimulationRequest, build_protocol, sample_inputs
from utils import format_params

logger = logging.getLogger(__name__)


def _bits(values) -> str:
    return "".join(str(int(v)) for v in values)


def _matrix(rows) -> str:
    return " ".join("[" + ",".join(str(v) for v in row) + "]" for row in rows)


def demo_trace(request: SimulationRequest) -> list:
    """Step-by-step trace of trial 0 of the request; identical for identical flags and seed."""
    protocol = build_protocol(request)
    streams = SessionStreams.from_seed(request.seed, 0)
    inputs = sample_inputs(protocol.function_spec, request.k, streams.inputs,
                           string_ot=request.protocol == "boot", correlated=request.correlated)
    resources = draw_session_resources(protocol, streams, request.model)

    lines = [f"# {protocol.name} p={request.p} k={request.k} m={request.m} model={request.model} seed={request.seed}"]
    if isinstance(protocol, BootProtocol):
        lines.append(f"# tree s={format_params(protocol.params.branching)} rounds n={list(protocol.round_sizes)}"
                     f"{' pooled' if protocol.pooled else ''}")
        for j, digits in enumerate(protocol.assignment.digits, start=1):
            masks = " ".join(f"Z({level},{d})" for level, d in enumerate(digits, start=1))
            lines.append(f"string {j} -> {masks}")
    lines.append(f"inputs A={list(inputs.a_samples)} B={list(inputs.b_samples)}")
    for index, (demand, resource) in enumerate(zip(protocol.resource_layout(), resources), start=1):
        erased = resource.erasure_count()
        lines.append(f"resource {index} ({demand.holder.value} sends, n={len(resource)}): "
                     f"X={_bits(resource.x)} Y={resource.render_y()} |S|={len(resource) - erased} |S_e|={erased}")

    result = run_session(protocol, inputs, resources, streams)
    for msg in result.transcript.messages:
        if msg.tag == SELECTION:
            detail = f"U={_matrix(msg.payload.to_rows())}"
        elif msg.tag == CIPHER:
            detail = f"C={_matrix(msg.payload.to_rows())}"
        elif msg.tag == ENCODED_STRINGS:
            detail = "strings=" + " ".join(_bits(c.bits) for c in msg.payload.ciphers)
        elif msg.tag == FUNCTION_VALUES:
            detail = f"values={list(msg.payload)}"
        else:
            detail = ""
        lines.append(f"stage {msg.stage}: {msg.sender.value} -> {msg.sender.other.value} {msg.tag} {detail}".rstrip())

    out = result.outputs
    lines.append(f"estimates F^={list(out.f_est)} G^={list(out.g_est)}")
    lines.append(f"truth     F={list(out.f_true)} G={list(out.g_true)}")
    lines.append("transcript log:")
    lines.extend(result.transcript.to_log_lines())
    if result.aborted:
        last = result.transcript.messages[-1]
        lines.append(f"{ABORT}: notice from {last.sender.value} at stage {last.stage}; estimates set to zero")
    logger.debug("Demo trace for %s: %d lines", protocol.name, len(lines))
    return lines
