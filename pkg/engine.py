"""Two-party session engine: messages, transcripts, party views, scheduling.

A protocol supplies one generator program per party. Programs yield
``Send(tag, payload)`` to put a message on the public discussion channel
and ``RECEIVE`` to wait for the counterpart's next message; the value a
program returns is that party's function estimate. The scheduler runs the
two programs in alternating half-steps (each party runs until it blocks
or finishes) and records every message in order.
"""
import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from bits import FunctionOutputs, FunctionSpec, SourceSamples, eval_functions
from erasure import ErasureParams, ErasureSequence, SessionStreams, draw_resource
from errors import ParameterError, StructuralError

logger = logging.getLogger(__name__)

# payload tags
SELECTION = "selection"
CIPHER = "cipher"
ABORT = "abort"
ENCODED_STRINGS = "encoded_strings"
FUNCTION_VALUES = "function_values"


class Party(enum.Enum):
    ALICE = "alice"
    BOB = "bob"

    @property
    def other(self) -> "Party":
        return Party.BOB if self is Party.ALICE else Party.ALICE


def payload_bytes(payload) -> bytes:
    """Canonical byte image of a tagged payload (used for logs and view keys)."""
    if payload is None:
        return b""
    if hasattr(payload, "to_bytes") and not isinstance(payload, int):
        return payload.to_bytes()
    if isinstance(payload, (tuple, list)):
        if all(isinstance(v, (int, np.integer)) for v in payload):
            return np.asarray(payload, dtype=">u4").tobytes()
        return b"".join(payload_bytes(item) for item in payload)
    raise StructuralError(f"cannot encode payload of type {type(payload).__name__}")


@dataclass(frozen=True)
class Message:
    stage: int
    sender: Party
    tag: str
    payload: object = None

    def payload_bytes(self) -> bytes:
        return payload_bytes(self.payload)

    def key(self) -> tuple:
        return self.stage, self.sender.value, self.tag, self.payload_bytes()

    def to_log_line(self) -> str:
        data = self.payload_bytes()
        return f"{self.stage} {self.sender.value} {self.tag} {len(data)} {data.hex() or '-'}"


@dataclass(frozen=True)
class Transcript:
    messages: tuple
    resource_usage: int
    aborted: bool = False

    def __post_init__(self):
        stages = [msg.stage for msg in self.messages]
        if any(b <= a for a, b in zip(stages, stages[1:])):
            raise StructuralError("message stages must be strictly increasing")
        if self.aborted and (not self.messages or self.messages[-1].tag != ABORT):
            raise StructuralError("an aborted transcript must end with an abort notice")

    def to_log_lines(self) -> list:
        """One line per message: stage, sender, tag, payload size in bytes, payload hex."""
        return [msg.to_log_line() for msg in self.messages]

    def tags(self) -> tuple:
        return tuple(msg.tag for msg in self.messages)


@dataclass(frozen=True)
class PartyView:
    role: Party
    private_inputs: tuple
    resource_side: tuple
    local_randomness_record: tuple
    received_messages: tuple

    def observation_key(self) -> tuple:
        """Hashable image of everything observed besides the party's own inputs."""
        return (
            self.resource_side,
            self.local_randomness_record,
            tuple(msg.key() for msg in self.received_messages),
        )


@dataclass(frozen=True)
class SessionResult:
    transcript: Transcript
    alice_view: PartyView
    bob_view: PartyView
    outputs: FunctionOutputs

    @property
    def aborted(self) -> bool:
        return self.transcript.aborted


@dataclass(frozen=True)
class Correctness:
    alice: bool
    bob: bool


@dataclass(frozen=True)
class Send:
    tag: str
    payload: object = None


class _Receive:
    def __repr__(self) -> str:
        return "RECEIVE"


RECEIVE = _Receive()


@dataclass(frozen=True)
class ResourceDemand:
    """One erasure resource: who holds X^n, how many samples, at what erasure probability."""

    holder: Party
    n: int
    p: float


@dataclass
class PartyContext:
    role: Party
    inputs: tuple
    resources: tuple  # per resource: X^n if the party holds X, else Y^n
    rng: object


class Protocol:
    """Base for protocols run by run_session."""

    name = "protocol"
    function_spec: FunctionSpec

    def resource_layout(self) -> list:
        raise NotImplementedError

    def validate_inputs(self, inputs: SourceSamples):
        inputs.check_alphabets(self.function_spec.m_a, self.function_spec.m_b)

    def alice_program(self, ctx: PartyContext):
        raise NotImplementedError

    def bob_program(self, ctx: PartyContext):
        raise NotImplementedError


@dataclass
class _Runner:
    program: object
    waiting: bool = False
    done: bool = False
    result: object = None
    inbox: deque = field(default_factory=deque)


def _schedule(alice_program, bob_program) -> tuple:
    runners = {Party.ALICE: _Runner(alice_program), Party.BOB: _Runner(bob_program)}
    messages = []
    while not all(r.done for r in runners.values()):
        progressed = False
        for party in (Party.ALICE, Party.BOB):
            runner = runners[party]
            while not runner.done:
                if runner.waiting:
                    if not runner.inbox:
                        break
                    value = runner.inbox.popleft()
                    runner.waiting = False
                else:
                    value = None
                try:
                    instruction = runner.program.send(value)
                except StopIteration as stop:
                    runner.done = True
                    runner.result = stop.value
                    progressed = True
                    break
                progressed = True
                if instruction is RECEIVE:
                    runner.waiting = True
                elif isinstance(instruction, Send):
                    msg = Message(len(messages) + 1, party, instruction.tag, instruction.payload)
                    messages.append(msg)
                    runners[party.other].inbox.append(msg)
                else:
                    raise StructuralError(f"{party.value} yielded {instruction!r}")
        if not progressed:
            raise StructuralError("deadlock: both parties wait for a message")
    return tuple(messages), runners[Party.ALICE].result, runners[Party.BOB].result


def _side(resource: ErasureSequence, holder: Party, role: Party) -> np.ndarray:
    return resource.x if holder is role else resource.y


def draw_session_resources(protocol: Protocol, streams: SessionStreams, model: str = "source") -> list:
    """Draw every resource the protocol declares, in declaration order."""
    resources = []
    for demand in protocol.resource_layout():
        sender_rng = streams.alice if demand.holder is Party.ALICE else streams.bob
        resources.append(draw_resource(model, ErasureParams(demand.p), demand.n, sender_rng, streams.noise))
    return resources


def run_session(protocol: Protocol, inputs: SourceSamples, resources, streams: SessionStreams) -> SessionResult:
    """Run one session; aborts come back as a flagged result, never as an exception."""
    layout = protocol.resource_layout()
    resources = list(resources)
    demand = [d.n for d in layout]
    supplied = [len(r) for r in resources]
    if demand != supplied:
        raise ParameterError(f"{protocol.name} needs resources of sizes {demand}, got {supplied}")
    protocol.validate_inputs(inputs)
    truth = eval_functions(protocol.function_spec, inputs)

    sides = {
        role: tuple(_side(r, d.holder, role) for r, d in zip(resources, layout))
        for role in Party
    }
    contexts = {
        Party.ALICE: PartyContext(Party.ALICE, inputs.a_samples, sides[Party.ALICE], streams.alice),
        Party.BOB: PartyContext(Party.BOB, inputs.b_samples, sides[Party.BOB], streams.bob),
    }
    messages, f_est, g_est = _schedule(
        protocol.alice_program(contexts[Party.ALICE]),
        protocol.bob_program(contexts[Party.BOB]),
    )
    aborted = bool(messages) and messages[-1].tag == ABORT
    k = inputs.k
    if aborted or f_est is None:
        f_est = (0,) * k
    if aborted or g_est is None:
        g_est = (0,) * k
    if aborted:
        logger.debug("%s session aborted after %d messages", protocol.name, len(messages))

    transcript = Transcript(messages, sum(supplied), aborted)
    views = {
        role: PartyView(
            role=role,
            private_inputs=contexts[role].inputs,
            resource_side=tuple(np.asarray(s).tobytes() for s in sides[role]),
            local_randomness_record=tuple(contexts[role].rng.record),
            received_messages=messages,
        )
        for role in Party
    }
    outputs = FunctionOutputs(truth.f_true, truth.g_true, tuple(f_est), tuple(g_est))
    return SessionResult(transcript, views[Party.ALICE], views[Party.BOB], outputs)


def check_correctness(result: SessionResult, truth: Optional[FunctionOutputs] = None) -> Correctness:
    """Whole-vector equality of each party's estimate against the truth."""
    truth = truth or result.outputs
    out = result.outputs
    for label, est, true in (("F", out.f_est, truth.f_true), ("G", out.g_est, truth.g_true)):
        if est is None or true is None or len(est) != len(true):
            raise StructuralError(f"{label} estimate and truth differ in length")
    return Correctness(alice=tuple(out.f_est) == tuple(truth.f_true),
                       bob=tuple(out.g_est) == tuple(truth.g_true))
