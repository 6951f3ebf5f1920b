"""General secure function computation via two opposite sample-wise OTs.

Alice tabulates g(A_t, i) for every possible Bob symbol i and lets Bob pick
his column sample by sample; then the roles swap for f. Range values travel
as h-bit MSB-first strings, so each source sample costs h OT samples.
"""
import logging
from dataclasses import dataclass
from typing import Optional

from bits import BitMatrix, BitString, FunctionSpec, SourceSamples, decode_range_values, encode_range_value
from config import DEFAULT_SLACK
from engine import (FUNCTION_VALUES, RECEIVE, Party, PartyContext, Protocol, ResourceDemand, Send,
                    run_session)
from erasure import ErasureParams, SessionStreams
from errors import DomainError, ParameterError, StructuralError
from services.rate_service import rate_swot_exact, resource_size
from services.swot_service import SwotConfig, receiver_program, sender_program

logger = logging.getLogger(__name__)

ALICE_TO_BOB = "ab"
BOB_TO_ALICE = "ba"


@dataclass(frozen=True)
class GsfcConfig:
    spec: FunctionSpec
    k: int
    p_ab: float
    p_ba: float
    single_ot: bool = False
    slack: float = DEFAULT_SLACK
    n_ab: Optional[int] = None
    n_ba: Optional[int] = None

    def __post_init__(self):
        ErasureParams(self.p_ab)
        ErasureParams(self.p_ba)
        if self.k < 1:
            raise ParameterError(f"k must be at least 1, got {self.k}")
        if self.single_ot and not self.spec.same_functions():
            raise ParameterError("single-OT mode needs f and g to be the same function")

    @property
    def runs_ab(self) -> bool:
        """Alice to Bob needs an OT: g carries bits and Bob has a choice to hide."""
        return self.spec.h_b > 0 and self.spec.m_b > 1

    @property
    def runs_ba(self) -> bool:
        return self.spec.h_a > 0 and not self.single_ot and self.spec.m_a > 1

    @property
    def direct_ab(self) -> bool:
        """Bob's alphabet is a single symbol, so Alice sends g(A_t, 1) in the clear."""
        return self.spec.h_b > 0 and self.spec.m_b == 1

    @property
    def direct_ba(self) -> bool:
        return self.spec.h_a > 0 and not self.single_ot and self.spec.m_a == 1


@dataclass(frozen=True)
class FunctionStringTable:
    direction: str
    h: int
    strings: tuple

    def as_matrix(self) -> BitMatrix:
        """(k h) x (alphabet size) matrix whose columns are the strings."""
        return BitMatrix.from_columns(self.strings)


def gsfc_build_strings(spec: FunctionSpec, samples, direction: str) -> FunctionStringTable:
    """String i concatenates the h-bit encodings of g(A_t, i) (or f(i, B_t) in reverse) over t."""
    samples = tuple(int(v) for v in samples)
    if direction == ALICE_TO_BOB:
        own, other, h = spec.m_a, spec.m_b, spec.h_b
    elif direction == BOB_TO_ALICE:
        own, other, h = spec.m_b, spec.m_a, spec.h_a
    else:
        raise ParameterError(f"direction must be {ALICE_TO_BOB!r} or {BOB_TO_ALICE!r}, got {direction!r}")
    if any(not 1 <= v <= own for v in samples):
        raise DomainError(f"samples must lie in 1..{own}")
    strings = []
    for i in range(1, other + 1):
        bits = []
        for t in samples:
            value = spec.g(t, i) if direction == ALICE_TO_BOB else spec.f(i, t)
            bits.extend(encode_range_value(value, h))
        strings.append(BitString(bits))
    return FunctionStringTable(direction, h, tuple(strings))


def gsfc_expand_selection(samples, h: int) -> tuple:
    """Repeat each selection h times."""
    if h < 1:
        raise ParameterError(f"h must be at least 1, got {h}")
    return tuple(int(b) for b in samples for _ in range(h))


def _direction_size(k: int, h: int, p: float, m: int, slack: float) -> int:
    n = resource_size(k * h, rate_swot_exact(p, m), slack)
    if n is None:
        n = k * h * m
        logger.warning("GSFC direction with m=%d has zero rate at p=%s; sizing it as k*h*m=%d", m, p, n)
    return n


class GsfcProtocol(Protocol):
    name = "gsfc"

    def __init__(self, cfg: GsfcConfig):
        self.cfg = cfg
        self.function_spec = cfg.spec
        spec = cfg.spec
        self.n_ab = cfg.n_ab or (_direction_size(cfg.k, spec.h_b, cfg.p_ab, spec.m_b, cfg.slack)
                                 if cfg.runs_ab else 0)
        self.n_ba = cfg.n_ba or (_direction_size(cfg.k, spec.h_a, cfg.p_ba, spec.m_a, cfg.slack)
                                 if cfg.runs_ba else 0)

    def resource_layout(self) -> list:
        layout = []
        if self.cfg.runs_ab:
            layout.append(ResourceDemand(Party.ALICE, self.n_ab, self.cfg.p_ab))
        if self.cfg.runs_ba:
            layout.append(ResourceDemand(Party.BOB, self.n_ba, self.cfg.p_ba))
        return layout

    def validate_inputs(self, inputs: SourceSamples):
        super().validate_inputs(inputs)
        if inputs.k != self.cfg.k:
            raise ParameterError(f"configured for k={self.cfg.k}, got {inputs.k} samples")

    def alice_program(self, ctx: PartyContext):
        cfg, spec = self.cfg, self.cfg.spec
        resources = iter(ctx.resources)
        if cfg.runs_ab:
            table = gsfc_build_strings(spec, ctx.inputs, ALICE_TO_BOB)
            if not (yield from sender_program(table.as_matrix(), next(resources))):
                return None
        elif cfg.direct_ab:
            yield Send(FUNCTION_VALUES, tuple(spec.g(a, 1) for a in ctx.inputs))
        if cfg.single_ot or cfg.direct_ba:
            return (yield from _receive_values())
        if not cfg.runs_ba:
            return (0,) * cfg.k
        y = next(resources)
        selection = gsfc_expand_selection(ctx.inputs, spec.h_a)
        bits = yield from receiver_program(selection, y, SwotConfig(cfg.k * spec.h_a, spec.m_a, len(y)), ctx.rng)
        if bits is None:
            return None
        return decode_range_values(bits, spec.h_a)

    def bob_program(self, ctx: PartyContext):
        cfg, spec = self.cfg, self.cfg.spec
        resources = iter(ctx.resources)
        g_est = (0,) * cfg.k
        if cfg.runs_ab:
            y = next(resources)
            selection = gsfc_expand_selection(ctx.inputs, spec.h_b)
            bits = yield from receiver_program(selection, y, SwotConfig(cfg.k * spec.h_b, spec.m_b, len(y)), ctx.rng)
            if bits is None:
                return None
            g_est = decode_range_values(bits, spec.h_b)
        elif cfg.direct_ab:
            g_est = yield from _receive_values()
        if cfg.single_ot:
            yield Send(FUNCTION_VALUES, g_est)
            return g_est
        if cfg.runs_ba:
            table = gsfc_build_strings(spec, ctx.inputs, BOB_TO_ALICE)
            if not (yield from sender_program(table.as_matrix(), next(resources))):
                return None
        elif cfg.direct_ba:
            yield Send(FUNCTION_VALUES, tuple(spec.f(1, b) for b in ctx.inputs))
        return g_est


def _receive_values():
    msg = yield RECEIVE
    if msg.tag != FUNCTION_VALUES:
        raise StructuralError(f"expected function values, got {msg.tag}")
    return tuple(msg.payload)


def gsfc_full(inputs: SourceSamples, cfg: GsfcConfig, resources, streams: SessionStreams):
    return run_session(GsfcProtocol(cfg), inputs, resources, streams)
