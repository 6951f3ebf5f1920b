"""Bootstrapped string OT: mask each string along an encoding tree, then run u small SWOTs.

Alice pads string j with one mask per tree level, chosen by the digits of
j - 1 in the mixed radix (s_1, ..., s_u). Bob receives all padded strings,
then obtains one mask per level through a 1-out-of-s_i string OT and strips
the masks of his own string.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from bits import BitMatrix, BitString, FunctionSpec, SourceSamples
from config import DEFAULT_SLACK
from engine import (ENCODED_STRINGS, RECEIVE, Party, PartyContext, Protocol, ResourceDemand,
                    Send, run_session)
from erasure import ErasureParams, RandomSource, SessionStreams
from errors import DomainError, ParameterError, StructuralError
from gf2 import in_row_space, row_reduce, span_elements
from services.rate_service import rate_swot_exact, resource_size
from services.swot_service import SwotConfig, receiver_program, sender_program
from utils import format_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BootParams:
    branching: tuple
    m: int
    k: int = 1

    def __post_init__(self):
        branching = tuple(int(s) for s in self.branching)
        object.__setattr__(self, "branching", branching)
        if self.m < 2:
            raise ParameterError(f"need at least two strings, got m={self.m}")
        if self.k < 1:
            raise ParameterError(f"string length must be at least 1, got k={self.k}")
        if not branching:
            raise ParameterError("branching sequence is empty")
        if any(not 2 <= s <= self.m for s in branching):
            raise ParameterError(f"each branching factor must lie in 2..{self.m}, got {format_params(branching)}")
        if math.prod(branching) < self.m:
            raise ParameterError(f"product of {format_params(branching)} is below m={self.m}")

    @property
    def u(self) -> int:
        return len(self.branching)


@dataclass(frozen=True)
class EncodingAssignment:
    """digits[j - 1] = (d_1, ..., d_u), the masks padding string j."""

    branching: tuple
    digits: tuple

    @property
    def m(self) -> int:
        return len(self.digits)

    def for_string(self, j: int) -> tuple:
        if not 1 <= j <= self.m:
            raise IndexError(f"string {j} outside 1..{self.m}")
        return self.digits[j - 1]

    def to_table(self) -> list:
        return [{"string": j, "masks": digits} for j, digits in enumerate(self.digits, start=1)]


def boot_assign(params: BootParams) -> EncodingAssignment:
    """Mixed-radix digits of j - 1, most significant level first, each plus one."""
    digits = []
    for j in range(1, params.m + 1):
        value = j - 1
        out = []
        for s in reversed(params.branching):
            value, digit = divmod(value, s)
            out.append(digit + 1)
        digits.append(tuple(reversed(out)))
    return EncodingAssignment(params.branching, tuple(digits))


@dataclass(frozen=True)
class MaskTable:
    masks: tuple  # masks[i - 1][j - 1] is the k-bit mask j of level i

    @classmethod
    def generate(cls, branching, k: int, rng: RandomSource) -> "MaskTable":
        return cls(tuple(
            tuple(BitString(rng.bits(k)) for _ in range(s)) for s in branching
        ))

    def mask(self, level: int, option: int) -> BitString:
        return self.masks[level - 1][option - 1]

    def level_matrix(self, level: int) -> BitMatrix:
        """k x s_i matrix whose columns are the level's masks."""
        return BitMatrix.from_columns(self.masks[level - 1])


@dataclass(frozen=True)
class EncodedStrings:
    ciphers: tuple

    def to_bytes(self) -> bytes:
        return b"".join(c.to_bytes() for c in self.ciphers)


def boot_encode(a_strings, masks: MaskTable, assignment: EncodingAssignment) -> EncodedStrings:
    a_strings = tuple(a_strings)
    if len(a_strings) != assignment.m:
        raise StructuralError(f"{len(a_strings)} strings for an assignment of {assignment.m}")
    if len(masks.masks) != len(assignment.branching):
        raise StructuralError("mask table depth differs from the tree depth")
    ciphers = []
    for string, digits in zip(a_strings, assignment.digits):
        pad = BitString.zeros(len(string))
        for level, option in enumerate(digits, start=1):
            mask = masks.mask(level, option)
            if len(mask) != len(string):
                raise StructuralError(f"mask of {len(mask)} bits for a {len(string)}-bit string")
            pad = pad ^ mask
        ciphers.append(string ^ pad)
    return EncodedStrings(tuple(ciphers))


def round_sizes_for(params: BootParams, p: float, slack: float = DEFAULT_SLACK) -> tuple:
    """n_i = ceil(k / ((1 - slack) R(p, s_i))); falls back to k s_i at rate zero."""
    sizes = []
    for s in params.branching:
        n = resource_size(params.k, rate_swot_exact(p, s), slack)
        if n is None:
            n = params.k * s
            logger.warning("BOOT level s=%d has zero rate at p=%s; sizing it as k*s=%d", s, p, n)
        sizes.append(n)
    return tuple(sizes)


class BootProtocol(Protocol):
    name = "boot"

    def __init__(self, params: BootParams, p: float, slack: float = DEFAULT_SLACK,
                 pooled: bool = False, round_sizes: Optional[tuple] = None):
        self.params = params
        self.p = ErasureParams(p).p
        self.pooled = pooled
        self.assignment = boot_assign(params)
        self.function_spec = FunctionSpec.oblivious_transfer(params.m)
        if round_sizes is None:
            round_sizes = round_sizes_for(params, self.p, slack)
        round_sizes = tuple(int(n) for n in round_sizes)
        if len(round_sizes) != params.u or any(n < 1 for n in round_sizes):
            raise ParameterError(f"need {params.u} positive round sizes, got {round_sizes}")
        self.round_sizes = round_sizes

    def resource_layout(self) -> list:
        if self.pooled:
            return [ResourceDemand(Party.ALICE, sum(self.round_sizes), self.p)]
        return [ResourceDemand(Party.ALICE, n, self.p) for n in self.round_sizes]

    def validate_inputs(self, inputs: SourceSamples):
        super().validate_inputs(inputs)
        if inputs.k != self.params.k:
            raise ParameterError(f"configured for k={self.params.k}, got {inputs.k} samples")
        if not inputs.is_string_ot:
            raise DomainError("string OT needs one selection repeated over all samples")

    def _round_resource(self, resources, level: int):
        return resources[0] if self.pooled else resources[level - 1]

    def alice_program(self, ctx: PartyContext):
        k, m = self.params.k, self.params.m
        a_matrix = BitMatrix.from_samples(ctx.inputs, m)
        if self.params.u == 1:
            yield from sender_program(a_matrix, ctx.resources[0])
            return (0,) * k
        masks = MaskTable.generate(self.params.branching, k, ctx.rng)
        yield Send(ENCODED_STRINGS, boot_encode(a_matrix.columns(), masks, self.assignment))
        for level in range(1, self.params.u + 1):
            x = self._round_resource(ctx.resources, level)
            if not (yield from sender_program(masks.level_matrix(level), x)):
                break
        return (0,) * k

    def bob_program(self, ctx: PartyContext):
        k = self.params.k
        if self.params.u == 1:
            y = ctx.resources[0]
            cfg = SwotConfig(k, self.params.m, len(y))
            return (yield from receiver_program(ctx.inputs, y, cfg, ctx.rng))
        b = ctx.inputs[0]
        msg = yield RECEIVE
        if msg.tag != ENCODED_STRINGS:
            raise StructuralError(f"expected encoded strings, got {msg.tag}")
        estimate = msg.payload.ciphers[b - 1]
        used = set() if self.pooled else None
        for level, (s, d) in enumerate(zip(self.params.branching, self.assignment.for_string(b)), start=1):
            y = self._round_resource(ctx.resources, level)
            received = yield from receiver_program((d,) * k, y, SwotConfig(k, s, len(y)), ctx.rng, used)
            if received is None:
                return None
            estimate = estimate ^ BitString(received)
        return estimate.to_tuple()


def boot_full(inputs: SourceSamples, resources, params: BootParams, streams: SessionStreams,
              p: float = 0.5, **kwargs):
    return run_session(BootProtocol(params, p, **kwargs), inputs, resources, streams)


def string_ot_inputs(a_strings, b: int) -> SourceSamples:
    """Inputs for m k-bit strings (the columns of A) and Bob's choice b."""
    a_matrix = BitMatrix.from_columns(a_strings)
    return SourceSamples.from_matrix(a_matrix, (b,) * a_matrix.rows)


@dataclass(frozen=True)
class KnowledgeSpan:
    """GF(2) span of what Bob can compute about the strings after the masks are eliminated."""

    m: int
    b: int
    basis: np.ndarray  # rows over string coordinates 1..m

    def contains(self, strings) -> bool:
        vector = np.zeros(self.m, dtype=np.uint8)
        for j in strings:
            vector[j - 1] ^= 1
        return in_row_space(self.basis, vector)

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])

    def recoverable_units(self) -> tuple:
        return tuple(j for j in range(1, self.m + 1) if self.contains((j,)))

    def leak_witnesses(self) -> tuple:
        """Minimal supports of span vectors made of two or more non-recoverable strings."""
        units = set(self.recoverable_units())
        supports = []
        for vector in span_elements(self.basis):
            support = frozenset(int(i) + 1 for i in np.flatnonzero(vector))
            if len(support) >= 2 and not support & units:
                supports.append(support)
        minimal = {s for s in supports if not any(t < s for t in supports)}
        return tuple(sorted((tuple(sorted(s)) for s in minimal), key=lambda t: (len(t), t)))


def boot_knowledge_span(assignment: EncodingAssignment, b: int) -> KnowledgeSpan:
    """Rows: one per padded string and one per received mask; masks are eliminated first."""
    offsets = np.cumsum((0,) + assignment.branching)
    mask_vars = int(offsets[-1])
    m = assignment.m
    if not 1 <= b <= m:
        raise ParameterError(f"selection {b} outside 1..{m}")
    rows = []
    for j, digits in enumerate(assignment.digits, start=1):
        row = np.zeros(mask_vars + m, dtype=np.uint8)
        row[mask_vars + j - 1] = 1
        for level, option in enumerate(digits):
            row[offsets[level] + option - 1] ^= 1
        rows.append(row)
    for level, option in enumerate(assignment.for_string(b)):
        row = np.zeros(mask_vars + m, dtype=np.uint8)
        row[offsets[level] + option - 1] = 1
        rows.append(row)
    reduced = row_reduce(np.vstack(rows))
    keep = [r for r, col in enumerate(reduced.pivots) if col >= mask_vars]
    basis = reduced.matrix[keep, mask_vars:] if keep else np.zeros((0, m), dtype=np.uint8)
    return KnowledgeSpan(m, b, basis)
