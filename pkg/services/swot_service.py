"""Sample-wise 1-out-of-m oblivious transfer over an erasure resource.

Bob hides which bit he wants by asking for the selected bit over a
non-erased index and for every other bit over erased indices; Alice pads
each bit of her k x m matrix with the X sample Bob named. Bob aborts when
his erasure pattern has too few erasures or non-erasures.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from bits import BitMatrix, FunctionSpec, SourceSamples
from engine import (ABORT, CIPHER, RECEIVE, SELECTION, Party, Protocol, PartyContext,
                    ResourceDemand, Send, run_session)
from erasure import ERASURE, ErasureParams, IndexPartition, RandomSource, SessionStreams
from errors import DimensionError, ParameterError, StructuralError

logger = logging.getLogger(__name__)

CipherMatrix = BitMatrix


@dataclass(frozen=True)
class SwotConfig:
    k: int
    m: int
    n: int

    def __post_init__(self):
        if self.m < 2:
            raise ParameterError(f"1-out-of-m transfer needs m >= 2, got {self.m}")
        if self.k < 1:
            raise ParameterError(f"k must be at least 1, got {self.k}")
        if self.n < 1:
            raise ParameterError(f"n must be at least 1, got {self.n}")

    @property
    def concealed(self) -> int:
        return self.k * (self.m - 1)


@dataclass(frozen=True, eq=False)
class SelectionMatrix:
    """k x m matrix U of 1-based indices into the erasure sequence."""

    entries: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.entries, dtype=np.int64)
        if raw.ndim != 2:
            raise DimensionError(f"selection matrix must be 2-D, got shape {raw.shape}")
        if raw.size and raw.min() < 1:
            raise StructuralError("selection indices are 1-based")
        raw.setflags(write=False)
        object.__setattr__(self, "entries", raw)

    @property
    def shape(self) -> tuple:
        return tuple(int(v) for v in self.entries.shape)

    def entry(self, i: int, j: int) -> int:
        return int(self.entries[i - 1, j - 1])

    def to_rows(self) -> tuple:
        return tuple(tuple(int(v) for v in row) for row in self.entries)

    def to_bytes(self) -> bytes:
        return self.entries.astype(">u4").tobytes()

    def __eq__(self, other) -> bool:
        return isinstance(other, SelectionMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.shape, self.entries.tobytes()))


def abort_condition(non_erased: int, erased: int, k: int, m: int) -> bool:
    """Abort iff k > |S| or k(m-1) > |S_e|; equality proceeds."""
    return k > non_erased or k * (m - 1) > erased


def build_selection(partition: IndexPartition, b_samples, cfg: SwotConfig, rng: RandomSource,
                    used: Optional[set] = None) -> Optional[SelectionMatrix]:
    """Bob's U, or None when the protocol must abort.

    Selected positions (i, B_i) are filled row-major from a uniform draw
    without replacement from S, the remaining positions row-major from an
    independent draw from S_e. Indices in ``used`` are never reused and the
    new ones are added to it.
    """
    b_samples = tuple(int(b) for b in b_samples)
    if len(b_samples) != cfg.k:
        raise DimensionError(f"expected {cfg.k} selections, got {len(b_samples)}")
    if any(not 1 <= b <= cfg.m for b in b_samples):
        raise StructuralError(f"selections must lie in 1..{cfg.m}")
    used = set() if used is None else used
    pool_s = [i for i in partition.non_erased if i not in used]
    pool_e = [i for i in partition.erased if i not in used]
    if abort_condition(len(pool_s), len(pool_e), cfg.k, cfg.m):
        logger.debug("swot abort: |S|=%d |S_e|=%d k=%d m=%d", len(pool_s), len(pool_e), cfg.k, cfg.m)
        return None

    selected = iter(rng.draw_without_replacement(pool_s, cfg.k))
    concealed = iter(rng.draw_without_replacement(pool_e, cfg.concealed))
    u = np.zeros((cfg.k, cfg.m), dtype=np.int64)
    for i, b in enumerate(b_samples):
        u[i, b - 1] = next(selected)
    for i, b in enumerate(b_samples):
        for j in range(cfg.m):
            if j != b - 1:
                u[i, j] = next(concealed)
    used.update(int(v) for v in u.reshape(-1))
    return SelectionMatrix(u)


def alice_encrypt(a_matrix: BitMatrix, u: SelectionMatrix, x) -> CipherMatrix:
    """C = A xor X_U."""
    x = np.asarray(x, dtype=np.int64)
    if a_matrix.shape != u.shape:
        raise StructuralError(f"U is {u.shape} but A is {a_matrix.shape}")
    if u.entries.size and u.entries.max() > x.size:
        raise StructuralError(f"U names index {u.entries.max()} beyond n={x.size}")
    return CipherMatrix(a_matrix.data ^ x[u.entries - 1])


def bob_decode(c: CipherMatrix, u: SelectionMatrix, y, b_samples) -> tuple:
    """G_i = C(i, B_i) xor Y_{U(i, B_i)}."""
    y = np.asarray(y, dtype=np.int64)
    out = []
    for i, b in enumerate(b_samples, start=1):
        index = u.entry(i, int(b))
        if not 1 <= index <= y.size:
            raise StructuralError(f"U names index {index} beyond n={y.size}")
        if y[index - 1] == ERASURE:
            raise StructuralError(f"selected index {index} is erased")
        out.append(c.entry(i, int(b)) ^ int(y[index - 1]))
    return tuple(out)


def sender_program(a_matrix: BitMatrix, x):
    """Alice's half; returns False when Bob aborted."""
    msg = yield RECEIVE
    if msg.tag == ABORT:
        return False
    if msg.tag != SELECTION:
        raise StructuralError(f"expected a selection matrix, got {msg.tag}")
    yield Send(CIPHER, alice_encrypt(a_matrix, msg.payload, x))
    return True


def receiver_program(b_samples, y, cfg: SwotConfig, rng: RandomSource, used: Optional[set] = None):
    """Bob's half; returns the decoded bits, or None after an abort."""
    u = build_selection(IndexPartition.from_received(y), b_samples, cfg, rng, used)
    if u is None:
        yield Send(ABORT)
        return None
    yield Send(SELECTION, u)
    msg = yield RECEIVE
    if msg.tag != CIPHER:
        raise StructuralError(f"expected a cipher matrix, got {msg.tag}")
    return bob_decode(msg.payload, u, y, b_samples)


class SwotProtocol(Protocol):
    """One SWOT session: A^k are row indices of {0,1}^m, B^k pick a column each."""

    name = "swot"

    def __init__(self, cfg: SwotConfig, p: float):
        self.cfg = cfg
        self.p = ErasureParams(p).p
        self.function_spec = FunctionSpec.oblivious_transfer(cfg.m)

    def resource_layout(self) -> list:
        return [ResourceDemand(Party.ALICE, self.cfg.n, self.p)]

    def validate_inputs(self, inputs: SourceSamples):
        super().validate_inputs(inputs)
        if inputs.k != self.cfg.k:
            raise ParameterError(f"configured for k={self.cfg.k}, got {inputs.k} samples")

    def alice_program(self, ctx: PartyContext):
        a_matrix = BitMatrix.from_samples(ctx.inputs, self.cfg.m)
        yield from sender_program(a_matrix, ctx.resources[0])
        return (0,) * self.cfg.k

    def bob_program(self, ctx: PartyContext):
        return (yield from receiver_program(ctx.inputs, ctx.resources[0], self.cfg, ctx.rng))


def swot_inputs(a_matrix: BitMatrix, b_samples) -> SourceSamples:
    return SourceSamples.from_matrix(a_matrix, b_samples)


def swot_full(inputs: SourceSamples, resource, cfg: SwotConfig, streams: SessionStreams, p: float = 0.5):
    """Run SWOT on one erasure sequence; p only labels the resource."""
    return run_session(SwotProtocol(cfg, p), inputs, [resource], streams)
