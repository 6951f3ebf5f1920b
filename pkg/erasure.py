"""Correlated randomness: BES(p)/BEC(p) samples and labelled randomness streams.

Two stream kinds share one interface:

* RandomnessStream: numpy Generator seeded from (master seed, label) via
  SeedSequence spawn keys, used for Monte Carlo runs.
* EnumeratingStream: answers every draw by branching a shared ChoiceTree,
  so the exact auditor can run the real protocol code over every outcome
  with its probability.

Both record each draw so a party's local randomness is part of its view.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import DimensionError, DomainError, InsufficientPoolError, ParameterError

logger = logging.getLogger(__name__)

ERASURE = -1  # third symbol of Y; never a bit value


@dataclass(frozen=True)
class ErasureParams:
    p: float

    def __post_init__(self):
        if not 0.0 <= float(self.p) <= 1.0:
            raise ParameterError(f"erasure probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True, eq=False)
class ErasureSequence:
    """Paired X^n (sender side) and Y^n over {0, 1, ERASURE} (receiver side)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int8).reshape(-1)
        y = np.asarray(self.y, dtype=np.int8).reshape(-1)
        if x.size != y.size:
            raise DimensionError(f"X^n has {x.size} samples but Y^n has {y.size}")
        if x.size and (x.min() < 0 or x.max() > 1):
            raise DomainError("X^n must be binary")
        if np.any((y != ERASURE) & (y != x)):
            raise DomainError("an erasure channel never flips bits")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return int(self.x.size)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ErasureSequence)
                and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y))

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.y.tobytes()))

    def erasure_count(self) -> int:
        return int(np.count_nonzero(self.y == ERASURE))

    def render_y(self) -> str:
        return "".join("e" if v == ERASURE else str(int(v)) for v in self.y)


@dataclass(frozen=True)
class IndexPartition:
    non_erased: tuple
    erased: tuple

    @classmethod
    def from_received(cls, y, exclude=()) -> "IndexPartition":
        """Partition 1..n by Bob's Y^n, skipping indices already used."""
        y = np.asarray(y)
        skip = set(exclude)
        non_erased = tuple(int(i) + 1 for i in np.flatnonzero(y != ERASURE) if int(i) + 1 not in skip)
        erased = tuple(int(i) + 1 for i in np.flatnonzero(y == ERASURE) if int(i) + 1 not in skip)
        return cls(non_erased, erased)


class RandomSource:
    """Interface shared by seeded and enumerating streams."""

    stream_id: str
    record: list

    def bits(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def erasure_mask(self, p: float, n: int) -> np.ndarray:
        raise NotImplementedError

    def draw_without_replacement(self, pool, count: int) -> list:
        raise NotImplementedError

    def child(self, label: str) -> "RandomSource":
        raise NotImplementedError

    def _check_pool(self, pool, count):
        if count < 0 or count > len(pool):
            raise InsufficientPoolError(f"cannot draw {count} from a pool of {len(pool)}")


def _label_key(label: str) -> tuple:
    return tuple(label.encode("utf-8"))


class RandomnessStream(RandomSource):
    """Single-consumer seeded stream; identical (seed, stream_id) replays identically."""

    def __init__(self, seed: int, stream_id: str, record: Optional[list] = None):
        self.seed = int(seed)
        self.stream_id = stream_id
        self.record = [] if record is None else record
        sequence = np.random.SeedSequence(self.seed & (2 ** 64 - 1), spawn_key=_label_key(stream_id))
        self.generator = np.random.default_rng(sequence)

    def bits(self, n: int) -> np.ndarray:
        out = self.generator.integers(0, 2, size=n, dtype=np.int8)
        self.record.append(("bits", out.tobytes()))
        return out

    def erasure_mask(self, p: float, n: int) -> np.ndarray:
        out = self.generator.random(n) < p
        self.record.append(("erasures", np.packbits(out).tobytes()))
        return out

    def draw_without_replacement(self, pool, count: int) -> list:
        pool = list(pool)
        self._check_pool(pool, count)
        # shuffle-based: the first `count` entries of a uniform permutation
        picked = [int(v) for v in self.generator.permutation(np.asarray(pool, dtype=np.int64))[:count]]
        self.record.append(("draw", tuple(picked)))
        return picked

    def child(self, label: str) -> "RandomnessStream":
        # children draw independently but log into the owner's record
        return RandomnessStream(self.seed, f"{self.stream_id}/{label}", self.record)


class ChoiceTree:
    """Odometer over every sequence of weighted choices a deterministic program makes."""

    def __init__(self):
        self._path = []  # [chosen index, weights]
        self._pos = 0
        self.probability = 1.0
        self.leaves = 0

    def start_run(self):
        self._pos = 0
        self.probability = 1.0

    def choose(self, weights) -> int:
        if self._pos < len(self._path):
            index, _ = self._path[self._pos]
        else:
            index = next(i for i, w in enumerate(weights) if w > 0)
            self._path.append([index, tuple(weights)])
        self.probability *= weights[index]
        self._pos += 1
        return index

    def advance(self) -> bool:
        """Move to the next leaf; False once every leaf has been visited."""
        self.leaves += 1
        del self._path[self._pos:]
        while self._path:
            index, weights = self._path[-1]
            later = [i for i in range(index + 1, len(weights)) if weights[i] > 0]
            if later:
                self._path[-1][0] = later[0]
                return True
            self._path.pop()
        return False


class EnumeratingStream(RandomSource):
    def __init__(self, tree: ChoiceTree, stream_id: str, record: Optional[list] = None):
        self.tree = tree
        self.stream_id = stream_id
        self.record = [] if record is None else record

    def bits(self, n: int) -> np.ndarray:
        out = np.array([self.tree.choose((0.5, 0.5)) for _ in range(n)], dtype=np.int8)
        self.record.append(("bits", out.tobytes()))
        return out

    def erasure_mask(self, p: float, n: int) -> np.ndarray:
        weights = (1.0 - p, p)
        out = np.array([self.tree.choose(weights) == 1 for _ in range(n)], dtype=bool)
        self.record.append(("erasures", np.packbits(out).tobytes()))
        return out

    def draw_without_replacement(self, pool, count: int) -> list:
        remaining = list(pool)
        self._check_pool(remaining, count)
        picked = []
        for _ in range(count):
            size = len(remaining)
            picked.append(int(remaining.pop(self.tree.choose((1.0 / size,) * size))))
        self.record.append(("draw", tuple(picked)))
        return picked

    def child(self, label: str) -> "EnumeratingStream":
        return EnumeratingStream(self.tree, f"{self.stream_id}/{label}", self.record)


def sample_bes(params: ErasureParams, n: int, rng: RandomSource) -> ErasureSequence:
    """n iid samples of BES(p): X uniform, Y = X or erased with probability p."""
    if n < 0:
        raise ParameterError("n must be non-negative")
    x = rng.bits(n)
    erased = rng.erasure_mask(params.p, n)
    return ErasureSequence(x, np.where(erased, ERASURE, x))


def simulate_bec_transmission(params: ErasureParams, inputs, rng: RandomSource) -> ErasureSequence:
    """Pass sender-chosen inputs through BEC(p)."""
    x = np.asarray(inputs, dtype=np.int8).reshape(-1)
    if x.size and (x.min() < 0 or x.max() > 1):
        raise DomainError("channel inputs must be binary")
    erased = rng.erasure_mask(params.p, x.size)
    return ErasureSequence(x, np.where(erased, ERASURE, x))


def partition_indices(seq: ErasureSequence) -> IndexPartition:
    return IndexPartition.from_received(seq.y)


def draw_without_replacement(pool, count: int, rng: RandomSource) -> list:
    return rng.draw_without_replacement(pool, count)


def draw_resource(model: str, params: ErasureParams, n: int, sender_rng: RandomSource,
                  noise_rng: RandomSource) -> ErasureSequence:
    """One resource of n samples; in the channel model the sender randomizes its inputs."""
    if model == "source":
        return sample_bes(params, n, noise_rng)
    if model == "channel":
        return simulate_bec_transmission(params, sender_rng.bits(n), noise_rng)
    raise ParameterError(f"model must be 'source' or 'channel', got {model!r}")


@dataclass
class SessionStreams:
    """Per-party and noise streams of one session, split from one master seed."""

    alice: RandomSource
    bob: RandomSource
    noise: RandomSource
    inputs: Optional[RandomSource] = None

    @classmethod
    def from_seed(cls, seed: int, trial: int = 0) -> "SessionStreams":
        base = f"trial/{trial}"
        return cls(
            alice=RandomnessStream(seed, f"{base}/alice"),
            bob=RandomnessStream(seed, f"{base}/bob"),
            noise=RandomnessStream(seed, f"{base}/noise"),
            inputs=RandomnessStream(seed, f"{base}/inputs"),
        )

    @classmethod
    def enumerating(cls, tree: ChoiceTree) -> "SessionStreams":
        return cls(
            alice=EnumeratingStream(tree, "alice"),
            bob=EnumeratingStream(tree, "bob"),
            noise=EnumeratingStream(tree, "noise"),
            inputs=EnumeratingStream(tree, "inputs"),
        )
