"""Core value types: bits, bit strings, bit matrices, function tables, source samples.

All values are immutable after construction; numpy buffers are marked
read-only. Indices exposed to callers are 1-based, matching {1..m} and
{1..n} in the protocol descriptions.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from errors import DimensionError, DomainError, ParameterError, UsageError

Bit = int  # 0 or 1; XOR is ^


def _frozen(values, dtype) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


def _check_binary(data: np.ndarray):
    if data.size and (data.min() < 0 or data.max() > 1):
        raise DomainError("bit values must be 0 or 1")


@dataclass(frozen=True, eq=False)
class BitString:
    bits: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.bits, dtype=np.int64).reshape(-1)
        _check_binary(raw)
        object.__setattr__(self, "bits", _frozen(raw, np.uint8))

    @classmethod
    def zeros(cls, k: int) -> "BitString":
        return cls(np.zeros(k, dtype=np.uint8))

    def __len__(self) -> int:
        return int(self.bits.size)

    def __xor__(self, other: "BitString") -> "BitString":
        if len(self) != len(other):
            raise DimensionError(f"cannot XOR strings of length {len(self)} and {len(other)}")
        return BitString(self.bits ^ other.bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, BitString) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((len(self), self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"BitString({''.join(str(b) for b in self.bits)})"

    def to_tuple(self) -> tuple:
        return tuple(int(b) for b in self.bits)

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()


@dataclass(frozen=True, eq=False)
class BitMatrix:
    """k x m binary matrix, row-major, one entry per bit."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data, dtype=np.int64)
        if raw.ndim != 2:
            raise DimensionError(f"bit matrix must be 2-D, got shape {raw.shape}")
        if raw.shape[1] < 1:
            raise DimensionError("bit matrix needs at least one column")
        _check_binary(raw)
        object.__setattr__(self, "data", _frozen(raw, np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def from_rows(cls, rows, cols: Optional[int] = None) -> "BitMatrix":
        rows = list(rows)
        if not rows:
            if cols is None:
                raise DimensionError("empty matrix needs an explicit column count")
            return cls.zeros(0, cols)
        return cls(np.array(rows))

    @classmethod
    def from_columns(cls, columns) -> "BitMatrix":
        columns = list(columns)
        if not columns:
            raise DimensionError("need at least one column")
        lengths = {len(c) for c in columns}
        if len(lengths) != 1:
            raise DimensionError(f"columns have different lengths {sorted(lengths)}")
        return cls(np.column_stack([c.bits for c in columns]).reshape(lengths.pop(), len(columns)))

    @classmethod
    def from_samples(cls, a_samples, m: int) -> "BitMatrix":
        """Stack samples of the alphabet {0,1}^m (indexed 1..2^m, MSB first) as rows.

        Samples are Python ints, so m is not limited by a machine word.
        """
        values = [int(v) - 1 for v in a_samples]
        if any(not 0 <= v < 1 << m for v in values):
            raise DomainError(f"samples must lie in 1..2^{m}")
        if not values:
            return cls.zeros(0, m)
        return cls([[(v >> (m - 1 - t)) & 1 for t in range(m)] for v in values])

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> tuple:
        return self.rows, self.cols

    def to_samples(self) -> tuple:
        return tuple(int("".join(str(b) for b in row), 2) + 1 for row in self.data)

    def xor(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot XOR {self.shape} with {other.shape}")
        return BitMatrix(self.data ^ other.data)

    def column(self, j: int) -> BitString:
        if not 1 <= j <= self.cols:
            raise IndexError(f"column {j} outside 1..{self.cols}")
        return BitString(self.data[:, j - 1])

    def columns(self) -> tuple:
        return tuple(self.column(j) for j in range(1, self.cols + 1))

    def entry(self, i: int, j: int) -> Bit:
        return int(self.data[i - 1, j - 1])

    def to_rows(self) -> tuple:
        return tuple(tuple(int(b) for b in row) for row in self.data)

    def to_bytes(self) -> bytes:
        return np.packbits(self.data.reshape(-1)).tobytes()

    def __eq__(self, other) -> bool:
        return isinstance(other, BitMatrix) and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.shape, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.to_rows()})"


def xor_matrices(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    return a.xor(b)


def column(matrix: BitMatrix, j: int) -> BitString:
    return matrix.column(j)


def encode_range_value(value: int, h: int) -> tuple:
    """h-bit MSB-first binary expansion of a range-element index."""
    if value < 0 or value >= 2 ** h:
        raise DomainError(f"value {value} does not fit in {h} bits")
    return tuple((value >> (h - 1 - t)) & 1 for t in range(h))


def decode_range_values(bits, h: int) -> tuple:
    """Inverse of encode_range_value applied to consecutive h-bit groups."""
    bits = tuple(int(b) for b in bits)
    if h == 0:
        return ()
    if len(bits) % h:
        raise DimensionError(f"{len(bits)} bits do not split into {h}-bit groups")
    out = []
    for start in range(0, len(bits), h):
        value = 0
        for b in bits[start:start + h]:
            value = (value << 1) | b
        out.append(value)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """f and g as m_a x m_b tables of range-element indices 0..r-1."""

    m_a: int
    m_b: int
    f_table: np.ndarray
    g_table: np.ndarray
    r_f: int
    r_g: int
    name: str = "custom"

    def __post_init__(self):
        if self.m_a < 1 or self.m_b < 1:
            raise ParameterError("alphabets need at least one symbol")
        if self.r_f < 1 or self.r_g < 1:
            raise ParameterError("function ranges need at least one element")
        for label, table, size in (("f", self.f_table, self.r_f), ("g", self.g_table, self.r_g)):
            arr = np.asarray(table, dtype=np.int64)
            if arr.shape != (self.m_a, self.m_b):
                raise DimensionError(f"{label} table must be {self.m_a}x{self.m_b}, got {arr.shape}")
            if arr.size and (arr.min() < 0 or arr.max() >= size):
                raise DomainError(f"{label} table entries must lie in 0..{size - 1}")
            object.__setattr__(self, f"{label}_table", _frozen(arr, np.int64))

    @property
    def h_a(self) -> int:
        return (self.r_f - 1).bit_length()

    @property
    def h_b(self) -> int:
        return (self.r_g - 1).bit_length()

    def f(self, a: int, b: int) -> int:
        return int(self.f_table[a - 1, b - 1])

    def g(self, a: int, b: int) -> int:
        return int(self.g_table[a - 1, b - 1])

    def same_functions(self) -> bool:
        return self.r_f == self.r_g and np.array_equal(self.f_table, self.g_table)

    def evaluate(self, a_samples, b_samples) -> tuple:
        a = np.asarray(a_samples, dtype=np.int64) - 1
        b = np.asarray(b_samples, dtype=np.int64) - 1
        return (tuple(int(v) for v in self.f_table[a, b]),
                tuple(int(v) for v in self.g_table[a, b]))

    @classmethod
    def oblivious_transfer(cls, m: int) -> "SelectionSpec":
        """Alice holds a in {0,1}^m, Bob holds b in 1..m; f = 0, g(a, b) = a_b."""
        return SelectionSpec(m)

    @classmethod
    def xor(cls) -> "FunctionSpec":
        table = np.array([[0, 1], [1, 0]])
        return cls(2, 2, table, table, 2, 2, name="xor")

    @classmethod
    def logical_and(cls) -> "FunctionSpec":
        table = np.array([[0, 0], [0, 1]])
        return cls(2, 2, table, table, 2, 2, name="and")

    @classmethod
    def random(cls, m_a: int, m_b: int, r_f: int, r_g: int, rng: np.random.Generator) -> "FunctionSpec":
        return cls(
            m_a, m_b,
            rng.integers(0, r_f, size=(m_a, m_b)),
            rng.integers(0, r_g, size=(m_a, m_b)),
            r_f, r_g, name="random",
        )

    @classmethod
    def from_table_file(cls, path) -> "FunctionSpec":
        """Read "m_A m_B |Rf| |Rg|" then m_A*m_B lines "a b f(a,b) g(a,b)" (1-based a, b)."""
        lines = [
            line.split("#", 1)[0].split()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
        ]
        lines = [tokens for tokens in lines if tokens]
        if not lines or len(lines[0]) != 4:
            raise UsageError(f"{path}: first line must be 'm_A m_B |Rf| |Rg|'")
        try:
            m_a, m_b, r_f, r_g = (int(x) for x in lines[0])
            entries = [tuple(int(x) for x in tokens) for tokens in lines[1:]]
        except ValueError:
            raise UsageError(f"{path}: table values must be integers")
        f_table = np.full((m_a, m_b), -1, dtype=np.int64)
        g_table = np.full((m_a, m_b), -1, dtype=np.int64)
        for entry in entries:
            if len(entry) != 4:
                raise UsageError(f"{path}: expected 'a b f g', got {entry}")
            a, b, fv, gv = entry
            if not (1 <= a <= m_a and 1 <= b <= m_b):
                raise UsageError(f"{path}: pair ({a}, {b}) outside the alphabets")
            if f_table[a - 1, b - 1] >= 0:
                raise UsageError(f"{path}: pair ({a}, {b}) listed twice")
            f_table[a - 1, b - 1] = fv
            g_table[a - 1, b - 1] = gv
        if (f_table < 0).any():
            raise UsageError(f"{path}: table needs all {m_a * m_b} pairs")
        return cls(m_a, m_b, f_table, g_table, r_f, r_g, name=Path(path).stem)

    def to_table_text(self) -> str:
        lines = [f"{self.m_a} {self.m_b} {self.r_f} {self.r_g}"]
        for a in range(1, self.m_a + 1):
            for b in range(1, self.m_b + 1):
                lines.append(f"{a} {b} {self.f(a, b)} {self.g(a, b)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SelectionSpec:
    """The OT pair f = 0, g(a, b) = a_b without tables.

    Same interface as FunctionSpec. Symbol a in 1..2^m stands for the
    row bits of a - 1, MSB first, and g reads bit b of that row.
    """

    m: int
    r_f: int = 1
    r_g: int = 2
    h_a: int = 0
    h_b: int = 1

    def __post_init__(self):
        if self.m < 2:
            raise ParameterError("oblivious transfer needs m >= 2")

    @property
    def name(self) -> str:
        return f"ot{self.m}"

    @property
    def m_a(self) -> int:
        return 1 << self.m

    @property
    def m_b(self) -> int:
        return self.m

    def f(self, a: int, b: int) -> int:
        return 0

    def g(self, a: int, b: int) -> int:
        return ((int(a) - 1) >> (self.m - int(b))) & 1

    def same_functions(self) -> bool:
        return False

    def evaluate(self, a_samples, b_samples) -> tuple:
        g = tuple(self.g(a, b) for a, b in zip(a_samples, b_samples))
        return (0,) * len(g), g


@dataclass(frozen=True)
class SourceSamples:
    a_samples: tuple
    b_samples: tuple

    def __post_init__(self):
        a = tuple(int(v) for v in self.a_samples)
        b = tuple(int(v) for v in self.b_samples)
        if len(a) != len(b):
            raise DimensionError(f"A^k has {len(a)} samples but B^k has {len(b)}")
        object.__setattr__(self, "a_samples", a)
        object.__setattr__(self, "b_samples", b)

    @classmethod
    def from_matrix(cls, a_matrix: BitMatrix, b_samples) -> "SourceSamples":
        return cls(a_matrix.to_samples(), tuple(b_samples))

    @property
    def k(self) -> int:
        return len(self.a_samples)

    @property
    def is_string_ot(self) -> bool:
        return len(set(self.b_samples)) <= 1

    def check_alphabets(self, m_a: int, m_b: int):
        for label, values, size in (("A", self.a_samples, m_a), ("B", self.b_samples, m_b)):
            if any(not 1 <= v <= size for v in values):
                raise DomainError(f"{label} samples must lie in 1..{size}")


@dataclass(frozen=True)
class FunctionOutputs:
    f_true: Optional[tuple] = None
    g_true: Optional[tuple] = None
    f_est: Optional[tuple] = None
    g_est: Optional[tuple] = None

    def __post_init__(self):
        lengths = {len(v) for v in (self.f_true, self.g_true, self.f_est, self.g_est) if v is not None}
        if len(lengths) > 1:
            raise DimensionError(f"output sequences have different lengths {sorted(lengths)}")


def eval_functions(spec: FunctionSpec, sources: SourceSamples) -> FunctionOutputs:
    """Truth part: F_i = f(A_i, B_i), G_i = g(A_i, B_i)."""
    sources.check_alphabets(spec.m_a, spec.m_b)
    f_true, g_true = spec.evaluate(sources.a_samples, sources.b_samples)
    return FunctionOutputs(f_true=f_true, g_true=g_true)
