"""Rates, capacity bounds, BOOT parameter search and abort probabilities."""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import minimize, minimize_scalar
from scipy.special import entr
from scipy.stats import binom

from bits import FunctionSpec
from errors import DomainError, ParameterError
from utils import as_fraction, format_params

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)
_MASS_TOLERANCE = 1e-12


def _check_p(p) -> Fraction:
    if not 0 <= float(p) <= 1:
        raise ParameterError(f"erasure probability must lie in [0, 1], got {p}")
    return as_fraction(p)


def rate_swot_exact(p, m: int) -> Fraction:
    """min(1 - p, p / (m - 1)) as an exact rational."""
    if m < 2:
        raise ParameterError(f"m must be at least 2, got {m}")
    q = _check_p(p)
    return min(1 - q, q / (m - 1))


def rate_swot(p, m: int) -> float:
    return float(rate_swot_exact(p, m))


def rate_boot_exact(p, branching) -> Fraction:
    levels = [rate_swot_exact(p, s) for s in branching]
    if not levels:
        raise ParameterError("branching sequence is empty")
    if any(r == 0 for r in levels):
        return Fraction(0)
    return 1 / sum(1 / r for r in levels)


def rate_boot(p, branching) -> float:
    """(sum_i 1 / R(p, s_i))^-1, zero when any level has rate zero."""
    return float(rate_boot_exact(p, branching))


def _gsfc_rate(terms) -> Optional[float]:
    """None when no direction consumes erasure samples; the rate is undefined there."""
    active = [(h, r) for h, r in terms if r is not None]
    if not active:
        return None
    if any(r == 0 for _, r in active):
        return 0.0
    return float(1 / sum(Fraction(h) / r for h, r in active))


def rate_gsfc(p, spec: FunctionSpec, single_ot: bool = False) -> Optional[float]:
    """(h_B / R(p, m_A) + h_A / R(p, m_B))^-1; single_ot drops the h_A term."""
    terms = [(spec.h_b, _level_rate(p, spec.m_a, spec.h_b))]
    if not single_ot:
        terms.append((spec.h_a, _level_rate(p, spec.m_b, spec.h_a)))
    return _gsfc_rate(terms)


def rate_gsfc_accounted(p, spec: FunctionSpec, single_ot: bool = False) -> Optional[float]:
    """k / (n_1 + n_2) with n_1 = k h_B / R(p, m_B) and n_2 = k h_A / R(p, m_A)."""
    terms = [(spec.h_b, _level_rate(p, spec.m_b, spec.h_b))]
    if not single_ot:
        terms.append((spec.h_a, _level_rate(p, spec.m_a, spec.h_a)))
    return _gsfc_rate(terms)


def _level_rate(p, m: int, h: int) -> Optional[Fraction]:
    """None for a direction that needs no OT: nothing to send, or no choice to hide."""
    if h == 0 or m < 2:
        return None
    return rate_swot_exact(p, m)


def resource_size(k: int, rate: Fraction, slack) -> Optional[int]:
    """Samples needed for k transfers at the given rate with relative slack; None at rate 0."""
    slack = as_fraction(slack)
    if not 0 <= slack < 1:
        raise ParameterError(f"slack must lie in [0, 1), got {float(slack)}")
    if rate == 0:
        return None
    return max(1, math.ceil(Fraction(k) / ((1 - slack) * rate)))


@dataclass(frozen=True)
class JointDistribution:
    """P_{X,Y} as an |X| x |Y| table."""

    probs: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.probs, dtype=float)
        if table.ndim != 2 or table.size == 0:
            raise DomainError(f"joint distribution must be a non-empty 2-D table, got shape {table.shape}")
        if (table < 0).any():
            raise DomainError("joint distribution has negative entries")
        if abs(table.sum() - 1.0) > _MASS_TOLERANCE:
            raise DomainError(f"joint distribution sums to {table.sum()!r}, not 1")
        table.setflags(write=False)
        object.__setattr__(self, "probs", table)

    @classmethod
    def from_channel(cls, p_x, channel) -> "JointDistribution":
        p_x = np.asarray(p_x, dtype=float)
        channel = np.asarray(channel, dtype=float)
        if channel.ndim != 2 or channel.shape[0] != p_x.size:
            raise DomainError(f"channel must have {p_x.size} rows, got shape {channel.shape}")
        if not np.allclose(channel.sum(axis=1), 1.0, atol=_MASS_TOLERANCE):
            raise DomainError("channel rows must each sum to 1")
        return cls(p_x[:, None] * channel)

    @classmethod
    def bes(cls, p: float) -> "JointDistribution":
        """BES(p) with Y over (0, 1, e)."""
        return cls.from_channel([0.5, 0.5], bec_channel(p))

    @classmethod
    def independent(cls, p_x, p_y) -> "JointDistribution":
        return cls(np.outer(np.asarray(p_x, dtype=float), np.asarray(p_y, dtype=float)))

    def mutual_information(self) -> float:
        h_x = _entropy_bits(self.probs.sum(axis=1))
        h_y = _entropy_bits(self.probs.sum(axis=0))
        return max(0.0, h_x + h_y - _entropy_bits(self.probs))

    def conditional_entropy_x_given_y(self) -> float:
        return max(0.0, _entropy_bits(self.probs) - _entropy_bits(self.probs.sum(axis=0)))


def _entropy_bits(probs) -> float:
    return float(entr(np.asarray(probs, dtype=float)).sum() / _LN2)


def bec_channel(p: float) -> np.ndarray:
    _check_p(p)
    return np.array([[1 - p, 0.0, p], [0.0, 1 - p, p]])


def capacity_upper_bound(joint: JointDistribution, m: int) -> float:
    """min(I(X;Y), H(X|Y) / (m - 1))."""
    if m < 2:
        raise ParameterError(f"m must be at least 2, got {m}")
    return min(joint.mutual_information(), joint.conditional_entropy_x_given_y() / (m - 1))


@dataclass(frozen=True)
class ChannelBound:
    bound: float
    input_distribution: tuple


def channel_upper_bound(channel, m: int, tol: float = 1e-6, grid: int = 100) -> ChannelBound:
    """Maximize the source bound over input distributions P_X of a channel P_{Y|X}."""
    channel = np.asarray(channel, dtype=float)
    size = channel.shape[0]
    if size < 2:
        raise DomainError("channel needs at least two inputs")

    def value(p_x) -> float:
        p_x = np.clip(np.asarray(p_x, dtype=float), 0.0, None)
        p_x = p_x / p_x.sum()
        return capacity_upper_bound(JointDistribution.from_channel(p_x, channel), m)

    if size == 2:
        points = np.linspace(0.0, 1.0, grid + 1)
        values = [value([1 - q, q]) for q in points]
        best = int(np.argmax(values))
        lo, hi = points[max(best - 1, 0)], points[min(best + 1, grid)]
        res = minimize_scalar(lambda q: -value([1 - q, q]), bounds=(lo, hi), method="bounded",
                              options={"xatol": tol})
        q, v = (res.x, -res.fun) if -res.fun >= values[best] else (points[best], values[best])
        return ChannelBound(float(v), (float(1 - q), float(q)))

    # coarse simplex grid, then SLSQP from the best point
    steps = max(2, min(grid, 20))
    best_x, best_v = None, -1.0
    for combo in combinations_with_replacement(range(size), steps):
        p_x = np.bincount(combo, minlength=size) / steps
        v = value(p_x)
        if v > best_v:
            best_x, best_v = p_x, v
    res = minimize(lambda x: -value(x), best_x, method="SLSQP", bounds=[(0.0, 1.0)] * size,
                   constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0}], options={"ftol": tol * 1e-3})
    if res.success and -res.fun > best_v:
        best_x, best_v = np.clip(res.x, 0.0, None) / np.clip(res.x, 0.0, None).sum(), -res.fun
    return ChannelBound(float(best_v), tuple(float(v) for v in best_x))


@dataclass(frozen=True)
class BootChoice:
    branching: tuple
    rate_exact: Fraction

    @property
    def rate(self) -> float:
        return float(self.rate_exact)


def candidate_branchings(m: int, max_u: int):
    """Non-decreasing sequences over 2..m with m <= prod < m * max(s)."""
    for u in range(1, max_u + 1):
        for seq in combinations_with_replacement(range(2, m + 1), u):
            product = math.prod(seq)
            if m <= product < m * seq[-1]:
                yield seq


def optimize_boot_params(p, m: int, max_u: int) -> BootChoice:
    """Best branching by exact rate; ties go to the shortest, then lexicographically first."""
    if max_u < 1:
        raise ParameterError(f"max_u must be at least 1, got {max_u}")
    if m < 2:
        raise ParameterError(f"m must be at least 2, got {m}")
    best = None
    for seq in candidate_branchings(m, max_u):
        rate = rate_boot_exact(p, seq)
        if best is None or (-rate, len(seq), seq) < (-best.rate_exact, len(best.branching), best.branching):
            best = BootChoice(seq, rate)
    return best


def abort_probability_counts(p, n: int, need_s: int, need_e: int) -> float:
    """P(|S| < need_s or n - |S| < need_e) with |S| ~ Binomial(n, 1 - p)."""
    _check_p(p)
    if n < 0 or need_s < 0 or need_e < 0:
        raise ParameterError("counts must be non-negative")
    if need_s > n - need_e:
        return 1.0
    q = 1.0 - float(p)
    value = binom.cdf(need_s - 1, n, q) + binom.sf(n - need_e, n, q)
    return float(min(1.0, max(0.0, value)))


def abort_probability_exact(p, n: int, k: int, m: int) -> float:
    return abort_probability_counts(p, n, k, k * (m - 1))


@dataclass
class RateReport:
    p: float
    m: int
    params: Optional[tuple] = None
    spec_name: Optional[str] = None
    swot_rate: float = 0.0
    swot_capacity_upper: float = 0.0
    boot_rate: Optional[float] = None
    gsfc_rate: Optional[float] = None
    gsfc_rate_accounted: Optional[float] = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "params": format_params(self.params) if self.params else None,
            "function": self.spec_name,
            "swot_rate": self.swot_rate,
            "swot_capacity_upper": self.swot_capacity_upper,
            "boot_rate": self.boot_rate,
            "gsfc_rate": self.gsfc_rate,
            "gsfc_rate_accounted": self.gsfc_rate_accounted,
            "notes": list(self.notes),
        }


def rate_report(p, m: int, branching=None, spec: Optional[FunctionSpec] = None) -> RateReport:
    report = RateReport(
        p=float(p), m=m, params=tuple(branching) if branching else None,
        swot_rate=rate_swot(p, m),
        swot_capacity_upper=capacity_upper_bound(JointDistribution.bes(float(p)), m),
    )
    if branching:
        report.boot_rate = rate_boot(p, branching)
        if math.prod(branching) < m:
            report.notes.append(f"product of {format_params(branching)} is below m={m}")
    if spec is not None:
        report.spec_name = spec.name
        report.gsfc_rate = rate_gsfc(p, spec)
        report.gsfc_rate_accounted = rate_gsfc_accounted(p, spec)
        if report.gsfc_rate_accounted is None:
            report.notes.append(f"{spec.name} needs no erasure samples; GSFC rate undefined")
    return report


def rate_table(p_grid, m: int, param_sets=None, max_u: int = 4) -> pd.DataFrame:
    """Rate curves: one row per (p, parameter set); optimizer's best per p when none given."""
    rows = []
    swot = (m,)
    for p in p_grid:
        rows.append({"p": p, "params": format_params(swot), "rate": rate_swot(p, m)})
        if param_sets:
            for seq in param_sets:
                if tuple(seq) == swot:
                    continue
                if math.prod(seq) < m:
                    raise ParameterError(f"product of {format_params(seq)} is below m={m}")
                rows.append({"p": p, "params": format_params(seq), "rate": rate_boot(p, seq)})
        else:
            best = optimize_boot_params(p, m, max_u)
            if best.branching == swot:
                continue
            rows.append({"p": p, "params": format_params(best.branching), "rate": best.rate})
    frame = pd.DataFrame(rows, columns=["p", "params", "rate"])
    logger.info("Rate table: m=%d, %d grid points, %d rows", m, len(p_grid), len(frame))
    return frame
