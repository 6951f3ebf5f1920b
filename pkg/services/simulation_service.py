"""Monte Carlo harness: seeded sessions, abort/error frequencies, theory comparison."""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import pandas as pd

from bits import BitMatrix, FunctionSpec, SelectionSpec, SourceSamples
from config import DEFAULT_SEED, DEFAULT_SLACK, GATE_SIGMAS, WORKERS
from engine import Protocol, check_correctness, draw_session_resources, run_session
from erasure import RandomSource, SessionStreams
from errors import ParameterError
from services.boot_service import BootParams, BootProtocol
from services.gsfc_service import GsfcConfig, GsfcProtocol
from services.rate_service import abort_probability_counts, abort_probability_exact
from services.swot_service import SwotConfig, SwotProtocol, abort_condition

logger = logging.getLogger(__name__)

PROTOCOLS = ("swot", "boot", "gsfc")


@dataclass(frozen=True)
class SimulationRequest:
    protocol: str = "swot"
    p: float = 0.5
    m: int = 2
    n: int = 1000
    k: int = 400
    trials: int = 1000
    seed: int = DEFAULT_SEED
    model: str = "source"
    branching: tuple = ()
    slack: float = DEFAULT_SLACK
    pooled: bool = False
    spec: Optional[FunctionSpec] = None
    single_ot: bool = False
    p_ba: Optional[float] = None
    correlated: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ParameterError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.trials < 1:
            raise ParameterError(f"trials must be at least 1, got {self.trials}")
        if self.model not in ("source", "channel"):
            raise ParameterError(f"model must be 'source' or 'channel', got {self.model!r}")


def build_protocol(request: SimulationRequest) -> Protocol:
    if request.protocol == "swot":
        return SwotProtocol(SwotConfig(request.k, request.m, request.n), request.p)
    if request.protocol == "boot":
        branching = request.branching or (request.m,)
        return BootProtocol(BootParams(branching, request.m, request.k), request.p,
                            slack=request.slack, pooled=request.pooled)
    spec = request.spec or FunctionSpec.xor()
    p_ba = request.p if request.p_ba is None else request.p_ba
    return GsfcProtocol(GsfcConfig(spec, request.k, request.p, p_ba, single_ot=request.single_ot,
                                   slack=request.slack))


def _symbol(stream: RandomSource, size: int) -> int:
    return stream.draw_without_replacement(range(1, size + 1), 1)[0]


def sample_inputs(spec: FunctionSpec, k: int, stream: RandomSource, string_ot: bool = False,
                  correlated: bool = False) -> SourceSamples:
    """Uniform A^k; B^k uniform, constant for string OT, or copying A half of the time when correlated.

    For the OT pair A^k is a uniform k x m bit matrix, one row per sample.
    """
    if isinstance(spec, SelectionSpec):
        a = BitMatrix(stream.bits(k * spec.m).reshape(k, spec.m)).to_samples()
    else:
        a = tuple(_symbol(stream, spec.m_a) for _ in range(k))
    if string_ot:
        return SourceSamples(a, (_symbol(stream, spec.m_b),) * k)
    coins = stream.bits(k) if correlated else [0] * k
    b = tuple((a_t - 1) % spec.m_b + 1 if coin else _symbol(stream, spec.m_b) for a_t, coin in zip(a, coins))
    return SourceSamples(a, b)


def abort_rule(protocol: Protocol, resources) -> bool:
    """Abort predicted from erasure counts alone."""
    counts = [(len(r) - r.erasure_count(), r.erasure_count()) for r in resources]
    if isinstance(protocol, SwotProtocol):
        (s, e), = counts
        return abort_condition(s, e, protocol.cfg.k, protocol.cfg.m)
    if isinstance(protocol, BootProtocol):
        params = protocol.params
        if protocol.pooled:
            (s, e), = counts
            return s < params.u * params.k or e < params.k * sum(x - 1 for x in params.branching)
        return any(abort_condition(s, e, params.k, x) for (s, e), x in zip(counts, params.branching))
    return any(abort_condition(s, e, k, m) for (s, e), (k, m) in zip(counts, _levels(protocol)))


def theory_abort_probability(protocol: Protocol) -> float:
    if isinstance(protocol, SwotProtocol):
        return abort_probability_exact(protocol.p, protocol.cfg.n, protocol.cfg.k, protocol.cfg.m)
    if isinstance(protocol, BootProtocol):
        params = protocol.params
        if protocol.pooled:
            need_e = params.k * sum(s - 1 for s in params.branching)
            return abort_probability_counts(protocol.p, sum(protocol.round_sizes), params.u * params.k, need_e)
        survive = math.prod(1 - abort_probability_exact(protocol.p, n, params.k, s)
                            for n, s in zip(protocol.round_sizes, params.branching))
        return 1 - survive
    cfg = protocol.cfg
    survive = 1.0
    if cfg.runs_ab:
        survive *= 1 - abort_probability_exact(cfg.p_ab, protocol.n_ab, cfg.k * cfg.spec.h_b, cfg.spec.m_b)
    if cfg.runs_ba:
        survive *= 1 - abort_probability_exact(cfg.p_ba, protocol.n_ba, cfg.k * cfg.spec.h_a, cfg.spec.m_a)
    return 1 - survive


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    aborted: bool
    alice_correct: bool
    bob_correct: bool
    resource_usage: int
    rule_abort: bool
    transcript_lines: tuple = ()


def run_trial(request: SimulationRequest, trial: int, keep_transcript: bool = False) -> TrialOutcome:
    protocol = build_protocol(request)
    streams = SessionStreams.from_seed(request.seed, trial)
    spec = protocol.function_spec
    inputs = sample_inputs(spec, request.k, streams.inputs, string_ot=request.protocol == "boot",
                           correlated=request.correlated)
    resources = draw_session_resources(protocol, streams, request.model)
    result = run_session(protocol, inputs, resources, streams)
    flags = check_correctness(result)
    return TrialOutcome(
        trial=trial,
        aborted=result.aborted,
        alice_correct=flags.alice,
        bob_correct=flags.bob,
        resource_usage=result.transcript.resource_usage,
        rule_abort=abort_rule(protocol, resources),
        transcript_lines=tuple(result.transcript.to_log_lines()) if keep_transcript else (),
    )


def _trial_worker(args) -> TrialOutcome:
    request, trial = args
    return run_trial(request, trial)


@dataclass
class SimulationSummary:
    protocol: str
    trials: int
    abort_rate: float
    abort_se: float
    error_rate: float
    error_se: float
    mean_samples: float
    theory_abort: float
    rule_violations: int
    gate_sigmas: float
    gate_passed: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "trials": self.trials,
            "abort_rate": self.abort_rate,
            "abort_se": self.abort_se,
            "error_rate": self.error_rate,
            "error_se": self.error_se,
            "mean_samples": self.mean_samples,
            "theory_abort": self.theory_abort,
            "rule_violations": self.rule_violations,
            "gate_sigmas": self.gate_sigmas,
            "gate_passed": self.gate_passed,
            "notes": list(self.notes),
        }


def _standard_error(rate: float, trials: int) -> float:
    return math.sqrt(max(rate * (1 - rate), 0.0) / trials)


def within_gate(empirical: float, theory: float, trials: int, sigmas: float = GATE_SIGMAS) -> bool:
    return abs(empirical - theory) <= sigmas * _standard_error(theory, trials) + 1e-12


def run_simulation(request: SimulationRequest, workers: int = WORKERS, sigmas: float = GATE_SIGMAS) -> SimulationSummary:
    """Run request.trials seeded sessions; trial i always uses streams (seed, i)."""
    protocol = build_protocol(request)
    notes = []
    for demand, (k, m) in zip(protocol.resource_layout(), _levels(protocol)):
        if k * m > demand.n:
            notes.append(f"k*m={k * m} exceeds n={demand.n}: every session aborts")
            logger.warning("Infeasible sizing for %s: k*m=%d > n=%d", protocol.name, k * m, demand.n)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunk = max(1, request.trials // (workers * 8))
            outcomes = list(executor.map(_trial_worker, ((request, t) for t in range(request.trials)),
                                         chunksize=chunk))
    else:
        outcomes = [run_trial(request, t) for t in range(request.trials)]

    frame = pd.DataFrame([asdict(o) for o in outcomes])
    trials = len(frame)
    abort_rate = float(frame["aborted"].mean())
    errors = ~(frame["alice_correct"] & frame["bob_correct"])
    error_rate = float(errors.mean())
    violations = int((frame["aborted"] != frame["rule_abort"]).sum())
    theory = theory_abort_probability(protocol)
    gate = within_gate(abort_rate, theory, trials, sigmas) and violations == 0
    if violations:
        logger.error("%d trials broke the abort rule", violations)
    if not gate:
        logger.warning("Abort rate %.5f deviates from theory %.5f beyond %.1f sigma", abort_rate, theory, sigmas)
    summary = SimulationSummary(
        protocol=protocol.name,
        trials=trials,
        abort_rate=abort_rate,
        abort_se=_standard_error(abort_rate, trials),
        error_rate=error_rate,
        error_se=_standard_error(error_rate, trials),
        mean_samples=float(frame["resource_usage"].mean()),
        theory_abort=theory,
        rule_violations=violations,
        gate_sigmas=sigmas,
        gate_passed=gate,
        notes=notes,
    )
    logger.info("Simulated %s: %d trials, abort %.5f (theory %.5f), error %.5f",
                summary.protocol, trials, abort_rate, theory, error_rate)
    return summary


def _levels(protocol: Protocol) -> list:
    """(transfers, choices) per declared resource, pooled BOOT counted as one level."""
    if isinstance(protocol, SwotProtocol):
        return [(protocol.cfg.k, protocol.cfg.m)]
    if isinstance(protocol, BootProtocol):
        params = protocol.params
        if protocol.pooled:
            return [(params.k, sum(params.branching))]
        return [(params.k, s) for s in params.branching]
    cfg = protocol.cfg
    levels = []
    if cfg.runs_ab:
        levels.append((cfg.k * cfg.spec.h_b, cfg.spec.m_b))
    if cfg.runs_ba:
        levels.append((cfg.k * cfg.spec.h_a, cfg.spec.m_a))
    return levels
