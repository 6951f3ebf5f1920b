"""Privacy audits: exact conditional mutual information by enumeration, and GF(2) span checks.

The exact audit runs the real protocol code once per leaf of a ChoiceTree:
every input symbol, source bit, erasure and draw becomes a weighted branch,
so the collected (secret, conditioning, view) atoms carry their exact
probabilities. Inputs are uniform with full support; a conditional mutual
information of zero then means the counterpart's view has the same law for
every secret consistent with the conditioning values.
"""
import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy.special import entr, rel_entr

from bits import BitMatrix, FunctionSpec, SourceSamples
from config import AUDIT_ATOM_CAP, MI_TOLERANCE
from engine import ABORT, CIPHER, RECEIVE, SELECTION, Protocol, Send, draw_session_resources, run_session
from erasure import ChoiceTree, IndexPartition, RandomSource, SessionStreams
from errors import EnumerationCapError, ParameterError, StructuralError
from services.boot_service import BootParams, BootProtocol, boot_assign, boot_knowledge_span
from services.gsfc_service import GsfcConfig, GsfcProtocol
from services.swot_service import SelectionMatrix, SwotConfig, SwotProtocol, bob_decode
from utils import format_params

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)

ALICE_PRIVACY = "alice"    # secret A^k against Bob's view, given (B^k, G^k)
BOB_PRIVACY = "bob"        # secret B^k against Alice's view, given (A^k, F^k)
DISJOINT_PRIVACY = "disjoint"  # each string against Bob's view, given (B, his string)
FORMS = (ALICE_PRIVACY, BOB_PRIVACY, DISJOINT_PRIVACY)


@dataclass(frozen=True)
class PrivacyAuditResult:
    name: str
    form: str
    mi_bits: Optional[float] = None
    mi_bits_kl: Optional[float] = None
    leaves: int = 0
    per_string: tuple = ()
    recoverable_units: tuple = ()
    leak_witnesses: tuple = ()
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "form": self.form,
            "mi_bits": self.mi_bits,
            "mi_bits_kl": self.mi_bits_kl,
            "leaves": self.leaves,
            "per_string": list(self.per_string),
            "recoverable_units": list(self.recoverable_units),
            "leak_witnesses": [list(w) for w in self.leak_witnesses],
            "passed": self.passed,
        }


def _uniform_symbol(stream: RandomSource, size: int) -> int:
    return stream.draw_without_replacement(range(1, size + 1), 1)[0]


@dataclass
class AuditScenario:
    """A protocol instance plus a uniform input law small enough to enumerate."""

    name: str
    protocol: Protocol
    input_sampler: Callable[[RandomSource], SourceSamples]
    input_count: int
    extra_bits: int = 0
    model: str = "source"
    string_count: int = 0  # strings for the disjoint form (string OT only)
    forms: tuple = (ALICE_PRIVACY, BOB_PRIVACY)

    def atom_bound(self) -> int:
        """Upper bound on enumeration leaves: inputs, resource bits and erasures, draws, extra bits."""
        bound = self.input_count * 2 ** self.extra_bits
        for demand in self.protocol.resource_layout():
            bound *= 4 ** demand.n * math.factorial(demand.n)
        return bound


def uniform_inputs(spec: FunctionSpec, k: int, string_ot: bool = False) -> Callable:
    def sample(stream: RandomSource) -> SourceSamples:
        a = tuple(_uniform_symbol(stream, spec.m_a) for _ in range(k))
        if string_ot:
            b = (_uniform_symbol(stream, spec.m_b),) * k
        else:
            b = tuple(_uniform_symbol(stream, spec.m_b) for _ in range(k))
        return SourceSamples(a, b)
    return sample


def enumerate_sessions(scenario: AuditScenario, cap: int = AUDIT_ATOM_CAP):
    """Yield (probability, SessionResult) for every leaf of the scenario's choice tree."""
    atoms = scenario.atom_bound()
    if atoms > cap:
        raise EnumerationCapError(atoms, cap)
    tree = ChoiceTree()
    while True:
        tree.start_run()
        streams = SessionStreams.enumerating(tree)
        inputs = scenario.input_sampler(streams.inputs)
        resources = draw_session_resources(scenario.protocol, streams, scenario.model)
        result = run_session(scenario.protocol, inputs, resources, streams)
        yield tree.probability, result
        if not tree.advance():
            break


def conditional_mutual_information(probs, secrets, conditions, views) -> tuple:
    """I(S; V | C) in bits, as (entropy-difference form, divergence form)."""
    codes = {}
    columns = {}
    for label, values in (("s", secrets), ("c", conditions), ("v", views)):
        table = codes.setdefault(label, {})
        columns[label] = [table.setdefault(value, len(table)) for value in values]
    frame = pd.DataFrame({**columns, "p": np.asarray(probs, dtype=float)})

    def entropy(keys) -> float:
        mass = frame.groupby(keys, sort=True)["p"].sum().to_numpy()
        return float(entr(mass).sum() / _LN2)

    h_form = entropy(["s", "c"]) + entropy(["v", "c"]) - entropy(["s", "v", "c"]) - entropy(["c"])

    joint = frame.groupby(["s", "v", "c"], sort=True)["p"].sum().rename("p_svc").reset_index()
    joint = joint.merge(frame.groupby(["s", "c"])["p"].sum().rename("p_sc").reset_index(), on=["s", "c"])
    joint = joint.merge(frame.groupby(["v", "c"])["p"].sum().rename("p_vc").reset_index(), on=["v", "c"])
    joint = joint.merge(frame.groupby(["c"])["p"].sum().rename("p_c").reset_index(), on=["c"])
    reference = joint["p_sc"].to_numpy() * joint["p_vc"].to_numpy() / joint["p_c"].to_numpy()
    kl_form = float(rel_entr(joint["p_svc"].to_numpy(), reference).sum() / _LN2)
    return h_form, kl_form


def _string_columns(inputs: SourceSamples, m: int) -> tuple:
    return tuple(c.to_tuple() for c in BitMatrix.from_samples(inputs.a_samples, m).columns())


def audit_scenario(scenario: AuditScenario, forms=None, cap: int = AUDIT_ATOM_CAP,
                   tolerance: float = MI_TOLERANCE) -> list:
    """Enumerate once and audit every requested form."""
    forms = tuple(forms or scenario.forms)
    unknown = set(forms) - set(FORMS)
    if unknown:
        raise ParameterError(f"unknown privacy forms {sorted(unknown)}")
    if DISJOINT_PRIVACY in forms and not scenario.string_count:
        raise ParameterError("the disjoint form needs a string OT scenario")

    probs = []
    columns = {form: ([], [], []) for form in (ALICE_PRIVACY, BOB_PRIVACY)}
    strings = [([], [], []) for _ in range(scenario.string_count)] if DISJOINT_PRIVACY in forms else []
    leaves = 0
    for prob, result in enumerate_sessions(scenario, cap):
        leaves += 1
        probs.append(prob)
        alice, bob, out = result.alice_view, result.bob_view, result.outputs
        bob_obs = bob.observation_key()
        if ALICE_PRIVACY in forms:
            s, c, v = columns[ALICE_PRIVACY]
            s.append(alice.private_inputs)
            c.append((bob.private_inputs, out.g_true))
            v.append(bob_obs)
        if BOB_PRIVACY in forms:
            s, c, v = columns[BOB_PRIVACY]
            s.append(bob.private_inputs)
            c.append((alice.private_inputs, out.f_true))
            v.append(alice.observation_key())
        if strings:
            cols = _string_columns(SourceSamples(alice.private_inputs, bob.private_inputs), scenario.string_count)
            b = bob.private_inputs[0]
            for i, (s, c, v) in enumerate(strings):
                s.append(cols[i])
                c.append((b, cols[b - 1]))
                v.append(bob_obs)
    logger.info("Enumerated %s: %d leaves", scenario.name, leaves)

    results = []
    for form in forms:
        if form == DISJOINT_PRIVACY:
            per_string = [conditional_mutual_information(probs, *cols) for cols in strings]
            mi = max(h for h, _ in per_string)
            mi_kl = max(kl for _, kl in per_string)
            per = tuple(h for h, _ in per_string)
        else:
            mi, mi_kl = conditional_mutual_information(probs, *columns[form])
            per = ()
        results.append(PrivacyAuditResult(
            name=scenario.name, form=form, mi_bits=mi, mi_bits_kl=mi_kl, leaves=leaves, per_string=per,
            passed=mi <= tolerance,
        ))
        logger.info("%s [%s]: I = %.3e bits (divergence form %.3e)", scenario.name, form, mi, mi_kl)
    return results


def audit_exact_mi(scenario: AuditScenario, form: str = ALICE_PRIVACY, cap: int = AUDIT_ATOM_CAP,
                   tolerance: float = MI_TOLERANCE) -> PrivacyAuditResult:
    return audit_scenario(scenario, (form,), cap, tolerance)[0]


def audit_disjoint_gf2(params: BootParams, b: int) -> PrivacyAuditResult:
    """Which strings, and which combinations of unselected strings, Bob can compute."""
    span = boot_knowledge_span(boot_assign(params), b)
    units = span.recoverable_units()
    witnesses = span.leak_witnesses()
    return PrivacyAuditResult(
        name=f"boot m={params.m} s={format_params(params.branching)} b={b}",
        form="gf2",
        recoverable_units=units,
        leak_witnesses=witnesses,
        passed=units == (b,),
    )


def sweep_disjoint_gf2(max_m: int = 8, max_u: int = 3) -> list:
    """Every m in 2..max_m, every branching of length <= max_u with product >= m, every b."""
    results = []
    for m in range(2, max_m + 1):
        for u in range(1, max_u + 1):
            for branching in product(range(2, m + 1), repeat=u):
                if math.prod(branching) < m:
                    continue
                params = BootParams(branching, m)
                for b in range(1, m + 1):
                    results.append(audit_disjoint_gf2(params, b))
    failures = [r for r in results if not r.passed]
    logger.info("Disjoint sweep m<=%d u<=%d: %d cases, %d failures", max_m, max_u, len(results), len(failures))
    return results


class LeakySwotProtocol(SwotProtocol):
    """SWOT with a planted flaw: the first concealed position names a non-erased index."""

    name = "leaky-swot"

    def bob_program(self, ctx):
        cfg = self.cfg
        b_samples = ctx.inputs
        y = ctx.resources[0]
        partition = IndexPartition.from_received(y)
        if cfg.k + 1 > len(partition.non_erased) or cfg.concealed - 1 > len(partition.erased):
            yield Send(ABORT)
            return None
        selected = ctx.rng.draw_without_replacement(partition.non_erased, cfg.k + 1)
        concealed = ctx.rng.draw_without_replacement(partition.erased, cfg.concealed - 1)
        concealed = iter(selected[-1:] + concealed)
        selected = iter(selected[:-1])
        u = np.zeros((cfg.k, cfg.m), dtype=np.int64)
        for i, b in enumerate(b_samples):
            u[i, b - 1] = next(selected)
        for i, b in enumerate(b_samples):
            for j in range(cfg.m):
                if j != b - 1:
                    u[i, j] = next(concealed)
        selection = SelectionMatrix(u)
        yield Send(SELECTION, selection)
        msg = yield RECEIVE
        if msg.tag != CIPHER:
            raise StructuralError(f"expected a cipher matrix, got {msg.tag}")
        return bob_decode(msg.payload, selection, y, b_samples)


def swot_scenario(n: int = 4, k: int = 1, m: int = 2, p: float = 0.5) -> AuditScenario:
    protocol = SwotProtocol(SwotConfig(k, m, n), p)
    spec = protocol.function_spec
    return AuditScenario(
        name=f"swot n={n} k={k} m={m}",
        protocol=protocol,
        input_sampler=uniform_inputs(spec, k),
        input_count=(spec.m_a * spec.m_b) ** k,
    )


def leaky_swot_scenario(n: int = 3, k: int = 1, m: int = 3, p: float = 0.5) -> AuditScenario:
    protocol = LeakySwotProtocol(SwotConfig(k, m, n), p)
    spec = protocol.function_spec
    return AuditScenario(
        name=f"leaky-swot n={n} k={k} m={m}",
        protocol=protocol,
        input_sampler=uniform_inputs(spec, k),
        input_count=(spec.m_a * spec.m_b) ** k,
        forms=(ALICE_PRIVACY,),
    )


def boot_scenario(branching, m: int, k: int = 1, p: float = 0.5, pooled: bool = False) -> AuditScenario:
    params = BootParams(tuple(branching), m, k)
    protocol = BootProtocol(params, p, pooled=pooled, round_sizes=tuple(k * s for s in params.branching))
    spec = protocol.function_spec
    return AuditScenario(
        name=f"boot m={m} s={format_params(params.branching)} k={k}",
        protocol=protocol,
        input_sampler=uniform_inputs(spec, k, string_ot=True),
        input_count=spec.m_a ** k * spec.m_b,
        extra_bits=k * sum(params.branching) if params.u > 1 else 0,
        string_count=m,
        forms=(BOB_PRIVACY, DISJOINT_PRIVACY),
    )


def gsfc_scenario(spec: Optional[FunctionSpec] = None, k: int = 1, n: int = 2, p: float = 0.5,
                  single_ot: bool = False) -> AuditScenario:
    spec = spec or FunctionSpec.logical_and()
    cfg = GsfcConfig(spec, k, p, p, single_ot=single_ot, n_ab=n, n_ba=n)
    return AuditScenario(
        name=f"gsfc {spec.name} k={k} n={n}",
        protocol=GsfcProtocol(cfg),
        input_sampler=uniform_inputs(spec, k),
        input_count=(spec.m_a * spec.m_b) ** k,
    )


@dataclass
class AuditReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.results])
