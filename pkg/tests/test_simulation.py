import numpy as np
import pytest
from scipy.stats import binom, norm

from bits import FunctionSpec
from engine import draw_session_resources
from erasure import SessionStreams
from errors import ParameterError
from services.demo_service import demo_trace
from services.simulation_service import (SimulationRequest, abort_rule, build_protocol, run_simulation, run_trial,
                                         sample_inputs, theory_abort_probability, within_gate)


def test_request_validation():
    with pytest.raises(ParameterError):
        SimulationRequest(protocol="yao")
    with pytest.raises(ParameterError):
        SimulationRequest(trials=0)
    with pytest.raises(ParameterError):
        SimulationRequest(model="wire")


def test_swot_reference_run_rarely_aborts():
    summary = run_simulation(SimulationRequest(p=0.5, m=2, n=1000, k=400, trials=500, seed=1))
    assert summary.abort_rate < 0.01
    assert summary.error_rate == summary.abort_rate
    assert summary.theory_abort < 1e-6
    assert summary.rule_violations == 0
    assert summary.gate_passed
    assert summary.mean_samples == 1000


def test_total_erasure_always_aborts():
    summary = run_simulation(SimulationRequest(p=1.0, m=2, n=10, k=1, trials=20))
    assert summary.abort_rate == 1.0
    assert summary.theory_abort == 1.0
    assert summary.gate_passed


def test_infeasible_sizing_is_noted_but_runs():
    summary = run_simulation(SimulationRequest(p=0.5, m=3, n=10, k=5, trials=10))
    assert summary.notes
    assert summary.abort_rate == 1.0
    assert summary.gate_passed


@pytest.mark.parametrize("request_", [
    SimulationRequest(protocol="swot", p=0.5, m=3, n=20, k=5, trials=300, seed=3),
    SimulationRequest(protocol="boot", p=0.5, m=6, k=4, branching=(2, 3), slack=0.0, trials=200, seed=4),
    SimulationRequest(protocol="boot", p=0.5, m=4, k=3, branching=(2, 2), pooled=True, trials=200, seed=5),
    SimulationRequest(protocol="gsfc", p=0.5, k=3, spec=FunctionSpec.logical_and(), trials=200, seed=6),
    SimulationRequest(protocol="swot", p=0.6, m=2, n=12, k=3, model="channel", trials=200, seed=7),
])
def test_abort_happens_exactly_when_counts_fall_short(request_):
    summary = run_simulation(request_)
    assert summary.rule_violations == 0
    assert summary.error_rate <= summary.abort_rate
    assert 0.0 <= summary.theory_abort <= 1.0


def test_trials_replay_by_index():
    request = SimulationRequest(p=0.4, m=3, n=30, k=4, trials=5, seed=11)
    a = run_trial(request, 3, keep_transcript=True)
    b = run_trial(request, 3, keep_transcript=True)
    assert a == b
    assert a.transcript_lines


def test_workers_give_the_same_summary():
    request = SimulationRequest(p=0.5, m=2, n=16, k=4, trials=40, seed=9)
    serial = run_simulation(request, workers=1).to_dict()
    parallel = run_simulation(request, workers=2).to_dict()
    assert serial == parallel


def test_abort_rule_matches_theory_for_pooled_boot():
    request = SimulationRequest(protocol="boot", p=0.5, m=4, k=2, branching=(2, 2), pooled=True, trials=1)
    protocol = build_protocol(request)
    streams = SessionStreams.from_seed(1)
    resources = draw_session_resources(protocol, streams)
    (resource,) = resources
    s, e = len(resource) - resource.erasure_count(), resource.erasure_count()
    assert abort_rule(protocol, resources) == (s < 4 or e < 4)
    assert 0.0 < theory_abort_probability(protocol) < 1.0


def test_correlated_inputs_stay_in_alphabet():
    spec = FunctionSpec.random(4, 3, 2, 2, np.random.default_rng(0))
    stream = SessionStreams.from_seed(2).inputs
    inputs = sample_inputs(spec, 50, stream, correlated=True)
    inputs.check_alphabets(4, 3)
    assert any((a - 1) % 3 + 1 == b for a, b in zip(inputs.a_samples, inputs.b_samples))


def test_string_ot_inputs_repeat_the_selection():
    stream = SessionStreams.from_seed(2).inputs
    inputs = sample_inputs(FunctionSpec.oblivious_transfer(3), 6, stream, string_ot=True)
    assert inputs.is_string_ot


def test_gate_width():
    assert within_gate(0.10, 0.10, 100)
    assert within_gate(0.13, 0.10, 100)
    assert not within_gate(0.30, 0.10, 100)
    assert within_gate(0.0, 0.0, 10)


def test_demo_trace_is_reproducible_and_annotated():
    request = SimulationRequest(protocol="boot", p=0.5, m=6, k=2, branching=(2, 3), trials=1, seed=7)
    lines = demo_trace(request)
    assert lines == demo_trace(request)
    assert "string 3 -> Z(1,1) Z(2,3)" in lines
    assert "transcript log:" in lines
    assert any(line.startswith("stage 1: alice -> bob encoded_strings") for line in lines)


def test_demo_trace_reports_abort():
    lines = demo_trace(SimulationRequest(p=0.0, m=2, n=6, k=1, trials=1))
    assert lines[-1].startswith("abort: notice from bob")


def test_selection_inputs_wider_than_a_machine_word():
    spec = FunctionSpec.oblivious_transfer(64)
    stream = SessionStreams.from_seed(3).inputs
    inputs = sample_inputs(spec, 5, stream)
    inputs.check_alphabets(spec.m_a, spec.m_b)
    assert max(a.bit_length() for a in inputs.a_samples) > 32
    assert sample_inputs(spec, 4, stream, string_ot=True).is_string_ot


def test_wide_boot_request_runs():
    request = SimulationRequest(protocol="boot", p=0.5, m=40, k=2, branching=(2, 2, 2, 2, 2, 2), trials=20, seed=13)
    for trial in range(request.trials):
        outcome = run_trial(request, trial)
        assert outcome.aborted == outcome.rule_abort
        assert outcome.aborted or outcome.bob_correct


def _three_sigma_tails(count: int, trials: int, theory: float) -> bool:
    """Both binomial tails of the observed count keep at least the 3 sigma normal mass."""
    floor = norm.sf(3.0)
    return binom.cdf(count, trials, theory) >= floor and binom.sf(count - 1, trials, theory) >= floor


@pytest.mark.slow
@pytest.mark.parametrize("p,n,k,m", [(0.5, 1000, 400, 2), (0.9, 2000, 150, 10), (0.25, 800, 150, 2)])
def test_abort_rate_matches_theory_on_the_grid(p, n, k, m):
    request = SimulationRequest(protocol="swot", p=p, m=m, n=n, k=k, trials=10_000, seed=2024)
    summary = run_simulation(request, sigmas=3.0)
    assert summary.rule_violations == 0
    assert summary.error_rate <= summary.abort_rate
    count = round(summary.abort_rate * summary.trials)
    assert _three_sigma_tails(count, summary.trials, summary.theory_abort)


@pytest.mark.slow
@pytest.mark.parametrize("request_", [
    SimulationRequest(protocol="swot", p=0.5, m=3, n=40, k=5, trials=1000, seed=31),
    SimulationRequest(protocol="boot", p=0.5, m=6, k=4, branching=(2, 3), slack=0.5, trials=1000, seed=32),
    SimulationRequest(protocol="boot", p=0.5, m=8, k=3, branching=(2, 2, 2), pooled=True, slack=0.5, trials=1000,
                      seed=33),
    SimulationRequest(protocol="gsfc", p=0.5, k=3, spec=FunctionSpec.random(3, 4, 3, 4, np.random.default_rng(34)),
                      correlated=True, slack=0.5, trials=1000, seed=34),
    SimulationRequest(protocol="gsfc", p=0.4, p_ba=0.6, k=2, spec=FunctionSpec.random(4, 2, 2, 3,
                      np.random.default_rng(35)), correlated=True, slack=0.5, trials=1000, seed=35),
])
def test_thousand_sessions_are_correct_unless_aborted(request_):
    outcomes = [run_trial(request_, trial) for trial in range(request_.trials)]
    assert all(o.aborted == o.rule_abort for o in outcomes)
    assert all(o.alice_correct and o.bob_correct for o in outcomes if not o.aborted)
    assert sum(not o.aborted for o in outcomes) > request_.trials // 2
