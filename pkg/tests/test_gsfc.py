from itertools import product

import numpy as np
import pytest

from bits import BitMatrix, FunctionSpec, SourceSamples
from engine import CIPHER, FUNCTION_VALUES, SELECTION, Party, check_correctness, draw_session_resources
from erasure import ERASURE, ErasureSequence, SessionStreams
from errors import DomainError, ParameterError
from services.gsfc_service import (ALICE_TO_BOB, BOB_TO_ALICE, GsfcConfig, GsfcProtocol, gsfc_build_strings,
                                   gsfc_expand_selection, gsfc_full)
from services.swot_service import SwotConfig, swot_full, swot_inputs


def test_and_strings_are_columns_of_g():
    table = gsfc_build_strings(FunctionSpec.logical_and(), (2, 2), ALICE_TO_BOB)
    assert [s.to_tuple() for s in table.strings] == [(0, 0), (1, 1)]
    assert table.as_matrix().shape == (2, 2)


def test_two_bit_range_encoding():
    g = np.array([[0, 1, 2, 3], [3, 2, 1, 0]])
    spec = FunctionSpec(2, 4, np.zeros((2, 4), dtype=int), g, 1, 4)
    table = gsfc_build_strings(spec, (2,), ALICE_TO_BOB)
    assert table.h == 2
    assert [s.to_tuple() for s in table.strings] == [(1, 1), (1, 0), (0, 1), (0, 0)]


def test_constant_g_gives_equal_strings():
    spec = FunctionSpec(2, 3, np.zeros((2, 3), dtype=int), np.ones((2, 3), dtype=int), 1, 2)
    table = gsfc_build_strings(spec, (1, 2, 1), ALICE_TO_BOB)
    assert len(set(table.strings)) == 1


def test_reverse_strings_use_f_over_alice_symbols():
    f = np.array([[0, 1], [1, 1], [0, 0]])
    spec = FunctionSpec(3, 2, f, np.zeros((3, 2), dtype=int), 2, 1)
    table = gsfc_build_strings(spec, (2,), BOB_TO_ALICE)
    assert [s.to_tuple() for s in table.strings] == [(1,), (1,), (0,)]


def test_build_strings_rejects_alphabet_violation():
    with pytest.raises(DomainError):
        gsfc_build_strings(FunctionSpec.xor(), (3,), ALICE_TO_BOB)


def test_expand_selection():
    assert gsfc_expand_selection((2,), 3) == (2, 2, 2)
    assert gsfc_expand_selection((1, 3), 2) == (1, 1, 3, 3)
    assert gsfc_expand_selection((1, 2), 1) == (1, 2)
    with pytest.raises(ParameterError):
        gsfc_expand_selection((1,), 0)


def test_single_ot_needs_same_functions():
    spec = FunctionSpec(2, 2, np.array([[0, 1], [1, 0]]), np.array([[0, 0], [0, 1]]), 2, 2)
    with pytest.raises(ParameterError):
        GsfcConfig(spec, 1, 0.5, 0.5, single_ot=True)


def test_xor_exhaustive_inputs_both_correct():
    protocol = GsfcProtocol(GsfcConfig(FunctionSpec.xor(), 3, 0.5, 0.5, n_ab=30, n_ba=30))
    completed = 0
    for trial, (a, b) in enumerate(product(product((1, 2), repeat=3), repeat=2)):
        streams = SessionStreams.from_seed(2024, trial)
        result = gsfc_full(SourceSamples(a, b), protocol.cfg, draw_session_resources(protocol, streams), streams)
        if result.aborted:
            continue
        completed += 1
        flags = check_correctness(result)
        assert flags.alice and flags.bob
        senders = [m.sender for m in result.transcript.messages]
        assert senders == [Party.BOB, Party.ALICE, Party.ALICE, Party.BOB]
    assert completed > 0


def test_single_ot_mode_shares_bobs_values():
    protocol = GsfcProtocol(GsfcConfig(FunctionSpec.logical_and(), 2, 0.5, 0.5, single_ot=True, n_ab=20))
    assert len(protocol.resource_layout()) == 1
    for trial in range(5):
        streams = SessionStreams.from_seed(3, trial)
        result = gsfc_full(SourceSamples((2, 1), (2, 2)), protocol.cfg,
                           draw_session_resources(protocol, streams), streams)
        if result.aborted:
            continue
        assert result.transcript.tags() == (SELECTION, CIPHER, FUNCTION_VALUES)
        assert result.outputs.f_est == result.outputs.f_true == (1, 0)
        assert check_correctness(result).bob


def test_pure_ot_instance_is_exactly_one_swot():
    spec = FunctionSpec.oblivious_transfer(3)
    protocol = GsfcProtocol(GsfcConfig(spec, 2, 0.5, 0.5, n_ab=12))
    assert [d.holder for d in protocol.resource_layout()] == [Party.ALICE]
    x = [1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0]
    resource = ErasureSequence(x, [v if i % 2 else ERASURE for i, v in enumerate(x)])
    inputs = swot_inputs(BitMatrix.from_rows([[1, 0, 1], [0, 1, 1]]), (3, 2))
    gsfc = gsfc_full(inputs, protocol.cfg, [resource], SessionStreams.from_seed(8))
    swot = swot_full(inputs, resource, SwotConfig(2, 3, 12), SessionStreams.from_seed(8))
    assert not gsfc.aborted
    assert gsfc.transcript.tags() == (SELECTION, CIPHER)
    assert gsfc.transcript.to_log_lines() == swot.transcript.to_log_lines()
    assert gsfc.outputs.g_est == swot.outputs.g_est == (1, 1)
    assert gsfc.outputs.f_est == (0, 0)


def test_correlated_sources_are_fine():
    spec = FunctionSpec.random(3, 3, 4, 2, np.random.default_rng(6))
    protocol = GsfcProtocol(GsfcConfig(spec, 3, 0.6, 0.6, n_ab=60, n_ba=80))
    for trial in range(10):
        streams = SessionStreams.from_seed(5, trial)
        a = (1, 2, 3)
        result = gsfc_full(SourceSamples(a, a), protocol.cfg, draw_session_resources(protocol, streams), streams)
        if not result.aborted:
            flags = check_correctness(result)
            assert flags.alice and flags.bob


def test_direction_sizes_follow_swot_rate():
    # k h_B / ((1 - slack) R(p, m_B)) with R(0.5, 2) = 1/2
    protocol = GsfcProtocol(GsfcConfig(FunctionSpec.xor(), 9, 0.5, 0.5, slack=0.1))
    assert (protocol.n_ab, protocol.n_ba) == (20, 20)


def test_single_symbol_selector_sends_values_in_the_clear():
    spec = FunctionSpec(3, 1, np.zeros((3, 1), dtype=int), np.array([[0], [1], [1]]), 1, 2)
    cfg = GsfcConfig(spec, 3, 0.5, 0.5)
    protocol = GsfcProtocol(cfg)
    assert cfg.direct_ab and not cfg.runs_ab and not cfg.runs_ba
    assert protocol.resource_layout() == []
    result = gsfc_full(SourceSamples((1, 2, 3), (1, 1, 1)), cfg, [], SessionStreams.from_seed(1))
    assert not result.aborted
    assert result.transcript.tags() == (FUNCTION_VALUES,)
    assert result.transcript.resource_usage == 0
    assert result.outputs.g_est == (0, 1, 1)
    flags = check_correctness(result)
    assert flags.alice and flags.bob


def test_clear_direction_followed_by_an_ot_for_f():
    f = np.array([[1], [0], [1]])
    g = np.array([[2], [0], [3]])
    spec = FunctionSpec(3, 1, f, g, 2, 4)
    protocol = GsfcProtocol(GsfcConfig(spec, 2, 0.5, 0.5, n_ba=40))
    assert [d.holder for d in protocol.resource_layout()] == [Party.BOB]
    completed = 0
    for trial in range(10):
        streams = SessionStreams.from_seed(15, trial)
        result = gsfc_full(SourceSamples((3, 2), (1, 1)), protocol.cfg, draw_session_resources(protocol, streams),
                           streams)
        assert result.transcript.tags()[0] == FUNCTION_VALUES
        if result.aborted:
            continue
        completed += 1
        assert result.transcript.tags() == (FUNCTION_VALUES, SELECTION, CIPHER)
        assert result.outputs.g_est == (3, 0)
        assert result.outputs.f_est == (1, 0)
    assert completed > 0


def test_single_symbol_alice_answers_f_in_the_clear():
    f = np.array([[0, 1, 1]])
    spec = FunctionSpec(1, 3, f, np.zeros((1, 3), dtype=int), 2, 1)
    cfg = GsfcConfig(spec, 2, 0.5, 0.5)
    assert cfg.direct_ba and not cfg.runs_ba and not cfg.runs_ab
    result = gsfc_full(SourceSamples((1, 1), (3, 1)), cfg, [], SessionStreams.from_seed(2))
    assert result.transcript.tags() == (FUNCTION_VALUES,)
    assert result.outputs.f_est == (1, 0)
    assert check_correctness(result).alice
