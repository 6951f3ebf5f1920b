import numpy as np
import pytest

from bits import (BitMatrix, BitString, FunctionSpec, SelectionSpec, SourceSamples, decode_range_values,
                  encode_range_value, eval_functions, xor_matrices)
from errors import DimensionError, DomainError, ParameterError, UsageError


def test_bitstring_xor_and_length_mismatch():
    a = BitString([1, 0, 1])
    b = BitString([1, 1, 0])
    assert (a ^ b).to_tuple() == (0, 1, 1)
    with pytest.raises(DimensionError):
        a ^ BitString([1, 0])


def test_bitstring_rejects_non_bits():
    with pytest.raises(DomainError):
        BitString([0, 2])


def test_bitstring_is_read_only():
    s = BitString([0, 1])
    with pytest.raises(ValueError):
        s.bits[0] = 1


def test_matrix_columns_are_one_based():
    m = BitMatrix.from_rows([[1, 0, 1], [0, 1, 1]])
    assert m.shape == (2, 3)
    assert m.column(1).to_tuple() == (1, 0)
    assert m.column(3).to_tuple() == (1, 1)
    assert m.entry(2, 2) == 1
    with pytest.raises(IndexError):
        m.column(4)
    with pytest.raises(IndexError):
        m.column(0)


def test_matrix_from_columns_matches_rows():
    cols = [BitString([1, 0]), BitString([0, 0]), BitString([1, 1])]
    assert BitMatrix.from_columns(cols) == BitMatrix.from_rows([[1, 0, 1], [0, 0, 1]])
    with pytest.raises(DimensionError):
        BitMatrix.from_columns([BitString([1]), BitString([1, 0])])


def test_matrix_xor_shape_mismatch():
    with pytest.raises(DimensionError):
        xor_matrices(BitMatrix.zeros(2, 2), BitMatrix.zeros(2, 3))


def test_samples_are_msb_first():
    m = BitMatrix.from_samples([1, 2, 4], 2)
    assert m.to_rows() == ((0, 0), (0, 1), (1, 1))
    assert m.to_samples() == (1, 2, 4)
    with pytest.raises(DomainError):
        BitMatrix.from_samples([5], 2)


def test_range_value_encoding():
    assert encode_range_value(5, 3) == (1, 0, 1)
    assert decode_range_values((1, 0, 1, 0, 1, 1), 3) == (5, 3)
    assert decode_range_values((), 0) == ()
    with pytest.raises(DomainError):
        encode_range_value(4, 2)
    with pytest.raises(DimensionError):
        decode_range_values((1, 0, 1), 2)


def test_oblivious_transfer_table():
    spec = FunctionSpec.oblivious_transfer(2)
    assert (spec.m_a, spec.m_b) == (4, 2)
    assert spec.h_a == 0 and spec.h_b == 1
    # a = 3 is the bit pair (1, 0)
    assert spec.g(3, 1) == 1 and spec.g(3, 2) == 0
    assert spec.f(3, 1) == 0


def test_and_function_truth():
    spec = FunctionSpec.logical_and()
    out = eval_functions(spec, SourceSamples((1, 2, 2), (2, 1, 2)))
    assert out.f_true == (0, 0, 1)
    assert out.g_true == (0, 0, 1)
    assert spec.same_functions()


def test_function_table_rejects_out_of_range_entries():
    with pytest.raises(DomainError):
        FunctionSpec(2, 2, np.array([[0, 2], [0, 0]]), np.zeros((2, 2)), 2, 2)
    with pytest.raises(DimensionError):
        FunctionSpec(2, 2, np.zeros((2, 3)), np.zeros((2, 2)), 1, 1)


def test_table_file_round_trip(tmp_path):
    spec = FunctionSpec.random(3, 2, 3, 2, np.random.default_rng(1))
    path = tmp_path / "f.txt"
    path.write_text(spec.to_table_text(), encoding="utf-8")
    loaded = FunctionSpec.from_table_file(path)
    assert np.array_equal(loaded.f_table, spec.f_table)
    assert np.array_equal(loaded.g_table, spec.g_table)
    assert loaded.name == "f"


def test_table_file_missing_pair(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2 2 2\n1 1 0 0\n1 2 0 1\n2 1 1 0\n", encoding="utf-8")
    with pytest.raises(UsageError):
        FunctionSpec.from_table_file(path)


def test_source_samples_length_mismatch():
    with pytest.raises(DimensionError):
        SourceSamples((1, 2), (1,))


def test_source_samples_alphabet_check():
    with pytest.raises(DomainError):
        SourceSamples((1, 5), (1, 1)).check_alphabets(4, 2)
    assert SourceSamples((3, 4), (2, 2)).is_string_ot


def test_samples_wider_than_a_machine_word():
    rows = np.random.default_rng(4).integers(0, 2, size=(3, 70))
    matrix = BitMatrix.from_rows(rows)
    samples = matrix.to_samples()
    assert max(samples) > 2 ** 63
    assert BitMatrix.from_samples(samples, 70) == matrix
    assert BitMatrix.from_samples([2 ** 70], 70).to_rows() == ((1,) * 70,)
    with pytest.raises(DomainError):
        BitMatrix.from_samples([2 ** 70 + 1], 70)


def test_selection_spec_reads_bits_without_tables():
    spec = FunctionSpec.oblivious_transfer(70)
    assert isinstance(spec, SelectionSpec)
    assert (spec.m_a, spec.m_b, spec.h_a, spec.h_b) == (2 ** 70, 70, 0, 1)
    a = (1 << 69) + 5  # bits 1, 68 and 70 set
    assert [b for b in range(1, 71) if spec.g(a + 1, b)] == [1, 68, 70]
    out = eval_functions(spec, SourceSamples((a + 1, 1), (68, 70)))
    assert out.g_true == (1, 0)
    assert out.f_true == (0, 0)
    assert not spec.same_functions()
    with pytest.raises(ParameterError):
        SelectionSpec(1)
