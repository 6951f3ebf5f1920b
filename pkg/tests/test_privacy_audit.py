import pytest

from bits import FunctionSpec
from errors import EnumerationCapError, ParameterError
from services.boot_service import BootParams
from services.privacy_audit_service import (ALICE_PRIVACY, BOB_PRIVACY, DISJOINT_PRIVACY, AuditReport,
                                            audit_disjoint_gf2, audit_exact_mi, audit_scenario, boot_scenario,
                                            conditional_mutual_information, enumerate_sessions, gsfc_scenario,
                                            leaky_swot_scenario, sweep_disjoint_gf2, swot_scenario)

TOLERANCE = 1e-12


def test_cmi_of_copied_bit_is_one():
    h, kl = conditional_mutual_information([0.5, 0.5], [0, 1], [0, 0], [0, 1])
    assert h == pytest.approx(1.0)
    assert kl == pytest.approx(1.0)


def test_cmi_vanishes_given_the_condition():
    # V copies S, but C already reveals S
    h, kl = conditional_mutual_information([0.5, 0.5], ["a", "b"], ["a", "b"], [1, 2])
    assert h == pytest.approx(0.0, abs=TOLERANCE)
    assert kl == pytest.approx(0.0, abs=TOLERANCE)


def test_enumeration_mass_is_one():
    total = sum(prob for prob, _ in enumerate_sessions(swot_scenario(n=3)))
    assert total == pytest.approx(1.0)


def test_swot_is_perfectly_private_both_ways():
    results = audit_scenario(swot_scenario(n=4, k=1, m=2))
    assert [r.form for r in results] == [ALICE_PRIVACY, BOB_PRIVACY]
    for r in results:
        assert r.passed
        assert -TOLERANCE <= r.mi_bits <= TOLERANCE
        assert r.mi_bits == pytest.approx(r.mi_bits_kl, abs=1e-10)
        assert r.leaves > 1000


def test_swot_privacy_holds_off_half():
    r = audit_exact_mi(swot_scenario(n=3, k=1, m=2, p=0.3), ALICE_PRIVACY)
    assert r.passed


def test_leaky_variant_is_caught():
    r = audit_exact_mi(leaky_swot_scenario(n=3, k=1, m=3), ALICE_PRIVACY)
    assert not r.passed
    assert r.mi_bits > 1e-3
    assert r.mi_bits == pytest.approx(r.mi_bits_kl, abs=1e-10)


def test_leaky_variant_is_caught_with_two_choices():
    r = audit_exact_mi(leaky_swot_scenario(n=4, k=1, m=2), ALICE_PRIVACY)
    assert not r.passed
    assert r.mi_bits > 1e-3


def test_gsfc_and_is_private_in_both_directions():
    results = audit_scenario(gsfc_scenario(FunctionSpec.logical_and(), k=1, n=2))
    assert all(r.passed for r in results)
    assert {r.form for r in results} == {ALICE_PRIVACY, BOB_PRIVACY}


def test_single_level_boot_disjoint_form():
    results = audit_scenario(boot_scenario((3,), 3))
    by_form = {r.form: r for r in results}
    assert by_form[BOB_PRIVACY].passed
    assert by_form[DISJOINT_PRIVACY].passed
    assert len(by_form[DISJOINT_PRIVACY].per_string) == 3


@pytest.mark.slow
def test_two_level_boot_disjoint_form():
    results = audit_scenario(boot_scenario((2, 2), 3))
    assert all(r.passed for r in results)


def test_disjoint_form_needs_string_scenario():
    with pytest.raises(ParameterError):
        audit_scenario(swot_scenario(n=3), forms=(DISJOINT_PRIVACY,))
    with pytest.raises(ParameterError):
        audit_scenario(swot_scenario(n=3), forms=("nobody",))


def test_cap_is_enforced_with_atom_count():
    scenario = swot_scenario(n=10)
    with pytest.raises(EnumerationCapError) as err:
        audit_scenario(scenario, cap=1000)
    assert err.value.atoms == scenario.atom_bound()
    assert "smaller n or k" in str(err.value)


def test_gf2_audit_reports_joint_leak_but_passes_disjoint():
    r = audit_disjoint_gf2(BootParams((2, 3), 6), 3)
    assert r.passed
    assert r.recoverable_units == (3,)
    assert (1, 4, 6) in r.leak_witnesses


def test_gf2_audit_single_level_has_no_witnesses():
    r = audit_disjoint_gf2(BootParams((5,), 5), 4)
    assert r.passed and r.leak_witnesses == ()


def test_small_sweep_passes():
    results = sweep_disjoint_gf2(max_m=5, max_u=2)
    assert results
    assert all(r.passed for r in results)


@pytest.mark.slow
def test_full_sweep_passes():
    assert AuditReport(sweep_disjoint_gf2(max_m=8, max_u=3)).passed


def test_report_frame():
    report = AuditReport([audit_disjoint_gf2(BootParams((2, 3), 6), b) for b in range(1, 7)])
    frame = report.to_frame()
    assert len(frame) == 6
    assert set(frame["form"]) == {"gf2"}
    assert report.passed
