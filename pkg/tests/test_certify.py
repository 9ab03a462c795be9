import json
from dataclasses import replace

import numpy as np
import pytest

from qdavies import bath, certify
from qdavies import hamiltonians as hams
from qdavies import generators as gens
from qdavies.generators import CouplingPattern


def test_equivalence_uniform_passes(fermi_eta, gen):
    c = certify.check_equivalence(hams.build_gue(16, seed=gen), fermi_eta)
    assert c.passed and c.residual <= c.tolerance


def test_equivalence_random_pattern_has_no_verdict(fermi, gen):
    ham = hams.build_gue(6, seed=gen)
    c = certify.check_equivalence(ham, fermi, CouplingPattern.random(6, 1))
    assert c.passed is None and c.residual > 1e-6


def test_equivalence_sublattice_reports_aliasing(fermi):
    c = certify.check_equivalence(hams.build_chain(12), fermi, CouplingPattern.sublattice(12, 2))
    assert c.passed is False and c.residual > 1e-3


def test_kms_check(fermi):
    assert certify.check_kms(fermi, np.linspace(-5, 5, 21)).passed


def test_detailed_balance_passes(fermi_eta, gen):
    g = gens.build_davies_linear(hams.build_gue(6, seed=gen), fermi_eta, CouplingPattern.random(6, 2))
    checks = certify.check_detailed_balance(g)
    assert [c.name for c in checks] == ["detailed_balance(i)", "detailed_balance(ii)",
                                        "detailed_balance(iii)"]
    assert all(c.passed for c in checks)


def test_broken_kms_detected(fermi, gen):
    g = gens.build_davies_linear(hams.build_gue(6, seed=gen), fermi)
    bad = replace(g, channel2=g.channel2 * 1.01)
    checks = {c.name: c for c in certify.check_detailed_balance(bad)}
    assert checks["detailed_balance(iii)"].passed is False
    assert checks["detailed_balance(i)"].passed


def test_detailed_balance_rejects_other_generators(fermi, gen):
    ham = hams.build_gue(3, seed=gen)
    with pytest.raises(gens.GeneratorError):
        certify.check_detailed_balance(gens.build_redfield_linear(ham, fermi))
    with pytest.raises(gens.GeneratorError):
        certify.check_detailed_balance(gens.build_davies_dephasing(ham, bath.reference_model()))


def test_cp_and_stationarity(gen):
    ham = hams.build_gue(5, seed=gen)
    dav = gens.build_davies_dephasing(ham, bath.reference_model(include_eta=True))
    assert certify.check_cp(dav).passed
    assert certify.check_gibbs_stationarity(dav).passed
    red = gens.build_redfield_dephasing(ham, bath.reference_model())
    assert certify.check_cp(red).passed is False
    # a real KMS spectrum cancels pairwise on the Gibbs state even without the secular cut
    assert certify.check_gibbs_stationarity(red).passed


def test_certify_report(fermi, gen):
    g = gens.build_davies_linear(hams.build_gue(5, seed=gen), fermi)
    rep = certify.certify_generator(g)
    names = [c.name for c in rep.checks]
    assert names[0] == "kms" and "complete_positivity" in names and "gibbs_stationarity" in names
    assert rep.passed
    d = json.loads(rep.to_json())
    assert d["passed"] and d["metadata"]["kind"] == "davies"
    assert len(d["metadata"]["generator_digest"]) == 64
    assert "PASS" in rep.table() and "FAIL" not in rep.table()


def test_report_with_failure(fermi, gen):
    g = gens.build_redfield_linear(hams.build_gue(5, seed=gen), fermi, CouplingPattern.random(5, 3))
    rep = certify.certify_generator(g)
    assert not rep.passed
    assert "FAIL" in rep.table()


def test_eth_scaling_small():
    t = certify.eth_scaling_report("gue", [8, 16], samples=3, seed=1, quadruples=200)
    assert t.sizes == [8, 16] and len(t.ratio) == 2
    assert t.secular_slope > t.nonsecular_slope
    again = certify.eth_scaling_report("gue", [8, 16], samples=3, seed=1, quadruples=200)
    assert again.to_dict() == t.to_dict()


def test_eth_secular_average_excludes_diagonal():
    # with k = l included the average would be exactly N
    t = certify.eth_scaling_report("gue", [8], samples=2, seed=0, quadruples=10)
    assert abs(t.secular[0] - 8) > 1e-3


def test_eth_anderson_uses_side_length():
    t = certify.eth_scaling_report("anderson", [2], samples=1, W=16.0, quadruples=10)
    assert t.sizes == [8] and t.secular_slope is None


def test_eth_rejects_unsorted():
    with pytest.raises(ValueError):
        certify.eth_scaling_report("gue", [16, 8], samples=1)
