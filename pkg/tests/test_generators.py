from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdavies import bath, rng
from qdavies import hamiltonians as hams
from qdavies import generators as gens
from qdavies.generators import CouplingPattern, Kind, Sector

from .conftest import random_density, random_hermitian


def _fock_correlation(rho, a):
    n = len(a)
    return np.array([[np.trace(rho @ a[j].conj().T @ a[i]) for j in range(n)] for i in range(n)])


def _random_fock_state(n, g):
    return random_density(2**n, g)


@pytest.mark.parametrize("pattern", ["uniform", "random"])
@pytest.mark.parametrize("kind", ["redfield", "davies"])
def test_linear_matches_fock_space(pattern, kind, fermi_eta, gen):
    n = 3
    ham = hams.build_gue(n, seed=gen)
    g = gens.build(kind, "linear", ham, fermi_eta, CouplingPattern.parse(pattern, n, 4))
    L = g.fock_superoperator()
    a = gens.jordan_wigner(n)
    rho = _random_fock_state(n, gen)
    drho = (L @ rho.reshape(-1)).reshape(rho.shape)
    want = _fock_correlation(drho, a)
    got = g.apply(_fock_correlation(rho, a))
    assert np.max(np.abs(got - want)) < 1e-13


def test_linear_no_lamb_matches_fock(fermi_eta, gen):
    ham = hams.build_gue(3, seed=gen)
    g = gens.build_redfield_linear(ham, fermi_eta, CouplingPattern.random(3, 2), lamb_shift=False)
    a = gens.jordan_wigner(3)
    rho = _random_fock_state(3, gen)
    drho = (g.fock_superoperator() @ rho.reshape(-1)).reshape(rho.shape)
    assert np.allclose(g.apply(_fock_correlation(rho, a)), _fock_correlation(drho, a), atol=1e-13)


def test_jordan_wigner_anticommutation():
    a = gens.jordan_wigner(3)
    for i in range(3):
        for j in range(3):
            anti = a[i] @ a[j].conj().T + a[j].conj().T @ a[i]
            assert np.allclose(anti, np.eye(8) * (i == j))
            assert np.allclose(a[i] @ a[j] + a[j] @ a[i], 0)


def test_bosonic_single_mode_rate_equation():
    m = bath.SpectralModel("bosonic", beta=2.0, coupling=0.4)
    ham = hams.diagonalize(np.array([[1.3]]))
    g = gens.build_davies_linear(ham, m)
    em, ab = bath.gamma_pair(m, 1.3)
    n = 0.7
    assert g.apply(np.array([[n]]))[0, 0].real == pytest.approx(-em * n + ab * (n + 1), rel=1e-14)


def test_fermionic_single_mode_rate_equation(fermi):
    ham = hams.diagonalize(np.array([[0.4]]))
    g = gens.build_davies_linear(ham, fermi)
    em, ab = bath.gamma_pair(fermi, 0.4)
    n = 0.3
    assert g.apply(np.array([[n]]))[0, 0].real == pytest.approx(-em * n + ab * (1 - n), rel=1e-14)


def test_uniform_coupling_redfield_equals_davies(fermi_eta, gen):
    ham = hams.build_gue(20, seed=gen)
    red = gens.build_redfield_linear(ham, fermi_eta)
    dav = gens.build_davies_linear(ham, fermi_eta)
    assert np.max(np.abs(red.channel1 - dav.channel1)) <= 1e-12 * dav.scale
    assert np.max(np.abs(red.channel2 - dav.channel2)) <= 1e-12 * dav.scale


def test_overlap_matrix_oracle(gen):
    ham = hams.build_gue(5, seed=gen)
    pat = CouplingPattern.random(5, 9)
    V = ham.V
    want = np.zeros((5, 5), dtype=complex)
    for m in range(5):
        for q in range(5):
            for j in range(5):
                want[m, q] += pat.weights[j] ** 2 * V[m, j] * np.conj(V[q, j])
    assert np.allclose(gens.overlap_matrix(ham, pat), want, atol=1e-14)


def test_overlap_uniform_is_identity(gen):
    ham = hams.build_gue(9, seed=gen)
    assert np.allclose(gens.overlap_matrix(ham, CouplingPattern.uniform(9)), np.eye(9), atol=1e-13)


def _plane_wave_chain(n):
    h = hams.chain_hopping(n)
    k = 2 * np.pi * np.arange(n) / n
    j = np.arange(n)
    modes = np.exp(1j * np.outer(j, k)) / np.sqrt(n)  # modes[j, m]
    return hams.QuadraticHamiltonian(h, 2 * np.cos(k), modes), k


@pytest.mark.parametrize("p", [2, 3, 4])
def test_sublattice_overlap_aliasing(p):
    n = 12
    ham, k = _plane_wave_chain(n)
    assert np.allclose(ham.V.conj() @ ham.hopping @ ham.V.T, np.diag(ham.eigenvalues), atol=1e-12)
    s = gens.overlap_matrix(ham, CouplingPattern.sublattice(n, p))
    dk = (np.arange(n)[:, None] - np.arange(n)[None, :]) % (n // p)
    assert np.allclose(s, np.where(dk == 0, 1.0 / p, 0.0), atol=1e-14)


def test_sublattice_pattern_validation():
    with pytest.raises(ValueError):
        CouplingPattern.sublattice(10, 3)
    assert CouplingPattern.parse("sublattice:2", 6).sublattice_period == 2
    with pytest.raises(ValueError):
        CouplingPattern.parse("bogus", 6)
    with pytest.raises(ValueError):
        CouplingPattern(np.array([1.0, -1.0]))


def test_pattern_round_trip():
    p = CouplingPattern.random(7, 3)
    q = CouplingPattern.from_dict(p.to_dict())
    assert np.array_equal(p.weights, q.weights) and q.label == "random"


def test_secular_truncation_equals_davies_linear(fermi_eta, gen):
    ham = hams.build_gue(8, seed=gen)
    pat = CouplingPattern.random(8, 1)
    sec = gens.secular_truncate(gens.build_redfield_linear(ham, fermi_eta, pat))
    dav = gens.build_davies_linear(ham, fermi_eta, pat)
    assert sec.kind is Kind.SECULAR
    assert np.allclose(sec.channel1, dav.channel1, atol=1e-16)
    assert np.allclose(sec.channel2, dav.channel2, atol=1e-16)


def test_random_pattern_redfield_not_cp(fermi, gen):
    ham = hams.build_gue(8, seed=gen)
    red = gens.build_redfield_linear(ham, fermi, CouplingPattern.random(8, 5))
    assert gens.kossakowski_min_eigenvalue(red) < -1e-6
    dav = gens.build_davies_linear(ham, fermi, CouplingPattern.random(8, 5))
    assert gens.kossakowski_min_eigenvalue(dav) >= -1e-15


def test_lamb_shift_sign_matches_hilbert_transform(fermi_eta):
    ham = hams.diagonalize(np.array([[0.3]]))
    g = gens.build_davies_linear(ham, fermi_eta)
    em, ab = bath.eta_pair(fermi_eta, 0.3)
    assert g.lamb_shift[0] == pytest.approx(em - ab, rel=1e-12)
    # total shift is the Hilbert transform of the DOS, independent of occupation
    d = bath.principal_value(lambda x: float(fermi_eta.dos(x)) * fermi_eta.coupling**2, 0.3,
                             -60 * 10.0, 60 * 10.0, (0.0,))
    assert g.lamb_shift[0] == pytest.approx(d, rel=1e-7)


def test_instantaneous_davies_static(fermi, gen):
    h = hams.build_gue(4, seed=gen).hopping
    p = hams.DriveProtocol.constant(h, 5.0)
    a = gens.instantaneous_davies(p, fermi, 2.0, J_int=0.5)
    b = gens.build_davies_linear(hams.diagonalize(h), fermi.with_coupling(0.5))
    assert np.array_equal(a.channel1, b.channel1)


# dephasing

@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("eta", [False, True])
def test_dephasing_matches_four_index_form(n, eta, gen):
    model = bath.reference_model(include_eta=eta)
    ham = hams.build_gue(n, seed=gen)
    g = gens.build_redfield_dephasing(ham, model)
    want = gens.four_index_oracle(ham, model)
    got = g.superoperator(basis="eigen")
    e = ham.eigenvalues
    unitary = -1j * (e[:, None] - e[None, :]).ravel()
    assert np.max(np.abs(got - np.diag(unitary) - want)) < 1e-12


def test_dephasing_without_lamb_matches_oracle(gen):
    model = bath.reference_model()
    ham = hams.build_gue(3, seed=gen)
    g = gens.build_redfield_dephasing(ham, model, lamb_shift=False)
    want = gens.four_index_oracle(ham, model, include_lamb=False)
    e = ham.eigenvalues
    got = g.superoperator(basis="eigen") - np.diag(-1j * (e[:, None] - e[None, :]).ravel())
    assert np.max(np.abs(got - want)) < 1e-12


def test_general_and_hermitian_paths_agree(gen):
    g = gens.build_redfield_dephasing(hams.build_gue(6, seed=gen), bath.reference_model())
    rho = random_density(6, gen)
    fast = g.apply_eigen(rho)
    slow = g.apply_eigen(rho + 0j * np.triu(np.ones((6, 6)), 1) + 1e-300j * np.eye(6))
    assert np.allclose(fast, slow, atol=1e-15)


@pytest.mark.parametrize("kind", ["redfield", "davies", "secular_truncation"])
def test_dephasing_trace_and_hermiticity(kind, gen):
    g = gens.build(kind, "dephasing", hams.build_gue(5, seed=gen), bath.reference_model())
    x = random_hermitian(5, gen) + 1j * random_hermitian(5, gen)
    out = g.apply(x)
    assert abs(np.trace(out)) < 1e-14
    assert np.allclose(g.apply(x.conj().T), out.conj().T, atol=1e-14)


def test_dephasing_davies_equals_secular_truncation(gen):
    model = bath.reference_model(include_eta=True)
    ham = hams.build_gue(5, seed=gen)
    dav = gens.build_davies_dephasing(ham, model)
    sec = gens.secular_truncate(gens.build_redfield_dephasing(ham, model))
    assert np.max(np.abs(dav.superoperator("eigen") - sec.superoperator("eigen"))) < 1e-15


def test_dephasing_davies_equals_secular_on_degenerate_chain():
    model = bath.reference_model()
    ham = hams.build_chain(6)
    dav = gens.build_davies_dephasing(ham, model)
    sec = gens.secular_truncate(gens.build_redfield_dephasing(ham, model))
    assert np.max(np.abs(dav.superoperator() - sec.superoperator())) < 1e-14


def _regauge(ham, g):
    """Random unitary mixing inside each degenerate eigenvalue cluster."""
    labels = gens.cluster_labels(ham.eigenvalues, gens.degeneracy_tol(ham))
    u = np.eye(ham.n_sites, dtype=complex)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        if idx.size > 1:
            q, _ = np.linalg.qr(g.normal(size=(idx.size,) * 2) + 1j * g.normal(size=(idx.size,) * 2))
            u[np.ix_(idx, idx)] = q
    return hams.QuadraticHamiltonian(ham.hopping, ham.eigenvalues, ham.modes @ u)


def test_degenerate_gauge_invariance(gen):
    model = bath.reference_model(include_eta=True)
    ham = hams.build_chain(8)
    other = _regauge(ham, gen)
    assert not np.allclose(other.modes, ham.modes)
    for build in (gens.build_davies_dephasing, gens.build_redfield_dephasing):
        a, b = build(ham, model), build(other, model)
        assert np.max(np.abs(a.superoperator() - b.superoperator())) < 1e-13
    fm = bath.SpectralModel("fermionic", include_eta=True)
    pat = CouplingPattern.sublattice(8, 2)
    a = gens.secular_truncate(gens.build_redfield_linear(ham, fm, pat))
    b = gens.secular_truncate(gens.build_redfield_linear(other, fm, pat))
    r = np.eye(8) * 0.1 + 0.05
    assert np.allclose(a.apply(r), b.apply(r), atol=1e-14)


def test_dephasing_davies_cp_and_redfield_not(gen):
    ham = hams.build_gue(4, seed=gen)
    model = bath.reference_model()
    dav = gens.build_davies_dephasing(ham, model)
    red = gens.build_redfield_dephasing(ham, model)
    assert gens.kossakowski_min_eigenvalue(dav) >= -1e-12
    assert gens.kossakowski_min_eigenvalue(red) < -1e-6


def test_kossakowski_matrix_reproduces_dissipator(gen):
    # D(rho) = sum K[(l,k),(n,m)] (|l><k| rho |m><n| - ...) checked via the sandwich part
    ham = hams.build_gue(3, seed=gen)
    g = gens.build_redfield_dephasing(ham, bath.reference_model())
    c = g.coefficient_tensor()
    rho = random_density(3, gen)
    sand = np.einsum("klmn,km->ln", c, rho)
    e = np.eye(3)
    full = g.dissipator_eigen(rho)
    z = g._vectors[3]
    assert np.allclose(sand - z @ rho - rho @ z.conj().T, full, atol=1e-14)
    assert np.allclose(e, e)


def test_bohr_labels_cluster_degenerate_gaps():
    ham = hams.build_chain(6)
    lab = gens.bohr_labels(ham)
    assert lab[0, 0] == lab[3, 3]
    assert len(np.unique(lab)) < 36


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_dephasing_redfield_trace_preserving_property(n, seed):
    g = gens.build_redfield_dephasing(hams.build_gue(n, seed=seed), bath.reference_model())
    rho = random_density(n, rng.stream(seed, rng.TAG_TEST))
    assert abs(np.trace(g.apply(rho))) < 1e-14


# serialization

@pytest.mark.parametrize("kind,coupling", [("redfield", "linear"), ("davies", "linear"),
                                           ("secular_truncation", "linear"),
                                           ("redfield", "dephasing"), ("davies", "dephasing")])
def test_serialize_round_trip(kind, coupling, tmp_path, gen):
    model = bath.reference_model() if coupling == "dephasing" else bath.SpectralModel("fermionic")
    ham = hams.build_gue(4, seed=gen)
    pat = CouplingPattern.random(4, 2) if coupling == "linear" else None
    g = gens.build(kind, coupling, ham, model, pat)
    path = gens.serialize.save(g, tmp_path / "g.json")
    h = gens.serialize.load(path)
    assert h.kind is g.kind and h.sector is g.sector
    rho = random_density(4, gen)
    assert np.array_equal(h.apply(rho), g.apply(rho))


def test_serialize_detects_tamper(gen):
    g = gens.build("davies", "linear", hams.build_gue(3, seed=gen), bath.SpectralModel("fermionic"))
    d = gens.serialize.to_dict(g)
    d["model"]["beta"] = 1.0
    with pytest.raises(gens.GeneratorError):
        gens.serialize.from_dict(d)


def test_build_rejects_unknown_coupling(gen):
    with pytest.raises(gens.GeneratorError):
        gens.build("davies", "quartic", hams.build_gue(2, seed=gen), bath.reference_model())
    with pytest.raises(ValueError):
        gens.build("lindblad", "linear", hams.build_gue(2, seed=gen), bath.reference_model())


def test_sector_tags(gen):
    ham = hams.build_gue(3, seed=gen)
    assert gens.build("davies", "linear", ham, bath.SpectralModel()).sector is Sector.MODE_OCCUPATION
    assert gens.build("davies", "dephasing", ham, bath.reference_model()).sector is Sector.SINGLE_PARTICLE


def test_secular_truncate_requires_redfield(gen):
    g = gens.build_davies_linear(hams.build_gue(3, seed=gen), bath.SpectralModel())
    with pytest.raises(gens.GeneratorError):
        gens.secular_truncate(g)
    with pytest.raises(gens.GeneratorError):
        gens.build_davies_linear(hams.build_gue(3, seed=gen), bath.SpectralModel(),
                                 CouplingPattern.uniform(4))


def test_affine_split(fermi_eta, gen):
    ham = hams.build_gue(3, seed=gen)
    lin = gens.build_redfield_linear(ham, fermi_eta, CouplingPattern.random(3, 0))
    r = random_hermitian(3, gen)
    want = lin.apply(r).ravel()
    assert np.allclose(lin.superoperator() @ r.ravel() + lin.affine_term().ravel(), want, atol=1e-14)
    assert np.abs(lin.affine_term()).max() > 0
    deph = gens.build_redfield_dephasing(ham, bath.reference_model())
    assert np.abs(deph.affine_term()).max() == 0
