import numpy as np
import pytest
from scipy import stats

from qdavies import hamiltonians as hams
from qdavies import rng

from .conftest import random_hermitian


def test_diagonalize_identities(gen):
    ham = hams.diagonalize(random_hermitian(7, gen))
    V = ham.V
    assert np.allclose(V @ V.conj().T, np.eye(7), atol=1e-13)
    assert np.allclose(V.conj() @ ham.hopping @ V.T, np.diag(ham.eigenvalues), atol=1e-12)
    assert np.allclose(V.T @ np.diag(ham.eigenvalues) @ V.conj(), ham.hopping, atol=1e-12)
    assert np.all(np.diff(ham.eigenvalues) >= 0)


def test_phase_gauge_is_fixed(gen):
    ham = hams.diagonalize(random_hermitian(6, gen))
    piv = np.argmax(np.abs(ham.modes), axis=0)
    top = ham.modes[piv, np.arange(6)]
    assert np.allclose(top.imag, 0.0) and np.all(top.real > 0)


def test_basis_round_trip(gen):
    ham = hams.diagonalize(random_hermitian(5, gen))
    x = random_hermitian(5, gen)
    assert np.allclose(ham.to_site(ham.to_eigen(x)), x, atol=1e-12)
    assert np.allclose(ham.to_eigen(ham.hopping), np.diag(ham.eigenvalues), atol=1e-12)


def test_rejects_bad_input():
    with pytest.raises(hams.NotHermitianError):
        hams.diagonalize(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        hams.diagonalize(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        hams.diagonalize(np.zeros((2, 3)))


def test_gue_entry_variance():
    n, samples = 40, 40
    diag, off = [], []
    for s in range(samples):
        h = hams.build_gue(n, J=1.5, seed=rng.stream(7, rng.TAG_GUE, n, s)).hopping
        diag.append(np.diag(h).real)
        off.append(h[np.triu_indices(n, 1)])
    diag, off = np.concatenate(diag), np.concatenate(off)
    assert np.var(diag) == pytest.approx(1.5**2 / n, rel=0.05)
    assert np.mean(np.abs(off) ** 2) == pytest.approx(1.5**2 / n, rel=0.02)
    assert np.var(off.real) == pytest.approx(np.var(off.imag), rel=0.05)


def test_gue_semicircle():
    n = 400
    w = hams.build_gue(n, J=1.0, seed=3).eigenvalues
    # semicircle of radius 2J; compare with its CDF
    def cdf(x):
        x = np.clip(x / 2.0, -1, 1)
        return 0.5 + (x * np.sqrt(1 - x**2) + np.arcsin(x)) / np.pi
    assert stats.kstest(w, cdf).statistic < 0.05


def test_gue_reproducible():
    a = hams.build_gue(10, seed=5).hopping
    b = hams.build_gue(10, seed=5).hopping
    assert np.array_equal(a, b)
    assert not np.array_equal(a, hams.build_gue(10, seed=6).hopping)


def test_chain_band():
    n = 9
    w = hams.build_chain(n, J=0.7).eigenvalues
    k = 2 * np.pi * np.arange(n) / n
    assert np.allclose(w, np.sort(2 * 0.7 * np.cos(k)), atol=1e-12)


def test_anderson_clean_band():
    L = 2
    w = hams.build_anderson3d(L, W=0.0, J=1.0, seed=0).eigenvalues
    k = 2 * np.pi * np.arange(L) / L
    band = 2 * (np.cos(k)[:, None, None] + np.cos(k)[None, :, None] + np.cos(k)[None, None, :])
    assert np.allclose(w, np.sort(band.ravel()), atol=1e-12)


def test_anderson_clean_band_l3():
    L = 3
    w = hams.build_anderson3d(L, W=0.0, J=1.0, seed=0).eigenvalues
    k = 2 * np.pi * np.arange(L) / L
    band = 2 * (np.cos(k)[:, None, None] + np.cos(k)[None, :, None] + np.cos(k)[None, None, :])
    assert np.allclose(w, np.sort(band.ravel()), atol=1e-12)


def test_anderson_open_boundaries_bond_count():
    h = hams.anderson_hopping(3, W=0.0, periodic=False)
    # 3 directions x L^2 lines x (L-1) bonds, each stored twice
    assert np.count_nonzero(h) == 2 * 3 * 9 * 2


def test_anderson_disorder_range():
    h = hams.anderson_hopping(4, W=3.0, seed=11)
    d = np.diag(h).real
    assert np.all(np.abs(d) <= 3.0) and d.std() > 1.0


def test_ipr_limits():
    local = hams.diagonalize(np.diag([0.0, 1.0, 2.0, 3.0]).astype(complex))
    assert np.allclose(hams.inverse_participation_ratio(local), 1.0)
    ext = hams.build_chain(16)
    assert np.all(hams.inverse_participation_ratio(ext) < 0.2)


def test_localization_with_disorder():
    clean = hams.build_anderson3d(4, W=0.5, seed=1)
    dirty = hams.build_anderson3d(4, W=16.0, seed=1)
    assert hams.inverse_participation_ratio(dirty).mean() > 3 * hams.inverse_participation_ratio(clean).mean()


def test_build_dispatch():
    g = rng.stream(0, rng.TAG_TEST)
    assert hams.build("anderson3d", 2, {"W": 1.0}, g).n_sites == 8
    with pytest.raises(ValueError, match="unknown model family"):
        hams.build("nope", 2, {}, g)


def test_drive_interpolation():
    h0 = np.diag([0.0, 1.0]).astype(complex)
    h1 = np.array([[0, 1], [1, 0]], dtype=complex)
    p = hams.DriveProtocol([0.0, 2.0], [h0, h1], mode="linear")
    assert np.allclose(p.hopping_at(1.0), 0.5 * (h0 + h1))
    assert np.allclose(p.hopping_at(2.0), h1)
    pc = hams.DriveProtocol([0.0, 2.0], [h0, h1], mode="piecewise-constant", duration=3.0)
    assert np.allclose(pc.hopping_at(1.999), h0)
    assert np.allclose(pc.hopping_at(2.5), h1)
    with pytest.raises(ValueError):
        pc.hopping_at(3.5)
    assert np.allclose(hams.sample_drive(p, 2.0).eigenvalues, [-1.0, 1.0])


def test_drive_validation():
    h = np.eye(2, dtype=complex)
    with pytest.raises(ValueError):
        hams.DriveProtocol([0.0, 0.0], [h, h])
    with pytest.raises(ValueError):
        hams.DriveProtocol([1.0], [h])
    with pytest.raises(hams.NotHermitianError):
        hams.DriveProtocol([0.0], [np.array([[0, 1], [0, 0]])])


def test_hopping_csv_round_trip(tmp_path, gen):
    h = hams.build_gue(6, seed=gen).hopping
    p = hams.save_hopping(tmp_path / "h.csv", h)
    assert np.array_equal(hams.load_hopping(p), h)


def test_hopping_csv_detects_tamper(tmp_path, gen):
    h = hams.build_gue(3, seed=gen).hopping
    p = hams.save_hopping(tmp_path / "h.csv", h)
    lines = p.read_text().splitlines()
    lines[1] = lines[1].rsplit(",", 1)[0] + ",0.5"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="hash"):
        hams.load_hopping(p)
