import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import R, fd_velocities, hadamard_band_eigenvalues, quad_limit_cdf, quad_moment

from coinwalk.coins import hadamard_coin, random_coin, sigma_x_coin, sigma_z_coin
from coinwalk.errors import DegenerateBandsError, NumericalFilterError
from coinwalk.momentum import (
    decompose_bands,
    diagonalization_residual,
    eigendecompose_symbol,
    fourier_samples,
    group_velocity,
    hadamard_limit_cdf,
    hadamard_limit_density,
    hadamard_weight,
    konno_density,
    symbol,
    symbol_sample,
    velocity_pushforward,
)
from coinwalk.walk import delta_state, random_state

H = hadamard_coin()


@pytest.fixture(scope="module")
def hadamard_bands():
    return decompose_bands(H, 2**14)


def test_symbol_at_zero_is_coin():
    assert np.array_equal(symbol(0.0, H), H.astype(complex))
    assert symbol(np.zeros(5), H).shape == (5, 2, 2)


def test_symbol_eigenvalues_match_hadamard_formula():
    for k in np.linspace(0.0, 2 * np.pi, 37):
        s = symbol_sample(k, H)
        ref = hadamard_band_eigenvalues(k)
        assert np.allclose(np.sort_complex(s.lam), np.sort_complex(ref), atol=1e-13)


def test_band_at_minus_one_moves_right():
    s = symbol_sample(0.0, H)
    j = int(np.argmin(np.abs(s.lam + 1)))
    assert group_velocity(s)[j] == pytest.approx(R, abs=1e-14)
    assert group_velocity(s)[1 - j] == pytest.approx(-R, abs=1e-14)


def test_velocity_matches_hadamard_derivative():
    # finite differences of the explicit eigenvalue branches
    h = 1e-5
    for k in np.linspace(0.1, 6.0, 25):
        s = symbol_sample(k, H)
        v = group_velocity(s)
        for j in (0, 1):
            fd = -np.angle(hadamard_band_eigenvalues(k + h)[j] / hadamard_band_eigenvalues(k - h)[j]) / (2 * h)
            lam_j = hadamard_band_eigenvalues(k)[j]
            i = int(np.argmin(np.abs(s.lam - lam_j)))
            assert abs(v[i] - fd) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * np.pi))
def test_velocity_matches_finite_differences(seed, k):
    coin = random_coin(np.random.default_rng(seed))
    s = symbol_sample(k, coin)
    if s.gap < 1e-3:
        return
    assert np.max(np.abs(np.array(group_velocity(s)) - fd_velocities(k, coin, s.lam))) <= 1e-7


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2 * np.pi))
def test_eigendecomposition_properties(seed, k):
    coin = random_coin(np.random.default_rng(seed))
    m = symbol(k, coin)
    e = eigendecompose_symbol(m)
    assert abs(e.lam1 * e.lam2 - np.linalg.det(coin)) <= 1e-12
    assert np.linalg.norm(m @ e.u1 - e.lam1 * e.u1) <= 1e-12
    assert np.linalg.norm(m @ e.u2 - e.lam2 * e.u2) <= 1e-12
    assert abs(np.vdot(e.u1, e.u2)) <= 1e-13


def test_degenerate_symbol_flagged():
    e = eigendecompose_symbol(np.eye(2))
    assert e.degenerate
    with pytest.raises(DegenerateBandsError):
        group_velocity(symbol_sample(0.0, np.eye(2)))


def test_band_sections_are_smooth(hadamard_bands):
    dk = 2 * np.pi / hadamard_bands.size
    assert hadamard_bands.section_steps().max() <= 10 * dk
    assert diagonalization_residual(hadamard_bands) <= 1e-12
    assert hadamard_bands.crossings == 0
    assert hadamard_bands.min_gap > 1.0
    assert np.all(np.abs(hadamard_bands.velocity) <= R + 1e-12)


def test_random_coin_bands():
    coin = random_coin(np.random.default_rng(4))
    b = decompose_bands(coin, 4096)
    assert diagonalization_residual(b) <= 1e-12
    assert b.section_steps().max() <= 10 * 2 * np.pi / 4096


def test_diagonal_coin_bands_are_constant():
    b = decompose_bands(sigma_z_coin(), 256)
    assert b.crossings > 0
    assert np.allclose(np.sort(b.velocity, axis=1), [[-1.0, 1.0]] * 256, atol=1e-15)


def test_identity_coin_continued_through_crossings():
    b = decompose_bands(np.eye(2), 64)
    assert b.crossings == 2
    assert np.allclose(np.sort(b.velocity, axis=1), [[-1.0, 1.0]] * 64, atol=1e-15)
    # on a two-point grid every sample is a crossing
    with pytest.raises(DegenerateBandsError):
        decompose_bands(np.eye(2), 2)


def test_konno_density_normalized_by_quadrature():
    for r in (0.2, R, 0.9):
        assert quad_moment(0, 0.0, r) == pytest.approx(1.0, abs=1e-10)
    assert konno_density(0.9, R) == 0.0
    with pytest.raises(ValueError):
        konno_density(0.0, 1.0)


def test_second_moment_oracle():
    assert quad_moment(2, 1.0) == pytest.approx(1 - R, abs=1e-10)


def test_hadamard_weight_values():
    assert hadamard_weight(1, 0) == 1.0
    assert hadamard_weight(0, 1) == -1.0
    assert hadamard_weight(R, 1j * R) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        hadamard_weight(1, 1)


@pytest.mark.parametrize("alpha,beta", [(1, 0), (0, 1), (R, 1j * R), (0.6, 0.8j), (R, R)])
def test_closed_form_cdf_matches_quadrature(alpha, beta):
    c = hadamard_weight(alpha, beta)
    v = np.linspace(-0.75, 0.75, 151)
    assert np.max(np.abs(hadamard_limit_cdf(v, alpha, beta) - quad_limit_cdf(v, c))) <= 1e-10


def test_symmetric_spinor_has_median_zero():
    assert hadamard_limit_cdf(0.0, R, 1j * R) == pytest.approx(0.5, abs=1e-12)
    v = np.linspace(-0.7, 0.7, 9)
    d = hadamard_limit_density(v, R, 1j * R)
    assert np.allclose(d, d[::-1])


def test_fourier_samples_match_direct_sum():
    psi = random_state(np.random.default_rng(2), -7, 12)
    n = 16
    got = fourier_samples(psi, n)
    k = 2 * np.pi * np.arange(n) / n
    direct = np.exp(-1j * np.outer(k, psi.sites)) @ psi.amplitudes
    assert np.allclose(got, direct, atol=1e-12)


def test_pushforward_of_hadamard_matches_quadrature(hadamard_bands):
    alpha, beta = 0.6, 0.8j
    mu = velocity_pushforward(delta_state(0, (alpha, beta)), hadamard_bands)
    v = np.linspace(-1, 1, 401)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(mu.cdf(v) - quad_limit_cdf(v, hadamard_weight(alpha, beta)))) <= 1e-2


def test_pushforward_symmetric_case(hadamard_bands):
    mu = velocity_pushforward(delta_state(0, (R, 1j * R)), hadamard_bands)
    assert mu.cdf(0.0) == pytest.approx(0.5, abs=1e-2)


def test_sigma_x_pushforward_is_atom_at_zero():
    mu = velocity_pushforward(delta_state(0), decompose_bands(sigma_x_coin(), 64))
    assert mu.atom_weight_at(0.0) == pytest.approx(1.0, abs=1e-14)


def test_pushforward_mass_check():
    bands = decompose_bands(H, 32)
    with pytest.raises(NumericalFilterError):
        velocity_pushforward(random_state(np.random.default_rng(0), 0, 99), bands)
    with pytest.raises(ValueError):
        velocity_pushforward(delta_state(0).scaled(2), bands)


def test_band_csv(tmp_path):
    b = decompose_bands(H, 8)
    b.to_csv(tmp_path / "bands.csv")
    rows = (tmp_path / "bands.csv").read_text().splitlines()
    assert len(rows) == 9 and rows[0].startswith("k,re_lam1")
