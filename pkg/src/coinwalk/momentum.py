"""Band structure of the free walk and its limit velocity law.

With the transform ``psi_hat(k) = sum_x exp(-i k x) psi(x)`` the homogeneous
walk ``U0 = S C0`` becomes multiplication by the symbol

    U0_hat(k) = diag(exp(ik), exp(-ik)) @ C0 .

Each band ``(lambda_j(k), u_j(k))`` moves momentum content at the group
velocity ``i lambda_j'(k) / lambda_j(k)``.  Since
``U0_hat'(k) = i sigma_3 U0_hat(k)``, first-order perturbation theory gives
the closed form ``v_j(k) = -<u_j(k), sigma_3 u_j(k)>``, which is what we use.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .coins import as_coin
from .errors import DegenerateBandsError, NumericalFilterError
from .measures import VelocityMeasure
from .walk import WalkState

__all__ = [
    "DEFAULT_GRID",
    "DEGENERACY_TOL",
    "BandDecomposition",
    "SymbolEigen",
    "SymbolSample",
    "decompose_bands",
    "diagonalization_residual",
    "eigendecompose_symbol",
    "fourier_samples",
    "group_velocity",
    "hadamard_limit_cdf",
    "hadamard_limit_density",
    "hadamard_weight",
    "konno_density",
    "symbol",
    "symbol_sample",
    "velocity_pushforward",
]

DEFAULT_GRID = 2**14
DEGENERACY_TOL = 1e-8
MASS_TOL = 1e-6
# largest allowed jump of a phase-fixed section between neighbouring grid points
SECTION_JUMP_LIMIT = 0.5
_CONSTANT_BAND_TOL = 1e-12


def symbol(k, C0) -> NDArray[np.complex128]:
    """``diag(e^{ik}, e^{-ik}) C0``; broadcasts over an array of momenta."""
    c0 = np.asarray(C0, dtype=np.complex128)
    k = np.asarray(k, dtype=float)
    phase = np.stack([np.exp(1j * k), np.exp(-1j * k)], axis=-1)
    return phase[..., :, None] * c0


def _eig2(m):
    """Closed-form eigensolve for stacks of normal 2x2 matrices.

    Returns ``lam (..., 2)``, ``vecs (..., 2, 2)`` with eigenvectors in the
    columns, and the eigenvalue gap.  The second eigenvector is taken as the
    exact orthogonal complement of the first, which is valid for normal input.
    """
    m00, m01, m10, m11 = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    half = 0.5 * (m00 - m11)
    s = np.sqrt(half * half + m01 * m10)
    # two algebraically equivalent candidates for the eigenvector of mean + s
    cand_a = np.stack([m01, s - half], axis=-1)
    cand_b = np.stack([s + half, m10], axis=-1)
    na = np.linalg.norm(cand_a, axis=-1)
    nb = np.linalg.norm(cand_b, axis=-1)
    u = np.where((na >= nb)[..., None], cand_a, cand_b)
    nu = np.maximum(na, nb)
    tiny = nu < 1e-150
    u = np.where(tiny[..., None], np.array([1.0, 0.0], dtype=np.complex128), u)
    nu = np.where(tiny, 1.0, nu)
    u = u / nu[..., None]
    w = np.stack([-u[..., 1].conj(), u[..., 0].conj()], axis=-1)
    vecs = np.stack([u, w], axis=-1)
    lam = _rayleigh(m, vecs)
    gap = np.abs(lam[..., 0] - lam[..., 1])
    return lam, vecs, gap


def _rayleigh(m, vecs):
    mv = m @ vecs
    lam = np.einsum("...cj,...cj->...j", vecs.conj(), mv)
    return lam / np.abs(lam)


class SymbolEigen(NamedTuple):
    lam1: complex
    u1: NDArray[np.complex128]
    lam2: complex
    u2: NDArray[np.complex128]
    degenerate: bool


def eigendecompose_symbol(M, tol: float = DEGENERACY_TOL) -> SymbolEigen:
    """Eigenpairs of a 2x2 unitary; ``degenerate`` is set when ``|lam1 - lam2| < tol``."""
    m = as_coin(M, tol=1e-10)
    lam, vecs, gap = _eig2(m)
    return SymbolEigen(complex(lam[0]), vecs[:, 0].copy(), complex(lam[1]), vecs[:, 1].copy(), bool(gap < tol))


@dataclass(frozen=True)
class SymbolSample:
    """Symbol data at one momentum; ``vectors[:, j]`` is ``u_j(k)``."""

    k: float
    lam: NDArray[np.complex128]
    vectors: NDArray[np.complex128]
    velocity: NDArray[np.float64]

    @property
    def gap(self) -> float:
        return float(abs(self.lam[0] - self.lam[1]))


def _velocities(vecs):
    p = np.abs(vecs) ** 2
    return -(p[..., 0, :] - p[..., 1, :])


def group_velocity(sample: SymbolSample, tol: float = DEGENERACY_TOL) -> tuple[float, float]:
    """``v_j = -<u_j, sigma_3 u_j>`` for both bands of a nondegenerate sample."""
    if sample.gap < tol:
        raise DegenerateBandsError(f"degenerate symbol at k={sample.k} (gap {sample.gap:.2e})")
    v = _velocities(sample.vectors)
    return float(v[0]), float(v[1])


def symbol_sample(k: float, C0) -> SymbolSample:
    lam, vecs, _ = _eig2(symbol(k, C0))
    return SymbolSample(float(k), lam, vecs, _velocities(vecs))


@dataclass(frozen=True)
class BandDecomposition:
    """Two continuous bands sampled on ``k_m = 2 pi m / N``.

    Attributes
    ----------
    coin:
        The limit coin ``C0``.
    k:
        Grid momenta, shape ``(N,)``.
    lam:
        Eigenvalues, shape ``(N, 2)``.
    vectors:
        Phase-fixed eigenvectors, shape ``(N, 2, 2)``; ``vectors[m, :, j]``
        is ``u_j(k_m)``.
    velocity:
        Group velocities, shape ``(N, 2)``.
    min_gap:
        Smallest eigenvalue separation on the grid.
    crossings:
        Number of grid points where the bands touch; there the symbol is a
        multiple of the identity and the sections are continued from the
        neighbouring point.
    """

    coin: NDArray[np.complex128]
    k: NDArray[np.float64]
    lam: NDArray[np.complex128]
    vectors: NDArray[np.complex128]
    velocity: NDArray[np.float64]
    min_gap: float
    crossings: int

    @property
    def size(self) -> int:
        return self.k.size

    def sample(self, m: int) -> SymbolSample:
        return SymbolSample(float(self.k[m]), self.lam[m], self.vectors[m], self.velocity[m])

    def section_steps(self) -> NDArray[np.float64]:
        """``||u_j(k_{m+1}) - u_j(k_m)||`` for consecutive grid points, shape ``(N-1, 2)``."""
        return np.linalg.norm(np.diff(self.vectors, axis=0), axis=1)

    def to_csv(self, path) -> None:
        header = ["k"]
        for j in (1, 2):
            header += [f"re_lam{j}", f"im_lam{j}", f"v{j}", f"re_u{j}_0", f"im_u{j}_0", f"re_u{j}_1", f"im_u{j}_1"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for m in range(self.size):
                row = [self.k[m]]
                for j in (0, 1):
                    u = self.vectors[m, :, j]
                    row += [self.lam[m, j].real, self.lam[m, j].imag, self.velocity[m, j], u[0].real, u[0].imag, u[1].real, u[1].imag]
                w.writerow([f"{v:.17g}" for v in row])


def decompose_bands(C0, n: int = DEFAULT_GRID, tol: float = DEGENERACY_TOL) -> BandDecomposition:
    """Sample both bands of the symbol with continuous labels and phases.

    Band labels follow maximal overlap between neighbouring grid points and
    each eigenvector's phase is chosen so that ``<u_j(k_m), u_j(k_{m+1})>``
    is real and positive.

    Raises
    ------
    DegenerateBandsError
        If the bands cannot be continued smoothly along the grid.
    """
    c0 = as_coin(C0)
    if n < 2:
        raise ValueError("k-grid needs at least two points")
    k = 2.0 * np.pi * np.arange(n) / n
    mats = symbol(k, c0)
    _, vecs, gap = _eig2(mats)

    degenerate = np.flatnonzero(gap < tol)
    if degenerate.size == n:
        raise DegenerateBandsError("bands coincide on the whole grid")
    if degenerate.size:
        vecs = vecs.copy()
        good = np.flatnonzero(gap >= tol)
        for m in degenerate:
            prev = good[good < m]
            src = prev[-1] if prev.size else good[0]
            vecs[m] = vecs[src]

    # relative band swaps between neighbours, accumulated into absolute labels
    ov = np.abs(np.einsum("mcj,mci->mji", vecs[:-1].conj(), vecs[1:]))
    swap = ov[:, 0, 1] + ov[:, 1, 0] > ov[:, 0, 0] + ov[:, 1, 1]
    parity = np.concatenate([[False], np.logical_xor.accumulate(swap)])
    vecs = np.where(parity[:, None, None], vecs[:, :, ::-1], vecs)

    # parallel transport of phases along the grid
    links = np.einsum("mcj,mcj->mj", vecs[:-1].conj(), vecs[1:])
    step_phase = np.angle(links)
    phase = np.concatenate([np.zeros((1, 2)), -np.cumsum(step_phase, axis=0)])
    vecs = vecs * np.exp(1j * phase)[:, None, :]

    lam = _rayleigh(mats, vecs)
    bands = BandDecomposition(
        coin=c0,
        k=k,
        lam=lam,
        vectors=vecs,
        velocity=_velocities(vecs),
        min_gap=float(gap.min()),
        crossings=int(degenerate.size),
    )
    jump = float(bands.section_steps().max())
    if jump > SECTION_JUMP_LIMIT:
        raise DegenerateBandsError(f"band sections jump by {jump:.3f} between grid points; bands not separable")
    return bands


def diagonalization_residual(bands: BandDecomposition) -> float:
    """``max |<u_i, U0_hat u_j> - lam_j delta_ij|`` over the grid."""
    mats = symbol(bands.k, bands.coin)
    proj = np.einsum("mci,mcd,mdj->mij", bands.vectors.conj(), mats, bands.vectors)
    target = np.zeros_like(proj)
    target[:, 0, 0] = bands.lam[:, 0]
    target[:, 1, 1] = bands.lam[:, 1]
    return float(np.abs(proj - target).max())


def konno_density(v, r: float):
    """``sqrt(1-r^2) / (pi (1-v^2) sqrt(r^2-v^2))`` on ``|v| < r``, zero elsewhere."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"Konno parameter must lie in (0, 1), got {r}")
    v = np.asarray(v, dtype=float)
    inside = np.abs(v) < r
    vi = np.where(inside, v, 0.0)
    dens = np.sqrt(1.0 - r * r) / (np.pi * (1.0 - vi * vi) * np.sqrt(r * r - vi * vi))
    out = np.where(inside, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def _check_spinor(alpha: complex, beta: complex) -> None:
    n = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(n - 1.0) > 1e-10:
        raise ValueError(f"spinor is not normalized (|alpha|^2 + |beta|^2 = {n:.12g})")


def hadamard_weight(alpha: complex, beta: complex) -> float:
    """``|alpha|^2 - |beta|^2 + alpha conj(beta) + conj(alpha) beta``."""
    _check_spinor(alpha, beta)
    return float(abs(alpha) ** 2 - abs(beta) ** 2 + 2.0 * (alpha * np.conj(beta)).real)


def hadamard_limit_density(v, alpha: complex, beta: complex):
    """Limit density ``(1 - c v) f_K(v; 1/sqrt 2)`` of the free Hadamard walk from the origin."""
    c = hadamard_weight(alpha, beta)
    return (1.0 - c * np.asarray(v, dtype=float)) * konno_density(v, 1.0 / np.sqrt(2.0))


def hadamard_limit_cdf(v, alpha: complex, beta: complex):
    """Distribution function of :func:`hadamard_limit_density` in closed form."""
    c = hadamard_weight(alpha, beta)
    r = 1.0 / np.sqrt(2.0)
    s = np.sqrt(1.0 - r * r)
    v = np.asarray(v, dtype=float)
    vi = np.clip(v, -r, r)
    root = np.sqrt(np.maximum(r * r - vi * vi, 0.0))
    sym = np.arctan2(s * vi, root) / np.pi
    odd = c * np.arctan2(root, s) / np.pi
    out = np.where(v <= -r, 0.0, np.where(v >= r, 1.0, 0.5 + sym + odd))
    return float(out) if out.ndim == 0 else out


def fourier_samples(state: WalkState, n: int) -> NDArray[np.complex128]:
    """``psi_hat(2 pi m / n)`` for ``m = 0..n-1``, shape ``(n, 2)``.

    Sites are folded modulo ``n`` before the FFT, which leaves the samples
    exact for any window width.
    """
    folded = np.zeros((n, 2), dtype=np.complex128)
    np.add.at(folded, state.sites % n, state.amplitudes)
    return np.fft.fft(folded, axis=0)


def _band_weights(state: WalkState, bands: BandDecomposition) -> NDArray[np.float64]:
    psi_hat = fourier_samples(state, bands.size)
    proj = np.einsum("mcj,mc->mj", bands.vectors.conj(), psi_hat)
    return np.abs(proj) ** 2 / bands.size


def _pushforward(state: WalkState, bands: BandDecomposition) -> VelocityMeasure:
    w = _band_weights(state, bands)
    atom_locs, atom_w, sample_locs, sample_w = [], [], [], []
    for j in (0, 1):
        v = bands.velocity[:, j]
        if np.ptp(v) <= _CONSTANT_BAND_TOL:
            atom_locs.append(np.round(v.mean(), 12) + 0.0)
            atom_w.append(w[:, j].sum())
        else:
            sample_locs.append(np.clip(v, -1.0, 1.0))
            sample_w.append(w[:, j])
    return VelocityMeasure(
        np.array(atom_locs),
        np.array(atom_w),
        np.concatenate(sample_locs) if sample_locs else np.zeros(0),
        np.concatenate(sample_w) if sample_w else np.zeros(0),
    )


def velocity_pushforward(psi0: WalkState, bands: BandDecomposition) -> VelocityMeasure:
    """Limit law ``||E_v0(.) psi0||^2`` of ``X_t / t`` for the free walk.

    Grid weights ``|<u_j(k), psi_hat(k)>|^2 / N`` are attached to the
    velocities ``v_j(k)``.  A band with constant velocity collapses to an
    atom.

    Raises
    ------
    ValueError
        If ``psi0`` is not normalized.
    NumericalFilterError
        If the resulting mass misses one by more than 1e-6 (the grid is
        too coarse for the state's window).
    """
    nsq = psi0.norm_sq()
    if abs(nsq - 1.0) > 1e-6:
        raise ValueError(f"initial state is not normalized (||psi||^2 = {nsq:.12g})")
    mu = _pushforward(psi0, bands)
    if abs(mu.total_mass - 1.0) > MASS_TOL:
        raise NumericalFilterError(
            f"pushforward mass {mu.total_mass:.12g}; k-grid of {bands.size} points too coarse for window of "
            f"{psi0.amplitudes.shape[0]} sites"
        )
    return mu
