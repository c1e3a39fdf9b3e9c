"""Point spectrum of the perturbed walk by truncated diagonalization.

``U`` restricted to the sites ``[-L, L]`` is closed into a finite unitary
with either a periodic or a reflecting boundary.  Eigenvectors of the dense
matrix that keep their mass well inside the window, and whose eigenphase
survives both doubling ``L`` and swapping the boundary rule, are accepted
as bound states of the lattice walk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from numpy.typing import NDArray

from .coins import CoinField
from .errors import FieldMismatchError, NumericalFilterError
from .walk import WalkState, distance, inner, step_forward

__all__ = [
    "BOUNDARIES",
    "BoundState",
    "BoundStateSet",
    "TruncatedEvolution",
    "build_truncated",
    "find_bound_states",
    "lattice_residual",
    "point_mass_weight",
    "point_spectrum",
]

BOUNDARIES = ("periodic", "reflecting")
UNITARITY_TOL = 1e-10
EDGE_TOL = 1e-8
STABILITY_TOL = 1e-8
DEFAULT_HALF_WIDTH = 200
# amplitudes below this are treated as roundoff in the decay fit
_FIT_FLOOR = 1e-13
_FIT_START = 10


@dataclass(frozen=True)
class TruncatedEvolution:
    """Dense finite unitary standing in for ``U`` on ``[-L, L]``.

    Basis index ``2 (x + L) + s`` holds spin ``s`` at site ``x``.
    """

    half_width: int
    matrix: NDArray[np.complex128]
    boundary: str
    field_hash: str

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(-self.half_width, self.half_width + 1)

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())


def _assemble(field: CoinField, L: int, boundary: str) -> scipy.sparse.csc_matrix:
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    n_sites = 2 * L + 1
    coins = field.coins(-L, L)
    y = np.arange(-L, L + 1)
    rows, cols, vals = [], [], []
    for s in (0, 1):
        col = 2 * (y + L) + s
        # upper component hops left
        left = y - 1
        if boundary == "periodic":
            r0 = 2 * ((left + L) % n_sites)
        else:
            r0 = np.where(left < -L, 2 * (y + L) + 1, 2 * (left + L))
        # lower component hops right
        right = y + 1
        if boundary == "periodic":
            r1 = 2 * ((right + L) % n_sites) + 1
        else:
            r1 = np.where(right > L, 2 * (y + L), 2 * (right + L) + 1)
        rows += [r0, r1]
        cols += [col, col]
        vals += [coins[:, 0, s], coins[:, 1, s]]
    dim = 2 * n_sites
    return scipy.sparse.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def build_truncated(field: CoinField, L: int = DEFAULT_HALF_WIDTH, boundary: str = "periodic") -> TruncatedEvolution:
    """Assemble ``U`` on ``[-L, L]``.

    Interior columns follow the lattice update rule exactly.  ``periodic``
    wraps the outgoing hops around the window; ``reflecting`` sends the
    amplitude leaving an edge back into the opposite spin at the same edge
    site, so the shift stays a permutation.

    Raises
    ------
    NumericalFilterError
        If the assembled matrix is not unitary to 1e-10.
    """
    if L < 2:
        raise ValueError(f"half-width must be at least 2, got {L}")
    trunc = TruncatedEvolution(L, _assemble(field, L, boundary).toarray(), boundary, field.fingerprint())
    err = trunc.unitarity_error()
    if err > UNITARITY_TOL:
        raise NumericalFilterError(f"truncated evolution not unitary (max |M*M - I| = {err:.3e})")
    return trunc


def _edge_mass(vec: NDArray[np.complex128], L: int) -> float:
    dens = np.sum(np.abs(vec.reshape(-1, 2)) ** 2, axis=1)
    x = np.arange(-L, L + 1)
    return float(dens[np.abs(x) > L / 2].sum())


def _decay_fit(vec: NDArray[np.complex128], L: int) -> tuple[float, float]:
    """Least-squares fit of ``log ||eta(x)||`` against ``|x|`` for ``|x| > 10``.

    Returns ``(rate, r_squared)``; ``nan`` when too few points clear the
    roundoff floor.
    """
    amp = np.sqrt(np.sum(np.abs(vec.reshape(-1, 2)) ** 2, axis=1))
    ax = np.abs(np.arange(-L, L + 1))
    mask = (ax > _FIT_START) & (amp > _FIT_FLOOR)
    if mask.sum() < 3:
        return float("nan"), float("nan")
    xs, ys = ax[mask].astype(float), np.log(amp[mask])
    slope, icpt = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + icpt)
    ss_tot = np.sum((ys - ys.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else float("nan")
    return float(-slope), float(r2)


def _nearest_eigenpair(field: CoinField, L: int, boundary: str, lam: complex, guess: NDArray[np.complex128]):
    """Inverse iteration on the sparse truncated matrix, shifted next to ``lam``."""
    a = _assemble(field, L, boundary)
    shift = lam * np.exp(1e-7j)
    lu = scipy.sparse.linalg.splu((a - shift * scipy.sparse.identity(a.shape[0], format="csc")).tocsc())
    x = guess / np.linalg.norm(guess)
    for _ in range(6):
        x = lu.solve(x)
        x /= np.linalg.norm(x)
    mu = np.vdot(x, a @ x)
    return mu / abs(mu), x


def _embed(vec: NDArray[np.complex128], L: int, L_new: int) -> NDArray[np.complex128]:
    out = np.zeros(2 * (2 * L_new + 1), dtype=np.complex128)
    off = 2 * (L_new - L)
    out[off : off + vec.size] = vec
    return out


def _phase_dist(a: complex, b: complex) -> float:
    return float(abs(np.angle(a / b)))


@dataclass(frozen=True)
class BoundState:
    theta: float
    vector: WalkState
    decay_rate: float
    decay_r2: float
    edge_mass: float

    @property
    def eigenvalue(self) -> complex:
        return complex(np.exp(1j * self.theta))

    def overlap(self, psi: WalkState) -> complex:
        """``<eta, psi>``."""
        return inner(self.vector, psi)


@dataclass(frozen=True)
class BoundStateSet:
    states: tuple[BoundState, ...]
    field_hash: str
    half_width: int
    boundary: str

    def __len__(self) -> int:
        return len(self.states)

    @property
    def thetas(self) -> NDArray[np.float64]:
        return np.array([s.theta for s in self.states])

    def to_json(self, path, vector_dir=None) -> None:
        """Write ``[{theta, decay_rate, edge_mass, vector_csv_path}]``; vectors go next to ``path``."""
        path = Path(path)
        vector_dir = Path(vector_dir) if vector_dir is not None else path.parent
        vector_dir.mkdir(parents=True, exist_ok=True)
        records = []
        for i, s in enumerate(self.states):
            vpath = vector_dir / f"bound_state_{i}.csv"
            s.vector.to_csv(vpath)
            records.append(
                {
                    "theta": s.theta,
                    "decay_rate": None if np.isnan(s.decay_rate) else s.decay_rate,
                    "edge_mass": s.edge_mass,
                    "vector_csv_path": str(vpath.relative_to(path.parent) if vpath.is_relative_to(path.parent) else vpath),
                }
            )
        path.write_text(json.dumps(records, indent=2) + "\n")


def point_spectrum(
    trunc: TruncatedEvolution,
    field: CoinField,
    *,
    edge_tol: float = EDGE_TOL,
    stability_tol: float = STABILITY_TOL,
) -> BoundStateSet:
    """Localized, boundary-independent eigenpairs of the truncated evolution.

    Candidates come from a complex Schur decomposition (for a normal matrix
    the Schur vectors are orthonormal eigenvectors, clusters included) and
    must have ``edge_mass <= edge_tol``.  Each candidate is then located again
    by inverse iteration on the matrix for ``2L`` with the same boundary and
    for ``L`` with the other boundary; it is kept only if its eigenphase moves
    by at most ``stability_tol`` and the re-found vector is also localized.
    """
    if trunc.field_hash != field.fingerprint():
        raise FieldMismatchError("truncated evolution was built from a different coin field")
    L = trunc.half_width
    tri, z = scipy.linalg.schur(trunc.matrix, output="complex")
    lam = np.diag(tri)
    lam = lam / np.abs(lam)
    other = "reflecting" if trunc.boundary == "periodic" else "periodic"

    states = []
    for j in range(z.shape[1]):
        vec = z[:, j]
        edge = _edge_mass(vec, L)
        if edge > edge_tol:
            continue
        stable = True
        for L2, bnd in ((2 * L, trunc.boundary), (L, other)):
            mu, x = _nearest_eigenpair(field, L2, bnd, lam[j], _embed(vec, L, L2))
            if _phase_dist(mu, lam[j]) > stability_tol or _edge_mass(x, L2) > edge_tol:
                stable = False
                break
        if not stable:
            continue
        # fix the global phase: largest component real and positive
        vec = vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))]))
        rate, r2 = _decay_fit(vec, L)
        theta = float(np.mod(np.angle(lam[j]), 2 * np.pi))
        states.append(BoundState(theta, WalkState(-L, vec.reshape(-1, 2)), rate, r2, edge))
    states.sort(key=lambda s: s.theta)
    return BoundStateSet(tuple(states), trunc.field_hash, L, trunc.boundary)


def find_bound_states(field: CoinField, L: int = DEFAULT_HALF_WIDTH, boundary: str = "periodic") -> BoundStateSet:
    return point_spectrum(build_truncated(field, L, boundary), field)


def point_mass_weight(bs: BoundStateSet, psi0: WalkState, field: CoinField | None = None) -> float:
    """``sum_n |<eta_n, psi0>|^2``.

    Raises
    ------
    FieldMismatchError
        If ``field`` is given and differs from the one ``bs`` was built for.
    ValueError
        If ``psi0`` has support outside the truncation window.
    """
    if field is not None and field.fingerprint() != bs.field_hash:
        raise FieldMismatchError("bound states were computed for a different coin field")
    supp = psi0.trimmed()
    if supp.x_min < -bs.half_width or supp.x_max > bs.half_width:
        raise ValueError(
            f"initial state support [{supp.x_min}, {supp.x_max}] leaves the truncation window "
            f"[-{bs.half_width}, {bs.half_width}]"
        )
    return float(sum(abs(s.overlap(psi0)) ** 2 for s in bs.states))


def lattice_residual(state: BoundState, field: CoinField) -> float:
    """``||U eta - e^{i theta} eta||`` computed by stepping on the infinite lattice."""
    return distance(step_forward(state.vector, field), state.vector.scaled(state.eigenvalue))
