"""Finite-time wave operators and the limit law of the perturbed walk.

``W_t = U^{-t} U0^t`` is applied by explicit stepping: ``t`` free steps
followed by ``t`` inverse perturbed steps.  Its adjoint family
``U0^{-t} U^t`` transports the dispersive part of an initial state back to
the free walk, where the velocity law is read off in momentum space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .coins import CoinField, make_coin_field
from .errors import FieldMismatchError, NumericalFilterError
from .measures import VelocityMeasure
from .momentum import BandDecomposition, _pushforward
from .spectral import BoundStateSet
from .walk import WalkState, distance, evolve, step_forward

__all__ = [
    "DEFAULT_PROBE_TIMES",
    "TraceNormDiagnostic",
    "WaveProbe",
    "ac_component",
    "free_field",
    "intertwining_residual",
    "perturbed_velocity_measure",
    "probe_wave",
    "singular_values_2x2",
    "trace_norm_partial",
    "wave_backward",
    "wave_forward",
]

DEFAULT_PROBE_TIMES = (64, 128, 256, 512)
CAUCHY_TOL = 1e-3
MIXTURE_TOL = 1e-6


def free_field(field: CoinField) -> CoinField:
    return make_coin_field("homogeneous", C0=field.limit_coin)


def wave_forward(psi: WalkState, field: CoinField, t: int) -> WalkState:
    """``U^{-t} U0^t psi``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0 or field.is_free:
        return psi
    return evolve(evolve(psi, free_field(field), t), field, t, "backward")


def wave_backward(psi: WalkState, field: CoinField, t: int) -> WalkState:
    """``U0^{-t} U^t psi``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0 or field.is_free:
        return psi
    return evolve(evolve(psi, field, t), free_field(field), t, "backward")


def intertwining_residual(psi: WalkState, field: CoinField, t: int) -> float:
    """``||U W_t psi - W_t U0 psi||``; tends to zero on the absolutely continuous subspace."""
    lhs = step_forward(wave_forward(psi, field, t), field)
    rhs = wave_forward(step_forward(psi, free_field(field)), field, t)
    return distance(lhs, rhs)


@dataclass(frozen=True)
class WaveProbe:
    """Dyadic Cauchy probe of ``W_t psi`` (or ``W_t^* psi``).

    ``residuals[i] = ||W_{2 t_i} psi - W_{t_i} psi||`` and ``vectors[i]`` is
    ``W_{t_i} psi``.
    """

    direction: str
    times: tuple[int, ...]
    vectors: tuple[WalkState, ...]
    residuals: NDArray[np.float64]
    norms: NDArray[np.float64]

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.residuals) < 0))

    def converging(self, tol: float = CAUCHY_TOL) -> bool:
        """Residuals strictly decrease and the last one is at most ``tol``."""
        return self.strictly_decreasing and bool(self.residuals[-1] <= tol)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "residual", "norm"])
            for t, r, n in zip(self.times, self.residuals, self.norms):
                w.writerow([t, f"{r:.17g}", f"{n:.17g}"])


def probe_wave(
    psi: WalkState,
    field: CoinField,
    times: Sequence[int] = DEFAULT_PROBE_TIMES,
    direction: Literal["forward", "backward"] = "forward",
) -> WaveProbe:
    times = tuple(int(t) for t in times)
    if not times or any(b <= a for a, b in zip(times, times[1:])) or times[0] < 0:
        raise ValueError(f"probe times must be increasing and nonnegative, got {times}")
    apply = {"forward": wave_forward, "backward": wave_backward}[direction]
    cache: dict[int, WalkState] = {}

    def at(t: int) -> WalkState:
        if t not in cache:
            cache[t] = apply(psi, field, t)
        return cache[t]

    residuals = np.array([distance(at(2 * t), at(t)) for t in times])
    norms = np.array([at(t).norm() for t in times])
    return WaveProbe(direction, times, tuple(at(t) for t in times), residuals, norms)


def _check_same_field(field: CoinField, bound_states: BoundStateSet, bands: BandDecomposition) -> None:
    if bound_states.field_hash != field.fingerprint():
        raise FieldMismatchError("bound states were computed for a different coin field")
    if not np.array_equal(bands.coin, field.limit_coin):
        raise FieldMismatchError("band decomposition uses a different limit coin")


def ac_component(psi0: WalkState, bound_states: BoundStateSet) -> tuple[WalkState, float]:
    """Remove the bound-state projection: returns ``(psi0 - Pi_p psi0, ||Pi_p psi0||^2)``."""
    rest = psi0
    weight = 0.0
    for s in bound_states.states:
        c = s.overlap(psi0)
        weight += abs(c) ** 2
        rest = rest.combine(s.vector, -c)
    return rest, weight


def perturbed_velocity_measure(
    psi0: WalkState,
    field: CoinField,
    bands: BandDecomposition,
    bound_states: BoundStateSet,
    t: int,
) -> VelocityMeasure:
    """Limit law of ``X_t / t`` for the perturbed walk.

    The bound-state weight ``||Pi_p psi0||^2`` becomes an atom at zero.  The
    remaining vector is transported by ``U0^{-t} U^t`` and pushed forward
    through the free band velocities; that part is rescaled to carry exactly
    the complementary mass.

    Raises
    ------
    FieldMismatchError
        If ``bound_states`` or ``bands`` belong to another field.
    NumericalFilterError
        If the unscaled mixture mass misses one by more than 1e-6.
    """
    nsq = psi0.norm_sq()
    if abs(nsq - 1.0) > 1e-6:
        raise ValueError(f"initial state is not normalized (||psi||^2 = {nsq:.12g})")
    _check_same_field(field, bound_states, bands)
    rest, w_p = ac_component(psi0, bound_states)
    w_p = min(w_p, 1.0)
    if rest.norm_sq() <= 1e-14:
        return VelocityMeasure([0.0], [w_p])
    mu_ac = _pushforward(wave_backward(rest, field, t), bands)
    raw = mu_ac.total_mass + w_p
    if abs(raw - 1.0) > MIXTURE_TOL:
        raise NumericalFilterError(f"mixture mass {raw:.12g} before renormalization")
    mu = mu_ac.scaled((1.0 - w_p) / mu_ac.total_mass)
    return mu.with_atom(0.0, w_p) if w_p > 0 else mu


def singular_values_2x2(m) -> NDArray[np.float64]:
    """Closed-form singular values of a stack of 2x2 matrices, shape ``(..., 2)``, descending."""
    m = np.asarray(m, dtype=np.complex128)
    fro = np.sum(np.abs(m) ** 2, axis=(-2, -1))
    det = np.abs(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0])
    big = np.sqrt(0.5 * (fro + np.sqrt(np.maximum(fro * fro - 4.0 * det * det, 0.0))))
    small = np.divide(det, big, out=np.zeros_like(big), where=big > 0)
    return np.stack([big, small], axis=-1)


@dataclass(frozen=True)
class TraceNormDiagnostic:
    """Partial sums of ``sum_x sum_i sqrt(t_i(x))`` over ``0 < |x| <= X``.

    ``partial_sums[r-1]`` covers radius ``r``; ``bounds`` holds
    ``2 c1 sum |x|^(-1-eps)`` over the same range when the field carries
    decay parameters.  ``origin_term`` is the ``x = 0`` contribution, which the
    decay condition does not constrain.
    """

    radii: NDArray[np.int64]
    partial_sums: NDArray[np.float64]
    bounds: Optional[NDArray[np.float64]]
    origin_term: float

    @property
    def radius(self) -> int:
        return int(self.radii[-1])

    @property
    def partial_sum(self) -> float:
        return float(self.partial_sums[-1])

    @property
    def bound(self) -> Optional[float]:
        return None if self.bounds is None else float(self.bounds[-1])

    @property
    def total(self) -> float:
        """Partial sum including the ``x = 0`` term."""
        return self.partial_sum + self.origin_term

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["X", "partial_sum", "bound"])
            for i, r in enumerate(self.radii):
                b = "" if self.bounds is None else f"{self.bounds[i]:.17g}"
                w.writerow([int(r), f"{self.partial_sums[i]:.17g}", b])


def trace_norm_partial(field: CoinField, X: int) -> TraceNormDiagnostic:
    if X < 1:
        raise ValueError("radius must be at least 1")
    sv = singular_values_2x2(field.coins(-X, X) - field.limit_coin).sum(axis=1)
    radii = np.arange(1, X + 1)
    per_radius = sv[X + radii] + sv[X - radii]
    bounds = None
    if field.decay_params is not None:
        c1, eps = field.decay_params
        bounds = 2.0 * c1 * np.cumsum(2.0 * radii.astype(float) ** (-1.0 - eps))
    return TraceNormDiagnostic(radii, np.cumsum(per_radius), bounds, float(sv[X]))
