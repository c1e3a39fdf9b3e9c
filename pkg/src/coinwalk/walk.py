"""Finitely supported walk states and exact evolution under ``U = SC``.

One step acts as::

    (U psi)(x) = P(x+1) psi(x+1) + Q(x-1) psi(x-1)

so the upper spinor component moves one site left and the lower one moves
one site right after the coin.  Because the light cone has speed one, every
step grows the storage window by exactly one site on each side and no
truncation is ever made.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal

import numpy as np
from numpy.typing import NDArray

from .coins import CoinField

__all__ = [
    "PositionDistribution",
    "WalkState",
    "delta_state",
    "distance",
    "evolve",
    "gaussian_packet",
    "inner",
    "position_distribution",
    "random_state",
    "step_backward",
    "step_forward",
]

NORM_TOL = 1e-6


@dataclass(frozen=True)
class WalkState:
    """Amplitudes ``psi(x) in C^2`` on the window ``[x_min, x_max]``.

    ``amplitudes[i]`` holds ``(psi0, psi1)`` at site ``x_min + i``; every site
    outside the window carries zero.  ``time`` is the net number of steps
    applied (backward steps count as -1).
    """

    x_min: int
    amplitudes: NDArray[np.complex128]
    time: int = 0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 2 or amps.shape[1] != 2 or amps.shape[0] == 0:
            raise ValueError(f"amplitudes must have shape (n >= 1, 2), got {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "x_min", int(self.x_min))
        object.__setattr__(self, "time", int(self.time))

    @property
    def x_max(self) -> int:
        return self.x_min + self.amplitudes.shape[0] - 1

    @property
    def sites(self) -> NDArray[np.int64]:
        return np.arange(self.x_min, self.x_max + 1)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def at(self, x: int) -> NDArray[np.complex128]:
        if self.x_min <= x <= self.x_max:
            return self.amplitudes[x - self.x_min].copy()
        return np.zeros(2, dtype=np.complex128)

    def padded(self, lo: int, hi: int) -> "WalkState":
        """Same vector stored on ``[lo, hi]``, which must contain the support."""
        lo, hi = min(lo, self.x_min), max(hi, self.x_max)
        out = np.zeros((hi - lo + 1, 2), dtype=np.complex128)
        out[self.x_min - lo : self.x_max - lo + 1] = self.amplitudes
        return WalkState(lo, out, self.time)

    def restricted(self, lo: int, hi: int) -> "WalkState":
        """Drop everything outside ``[lo, hi]`` (not norm preserving)."""
        full = self.padded(lo, hi)
        return WalkState(lo, full.amplitudes[lo - full.x_min : hi - full.x_min + 1], self.time)

    def trimmed(self) -> "WalkState":
        """Shrink the window to the exact nonzero support."""
        nz = np.flatnonzero(np.any(self.amplitudes != 0, axis=1))
        if nz.size == 0:
            return WalkState(self.x_min, self.amplitudes[:1], self.time)
        return WalkState(self.x_min + nz[0], self.amplitudes[nz[0] : nz[-1] + 1], self.time)

    def scaled(self, factor: complex) -> "WalkState":
        return WalkState(self.x_min, self.amplitudes * factor, self.time)

    def normalized(self) -> "WalkState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return self.scaled(1.0 / n)

    def combine(self, other: "WalkState", coeff: complex = 1.0) -> "WalkState":
        """Return ``self + coeff * other`` on the union window."""
        lo, hi = min(self.x_min, other.x_min), max(self.x_max, other.x_max)
        a, b = self.padded(lo, hi), other.padded(lo, hi)
        return WalkState(lo, a.amplitudes + coeff * b.amplitudes, self.time)

    def to_csv(self, path) -> None:
        """Write columns ``x, re0, im0, re1, im1`` with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re0", "im0", "re1", "im1"])
            for x, (p0, p1) in zip(self.sites, self.amplitudes):
                w.writerow([int(x)] + [f"{v:.17g}" for v in (p0.real, p0.imag, p1.real, p1.imag)])

    @classmethod
    def from_csv(cls, path, time: int = 0) -> "WalkState":
        rows = list(csv.DictReader(Path(path).open()))
        if not rows:
            raise ValueError(f"{path}: no rows")
        xs = np.array([int(r["x"]) for r in rows])
        lo, hi = xs.min(), xs.max()
        amps = np.zeros((hi - lo + 1, 2), dtype=np.complex128)
        for x, r in zip(xs, rows):
            amps[x - lo] = (
                complex(float(r["re0"]), float(r["im0"])),
                complex(float(r["re1"]), float(r["im1"])),
            )
        return cls(int(lo), amps, time)


def _spinor(spinor) -> NDArray[np.complex128]:
    s = np.asarray(spinor, dtype=np.complex128)
    if s.shape != (2,):
        raise ValueError(f"spinor must have two components, got shape {s.shape}")
    return s


def delta_state(site: int, spinor=(1.0, 0.0)) -> WalkState:
    """``delta_site (x) spinor``; the spinor is used as given (not normalized)."""
    return WalkState(site, _spinor(spinor)[None, :])


def gaussian_packet(center: int, width: float, momentum: float, spinor, cutoff: float = 12.0) -> WalkState:
    """Normalized ``exp(-(x-center)^2 / (4 width^2) + i momentum x) * spinor``.

    ``width`` is the standard deviation of the position density.  Sites
    beyond ``cutoff * width`` from the center are dropped; at the default the
    dropped amplitude is below 1e-15.
    """
    if width <= 0:
        raise ValueError("packet width must be positive")
    r = int(np.ceil(cutoff * width))
    xs = np.arange(center - r, center + r + 1)
    env = np.exp(-((xs - center) ** 2) / (4.0 * width**2) + 1j * momentum * xs)
    amps = env[:, None] * _spinor(spinor)[None, :]
    return WalkState(center - r, amps).normalized()


def random_state(rng: np.random.Generator, lo: int, hi: int) -> WalkState:
    """Normalized state with i.i.d. complex Gaussian amplitudes on ``[lo, hi]``."""
    n = hi - lo + 1
    amps = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    return WalkState(lo, amps).normalized()


def inner(a: WalkState, b: WalkState) -> complex:
    """``<a, b>``, antilinear in the first argument."""
    lo, hi = max(a.x_min, b.x_min), min(a.x_max, b.x_max)
    if lo > hi:
        return 0j
    aa = a.amplitudes[lo - a.x_min : hi - a.x_min + 1]
    bb = b.amplitudes[lo - b.x_min : hi - b.x_min + 1]
    return complex(np.vdot(aa, bb))


def distance(a: WalkState, b: WalkState) -> float:
    """``||a - b||`` irrespective of the storage windows."""
    return a.combine(b, -1.0).norm()


def _forward_kernel(amps, coins):
    p0 = coins[:, 0, 0] * amps[:, 0] + coins[:, 0, 1] * amps[:, 1]
    p1 = coins[:, 1, 0] * amps[:, 0] + coins[:, 1, 1] * amps[:, 1]
    n = amps.shape[0]
    out = np.zeros((n + 2, 2), dtype=np.complex128)
    out[:n, 0] = p0
    out[2:, 1] = p1
    return out


def _backward_kernel(amps, coins_new):
    # S* first (upper component right, lower left), then C(x)* on the new window
    n = amps.shape[0]
    s0 = np.zeros(n + 2, dtype=np.complex128)
    s1 = np.zeros(n + 2, dtype=np.complex128)
    s0[2:] = amps[:, 0]
    s1[:n] = amps[:, 1]
    cc = coins_new.conj()
    out = np.empty((n + 2, 2), dtype=np.complex128)
    out[:, 0] = cc[:, 0, 0] * s0 + cc[:, 1, 0] * s1
    out[:, 1] = cc[:, 0, 1] * s0 + cc[:, 1, 1] * s1
    return out


def step_forward(state: WalkState, field: CoinField) -> WalkState:
    """Return ``U psi`` on the window grown by one site per side."""
    coins = field.coins(state.x_min, state.x_max)
    return WalkState(state.x_min - 1, _forward_kernel(state.amplitudes, coins), state.time + 1)


def step_backward(state: WalkState, field: CoinField) -> WalkState:
    """Return ``U^{-1} psi = C* S* psi`` on the window grown by one site per side."""
    coins = field.coins(state.x_min - 1, state.x_max + 1)
    return WalkState(state.x_min - 1, _backward_kernel(state.amplitudes, coins), state.time - 1)


def evolve(
    state: WalkState,
    field: CoinField,
    n: int,
    direction: Literal["forward", "backward"] = "forward",
    checkpoints: Iterable[int] = (),
    callback=None,
) -> WalkState:
    """Apply ``U^n`` (or ``U^-n``) by explicit stepping.

    ``callback(step, amps, x_min)`` is invoked after each step listed in
    ``checkpoints`` (all steps if ``checkpoints`` is ``None``); ``amps`` is a
    read-only view.
    """
    if n < 0:
        raise ValueError(f"step count must be nonnegative, got {n}")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    if n == 0:
        return state
    lo = state.x_min - n
    coins = field.coins(lo, state.x_max + n)
    watch = None if checkpoints is None else set(checkpoints)
    amps = state.amplitudes
    x_min = state.x_min
    for s in range(n):
        width = amps.shape[0]
        if direction == "forward":
            i = x_min - lo
            amps = _forward_kernel(amps, coins[i : i + width])
        else:
            i = x_min - 1 - lo
            amps = _backward_kernel(amps, coins[i : i + width + 2])
        x_min -= 1
        if callback is not None and (watch is None or s + 1 in watch):
            view = amps.view()
            view.flags.writeable = False
            callback(s + 1, view, x_min)
    sign = 1 if direction == "forward" else -1
    return WalkState(x_min, amps, state.time + sign * n)


@dataclass(frozen=True)
class PositionDistribution:
    """Law of the walker's position: ``probs[i] = P(X = sites[i])``."""

    sites: NDArray[np.int64]
    probs: NDArray[np.float64]
    time: int

    def to_dict(self) -> dict[int, float]:
        return {int(x): float(p) for x, p in zip(self.sites, self.probs) if p != 0.0}

    def __getitem__(self, x: int) -> float:
        i = x - int(self.sites[0])
        if 0 <= i < self.sites.size:
            return float(self.probs[i])
        return 0.0

    def moment(self, m: int, scale: float = 1.0) -> float:
        """``E[(X / scale)^m]``."""
        return float(np.sum(self.probs * (self.sites / scale) ** m))

    def mass_within(self, radius: int, center: int = 0) -> float:
        return float(self.probs[np.abs(self.sites - center) <= radius].sum())


def position_distribution(state: WalkState, tol: float = NORM_TOL) -> PositionDistribution:
    """Site-wise squared norms ``P(x) = ||psi(x)||^2`` of a normalized state.

    Raises
    ------
    ValueError
        If ``| ||psi||^2 - 1 | > tol``.
    """
    probs = np.sum(np.abs(state.amplitudes) ** 2, axis=1)
    total = probs.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"state is not normalized (||psi||^2 = {total:.12g})")
    return PositionDistribution(state.sites, probs, state.time)
