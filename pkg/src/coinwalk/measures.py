"""Probability measures on the velocity interval [-1, 1].

A :class:`VelocityMeasure` is a finite list of atoms plus a weighted sample
cloud for the absolutely continuous part.  Both the theoretical limit laws
and the exact empirical laws of ``X_t / t`` use this representation, so
distribution functions are compared without any binning.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .walk import PositionDistribution

__all__ = [
    "KS_GRID_POINTS",
    "VelocityMeasure",
    "charfn_distance",
    "empirical_velocity_law",
    "ks_distance",
    "measure_cdf",
]

KS_GRID_POINTS = 2001


def _merge_atoms(locs, weights):
    if locs.size == 0:
        return locs, weights
    u, inv = np.unique(locs, return_inverse=True)
    return u, np.bincount(inv, weights=weights, minlength=u.size)


@dataclass(frozen=True)
class VelocityMeasure:
    atom_locs: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    atom_weights: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    sample_locs: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    sample_weights: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        al = np.asarray(self.atom_locs, dtype=float).ravel()
        aw = np.asarray(self.atom_weights, dtype=float).ravel()
        sl = np.asarray(self.sample_locs, dtype=float).ravel()
        sw = np.asarray(self.sample_weights, dtype=float).ravel()
        if al.shape != aw.shape or sl.shape != sw.shape:
            raise ValueError("locations and weights must have matching lengths")
        if (aw < 0).any() or (sw < 0).any():
            raise ValueError("weights must be nonnegative")
        al, aw = _merge_atoms(al, aw)
        for name, arr in (("atom_locs", al), ("atom_weights", aw), ("sample_locs", sl), ("sample_weights", sw)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        locs = np.concatenate([al, sl])
        order = np.argsort(locs, kind="stable")
        object.__setattr__(self, "_sorted_locs", locs[order])
        object.__setattr__(self, "_cum_weights", np.cumsum(np.concatenate([aw, sw])[order]))

    @property
    def atom_mass(self) -> float:
        return float(self.atom_weights.sum())

    @property
    def ac_mass(self) -> float:
        return float(self.sample_weights.sum())

    @property
    def total_mass(self) -> float:
        return self.atom_mass + self.ac_mass

    def atom_weight_at(self, v: float) -> float:
        return float(self.atom_weights[self.atom_locs == v].sum())

    def cdf(self, v):
        """Right-continuous distribution function ``mu((-inf, v])``."""
        v = np.asarray(v, dtype=float)
        idx = np.searchsorted(self._sorted_locs, v, side="right")
        cum = np.concatenate([[0.0], self._cum_weights])
        return cum[idx]

    def _all(self):
        return np.concatenate([self.atom_locs, self.sample_locs]), np.concatenate([self.atom_weights, self.sample_weights])

    def moment(self, m: int) -> float:
        locs, w = self._all()
        return float(np.sum(w * locs**m))

    def charfn(self, xi):
        """``int exp(i xi v) dmu(v)`` for the measure scaled to unit mass."""
        locs, w = self._all()
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        vals = np.exp(1j * np.outer(xi, locs)) @ w
        return vals / w.sum()

    def scaled(self, factor: float) -> "VelocityMeasure":
        return VelocityMeasure(self.atom_locs, self.atom_weights * factor, self.sample_locs, self.sample_weights * factor)

    def with_atom(self, loc: float, weight: float) -> "VelocityMeasure":
        return VelocityMeasure(
            np.append(self.atom_locs, loc), np.append(self.atom_weights, weight), self.sample_locs, self.sample_weights
        )

    def to_csv(self, path) -> None:
        """Columns ``type, v, weight`` with ``type`` in {atom, sample}."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["type", "v", "weight"])
            for kind, locs, ws in (("atom", self.atom_locs, self.atom_weights), ("sample", self.sample_locs, self.sample_weights)):
                for v, wt in zip(locs, ws):
                    w.writerow([kind, f"{v:.17g}", f"{wt:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "VelocityMeasure":
        atoms: list[tuple[float, float]] = []
        samples: list[tuple[float, float]] = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                (atoms if row["type"] == "atom" else samples).append((float(row["v"]), float(row["weight"])))
        a = np.array(atoms).reshape(-1, 2)
        s = np.array(samples).reshape(-1, 2)
        return cls(a[:, 0], a[:, 1], s[:, 0], s[:, 1])


def measure_cdf(mu: VelocityMeasure, v):
    return mu.cdf(v)


def empirical_velocity_law(dist: PositionDistribution) -> VelocityMeasure:
    """Exact law of ``X_t / t``: an atom of weight ``P_t(x)`` at ``x / t``."""
    if dist.time <= 0:
        raise ValueError("the law of X_t / t needs t >= 1")
    keep = dist.probs > 0
    return VelocityMeasure(dist.sites[keep] / dist.time, dist.probs[keep])


def ks_distance(empirical: VelocityMeasure, theoretical: VelocityMeasure, n_grid: int = KS_GRID_POINTS) -> float:
    """Sup of ``|F_emp - F_theo|`` over all atoms and a uniform grid on [-1, 1]."""
    pts = np.concatenate([empirical.atom_locs, theoretical.atom_locs, np.linspace(-1.0, 1.0, n_grid)])
    return float(np.max(np.abs(empirical.cdf(pts) - theoretical.cdf(pts))))


def charfn_distance(a: VelocityMeasure, b: VelocityMeasure, xis) -> float:
    return float(np.max(np.abs(a.charfn(xis) - b.charfn(xis))))
