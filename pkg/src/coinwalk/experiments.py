"""Config-driven experiments: evolution, limit-law comparison, wave probes, spectra.

A configuration is a JSON object::

    {
      "field":   {coin field JSON, see CoinField.to_json_dict},
      "initial": {"type": "site", "site": 0, "spinor": [1, 0]},
      "horizon": 2000,
      "checkpoints": [2000],
      "n_grid": 16384,
      "half_width": 200,
      "boundary": "periodic",
      "probe_times": [64, 128, 256, 512],
      "wave_time": null,
      "trap_radius": 20,
      "xi": [-4, -2, -1, 1, 2, 4],
      "radius": 10000,
      "seed": 0
    }

Spinor entries are numbers or ``[re, im]`` pairs.  Initial states are one of
``site``, ``packet`` (``center``, ``width``, ``momentum``, ``spinor``),
``random`` (``lo``, ``hi``; drawn with ``seed``) or ``bound_state``
(``index`` into the accepted bound states of the field).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .coins import CoinField
from .errors import ConfigError
from .measures import VelocityMeasure, empirical_velocity_law, ks_distance
from .momentum import DEFAULT_GRID, decompose_bands, velocity_pushforward
from .scattering import (
    DEFAULT_PROBE_TIMES,
    TraceNormDiagnostic,
    WaveProbe,
    ac_component,
    perturbed_velocity_measure,
    probe_wave,
    trace_norm_partial,
)
from .spectral import DEFAULT_HALF_WIDTH, BoundStateSet, find_bound_states, point_mass_weight
from .walk import (
    PositionDistribution,
    WalkState,
    delta_state,
    evolve,
    gaussian_packet,
    position_distribution,
    random_state,
)

__all__ = [
    "ComparisonReport",
    "EvolutionResult",
    "ExperimentConfig",
    "SpectrumReport",
    "WaveProbeReport",
    "initial_state",
    "run_evolution",
    "run_limit_compare",
    "run_spectrum",
    "run_trace_norm",
    "run_wave_probe",
    "trapped_probability",
]

DEFAULT_XI = (-4.0, -2.0, -1.0, 1.0, 2.0, 4.0)
DEFAULT_PACKET = {"center": 0, "width": 10.0, "momentum": 1.2, "spinor": [1.0, 0.0]}
INITIAL_TYPES = ("site", "packet", "random", "bound_state")


def _parse_complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(p, (int, float)) for p in v):
        return complex(v[0], v[1])
    raise ConfigError(f"cannot read complex number from {v!r}")


def _parse_spinor(v, what: str = "spinor") -> tuple[complex, complex]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(f"{what} must have two entries")
    a, b = _parse_complex(v[0]), _parse_complex(v[1])
    n = abs(a) ** 2 + abs(b) ** 2
    if abs(n - 1.0) > 1e-10:
        raise ConfigError(f"{what} is not normalized (|alpha|^2 + |beta|^2 = {n:.12g})")
    return a, b


def _positive_int(d: Mapping, key: str, default) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
        raise ConfigError(f"{key} must be a positive integer, got {v!r}")
    return v


@dataclass(frozen=True)
class ExperimentConfig:
    field: CoinField
    field_spec: Mapping[str, Any]
    initial: Mapping[str, Any]
    horizon: int = 1000
    checkpoints: tuple[int, ...] = ()
    n_grid: int = DEFAULT_GRID
    half_width: int = DEFAULT_HALF_WIDTH
    boundary: str = "periodic"
    probe_times: tuple[int, ...] = DEFAULT_PROBE_TIMES
    wave_time: Optional[int] = None
    trap_radius: int = 20
    xi: tuple[float, ...] = DEFAULT_XI
    radius: int = 10000
    seed: int = 0

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("configuration must be a JSON object")
        if "field" not in data:
            raise ConfigError("configuration needs a 'field' entry")
        try:
            fld = CoinField.from_json_dict(data["field"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid field: {exc}") from exc

        initial = dict(data.get("initial", {"type": "site", "site": 0, "spinor": [1.0, 0.0]}))
        kind = initial.get("type", "site")
        if kind not in INITIAL_TYPES:
            raise ConfigError(f"initial.type must be one of {INITIAL_TYPES}, got {kind!r}")
        initial["type"] = kind
        if kind in ("site", "packet"):
            _parse_spinor(initial.get("spinor", [1.0, 0.0]), "initial.spinor")
        if kind == "site" and not isinstance(initial.get("site", 0), int):
            raise ConfigError("initial.site must be an integer")
        if kind == "packet" and not float(initial.get("width", DEFAULT_PACKET["width"])) > 0:
            raise ConfigError("initial.width must be positive")
        if kind == "random":
            lo, hi = initial.get("lo", -5), initial.get("hi", 5)
            if not (isinstance(lo, int) and isinstance(hi, int) and lo <= hi):
                raise ConfigError("initial.lo/hi must be integers with lo <= hi")

        horizon = _positive_int(data, "horizon", 1000)
        checkpoints = tuple(data.get("checkpoints", [horizon]))
        if any(not isinstance(c, int) or c < 0 or c > horizon for c in checkpoints):
            raise ConfigError("checkpoints must be integers in [0, horizon]")
        probe_times = tuple(data.get("probe_times", DEFAULT_PROBE_TIMES))
        if not probe_times or any(not isinstance(t, int) or t <= 0 for t in probe_times) or list(probe_times) != sorted(set(probe_times)):
            raise ConfigError("probe_times must be strictly increasing positive integers")
        wave_time = data.get("wave_time")
        if wave_time is not None and (not isinstance(wave_time, int) or wave_time < 0):
            raise ConfigError("wave_time must be a nonnegative integer")
        boundary = data.get("boundary", "periodic")
        if boundary not in ("periodic", "reflecting"):
            raise ConfigError(f"unknown boundary {boundary!r}")
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        trap = data.get("trap_radius", 20)
        if not isinstance(trap, int) or trap < 0:
            raise ConfigError("trap_radius must be a nonnegative integer")
        try:
            xi = tuple(float(x) for x in data.get("xi", DEFAULT_XI))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid xi grid: {exc}") from exc
        return cls(
            field=fld,
            field_spec=dict(data["field"]),
            initial=initial,
            horizon=horizon,
            checkpoints=checkpoints,
            n_grid=_positive_int(data, "n_grid", DEFAULT_GRID),
            half_width=_positive_int(data, "half_width", DEFAULT_HALF_WIDTH),
            boundary=boundary,
            probe_times=probe_times,
            wave_time=wave_time,
            trap_radius=trap,
            xi=xi,
            radius=_positive_int(data, "radius", 10000),
            seed=seed,
        )

    def to_dict(self) -> dict:
        return {
            "field": dict(self.field_spec),
            "initial": dict(self.initial),
            "horizon": self.horizon,
            "checkpoints": list(self.checkpoints),
            "n_grid": self.n_grid,
            "half_width": self.half_width,
            "boundary": self.boundary,
            "probe_times": list(self.probe_times),
            "wave_time": self.wave_time,
            "trap_radius": self.trap_radius,
            "xi": list(self.xi),
            "radius": self.radius,
            "seed": self.seed,
        }

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=seed)


def initial_state(cfg: ExperimentConfig, bound_states: Optional[BoundStateSet] = None) -> WalkState:
    init = cfg.initial
    kind = init["type"]
    if kind == "site":
        return delta_state(init.get("site", 0), _parse_spinor(init.get("spinor", [1.0, 0.0])))
    if kind == "packet":
        p = {**DEFAULT_PACKET, **init}
        return gaussian_packet(int(p["center"]), float(p["width"]), float(p["momentum"]), _parse_spinor(p["spinor"]))
    if kind == "random":
        return random_state(np.random.default_rng(cfg.seed), init.get("lo", -5), init.get("hi", 5))
    if bound_states is None:
        bound_states = find_bound_states(cfg.field, cfg.half_width, cfg.boundary)
    idx = init.get("index", 0)
    if not isinstance(idx, int) or not 0 <= idx < len(bound_states):
        raise ConfigError(f"bound state index {idx!r} out of range ({len(bound_states)} states)")
    return bound_states.states[idx].vector


def _check_inside_window(psi: WalkState, cfg: ExperimentConfig) -> None:
    supp = psi.trimmed()
    L = cfg.half_width
    if supp.x_min < -L or supp.x_max > L:
        raise ConfigError(f"initial state support [{supp.x_min}, {supp.x_max}] lies outside the truncation window [-{L}, {L}]")


def trapped_probability(dists: Mapping[int, PositionDistribution], radius: int) -> float:
    """Average of ``P_t(|X_t| <= radius)`` over the supplied distributions."""
    return float(np.mean([d.mass_within(radius) for d in dists.values()]))


@dataclass(frozen=True)
class EvolutionResult:
    distributions: dict[int, PositionDistribution]
    final_norm: float
    first_moment: float
    second_moment: float


def run_evolution(cfg: ExperimentConfig) -> EvolutionResult:
    """Evolve the initial state to the horizon, keeping laws at the checkpoints."""
    psi0 = initial_state(cfg)
    dists: dict[int, PositionDistribution] = {}
    if 0 in cfg.checkpoints:
        dists[0] = position_distribution(psi0)

    def keep(step, amps, x_min):
        dists[step] = position_distribution(WalkState(x_min, amps, psi0.time + step))

    final = evolve(psi0, cfg.field, cfg.horizon, checkpoints=[c for c in cfg.checkpoints if c > 0], callback=keep)
    law = position_distribution(final)
    return EvolutionResult(
        distributions=dict(sorted(dists.items())),
        final_norm=final.norm(),
        first_moment=law.moment(1, cfg.horizon),
        second_moment=law.moment(2, cfg.horizon),
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Empirical law of ``X_t / t`` against the theoretical limit law.

    ``atom_weight_error`` compares the theoretical mass at zero with the
    time-averaged probability of ``|X_s| <= trap_radius`` over ``s`` in
    ``[t/2, t]``.
    """

    ks_distance: float
    moment_errors: dict[int, float]
    charfn_errors: dict[float, float]
    atom_weight: float
    point_mass_weight: float
    trapped_probability: float
    atom_weight_error: float
    mixture_mass: float
    empirical: VelocityMeasure = field(repr=False)
    theory: VelocityMeasure = field(repr=False)

    @property
    def charfn_error(self) -> float:
        return max(self.charfn_errors.values()) if self.charfn_errors else 0.0

    def summary(self) -> dict:
        return {
            "ks_distance": self.ks_distance,
            "moment_errors": {str(k): v for k, v in self.moment_errors.items()},
            "charfn_errors": {repr(k): v for k, v in self.charfn_errors.items()},
            "charfn_error_max": self.charfn_error,
            "atom_weight": self.atom_weight,
            "point_mass_weight": self.point_mass_weight,
            "trapped_probability": self.trapped_probability,
            "atom_weight_error": self.atom_weight_error,
            "mixture_mass": self.mixture_mass,
        }


def theoretical_law(cfg: ExperimentConfig, psi0: WalkState) -> tuple[VelocityMeasure, float]:
    """Limit law of ``X_t / t`` and the bound-state weight ``||Pi_p psi0||^2``."""
    bands = decompose_bands(cfg.field.limit_coin, cfg.n_grid)
    if cfg.field.is_free:
        return velocity_pushforward(psi0, bands), 0.0
    _check_inside_window(psi0, cfg)
    bs = find_bound_states(cfg.field, cfg.half_width, cfg.boundary)
    t_wave = cfg.horizon if cfg.wave_time is None else cfg.wave_time
    mu = perturbed_velocity_measure(psi0, cfg.field, bands, bs, t_wave)
    return mu, point_mass_weight(bs, psi0, cfg.field)


def run_limit_compare(cfg: ExperimentConfig) -> ComparisonReport:
    psi0 = initial_state(cfg)
    theory, w_p = theoretical_law(cfg, psi0)

    t = cfg.horizon
    window = range(max(1, t // 2), t + 1)
    trapped_masses: list[float] = []

    def keep(step, amps, x_min):
        x = np.arange(x_min, x_min + amps.shape[0])
        near = np.abs(x) <= cfg.trap_radius
        trapped_masses.append(float(np.sum(np.abs(amps[near]) ** 2)))

    final = evolve(psi0, cfg.field, t, checkpoints=window, callback=keep)
    law = position_distribution(final)
    emp = empirical_velocity_law(law)

    trapped = float(np.mean(trapped_masses))
    atom = theory.atom_weight_at(0.0)
    xi = np.array(cfg.xi)
    cf_emp, cf_theo = emp.charfn(xi), theory.charfn(xi)
    return ComparisonReport(
        ks_distance=ks_distance(emp, theory),
        moment_errors={m: abs(law.moment(m, t) - theory.moment(m)) for m in (1, 2)},
        charfn_errors={float(x): float(abs(a - b)) for x, a, b in zip(xi, cf_emp, cf_theo)},
        atom_weight=atom,
        point_mass_weight=w_p,
        trapped_probability=trapped,
        atom_weight_error=abs(trapped - atom),
        mixture_mass=theory.total_mass,
        empirical=emp,
        theory=theory,
    )


@dataclass(frozen=True)
class WaveProbeReport:
    forward: WaveProbe
    backward: WaveProbe
    projected: bool

    def summary(self) -> dict:
        out = {"projected_backward_input": self.projected}
        for name, p in (("forward", self.forward), ("backward", self.backward)):
            out[name] = {
                "times": list(p.times),
                "residuals": [float(r) for r in p.residuals],
                "strictly_decreasing": p.strictly_decreasing,
                "converging": p.converging(),
                "flag": None if p.converging() else "residuals not decaying below tolerance",
            }
        return out


def run_wave_probe(cfg: ExperimentConfig) -> WaveProbeReport:
    """Dyadic Cauchy residuals of ``W_t psi0`` and ``W_t^* psi0``.

    The backward probe removes the bound-state projection first, except when
    the initial state is itself a bound state.
    """
    bs = None
    if cfg.initial["type"] == "bound_state" or not cfg.field.is_free:
        bs = find_bound_states(cfg.field, cfg.half_width, cfg.boundary)
    psi0 = initial_state(cfg, bs)
    fwd = probe_wave(psi0, cfg.field, cfg.probe_times, "forward")
    projected = bs is not None and cfg.initial["type"] != "bound_state"
    back_in = psi0
    if projected:
        _check_inside_window(psi0, cfg)
        back_in, _ = ac_component(psi0, bs)
    bwd = probe_wave(back_in, cfg.field, cfg.probe_times, "backward")
    return WaveProbeReport(fwd, bwd, projected)


@dataclass(frozen=True)
class SpectrumReport:
    bound_states: BoundStateSet
    weight: float

    def summary(self) -> dict:
        return {
            "half_width": self.bound_states.half_width,
            "verified_half_width": 2 * self.bound_states.half_width,
            "boundary": self.bound_states.boundary,
            "count": len(self.bound_states),
            "thetas": [s.theta for s in self.bound_states.states],
            "decay_rates": [None if math.isnan(s.decay_rate) else s.decay_rate for s in self.bound_states.states],
            "point_mass_weight": self.weight,
        }


def run_spectrum(cfg: ExperimentConfig) -> SpectrumReport:
    """Bound states at ``L`` (cross-checked at ``2L``) and the weight of ``psi0``."""
    if cfg.initial["type"] != "bound_state":
        psi0 = initial_state(cfg)
        _check_inside_window(psi0, cfg)
    bs = find_bound_states(cfg.field, cfg.half_width, cfg.boundary)
    psi0 = initial_state(cfg, bs)
    return SpectrumReport(bs, point_mass_weight(bs, psi0, cfg.field))


def run_trace_norm(cfg: ExperimentConfig) -> TraceNormDiagnostic:
    return trace_norm_partial(cfg.field, cfg.radius)
