import numpy as np
import pytest

from coinwalk.coins import hadamard_coin, make_coin_field
from coinwalk.errors import ConfigError
from coinwalk.experiments import (
    ExperimentConfig,
    initial_state,
    run_evolution,
    run_limit_compare,
    run_spectrum,
    run_trace_norm,
    run_wave_probe,
)

H = hadamard_coin()
HOM = make_coin_field("homogeneous", C0=H).to_json_dict()
DEFECT = make_coin_field("one_defect", C0=H, defect=np.eye(2)).to_json_dict()


def cfg(**kw):
    base = {"field": HOM, "initial": {"type": "site", "site": 0, "spinor": [1, 0]}, "horizon": 50}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


@pytest.mark.parametrize(
    "bad",
    [
        {"field": {"kind": "nope"}},
        {"horizon": 0},
        {"horizon": 1.5},
        {"initial": {"type": "site", "spinor": [1, 1]}},
        {"initial": {"type": "teleport"}},
        {"checkpoints": [100]},
        {"probe_times": [8, 4]},
        {"boundary": "open"},
        {"seed": "x"},
        {"field": {"kind": "homogeneous", "C0": [1, 0, 1, 0, 0, 0, 1, 0]}},
    ],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


def test_config_round_trip():
    c = cfg(initial={"type": "packet", "spinor": [[0.6, 0], [0, 0.8]]}, seed=3)
    again = ExperimentConfig.from_dict(c.to_dict())
    assert again.to_dict() == c.to_dict()
    assert again.field == c.field
    assert c.with_seed(9).seed == 9


def test_spinor_pairs_parsed():
    psi = initial_state(cfg(initial={"type": "site", "site": 2, "spinor": [0.6, [0, 0.8]]}))
    assert psi.x_min == 2
    assert np.allclose(psi.amplitudes[0], [0.6, 0.8j])


def test_random_initial_is_seeded():
    a = initial_state(cfg(initial={"type": "random", "lo": -3, "hi": 3}, seed=5))
    b = initial_state(cfg(initial={"type": "random", "lo": -3, "hi": 3}, seed=5))
    c = initial_state(cfg(initial={"type": "random", "lo": -3, "hi": 3}, seed=6))
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert not np.array_equal(a.amplitudes, c.amplitudes)


def test_run_evolution_checkpoints():
    res = run_evolution(cfg(horizon=20, checkpoints=[0, 10, 20]))
    assert sorted(res.distributions) == [0, 10, 20]
    assert res.distributions[10].time == 10
    assert res.final_norm == pytest.approx(1.0, abs=1e-12)


def test_limit_compare_free_walk_has_no_atom():
    rep = run_limit_compare(cfg(horizon=200, n_grid=1024))
    assert rep.point_mass_weight == 0.0
    assert rep.atom_weight == 0.0
    assert rep.mixture_mass == pytest.approx(1.0, abs=1e-12)
    assert rep.ks_distance < 0.1
    assert set(rep.summary()) >= {"ks_distance", "atom_weight_error", "mixture_mass"}


def test_limit_compare_defect_atom_matches_spectral_weight():
    rep = run_limit_compare(cfg(field=DEFECT, horizon=300, n_grid=2048, half_width=60))
    assert rep.atom_weight == pytest.approx(rep.point_mass_weight, abs=1e-6)
    assert rep.atom_weight_error < 1e-2


def test_wave_probe_report_flags():
    rep = run_wave_probe(cfg(field=DEFECT, half_width=60, initial={"type": "bound_state", "index": 0}, probe_times=[16, 32]))
    s = rep.summary()
    assert not rep.projected
    assert s["backward"]["flag"] is not None


def test_spectrum_rejects_state_outside_window():
    with pytest.raises(ConfigError, match="outside the truncation window"):
        run_spectrum(cfg(field=DEFECT, initial={"type": "site", "site": 10_000, "spinor": [1, 0]}))


def test_bound_state_index_checked():
    with pytest.raises(ConfigError):
        run_spectrum(cfg(field=DEFECT, half_width=60, initial={"type": "bound_state", "index": 5}))


def test_trace_norm_radius():
    field = make_coin_field("power_decay", C0=H, c1=0.5, eps=1.0).to_json_dict()
    d = run_trace_norm(cfg(field=field, radius=30))
    assert d.radius == 30
