import json

import numpy as np
import pytest

from coinwalk.coins import (
    CoinField,
    as_coin,
    coin_blocks,
    coin_from_floats,
    coin_to_floats,
    hadamard_coin,
    make_coin_field,
    random_coin,
    rotation,
    sigma_x_coin,
)

H = hadamard_coin()


def test_as_coin_rejects_non_unitary():
    with pytest.raises(ValueError, match="not unitary"):
        as_coin([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ValueError, match="shape"):
        as_coin(np.eye(3))


def test_blocks_sum_to_coin():
    rng = np.random.default_rng(3)
    c = random_coin(rng)
    p, q = coin_blocks(c)
    assert np.array_equal(p + q, c)
    assert np.all(p[1] == 0) and np.all(q[0] == 0)


def test_one_defect_assignment():
    f = make_coin_field("one_defect", C0=H, defect=np.eye(2))
    assert np.array_equal(f.coin_at(0), np.eye(2))
    assert np.array_equal(f.coin_at(5), H)
    assert np.array_equal(f.coin_at(-7), H)
    assert not f.is_free


def test_homogeneous_everywhere():
    f = make_coin_field("homogeneous", C0=H)
    assert all(np.array_equal(c, H) for c in f.coins(-20, 20))
    assert f.is_free


def test_defect_equal_to_limit_is_free():
    assert make_coin_field("one_defect", C0=H, defect=H).is_free


def test_finite_defects():
    f = make_coin_field("finite_defects", C0=H, defects={-2: np.eye(2), 3: sigma_x_coin()})
    cs = f.coins(-3, 4)
    assert np.array_equal(cs[1], np.eye(2))
    assert np.array_equal(cs[6], sigma_x_coin())
    assert np.array_equal(cs[0], H)


def test_power_decay_bound_at_three():
    f = make_coin_field("power_decay", C0=H, c1=0.5, eps=1.0)
    # oracle: operator norm of the 2x2 difference evaluated directly
    diff = np.linalg.norm(f.coin_at(3) - H, ord=2)
    assert diff <= 0.5 * 3.0**-2
    assert f.decay_excess(1000) <= 1e-14


def test_power_decay_default_rule_is_rotation():
    f = make_coin_field("power_decay", C0=H, c1=0.5, eps=1.0)
    assert np.allclose(f.coin_at(4), rotation(0.5 / 16) @ H, atol=1e-15)
    # the angle is capped at pi at the origin
    assert np.allclose(f.coin_at(0), -H, atol=1e-15)
    for c in f.coins(-50, 50):
        as_coin(c)


def test_power_decay_custom_rule():
    def rule(x):
        return np.diag([np.exp(0.1j / (1 + x * x)), 1.0]) @ H

    f = make_coin_field("power_decay", C0=H, c1=0.1, eps=1.0, rule=rule)
    assert np.allclose(f.coin_at(2), rule(2))
    with pytest.raises(ValueError):
        f.to_json_dict()
    assert len(f.fingerprint()) == 16


@pytest.mark.parametrize("params", [{"c1": 0.0, "eps": 1.0}, {"c1": 1.0, "eps": -1.0}, {"c1": 1.0}])
def test_power_decay_rejects_bad_params(params):
    with pytest.raises(ValueError):
        make_coin_field("power_decay", C0=H, **params)


def test_rejects_non_unitary_defect():
    with pytest.raises(ValueError):
        make_coin_field("one_defect", C0=H, defect=[[1, 0], [0, 2]])


def test_json_round_trip():
    for f in (
        make_coin_field("homogeneous", C0=H),
        make_coin_field("one_defect", C0=H, defect=np.eye(2)),
        make_coin_field("finite_defects", C0=H, defects={1: np.eye(2), -4: sigma_x_coin()}),
        make_coin_field("power_decay", C0=H, c1=0.5, eps=1.0),
    ):
        data = json.loads(json.dumps(f.to_json_dict()))
        g = CoinField.from_json_dict(data)
        assert g.fingerprint() == f.fingerprint()
        assert np.array_equal(g.coins(-10, 10), f.coins(-10, 10))


def test_json_layout():
    d = make_coin_field("one_defect", C0=H, defect=np.eye(2)).to_json_dict()
    assert d["kind"] == "one_defect"
    assert d["C0"] == pytest.approx([2**-0.5, 0, 2**-0.5, 0, 2**-0.5, 0, -(2**-0.5), 0])
    assert d["defects"] == [{"x": 0, "matrix": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]}]
    assert coin_from_floats(coin_to_floats(H)).tolist() == H.tolist()


def test_fingerprint_distinguishes_fields():
    a = make_coin_field("one_defect", C0=H, defect=np.eye(2))
    b = make_coin_field("one_defect", C0=H, defect=sigma_x_coin())
    assert a.fingerprint() != b.fingerprint()
