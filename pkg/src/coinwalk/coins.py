"""Coin matrices and position-dependent coin fields on the integer lattice.

A coin field assigns a 2x2 unitary ``C(x)`` to every site ``x``.  All
fields carry a homogeneous limit coin ``C0``; the supported families are

- ``homogeneous``:   ``C(x) = C0`` everywhere,
- ``one_defect``:    ``C(0) = C0'`` and ``C(x) = C0`` elsewhere,
- ``finite_defects``: finitely many sites carry their own coin,
- ``power_decay``:   ``||C(x) - C0|| <= c1 |x|^(-1-eps)`` for ``x != 0``.

Coins are plain ``complex128`` arrays of shape ``(2, 2)`` laid out as
``[[a, b], [c, d]]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.stats import unitary_group

__all__ = [
    "UNITARY_TOL",
    "CoinField",
    "as_coin",
    "coin_blocks",
    "coin_from_floats",
    "coin_to_floats",
    "hadamard_coin",
    "make_coin_field",
    "random_coin",
    "rotation",
    "sigma_x_coin",
    "sigma_z_coin",
]

UNITARY_TOL = 1e-12

FIELD_KINDS = ("homogeneous", "one_defect", "finite_defects", "power_decay")

CoinRule = Callable[[int], NDArray[np.complex128]]


def as_coin(matrix, tol: float = UNITARY_TOL) -> NDArray[np.complex128]:
    """Validate ``matrix`` as a 2x2 unitary and return a read-only copy.

    Raises
    ------
    ValueError
        If the shape is wrong or ``C*C`` differs from the identity by more
        than ``tol`` in any entry.
    """
    m = np.array(matrix, dtype=np.complex128)
    if m.shape != (2, 2):
        raise ValueError(f"coin must have shape (2, 2), got {m.shape}")
    err = np.abs(m.conj().T @ m - np.eye(2)).max()
    if err > tol:
        raise ValueError(f"coin is not unitary (max |C*C - I| = {err:.3e})")
    m.flags.writeable = False
    return m


def coin_blocks(coin) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Split a coin into ``P = [[a, b], [0, 0]]`` and ``Q = [[0, 0], [c, d]]``."""
    c = np.asarray(coin, dtype=np.complex128)
    p = np.zeros((2, 2), dtype=np.complex128)
    q = np.zeros((2, 2), dtype=np.complex128)
    p[0] = c[0]
    q[1] = c[1]
    return p, q


def hadamard_coin() -> NDArray[np.complex128]:
    return as_coin(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0))


def sigma_x_coin() -> NDArray[np.complex128]:
    return as_coin([[0.0, 1.0], [1.0, 0.0]])


def sigma_z_coin() -> NDArray[np.complex128]:
    return as_coin([[1.0, 0.0], [0.0, -1.0]])


def rotation(theta: float) -> NDArray[np.complex128]:
    """Real rotation ``[[cos, -sin], [sin, cos]]``; ``||R(theta) - I|| = 2|sin(theta/2)|``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def random_coin(rng: np.random.Generator) -> NDArray[np.complex128]:
    """Haar-random element of U(2)."""
    return as_coin(unitary_group.rvs(2, random_state=rng), tol=1e-10)


def coin_to_floats(coin) -> list[float]:
    """Row-major ``[re a, im a, re b, im b, re c, im c, re d, im d]``."""
    c = np.asarray(coin, dtype=np.complex128).ravel()
    out: list[float] = []
    for z in c:
        out.extend([float(z.real), float(z.imag)])
    return out


def coin_from_floats(values) -> NDArray[np.complex128]:
    v = np.asarray(values, dtype=float)
    if v.shape != (8,):
        raise ValueError(f"coin needs 8 floats, got shape {v.shape}")
    return as_coin((v[0::2] + 1j * v[1::2]).reshape(2, 2), tol=1e-10)


@dataclass(frozen=True, eq=False)
class CoinField:
    """Site-dependent coin assignment with a homogeneous limit.

    Attributes
    ----------
    kind:
        One of ``homogeneous``, ``one_defect``, ``finite_defects``,
        ``power_decay``.
    limit_coin:
        The limit coin ``C0``.
    defects:
        Sites whose coin differs from ``C0`` (defect families only).
    c1, eps:
        Decay parameters; always set for ``power_decay``.
    rule:
        Optional user rule ``x -> C(x)`` for ``power_decay``.  When absent the
        default ``C(x) = R(theta_x) C0`` with
        ``theta_x = min(c1 |x|^(-1-eps), pi)`` is used.
    """

    kind: str
    limit_coin: NDArray[np.complex128]
    defects: Mapping[int, NDArray[np.complex128]] = field(default_factory=dict)
    c1: Optional[float] = None
    eps: Optional[float] = None
    rule: Optional[CoinRule] = None

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown coin field kind {self.kind!r}")

    @property
    def decay_params(self) -> Optional[tuple[float, float]]:
        if self.c1 is None or self.eps is None:
            return None
        return self.c1, self.eps

    @property
    def is_free(self) -> bool:
        """True when ``C(x) = C0`` at every site, i.e. ``U = U0``."""
        if self.kind == "homogeneous":
            return True
        if self.kind == "power_decay":
            return False
        return all(np.array_equal(m, self.limit_coin) for m in self.defects.values())

    def coin_at(self, x: int) -> NDArray[np.complex128]:
        return self.coins(x, x)[0]

    def coins(self, lo: int, hi: int) -> NDArray[np.complex128]:
        """Coins for sites ``lo..hi`` inclusive, shape ``(hi - lo + 1, 2, 2)``."""
        n = hi - lo + 1
        if n <= 0:
            return np.zeros((0, 2, 2), dtype=np.complex128)
        if self.kind == "power_decay":
            return self._decay_coins(lo, hi)
        out = np.broadcast_to(self.limit_coin, (n, 2, 2)).copy()
        for x, m in self.defects.items():
            if lo <= x <= hi:
                out[x - lo] = m
        return out

    def _decay_coins(self, lo: int, hi: int) -> NDArray[np.complex128]:
        xs = np.arange(lo, hi + 1)
        if self.rule is not None:
            out = np.empty((xs.size, 2, 2), dtype=np.complex128)
            for i, x in enumerate(xs):
                out[i] = as_coin(self.rule(int(x)))
            return out
        with np.errstate(divide="ignore"):
            theta = self.c1 * np.abs(xs).astype(float) ** (-1.0 - self.eps)
        theta = np.minimum(theta, np.pi)
        c, s = np.cos(theta), np.sin(theta)
        rot = np.empty((xs.size, 2, 2), dtype=np.complex128)
        rot[:, 0, 0] = c
        rot[:, 0, 1] = -s
        rot[:, 1, 0] = s
        rot[:, 1, 1] = c
        return rot @ self.limit_coin

    def decay_excess(self, radius: int) -> float:
        """Largest ``||C(x) - C0|| - c1 |x|^(-1-eps)`` over ``0 < |x| <= radius``.

        A nonpositive value means the decay condition holds on the sample;
        positive values of order 1e-16 come from forming the difference in
        floating point once the angle is tiny.
        """
        if self.decay_params is None:
            raise ValueError("field has no decay parameters")
        xs = np.concatenate([np.arange(-radius, 0), np.arange(1, radius + 1)])
        diff = self.coins(-radius, radius) - self.limit_coin
        diff = np.delete(diff, radius, axis=0)
        norms = np.linalg.norm(diff, ord=2, axis=(1, 2))
        bound = self.c1 * np.abs(xs).astype(float) ** (-1.0 - self.eps)
        return float((norms - bound).max())

    def to_json_dict(self) -> dict:
        if self.rule is not None:
            raise ValueError("coin fields with a custom rule cannot be serialized")
        return {
            "kind": self.kind,
            "C0": coin_to_floats(self.limit_coin),
            "defects": [
                {"x": int(x), "matrix": coin_to_floats(m)}
                for x, m in sorted(self.defects.items())
            ],
            "c1": self.c1,
            "eps": self.eps,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "CoinField":
        kind = data.get("kind")
        c0 = coin_from_floats(data["C0"])
        defects = {int(d["x"]): coin_from_floats(d["matrix"]) for d in data.get("defects", [])}
        if kind == "homogeneous":
            return make_coin_field("homogeneous", C0=c0)
        if kind == "one_defect":
            if set(defects) != {0}:
                raise ValueError("one_defect field needs exactly one defect at x = 0")
            return make_coin_field("one_defect", C0=c0, defect=defects[0])
        if kind == "finite_defects":
            return make_coin_field("finite_defects", C0=c0, defects=defects)
        if kind == "power_decay":
            return make_coin_field("power_decay", C0=c0, c1=data.get("c1"), eps=data.get("eps"))
        raise ValueError(f"unknown coin field kind {kind!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoinField):
            return NotImplemented
        return self.rule is other.rule and self.fingerprint() == other.fingerprint()

    def __hash__(self) -> int:
        return hash(self.fingerprint())

    def fingerprint(self) -> str:
        """Stable identifier used to tie derived objects to this field."""
        if self.rule is None:
            payload = json.dumps(self.to_json_dict(), sort_keys=True)
        else:
            payload = json.dumps(
                {
                    "kind": self.kind,
                    "C0": coin_to_floats(self.limit_coin),
                    "c1": self.c1,
                    "eps": self.eps,
                    "rule": f"{self.rule.__module__}.{getattr(self.rule, '__qualname__', repr(self.rule))}",
                },
                sort_keys=True,
            )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def make_coin_field(kind: str, **params) -> CoinField:
    """Build a :class:`CoinField`.

    Parameters by kind::

        homogeneous     C0
        one_defect      C0, defect
        finite_defects  C0, defects={x: matrix}
        power_decay     C0, c1, eps, rule=None

    Raises
    ------
    ValueError
        On non-unitary matrices, nonpositive ``c1``/``eps``, unknown kinds or
        missing parameters.
    """
    if "C0" not in params:
        raise ValueError("limit coin C0 is required")
    c0 = as_coin(params["C0"])
    if kind == "homogeneous":
        return CoinField("homogeneous", c0)
    if kind == "one_defect":
        return CoinField("one_defect", c0, {0: as_coin(params["defect"])})
    if kind == "finite_defects":
        defects = {int(x): as_coin(m) for x, m in params.get("defects", {}).items()}
        return CoinField("finite_defects", c0, defects)
    if kind == "power_decay":
        c1, eps = params.get("c1"), params.get("eps")
        if c1 is None or eps is None or not (c1 > 0 and eps > 0):
            raise ValueError(f"power_decay needs c1 > 0 and eps > 0 (got c1={c1}, eps={eps})")
        return CoinField("power_decay", c0, {}, float(c1), float(eps), params.get("rule"))
    raise ValueError(f"unknown coin field kind {kind!r}")
