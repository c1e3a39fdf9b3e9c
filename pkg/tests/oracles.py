"""Independent reference computations used by the tests.

Nothing here calls into the package's closed forms: limit laws are integrated
numerically and group velocities are finite differences of LAPACK eigenvalues.
"""

import numpy as np
from scipy import integrate

R = 1.0 / np.sqrt(2.0)


def _density_in_angle(phi, c, r):
    # (1 - c v) f_K(v; r) dv with v = r sin(phi); the endpoint singularity cancels
    s = np.sqrt(1.0 - r * r)
    return s * (1.0 - c * r * np.sin(phi)) / (np.pi * (1.0 - (r * np.sin(phi)) ** 2))


def quad_limit_cdf(points, c, r=R):
    """``int_{-r}^{v} (1 - c u) f_K(u; r) du`` at each point, by adaptive quadrature."""
    pts = np.asarray(points, dtype=float)
    phis = np.arcsin(np.clip(pts, -r, r) / r)
    order = np.argsort(phis)
    out = np.empty(pts.size)
    acc, prev = 0.0, -np.pi / 2
    for i in order:
        if phis[i] > prev:
            acc += integrate.quad(_density_in_angle, prev, phis[i], args=(c, r), epsabs=1e-14, epsrel=1e-13)[0]
            prev = phis[i]
        out[i] = acc
    return out


def quad_moment(m, c, r=R):
    val, _ = integrate.quad(
        lambda phi: (r * np.sin(phi)) ** m * _density_in_angle(phi, c, r), -np.pi / 2, np.pi / 2, epsabs=1e-14
    )
    return val


def symbol_matrix(k, coin):
    return np.diag([np.exp(1j * k), np.exp(-1j * k)]) @ coin


def fd_velocities(k, coin, lam, h=1e-5):
    """``-d arg(lambda_j)/dk`` by central differences, tracking each eigenvalue by proximity."""
    plus = np.linalg.eigvals(symbol_matrix(k + h, coin))
    minus = np.linalg.eigvals(symbol_matrix(k - h, coin))
    out = []
    for lj in lam:
        lp = plus[np.argmin(np.abs(plus - lj))]
        lm = minus[np.argmin(np.abs(minus - lj))]
        out.append(-np.angle(lp / lm) / (2 * h))
    return np.array(out)


def hadamard_band_eigenvalues(k):
    """``((-1)^j sqrt(1 + cos^2 k) + i sin k) / sqrt 2`` for ``j = 0, 1``."""
    w = np.sqrt(1.0 + np.cos(k) ** 2)
    return np.array([(w + 1j * np.sin(k)) * R, (-w + 1j * np.sin(k)) * R])
