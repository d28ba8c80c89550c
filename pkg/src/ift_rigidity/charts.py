"""Built-in map pairs used by the demos and tests.

* parabola: ``phi(x) = (s x, s^2 x^2)``, ``psi(y) = y2 - y1^2``
* circle: ``phi(x) = (sin x, cos x - 1)``, ``psi(y) = y1^2 + (y2 + 1)^2 - 1``
* shrinking: ``X = 0``, ``psi(v) = ||v|| v + A v`` on N-space with
  ``A e_k = -e_k / k``.  The truncations of an injective operator whose range
  is not closed; the certified radius collapses as N grows.
"""

from __future__ import annotations

import numpy as np

from .ift import DifferentiableMap, certify_neighborhood


def parabola_phi(scale=1.0, domain_radius=1.0):
    s = float(scale)
    return DifferentiableMap(
        lambda x: np.array([s * x[0], (s * x[0]) ** 2]),
        1, 2,
        jac=lambda x: np.array([[s], [2.0 * s * s * x[0]]]),
        deriv_lipschitz=2.0 * s * s,
        domain_radius=domain_radius,
        name=f"parabola_phi(scale={s:g})",
    )


def parabola_psi(domain_radius=1.0):
    return DifferentiableMap(
        lambda y: np.array([y[1] - y[0] ** 2]),
        2, 1,
        jac=lambda y: np.array([[-2.0 * y[0], 1.0]]),
        deriv_lipschitz=2.0,
        domain_radius=domain_radius,
        name="parabola_psi",
    )


def circle_phi(domain_radius=1.0):
    # ||dphi(x) - dphi(x')|| = 2 |sin((x - x')/2)| <= |x - x'|
    return DifferentiableMap(
        lambda x: np.array([np.sin(x[0]), np.cos(x[0]) - 1.0]),
        1, 2,
        jac=lambda x: np.array([[np.cos(x[0])], [-np.sin(x[0])]]),
        deriv_lipschitz=1.0,
        domain_radius=domain_radius,
        name="circle_phi",
    )


def circle_psi(domain_radius=1.0):
    return DifferentiableMap(
        lambda y: np.array([y[0] ** 2 + (y[1] + 1.0) ** 2 - 1.0]),
        2, 1,
        jac=lambda y: np.array([[2.0 * y[0], 2.0 * (y[1] + 1.0)]]),
        deriv_lipschitz=2.0,
        domain_radius=domain_radius,
        name="circle_psi",
    )


def parabola_pair():
    return parabola_phi(), parabola_psi()


def circle_pair():
    return circle_phi(), circle_psi()


def shrinking_pair(n):
    """The N-dimensional truncation of the non-closed-range counterexample."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    a = -1.0 / np.arange(1, n + 1)

    def psi_fun(v):
        return np.linalg.norm(v) * v + a * v

    def psi_jac(v):
        r = np.linalg.norm(v)
        j = np.diag(a) + r * np.eye(n)
        if r > 0:
            j += np.outer(v, v) / r
        return j

    phi = DifferentiableMap(lambda x: np.zeros(n), 0, n, jac=lambda x: np.zeros((n, 0)),
                            deriv_lipschitz=0.0, name="zero map")
    # d(||v|| v) = ||v|| I + ||v|| n n^T with n = v/||v||: the first term moves by
    # at most ||v - w||, the second by at most 2 ||v - w||.
    psi = DifferentiableMap(psi_fun, n, n, jac=psi_jac, deriv_lipschitz=3.0,
                            name=f"shrinking_psi(N={n})")
    return phi, psi


def shrinking_witness(n):
    """The zero ``e_N / N`` of the truncated ``psi`` that ``phi = 0`` misses."""
    v = np.zeros(n)
    v[-1] = 1.0 / n
    return v


def shrinking_radius_demo(n):
    """Certified radius of W for the N-dimensional truncation."""
    phi, psi = shrinking_pair(n)
    return certify_neighborhood(phi, psi).w_radius


def shrinking_radius_table(n_max):
    """Rows ``(N, C, delta, w_radius, ||witness||)`` for ``N = 1..n_max``."""
    rows = []
    for n in range(1, n_max + 1):
        phi, psi = shrinking_pair(n)
        c = certify_neighborhood(phi, psi)
        rows.append((n, c.cmax, c.delta, c.w_radius, float(np.linalg.norm(shrinking_witness(n)))))
    return rows
