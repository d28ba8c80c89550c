"""Constructive implicit function theorem on finite-dimensional truncations.

Given ``phi: X -> Y`` and ``psi: Y -> Z`` with ``phi(0) = 0``,
``psi o phi = 0`` and ``im dphi(0) = ker dpsi(0)``, there is a ball ``W``
around 0 in ``Y`` on which every zero of ``psi`` is a value of ``phi``.
:func:`certify_neighborhood` computes the radius of ``W`` and
:func:`solve_fiber` finds the preimage by the contraction

    u_n = phi(x_n) - y
    v_n = sigma(u_n - tau(dpsi(0) u_n))
    x_{n+1} = x_n - v_n

where ``sigma`` and ``tau`` are minimum-norm right inverses of ``dphi(0)``
and ``dpsi(0)``.  Inside ``W`` the residual halves at every step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.stats import qmc

from ._validation import check_vector
from .exceptions import (
    ChainConditionFailed,
    Diverged,
    ExactnessFailed,
    MaxIterations,
    NotEmbedding,
    NotInFiber,
    NotInNeighborhood,
    OutOfChart,
)
from .linops import (
    bound_constants,
    embedding_radius,
    inverse_compose,
    numerical_rank,
    operator_norm,
    rank_threshold,
    right_inverse,
    singular_values,
)

logger = logging.getLogger(__name__)

LIPSCHITZ_FLOOR = 1e-12


def finite_difference_jacobian(fun, x, h=1e-5, codomain_dim=None):
    """Central-difference Jacobian of ``fun`` at ``x``."""
    x = np.asarray(x, dtype=float)
    if codomain_dim is None:
        codomain_dim = np.asarray(fun(x)).shape[0]
    jac = np.empty((codomain_dim, x.shape[0]))
    for k in range(x.shape[0]):
        step = np.zeros_like(x)
        step[k] = h
        jac[:, k] = (np.asarray(fun(x + step)) - np.asarray(fun(x - step))) / (2.0 * h)
    return jac


@dataclass(frozen=True)
class DifferentiableMap:
    """A C^1 map between coordinate spaces.

    ``fun`` evaluates the map.  ``jac`` returns the Jacobian matrix; when it
    is omitted central differences with step ``fd_step`` are used.
    ``deriv_lipschitz`` bounds ``||dF(x) - dF(x')|| / ||x - x'||`` on the ball
    of radius ``domain_radius``; ``None`` means "estimate by sampling".
    """

    fun: Callable
    domain_dim: int
    codomain_dim: int
    jac: Optional[Callable] = None
    deriv_lipschitz: Optional[float] = None
    domain_radius: float = math.inf
    fd_step: float = 1e-5
    name: str = ""

    def __post_init__(self):
        if self.domain_dim < 0 or self.codomain_dim < 0:
            raise ValueError("dimensions must be nonnegative")
        if not self.domain_radius > 0:
            raise ValueError(f"domain_radius must be positive, got {self.domain_radius}")
        if self.deriv_lipschitz is not None and self.deriv_lipschitz < 0:
            raise ValueError("deriv_lipschitz must be nonnegative")

    def __call__(self, x):
        x = check_vector(x, self.domain_dim)
        out = np.asarray(self.fun(x), dtype=float).reshape(-1)
        if out.shape[0] != self.codomain_dim:
            raise ValueError(f"{self.name or 'map'} returned length {out.shape[0]}, "
                             f"expected {self.codomain_dim}")
        return out

    evaluate = __call__

    def jacobian(self, x):
        x = check_vector(x, self.domain_dim)
        if self.jac is None:
            return finite_difference_jacobian(self.fun, x, self.fd_step, self.codomain_dim)
        j = np.asarray(self.jac(x), dtype=float).reshape(self.codomain_dim, self.domain_dim)
        return j


def check_jacobian(fmap, points, h=1e-5):
    """Largest relative deviation between ``fmap.jacobian`` and central
    differences over ``points``."""
    worst = 0.0
    for p in points:
        p = check_vector(p, fmap.domain_dim)
        declared = fmap.jacobian(p)
        fd = finite_difference_jacobian(fmap, p, h, fmap.codomain_dim)
        scale = max(np.abs(declared).max(initial=0.0), 1.0)
        worst = max(worst, float(np.abs(declared - fd).max(initial=0.0)) / scale)
    return worst


def _ball_points(dim, radius, n, rng):
    if dim == 0:
        return np.zeros((n, 0))
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius * rng.random((n, 1)) ** (1.0 / dim)


def _sample_radius(fmap, default=1.0):
    return min(fmap.domain_radius, default)


def estimate_deriv_lipschitz(fmap, radius=None, n_pairs=1000, seed=0):
    """Heuristic Lipschitz bound for the derivative: the largest difference
    quotient over random pairs in a ball.  Not a certificate."""
    if fmap.domain_dim == 0:
        return 0.0
    radius = _sample_radius(fmap) if radius is None else radius
    rng = np.random.default_rng(seed)
    a = _ball_points(fmap.domain_dim, radius, n_pairs, rng)
    b = _ball_points(fmap.domain_dim, radius, n_pairs, rng)
    best = 0.0
    for p, q in zip(a, b):
        dist = np.linalg.norm(p - q)
        if dist == 0:
            continue
        best = max(best, operator_norm(fmap.jacobian(p) - fmap.jacobian(q)) / dist)
    return best


@dataclass(frozen=True)
class IftConstants:
    """Certified constants for a pair ``(phi, psi)``.

    ``w_radius`` is the radius of the ball ``W`` in ``Y`` on which fibres are
    solved; ``x0_radius`` bounds admissible starting points.
    """

    c1: float
    c2: float
    cmax: float
    delta: float
    w_radius: float
    x0_radius: float
    lipschitz: float
    lipschitz_heuristic: bool = False
    rank_tol: Optional[float] = None
    rank_scale: Optional[float] = None

    @classmethod
    def from_formulas(cls, c1, c2, cmax, delta, lipschitz, lipschitz_heuristic=False,
                      rank_tol=None, rank_scale=None):
        c1, c2, cmax, delta, lipschitz = map(float, (c1, c2, cmax, delta, lipschitz))
        return cls(c1, c2, cmax, delta, delta / (9.0 * cmax ** 3),
                   delta / (162.0 * cmax ** 4), lipschitz, bool(lipschitz_heuristic), rank_tol,
                   rank_scale)


def check_chain_condition(phi, psi, n_samples=100, chain_tol=1e-8, radius=None):
    """Largest scaled ``||psi(phi(x))||`` over Halton points in a ball."""
    radius = _sample_radius(phi, 0.5) if radius is None else radius
    points = [np.zeros(phi.domain_dim)]
    if phi.domain_dim > 0 and n_samples > 1:
        cube = qmc.Halton(d=phi.domain_dim, scramble=False).random(n_samples)[1:]
        points.extend((2.0 * cube - 1.0) * radius / math.sqrt(phi.domain_dim))
    worst = 0.0
    for x in points:
        y = phi(x)
        z = psi(y)
        val = float(np.linalg.norm(z)) / (1.0 + float(np.linalg.norm(y)))
        worst = max(worst, val)
        if val > chain_tol:
            raise ChainConditionFailed(f"||psi(phi(x))|| = {np.linalg.norm(z):.3e} at x = {x}")
    return worst


def certify_neighborhood(phi, psi, n_samples=100, chain_tol=1e-8, rank_tol=None,
                         lipschitz_pairs=1000, seed=0, rank_scale=None):
    """Compute the constants C1, C2, C, delta and the radii of W and of the
    starting ball for the pair ``(phi, psi)``.

    ``delta = min(r_phi, r_psi, 1/(6 C^3 L))`` where ``L`` is the larger of the
    two derivative-Lipschitz bounds, which makes ``||dF(x) - dF(0)|| < 1/(6C^3)``
    on the ball of radius ``delta``.

    ``rank_scale`` floors the reference magnitude of every rank decision; use
    it when a linearisation may be pure rounding noise.
    """
    if phi.codomain_dim != psi.domain_dim:
        raise ValueError(f"phi codomain {phi.codomain_dim} != psi domain {psi.domain_dim}")
    x0 = np.zeros(phi.domain_dim)
    y0 = np.zeros(psi.domain_dim)
    if np.linalg.norm(phi(x0)) > chain_tol:
        raise ChainConditionFailed("phi(0) != 0")
    if np.linalg.norm(psi(y0)) > chain_tol:
        raise ChainConditionFailed("psi(0) != 0")
    check_chain_condition(phi, psi, n_samples, chain_tol)

    dphi0 = phi.jacobian(x0)
    dpsi0 = psi.jacobian(y0)
    rank_phi = numerical_rank(dphi0, rank_tol, rank_scale)
    nullity_psi = psi.domain_dim - numerical_rank(dpsi0, rank_tol, rank_scale)
    if rank_phi != nullity_psi:
        raise ExactnessFailed(f"rank dphi(0) = {rank_phi} but nullity dpsi(0) = {nullity_psi}")
    prod = operator_norm(dpsi0 @ dphi0)
    if prod > 1e-8 * (1.0 + operator_norm(dpsi0) * operator_norm(dphi0)):
        raise ExactnessFailed(f"||dpsi(0) dphi(0)|| = {prod:.3e}: im dphi(0) not in ker dpsi(0)")

    c1, c2, c = bound_constants(dphi0, dpsi0, rank_tol=rank_tol, allow_vacuous=True,
                                scale=rank_scale)

    heuristic = False
    bounds = []
    for k, fmap in enumerate((phi, psi)):
        if fmap.deriv_lipschitz is None:
            heuristic = True
            est = estimate_deriv_lipschitz(fmap, n_pairs=lipschitz_pairs, seed=seed + k)
            logger.info("heuristic derivative-Lipschitz estimate for %s: %.6g",
                        fmap.name or "map", est)
            bounds.append(est)
        else:
            bounds.append(fmap.deriv_lipschitz)
    lip = max(max(bounds), LIPSCHITZ_FLOOR)
    delta = min(phi.domain_radius, psi.domain_radius, 1.0 / (6.0 * c ** 3 * lip))
    return IftConstants.from_formulas(c1, c2, c, delta, lip, heuristic, rank_tol, rank_scale)


@dataclass
class IterationTrace:
    xs: list = field(default_factory=list)
    u_norms: list = field(default_factory=list)
    v_norms: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def x_norms(self):
        return [float(np.linalg.norm(x)) for x in self.xs]

    def halving_ratios(self):
        u = self.u_norms
        return [u[i + 1] / u[i] if u[i] > 0 else 0.0 for i in range(len(u) - 1)]


def solve_fiber(phi, psi, y, constants, tol=None, fiber_tol=1e-8, max_iter=200,
                patience=5, override_radius=False):
    """Find ``x`` with ``phi(x) = y`` for a zero ``y`` of ``psi`` inside W.

    The iteration starts from ``x_0 = 0``.  ``tol`` defaults to
    ``1e-10 * (1 + ||y||)``.

    Returns
    -------
    x : ndarray
    trace : IterationTrace

    Raises
    ------
    NotInFiber
        ``||psi(y)|| > fiber_tol``.
    NotInNeighborhood
        ``||y|| >= constants.w_radius`` and ``override_radius`` is false.
    Diverged
        The residual failed to shrink by a factor 0.9 for ``patience``
        consecutive steps.
    MaxIterations
    """
    y = check_vector(y, phi.codomain_dim, name="y")
    ynorm = float(np.linalg.norm(y))
    if tol is None:
        tol = 1e-10 * (1.0 + ynorm)
    zval = float(np.linalg.norm(psi(y)))
    if zval > fiber_tol:
        raise NotInFiber(f"||psi(y)|| = {zval:.3e} > {fiber_tol:.1e}")
    if ynorm >= constants.w_radius and not override_radius:
        raise NotInNeighborhood(f"||y|| = {ynorm:.6g} >= certified radius {constants.w_radius:.6g}")

    sigma = right_inverse(phi.jacobian(np.zeros(phi.domain_dim)), constants.rank_tol,
                          constants.rank_scale)
    dpsi0 = psi.jacobian(np.zeros(psi.domain_dim))
    tau = right_inverse(dpsi0, constants.rank_tol, constants.rank_scale)

    trace = IterationTrace()
    x = np.zeros(phi.domain_dim)
    stalled = 0
    for n in range(max_iter + 1):
        u = phi(x) - y
        unorm = float(np.linalg.norm(u))
        if not math.isfinite(unorm):
            raise Diverged(f"non-finite residual at step {n}")
        trace.xs.append(x.copy())
        trace.u_norms.append(unorm)
        trace.iterations = n
        if unorm <= tol:
            trace.converged = True
            return x, trace
        if n > 0:
            stalled = stalled + 1 if unorm > 0.9 * trace.u_norms[-2] else 0
            if stalled >= patience:
                raise Diverged(f"residual stalled at {unorm:.3e} after {n} steps")
        if n == max_iter:
            break
        v = sigma.apply(u - tau.apply(dpsi0 @ u))
        trace.v_norms.append(float(np.linalg.norm(v)))
        x = x - v
    raise MaxIterations(f"no convergence in {max_iter} iterations (residual {trace.u_norms[-1]:.3e})")


class QuasiIsometry(NamedTuple):
    c: float
    C: float
    ball_radius: float


def quasi_isometry_constants(f, rank_tol=None, lipschitz_pairs=1000, seed=0):
    """Constants ``c < C`` with ``c||x-y|| <= ||f(x)-f(y)|| <= C||x-y||`` on a
    ball around 0, for ``f`` whose derivative at 0 is an embedding."""
    df0 = f.jacobian(np.zeros(f.domain_dim))
    s = singular_values(df0)
    r = embedding_radius(df0)
    if len(s) == 0 or not r > rank_threshold(s, df0.shape, rank_tol):
        raise NotEmbedding(f"df(0) is not an embedding (sigma_min = {r:.3e})")
    lip = f.deriv_lipschitz
    if lip is None:
        lip = estimate_deriv_lipschitz(f, n_pairs=lipschitz_pairs, seed=seed)
    lip = max(lip, LIPSCHITZ_FLOOR)
    return QuasiIsometry(r / 4.0, operator_norm(df0) + r / 4.0, min(f.domain_radius, r / (4.0 * lip)))


def transition_map(phi1, phi2, psi, x, constants, **solve_opts):
    """Chart change ``phi1^{-1} o phi2`` at ``x`` and its differential
    ``dphi1(x')^{-1} dphi2(x)``.

    ``constants`` certify ``(phi1, psi)``.  Remaining keyword arguments go to
    :func:`solve_fiber`.
    """
    x = check_vector(x, phi2.domain_dim)
    y = phi2(x)
    if not solve_opts.get("override_radius") and np.linalg.norm(y) >= constants.w_radius:
        raise OutOfChart(f"phi2(x) has norm {np.linalg.norm(y):.6g}, outside the certified "
                         f"radius {constants.w_radius:.6g} of phi1")
    x_prime, _ = solve_fiber(phi1, psi, y, constants, **solve_opts)
    differential = inverse_compose(phi1.jacobian(x_prime), phi2.jacobian(x)).matrix
    return x_prime, differential


def recenter(phi, psi, u):
    """Maps ``x -> phi(u + x) - phi(u)`` and ``y -> psi(phi(u) + y)``.

    Certifying the recentred pair shows ``phi`` is open onto the zero set of
    ``psi`` near ``phi(u)``.
    """
    u = check_vector(u, phi.domain_dim, name="u")
    base = phi(u)
    shrink = float(np.linalg.norm(u))
    if shrink >= phi.domain_radius:
        raise OutOfChart("u lies outside the domain of phi")
    phi_u = DifferentiableMap(
        lambda x: phi(u + x) - base, phi.domain_dim, phi.codomain_dim,
        jac=lambda x: phi.jacobian(u + x), deriv_lipschitz=phi.deriv_lipschitz,
        domain_radius=phi.domain_radius - shrink, fd_step=phi.fd_step, name=f"{phi.name}@u")
    psi_u = DifferentiableMap(
        lambda y: psi(base + y), psi.domain_dim, psi.codomain_dim,
        jac=lambda y: psi.jacobian(base + y), deriv_lipschitz=psi.deriv_lipschitz,
        domain_radius=max(psi.domain_radius - float(np.linalg.norm(base)), 1e-300),
        fd_step=psi.fd_step, name=f"{psi.name}@phi(u)")
    return phi_u, psi_u


def kernel_inclusion(psi, rank_tol=None):
    """The linear chart ``x -> B x`` onto ``ker dpsi(0)``, ``B`` with
    orthonormal columns.  Valid as ``phi`` when ``psi`` vanishes on the
    kernel."""
    dpsi0 = psi.jacobian(np.zeros(psi.domain_dim))
    if dpsi0.size == 0:
        basis = np.eye(psi.domain_dim)
    else:
        _, s, vt = np.linalg.svd(dpsi0, full_matrices=True)
        rank = int(np.sum(s > rank_threshold(s, dpsi0.shape, rank_tol))) if s[0] > 0 else 0
        basis = vt[rank:].T
    return DifferentiableMap(lambda x: basis @ x, basis.shape[1], psi.domain_dim,
                             jac=lambda x: basis, deriv_lipschitz=0.0, name="kernel inclusion")


def with_lipschitz(fmap, bound):
    return replace(fmap, deriv_lipschitz=bound)
