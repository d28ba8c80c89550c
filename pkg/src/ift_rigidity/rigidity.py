"""Local rigidity of a representation ``r`` of a finitely presented group.

The two nonlinear maps

    phi(g)(s)     = g r(s) g^-1 r(s)^-1                    G -> Map(S, G)
    psi(alpha)(t) = prod_j (alpha(s_j) r(s_j))^(e_j)       Map(S, G) -> Map(T', G)

satisfy ``psi o phi = e`` with differentials ``delta0`` and ``delta1`` at the
identity.  Both are written in exponential/logarithmic coordinates around the
identity tuples, so their Jacobians are plain matrices.  When ``H^1 = 0`` the
implicit-function solver recovers, for a nearby homomorphism ``r'``, the
element ``g`` with ``g r g^-1 = r'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cohomology import (
    GammaModule,
    delta0,
    delta0_scale,
    delta1,
    delta1_scale,
    h1_dimension,
    nullity,
    saturate_relators,
)
from .exceptions import (
    InvalidRepresentation,
    NotInNeighborhood,
    NotRigid,
    OutOfChartDomain,
    RecoveryFailed,
)
from .ift import DifferentiableMap, IterationTrace, IftConstants, certify_neighborhood, \
    finite_difference_jacobian, solve_fiber
from .liegroup import exp, log

CLOSED_IMAGE_NOTE = "automatic (finite dimension)"


def _log_coords(group, m):
    return group.coords(log(m))


def _origin_or_fd(fun, exact, h, codomain_dim):
    def jac(x):
        if not np.any(x):
            return exact
        return finite_difference_jacobian(fun, x, h, codomain_dim)
    return jac


def build_phi(rep, fd_step=1e-5):
    """``xi -> phi(exp(xi))`` in log coordinates of ``Map(S, G)``.

    The Jacobian at the origin is ``delta0``; elsewhere it is taken by central
    differences.
    """
    group = rep.group
    d, k = group.dim, rep.presentation.n_generators
    images, inverses = rep.images, rep.inverses

    def fun(xi):
        x = group.algebra(xi)
        g, ginv = exp(x), exp(-x)
        out = np.empty(k * d)
        for s in range(k):
            out[s * d:(s + 1) * d] = _log_coords(group, g @ images[s] @ ginv @ inverses[s])
        return out

    kappa = max([1.0] + [float(np.linalg.cond(m, 2)) for m in images])
    # ||e^X r e^-X r^-1 - I|| <= (e^{2||X||} - 1) cond(r) <= 1/2 on this ball
    radius = math.log1p(1.0 / (2.0 * kappa)) / (2.0 * group.coord_scale)
    d0 = delta0(GammaModule.from_representation(rep), rep.presentation)
    return DifferentiableMap(fun, d, k * d, jac=_origin_or_fd(fun, d0, fd_step, k * d),
                             domain_radius=radius, fd_step=fd_step, name="phi")


def build_psi(rep, subset=None, fd_step=1e-5):
    """``c -> psi(exp(c))`` from log coordinates of ``Map(S, G)`` to log
    coordinates of ``Map(T', G)``.  With an empty subset the codomain is
    0-dimensional."""
    group, pres = rep.group, rep.presentation
    d, k = group.dim, pres.n_generators
    subset = tuple(range(pres.n_relators)) if subset is None else tuple(subset)
    relators = [pres.relators[t] for t in subset]
    images, inverses = rep.images, rep.inverses

    def fun(c):
        alphas = [exp(group.algebra(c[s * d:(s + 1) * d])) for s in range(k)]
        factors = [a @ m for a, m in zip(alphas, images)]
        factor_inv = [inverses[s] @ np.linalg.inv(alphas[s]) for s in range(k)]
        out = np.empty(len(relators) * d)
        for row, word in enumerate(relators):
            prod = np.eye(group.n)
            for gen, e in word:
                prod = prod @ (factors[gen] if e == 1 else factor_inv[gen])
            out[row * d:(row + 1) * d] = _log_coords(group, prod)
        return out

    radius = math.inf
    if relators:
        norms = [max(float(np.linalg.norm(m, 2)), float(np.linalg.norm(mi, 2)))
                 for m, mi in zip(images, inverses)]
        worst = max(math.prod(norms[g] for g, _ in w) for w in relators)
        length = max(len(w) for w in relators)
        # each factor moves by a relative (1 + eta) with eta = e^{beta||c||} - 1
        radius = math.log1p(1.0 / (2.0 * worst)) / (length * group.coord_scale)
    module = GammaModule.from_representation(rep)
    d1 = delta1(module, pres, subset)
    return DifferentiableMap(fun, k * d, len(relators) * d,
                             jac=_origin_or_fd(fun, d1, fd_step, len(relators) * d),
                             domain_radius=radius, fd_step=fd_step, name="psi")


def differential_residuals(rep, subset=None, fd_step=1e-5):
    """Entrywise max of ``|FD(dphi(0)) - delta0|`` and ``|FD(dpsi(0)) - delta1|``,
    with finite differences taken on the maps themselves."""
    module = GammaModule.from_representation(rep)
    pres = rep.presentation
    subset = tuple(range(pres.n_relators)) if subset is None else tuple(subset)
    phi, psi = build_phi(rep, fd_step), build_psi(rep, subset, fd_step)
    fd_phi = finite_difference_jacobian(phi, np.zeros(phi.domain_dim), fd_step, phi.codomain_dim)
    fd_psi = finite_difference_jacobian(psi, np.zeros(psi.domain_dim), fd_step, psi.codomain_dim)
    r_phi = float(np.abs(fd_phi - delta0(module, pres)).max(initial=0.0))
    r_psi = float(np.abs(fd_psi - delta1(module, pres, subset)).max(initial=0.0))
    return r_phi, r_psi


def chain_residual(rep, subset=None, n_points=20, radius=1e-2, seed=0):
    """Largest ``||psi(phi(xi))||`` over random ``xi`` with ``||xi|| <= radius``."""
    phi, psi = build_phi(rep), build_psi(rep, subset)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        xi = rng.standard_normal(phi.domain_dim)
        nrm = np.linalg.norm(xi)
        if nrm > 0:
            xi *= radius * rng.random() / nrm
        worst = max(worst, float(np.linalg.norm(psi(phi(xi)))))
    return worst


@dataclass
class RigidityReport:
    h1_dim: int
    rigid: bool
    relator_subset: tuple
    differential_residuals: tuple
    n_generators: int = 0
    n_relators: int = 0
    algebra_dim: int = 0
    rank_d0: int = 0
    rank_d1: int = 0
    nullity_d1: int = 0
    nullity_d1_full: int = 0
    complex_residual: float = 0.0
    chain_residual: float = 0.0
    closed_image: str = CLOSED_IMAGE_NOTE
    warnings: tuple = ()
    conjugator: Optional[np.ndarray] = None
    conjugation_residual: Optional[float] = None
    certified_radius: Optional[float] = None
    target_norm: Optional[float] = None
    iterations: Optional[int] = None

    def items(self):
        """Flat ``(key, value)`` pairs in a fixed order."""
        out = [
            ("generators", self.n_generators),
            ("relators", self.n_relators),
            ("algebra_dim", self.algebra_dim),
            ("relator_subset", " ".join(str(i) for i in self.relator_subset)),
            ("rank_delta0", self.rank_d0),
            ("rank_delta1", self.rank_d1),
            ("nullity_delta1", self.nullity_d1),
            ("nullity_delta1_full", self.nullity_d1_full),
            ("h1_dim", self.h1_dim),
            ("rigid", self.rigid),
            ("closed_image", self.closed_image),
            ("complex_residual", self.complex_residual),
            ("dphi_residual", self.differential_residuals[0]),
            ("dpsi_residual", self.differential_residuals[1]),
            ("chain_residual", self.chain_residual),
        ]
        for i, w in enumerate(self.warnings):
            out.append((f"warning_{i}", w))
        if self.conjugator is not None:
            out.append(("certified_radius", self.certified_radius))
            out.append(("target_norm", self.target_norm))
            out.append(("iterations", self.iterations))
            out.append(("conjugation_residual", self.conjugation_residual))
            for i, row in enumerate(self.conjugator):
                out.append((f"conjugator_row_{i}", " ".join(_fmt(x) for x in row)))
        return out


def _fmt(x):
    return f"{float(x):.12e}"


def check_local_rigidity(rep, rank_tol=None, fd_step=1e-5, complex_tol=1e-9, seed=0):
    """Compute ``H^1`` with a saturated relator subset, validate both
    differentials by finite differences and decide rigidity (``h1_dim == 0``)."""
    pres = rep.presentation
    module = GammaModule.from_representation(rep)
    subset = saturate_relators(module, pres, rank_tol)
    dim, details = h1_dimension(module, pres, subset, rank_tol, complex_tol)
    full = nullity(delta1(module, pres), rank_tol, delta1_scale(module, pres))
    return RigidityReport(
        h1_dim=dim,
        rigid=dim == 0,
        relator_subset=subset,
        differential_residuals=differential_residuals(rep, subset, fd_step),
        n_generators=pres.n_generators,
        n_relators=pres.n_relators,
        algebra_dim=rep.group.dim,
        rank_d0=details.rank_d0,
        rank_d1=details.rank_d1,
        nullity_d1=details.nullity_d1,
        nullity_d1_full=full,
        complex_residual=details.complex_residual,
        chain_residual=chain_residual(rep, subset, seed=seed),
        warnings=details.warnings,
    )


def _check_compatible(rep, rep_prime):
    if rep_prime.presentation != rep.presentation:
        raise InvalidRepresentation("perturbed representation uses a different presentation")
    if rep_prime.group.name != rep.group.name:
        raise InvalidRepresentation(f"perturbed representation is in {rep_prime.group.name}, "
                                    f"expected {rep.group.name}")


def alpha_coords(rep, rep_prime):
    """Log coordinates of ``alpha(s) = r'(s) r(s)^-1``."""
    group = rep.group
    try:
        return np.concatenate([_log_coords(group, mp @ minv)
                               for mp, minv in zip(rep_prime.images, rep.inverses)]
                              or [np.zeros(0)])
    except OutOfChartDomain as exc:
        raise NotInNeighborhood(f"r' is too far from r for the log chart: {exc}") from None


def conjugation_residual(rep, rep_prime, g):
    ginv = np.linalg.inv(g)
    return max((float(np.linalg.norm(g @ m @ ginv - mp, 2))
                for m, mp in zip(rep.images, rep_prime.images)), default=0.0)


@dataclass
class ConjugatorSolution:
    g: np.ndarray
    residual: float
    xi: np.ndarray
    target_norm: float
    constants: IftConstants
    trace: IterationTrace = field(repr=False)


def certify_rigidity_charts(rep, subset=None, fd_step=1e-5, rank_tol=None, lipschitz_pairs=200,
                            seed=0):
    """Maps ``(phi, psi)`` for ``rep`` and their certified constants.

    The derivative-Lipschitz bounds are sampled, so ``constants`` is flagged
    heuristic.
    """
    module = GammaModule.from_representation(rep)
    if subset is None:
        subset = saturate_relators(module, rep.presentation, rank_tol)
    phi, psi = build_phi(rep, fd_step), build_psi(rep, subset, fd_step)
    scale = max(delta0_scale(module), delta1_scale(module, rep.presentation, subset))
    constants = certify_neighborhood(phi, psi, rank_tol=rank_tol, lipschitz_pairs=lipschitz_pairs,
                                     seed=seed, rank_scale=scale)
    return phi, psi, constants


def solve_conjugator(rep, rep_prime, tol=1e-8, override_radius=False, report=None, charts=None,
                     fd_step=1e-5, rank_tol=None, lipschitz_pairs=200, seed=0, **solve_opts):
    """Full conjugator recovery; see :func:`recover_conjugator`.

    ``report`` and ``charts`` (the output of :func:`certify_rigidity_charts`)
    may be passed to reuse earlier work.
    """
    _check_compatible(rep, rep_prime)
    if report is None:
        report = check_local_rigidity(rep, rank_tol, fd_step, seed=seed)
    if not report.rigid:
        raise NotRigid(f"H^1 has dimension {report.h1_dim}; no conjugator is guaranteed")
    if charts is None:
        charts = certify_rigidity_charts(rep, report.relator_subset, fd_step, rank_tol,
                                         lipschitz_pairs, seed)
    phi, psi, constants = charts
    y = alpha_coords(rep, rep_prime)
    ynorm = float(np.linalg.norm(y))
    if ynorm >= constants.w_radius and not override_radius:
        raise NotInNeighborhood(f"||alpha_r'|| = {ynorm:.6g} >= certified radius "
                                f"{constants.w_radius:.6g}; pass override_radius to try anyway")
    xi, trace = solve_fiber(phi, psi, y, constants, override_radius=override_radius, **solve_opts)
    g = exp(rep.group.algebra(xi))
    residual = conjugation_residual(rep, rep_prime, g)
    if residual > tol:
        raise RecoveryFailed(f"conjugation residual {residual:.3e} > {tol:.1e}")
    return ConjugatorSolution(g, residual, xi, ynorm, constants, trace)


def recover_conjugator(rep, rep_prime, tol=1e-8, override_radius=False, **kwargs):
    """Find ``g`` with ``g r(s) g^-1 = r'(s)`` for every generator.

    Requires ``rep`` to be rigid and ``r'`` to lie in the certified
    neighbourhood unless ``override_radius`` is set.

    Returns
    -------
    g : ndarray
    residual : float
        ``max_s ||g r(s) g^-1 - r'(s)||``, at most ``tol``.
    """
    sol = solve_conjugator(rep, rep_prime, tol=tol, override_radius=override_radius, **kwargs)
    return sol.g, sol.residual


def attach_conjugator(report, solution):
    report.conjugator = solution.g
    report.conjugation_residual = solution.residual
    report.certified_radius = solution.constants.w_radius
    report.target_norm = solution.target_norm
    report.iterations = solution.trace.iterations
    return report
