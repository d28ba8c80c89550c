"""Dense linear-operator utilities.

Everything here works with the Euclidean norm on vectors and the spectral
norm on operators, so every open-mapping constant is a singular value.
Functions accept plain arrays or :class:`LinearOperator` instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_matrix, check_vector, default_rank_tol
from .exceptions import (
    HalvingViolated,
    ImageMismatch,
    NonFiniteError,
    NotEmbedding,
    NotExact,
    NotSurjective,
    PerturbationTooLarge,
    YNotInImage,
    ZeroOperator,
)

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LinearOperator:
    """A dense real matrix viewed as a map from ``domain_dim``-space to
    ``codomain_dim``-space."""

    matrix: np.ndarray

    def __post_init__(self):
        m = check_matrix(self.matrix, name="operator matrix").copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def domain_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def codomain_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            return LinearOperator(self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other, dtype=float)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def as_matrix(a, name="operator") -> np.ndarray:
    if isinstance(a, LinearOperator):
        return a.matrix
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return check_matrix(arr, name=name)


def singular_values(a) -> np.ndarray:
    m = as_matrix(a)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def rank_threshold(svals, shape, rank_tol=None, scale=None) -> float:
    """Absolute cutoff below which singular values count as zero.

    ``rank_tol`` is relative to the largest singular value; the default is
    ``eps * max(shape)``, or the value of ``IFT_RIGIDITY_RANK_TOL`` if set.
    ``scale`` raises the reference magnitude above ``sigma_max`` for matrices
    that may be pure rounding noise (e.g. ``I - rho`` with ``rho ~ I``).
    """
    if len(svals) == 0:
        return 0.0
    if rank_tol is None:
        rank_tol = default_rank_tol()
    if rank_tol is None:
        rank_tol = EPS * max(shape)
    ref = svals[0] if scale is None else max(svals[0], scale)
    return float(rank_tol * ref)


def numerical_rank(a, rank_tol=None, scale=None) -> int:
    m = as_matrix(a)
    s = singular_values(m)
    if len(s) == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rank_threshold(s, m.shape, rank_tol, scale)))


def operator_norm(a) -> float:
    """Spectral norm (largest singular value)."""
    m = as_matrix(a)
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("operator has non-finite entries")
    s = singular_values(m)
    return float(s[0]) if len(s) else 0.0


@dataclass(frozen=True)
class RightInverse:
    """Minimum-norm right inverse of an operator on its numerical image.

    ``bound`` is the open-mapping constant ``1/sigma_min^+``: for every ``y``
    in the image, ``solve(y)`` returns a preimage with
    ``||x|| <= bound * ||y||``.  For the zero operator ``bound`` is 0.
    """

    operator: LinearOperator
    bound: float
    rank_tolerance: float
    rank: int
    _u: np.ndarray
    _s: np.ndarray
    _vt: np.ndarray

    def apply(self, y):
        """Pseudo-inverse applied to ``y`` (vector or matrix of columns); no
        image check."""
        y = np.asarray(y, dtype=float)
        if self.rank == 0:
            shape = (self.operator.domain_dim,) + y.shape[1:]
            return np.zeros(shape)
        coeffs = self._u.T @ y
        if y.ndim == 1:
            return self._vt.T @ (coeffs / self._s)
        return self._vt.T @ (coeffs / self._s[:, None])

    def solve(self, y, tol=1e-10):
        y = check_vector(y, self.operator.codomain_dim, name="y")
        x = self.apply(y)
        ynorm = np.linalg.norm(y)
        residual = np.linalg.norm(self.operator.matrix @ x - y)
        if residual > tol * ynorm:
            raise YNotInImage(
                f"least-squares residual {residual:.3e} exceeds {tol:.1e} * ||y|| = {tol * ynorm:.3e}"
            )
        return x


def right_inverse(a, rank_tol=None, scale=None) -> RightInverse:
    op = a if isinstance(a, LinearOperator) else LinearOperator(as_matrix(a))
    m = op.matrix
    if m.size == 0:
        return RightInverse(op, 0.0, 0.0, 0, np.zeros((m.shape[0], 0)), np.zeros(0),
                            np.zeros((0, m.shape[1])))
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    thresh = rank_threshold(s, m.shape, rank_tol, scale)
    r = int(np.sum(s > thresh)) if s[0] > 0 else 0
    bound = 1.0 / s[r - 1] if r else 0.0
    return RightInverse(op, float(bound), thresh, r, u[:, :r], s[:r], vt[:r])


def min_norm_preimage(a, y, tol=1e-10, rank_tol=None):
    """Minimum-norm ``x`` with ``a @ x = y``.

    Raises :class:`YNotInImage` when the least-squares residual exceeds
    ``tol * ||y||``.
    """
    return right_inverse(a, rank_tol).solve(y, tol)


class BoundConstants(NamedTuple):
    c1: float
    c2: float
    c: float


def bound_constants(dphi0, dpsi0, rank_tol=None, allow_vacuous=False, scale=None) -> BoundConstants:
    """Open-mapping constants of the two linearisations and their common bound
    ``C = max(C1, C2, ||dphi0||, ||dpsi0||, 1)``.

    An operator with trivial image has no nonzero singular value.  By default
    that raises :class:`ZeroOperator`; with ``allow_vacuous`` its constant is
    reported as 0, since a right inverse on ``{0}`` needs no bound.
    ``scale`` is passed to :func:`rank_threshold`.
    """
    consts = []
    for name, op in (("dphi0", dphi0), ("dpsi0", dpsi0)):
        ri = right_inverse(op, rank_tol, scale)
        if ri.rank == 0 and not allow_vacuous:
            raise ZeroOperator(f"{name} has no nonzero singular value")
        consts.append(ri.bound)
    c1, c2 = consts
    c = max(c1, c2, operator_norm(dphi0), operator_norm(dpsi0), 1.0)
    return BoundConstants(c1, c2, c)


def surjective_perturbation_solve(f, g, v, tol=1e-12, max_iter=10_000, rank_tol=None,
                                  return_trace=False):
    """Solve ``(f + g) w = v`` for surjective ``f`` and small ``g``.

    Builds ``w = w_0 + w_1 + ...`` with ``f w_0 = v`` and ``f w_{i+1} = -g w_i``,
    each ``w_i`` a minimum-norm preimage.  With ``r = sigma_min(f)`` and
    ``a = ||g||/r < 1`` the residual after ``n`` terms is at most ``a**n ||v||``.

    Parameters
    ----------
    f, g : array_like, shape (m, n)
    v : array_like, shape (m,)
    tol : float
        Stop once the residual is at most ``tol * ||v||``.
    return_trace : bool
        Also return the residual norms after 0, 1, 2, ... terms, tracked as
        ``||g w_n||`` rather than by subtraction.
    """
    fm = as_matrix(f, "f")
    gm = as_matrix(g, "g")
    if fm.shape != gm.shape:
        raise ValueError(f"f and g shapes differ: {fm.shape} vs {gm.shape}")
    v = check_vector(v, fm.shape[0], name="v")
    ri = right_inverse(fm, rank_tol)
    if ri.rank != fm.shape[0]:
        raise NotSurjective(f"rank {ri.rank} < codomain dimension {fm.shape[0]}")
    r = 1.0 / ri.bound if ri.rank else np.inf
    a = operator_norm(gm) / r
    if a >= 1.0:
        raise PerturbationTooLarge(f"||g|| / r = {a:.6g} >= 1")

    vnorm = np.linalg.norm(v)
    w = np.zeros(fm.shape[1])
    residuals = [vnorm]
    term = ri.apply(v)
    for _ in range(max_iter):
        if residuals[-1] <= tol * vnorm:
            break
        w = w + term
        # v - (f + g) w equals -g w_n exactly; subtracting would cancel
        rest = -(gm @ term)
        residuals.append(float(np.linalg.norm(rest)))
        term = ri.apply(rest)
    else:
        if residuals[-1] > tol * vnorm:
            raise PerturbationTooLarge(f"no convergence in {max_iter} terms (a = {a:.6g})")
    if return_trace:
        return w, residuals
    return w


def embedding_radius(f) -> float:
    """Largest ``r`` with ``||f x|| >= r ||x||``, i.e. the smallest singular
    value; 0 when ``f`` has more columns than rows."""
    m = as_matrix(f, "f")
    if m.shape[1] == 0:
        return np.inf
    if m.shape[0] < m.shape[1]:
        return 0.0
    return float(singular_values(m)[-1])


def normalize_chain(f, g):
    """Replace ``f`` by an isometric embedding and ``g`` by a metric quotient
    map with the same image and kernel.

    Returns ``(f_iso, g_quot, r_f, l_g)`` with ``f = f_iso @ r_f`` and
    ``g = l_g @ g_quot``.  A solution ``x'`` of ``f_iso x' = v`` maps back to
    ``x = solve(r_f, x')``.
    """
    fm = as_matrix(f, "f")
    gm = as_matrix(g, "g")
    q_f, r_f = np.linalg.qr(fm)
    q_g, r_g = np.linalg.qr(gm.T)
    return q_f, q_g.T, r_f, r_g.T


def exactness_transfer(f, g, f_tilde, g_tilde, v, tol=1e-10, max_iter=200, ortho_tol=1e-8):
    """Find ``x`` with ``f_tilde x = v`` for ``v`` in ``ker(g_tilde)``.

    ``(f, g)`` is an exact pair with orthonormal columns in ``f`` and
    orthonormal rows in ``g`` (see :func:`normalize_chain`); ``(f_tilde,
    g_tilde)`` is a complex within distance ``< 1/10`` of it.  Each step moves
    the remainder ``v_j`` to ``v_{j+1} = v_j - f_tilde x_j`` with
    ``||v_{j+1}|| <= ||v_j|| / 2``.

    Returns
    -------
    x : ndarray
    norms : list of float
        The remainder norms ``||v_1||, ||v_2||, ...``.
    """
    fm, gm = as_matrix(f, "f"), as_matrix(g, "g")
    ftm, gtm = as_matrix(f_tilde, "f_tilde"), as_matrix(g_tilde, "g_tilde")
    if fm.shape != ftm.shape or gm.shape != gtm.shape:
        raise ValueError("perturbed operators must match the shapes of f and g")
    if gm.shape[1] != fm.shape[0]:
        raise ValueError(f"g domain {gm.shape[1]} != f codomain {fm.shape[0]}")
    k, n = fm.shape[1], fm.shape[0]
    if np.linalg.norm(fm.T @ fm - np.eye(k)) > ortho_tol:
        raise NotEmbedding("f must have orthonormal columns; use normalize_chain")
    if np.linalg.norm(gm @ gm.T - np.eye(gm.shape[0])) > ortho_tol:
        raise NotSurjective("g must have orthonormal rows; use normalize_chain")
    if operator_norm(gm @ fm) > ortho_tol or k + gm.shape[0] != n:
        raise NotExact("im(f) != ker(g)")
    delta = max(operator_norm(fm - ftm), operator_norm(gm - gtm))
    if delta >= 0.1:
        raise PerturbationTooLarge(f"perturbation {delta:.6g} >= 1/10")
    if operator_norm(gtm @ ftm) > tol:
        raise NotExact("g_tilde @ f_tilde != 0")
    v = check_vector(v, n, name="v")
    vnorm = float(np.linalg.norm(v))
    if np.linalg.norm(gtm @ v) > tol * max(vnorm, 1.0):
        raise YNotInImage("v is not in ker(g_tilde)")

    x = np.zeros(k)
    norms = [vnorm]
    vj = v
    slack = 1e-14 * vnorm
    for _ in range(max_iter):
        if norms[-1] <= tol * vnorm:
            break
        w = gm.T @ (gm @ vj)
        xj = fm.T @ (vj - w)
        x += xj
        vj = vj - ftm @ xj
        norms.append(float(np.linalg.norm(vj)))
        if norms[-1] > 0.5 * norms[-2] + slack:
            raise HalvingViolated(f"||v_(j+1)|| = {norms[-1]:.3e} > ||v_j|| / 2 = {0.5 * norms[-2]:.3e}")
    else:
        if norms[-1] > tol * vnorm:
            raise HalvingViolated(f"remainder {norms[-1]:.3e} after {max_iter} steps")
    return x, norms


def inverse_compose(f, g, tol=1e-8, rank_tol=None) -> LinearOperator:
    """``f^{-1} g`` for a closed embedding ``f`` and ``im(g)`` inside ``im(f)``.

    Raises :class:`ImageMismatch` when some column of ``g`` has least-squares
    residual above ``tol * (1 + ||g_j||)``.
    """
    fm, gm = as_matrix(f, "f"), as_matrix(g, "g")
    if fm.shape[0] != gm.shape[0]:
        raise ValueError(f"f and g codomains differ: {fm.shape[0]} vs {gm.shape[0]}")
    ri = right_inverse(fm, rank_tol)
    if ri.rank != fm.shape[1]:
        raise NotEmbedding(f"rank {ri.rank} < domain dimension {fm.shape[1]}")
    a = ri.apply(gm)
    res = np.linalg.norm(fm @ a - gm, axis=0)
    limit = tol * (1.0 + np.linalg.norm(gm, axis=0))
    bad = np.flatnonzero(res > limit)
    if bad.size:
        j = int(bad[0])
        raise ImageMismatch(f"column {j} of g leaves im(f): residual {res[j]:.3e}")
    return LinearOperator(a)


def inverse_compose_bound(h_norm, g_norm, g_diff_norm) -> float:
    """Upper bound for ``||(f0 + h)^{-1} g~ - f0^{-1} g||`` when ``f0`` is
    isometric and ``||h|| < 1``."""
    if not h_norm < 1.0:
        raise PerturbationTooLarge(f"||h|| = {h_norm} must be < 1")
    return (g_diff_norm + h_norm * g_norm) / (1.0 - h_norm)
