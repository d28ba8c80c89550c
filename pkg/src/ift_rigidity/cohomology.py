"""Coboundary operators of a presentation with coefficients in a module.

For a presentation ``<S | T>`` and a module ``V`` (dimension ``d``) on which
each generator acts by an invertible matrix ``rho(s)``:

* ``delta0: V -> Map(S, V)``, ``delta0(v)(s) = v - rho(s) v``
* ``delta1: Map(S, V) -> Map(T, V)``,
  ``delta1(c)(t) = sum_j e_j rho(prefix_j) c(s_j)`` over the letters of ``t``
  (prefixes from :func:`~ift_rigidity.words.relator_prefixes`)

``Map(A, V)`` is stored as a stacked vector, blocks in generator (or relator)
order.  ``H^1 = ker delta1 / im delta0`` and its dimension is computed from
numerical ranks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotAComplex
from .liegroup import ad_matrix, word_product
from .linops import operator_norm, rank_threshold, singular_values
from .words import relator_prefixes


@dataclass(frozen=True)
class GammaModule:
    """Generator actions ``rho(s)`` on a ``d``-dimensional space."""

    rho: tuple
    dimension: int
    rho_inv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mats = []
        for i, m in enumerate(self.rho):
            m = np.array(m, dtype=float)
            if m.shape != (self.dimension, self.dimension):
                raise ValueError(f"rho[{i}] has shape {m.shape}, expected "
                                 f"{(self.dimension, self.dimension)}")
            if np.linalg.matrix_rank(m) != self.dimension:
                raise ValueError(f"rho[{i}] is not invertible")
            mats.append(m)
        object.__setattr__(self, "rho", tuple(mats))
        object.__setattr__(self, "rho_inv", tuple(np.linalg.inv(m) for m in mats))

    @classmethod
    def from_representation(cls, rep):
        """The adjoint module ``rho(s) = Ad(r(s))`` on the Lie algebra."""
        return cls(tuple(ad_matrix(m, rep.group) for m in rep.images), rep.group.dim)

    @classmethod
    def trivial(cls, n_generators, dimension):
        return cls(tuple(np.eye(dimension) for _ in range(n_generators)), dimension)

    @property
    def n_generators(self):
        return len(self.rho)

    def act(self, word):
        return word_product(self.rho, self.rho_inv, word, self.dimension)

    def change_basis(self, q):
        """The same module in the basis given by the columns of ``q``."""
        q = np.asarray(q, dtype=float)
        qinv = np.linalg.inv(q)
        return GammaModule(tuple(qinv @ m @ q for m in self.rho), self.dimension)


def _check_sizes(module, pres):
    if module.n_generators != pres.n_generators:
        raise ValueError(f"module has {module.n_generators} generator actions, presentation has "
                         f"{pres.n_generators} generators")


def delta0(module, pres):
    """Stacked blocks ``I - rho(s)``; shape ``(|S| d, d)``."""
    _check_sizes(module, pres)
    d = module.dimension
    if pres.n_generators == 0:
        return np.zeros((0, d))
    return np.vstack([np.eye(d) - m for m in module.rho])


def delta1(module, pres, subset=None):
    """Second coboundary restricted to the relators in ``subset`` (all by
    default); shape ``(|T'| d, |S| d)``."""
    _check_sizes(module, pres)
    d = module.dimension
    if subset is None:
        subset = range(pres.n_relators)
    subset = list(subset)
    out = np.zeros((len(subset) * d, pres.n_generators * d))
    for row, t in enumerate(subset):
        for prefix, sign, gen in relator_prefixes(pres.relators[t]):
            out[row * d:(row + 1) * d, gen * d:(gen + 1) * d] += sign * module.act(prefix)
    return out


def delta0_scale(module):
    """Magnitude of the terms entering ``delta0``."""
    return 1.0 + max((np.linalg.norm(m, 2) for m in module.rho), default=0.0)


def delta1_scale(module, pres, subset=None):
    """Largest ``sum_j ||rho(prefix_j)||`` over the relators in ``subset``."""
    if subset is None:
        subset = range(pres.n_relators)
    best = 0.0
    for t in subset:
        total = sum(np.linalg.norm(module.act(p.prefix), 2) for p in relator_prefixes(pres.relators[t]))
        best = max(best, float(total))
    return best


def block_sup_norm(c, d):
    """``max_a ||c(a)||`` for a stacked element of ``Map(A, V)``."""
    c = np.asarray(c, dtype=float)
    if c.size == 0:
        return 0.0
    return float(np.linalg.norm(c.reshape(-1, d), axis=1).max())


@dataclass(frozen=True)
class RankInfo:
    rank: int
    threshold: float
    singular_values: tuple
    borderline: bool

    @property
    def gap(self):
        """Ratio of the last kept singular value to the first dropped one."""
        s = self.singular_values
        if self.rank == 0 or self.rank >= len(s):
            return float("inf")
        return s[self.rank - 1] / s[self.rank] if s[self.rank] > 0 else float("inf")


def rank_info(matrix, rank_tol=None, scale=None):
    """Numerical rank with the shared threshold; flags singular values within
    a factor 10 of the threshold."""
    m = np.asarray(matrix, dtype=float)
    s = singular_values(m)
    if len(s) == 0 or s[0] == 0.0:
        return RankInfo(0, 0.0, tuple(float(x) for x in s), False)
    thresh = rank_threshold(s, m.shape, rank_tol, scale)
    rank = int(np.sum(s > thresh))
    borderline = bool(np.any((s > thresh / 10.0) & (s <= thresh * 10.0)))
    return RankInfo(rank, thresh, tuple(float(x) for x in s), borderline)


@dataclass(frozen=True)
class H1Details:
    dim: int
    rank_d0: int
    rank_d1: int
    nullity_d1: int
    complex_residual: float
    relator_subset: tuple
    d0_info: RankInfo
    d1_info: RankInfo
    warnings: tuple = ()


def complex_scale(d0, d1):
    return 1.0 + operator_norm(d1) * operator_norm(d0)


def h1_dimension(module, pres, subset=None, rank_tol=None, complex_tol=1e-9):
    """``dim H^1 = nullity(delta1) - rank(delta0)``.

    Raises :class:`NotAComplex` if ``||delta1 delta0||`` exceeds
    ``complex_tol * (1 + ||delta1|| ||delta0||)``.
    """
    subset = tuple(range(pres.n_relators)) if subset is None else tuple(subset)
    d0 = delta0(module, pres)
    d1 = delta1(module, pres, subset)
    residual = operator_norm(d1 @ d0)
    if residual > complex_tol * complex_scale(d0, d1):
        raise NotAComplex(f"||delta1 delta0|| = {residual:.3e}: relators do not act trivially")
    i0 = rank_info(d0, rank_tol, delta0_scale(module))
    i1 = rank_info(d1, rank_tol, delta1_scale(module, pres, subset))
    nullity = d1.shape[1] - i1.rank
    warnings = []
    if i0.borderline:
        warnings.append(f"delta0 has a singular value within 10x of the rank threshold {i0.threshold:.3e}")
    if i1.borderline:
        warnings.append(f"delta1 has a singular value within 10x of the rank threshold {i1.threshold:.3e}")
    dim = nullity - i0.rank
    if dim < 0:
        raise NotAComplex(f"rank(delta0) = {i0.rank} exceeds nullity(delta1) = {nullity}")
    return dim, H1Details(dim, i0.rank, i1.rank, nullity, residual, subset, i0, i1, tuple(warnings))


def saturate_relators(module, pres, rank_tol=None):
    """Greedy finite relator subset with the same kernel as the full delta1.

    Relators are scanned in order and kept only when they raise the rank of
    the accumulated block rows.
    """
    _check_sizes(module, pres)
    kept = []
    rows = np.zeros((0, pres.n_generators * module.dimension))
    rank = 0
    scale = delta1_scale(module, pres)
    for t in range(pres.n_relators):
        trial = np.vstack([rows, delta1(module, pres, [t])])
        r = rank_info(trial, rank_tol, scale).rank
        if r > rank:
            kept.append(t)
            rows, rank = trial, r
    return tuple(kept)


def nullity(matrix, rank_tol=None, scale=None):
    m = np.asarray(matrix, dtype=float)
    return m.shape[1] - rank_info(m, rank_tol, scale).rank

