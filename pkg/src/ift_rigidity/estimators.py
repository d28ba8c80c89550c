"""scikit-learn style wrappers around the fibre solver and the rigidity
pipeline.

These follow the ``fit`` / ``transform`` / ``predict`` conventions so the
solvers can sit in a ``Pipeline`` or be cloned with ``get_params``.  Inputs
that are not arrays (chart pairs, representations) are passed to ``fit``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ift import certify_neighborhood, solve_fiber
from .rigidity import certify_rigidity_charts, check_local_rigidity, solve_conjugator


class FiberSolver(TransformerMixin, BaseEstimator):
    """Maps targets ``y`` in ``W`` to the fibre points ``x`` with ``phi(x) = y``.

    ``fit`` takes the pair ``(phi, psi)`` either as two arguments or as a
    tuple in ``X``; it certifies the neighbourhood and stores ``constants_``.
    ``transform`` solves one fibre per row; ``inverse_transform`` applies
    ``phi``.

    Examples
    --------
    >>> from ift_rigidity.charts import parabola_pair
    >>> solver = FiberSolver().fit(parabola_pair())
    >>> x = solver.transform([[0.005, 0.005 ** 2]])
    >>> round(float(x[0, 0]), 12)
    0.005
    """

    def __init__(self, tol=None, fiber_tol=1e-8, max_iter=200, n_samples=100, chain_tol=1e-8,
                 rank_tol=None, lipschitz_pairs=1000, seed=0, override_radius=False):
        self.tol = tol
        self.fiber_tol = fiber_tol
        self.max_iter = max_iter
        self.n_samples = n_samples
        self.chain_tol = chain_tol
        self.rank_tol = rank_tol
        self.lipschitz_pairs = lipschitz_pairs
        self.seed = seed
        self.override_radius = override_radius

    def fit(self, X, y=None):
        if y is None:
            phi, psi = X
        else:
            phi, psi = X, y
        self.phi_ = phi
        self.psi_ = psi
        self.constants_ = certify_neighborhood(
            phi, psi, n_samples=self.n_samples, chain_tol=self.chain_tol,
            rank_tol=self.rank_tol, lipschitz_pairs=self.lipschitz_pairs, seed=self.seed)
        self.n_features_in_ = phi.codomain_dim
        return self

    def transform(self, X):
        check_is_fitted(self, "constants_")
        Y = check_array(X, ensure_min_samples=1)
        if Y.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {Y.shape[1]}")
        out = np.empty((Y.shape[0], self.phi_.domain_dim))
        self.traces_ = []
        for i, row in enumerate(Y):
            x, trace = solve_fiber(self.phi_, self.psi_, row, self.constants_, tol=self.tol,
                                   fiber_tol=self.fiber_tol, max_iter=self.max_iter,
                                   override_radius=self.override_radius)
            out[i] = x
            self.traces_.append(trace)
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "constants_")
        pts = check_array(X)
        return np.array([self.phi_(p) for p in pts])


class RigidityAnalyzer(BaseEstimator):
    """Decides local rigidity of a representation and recovers conjugators.

    ``fit(rep)`` sets ``report_``, ``h1_dim_`` and ``rigid_``.
    ``predict(rep_prime)`` returns ``g`` with ``g r(s) g^-1 = r'(s)``; it needs a
    rigid ``rep`` and certifies the charts on first use.
    """

    def __init__(self, rank_tol=None, fd_step=1e-5, complex_tol=1e-9, tol=1e-8,
                 lipschitz_pairs=200, seed=0, override_radius=False):
        self.rank_tol = rank_tol
        self.fd_step = fd_step
        self.complex_tol = complex_tol
        self.tol = tol
        self.lipschitz_pairs = lipschitz_pairs
        self.seed = seed
        self.override_radius = override_radius

    def fit(self, X, y=None):
        self.rep_ = X
        self.report_ = check_local_rigidity(X, self.rank_tol, self.fd_step, self.complex_tol,
                                            self.seed)
        self.h1_dim_ = self.report_.h1_dim
        self.rigid_ = self.report_.rigid
        self.charts_ = None
        return self

    def predict(self, X):
        check_is_fitted(self, "report_")
        if self.charts_ is None and self.rigid_:
            self.charts_ = certify_rigidity_charts(self.rep_, self.report_.relator_subset,
                                                   self.fd_step, self.rank_tol,
                                                   self.lipschitz_pairs, self.seed)
        sol = solve_conjugator(self.rep_, X, tol=self.tol, override_radius=self.override_radius,
                               report=self.report_, charts=self.charts_, fd_step=self.fd_step,
                               rank_tol=self.rank_tol, seed=self.seed)
        self.solution_ = sol
        return sol.g
