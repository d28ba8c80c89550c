"""Constructive implicit function theorem without complemented subspaces,
with applications to group cohomology from presentations and local rigidity
of representations into matrix Lie groups."""

from .cohomology import GammaModule, delta0, delta1, h1_dimension, saturate_relators
from .ift import (
    DifferentiableMap,
    IftConstants,
    IterationTrace,
    certify_neighborhood,
    quasi_isometry_constants,
    solve_fiber,
    transition_map,
)
from .liegroup import MatrixGroup, Representation, ad_matrix, evaluate_word, exp, log, preset
from .linops import (
    LinearOperator,
    bound_constants,
    embedding_radius,
    exactness_transfer,
    inverse_compose,
    min_norm_preimage,
    operator_norm,
    surjective_perturbation_solve,
)
from .rigidity import RigidityReport, build_phi, build_psi, check_local_rigidity, recover_conjugator
from .words import Presentation, Word, parse_presentation, parse_word, relator_prefixes

__version__ = "0.1.0"
