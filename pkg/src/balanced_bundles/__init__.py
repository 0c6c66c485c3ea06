"""Balanced metrics on split holomorphic vector bundles over CP^1.

Sections of ``O(k_1) + ... + O(k_r)`` are polynomial coefficient blocks;
a basis gives a Kodaira map into the Grassmannian G(r, N) and a pullback
metric.  The library computes L^2 Gram matrices against the Fubini-Study
form, balances bases by Gram whitening, evaluates moment maps and pullback
forms, and decides unitary equivalence of Grassmannian maps.
"""

from .balance import (
    BalanceReport,
    GramMatrix,
    balance_iterate,
    default_scheme,
    direct_sum,
    gram,
    is_balanced,
    map_gram,
    moment_map,
    normalized_metric,
    t_step,
)
from .bundles import (
    Basis,
    BundleSpec,
    eq8_basis,
    fubini_study_basis,
    monomial_basis,
    random_basis,
    rank_check,
    section_matrix,
)
from .errors import (
    BalancedBundlesError,
    DimensionMismatchError,
    FiniteDifferenceError,
    IntegrationError,
    InvalidBasisError,
    ParseError,
    PreconditionError,
    SingularGramError,
    SingularPointError,
)
from .geometry import ChartPoint, FubiniStudyForm, QuadratureScheme, build_quadrature, ddbar_coefficient, integrate
from .grassmann import (
    FormField,
    GrassMap,
    eq8_map,
    ftilde_map,
    holomorphy_defect,
    projector,
    pullback_form_holo,
    pullback_form_projector,
    pullback_metric,
    ricci_form,
)
from .rigidity import EquivalenceVerdict, compare, find_unitary, overlap_invariant

__version__ = "0.1.0"
