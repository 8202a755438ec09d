"""Almost-Riemannian structures on the 2D affine and 3D Heisenberg groups.

The package models ARSs given by an orthonormal frame made of one linear
vector field and left-invariant fields: norms, flows, singular loci,
translation and automorphism isometries, three-level canonical forms,
normal Hamiltonian geodesics, tangency points and component counts.
"""

from .algebra import (
    AFF2,
    HEIS3,
    algebra_model,
    bracket,
    conjugate_derivation,
    derivation_space,
    eigen2x2,
    exp_tD,
    is_automorphism,
    is_derivation,
)
from .classify import (
    CanonicalClass,
    NormalizationTrace,
    apply_trace,
    classify,
)
from .geodesy import (
    CotangentState,
    GeodesicTrace,
    connected_components,
    geodesic_shoot,
    hamiltonian,
    locus_sample,
    tangency_points,
)
from .group import GroupPoint, TangentVector, group_exp, group_log, multiply
from .linfield import LinearField, eval_linear, flow, linear_field
from .metric import (
    ARSSpec,
    ars_norm,
    in_Z,
    in_ZX,
    is_left_translation_isometry,
    isometry_candidate_check,
    make_ars,
    singular_poly,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AFF2", "HEIS3", "algebra_model", "bracket", "conjugate_derivation",
    "derivation_space", "eigen2x2", "exp_tD", "is_automorphism",
    "is_derivation", "CanonicalClass", "NormalizationTrace", "apply_trace",
    "classify", "CotangentState", "GeodesicTrace", "connected_components",
    "geodesic_shoot", "hamiltonian", "locus_sample", "tangency_points",
    "GroupPoint", "TangentVector", "group_exp", "group_log", "multiply",
    "LinearField", "eval_linear", "flow", "linear_field", "ARSSpec",
    "ars_norm", "in_Z", "in_ZX", "is_left_translation_isometry",
    "isometry_candidate_check", "make_ars", "singular_poly", "validate",
    "__version__",
]
