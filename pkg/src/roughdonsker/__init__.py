"""Lifted random walks on free nilpotent groups: algebra, rough-path metrics,
exact moment calculus and seeded Monte Carlo experiments."""

from .graded import (
    FiniteLawMoments,
    GaussianMoments,
    GradedPolynomial,
    MomentOracle,
    T_apply,
    UnresolvedMomentError,
    cbh_compose,
    level_polynomial,
    tightness_exponents,
    walk_moment,
)
from .lift import LiftedPath, increment, interpolate, lift_linear_chords
from .metrics import cc_distance, holder_distance, holder_norm, homogeneous_norm
from .rde import DivergenceError, IntegrandSet, VectorFieldSet, path_integral, rde_solve_step2, stratonovich_reference
from .tensor import (
    DimensionError,
    DomainError,
    GroupElement,
    LieElement,
    TensorSeries,
    dilate,
    exp,
    inverse,
    log,
    project,
    truncated_mul,
)
from .walks import IncrementDistribution, WalkSpec, master_seed_split, sample_walk

__version__ = "0.1.0"
