"""Modular arithmetic erasure channels and their multilevel polarization."""

from .asymptotic import (
    AlgorithmTrace,
    AsymptoticDistribution,
    algorithm1,
    asymptotic,
    limit_aggregates,
    semiprime_closed_form,
)
from .channel import (
    EXACT,
    FLOAT,
    ExactLog,
    MaecDistribution,
    ModeError,
    alpha_capacity,
    bhattacharyya,
    error_prob,
    load_spec,
    make_distribution,
    random_distribution,
    reduce_mod,
    uniform,
    unit_vector,
)
from .lattice import DivisorLattice, Factorization, build_lattice, counts, factorize, lattice_for
from .polar import (
    AggregateQuad,
    PolarEnsemble,
    aggregates,
    branch_weight,
    enumerate_branches,
    evolve,
    minus_transform,
    plus_transform,
    prime_tail,
    proportions,
    sample,
)

__version__ = "0.1.0"
