"""Equivariant degree vectors of local maps under finite orthogonal groups."""

__version__ = "0.1.0"

from .degree import DegreeVector, degree_of_linear, equivariant_degree, find_stratum_zeros, stratum_degree
from .domain import component_of, hypothesis_check, saturate, stratify, stratum_chart
from .group import (
    close_generators,
    fixed_subspace,
    isotropy_group,
    isotropy_types,
    normalizer,
    weyl_group,
)
from .maps import EquivariantLocalMap, check_equivariance, check_locality, restrict
from .options import DEFAULT, Options
from .oracles import oracle_degree_1d, oracle_degree_2d
from .otopy import straight_line_otopy, verify_additivity, verify_otopy_invariance
from .realize import disjoint_union, linearize, realize, standard_atom

__all__ = [
    "DEFAULT",
    "DegreeVector",
    "EquivariantLocalMap",
    "Options",
    "check_equivariance",
    "check_locality",
    "close_generators",
    "component_of",
    "degree_of_linear",
    "disjoint_union",
    "equivariant_degree",
    "find_stratum_zeros",
    "fixed_subspace",
    "hypothesis_check",
    "isotropy_group",
    "isotropy_types",
    "linearize",
    "normalizer",
    "oracle_degree_1d",
    "oracle_degree_2d",
    "realize",
    "restrict",
    "saturate",
    "standard_atom",
    "straight_line_otopy",
    "stratify",
    "stratum_chart",
    "stratum_degree",
    "verify_additivity",
    "verify_otopy_invariance",
    "weyl_group",
]
