"""Graph products of groups: canonical normal forms, factorisation counts and
numerical checks of rapid-decay inequalities on finite windows."""

from .enumeration import (Ball, BallSpec, ball, factorisations, factorisations_clique,
                          ff_empirical, left_divisors, p2_decompose, right_divisors, sphere,
                          unconstrained_syllables)
from .graph import PresentationGraph
from .group_function import GroupFunction, convolve, convolve_in_clique
from .normal_form import NormalForm, format_element, identity, invert, multiply, parse_element, reduce
from .rd_verifier import (CliqueRDConstants, GrowthFit, TrilinearNormEstimator, proposition_check,
                          rd_scan, trilinear_ratio, vanishing_check)
from .vertex_group import VertexGroup

__version__ = "0.1.0"
