"""Upper bounds on the minimum distance of codes under general symbol distances."""

from .distances import (Channel, Code, DistanceMatrix, WeightedGraph, build_bhattacharyya,
                        build_cycle, build_from_points, build_hamming, build_lee, build_psk,
                        code_min_distance, named_distance, product_distance, sequence_distance)
from .errors import (BudgetError, ConditionNotMetError, DistboundError, DomainError,
                     InfiniteDistanceError, InvalidInputError, NotEmbeddableError,
                     WrongClassError, WrongSymmetryError)
from .theta import (SolverOptions, binary_theta_analytic, lovasz_classical, solve_theta,
                    solve_theta_P, solve_theta_VF)
from .embedding import classify, euclidean_embed
from .bounds import (BoundCurve, BoundPoint, berlekamp_bound, best_curve, blahut_search,
                     circ_sym_point, elias_binary_point, eps_capacity_bound, general_elias_point,
                     piret_bound, plotkin_exponential, umbrella_point)
from .oracle import kronecker_power, max_stable_set, optimal_min_distance
from .channels import chernoff_distance, pairwise_reversible, reliability_upper, ternary_unilateral

__version__ = "0.1.0"
