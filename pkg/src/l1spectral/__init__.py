"""l1-spectral graph clustering, the spectral baseline and a robustness benchmark."""

from .bpsolver import (BasisPursuitProblem, SolverReport, Status, lp_oracle, solve_bp,
                       solve_bp_penalized)
from .cluster import (IndicatorMatrix, SpectralConfig, indicators_to_partition, kmeans,
                      l1_spectral, select_representatives, spectral_clustering)
from .graphmodel import (BlockSpec, LaplacianKind, connected_components, degrees,
                         generate_er, generate_ideal, laplacian, perturb, perturbed_model)
from .spectral import EigenBasis, bottom_k, deflate, eig_sym, top_k

__version__ = "0.1.0"
