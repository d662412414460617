"""Continuous-space tree planning via controllability-mode expansion.

The planner discretizes the reachable set of a locally linearized system
through the spectrum of its input-normalized controllability matrix and
searches the resulting branches with Monte Carlo tree search. The package
also ships uniform-grid and progressive-widening baselines, benchmark
environments, a receding-horizon runtime, an experiment harness, and a
driver-assist service.
"""

from .baselines import (DpwExpander, UniformExpander, UniformGrid,
                        dpw_allows_new_child, predictive_sampling, uniform_expand)
from .expansion import (Branch, ExpansionOptions, SpectralExpander,
                        branching_factor, goal_biased_target, spectral_expand,
                        spectrum_heatmap)
from .mdp import (DynamicsError, IntervalBox, MdpDefinition, Trajectory,
                  clip_action, concat_trajectories, discounted_return, rollout, step)
from .numerics import (ControllabilityDecomposition, Linearization, RiccatiError,
                       controllability, dare_solve, finite_horizon_gains, jacobian,
                       linearize_along, lqr_gain, min_energy_inputs)
from .tree import (SearchBudget, SearchResult, TreeNode, UcbConstants, backup,
                   best_trajectory, confidence_profile, search, ucb_select)

__version__ = "0.1.0"
