"""Alpha-information intrinsic rewards on finite state spaces and their numerical verification."""
from .geometry import (
    FGenerator,
    GeodesicSpec,
    alpha_divergence,
    alpha_generator,
    custom_generator,
    divergence_gradient,
    f_divergence,
    fisher_rao_inner,
    geodesic_eval,
    geodetic_alignment,
    kl_divergence,
    renyi_divergence,
)
from .information import (
    RewardSpec,
    alpha_information,
    alpha_information_generator,
    count_bonus_identity,
    f_information,
    intrinsic_reward_vector,
    shannon_entropy,
)
from .mdp import FiniteMdp, Policy, agent_env_kernel, occupancy, occupancy_return
from .optima import OptimaProblem, closed_form_optimum, numerical_optimum

__version__ = "0.1.0"
