"""Chained and unchained information-theoretic generalisation bounds on finite channels."""

from .distributions import DiscreteDistribution, JointChannel, SuperSampleChannel
from .divergences import (
    CHI2_SQRT,
    KL,
    LAUTUM_SQRT2,
    POWER,
    SQRT2KL,
    TV2,
    W1,
    DivergenceKind,
    chi2,
    conditional_mutual_information,
    kl,
    lautum_information,
    mutual_information,
    power_divergence,
    tv,
    w1_1d,
    w1_discrete,
    w1_uniform_intervals,
)
from .engine import BoundReport, BoundSpec, Scaling, chained_bound, per_sample_bound, supersample_bound, unchained_bound
from .errors import ChainBoundsError
from .nets import (
    build_circle_nets,
    build_dyadic_box_nets,
    build_nested_dyadic_nets,
    check_net_axioms,
    coarsen_channel,
    nets_from_points,
)
from .pac_bayes import PacSchedule, PosteriorOnNets, alpha_heuristic_bound, chained_pac_bound, pac_bound
from .presets import evaluate_preset, get_preset, preset_catalogue
from .toy_models import Toy1Config, Toy2Config, toy1_analytic, toy1_engine, toy2_gap_analytic

__version__ = "0.1.0"
