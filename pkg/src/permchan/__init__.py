"""Exact divergences, KL coverings, capacity formulas and coding experiments
for noisy permutation channels (a DMC followed by a uniformly random
permutation of the output sequence)."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ChannelClass,
    ChannelModel,
    DimensionError,
    NotStochasticError,
    PermchanError,
    PreconditionError,
    SizeError,
    classify_channel,
    enumerate_ntypes,
    kl_divergence,
    load_channel,
    parse_channel_text,
)
from .bounds import PETROV_ALPHA, capacity_value  # noqa: E402
from .covering import GAMMA, covering_radius, simplex_net, subspace_net  # noqa: E402
from .exact import (  # noqa: E402
    divergence_exact,
    gap_profile,
    mutual_information_exact,
    ytype_law_given_A,
    ytype_law_iid,
)
from .simulate import InfeasibleRateError, build_grid_codebook, simulate_error, sweep_rate  # noqa: E402

__all__ = [
    "ChannelClass", "ChannelModel", "DimensionError", "NotStochasticError", "PermchanError",
    "PreconditionError", "SizeError", "classify_channel", "enumerate_ntypes", "kl_divergence",
    "load_channel", "parse_channel_text", "PETROV_ALPHA", "capacity_value", "GAMMA",
    "covering_radius", "simplex_net", "subspace_net", "divergence_exact", "gap_profile",
    "mutual_information_exact", "ytype_law_given_A", "ytype_law_iid", "InfeasibleRateError",
    "build_grid_codebook", "simulate_error", "sweep_rate",
]
