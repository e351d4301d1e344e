"""Monotone binary cellular automata with one-sided noise: exact eroder
certificates, exact growth checks and Monte Carlo droplet estimates."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .rules import (  # noqa: F401
    MonotoneRule,
    builtin,
    evaluate,
    from_truth_table,
    identity,
    load_rule,
    min_max,
    minimal_zero_sets,
    nec,
    non_example,
    nsmm,
    spin_flip_dual,
)
from .geometry import (  # noqa: F401
    AffineFunctional,
    EroderCertificate,
    RationalVector,
    alpha_and_witness,
    certificate_validate,
    classify_velocity_condition,
    farkas_certificate,
    scaled_front_velocity,
    sigma_empty,
)
from .lattice import (  # noqa: F401
    Boundary,
    Configuration,
    GeneralStochasticRule,
    NoiseModel,
    RngSpec,
    check_majorates,
    step_det,
    step_general,
    step_noisy,
)
