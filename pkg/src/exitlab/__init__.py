"""EXIT charts, GEXIT curves and mutual-information/MMSE functionals for
binary linear codes over parameterized memoryless channel families."""

__version__ = "0.1.0"

from . import biawgn, channels, codes, decoders, experiments, gf2, infotheory
from .channels import (
    ChannelFamily,
    DiscreteChannel,
    bec_family,
    bsc_family,
    capacity,
    degrade,
    qbiawgn_family,
    qpsk_awgn_family,
    rate_matrix,
    sample,
    sample_sequence,
    sufficient_transparency,
    transition_matrix,
)
from .codes import (
    LinearCode,
    TannerGraph,
    encode,
    enumerate_codebook,
    make_hamming74,
    make_random_linear,
    make_regular_ldpc,
    make_repetition,
    make_spc,
    make_uncoded,
    symbol_marginals,
)
from .decoders import (
    bec_extrinsic_determined,
    bec_extrinsic_determined_all,
    bec_extrinsic_posteriors,
    bp_decode,
    exact_app,
    exact_extrinsic,
    exact_extrinsic_all,
    intrinsic_posteriors,
)
from .experiments import (
    ExperimentConfig,
    ExitCurve,
    area_check,
    di_monotonicity,
    exit_sweep,
    gexit_suite,
    kl_collapse_scan,
    step_convergence,
)
from .infotheory import (
    MiEstimate,
    average_ei,
    binary_entropy,
    binary_entropy_inv,
    combine_posteriors,
    combined_mi_bsc_gauss,
    dg_gap,
    di_gap,
    exact_average_ei,
    gexit_numeric,
    immse_residual,
    info_combining,
    kl_divergence,
    mi_bit_mc,
    mi_exact_joint,
    mmse_bits,
    posterior_shift_sq,
    shift_lower_bound_constant,
)
