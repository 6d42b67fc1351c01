"""Outage analysis for hybrid waveguide-fed (pinching) transmitters and
port-selecting fluid antennas under block-correlated Rician fading.

Three evaluation routes are provided for every scenario: exact quadrature
of the integral-form outage expressions, step-function approximations, and
a reproducible Monte Carlo engine.  See the README and demos/ for usage.
"""

from .model import (
    BlockStructure,
    OutageEstimate,
    ScenarioSingleUser,
    ScenarioTwoUser,
    SystemParams,
    db_to_linear,
    dbm_to_watts,
    gamma_tilde_mu,
    linear_to_db,
    sfa_delta,
    sfa_delta_from_C,
    sfa_delta_mu,
    threshold_C,
    threshold_C_tilde,
    watts_to_dbm,
)
from .channel import (
    ChannelRealization,
    MultiuserLayout,
    RngStream,
    los_gain,
    sample_channel,
    sample_multiuser_channels,
    sample_nlos_block,
)
from .outage_analytic import (
    ANALYTIC_METHODS,
    evaluate_method,
    outage_corollary1_pa_only,
    outage_corollary2_fa_only,
    outage_corollary3_mu_pa_only,
    outage_corollary4_mu_fa_only,
    outage_lemma1_sfa,
    outage_lemma2_fa_only_sfa,
    outage_lemma3_mu_sfa,
    outage_theorem1,
    outage_theorem2_mu,
    two_user_sir_integrand,
    two_user_sir_integrand_by_quadrature,
)
from .outage_mc import (
    McConfig,
    McResult,
    PairedCompare,
    mc_outage_multiuser,
    mc_outage_single,
    mc_paired_compare,
)
from .quad import QuadResult, QuadSpec, integrate_finite, integrate_semiinf_ncchi2, integrate_spatial
from .specfun import bessel_i0_scaled, marcum_q1, ncchi2_cdf, ncchi2_pdf, ncchi2_quantile

__version__ = "0.1.0"
