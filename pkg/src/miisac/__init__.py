"""Magneto-inductive link physics, Fisher/CRB analysis, and Monte Carlo MLE validation."""

from .physics import (
    K_BOLTZMANN,
    MEDIUM_PRESETS,
    MU0,
    CoilSpec,
    DomainError,
    LinkConfig,
    Theta,
    alpha,
    channel_constant,
    channel_gain,
    channel_gradient,
    kappa_r,
    noise_variance_mf,
    skin_depth,
    snr_db,
)
from .fisher import (
    CrbReport,
    Fim2,
    SingularFimError,
    crb_report,
    fim,
    fim_from_gradients,
    penalty,
    rho_closed_form,
)
from .estimation import (
    MleConfig,
    MleEstimate,
    PilotBlock,
    matched_filter,
    mle_conditional,
    mle_joint,
    nll,
)
from .montecarlo import TrialSpec, TrialStats, draw_observation, run_batch

__version__ = "0.1.0"
