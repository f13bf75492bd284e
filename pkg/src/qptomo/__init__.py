"""Process tomography of Gaussian bosonic channels from coherent probes.

Submodules:

``qform``     Gaussian Q-forms, phase-space integrals, linear solves
``channels``  Choi-form channel models, probe simulation, prediction
``tomo``      reconstruction of the Choi form from probe records
``fock``      truncated Fock-space oracle and finite-dimensional tomography
``cli``       command-line entry point
"""

from .channels import (
    BargmannState,
    GaussianChannelSpec,
    ProbeRecord,
    bs_channel,
    gaussian_channel,
    identity_channel,
    nq_factor,
    phase_channel,
    predict_coherent,
    predict_state_q,
    simulate_probe,
    simulate_probes,
    thermal_noise_channel,
    tmss_output_form,
)
from .errors import *  # noqa: F401,F403
from .qform import GaussianQForm, evaluate_q, gaussian_integral, normalize, solve_linear
from .tomo import (
    DEFAULT_PROBES,
    ChoiReconstruction,
    ProbeSet,
    add_noise,
    build_J,
    build_K,
    closed_form_default,
    probe_design,
    reconstruct,
)

__version__ = "0.1.0"
