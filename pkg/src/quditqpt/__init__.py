"""Simulation and standard process tomography of d-dimensional quantum channels."""

from .channels import (
    ChiMatrix,
    KrausChannel,
    apply,
    chi_apply,
    chi_from_kraus,
    completely_depolarizing_channel,
    depolarizing_channel,
    embed_pauli,
    identity_channel,
    kraus_from_chi,
    shift_channel,
    shift_operator,
    uniform_from_level,
    uniform_weights,
    unitary_channel,
)
from .mub import MubSet, build_mubs, mub_projectors, unbiasedness_check
from .states import (
    DensityMatrix,
    PureState,
    density_from_pure,
    fidelity,
    projection_probability,
    purity,
)
from .tomography import (
    MeasurementRecord,
    PreparationBasis,
    TransferMatrix,
    make_physical,
    preparation_basis,
    process_fidelity,
    qst_linear_inversion,
    recover,
    run_qpt,
    simulate_measurements,
    sqpt,
    transfer_from_chi,
)

__version__ = "0.1.0"
