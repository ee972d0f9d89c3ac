"""Truncated-Fock-space simulator of the heralded noiseless photon amplifier."""

from .amplifier import (
    AmplifierConfig,
    AmplifierResult,
    HomResult,
    fringe_visibility,
    g_squared,
    gain_ideal,
    herald_efficiency_ideal,
    hom_coincidence,
    run_amplifier,
    visibility_ideal,
)
from .experiments import (
    SweepRow,
    SweepSpec,
    distance_to_loss,
    find_min_t,
    fit_model,
    loss_to_distance,
    sweep,
)
from .fock import (
    Ensemble,
    ModeRegister,
    PureState,
    inner_product,
    make_basis_state,
    merge_and_renormalise,
    photon_number_distribution,
)
from .optics import apply_beam_splitter, apply_loss, apply_phase, hwp_as_beam_splitter
from .sources import DetectorModel, SourceModel, coherent_input_state, input_state, measure_click, tmsv_state

__version__ = "0.1.0"

__all__ = [
    "AmplifierConfig",
    "AmplifierResult",
    "apply_beam_splitter",
    "apply_loss",
    "apply_phase",
    "coherent_input_state",
    "DetectorModel",
    "distance_to_loss",
    "Ensemble",
    "find_min_t",
    "fit_model",
    "fringe_visibility",
    "g_squared",
    "gain_ideal",
    "herald_efficiency_ideal",
    "hom_coincidence",
    "HomResult",
    "hwp_as_beam_splitter",
    "inner_product",
    "input_state",
    "loss_to_distance",
    "make_basis_state",
    "measure_click",
    "merge_and_renormalise",
    "ModeRegister",
    "photon_number_distribution",
    "PureState",
    "run_amplifier",
    "SourceModel",
    "sweep",
    "SweepRow",
    "SweepSpec",
    "tmsv_state",
    "visibility_ideal",
]
